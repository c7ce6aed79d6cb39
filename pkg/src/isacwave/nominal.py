"""Waveform designs at a known (nominal) channel.

Three design families:

* zero-forcing, which cancels multi-user interference exactly and ignores
  sensing;
* the sensing-centric closed form, which minimizes MUI energy over all
  waveforms realizing an exact spatial covariance X X^H = L R (solved by an
  SVD of F^H H^H S with R = F F^H);
* joint trade-off designs minimizing rho * ||H X - S||_F^2 +
  (1 - rho) * ||X - X_s||_F^2 under a total (TPC) or per-antenna (PAPC)
  power constraint.

The TPC solver treats the sphere-constrained least-squares problem exactly
through its secular equation (including the degenerate case where the
right-hand side is orthogonal to the bottom eigenspace); the PAPC solver is
a monotone projected-gradient scheme, exact per-row feasibility at every
iterate.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import brentq

from isacwave.model import steering_vector

__all__ = [
    "factorize_covariance",
    "zero_forcing",
    "sensing_centric_optimal",
    "sensing_closed_form",
    "synth_sensing_waveform",
    "synth_covariance",
    "joint_objective",
    "joint_tpc",
    "joint_papc",
    "papc_project",
]


def factorize_covariance(r_mat: np.ndarray) -> np.ndarray:
    """Lower-triangular F with F F^H = R; fails if R is not positive definite."""
    r_mat = np.atleast_2d(np.asarray(r_mat))
    if np.linalg.norm(r_mat - r_mat.conj().T) > 1e-12 * max(np.linalg.norm(r_mat), 1.0):
        raise ValueError("covariance matrix is not Hermitian")
    try:
        return np.linalg.cholesky(r_mat)
    except np.linalg.LinAlgError as exc:
        eig_min = float(np.min(np.linalg.eigvalsh(r_mat)))
        raise ValueError(
            f"covariance matrix is not positive definite (min eigenvalue {eig_min:.3e})"
        ) from exc


def zero_forcing(h_mat: np.ndarray, s_mat: np.ndarray) -> np.ndarray:
    """Interference-cancelling waveform H^H (H H^H)^{-1} S.

    Falls back to the pseudo-inverse with a warning when H H^H is (nearly)
    singular.
    """
    h_mat = np.atleast_2d(np.asarray(h_mat))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    gram = h_mat @ h_mat.conj().T
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        warnings.warn(
            "channel Gram matrix is ill-conditioned; using pseudo-inverse",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.linalg.pinv(h_mat) @ s_mat
    return h_mat.conj().T @ np.linalg.solve(gram, s_mat)


def sensing_closed_form(
    h_mat: np.ndarray, s_mat: np.ndarray, f_mat: np.ndarray, frame: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Minimize ||H X - S||_F^2 over X X^H = L R, R = F F^H.

    Returns (X, A) with X = sqrt(L) F A and A = U I_{NxL} V^H built from the
    SVD U Sigma V^H of F^H H^H S.  A has orthonormal rows, so the covariance
    constraint holds by construction.
    """
    h_mat = np.atleast_2d(np.asarray(h_mat))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    f_mat = np.atleast_2d(np.asarray(f_mat))
    if frame is None:
        frame = s_mat.shape[1]
    n_tx = f_mat.shape[0]
    target = f_mat.conj().T @ h_mat.conj().T @ s_mat  # N x L
    u, _, vh = np.linalg.svd(target, full_matrices=True)
    a_mat = u @ vh[:n_tx, :]
    return np.sqrt(frame) * f_mat @ a_mat, a_mat


def sensing_centric_optimal(
    h_mat: np.ndarray, s_mat: np.ndarray, f_mat: np.ndarray, frame: int | None = None
) -> np.ndarray:
    """Covariance-feasible waveform with globally minimal MUI energy at H."""
    return sensing_closed_form(h_mat, s_mat, f_mat, frame)[0]


def synth_sensing_waveform(
    r_mat: np.ndarray, frame: int, seed: int | None = None
) -> np.ndarray:
    """A waveform X_s with X_s X_s^H = L R.

    ``seed=None`` gives the canonical choice sqrt(L) * F @ [I_N, 0]; an
    integer seed draws a random semi-unitary row factor instead.
    """
    f_mat = factorize_covariance(r_mat)
    n_tx = f_mat.shape[0]
    if frame < n_tx:
        raise ValueError(f"frame length {frame} shorter than antenna count {n_tx}")
    if seed is None:
        q_rows = np.eye(n_tx, frame, dtype=complex)
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((frame, n_tx)) + 1j * rng.standard_normal((frame, n_tx))
        q, _ = np.linalg.qr(g)
        q_rows = q.conj().T
    return np.sqrt(frame) * f_mat @ q_rows


def synth_covariance(
    target_azimuths_deg,
    beam_weight: float,
    n_tx: int,
    p_t: float,
) -> np.ndarray:
    """Positive-definite transmit covariance steering beams at given azimuths.

    Mixes rank-one beams a(phi) a(phi)^H / N with an isotropic floor
    (1 - beam_weight) * I / N and rescales so the trace equals ``p_t``.
    ``beam_weight`` must lie in [0, 1) to keep the matrix positive definite.
    """
    if not 0.0 <= beam_weight < 1.0:
        raise ValueError(f"beam_weight must lie in [0, 1), got {beam_weight}")
    azimuths = np.atleast_1d(np.asarray(target_azimuths_deg, dtype=float))
    r_mat = (1.0 - beam_weight) / n_tx * np.eye(n_tx, dtype=complex)
    for az in azimuths:
        a = steering_vector(n_tx, float(az))
        r_mat += beam_weight / n_tx * np.outer(a, a.conj())
    r_mat = 0.5 * (r_mat + r_mat.conj().T)
    return p_t / np.real(np.trace(r_mat)) * r_mat


def joint_objective(
    h_mat: np.ndarray,
    s_mat: np.ndarray,
    x_s: np.ndarray,
    rho: float,
    x_mat: np.ndarray,
) -> float:
    """rho * ||H X - S||_F^2 + (1 - rho) * ||X - X_s||_F^2."""
    comm = float(np.sum(np.abs(h_mat @ x_mat - s_mat) ** 2))
    sense = float(np.sum(np.abs(x_mat - x_s) ** 2))
    return rho * comm + (1.0 - rho) * sense


def _joint_normal_matrices(h_mat, s_mat, x_s, rho):
    h_mat = np.atleast_2d(np.asarray(h_mat))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    x_s = np.atleast_2d(np.asarray(x_s))
    n_tx = h_mat.shape[1]
    a_mat = rho * h_mat.conj().T @ h_mat + (1.0 - rho) * np.eye(n_tx)
    b_mat = rho * h_mat.conj().T @ s_mat + (1.0 - rho) * x_s
    return a_mat, b_mat


def joint_tpc(
    h_mat: np.ndarray,
    s_mat: np.ndarray,
    x_s: np.ndarray,
    rho: float,
    p_t: float,
    frame: int | None = None,
) -> np.ndarray:
    """Globally minimize the joint objective subject to ||X||_F^2 = L * P_T.

    The stationarity system (rho H^H H + (1 - rho) I + lam I) X = rho H^H S +
    (1 - rho) X_s is solved along the eigenbasis of the normal matrix; the
    scalar lam is the unique root of the monotone power equation
    ||X(lam)||_F^2 = L * P_T on (-eig_min, inf).  When the right-hand side
    has no component on the bottom eigenspace and the limit power falls short
    of the target, the missing power is supplied along a bottom eigenvector.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    s_mat = np.atleast_2d(np.asarray(s_mat))
    if frame is None:
        frame = s_mat.shape[1]
    target = frame * p_t
    a_mat, b_mat = _joint_normal_matrices(h_mat, s_mat, x_s, rho)
    eig, basis = np.linalg.eigh(a_mat)
    b_rot = basis.conj().T @ b_mat
    coeff = np.sum(np.abs(b_rot) ** 2, axis=1)  # power per eigendirection

    def power(lam: float) -> float:
        return float(np.sum(coeff / (eig + lam) ** 2))

    def x_of(lam: float) -> np.ndarray:
        return basis @ (b_rot / (eig + lam)[:, None])

    lam_floor = -float(eig[0])
    scale = max(1.0, float(eig[-1]))
    bottom = eig - eig[0] <= 1e-12 * scale
    bottom_power = float(np.sum(coeff[bottom]))
    if bottom_power <= 1e-24 * max(np.sum(coeff), 1.0):
        # right-hand side orthogonal to the bottom eigenspace
        rest = ~bottom
        limit = float(np.sum(coeff[rest] / (eig[rest] - eig[0]) ** 2)) if rest.any() else 0.0
        if limit <= target:
            x_base = basis[:, rest] @ (b_rot[rest] / (eig[rest] + lam_floor)[:, None]) \
                if rest.any() else np.zeros_like(b_mat)
            tau = np.sqrt(target - limit)
            bump = np.zeros_like(b_mat)
            bump[:, 0] = tau * basis[:, int(np.argmax(bottom))]
            return x_base + bump

    span = max(scale, float(np.sqrt(np.sum(coeff) / target)))
    offset = 1e-14 * span
    for _ in range(600):
        lo = lam_floor + offset
        if power(lo) >= target:
            break
        offset /= 4.0
    else:
        raise RuntimeError(
            f"power equation lower bracket failed near {lam_floor:.6e}: "
            f"power = {power(lam_floor + offset):.6e} < target {target:.6e}"
        )
    if power(lo) == target:
        return x_of(lo)
    for _ in range(600):
        hi = lam_floor + span
        if power(hi) <= target:
            break
        span *= 2.0
    else:
        raise RuntimeError(
            f"power equation upper bracket failed at {lam_floor + span:.6e}: "
            f"power = {power(lam_floor + span):.6e} > target {target:.6e}"
        )
    if power(hi) == target:
        return x_of(hi)
    lam = brentq(lambda t: power(t) - target, lo, hi, xtol=1e-15, rtol=8.9e-16)
    # Newton polish on the exact secular function.
    for _ in range(4):
        p_val = power(lam)
        dp = -2.0 * float(np.sum(coeff / (eig + lam) ** 3))
        if dp == 0.0:
            break
        step = (p_val - target) / dp
        if lam - step <= lam_floor:
            break
        lam -= step
    return x_of(lam)


def papc_project(x_mat: np.ndarray, p_t: float) -> np.ndarray:
    """Rescale every row of X to the per-antenna power L * P_T / N."""
    x_mat = np.atleast_2d(np.asarray(x_mat, dtype=complex))
    n_tx, frame = x_mat.shape
    row_norm_target = np.sqrt(frame * p_t / n_tx)
    out = x_mat.copy()
    norms = np.linalg.norm(out, axis=1)
    for n in range(n_tx):
        if norms[n] < 1e-300:
            out[n] = 0.0
            out[n, 0] = row_norm_target  # arbitrary point on the row sphere
        else:
            out[n] *= row_norm_target / norms[n]
    return out


def joint_papc(
    h_mat: np.ndarray,
    s_mat: np.ndarray,
    x_s: np.ndarray,
    rho: float,
    p_t: float,
    frame: int | None = None,
    max_iter: int = 2000,
    tol: float = 1e-13,
    history: list | None = None,
) -> tuple[np.ndarray, bool]:
    """Minimize the joint objective under the per-antenna power constraint.

    Projected gradient with a fixed step below the inverse gradient-Lipschitz
    constant, so the objective never increases (up to evaluation round-off);
    every iterate is feasible.  Starts from the better of the row-projected
    unconstrained minimizer and the row-projected sensing anchor.  Stops when
    the iterate movement drops below ``tol`` relative to the feasible
    waveform norm sqrt(L * P_T); movement tracks the distance to the fixed
    point, which objective stall cannot resolve once the quadratic flattens
    below round-off.  Returns (X, converged); when the iteration cap is hit
    the best iterate so far is returned with ``converged=False``.  Objective
    values are appended to ``history`` when a list is passed.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    h_mat = np.atleast_2d(np.asarray(h_mat))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    x_s = np.atleast_2d(np.asarray(x_s))
    if frame is None:
        frame = s_mat.shape[1]
    a_mat, b_mat = _joint_normal_matrices(h_mat, s_mat, x_s, rho)
    if rho == 1.0:
        x_free = np.linalg.lstsq(a_mat, b_mat, rcond=None)[0]
    else:
        x_free = np.linalg.solve(a_mat, b_mat)

    def objective(x):
        return joint_objective(h_mat, s_mat, x_s, rho, x)

    candidates = [papc_project(x_free, p_t), papc_project(x_s, p_t)]
    x = min(candidates, key=objective)
    obj = objective(x)
    if history is not None:
        history.append(obj)

    grad_lipschitz = 2.0 * (rho * np.linalg.norm(h_mat, 2) ** 2 + (1.0 - rho))
    step = 0.99 / grad_lipschitz
    move_floor = tol * np.sqrt(frame * p_t)
    noise_floor = 1e-11  # objective evaluation round-off allowance
    converged = False
    for _ in range(max_iter):
        grad = 2.0 * rho * h_mat.conj().T @ (h_mat @ x - s_mat) \
            + 2.0 * (1.0 - rho) * (x - x_s)
        x_next = papc_project(x - step * grad, p_t)
        obj_next = objective(x_next)
        if obj_next > obj + noise_floor * max(1.0, obj):
            converged = True  # descent exhausted within round-off
            break
        move = float(np.linalg.norm(x_next - x))
        x, obj = x_next, min(obj, obj_next)
        if history is not None:
            history.append(obj)
        if move <= move_floor:
            converged = True
            break
    return x, converged
