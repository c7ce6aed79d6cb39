"""Remedies that pin the robust waveform near the nominal one.

After the worst-case channel H* has been found by maximizing the convex
upper cost bound, the waveform attached to H* must stay close to the nominal
waveform for the bound to remain meaningful.  Two constructions do that:

* an alternating scheme over (U, Sigma, V) minimizing

      alpha * ||U Sigma V^H - F^H H*^H S||_F^2 + ||U I_{NxL} V^H - A_bar||_F^2

  under unitary U, V and diagonal nonnegative real Sigma.  Each block update
  is closed-form (two orthogonal Procrustes problems and one clipping
  projection), so the objective never increases;

* a stacked closed form: minimize alpha * ||H* X - S||_F^2 + ||X - X_bar||^2
  over the exact-covariance set by appending an identity row block to H* and
  the nominal waveform to S, then reusing the sensing-centric SVD solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from isacwave.nominal import sensing_closed_form

__all__ = [
    "procrustes",
    "project_sigma",
    "remedy_svd_match",
    "remedy_stacked",
    "RemedyTrace",
]


def procrustes(a_mat: np.ndarray, b_mat: np.ndarray) -> np.ndarray:
    """Minimize ||U A - B||_F over semi-unitary U (U U^H = I).

    A is p-by-q, B is r-by-q with r <= p; the optimum is U = U1 V1^H from the
    SVD of B A^H.
    """
    a_mat = np.atleast_2d(np.asarray(a_mat))
    b_mat = np.atleast_2d(np.asarray(b_mat))
    if a_mat.shape[1] != b_mat.shape[1]:
        raise ValueError(f"column counts differ: A {a_mat.shape}, B {b_mat.shape}")
    if b_mat.shape[0] > a_mat.shape[0]:
        raise ValueError("no semi-unitary U exists with more rows than columns")
    u1, _, v1h = np.linalg.svd(b_mat @ a_mat.conj().T, full_matrices=True)
    r = b_mat.shape[0]
    return u1 @ v1h[:r, :] if r < a_mat.shape[0] else u1 @ v1h


def project_sigma(m_mat: np.ndarray, strategy: str = "clip") -> np.ndarray:
    """Project onto the diagonal, real, nonnegative matrices of the same shape.

    ``clip`` keeps max(0, real(diagonal)) and zeroes the rest (the nearest
    point in Frobenius norm); ``svd`` places the singular values of the
    argument on the diagonal instead.
    """
    m_mat = np.atleast_2d(np.asarray(m_mat))
    rows, cols = m_mat.shape
    out = np.zeros((rows, cols))
    if strategy == "clip":
        d = min(rows, cols)
        out[np.arange(d), np.arange(d)] = np.maximum(0.0, np.real(np.diagonal(m_mat)))
    elif strategy == "svd":
        sv = np.linalg.svd(m_mat, compute_uv=False)
        out[np.arange(sv.size), np.arange(sv.size)] = sv
    else:
        raise ValueError(f"unknown projection strategy {strategy!r}")
    return out


@dataclass
class RemedyTrace:
    """Objective values per sweep (non-increasing) and the final residuals."""

    objectives: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    svd_residual: float = np.nan  # ||U Sigma V^H - F^H H*^H S||_F at exit


def remedy_svd_match(
    h_worst: np.ndarray,
    f_mat: np.ndarray,
    s_mat: np.ndarray,
    a_bar: np.ndarray,
    alpha: float,
    max_iter: int = 200,
    tol: float = 1e-10,
    sigma_strategy: str = "clip",
) -> tuple[np.ndarray, np.ndarray, np.ndarray, RemedyTrace]:
    """Alternating closed-form minimization over (U, Sigma, V).

    Initialized at an SVD of F^H H*^H S, where the first objective term is
    zero.  Returns (U, Sigma, V) and a trace; ``converged`` means the
    objective stalled below ``tol`` before the iteration cap.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    f_mat = np.atleast_2d(np.asarray(f_mat))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    a_bar = np.atleast_2d(np.asarray(a_bar))
    n_tx, frame = a_bar.shape
    target = f_mat.conj().T @ np.atleast_2d(np.asarray(h_worst)).conj().T @ s_mat
    eye_nl = np.eye(n_tx, frame)
    sqrt_a = np.sqrt(alpha)

    u, sv, vh = np.linalg.svd(target, full_matrices=True)
    v = vh.conj().T
    sigma = np.zeros((n_tx, frame))
    sigma[np.arange(sv.size), np.arange(sv.size)] = sv

    def objective(u_mat, sig, v_mat):
        fit = u_mat @ sig @ v_mat.conj().T - target
        anchor = u_mat @ eye_nl @ v_mat.conj().T - a_bar
        return alpha * float(np.sum(np.abs(fit) ** 2)) \
            + float(np.sum(np.abs(anchor) ** 2))

    trace = RemedyTrace()
    trace.objectives.append(objective(u, sigma, v))
    for k in range(1, max_iter + 1):
        # U-block: stack both terms into one Procrustes problem.
        a1 = np.hstack([eye_nl @ v.conj().T, sqrt_a * sigma @ v.conj().T])
        b1 = np.hstack([a_bar, sqrt_a * target])
        u = procrustes(a1, b1)
        # V-block.
        a2 = np.hstack([eye_nl.conj().T @ u.conj().T, sqrt_a * sigma.conj().T @ u.conj().T])
        b2 = np.hstack([a_bar.conj().T, sqrt_a * s_mat.conj().T @ np.atleast_2d(np.asarray(h_worst)) @ f_mat])
        v = procrustes(a2, b2)
        # Sigma-block: projected least squares.
        sigma = project_sigma(u.conj().T @ target @ v, strategy=sigma_strategy)
        trace.objectives.append(objective(u, sigma, v))
        trace.iterations = k
        if abs(trace.objectives[-2] - trace.objectives[-1]) <= tol:
            trace.converged = True
            break
    trace.svd_residual = float(
        np.linalg.norm(u @ sigma @ v.conj().T - target)
    )
    return u, sigma, v, trace


def remedy_stacked(
    h_worst: np.ndarray,
    x_bar: np.ndarray,
    f_mat: np.ndarray,
    s_mat: np.ndarray,
    alpha: float,
    frame: int | None = None,
) -> np.ndarray:
    """Closed-form covariance-feasible remedy waveform.

    Minimizes alpha * ||H* X - S||_F^2 + ||X - X_bar||_F^2 over
    X X^H = L * F F^H by stacking [sqrt(alpha) H*; I_N] against
    [sqrt(alpha) S; X_bar] and applying the sensing-centric closed form.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    h_worst = np.atleast_2d(np.asarray(h_worst))
    x_bar = np.atleast_2d(np.asarray(x_bar))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    n_tx = x_bar.shape[0]
    h_stack = np.vstack([np.sqrt(alpha) * h_worst, np.eye(n_tx)])
    s_stack = np.vstack([np.sqrt(alpha) * s_mat, x_bar])
    return sensing_closed_form(h_stack, s_stack, f_mat, frame)[0]
