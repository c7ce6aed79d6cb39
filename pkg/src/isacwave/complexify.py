"""Real-valued stacking of complex matrix algebra.

A complex vector z = a + jb maps to the real vector [a; b]; a complex matrix
Xi = Gamma + j*Theta maps to the real block matrix [[Gamma, -Theta],
[Theta, Gamma]].  Products commute with the stacking,

    stack_matrix(Xi) @ stack_vector(z) == stack_vector(Xi @ z),

and 2-norms are preserved, so quadratic objectives over complex matrices can
be maximized entirely in real arithmetic.  Vectorization is column-major
throughout, which makes vec(H @ X) == kron(X.T, I) @ vec(H) hold exactly.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "stack_vector",
    "unstack_vector",
    "stack_matrix",
    "vec",
    "unvec",
    "channel_to_real",
    "real_to_channel",
    "build_quadmax_instance",
]


def stack_vector(z: np.ndarray) -> np.ndarray:
    """Stack a complex vector into [real parts; imaginary parts]."""
    z = np.asarray(z).ravel()
    return np.concatenate([z.real, z.imag]).astype(float)


def unstack_vector(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`stack_vector`; exact for finite inputs."""
    v = np.asarray(v, dtype=float).ravel()
    if v.size % 2 != 0:
        raise ValueError(f"stacked vector must have even length, got {v.size}")
    m = v.size // 2
    return v[:m] + 1j * v[m:]


def stack_matrix(xi: np.ndarray) -> np.ndarray:
    """Stack a complex m-by-n matrix into the real 2m-by-2n block form."""
    xi = np.atleast_2d(np.asarray(xi))
    re, im = xi.real, xi.imag
    return np.block([[re, -im], [im, re]])


def vec(m: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(m).ravel(order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v).ravel()
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def channel_to_real(h_mat: np.ndarray) -> np.ndarray:
    """Map a K-by-N complex matrix to the stacked real vector of vec(H)."""
    return stack_vector(vec(h_mat))


def real_to_channel(h: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`channel_to_real`."""
    return unvec(unstack_vector(h), rows, cols)


def build_quadmax_instance(
    x_eff: np.ndarray,
    s_mat: np.ndarray,
    h_center: np.ndarray,
    scale: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Build the real-valued data (C, s, h_bar) of the ball-constrained
    quadratic maximization

        max_h ||C h - s||_2^2   s.t.  ||h - h_bar|| <= theta,

    such that for every complex channel H

        ||C @ channel_to_real(H) - s||_2^2 == ||scale * H @ x_eff - s_mat||_F^2.

    ``scale`` is sqrt(L) when ``x_eff`` carries a unit-power factor of the
    waveform and 1 when ``x_eff`` is the waveform itself.
    """
    x_eff = np.atleast_2d(np.asarray(x_eff))
    s_mat = np.atleast_2d(np.asarray(s_mat))
    h_center = np.atleast_2d(np.asarray(h_center))
    k_users, frame = s_mat.shape
    n_tx = x_eff.shape[0]
    if x_eff.shape[1] != frame:
        raise ValueError(
            f"waveform frame length {x_eff.shape[1]} != symbol frame length {frame}"
        )
    if h_center.shape != (k_users, n_tx):
        raise ValueError(
            f"channel center shape {h_center.shape} incompatible with "
            f"({k_users}, {n_tx})"
        )
    # vec(H @ X) = kron(X.T, I_K) vec(H), column-major.
    xi = scale * np.kron(x_eff.T, np.eye(k_users))
    c_mat = stack_matrix(xi)
    s_vec = stack_vector(vec(s_mat))
    h_bar = channel_to_real(h_center)
    return c_mat, s_vec, h_bar
