"""System model: configuration, communication metrics, beampattern, power checks.

Conventions: the channel H is K-by-N (one row per user), the waveform X is
N-by-L (one column per snapshot), the symbol matrix S is K-by-L.  Powers are
in watts.  Multi-user interference (MUI) energy is ||H X - S||_F^2; the
per-user SINR divides fixed symbol power by per-user MUI power plus noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "UncertaintySet",
    "membership",
    "qpsk_constellation",
    "mui_energy",
    "sinr_per_user",
    "sinr_all",
    "aasr",
    "steering_vector",
    "beampattern",
    "check_power",
    "dbm_to_watts",
]


def dbm_to_watts(power_dbm: float) -> float:
    """34 dBm -> ~2.5 W."""
    return 10.0 ** ((power_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Static system parameters.

    K downlink single-antenna users, N transmit antennas (half-wavelength
    ULA), frame length L, total transmit power P_T and noise power N0, both
    in watts.  The designs assume 1 <= K <= N <= L.
    """

    K: int
    N: int
    L: int
    P_T: float
    N0: float
    carrier_hz: float = 5.9e9  # informational only

    def __post_init__(self):
        if not (1 <= self.K <= self.N <= self.L):
            raise ValueError(
                f"need 1 <= K <= N <= L, got K={self.K}, N={self.N}, L={self.L}"
            )
        if self.P_T <= 0:
            raise ValueError(f"P_T must be positive, got {self.P_T}")
        if self.N0 <= 0:
            raise ValueError(f"N0 must be positive, got {self.N0}")


@dataclass(frozen=True)
class UncertaintySet:
    """Norm ball of channels around a nominal estimate.

    ``radius`` is the trust level; ``budget`` in [0, 1] shrinks the effective
    radius to budget * radius.  ``norm`` is "fro" (Frobenius) or "inf"
    (entry-wise maximum over the stacked real/imaginary parts).
    """

    center: np.ndarray
    radius: float
    budget: float = 1.0
    norm: str = "fro"

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_2d(np.asarray(self.center)))
        if self.radius < 0:
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        if not 0.0 <= self.budget <= 1.0:
            raise ValueError(f"budget must lie in [0, 1], got {self.budget}")
        if self.norm not in ("fro", "inf"):
            raise ValueError(f"norm must be 'fro' or 'inf', got {self.norm!r}")

    @property
    def effective_radius(self) -> float:
        return self.budget * self.radius

    def distance(self, h_mat: np.ndarray) -> float:
        delta = np.asarray(h_mat) - self.center
        if self.norm == "fro":
            return float(np.linalg.norm(delta))
        return float(max(np.max(np.abs(delta.real)), np.max(np.abs(delta.imag))))

    def contains(self, h_mat: np.ndarray, rtol: float = 0.0) -> bool:
        return self.distance(h_mat) <= self.effective_radius * (1.0 + rtol)


def membership(uset: UncertaintySet, h_mat: np.ndarray, rtol: float = 0.0) -> bool:
    """True iff ``h_mat`` lies in the (budget-shrunken) uncertainty set."""
    return uset.contains(h_mat, rtol=rtol)


def qpsk_constellation(
    k_users: int,
    frame: int,
    rng: np.random.Generator,
    power: float = 1.0,
) -> np.ndarray:
    """Random QPSK symbol matrix with per-entry power ``power``.

    Entries are drawn uniformly from {+-1 +- 1j} / sqrt(2), scaled by
    sqrt(power).
    """
    re = rng.integers(0, 2, size=(k_users, frame)) * 2 - 1
    im = rng.integers(0, 2, size=(k_users, frame)) * 2 - 1
    return math.sqrt(power / 2.0) * (re + 1j * im)


def _check_dims(h_mat: np.ndarray, x_mat: np.ndarray, s_mat: np.ndarray) -> None:
    if h_mat.shape[1] != x_mat.shape[0] or h_mat.shape[0] != s_mat.shape[0] \
            or x_mat.shape[1] != s_mat.shape[1]:
        raise ValueError(
            f"inconsistent shapes: H {h_mat.shape}, X {x_mat.shape}, S {s_mat.shape}"
        )


def mui_energy(h_mat: np.ndarray, x_mat: np.ndarray, s_mat: np.ndarray) -> float:
    """Total multi-user interference energy ||H X - S||_F^2."""
    h_mat, x_mat, s_mat = map(np.atleast_2d, (h_mat, x_mat, s_mat))
    _check_dims(h_mat, x_mat, s_mat)
    err = h_mat @ x_mat - s_mat
    return float(np.sum(np.abs(err) ** 2))


def sinr_all(
    h_mat: np.ndarray, x_mat: np.ndarray, s_mat: np.ndarray, n0: float
) -> np.ndarray:
    """Per-user SINR vector; the denominator is never below ``n0``."""
    h_mat, x_mat, s_mat = map(np.atleast_2d, (h_mat, x_mat, s_mat))
    _check_dims(h_mat, x_mat, s_mat)
    frame = s_mat.shape[1]
    signal = np.sum(np.abs(s_mat) ** 2, axis=1) / frame
    err = h_mat @ x_mat - s_mat
    interference = np.sum(np.abs(err) ** 2, axis=1) / frame
    return signal / (interference + n0)


def sinr_per_user(
    h_mat: np.ndarray,
    x_mat: np.ndarray,
    s_mat: np.ndarray,
    n0: float,
    user: int,
) -> float:
    """SINR of one user (0-based index)."""
    return float(sinr_all(h_mat, x_mat, s_mat, n0)[user])


def aasr(h_mat: np.ndarray, x_mat: np.ndarray, s_mat: np.ndarray, n0: float) -> float:
    """Average achievable sum-rate in bps/Hz/user."""
    return float(np.mean(np.log2(1.0 + sinr_all(h_mat, x_mat, s_mat, n0))))


def steering_vector(n_tx: int, azimuth_deg: float | np.ndarray) -> np.ndarray:
    """Half-wavelength ULA steering vector(s); shape (n_tx,) or (n_tx, n_angles)."""
    az = np.deg2rad(np.asarray(azimuth_deg, dtype=float))
    n = np.arange(n_tx)
    phase = np.pi * np.outer(n, np.sin(az))
    a = np.exp(1j * phase)
    return a[:, 0] if np.isscalar(azimuth_deg) or np.ndim(azimuth_deg) == 0 else a


def beampattern(r_mat: np.ndarray, angles_deg) -> np.ndarray:
    """Transmit gain a(phi)^H R a(phi) on a grid of azimuths (degrees)."""
    r_mat = np.atleast_2d(np.asarray(r_mat))
    a = steering_vector(r_mat.shape[0], np.atleast_1d(np.asarray(angles_deg)))
    return np.real(np.einsum("ij,jk,ki->i", a.conj().T, r_mat, a))


def check_power(
    x_mat: np.ndarray,
    mode: str,
    tol: float,
    p_t: float | None = None,
    r_mat: np.ndarray | None = None,
) -> tuple[bool, float]:
    """Check a power-feasibility constraint; returns (ok, residual).

    Modes: "tpc" (total power ||X||_F^2 / L == P_T, absolute residual),
    "papc" (every row of X carries L * P_T / N, worst-row absolute residual)
    and "covariance" (X X^H == L * R, relative Frobenius residual).
    """
    x_mat = np.atleast_2d(np.asarray(x_mat))
    n_tx, frame = x_mat.shape
    mode = mode.lower()
    if mode == "tpc":
        if p_t is None:
            raise ValueError("tpc check requires p_t")
        residual = abs(float(np.sum(np.abs(x_mat) ** 2)) / frame - p_t)
    elif mode == "papc":
        if p_t is None:
            raise ValueError("papc check requires p_t")
        row_power = np.sum(np.abs(x_mat) ** 2, axis=1)
        residual = float(np.max(np.abs(row_power - frame * p_t / n_tx)))
    elif mode == "covariance":
        if r_mat is None:
            raise ValueError("covariance check requires r_mat")
        target = frame * np.asarray(r_mat)
        residual = float(
            np.linalg.norm(x_mat @ x_mat.conj().T - target) / np.linalg.norm(target)
        )
    else:
        raise ValueError(f"unknown power mode {mode!r}")
    return residual <= tol, residual
