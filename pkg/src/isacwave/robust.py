"""Min-max robust waveform design and its diagnostics.

Every design runs the same two-stage scheme: first the worst-case channel H*
is obtained by globally maximizing the convex quadratic upper bound
||H X_bar - S||_F^2 of the optimal cost over the channel uncertainty ball
(the bound is tight at the ball center, where X_bar is optimal); then a
remedy keeps the robust waveform X* close to the nominal X_bar so that the
pair (H*, X*) stays a conservative performance certificate.

Design variants:

* sensing-centric with exact covariance constraint, remedy either by
  alternating SVD matching ("svd") or by the stacked closed form ("stacked");
* joint communication/sensing trade-off under a total ("tpc") or per-antenna
  ("papc") power constraint, remedied through the same power-constrained
  solver on a stacked channel with the nominal waveform as anchor.

The report attached to each result carries the analytic Lipschitz constant
of the optimal cost in the channel, the bound values at the ball center and
the optimality gap ||H* X_bar - S||^2 - ||H* X* - S||^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from isacwave import complexify, quadmax
from isacwave.model import SystemConfig, UncertaintySet, mui_energy
from isacwave.nominal import (
    factorize_covariance,
    joint_papc,
    joint_tpc,
    sensing_closed_form,
)
from isacwave.remedy import remedy_stacked, remedy_svd_match

__all__ = [
    "BoundReport",
    "DesignResult",
    "norm_equivalence_constant",
    "mui_lipschitz",
    "joint_lipschitz",
    "cost_bounds",
    "worst_case_channel",
    "design_robust_sensing",
    "design_robust_joint",
    "gap_diagnostic",
]

SENSING_REMEDIES = ("svd", "stacked")
JOINT_CONSTRAINTS = ("tpc", "papc")


@dataclass
class BoundReport:
    """Bound and convergence diagnostics of one robust design."""

    lipschitz: float
    f_upper_at_center: float
    f_at_center: float
    gap: float
    quadmax_iterations: int
    remedy_iterations: int
    nominal_distance: float  # ||X* - X_bar||_F


@dataclass
class DesignResult:
    """Nominal/robust waveform pair with the worst-case channel."""

    x_nominal: np.ndarray
    x_robust: np.ndarray
    h_worst: np.ndarray
    cost_nominal: float
    cost_robust: float
    report: BoundReport
    feasibility: str  # "covariance" | "tpc" | "papc"
    theta: float


def norm_equivalence_constant(cfg: SystemConfig, norm: str) -> float:
    """Smallest B with ||H||_F <= B * ||H|| for the given uncertainty norm."""
    if norm == "fro":
        return 1.0
    if norm == "inf":
        return math.sqrt(2 * cfg.K * cfg.N)
    raise ValueError(f"unknown norm {norm!r}")


def mui_lipschitz(
    cfg: SystemConfig, h_bar: np.ndarray, s_mat: np.ndarray,
    theta: float, norm: str = "fro",
) -> float:
    """Lipschitz constant of the optimal sensing-centric cost in the channel.

    2 B L P_T (||H_bar||_F + B theta) + 2 B sqrt(L P_T) ||S||_F, with B the
    norm-equivalence constant of the uncertainty norm (1 for Frobenius).
    """
    b = norm_equivalence_constant(cfg, norm)
    h_norm = float(np.linalg.norm(h_bar))
    s_norm = float(np.linalg.norm(s_mat))
    lp = cfg.L * cfg.P_T
    return 2.0 * b * lp * (h_norm + b * theta) + 2.0 * b * math.sqrt(lp) * s_norm


def joint_lipschitz(
    cfg: SystemConfig, h_bar: np.ndarray, s_mat: np.ndarray,
    theta: float, rho: float, norm: str = "fro",
) -> float:
    """Lipschitz constant of the joint trade-off cost: rho times the
    sensing-centric constant."""
    return rho * mui_lipschitz(cfg, h_bar, s_mat, theta, norm)


def cost_bounds(
    h_mat: np.ndarray,
    x_bar: np.ndarray,
    s_mat: np.ndarray,
    r_mat: np.ndarray,
    frame: int,
) -> tuple[float, float]:
    """(upper, lower) envelope of the optimal covariance-constrained cost
    min_{X X^H = L R} ||H X - S||_F^2 at an arbitrary channel H.

    The upper bound plugs in the nominal waveform; the lower bound is the
    reverse triangle inequality (||H X||_F is constant on the feasible set).
    """
    upper = mui_energy(h_mat, x_bar, s_mat)
    h_mat = np.atleast_2d(np.asarray(h_mat))
    power = frame * float(np.real(np.trace(h_mat.conj().T @ h_mat @ r_mat)))
    lower = (math.sqrt(max(power, 0.0)) - float(np.linalg.norm(s_mat))) ** 2
    return upper, lower


def worst_case_channel(
    x_eff: np.ndarray,
    s_mat: np.ndarray,
    h_bar: np.ndarray,
    theta: float,
    scale: float,
    norm: str = "fro",
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> tuple[np.ndarray, quadmax.QuadMaxTrace]:
    """Channel in the ball maximizing ||scale * H x_eff - S||_F^2.

    The complex problem is stacked into real coordinates and handed to the
    ball-constrained quadratic maximizer; the returned channel is globally
    worst for the quadratic upper bound.
    """
    c_mat, s_vec, h_center = complexify.build_quadmax_instance(x_eff, s_mat, h_bar, scale)
    problem = quadmax.QuadMaxProblem(
        c_mat, s_vec, h_center, theta,
        norm="two" if norm == "fro" else "inf",
    )
    h_opt, trace = quadmax.solve(problem, max_iter=max_iter, tol=tol, seed=seed)
    k_users, n_tx = np.atleast_2d(np.asarray(h_bar)).shape
    return complexify.real_to_channel(h_opt, k_users, n_tx), trace


def design_robust_sensing(
    cfg: SystemConfig,
    h_bar: np.ndarray,
    s_mat: np.ndarray,
    r_mat: np.ndarray,
    theta: float,
    remedy: str = "svd",
    norm: str = "fro",
    alpha: float = 1e4,
    budget: float = 1.0,
    seed: int = 0,
) -> DesignResult:
    """Robust sensing-centric design: exact covariance at every output."""
    if remedy not in SENSING_REMEDIES:
        raise ValueError(f"remedy must be one of {SENSING_REMEDIES}, got {remedy!r}")
    f_mat = factorize_covariance(r_mat)
    x_bar, a_bar = sensing_closed_form(h_bar, s_mat, f_mat, cfg.L)
    theta_eff = budget * theta

    h_worst, qm_trace = worst_case_channel(
        f_mat @ a_bar, s_mat, h_bar, theta_eff, math.sqrt(cfg.L),
        norm=norm, seed=seed,
    )

    remedy_iters = 0
    if np.array_equal(h_worst, np.atleast_2d(np.asarray(h_bar))):
        # degenerate ball: the nominal waveform minimizes both remedy terms
        # simultaneously, so it is the unique remedy solution
        x_star = x_bar.copy()
    elif remedy == "svd":
        u, _, v, rem_trace = remedy_svd_match(h_worst, f_mat, s_mat, a_bar, alpha)
        remedy_iters = rem_trace.iterations
        eye_nl = np.eye(cfg.N, cfg.L)
        x_star = math.sqrt(cfg.L) * f_mat @ (u @ eye_nl @ v.conj().T)
    else:
        x_star = remedy_stacked(h_worst, x_bar, f_mat, s_mat, alpha, cfg.L)
        remedy_iters = 1

    cost_nominal = mui_energy(h_bar, x_bar, s_mat)
    cost_robust = mui_energy(h_worst, x_star, s_mat)
    report = BoundReport(
        lipschitz=mui_lipschitz(cfg, h_bar, s_mat, theta_eff, norm),
        f_upper_at_center=cost_nominal,
        f_at_center=cost_nominal,
        gap=gap_diagnostic(h_worst, x_bar, x_star, s_mat),
        quadmax_iterations=qm_trace.iterations,
        remedy_iterations=remedy_iters,
        nominal_distance=float(np.linalg.norm(x_star - x_bar)),
    )
    return DesignResult(
        x_nominal=x_bar, x_robust=x_star, h_worst=h_worst,
        cost_nominal=cost_nominal, cost_robust=cost_robust,
        report=report, feasibility="covariance", theta=theta,
    )


def design_robust_joint(
    cfg: SystemConfig,
    h_bar: np.ndarray,
    s_mat: np.ndarray,
    x_s: np.ndarray,
    rho: float,
    theta: float,
    constraint: str = "tpc",
    norm: str = "fro",
    alpha: float = 1e4,
    budget: float = 1.0,
    seed: int = 0,
) -> DesignResult:
    """Robust joint trade-off design under a TPC or PAPC power constraint.

    The remedy re-solves the power-constrained trade-off on the stacked
    channel [sqrt(rho) H*; sqrt(1 - rho) I] with the nominal waveform as the
    proximity anchor, weighted alpha/(alpha + 1) versus 1/(alpha + 1).
    """
    if constraint not in JOINT_CONSTRAINTS:
        raise ValueError(
            f"constraint must be one of {JOINT_CONSTRAINTS}, got {constraint!r}"
        )
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    theta_eff = budget * theta

    def solve_tradeoff(h, s, anchor, mix):
        if constraint == "tpc":
            return joint_tpc(h, s, anchor, mix, cfg.P_T, cfg.L)
        x, _ = joint_papc(h, s, anchor, mix, cfg.P_T, cfg.L)
        return x

    x_bar = solve_tradeoff(h_bar, s_mat, x_s, rho)
    h_worst, qm_trace = worst_case_channel(
        x_bar, s_mat, h_bar, theta_eff, 1.0, norm=norm, seed=seed,
    )

    if np.array_equal(h_worst, np.atleast_2d(np.asarray(h_bar))):
        # degenerate ball: the nominal design minimizes the anchored remedy
        x_star = x_bar.copy()
    else:
        h_stack = np.vstack([
            math.sqrt(rho) * np.atleast_2d(np.asarray(h_worst)),
            math.sqrt(1.0 - rho) * np.eye(cfg.N),
        ])
        s_stack = np.vstack([
            math.sqrt(rho) * np.atleast_2d(np.asarray(s_mat)),
            math.sqrt(1.0 - rho) * np.atleast_2d(np.asarray(x_s)),
        ])
        x_star = solve_tradeoff(h_stack, s_stack, x_bar, alpha / (alpha + 1.0))

    def joint_cost(h, x):
        return rho * mui_energy(h, x, s_mat) \
            + (1.0 - rho) * float(np.sum(np.abs(x - x_s) ** 2))

    report = BoundReport(
        lipschitz=joint_lipschitz(cfg, h_bar, s_mat, theta_eff, rho, norm),
        f_upper_at_center=joint_cost(h_bar, x_bar),
        f_at_center=joint_cost(h_bar, x_bar),
        gap=gap_diagnostic(h_worst, x_bar, x_star, s_mat),
        quadmax_iterations=qm_trace.iterations,
        remedy_iterations=1,
        nominal_distance=float(np.linalg.norm(x_star - x_bar)),
    )
    return DesignResult(
        x_nominal=x_bar, x_robust=x_star, h_worst=h_worst,
        cost_nominal=joint_cost(h_bar, x_bar),
        cost_robust=joint_cost(h_worst, x_star),
        report=report, feasibility=constraint, theta=theta,
    )


def gap_diagnostic(
    h_worst: np.ndarray,
    x_bar: np.ndarray,
    x_star: np.ndarray,
    s_mat: np.ndarray,
) -> float:
    """||H* X_bar - S||_F^2 - ||H* X* - S||_F^2 (zero for a zero radius)."""
    return mui_energy(h_worst, x_bar, s_mat) - mui_energy(h_worst, x_star, s_mat)


def uncertainty_set(
    h_bar: np.ndarray, theta: float, budget: float = 1.0, norm: str = "fro"
) -> UncertaintySet:
    """The channel ball a design was run against."""
    return UncertaintySet(center=h_bar, radius=theta, budget=budget, norm=norm)
