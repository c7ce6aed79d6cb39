"""Global maximization of a positive-definite quadratic over a norm ball.

Solves

    max_h  p(h) = ||C h - s||_2^2   s.t.  ||h - h_center|| <= radius

for the 2-norm or the entry-wise infinity norm.  p is convex, so the problem
is a convex *maximization*: the maximum sits on the ball boundary and local
search cannot certify it.  The solver alternates two closed-form
sub-problems:

* y-step: maximize the linearization <grad p(h_prev), y> over the level set
  {y : ||C y - s||^2 = ||C h_prev - s||^2}, an ellipsoid handled through a
  Cholesky factor M^T M = C^T C;
* h-step: maximize <grad p(y), h> over the ball (boundary point along the
  gradient for the 2-norm; a sign vector for the infinity norm),

and stops when <C^T C y - C^T s, h - y> <= tol, at which point the iterate
is a global maximizer.  The objective strictly increases at every accepted
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "QuadMaxProblem",
    "QuadMaxTrace",
    "DegenerateDirection",
    "solve",
    "subproblem_y",
    "subproblem_h",
]


class DegenerateDirection(RuntimeError):
    """The gradient direction vanished (iterate hit the unconstrained minimizer)."""


@dataclass(frozen=True)
class QuadMaxProblem:
    """Problem data; C^T C must be positive definite."""

    c_mat: np.ndarray
    s_vec: np.ndarray
    center: np.ndarray
    radius: float
    norm: str = "two"  # "two" | "inf"

    def __post_init__(self):
        object.__setattr__(self, "c_mat", np.atleast_2d(np.asarray(self.c_mat, float)))
        object.__setattr__(self, "s_vec", np.asarray(self.s_vec, float).ravel())
        object.__setattr__(self, "center", np.asarray(self.center, float).ravel())
        if self.c_mat.shape[0] != self.s_vec.size:
            raise ValueError(
                f"C has {self.c_mat.shape[0]} rows but s has {self.s_vec.size} entries"
            )
        if self.c_mat.shape[1] != self.center.size:
            raise ValueError(
                f"C has {self.c_mat.shape[1]} columns but center has "
                f"{self.center.size} entries"
            )
        if self.radius < 0:
            raise ValueError(f"radius must be nonnegative, got {self.radius}")
        if self.norm not in ("two", "inf"):
            raise ValueError(f"norm must be 'two' or 'inf', got {self.norm!r}")

    def objective(self, h: np.ndarray) -> float:
        return float(np.sum((self.c_mat @ h - self.s_vec) ** 2))

    def ball_distance(self, h: np.ndarray) -> float:
        delta = np.asarray(h, float).ravel() - self.center
        if self.norm == "two":
            return float(np.linalg.norm(delta))
        return float(np.max(np.abs(delta))) if delta.size else 0.0


@dataclass
class QuadMaxTrace:
    """Accepted iterates with strictly increasing objective values."""

    objectives: list[float] = field(default_factory=list)
    iterates: list[np.ndarray] = field(default_factory=list)
    certificate: float = np.inf
    iterations: int = 0
    terminated_by: str = "optimality-condition"
    restarts: int = 1


class _Factors:
    """Cached normal-equation quantities for one (C, s) pair."""

    def __init__(self, c_mat: np.ndarray, s_vec: np.ndarray):
        self.c_mat = c_mat
        self.s_vec = s_vec
        self.gram = c_mat.T @ c_mat
        self.b = c_mat.T @ s_vec
        try:
            self.chol = np.linalg.cholesky(self.gram)  # lower L with G = L L^T
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "C^T C is not positive definite; the maximizer requires a "
                "full-column-rank C"
            ) from exc
        # With M = L^T (so M^T M = G): M^{-T} x solves L w = x,
        # M^{-1} x solves L^T y = x.
        self.u = solve_triangular(self.chol, self.b, lower=True)  # M^{-T} b
        self.h_ls = solve_triangular(self.chol.T, self.u, lower=False)
        # min_h ||C h - s||^2 = ||s||^2 - b^T G^{-1} b
        self.min_cost = float(s_vec @ s_vec - self.u @ self.u)

    def objective(self, h: np.ndarray) -> float:
        return float(np.sum((self.c_mat @ h - self.s_vec) ** 2))

    def grad_half(self, h: np.ndarray) -> np.ndarray:
        """C^T C h - C^T s (half the gradient of the objective)."""
        return self.gram @ h - self.b

    def level_set_y(self, h_prev: np.ndarray) -> np.ndarray:
        d = self.grad_half(h_prev)
        nd = np.linalg.norm(d)
        if nd <= 1e-300:
            raise DegenerateDirection("iterate coincides with the least-squares point")
        gamma = np.sqrt(max(0.0, self.objective(h_prev) - self.min_cost))
        w = solve_triangular(self.chol, d, lower=True)  # M^{-T} d
        w *= gamma / np.linalg.norm(w)
        return solve_triangular(self.chol.T, w + self.u, lower=False)

    def ball_h(
        self, y: np.ndarray, center: np.ndarray, radius: float, norm: str
    ) -> np.ndarray:
        d = self.grad_half(y)
        nd = np.linalg.norm(d)
        if nd <= 1e-300:
            raise DegenerateDirection("gradient vanished at the level-set point")
        if norm == "two":
            return center + radius / nd * d
        return center + radius * np.sign(d)


def subproblem_y(c_mat: np.ndarray, s_vec: np.ndarray, h_prev: np.ndarray) -> np.ndarray:
    """Maximize the current linearization over the level set of p(h_prev).

    The returned y satisfies ||C y - s||^2 == ||C h_prev - s||^2 and
    maximizes (h_prev^T C^T C - s^T C) y over that set.
    """
    f = _Factors(np.atleast_2d(np.asarray(c_mat, float)), np.asarray(s_vec, float).ravel())
    return f.level_set_y(np.asarray(h_prev, float).ravel())


def subproblem_h(
    c_mat: np.ndarray,
    s_vec: np.ndarray,
    y: np.ndarray,
    center: np.ndarray,
    radius: float,
    norm: str = "two",
) -> np.ndarray:
    """Maximize (y^T C^T C - s^T C) h over the norm ball around ``center``."""
    f = _Factors(np.atleast_2d(np.asarray(c_mat, float)), np.asarray(s_vec, float).ravel())
    return f.ball_h(np.asarray(y, float).ravel(), np.asarray(center, float).ravel(),
                    radius, norm)


def _boundary_point(problem: QuadMaxProblem, direction: np.ndarray) -> np.ndarray | None:
    scale = np.linalg.norm(direction) if problem.norm == "two" \
        else np.max(np.abs(direction))
    if scale == 0.0:
        return None
    return problem.center + problem.radius / scale * direction


def _start_points(
    problem: QuadMaxProblem,
    factors: _Factors,
    rng: np.random.Generator,
    restarts: int,
) -> list[np.ndarray]:
    """Boundary starts along the strongest-curvature and gradient directions,
    padded with seeded random directions; the unconstrained minimizer is
    excluded."""
    directions: list[np.ndarray] = []
    eigvals, eigvecs = np.linalg.eigh(factors.gram)
    directions.append(eigvecs[:, -1])
    directions.append(-eigvecs[:, -1])
    grad_center = factors.grad_half(problem.center)
    directions.append(grad_center)
    directions.append(-grad_center)
    while len(directions) < max(restarts, 4):
        directions.append(rng.standard_normal(problem.center.size))
    starts = []
    ls_norm = 1.0 + np.linalg.norm(factors.h_ls)
    for d in directions:
        h0 = _boundary_point(problem, d)
        if h0 is None:
            continue
        if np.linalg.norm(h0 - factors.h_ls) <= 1e-12 * ls_norm:
            continue  # excluded initialization point
        starts.append(h0)
    if not starts:
        raise RuntimeError("could not draw a start point distinct from the "
                           "unconstrained minimizer")
    return starts


def _iterate(
    problem: QuadMaxProblem,
    factors: _Factors,
    h0: np.ndarray,
    max_iter: int,
    tol: float,
    rng: np.random.Generator,
) -> QuadMaxTrace:
    trace = QuadMaxTrace()
    h = h0
    trace.objectives.append(factors.objective(h))
    trace.iterates.append(h)
    trace.terminated_by = "iteration-cap"
    for k in range(1, max_iter + 1):
        try:
            y = factors.level_set_y(h)
            h_new = factors.ball_h(y, problem.center, problem.radius, problem.norm)
        except DegenerateDirection:
            # perturb within the ball and retry once
            h = problem.center + 0.5 * (h - problem.center) \
                + 1e-8 * problem.radius * rng.standard_normal(h.size)
            y = factors.level_set_y(h)
            h_new = factors.ball_h(y, problem.center, problem.radius, problem.norm)
        cert = float(factors.grad_half(y) @ (h_new - y))
        obj_new = factors.objective(h_new)
        trace.iterations = k
        trace.certificate = cert
        improved = obj_new > trace.objectives[-1]
        if improved:
            trace.objectives.append(obj_new)
            trace.iterates.append(h_new)
            h = h_new
        if cert <= tol:
            trace.terminated_by = "optimality-condition"
            break
        if not improved:
            # no ascent and no certificate: numerical stall
            trace.terminated_by = "stalled"
            break
    return trace


def solve(
    problem: QuadMaxProblem,
    max_iter: int = 100,
    tol: float = 1e-10,
    seed: int = 0,
    restarts: int = 12,
) -> tuple[np.ndarray, QuadMaxTrace]:
    """Globally maximize the quadratic over the ball.

    The optimality certificate <C^T C y - C^T s, h - y> <= tol holds at one
    level-set point per run, so distinct starts can settle on distinct
    boundary lobes; the solver therefore runs the iteration from several
    deterministic and seeded boundary starts and keeps the best certified
    run.  Returns the winner and its trace of strictly increasing objective
    values; ``terminated_by`` is "optimality-condition" when the certificate
    fired, "iteration-cap" otherwise ("degenerate-ball" for radius zero).
    """
    if problem.radius == 0.0:
        trace = QuadMaxTrace()
        trace.terminated_by = "degenerate-ball"
        trace.certificate = 0.0
        trace.objectives.append(problem.objective(problem.center))
        trace.iterates.append(problem.center.copy())
        return problem.center.copy(), trace

    factors = _Factors(problem.c_mat, problem.s_vec)
    rng = np.random.default_rng(seed)
    best: QuadMaxTrace | None = None
    starts = _start_points(problem, factors, rng, restarts)
    for h0 in starts:
        trace = _iterate(problem, factors, h0, max_iter, tol, rng)
        if best is None or trace.objectives[-1] > best.objectives[-1]:
            best = trace
    best.restarts = len(starts)
    return best.iterates[-1].copy(), best
