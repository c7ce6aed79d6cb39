import math

import numpy as np
import pytest

from isacwave.model import (
    SystemConfig,
    UncertaintySet,
    aasr,
    check_power,
    membership,
    mui_energy,
    qpsk_constellation,
)
from isacwave.nominal import (
    factorize_covariance,
    joint_objective,
    papc_project,
    sensing_centric_optimal,
    synth_covariance,
    synth_sensing_waveform,
)
from isacwave.robust import (
    cost_bounds,
    design_robust_joint,
    design_robust_sensing,
    gap_diagnostic,
    joint_lipschitz,
    mui_lipschitz,
    norm_equivalence_constant,
    worst_case_channel,
)

from conftest import ball_sample, cgauss


@pytest.fixture(scope="module")
def sensing_instance(paper_cfg):
    rng = np.random.default_rng(21)
    cfg = paper_cfg
    r_mat = synth_covariance([-45, 45], 0.8, cfg.N, cfg.P_T)
    h_bar = cgauss(rng, (cfg.K, cfg.N))
    s_mat = qpsk_constellation(cfg.K, cfg.L, rng)
    return cfg, h_bar, s_mat, r_mat


# --- Lipschitz constants -------------------------------------------------------

def test_lipschitz_all_zero_inputs(paper_cfg):
    assert mui_lipschitz(paper_cfg, np.zeros((4, 16)), np.zeros((4, 30)), 0.0) == 0.0


def test_lipschitz_formula_value(paper_cfg):
    cfg = paper_cfg
    rng = np.random.default_rng(0)
    h_bar = cgauss(rng, (cfg.K, cfg.N))
    s_mat = qpsk_constellation(cfg.K, cfg.L, rng)
    theta = 0.127
    lp = cfg.L * cfg.P_T
    expected = 2 * lp * (np.linalg.norm(h_bar) + theta) \
        + 2 * math.sqrt(lp) * np.linalg.norm(s_mat)
    assert mui_lipschitz(cfg, h_bar, s_mat, theta) == pytest.approx(expected, rel=1e-14)


def test_lipschitz_norm_constant(paper_cfg):
    assert norm_equivalence_constant(paper_cfg, "fro") == 1.0
    assert norm_equivalence_constant(paper_cfg, "inf") == pytest.approx(
        math.sqrt(2 * paper_cfg.K * paper_cfg.N)
    )


def test_joint_lipschitz_is_rho_scaled(paper_cfg):
    cfg = paper_cfg
    rng = np.random.default_rng(1)
    h_bar = cgauss(rng, (cfg.K, cfg.N))
    s_mat = qpsk_constellation(cfg.K, cfg.L, rng)
    lf = mui_lipschitz(cfg, h_bar, s_mat, 0.1)
    assert joint_lipschitz(cfg, h_bar, s_mat, 0.1, 0.25) == 0.25 * lf
    assert joint_lipschitz(cfg, h_bar, s_mat, 0.1, 0.0) == 0.0


def test_lipschitz_dominates_sampled_ratios(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    theta = 0.15
    f_mat = factorize_covariance(r_mat)
    lf = mui_lipschitz(cfg, h_bar, s_mat, theta)

    def optimal_cost(h):
        return mui_energy(h, sensing_centric_optimal(h, s_mat, f_mat, cfg.L), s_mat)

    rng = np.random.default_rng(2)
    worst_ratio = 0.0
    for _ in range(200):
        h1 = ball_sample(rng, h_bar, theta)
        h2 = ball_sample(rng, h_bar, theta)
        num = abs(optimal_cost(h1) - optimal_cost(h2))
        den = np.linalg.norm(h1 - h2)
        if den > 1e-12:
            worst_ratio = max(worst_ratio, num / den)
    assert worst_ratio <= lf


# --- cost envelopes -------------------------------------------------------------

def test_bounds_tight_at_center(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    f_mat = factorize_covariance(r_mat)
    x_bar = sensing_centric_optimal(h_bar, s_mat, f_mat, cfg.L)
    upper, lower = cost_bounds(h_bar, x_bar, s_mat, r_mat, cfg.L)
    f_center = mui_energy(h_bar, x_bar, s_mat)
    assert upper == pytest.approx(f_center, rel=1e-14)
    assert lower <= f_center + 1e-9


def test_bounds_sandwich_in_ball(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    theta = 0.2
    f_mat = factorize_covariance(r_mat)
    x_bar = sensing_centric_optimal(h_bar, s_mat, f_mat, cfg.L)
    lf = mui_lipschitz(cfg, h_bar, s_mat, theta)
    rng = np.random.default_rng(3)
    for _ in range(100):
        h = ball_sample(rng, h_bar, theta)
        upper, lower = cost_bounds(h, x_bar, s_mat, r_mat, cfg.L)
        f_val = mui_energy(h, sensing_centric_optimal(h, s_mat, f_mat, cfg.L), s_mat)
        assert lower - 1e-9 <= f_val <= upper + 1e-9
        assert upper - f_val <= 2 * lf * theta


# --- worst-case channel ----------------------------------------------------------

def test_worst_case_channel_is_ball_extreme(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    theta = 0.127
    f_mat = factorize_covariance(r_mat)
    x_bar = sensing_centric_optimal(h_bar, s_mat, f_mat, cfg.L)
    h_worst, trace = worst_case_channel(x_bar, s_mat, h_bar, theta, 1.0, seed=4)
    assert np.linalg.norm(h_worst - h_bar) <= theta * (1 + 1e-12)
    assert trace.terminated_by == "optimality-condition"
    fmax = mui_energy(h_worst, x_bar, s_mat)
    rng = np.random.default_rng(5)
    violations = sum(
        mui_energy(ball_sample(rng, h_bar, theta), x_bar, s_mat) > fmax
        for _ in range(200)
    )
    assert violations == 0


# --- sensing-centric designs ------------------------------------------------------

def test_sensing_design_zero_radius_identity(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    for remedy in ("svd", "stacked"):
        res = design_robust_sensing(cfg, h_bar, s_mat, r_mat, 0.0, remedy=remedy)
        assert np.array_equal(res.h_worst, h_bar)
        assert np.linalg.norm(res.x_robust - res.x_nominal) <= 1e-10
        assert res.cost_robust == pytest.approx(res.cost_nominal, abs=1e-8)
        assert res.report.gap == pytest.approx(0.0, abs=1e-8)


def test_sensing_design_contracts(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    theta = 0.127
    for remedy in ("svd", "stacked"):
        res = design_robust_sensing(cfg, h_bar, s_mat, r_mat, theta,
                                    remedy=remedy, seed=6)
        uset = UncertaintySet(center=h_bar, radius=theta)
        assert membership(uset, res.h_worst, rtol=1e-9)
        _, residual = check_power(res.x_robust, "covariance", 1e-9, r_mat=r_mat)
        assert residual <= 1e-9
        assert res.feasibility == "covariance"
        assert res.report.gap >= -1e-9
        assert res.report.gap <= 2 * res.report.lipschitz * theta
        assert res.report.nominal_distance <= 0.5  # stays near the nominal design
        assert res.cost_robust >= res.cost_nominal - 1e-9


def test_sensing_design_budget_shrinks_radius(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    res = design_robust_sensing(cfg, h_bar, s_mat, r_mat, 0.2, budget=0.5, seed=7)
    assert np.linalg.norm(res.h_worst - h_bar) <= 0.1 * (1 + 1e-12)


def test_sensing_remedies_agree_on_robust_rate(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    rates = []
    for remedy in ("svd", "stacked"):
        res = design_robust_sensing(cfg, h_bar, s_mat, r_mat, 0.127,
                                    remedy=remedy, seed=8)
        rates.append(aasr(res.h_worst, res.x_robust, s_mat, cfg.N0))
    assert abs(rates[0] - rates[1]) <= 0.1 * max(rates)


def test_sensing_design_conservative_rate_ordering(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    res = design_robust_sensing(cfg, h_bar, s_mat, r_mat, 0.1, seed=9)
    robust_rate = aasr(res.h_worst, res.x_robust, s_mat, cfg.N0)
    nominal_rate = aasr(h_bar, res.x_nominal, s_mat, cfg.N0)
    assert robust_rate <= nominal_rate


def test_sensing_design_soft_dominance_at_robust_waveform(sensing_instance):
    # the robust waveform only approximately preserves worst-case dominance;
    # the violation share is reported, not certified
    cfg, h_bar, s_mat, r_mat = sensing_instance
    theta = 0.127
    res = design_robust_sensing(cfg, h_bar, s_mat, r_mat, theta, seed=10)
    fmax = mui_energy(res.h_worst, res.x_robust, s_mat)
    rng = np.random.default_rng(11)
    violations = np.mean([
        mui_energy(ball_sample(rng, h_bar, theta), res.x_robust, s_mat) > fmax
        for _ in range(400)
    ])
    print(f"soft dominance violation share at the robust waveform: {violations:.3f}")
    assert violations <= 0.25


def test_gap_diagnostic_zero_and_signed(sensing_instance):
    cfg, h_bar, s_mat, r_mat = sensing_instance
    f_mat = factorize_covariance(r_mat)
    x_bar = sensing_centric_optimal(h_bar, s_mat, f_mat, cfg.L)
    assert gap_diagnostic(h_bar, x_bar, x_bar, s_mat) == 0.0


# --- weak min-max inequality -------------------------------------------------------

def test_weak_minmax_inequality_tiny_instance():
    # max-min <= min over sampled designs of the per-design ball maximum;
    # scalar case: the feasible designs are unit-modulus scalars x = e^{i phi}
    # and the per-channel optimum aligns the phase, cost (|h| - |s|)^2
    h_bar = 0.9 + 0.5j
    s = 1.0 + 1.0j
    theta = 0.3
    ang = np.linspace(0, 2 * np.pi, 721)
    radii = np.linspace(0, theta, 41)
    grid = (h_bar + radii[:, None] * np.exp(1j * ang)[None, :]).ravel()

    max_min = np.max((np.abs(grid) - np.abs(s)) ** 2)
    phases = np.exp(1j * np.linspace(0, 2 * np.pi, 181))
    costs = np.abs(grid[None, :] * phases[:, None] - s) ** 2
    min_max = np.min(np.max(costs, axis=1))
    assert max_min <= min_max + 1e-9
    # cross-check the vectorized per-channel optimum on a few points
    f_mat = np.array([[1.0 + 0j]])
    s_mat = np.array([[s]])
    for h in grid[::7000]:
        direct = mui_energy([[h]], sensing_centric_optimal([[h]], s_mat, f_mat, 1), s_mat)
        assert direct == pytest.approx((abs(h) - abs(s)) ** 2, abs=1e-12)


# --- joint designs -----------------------------------------------------------------

@pytest.fixture(scope="module")
def joint_instance(paper_cfg):
    rng = np.random.default_rng(31)
    cfg = paper_cfg
    r_mat = synth_covariance([-45, 45], 0.8, cfg.N, cfg.P_T)
    h_bar = cgauss(rng, (cfg.K, cfg.N))
    s_mat = qpsk_constellation(cfg.K, cfg.L, rng)
    x_s = synth_sensing_waveform(r_mat, cfg.L, seed=13)
    return cfg, h_bar, s_mat, x_s


def test_joint_design_zero_radius_identity(joint_instance):
    cfg, h_bar, s_mat, x_s = joint_instance
    for constraint in ("tpc", "papc"):
        res = design_robust_joint(cfg, h_bar, s_mat, x_s, 0.25, 0.0,
                                  constraint=constraint)
        assert np.array_equal(res.h_worst, h_bar)
        assert np.linalg.norm(res.x_robust - res.x_nominal) <= 1e-10


def test_joint_design_contracts(joint_instance):
    cfg, h_bar, s_mat, x_s = joint_instance
    theta = 0.16
    for constraint in ("tpc", "papc"):
        res = design_robust_joint(cfg, h_bar, s_mat, x_s, 0.25, theta,
                                  constraint=constraint, seed=14)
        uset = UncertaintySet(center=h_bar, radius=theta)
        assert membership(uset, res.h_worst, rtol=1e-9)
        tol = 1e-9 if constraint == "tpc" else 1e-8
        _, residual = check_power(res.x_robust, constraint, tol, p_t=cfg.P_T)
        assert residual <= tol
        assert res.feasibility == constraint
        assert res.cost_robust >= res.cost_nominal - 1e-9


def test_joint_design_rho_zero_tracks_sensing_anchor(joint_instance):
    cfg, h_bar, s_mat, x_s = joint_instance
    res = design_robust_joint(cfg, h_bar, s_mat, x_s, 0.0, 0.1,
                              constraint="tpc", seed=15)
    anchor = math.sqrt(cfg.L * cfg.P_T) * x_s / np.linalg.norm(x_s)
    assert np.linalg.norm(res.x_nominal - anchor) <= 1e-8
    assert np.linalg.norm(res.x_robust - anchor) <= 1e-3 * np.linalg.norm(anchor)


def test_joint_design_worst_case_dominance(joint_instance):
    cfg, h_bar, s_mat, x_s = joint_instance
    theta, rho = 0.16, 0.25
    res = design_robust_joint(cfg, h_bar, s_mat, x_s, rho, theta,
                              constraint="tpc", seed=16)
    fmax = mui_energy(res.h_worst, res.x_nominal, s_mat)
    rng = np.random.default_rng(17)
    violations = sum(
        mui_energy(ball_sample(rng, h_bar, theta), res.x_nominal, s_mat) > fmax
        for _ in range(200)
    )
    assert violations == 0


def test_joint_design_validation(joint_instance):
    cfg, h_bar, s_mat, x_s = joint_instance
    with pytest.raises(ValueError):
        design_robust_joint(cfg, h_bar, s_mat, x_s, 1.5, 0.1)
    with pytest.raises(ValueError):
        design_robust_joint(cfg, h_bar, s_mat, x_s, 0.5, 0.1, constraint="bad")
    with pytest.raises(ValueError):
        design_robust_sensing(cfg, h_bar, s_mat, np.eye(cfg.N), 0.1, remedy="bad")
