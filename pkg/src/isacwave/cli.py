"""Command-line frontend: design, montecarlo and verify subcommands.

Exit codes: 0 success, 1 invariant violation (verify), 2 configuration
error, 3 solver failure.  Set ISACWAVE_LOG=debug|info|warning to control
verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from isacwave import matio, simkit
from isacwave.config import ConfigError, ExperimentConfig, load_config
from isacwave.model import (
    SystemConfig,
    UncertaintySet,
    aasr,
    check_power,
    mui_energy,
    qpsk_constellation,
)
from isacwave.nominal import factorize_covariance, synth_covariance, synth_sensing_waveform
from isacwave.robust import (
    cost_bounds,
    design_robust_joint,
    design_robust_sensing,
    mui_lipschitz,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

log = logging.getLogger("isacwave")


def _setup_logging():
    level = os.environ.get("ISACWAVE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _experiment_inputs(exp: ExperimentConfig):
    """Stage-1 quantities shared by design and montecarlo."""
    cfg = exp.system
    h_ref = simkit.make_reference_channel(cfg, exp.master_seed)
    model = simkit.PerturbationModel(h_ref=h_ref, eps=exp.eps, seed=exp.master_seed)
    h_bar = simkit.nominal_channel(model)
    r_mat = synth_covariance(exp.target_azimuths_deg, exp.beam_weight, cfg.N, cfg.P_T)
    x_s = synth_sensing_waveform(r_mat, cfg.L, seed=exp.master_seed)
    s_mat = qpsk_constellation(cfg.K, cfg.L,
                               np.random.default_rng(
                                   np.random.SeedSequence([exp.master_seed, 2])),
                               power=exp.symbol_power)
    return h_bar, r_mat, x_s, s_mat


def cmd_design(exp: ExperimentConfig, out_dir: str) -> int:
    cfg = exp.system
    theta = exp.design_theta()
    h_bar, r_mat, x_s, s_mat = _experiment_inputs(exp)
    try:
        if exp.method.startswith("sensing"):
            res = design_robust_sensing(
                cfg, h_bar, s_mat, r_mat, theta,
                remedy="svd" if exp.method == "sensing-svd" else "stacked",
                norm=exp.norm, alpha=exp.alpha, budget=exp.budget,
                seed=exp.master_seed + 4,
            )
        else:
            rho = exp.rho if exp.rho is not None else 0.25
            res = design_robust_joint(
                cfg, h_bar, s_mat, x_s, rho, theta,
                constraint=exp.method.removeprefix("joint-"),
                norm=exp.norm, alpha=exp.alpha, budget=exp.budget,
                seed=exp.master_seed + 4,
            )
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    os.makedirs(out_dir, exist_ok=True)
    matio.save_matrix(os.path.join(out_dir, "H_nominal.txt"), h_bar)
    matio.save_matrix(os.path.join(out_dir, "H_worst.txt"), res.h_worst)
    matio.save_matrix(os.path.join(out_dir, "X_nominal.txt"), res.x_nominal)
    matio.save_matrix(os.path.join(out_dir, "X_robust.txt"), res.x_robust)
    matio.save_matrix(os.path.join(out_dir, "S.txt"), s_mat)
    matio.save_matrix(os.path.join(out_dir, "R.txt"), r_mat)
    matio.save_matrix(os.path.join(out_dir, "X_sensing.txt"), x_s)
    robust_rate = aasr(res.h_worst, res.x_robust, s_mat, cfg.N0)
    meta = {
        "method": exp.method,
        "theta": theta,
        "budget": exp.budget,
        "norm": exp.norm,
        "alpha": exp.alpha,
        "rho": exp.rho if exp.method.startswith("joint") else None,
        "system": {"users": cfg.K, "tx_antennas": cfg.N, "frame_length": cfg.L,
                   "power_watts": cfg.P_T, "noise_watts": cfg.N0},
        "cost_nominal": res.cost_nominal,
        "cost_robust": res.cost_robust,
        "aasr_robust": robust_rate,
        "feasibility": res.feasibility,
        "bound_report": {
            "lipschitz": res.report.lipschitz,
            "f_upper_at_center": res.report.f_upper_at_center,
            "f_at_center": res.report.f_at_center,
            "gap": res.report.gap,
            "quadmax_iterations": res.report.quadmax_iterations,
            "remedy_iterations": res.report.remedy_iterations,
            "nominal_distance": res.report.nominal_distance,
        },
    }
    with open(os.path.join(out_dir, "design.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")
    print(f"cost_nominal: {res.cost_nominal!r}")
    print(f"cost_robust: {res.cost_robust!r}")
    print(f"aasr_robust: {robust_rate!r}")
    return EXIT_OK


def cmd_montecarlo(exp: ExperimentConfig, out_dir: str) -> int:
    cfg = exp.system
    try:
        report = simkit.run_montecarlo(
            cfg,
            exp.montecarlo_thetas(),
            method=exp.method,
            rho_grid=exp.rho_grid if exp.rho_grid else
                     ([exp.rho] if exp.rho is not None else None)
                     if exp.method.startswith("joint") else None,
            episodes=exp.episodes,
            master_seed=exp.master_seed,
            eps=exp.eps,
            target_azimuths_deg=exp.target_azimuths_deg,
            beam_weight=exp.beam_weight,
            alpha=exp.alpha,
            norm=exp.norm,
            budget=exp.budget,
            symbol_power=exp.symbol_power,
        )
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    os.makedirs(out_dir, exist_ok=True)
    path = simkit.emit_report(
        report, os.path.join(out_dir, f"report.{exp.fmt}"), fmt=exp.fmt
    )
    for r, rho in enumerate(report.rho_grid):
        for t, theta in enumerate(report.theta_grid):
            tag = f"rho={rho} " if rho is not None else ""
            print(f"{tag}theta={theta}: coverage={report.coverage[r, t]!r}")
    log.info("report written to %s", path)
    return EXIT_OK


def _verify_design(art_dir: str, tolerances: dict) -> list[str]:
    with open(os.path.join(art_dir, "design.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    h_bar = matio.load_matrix(os.path.join(art_dir, "H_nominal.txt"))
    h_worst = matio.load_matrix(os.path.join(art_dir, "H_worst.txt"))
    x_bar = matio.load_matrix(os.path.join(art_dir, "X_nominal.txt"))
    x_star = matio.load_matrix(os.path.join(art_dir, "X_robust.txt"))
    s_mat = matio.load_matrix(os.path.join(art_dir, "S.txt"))
    r_mat = matio.load_matrix(os.path.join(art_dir, "R.txt"))
    sysd = meta["system"]
    cfg = SystemConfig(K=sysd["users"], N=sysd["tx_antennas"],
                       L=sysd["frame_length"], P_T=sysd["power_watts"],
                       N0=sysd["noise_watts"])
    tol_feas = tolerances.get("feasibility", 1e-8)
    tol_membership = tolerances.get("membership", 1e-9)
    tol_bounds = tolerances.get("bounds", 1e-9)

    violations = []
    mode = meta["feasibility"]
    if mode == "covariance":
        ok, residual = check_power(x_star, "covariance", tol_feas, r_mat=r_mat)
    else:
        ok, residual = check_power(x_star, mode, tol_feas, p_t=cfg.P_T)
    if not ok:
        violations.append(f"{mode} residual {residual:.3e} exceeds {tol_feas:.1e}")

    uset = UncertaintySet(center=h_bar, radius=meta["theta"],
                          budget=meta["budget"], norm=meta["norm"])
    if not uset.contains(h_worst, rtol=tol_membership):
        violations.append(
            f"worst-case channel outside the uncertainty set "
            f"(distance {uset.distance(h_worst):.6e} > {uset.effective_radius:.6e})"
        )

    if mode == "covariance":
        f_upper, f_lower = cost_bounds(h_worst, x_bar, s_mat, r_mat, cfg.L)
        f_mat = factorize_covariance(r_mat)
        from isacwave.nominal import sensing_centric_optimal

        f_val = mui_energy(h_worst, sensing_centric_optimal(h_worst, s_mat, f_mat, cfg.L),
                           s_mat)
        if not (f_lower - tol_bounds <= f_val <= f_upper + tol_bounds):
            violations.append(
                f"bound sandwich broken at worst case: "
                f"{f_lower!r} <= {f_val!r} <= {f_upper!r} fails"
            )
        lf = mui_lipschitz(cfg, h_bar, s_mat, meta["budget"] * meta["theta"],
                           meta["norm"])
        if f_upper - f_val > 2.0 * lf * meta["budget"] * meta["theta"] + tol_bounds:
            violations.append("uniform bound 2*L*theta exceeded at worst case")

    gap = mui_energy(h_worst, x_bar, s_mat) - mui_energy(h_worst, x_star, s_mat)
    stored_gap = meta["bound_report"]["gap"]
    if mode == "covariance" and abs(gap - stored_gap) > 1e-6 * max(1.0, abs(stored_gap)):
        violations.append(
            f"stored gap {stored_gap!r} does not match recomputed {gap!r}"
        )
    return violations


def cmd_verify(art_dir: str, tolerances: dict) -> int:
    try:
        violations = _verify_design(art_dir, tolerances)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"cannot verify {art_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_VIOLATION
    print("all checks passed")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isacwave",
        description="Robust dual-function waveform design and Monte-Carlo "
                    "performance characterization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="one robust design at a fixed radius")
    p_mc = sub.add_parser("montecarlo", help="radius sweep with episode statistics")
    for p in (p_design, p_mc):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="report format override")

    p_verify = sub.add_parser("verify", help="re-check invariants of design outputs")
    p_verify.add_argument("artifacts", help="directory produced by the design command")
    p_verify.add_argument("--tol-feasibility", type=float, default=None)
    p_verify.add_argument("--tol-membership", type=float, default=None)
    p_verify.add_argument("--tol-bounds", type=float, default=None)
    p_verify.add_argument("--config", default=None,
                          help="optional config supplying verify.* tolerances")
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "verify":
        tolerances = {}
        if args.config:
            try:
                tolerances.update(load_config(args.config).verify_tolerances)
            except ConfigError as exc:
                for problem in exc.problems:
                    print(f"config error: {problem}", file=sys.stderr)
                return EXIT_CONFIG
        for name in ("feasibility", "membership", "bounds"):
            value = getattr(args, f"tol_{name}")
            if value is not None:
                tolerances[name] = value
        return cmd_verify(args.artifacts, tolerances)

    try:
        exp = load_config(args.config)
        if args.seed is not None:
            exp.master_seed = args.seed
        if args.format is not None:
            exp.fmt = args.format
        out_dir = args.out if args.out is not None else exp.output_dir
        if args.command == "design":
            exp.design_theta()  # validate before any work
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "design":
        return cmd_design(exp, out_dir)
    return cmd_montecarlo(exp, out_dir)


if __name__ == "__main__":
    sys.exit(main())
