"""Command-line scenario runner: ``simulate``, ``verify``, ``compare``, ``kzmap``.

Exit codes: 0 pass, 1 tolerance failure, 2 config error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import dump_summary, load_config
from .errors import ConfigError, KZStringError
from .evolution import (dalembert_state, exact_trajectory, gauge_check, harmonic_check,
                        periodicity_check, pullback_trajectory, pulled_back_tangents)
from .initial_data import make_curve
from .kz_map import build_kz_map, kz_identity_residuals, phi_map, theta_map
from .oracle import compare_trajectories, solve_nonlinear
from .report import fit_order

log = logging.getLogger("kzstring")

EXIT_PASS, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def fmt(v):
    return f"{float(v):.17g}"


def build_from_config(cfg):
    kw = cfg.curve_kwargs()
    preset = kw.pop("preset")
    try:
        curve = make_curve(preset, dim=cfg.dim, topology=cfg.topology, period=cfg.period, **kw)
    except TypeError as exc:
        raise ConfigError(str(exc), "curve") from exc
    return curve, build_kz_map(curve, cfg.theta_nodes, corrupt_lambda_minus=cfg.corrupt_lambda_minus)


def write_state_csv(path, state):
    n = state.x_tilde.shape[1]
    lines = [",".join(["t", "sigma", "theta"] + [f"x{i + 1}" for i in range(n)])]
    t = fmt(state.t)
    for s, th, x in zip(state.sigma_grid, state.theta, state.x_tilde):
        lines.append(",".join([t, fmt(s), fmt(th)] + [fmt(v) for v in x]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_table_csv(path, nodes, values):
    lines = ["node,value"] + [f"{fmt(a)},{fmt(b)}" for a, b in zip(nodes, values)]
    Path(path).write_text("\n".join(lines) + "\n")


def _finish(out, summary, failures, quiet):
    summary["status"] = "fail" if failures else "pass"
    if failures:
        summary["failures"] = ", ".join(failures)
    text = dump_summary(summary)
    (out / "summary.txt").write_text(text)
    if not quiet:
        sys.stdout.write(text)
    return EXIT_TOLERANCE if failures else EXIT_PASS


def run_simulate(cfg, out, quiet=False):
    curve, kzmap = build_from_config(cfg)
    tol = cfg.tolerances["gauge"]
    manifest, summary, failures = {}, {}, []
    ortho = norm = 0.0
    for k, t in enumerate(cfg.times):
        state = dalembert_state(kzmap, t, nodes=cfg.sigma_nodes)
        name = f"state_{k:03d}.csv"
        write_state_csv(out / name, state)
        manifest[f"state.{k:03d}.file"] = name
        manifest[f"state.{k:03d}.t"] = float(t)
        rep = gauge_check(state)
        ortho = max(ortho, rep["gauge.orthogonality.max"])
        norm = max(norm, rep["gauge.normalization.max"])
    manifest["states"] = len(cfg.times)
    (out / "manifest.txt").write_text(dump_summary(manifest))
    summary["residual.gauge.orthogonality.max"] = ortho
    summary["residual.gauge.normalization.max"] = norm
    summary["tol.gauge"] = tol
    if kzmap.closed:
        summary["kz.sigma_period"] = kzmap.Sigma
    if not ortho <= tol:
        failures.append("gauge.orthogonality")
    if not norm <= tol:
        failures.append("gauge.normalization")
    return _finish(out, summary, failures, quiet)


def _regular_times(kzmap, times, margin, floor=1e-3):
    """Times whose finite-difference stencil stays away from a collapse (x~_sigma = 0)."""
    keep = []
    for t in times:
        speeds = [np.min(np.linalg.norm(dalembert_state(kzmap, s, nodes=64).x_tilde_sigma, axis=-1))
                  for s in (t - margin, t, t + margin)]
        if min(speeds) > floor:
            keep.append(t)
    return keep


def _identity_study(cfg, kzmap, times):
    """Theta identity residuals on a refinement ladder of finite-difference steps."""
    lo, hi = (0.0, kzmap.Sigma) if kzmap.closed else kzmap.sigma_bounds
    span = max(cfg.verify_steps) + max(times, default=0.0)
    if not kzmap.closed:
        lo, hi = lo + 2 * span, hi - 2 * span
        if hi <= lo:
            raise ConfigError("line window too short for the identity study", "curve.half_length")
    sigma = np.linspace(lo, hi, cfg.verify_samples, endpoint=not kzmap.closed)

    def tangents(t, theta):
        return pulled_back_tangents(kzmap, t, theta)[1:]

    rows = [kz_identity_residuals(kzmap, tangents, times, sigma, h) for h in cfg.verify_steps]
    return {k: [r[k] for r in rows] for k in ("theta_t", "theta_sigma", "theta_wave")}


def _fd_verdict(name, values, steps, cfg, summary, failures):
    order = fit_order(steps, values)
    summary[f"residual.{name}.max"] = values[-1]
    summary[f"order.{name}"] = order if np.isfinite(order) else "unavailable"
    ok = values[-1] <= cfg.tolerances["identity"] or (np.isfinite(order) and order >= cfg.tolerances["order"])
    summary[f"pass.{name}"] = bool(ok)
    if not ok:
        failures.append(name)


def run_verify(cfg, out, quiet=False):
    curve, kzmap = build_from_config(cfg)
    tol = cfg.tolerances
    summary, failures = {}, []
    times = [t for t in cfg.times if t > 0] or [0.5]

    # Theta(0, .) = varrho and the two round trips
    sig = kzmap.sigma_grid_for(256) if kzmap.closed else kzmap.sigma_grid_for(256, max(times))
    rng = np.random.default_rng(0)
    th = rng.uniform(curve.theta_min, curve.theta_max, 256)
    checks = {
        "kz.theta0": (float(np.max(np.abs(theta_map(kzmap, 0.0, sig) - kzmap.varrho(sig)))), tol["quadrature"]),
        "roundtrip.rho": (float(np.max(np.abs(kzmap.varrho(kzmap.rho(th)) - th))), tol["inversion"]),
    }
    t_rt = times[0]
    if not kzmap.closed:
        th = kzmap.varrho(sig)
    checks["roundtrip.phi"] = (float(np.max(np.abs(theta_map(kzmap, t_rt, phi_map(kzmap, t_rt, th)) - th))),
                               tol["inversion"])
    ortho = norm = 0.0
    for t in cfg.times:
        rep = gauge_check(dalembert_state(kzmap, t, nodes=cfg.sigma_nodes))
        ortho = max(ortho, rep["gauge.orthogonality.max"])
        norm = max(norm, rep["gauge.normalization.max"])
    checks["gauge.orthogonality"] = (ortho, tol["gauge"])
    checks["gauge.normalization"] = (norm, tol["gauge"])
    if kzmap.closed:
        per = periodicity_check(kzmap, times=cfg.times, nodes=min(cfg.sigma_nodes, 512))
        checks["periodicity.drift_mismatch"] = (per["periodicity.drift_mismatch"], tol["periodicity"])
        summary["periodicity.period"] = per.metadata["period"]
        summary["periodicity.drift"] = [float(v) for v in per.metadata["drift"]]
    for name, (value, limit) in checks.items():
        summary[f"residual.{name}.max"] = value
        summary[f"pass.{name}"] = bool(value <= limit)
        if not value <= limit:
            failures.append(name)

    regular = times if not kzmap.closed else _regular_times(kzmap, times, max(cfg.verify_steps))
    skipped = [t for t in times if t not in regular]
    if skipped:
        summary["verify.skipped_times"] = [float(t) for t in skipped]
    if not regular:
        raise ConfigError("every verify time is at a collapse of the string", "time.list")
    times = regular
    study = _identity_study(cfg, kzmap, times)
    summary["verify.steps"] = list(cfg.verify_steps)
    for name, values in study.items():
        _fd_verdict(name, values, cfg.verify_steps, cfg, summary, failures)

    t0 = times[0]
    harm, hs = [], []
    for n in cfg.harmonic_nodes:
        if kzmap.closed:
            sigma = kzmap.sigma_grid_for(n)
        else:
            lo, hi = kzmap.sigma_bounds
            sigma = np.linspace(lo + t0 + 1.0, hi - t0 - 1.0, n)
        step = sigma[1] - sigma[0]
        traj = exact_trajectory(kzmap, [t0 - step, t0, t0 + step] if t0 > step else [t0, t0 + step, t0 + 2 * step],
                                sigma=sigma)
        harm.append(harmonic_check(traj)["harmonic.max"])
        hs.append(step)
    summary["verify.harmonic_nodes"] = list(cfg.harmonic_nodes)
    _fd_verdict("harmonic", harm, hs, cfg, summary, failures)
    return _finish(out, summary, failures, quiet)


def _dependence_mask(kzmap, times, theta):
    """Nodes whose exact solution is determined by the data at every time (line only)."""
    keep = np.ones(theta.shape, dtype=bool)
    if kzmap.closed:
        return keep
    for t in times:
        lo, hi = kzmap.sigma_bounds
        ends = theta_map(kzmap, t, np.array([lo + abs(t), hi - abs(t)]))
        keep &= (theta > ends[0]) & (theta < ends[1])
    if not keep.any():
        raise ConfigError("compare.t_end leaves no node inside the domain of dependence", "compare.t_end")
    return keep


def _restrict(traj, mask):
    return replace(traj, grid=traj.grid[mask], x=traj.x[:, mask], x_t=traj.x_t[:, mask])


def run_compare(cfg, out, quiet=False):
    if not (cfg.solver_exact and cfg.solver_oracle):
        raise ConfigError("compare needs both solvers enabled", "solver.oracle")
    curve, kzmap = build_from_config(cfg)
    t_end = cfg.compare_t_end
    summary, failures, errors, hs = {}, [], [], []
    for n in cfg.compare_nodes:
        oracle = solve_nonlinear(curve, n, t_end=t_end)
        mask = _dependence_mask(kzmap, oracle.times, oracle.grid)
        oracle = _restrict(oracle, mask)
        exact = pullback_trajectory(kzmap, oracle.times, oracle.grid)
        err = compare_trajectories(oracle, exact)["compare.same_parametrization.max"]
        summary[f"compare.nodes.{n}.sup_error"] = err
        summary[f"compare.nodes.{n}.steps"] = oracle.metadata["steps"]
        errors.append(err)
        hs.append(oracle.metadata["h"])
    summary["compare.t_end"] = float(t_end)
    order = fit_order(hs, errors) if len(errors) > 1 else float("nan")
    summary["compare.order"] = order if np.isfinite(order) else "unavailable"
    if not errors[-1] <= cfg.tolerances["compare"]:
        failures.append("compare.sup_error")
    # an order is only meaningful above the roundoff floor
    if errors[-1] > cfg.tolerances["identity"] and np.isfinite(order) and order < cfg.tolerances["order"]:
        failures.append("compare.order")
    return _finish(out, summary, failures, quiet)


def run_kzmap(cfg, out, quiet=False):
    curve, kzmap = build_from_config(cfg)
    write_table_csv(out / "rho.csv", kzmap.rho.nodes, kzmap.rho.values)
    write_table_csv(out / "varrho.csv", kzmap.varrho.nodes, kzmap.varrho.values)
    summary = {}
    for k, t in enumerate(cfg.times):
        sigma = kzmap.sigma_grid_for(cfg.sigma_nodes, t)
        name = f"theta_{k:03d}.csv"
        write_table_csv(out / name, sigma, theta_map(kzmap, t, sigma))
        summary[f"theta.{k:03d}.file"] = name
        summary[f"theta.{k:03d}.t"] = float(t)
    if kzmap.closed:
        summary["kz.sigma_period"] = kzmap.Sigma
    return _finish(out, summary, [], quiet)


COMMANDS = {"simulate": run_simulate, "verify": run_verify, "compare": run_compare, "kzmap": run_kzmap}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="kzstring", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario file (flat key = value)")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--nodes", type=int, help="override grid.theta_nodes and grid.sigma_nodes")
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")

    overrides = {}
    if args.nodes is not None:
        overrides = {"grid.theta_nodes": args.nodes, "grid.sigma_nodes": args.nodes}
    try:
        cfg = load_config(args.config, overrides)
        out = Path(args.out) if args.out else cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, quiet=args.quiet)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except KZStringError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
