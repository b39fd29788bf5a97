"""Command-line entry point: ``tfpme <command> --config run.yaml``.

Commands
--------
run           evolve one configuration; writes norms.csv, optional snapshots, manifest.json
convergence   error against an exact or refined reference for several ``taus``
decay-study   decay slopes of the L^inf, L^1, L^2 norms over an (alphas, ms) grid
fode-table    scalar fractional ODE against its series solution and the classical ODE
harnack       two-sided boundary band of ``u^m / dist^gamma`` with a-priori constants
verify        the acceptance suite; pass/fail table as CSV and text

Exit codes: 0 success, 1 a check failed, 2 bad configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import check_non_extinction, fit_decay_slope
from .config import RunConfig, build_initial, load_config, parse_number
from .errors import ConfigurationError, SolverError, TfpmeError
from .fode import classical_ode_solution, kilbas_reference, mittag_leffler, solve_scalar_fode
from .separable import harnack_band, separable_band_constants, solve_elliptic_profile
from .spectral_domain import Field
from .stepper import evolve

log = logging.getLogger("tfpme")

OUTPUT_ENV = "TFPME_OUTPUT_DIR"
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> int:
    """Write a CSV with a header row, 17 significant digits and LF endings; returns the row count."""
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
            n += 1
    return n


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    return Path(cfg.output_dir if cfg is not None else "out")


def _extra(cfg: RunConfig, key: str, default=None):
    return cfg.extra.get(key, default)


def _float_list(raw, key: str) -> list[float]:
    if raw is None:
        return []
    if not isinstance(raw, (list, tuple)):
        raw = [raw]
    return [parse_number(v, f"{key}[{i}]") for i, v in enumerate(raw)]


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


# ---------------------------------------------------------------- commands


def cmd_run(args, cfg: RunConfig) -> int:
    out = _out_dir(args, cfg)
    basis = cfg.basis()
    u0 = build_initial(cfg, basis, Path(args.config).parent)
    traj = evolve(u0, cfg.solver(), basis)
    table = traj.norm_table()
    cols = ["t", "l1", "l2", "linf", "l1_phi1", "hstar", "energy"]
    n = write_csv(out / "norms.csv", cols, zip(*(table[c] for c in cols)))
    snaps = []
    if cfg.snapshot_every:
        ks = sorted(set(range(0, len(traj), cfg.snapshot_every)) | {len(traj) - 1})
        for k in ks:
            name = f"snapshots/u_{k:06d}.csv"
            write_csv(out / name, ["x", "u"], zip(basis.grid, traj.states[k]))
            snaps.append(name)
    _write_json(
        out / "manifest.json",
        {
            "command": "run",
            "config": cfg.to_dict(),
            "n_steps": cfg.n_steps,
            "norm_rows": n,
            "snapshots": snaps,
            "max_step_residual": float(traj.residuals.max()),
            "max_newton_iterations": int(traj.iterations.max()),
        },
    )
    _say(args, f"wrote {n} rows to {out / 'norms.csv'}")
    return EXIT_OK


def cmd_convergence(args, cfg: RunConfig) -> int:
    taus = _float_list(_extra(cfg, "taus"), "taus")
    if len(taus) < 2:
        raise ConfigurationError("need at least two step sizes", key="taus")
    taus = sorted(taus, reverse=True)
    for i, tau in enumerate(taus):
        steps = cfg.t_final / tau
        if tau <= 0 or abs(steps - round(steps)) > 1e-9 * steps:
            raise ConfigurationError(f"{tau} does not divide t_final={cfg.t_final}", key=f"taus[{i}]")
    basis = cfg.basis()
    u0 = build_initial(cfg, basis, Path(args.config).parent)

    if cfg.m == 1.0 and cfg.initial["type"] == "eigenfunction":
        k = int(cfg.initial["params"].get("k", 1))
        decay = mittag_leffler(cfg.alpha, -basis.eigenvalues[k - 1] * cfg.t_final**cfg.alpha)
        reference = Field(basis, values=decay * u0.values)
        source = "mittag-leffler"
    else:
        refine = int(_extra(cfg, "reference_refinement", 4))
        tau_ref = taus[-1] / refine
        reference = Field(basis, values=evolve(u0, cfg.solver(tau_ref), basis).states[-1])
        source = f"self-reference tau={tau_ref:.6g}"

    errors = []
    for tau in taus:
        final = evolve(u0, cfg.solver(tau), basis).states[-1]
        diff = Field(basis, values=final - reference.values)
        errors.append(float(np.sqrt(np.sum(diff.coeffs**2 / basis.eigenvalues))))
    errors = np.array(errors)
    out = _out_dir(args, cfg)
    write_csv(out / "convergence.csv", ["tau", "hstar_error"], zip(taus, errors))
    positive = bool(np.all(errors > 0))
    order = float(np.polyfit(np.log(taus), np.log(errors), 1)[0]) if positive else math.inf
    monotone = bool(np.all(np.diff(errors) < 0))
    required = cfg.alpha / 4.0
    passed = order >= required
    _write_json(
        out / "convergence.json",
        {"reference": source, "observed_order": order, "required_order": required, "monotone": monotone,
         "passed": passed, "config": cfg.to_dict()},
    )
    _say(args, f"observed order {order:.4f} (required {required:.4f}), monotone={monotone}, reference: {source}")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_decay_study(args, cfg: RunConfig) -> int:
    alphas = _float_list(_extra(cfg, "alphas", [cfg.alpha]), "alphas")
    ms = _float_list(_extra(cfg, "ms", [cfg.m]), "ms")
    window = _float_list(_extra(cfg, "window"), "window") or None
    if window is not None and len(window) != 2:
        raise ConfigurationError("expected [t_lo, t_hi]", key="window")
    tol = float(_extra(cfg, "tolerance", 0.2))
    basis = cfg.basis()
    u0 = build_initial(cfg, basis, Path(args.config).parent)
    rows = []
    all_ok = True
    for alpha in alphas:
        for m in ms:
            sub = dataclasses.replace(cfg, alpha=alpha, m=m)
            traj = evolve(u0, sub.solver(), basis)
            table = traj.norm_table()
            expected = -alpha / m
            slopes, worst, extinct = [], 0.0, False
            for name in ("linf", "l1", "l2"):
                fit = fit_decay_slope(table["t"], table[name], tuple(window) if window else None)
                slopes.append(fit.slope)
                extinct |= fit.extinct
                worst = max(worst, math.inf if fit.extinct else fit.relative_error(expected))
            min_l1, _ = check_non_extinction(traj)
            ok = worst <= tol and not extinct
            all_ok &= ok
            rows.append([alpha, m, expected, *slopes, worst, min_l1, extinct, ok])
            _say(args, f"alpha={alpha:g} m={m:g}: slopes {', '.join(f'{s:.4f}' for s in slopes)} "
                       f"(expected {expected:.4f})")
    out = _out_dir(args, cfg)
    header = ["alpha", "m", "expected_slope", "slope_linf", "slope_l1", "slope_l2", "max_rel_error",
              "min_l1", "extinct", "passed"]
    write_csv(out / "decay_study.csv", header, rows)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_fode_table(args, cfg: RunConfig) -> int:
    lam = float(_extra(cfg, "lam", 1.0))
    v0 = float(_extra(cfg, "v0", 1.0))
    beta = _extra(cfg, "beta")
    every = int(_extra(cfg, "row_every", 1))
    if every < 1:
        raise ConfigurationError("must be a positive integer", key="row_every")
    sol = solve_scalar_fode(cfg.alpha, lam, cfg.m, v0, cfg.tau, cfg.n_steps) if beta is None else None
    if beta is not None:
        from .fode import solve_kilbas_fode

        if cfg.m != 1.0:
            raise ConfigurationError("a time-dependent coefficient needs m = 1", key="beta")
        sol = solve_kilbas_fode(cfg.alpha, float(beta), lam, v0, cfg.tau, cfg.n_steps)
    idx = np.unique(np.r_[np.arange(0, len(sol.times), every), len(sol.times) - 1])
    t = sol.times[idx]
    if beta is not None:
        series = kilbas_reference(cfg.alpha, float(beta), lam, v0, t)
    elif cfg.m == 1.0:
        series = v0 * mittag_leffler(cfg.alpha, -lam * t**cfg.alpha)
    else:
        series = np.full(len(t), math.nan)  # no closed form for m != 1
    lo, hi = sol.envelope()
    classical = classical_ode_solution(lam, cfg.m, v0, t)
    out = _out_dir(args, cfg)
    header = ["t", "v_numeric", "v_series", "envelope_lo", "envelope_hi", "v_classical"]
    n = write_csv(out / "fode_table.csv", header, zip(t, sol.values[idx], series, lo[idx], hi[idx], classical))
    _say(args, f"wrote {n} rows; min numeric {sol.values.min():.3e}, classical hits zero: "
               f"{bool(np.any(classical == 0.0))}")
    return EXIT_OK


def cmd_harnack(args, cfg: RunConfig) -> int:
    gamma = float(_extra(cfg, "gamma", 1.0))
    basis = cfg.basis()
    u0 = build_initial(cfg, basis, Path(args.config).parent)
    S = solve_elliptic_profile(basis, cfg.m)
    traj = evolve(u0, cfg.solver(), basis)
    c0, c1 = separable_band_constants(S, u0, cfg.alpha, cfg.m, cfg.tau, cfg.n_steps, gamma)
    rep = harnack_band(traj, gamma / cfg.m, c0=c0, c1=c1)
    out = _out_dir(args, cfg)
    write_csv(out / "harnack.csv", ["t", "band_inf", "band_sup", "envelope_lo", "envelope_hi"], rep.rows())
    _write_json(out / "harnack.json", {"c0": rep.c0, "c1": rep.c1, "gamma": gamma, "violations": rep.violations,
                                       "passed": rep.passed, "config": cfg.to_dict()})
    _say(args, f"c0={rep.c0:.6g} c1={rep.c1:.6g} violations={rep.violations}")
    return EXIT_OK if rep.passed else EXIT_CHECK_FAILED


def cmd_verify(args, cfg: RunConfig | None) -> int:
    from .verification import CRITERIA, run_criterion

    numbers = args.criteria or (cfg and _extra(cfg, "criteria")) or sorted(CRITERIA)
    out = _out_dir(args, cfg)
    results = []
    for n in numbers:
        n = int(n)
        if n not in CRITERIA:
            raise ConfigurationError(f"no criterion {n}; choose from 1..{max(CRITERIA)}", key="criteria")
        res = run_criterion(n)
        results.append(res)
        _say(args, f"{res.line()}  ({res.seconds:.1f}s)")
        if res.table:
            cols = list(res.table[0])
            write_csv(out / f"criterion_{n:02d}.csv", cols, ([row[c] for c in cols] for row in res.table))
    write_csv(
        out / "verify.csv",
        ["criterion", "name", "passed", "value", "threshold", "detail"],
        ([r.number, r.name, r.passed, r.value, r.threshold, r.detail.replace(",", ";")] for r in results),
    )
    failed = [r.number for r in results if not r.passed]
    _say(args, f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


COMMANDS = {
    "run": cmd_run,
    "convergence": cmd_convergence,
    "decay-study": cmd_decay_study,
    "fode-table": cmd_fode_table,
    "harnack": cmd_harnack,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfpme", description="Time-fractional porous medium solver and checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "verify", help="YAML configuration file")
        p.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and output_dir)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        if name == "verify":
            p.add_argument("--criteria", type=int, nargs="+", help="subset of criteria to run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config) if args.config else None
        return COMMANDS[args.command](args, cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TfpmeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
