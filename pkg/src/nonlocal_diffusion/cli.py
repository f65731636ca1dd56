"""Command line entry point: ``nldiff simulate | verify | kernels | sweep``.

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, dump_config, expand_sweep, load_config
from .entropy import SCHEMA_VERSION, run_verification
from .errors import ConfigError, DomainError, SchemeError, UsageError
from .io import read_solution_csv, write_columns_csv, write_json, write_matrix_csv, write_solution_csv
from .kernels import sonine_values
from .timestepper import DiscreteSolution, approx_driver, solve
from .volterra import solve_s_lambda

log = logging.getLogger("nldiff")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

KERNEL_COLUMNS = ("t", "k", "l", "k_conv_l")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _figures(cfg: RunConfig, args) -> bool:
    return cfg.figures and not getattr(args, "no_figures", False)


def simulate(cfg: RunConfig, figures: bool = True, export_operator: bool = False) -> dict:
    """Solve, write ``solution.csv`` and ``report.json``; returns the report."""
    out = _out_dir(cfg)
    problem = cfg.problem()
    sol = solve(problem)
    write_solution_csv(out / "solution.csv", sol.t, sol.x, sol.u)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "version": __version__,
        "config": cfg.describe(),
        "grid": {"N": problem.grid.N, "h": problem.grid.h, "n": problem.time.n, "tau": problem.tau},
        "max_step_residual": float(np.max(sol.step_residuals)),
        "min_value": float(np.min(sol.u)),
        "nonnegative": bool(np.all(sol.u >= 0)),
        "files": ["solution.csv"],
    }
    if cfg.levels:
        seq = approx_driver(problem, cfg.levels)
        for m, s in zip(seq.levels, seq.solutions):
            name = f"solution_m{m:g}.csv"
            write_solution_csv(out / name, s.t, s.x, s.u)
            report["files"].append(name)
        report["approximation"] = {
            "levels": list(seq.levels),
            "monotone_violations": seq.violations,
            "max_violation": seq.max_violation,
            "min_value": seq.min_value,
            "l1_norms": list(seq.l1_norms),
            "l1_bound": seq.l1_bound,
        }
    if export_operator:
        write_matrix_csv(out / "operator.csv", problem.operator().entries)
        report["files"].append("operator.csv")
    if figures:
        from .plotting import plot_solution

        plot_solution(sol.t, sol.x, sol.u, out / "solution.png")
        report["files"].append("solution.png")
    write_json(out / "report.json", report)
    return report


def _load_solution(cfg: RunConfig, path: Path, problem) -> DiscreteSolution:
    t, x, u = read_solution_csv(path)
    if u.shape != (problem.time.n + 1, problem.grid.N) or not (
        np.allclose(t, problem.time.nodes, rtol=1e-12, atol=1e-14)
        and np.allclose(x, problem.grid.nodes, rtol=1e-12, atol=1e-14)
    ):
        raise UsageError(
            f"{path}: grid ({len(t)} times x {len(x)} nodes) does not match the config "
            f"({problem.time.n + 1} x {problem.grid.N})"
        )
    return DiscreteSolution(
        u=u, x=x, t=t, tau=problem.tau, h=problem.grid.h, s=problem.s,
        kernel=problem.pair.describe(), step_residuals=np.zeros(len(t)),
    )


def verify(cfg: RunConfig, solution_path=None, tolerance_scale=None, figures=True):
    """Run the selected suites; writes ``entropy_report.json``."""
    out = _out_dir(cfg)
    problem = cfg.problem()
    path = solution_path or cfg.solution
    if path is None and (out / "solution.csv").exists():
        path = out / "solution.csv"
    sol = _load_solution(cfg, Path(path), problem) if path is not None else solve(problem)
    scale = cfg.tolerance_scale if tolerance_scale is None else tolerance_scale
    report = run_verification(
        sol, problem, cfg.suites, tolerance_scale=scale,
        levels=cfg.verify_levels, split_cuts=cfg.split_cuts,
    )
    report.grid["solution"] = str(path) if path is not None else "computed"
    report.to_json(out / "entropy_report.json")
    if figures:
        from .plotting import plot_report

        plot_report(report, out / "entropy_report.png")
    return report


def kernels(cfg: RunConfig, figures: bool = True) -> dict:
    """Dump ``t, k, l, k_conv_l, s_lambda_<lam>, k_lambda_<lam>`` on ``t_1..t_n``."""
    out = _out_dir(cfg)
    pair, grid = cfg.pair(), cfg.time()
    t = grid.nodes[1:]
    cols = {
        "t": t,
        "k": pair.k(t),
        "l": pair.l(t),
        "k_conv_l": sonine_values(pair, t, cells=max(grid.n, 64)),
    }
    for lam in cfg.lambdas:
        fam = solve_s_lambda(pair, lam, grid)
        cols[f"s_lambda_{lam:g}"] = fam.s_values[1:]
        cols[f"k_lambda_{lam:g}"] = fam.klambda_values[1:]
    write_columns_csv(out / "kernels.csv", cols)
    if figures:
        from .plotting import plot_kernels

        plot_kernels(cols, out / "kernels.png")
    return cols


def _sweep_one(job):
    idx, params, cfg, figures, scale = job
    sim = simulate(cfg, figures=figures)
    rep = verify(cfg, tolerance_scale=scale, figures=figures)
    row = {"run": f"run_{idx:03d}", **params, "passed": rep.passed,
           "max_step_residual": sim["max_step_residual"], "failures": len(rep.failures())}
    return row


def sweep(cfg: RunConfig, threads: int = 1, figures: bool = True, tolerance_scale=None) -> list:
    root = _out_dir(cfg)
    jobs = []
    for i, (params, sub) in enumerate(expand_sweep(cfg)):
        run_dir = root / f"run_{i:03d}"
        sub = replace(sub, out_dir=run_dir, solution=None)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "config.ini").write_text(dump_config(sub))
        jobs.append((i, params, sub, figures, tolerance_scale))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(_sweep_one, jobs))
    keys = list(rows[0])
    with open(root / "sweep.csv", "w") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(str(r[k]) for k in keys) + "\n")
    if figures:
        from .plotting import plot_sweep

        plot_sweep(rows, root / "sweep.png")
    return rows


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI run configuration (default: built-in demo)")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    common.add_argument("--tolerance-scale", type=float, help="multiply every verification tolerance")
    common.add_argument("--threads", type=int, default=1, help="parallel runs in sweep mode")
    common.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nldiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="solve and write solution.csv")
    p.add_argument("--export-operator", action="store_true", help="also write operator.csv")
    p = sub.add_parser("verify", parents=[common], help="certify a solution")
    p.add_argument("--solution", type=Path, help="solution CSV (default: <out>/solution.csv or solve)")
    sub.add_parser("kernels", parents=[common], help="dump kernel diagnostics")
    sub.add_parser("sweep", parents=[common], help="run a [sweep] parameter grid")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.tolerance_scale is not None and not args.tolerance_scale > 0:
            raise ConfigError("--tolerance-scale", "must be positive")
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        figs = _figures(cfg, args)
        if args.command == "simulate":
            rep = simulate(cfg, figures=figs, export_operator=args.export_operator)
            print(f"wrote {cfg.out_dir}/solution.csv (max step residual {rep['max_step_residual']:.3e})")
            return EXIT_OK
        if args.command == "verify":
            rep = verify(cfg, args.solution, args.tolerance_scale, figures=figs)
            n_fail = len(rep.failures())
            print(f"{len(rep.checks) - n_fail}/{len(rep.checks)} checks passed")
            for c in rep.failures():
                print(f"VIOLATED {c.name}: residual {c.residual:.3e} > tolerance {c.tolerance:.3e}")
            return EXIT_OK if rep.passed else EXIT_FAIL
        if args.command == "kernels":
            kernels(cfg, figures=figs)
            print(f"wrote {cfg.out_dir}/kernels.csv")
            return EXIT_OK
        rows = sweep(cfg, args.threads, figs, args.tolerance_scale)
        failed = [r["run"] for r in rows if not r["passed"]]
        print(f"{len(rows) - len(failed)}/{len(rows)} runs passed")
        return EXIT_OK if not failed else EXIT_FAIL
    except (ConfigError, UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SchemeError as exc:
        print(f"scheme error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
