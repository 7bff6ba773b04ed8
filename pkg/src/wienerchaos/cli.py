"""Command-line entry point: ``wienerchaos {solve,verify,classify,sample}``.

Exit codes: 0 success, 1 usage or runtime error, 2 a check missed its threshold.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import acceptance, chaos_field as cf
from .config import ConfigError, ScenarioConfig, load_config, serialize
from .discretization import (
    DegenerateParabolicity,
    coercivity_constant,
    parabolicity_classify,
    suggest_weights,
    write_field_csv,
)
from .multiindex import WeightSequence
from .propagator import (
    TruncationWarning,
    energy_curves,
    export_solution,
    solve,
    truncation_diagnostics,
)
from .scenarios import Problem, build_problem
from .stochastic_basis import GaussianSample, draw_sample

EXIT_OK, EXIT_ERROR, EXIT_THRESHOLD = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 is reserved for failed thresholds."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wienerchaos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML scenario file")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides oracle.seed)")
        p.add_argument("--order", type=int, help="truncation order N (overrides truncation.N)")
        p.add_argument("--paths", type=int, help="Monte Carlo paths (overrides oracle.paths)")

    common(sub.add_parser("solve", help="run a scenario and write coefficients, moments and reports"))
    p = sub.add_parser("verify", help="run acceptance checks and write a pass/fail summary")
    common(p, config_required=False)
    p.add_argument("--all", action="store_true", help="run the full suite at the reference configurations")
    common(sub.add_parser("classify", help="parabolicity class, coercivity constant and suggested weights"))
    p = sub.add_parser("sample", help="draw Gaussian samples and evaluate the solution pathwise")
    common(p)
    p.add_argument("--count", type=int, default=4, help="number of samples (default 4)")
    return parser


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, order=args.order, paths=args.paths, out=args.out)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_artifacts(out: Path, results) -> None:
    for res in results:
        for name, obj in res.artifacts.items():
            target = out / name
            if name.endswith(".json"):
                target.write_text(obj.to_json())
            else:
                obj.to_csv(target)


def _summary(results, extra: dict | None = None) -> dict:
    out = {"passed": all(r.passed for r in results), "checks": [r.as_dict(timing=False) for r in results]}
    out.update(extra or {})
    return out


def _classification(problem: Problem) -> dict:
    spec, grid, T = problem.spec, problem.grid, problem.tgrid.T
    ones = WeightSequence.ones(spec.K)
    info = {"unweighted": parabolicity_classify(spec, ones, grid, T=T).as_dict(),
            "C2_unweighted": coercivity_constant(spec, ones, grid, T=T)}
    try:
        Q = problem.weights()
    except DegenerateParabolicity as exc:
        info["weights_error"] = str(exc)
        return info
    info["weights"] = list(Q.q)
    info["weighted"] = parabolicity_classify(spec, Q, grid, T=T).as_dict()
    info["C2_weighted"] = coercivity_constant(spec, Q, grid, T=T)
    try:
        info["suggested_weights"] = list(suggest_weights(spec, problem.config.weights.epsilon, grid, T=T).q)
    except DegenerateParabolicity as exc:
        info["suggested_weights"] = None
        info["suggest_error"] = str(exc)
    return info


def run_scenario(cfg: ScenarioConfig) -> int:
    """Classify, solve, write diagnostics and run the scenario's comparisons."""
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(cfg)
    classification = _classification(problem)
    Q = WeightSequence(tuple(classification["weights"])) if "weights" in classification else WeightSequence.ones(problem.spec.K)
    t_eval = problem.t_eval
    sol = solve(problem.spec, problem.grid, problem.tgrid, problem.basis, problem.index_set, problem.u0,
                theta=cfg.time.theta, store=[t_eval])
    (out / "config.toml").write_text(serialize(cfg))
    export_solution(sol, out, times=[t_eval], extra={
        "config_digest": cfg.digest(), "scenario": cfg.scenario, "seed": cfg.oracle.seed,
        "classification": classification})
    cf.moments(sol, t_eval).to_csv(out / "moments.csv", problem.grid)

    F = energy_curves(sol)
    FQ = energy_curves(sol, Q)
    cols = ["t"] + [f"F{n}" for n in range(sol.N + 1)] + ["total", "weighted_total"]
    rows = np.column_stack([sol.tgrid.nodes, F, F.sum(axis=1), FQ.sum(axis=1)])
    with open(out / "energy.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    tails = {}
    if sol.N >= 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            tails["unweighted"] = truncation_diagnostics(sol, None, t_eval).as_dict()
            tails["weighted"] = truncation_diagnostics(sol, Q, t_eval).as_dict()
    results = acceptance.scenario_checks(cfg)
    _write_artifacts(out, results)
    _write_json(out / "report.json", _summary(results, {"tail": tails, "classification": classification}))
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_THRESHOLD


def run_verify(cfg: ScenarioConfig | None, full: bool, paths: int | None, out: str | None) -> int:
    results = acceptance.full_suite(paths=paths) if full else acceptance.scenario_checks(cfg)
    for r in results:
        print(r.line())
    target = Path(out or (cfg.output.dir if cfg else "out"))
    target.mkdir(parents=True, exist_ok=True)
    _write_artifacts(target, results)
    _write_json(target / "summary.json", _summary(results, {"config_digest": cfg.digest() if cfg else None}))
    return EXIT_OK if all(r.passed for r in results) else EXIT_THRESHOLD


def run_sample(cfg: ScenarioConfig, count: int) -> int:
    problem = build_problem(cfg)
    out = Path(cfg.output.dir)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    t = problem.t_eval
    sol = solve(problem.spec, problem.grid, problem.tgrid, problem.basis, problem.index_set, problem.u0,
                theta=cfg.time.theta, store=[t])
    tr = cfg.truncation
    columns = {}
    for s in range(count):
        sample = draw_sample(tr.I, tr.K, cfg.oracle.seed, s)
        sample.to_csv(out / "samples" / f"sample_{s:05d}.csv")
        columns[f"sample_{s}"] = cf.evaluate_sample(sol, GaussianSample(sample.xi), t)
    write_field_csv(out / "pathwise.csv", problem.grid, columns)
    print(f"wrote {count} samples and pathwise fields at t={t:g} to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            cfg = _load(args) if args.config else None
            if cfg is None and not args.all:
                parser.error("verify needs --config or --all")
            return run_verify(cfg, args.all, args.paths, args.out)
        cfg = _load(args)
        if args.command == "solve":
            return run_scenario(cfg)
        if args.command == "classify":
            info = _classification(build_problem(cfg))
            print(json.dumps(info, indent=2, sort_keys=True))
            return EXIT_OK
        return run_sample(cfg, args.count)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"wienerchaos: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"wienerchaos: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
