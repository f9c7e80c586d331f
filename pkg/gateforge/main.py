import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from loguru import logger

from .experiments import EXPERIMENTS, ExperimentReport
from .functionals import (
    ConfigurationError,
    evaluate_eta,
    evaluate_tau,
    evolution_residual_profile,
    gate_fidelity,
    s2s_residual_profile,
)
from .model import BasisMode, DimensionError, ModelError, build_initial_basis
from .optimizer import Approach, DivergenceError, OptimizerConfig, Scheme, default_initial_guess, optimize
from .propagation import PreconditionError, build_step_propagators, identity_rows, propagate_rows_forward
from .settings import settings
from .storage import (
    ModelFileError,
    load_field,
    load_model,
    save_field,
    write_json,
    write_records_csv,
    write_residuals_csv,
    write_trace_csv,
    write_trajectory_csv,
)
from .utils import configure_logging, ensure_output_dir, finish_run, recent_runs, safe_filename, start_run
from .worker import run_batch

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def resolve_seed(cli_seed: Optional[int]) -> int:
    if settings.SEED is not None:
        if cli_seed is not None and cli_seed != settings.SEED:
            logger.info(f"GATEFORGE_SEED={settings.SEED} overrides --seed {cli_seed}")
        return int(settings.SEED)
    return int(cli_seed) if cli_seed is not None else 0


@dataclass
class RunConfig:
    """One CLI invocation after its file and directory arguments were checked."""

    command: str
    out_dir: Optional[Path] = None
    model_path: Optional[Path] = None
    field_path: Optional[Path] = None
    experiment: Optional[str] = None
    verbosity: int = 0
    optimizer: Optional[OptimizerConfig] = None

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        run = cls(command=args.command, verbosity=args.verbose - args.quiet, experiment=getattr(args, "name", None))
        for attr, key in (("model_path", "model"), ("field_path", "field_path"), ("field_path", "initial_field")):
            value = getattr(args, key, None)
            if value is None:
                continue
            path = Path(value)
            if not path.is_file():
                raise ModelFileError(f"file not found: {path}")
            setattr(run, attr, path)
        if hasattr(args, "out"):
            run.out_dir = ensure_output_dir(args.out)
            if not os.access(run.out_dir, os.W_OK):
                raise ModelFileError(f"output directory is not writable: {run.out_dir}")
        return run

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "model_path": str(self.model_path) if self.model_path else None,
            "field_path": str(self.field_path) if self.field_path else None,
            "out_dir": str(self.out_dir) if self.out_dir else None,
            "experiment": self.experiment,
            "verbosity": self.verbosity,
            "optimizer": self.optimizer.to_dict() if self.optimizer else None,
        }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gateforge", description="Quantum-gate control field synthesis")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    parser.add_argument("-q", "--quiet", action="count", default=0, help="less log output (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")

    p = sub.add_parser("propagate", help="forward propagation report for a field")
    p.add_argument("model")
    p.add_argument("--field", dest="field_path", help="field JSON (default: seeded initial guess)")
    p.add_argument("--basis", choices=[m.value for m in BasisMode], default=BasisMode.PHASE_CORRECTED.value)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--dump-trajectory", action="store_true", help="also write trajectory.csv")

    p = sub.add_parser("optimize", help="optimize a control field")
    p.add_argument("model")
    p.add_argument("--approach", choices=[a.value for a in Approach], default=Approach.EVOLUTION.value)
    p.add_argument("--basis", choices=[m.value for m in BasisMode], default=BasisMode.PHASE_CORRECTED.value)
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.KROTOV.value)
    p.add_argument("--lambda", dest="lam", type=float, default=settings.DEFAULT_LAMBDA)
    p.add_argument("--max-iters", type=int, default=settings.DEFAULT_MAX_ITERS)
    p.add_argument("--stop-fidelity", type=float, default=settings.DEFAULT_STOP_FIDELITY)
    p.add_argument("--stop-update-norm", type=float, default=settings.DEFAULT_STOP_UPDATE_NORM)
    p.add_argument("--alpha", type=float, default=settings.DEFAULT_GRADIENT_STEP, help="gradient scheme step")
    p.add_argument("--initial-field", help="field JSON used as the initial guess")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("residual", help="stationarity residual profiles of a field")
    p.add_argument("model")
    p.add_argument("--field", dest="field_path", required=True)
    p.add_argument("--basis", choices=[m.value for m in BasisMode], default=BasisMode.PHASE_CORRECTED.value)
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS) + ["all"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=settings.WORKER_THREADS)
    p.add_argument("--out")

    p = sub.add_parser("history", help="list recent runs")
    p.add_argument("--limit", type=int, default=10)
    return parser


def cmd_validate(args, run: RunConfig) -> int:
    model, target, grid = load_model(run.model_path)
    print(f"OK: M={model.level_count} N={model.relevant_dim} T={grid.horizon} steps={grid.step_count}")
    return EXIT_OK


def cmd_propagate(args, run: RunConfig) -> int:
    model, target, grid = load_model(run.model_path)
    seed = resolve_seed(args.seed)
    field = load_field(run.field_path, grid) if run.field_path else default_initial_guess(model, grid, seed)
    props = build_step_propagators(model, field, grid)
    forward = propagate_rows_forward(model, field, grid, identity_rows(model), props)
    basis = build_initial_basis(args.basis, model.relevant_dim, model.level_count)
    t = evaluate_tau(model, field, grid, target, props)
    report = {
        "tau": t.to_dict(),
        "gate_fidelity": gate_fidelity(t),
        "realized_phase": t.realized_phase,
        "eta": evaluate_eta(model, field, grid, target, basis, props),
        "basis": basis.mode.value,
        "fluence": field.fluence(grid),
        "final_rows": [[[z.real, z.imag] for z in row] for row in forward.final],
    }
    out = run.out_dir
    write_json(out / "report.json", report)
    if args.dump_trajectory:
        write_trajectory_csv(out / "trajectory.csv", forward.rows, grid.nodes)
    print(f"|tau|/N={report['gate_fidelity']:.10f} Re tau={t.real:.10f} eta={report['eta']:.10f} -> {out}")
    return EXIT_OK


def cmd_optimize(args, run: RunConfig) -> int:
    model, target, grid = load_model(run.model_path)
    seed = resolve_seed(args.seed)
    initial = load_field(run.field_path, grid) if run.field_path else None
    config = OptimizerConfig(
        approach=args.approach,
        basis_mode=args.basis,
        scheme=args.scheme,
        lam=args.lam,
        max_iters=args.max_iters,
        stop_fidelity=args.stop_fidelity,
        stop_update_norm=args.stop_update_norm,
        alpha=args.alpha,
        initial_field=initial,
        rng_seed=seed,
    )
    run.optimizer = config
    out = run.out_dir
    run_id = start_run("optimize", str(run.model_path), str(out))
    try:
        result = optimize(model, target, grid, config)
    except DivergenceError as exc:
        finish_run(run_id, "error", error_message=str(exc))
        raise

    save_field(out / "field.json", result.field, grid)
    write_trace_csv(out / "trace.csv", result.trace.records)
    props = build_step_propagators(model, result.field, grid)
    basis = build_initial_basis(config.basis_mode, model.relevant_dim, model.level_count)
    write_residuals_csv(
        out / "residuals.csv",
        grid.nodes,
        evolution_residual_profile(model, result.field, grid, target, props),
        s2s_residual_profile(model, result.field, grid, target, basis, props),
    )
    summary = result.summary()
    summary["seed"] = seed
    summary["run"] = run.to_dict()
    write_json(out / "report.json", summary)
    text = (
        f"optimize {run.model_path}: {summary['stop_reason']} after {summary['iterations']} iterations\n"
        f"  fidelity={summary['fidelity']:.10f} Re tau={summary['re_tau']:.10f} eta={summary['eta']:.10f}\n"
        f"  residual_evolution={summary['residual_evolution']:.3e} residual_s2s={summary['residual_s2s']:.3e}\n"
        f"  realized phase={summary['realized_phase']:.6f} phi1={summary['phi1']:.6f}"
    )
    (out / "summary.txt").write_text(text + "\n", encoding="utf-8")
    print(text)
    finish_run(
        run_id,
        "done",
        fidelity=summary["fidelity"],
        re_tau=summary["re_tau"],
        iterations=summary["iterations"],
        stop_reason=summary["stop_reason"],
    )
    return EXIT_OK


def cmd_residual(args, run: RunConfig) -> int:
    model, target, grid = load_model(run.model_path)
    field = load_field(run.field_path, grid)
    basis = build_initial_basis(args.basis, model.relevant_dim, model.level_count)
    props = build_step_propagators(model, field, grid)
    evo = evolution_residual_profile(model, field, grid, target, props)
    s2s = s2s_residual_profile(model, field, grid, target, basis, props)
    out = run.out_dir
    write_residuals_csv(out / "residuals.csv", grid.nodes, evo, s2s)
    print(f"residual_evolution={float(evo.max()):.17g} residual_s2s={float(s2s.max()):.17g}")
    return EXIT_OK


def _write_experiment(report: ExperimentReport, out: Path):
    write_json(out / "report.json", report.to_dict())
    (out / "summary.txt").write_text(report.summary_text() + "\n", encoding="utf-8")
    for name, rows in report.curves.items():
        write_records_csv(out / f"{safe_filename(name)}.csv", rows)


def cmd_experiment(args, run: RunConfig) -> int:
    seed = resolve_seed(args.seed)
    out = run.out_dir
    names = sorted(EXPERIMENTS) if args.name == "all" else [args.name]
    run_id = start_run(f"experiment {args.name}", None, str(out))
    reports = run_batch(names, seed, args.workers)
    for report in reports:
        target_dir = out / report.name if len(reports) > 1 else out
        target_dir.mkdir(parents=True, exist_ok=True)
        _write_experiment(report, target_dir)
        print(report.summary_text())
    passed = all(r.passed for r in reports)
    finish_run(run_id, "passed" if passed else "failed")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_history(args, run: RunConfig) -> int:
    runs = recent_runs(args.limit)
    if not runs:
        print("no runs recorded")
    for r in runs:
        fid = f"{r['fidelity']:.6f}" if r["fidelity"] is not None else "-"
        print(f"{r['created_at']}  {r['id'][:8]}  {r['status']:<7}  {r['command']:<24}  fidelity={fid}  {r['out_dir'] or ''}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "propagate": cmd_propagate,
    "optimize": cmd_optimize,
    "residual": cmd_residual,
    "experiment": cmd_experiment,
    "history": cmd_history,
}


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    configure_logging(args.verbose - args.quiet)
    try:
        run = RunConfig.from_args(args)
        return COMMANDS[args.command](args, run)
    except ModelError as exc:
        logger.error("model is invalid:")
        for problem in exc.problems:
            logger.error(f"  {problem}")
        return EXIT_USAGE
    except (ModelFileError, DimensionError, ConfigurationError, PreconditionError) as exc:
        logger.error(str(exc))
        return EXIT_USAGE
    except DivergenceError as exc:
        logger.error(f"optimization diverged: {exc}")
        return EXIT_FAILED


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
