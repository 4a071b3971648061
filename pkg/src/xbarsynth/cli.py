"""Command-line design flow.

Wires the stages together: load or synthesize a trace, window-profile it,
aggregate overlaps, derive the conflict matrix, search the smallest
feasible bus count, bind targets to buses, and validate the result with
the contention simulator against shared-bus and full-crossbar baselines.
Experiment sweeps (window size, overlap threshold, random-vs-optimal
binding) reuse the same pipeline per point.

All artifacts are plain CSV or JSON plus a key = value manifest; for a
fixed RunConfig (seed included) every artifact is byte-reproducible.

Exit codes: 0 success, 1 usage error, 2 infeasible instance, 3 solver
limit hit (incumbent, if any, still written and flagged).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import AnalysisParams, WindowProfile, aggregate_overlap, preprocess, profile
from .gen import GenError, GenSpec, PRESET_NAMES, benchmark_preset, generate, spec_from_text
from .lpexport import export_milp
from .sim import CompareRow, baseline_configs, compare, simulate
from .solver import (
    CrossbarConfig,
    InfeasibleError,
    ProblemInstance,
    SolveReport,
    SolverLimitReached,
    SolverLimits,
    build_instance,
    full_crossbar_config,
    min_config,
    optimal_binding,
    shared_bus_config,
    validate_binding,
)
from .trace import REQUEST, Trace, TraceError, load_trace, save_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3

# compare-bindings gives up after this many rejected samples per accepted
# one; hitting it means the feasible set is a sliver of the sample space.
MAX_REJECTIONS_PER_SAMPLE = 1000


@dataclass
class RunConfig:
    """Everything a pipeline run depends on."""

    trace_path: Path | None
    genspec: GenSpec | None
    params: AnalysisParams
    direction: str = REQUEST
    limits: SolverLimits = SolverLimits()
    out_dir: Path = Path(".")
    seed: int = 0
    buses_override: int | None = None
    source_label: str = ""

    def resolve_trace(self) -> Trace:
        if self.trace_path is not None:
            return load_trace(self.trace_path, direction=self.direction)
        if self.genspec is not None:
            return generate(self.genspec)
        raise ValueError("RunConfig needs a trace path or a GenSpec")


@dataclass
class DesignOutcome:
    status: int
    message: str
    trace: Trace
    prof: WindowProfile
    om: np.ndarray
    conflict: np.ndarray
    instance: ProblemInstance
    report: SolveReport | None
    rows: list[CompareRow]
    artifacts: dict[str, Path]


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _write_matrix_csv(path: Path, mat: np.ndarray, col_prefix: str) -> None:
    t = mat.shape[0]
    header = ["target"] + [f"{col_prefix}{j + 1}" for j in range(mat.shape[1])]
    rows = [[f"t_{i + 1}"] + [int(v) for v in mat[i]] for i in range(t)]
    _write_csv(path, header, rows)


def _write_manifest(path: Path, items: list[tuple[str, object]]) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in items:
            fh.write(f"{k} = {_fmt(v)}\n")


def _manifest_params(run: RunConfig) -> list[tuple[str, object]]:
    return [
        ("trace", run.source_label),
        ("direction", run.direction),
        ("window_size", run.params.window_size),
        ("overlap_threshold", run.params.overlap_threshold),
        ("max_targets_per_bus", run.params.max_targets_per_bus or "auto"),
        ("time_limit_s", run.limits.time_limit_s or "none"),
        ("seed", run.seed),
    ]


def analyze(run: RunConfig) -> dict[str, Path]:
    """Write comm, overlap, and conflict matrices for inspection."""
    trace = run.resolve_trace()
    prof = profile(trace, run.params.window_size)
    om = aggregate_overlap(prof)
    conflict = preprocess(prof, run.params)
    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {
        "comm": out / "comm.csv",
        "overlap": out / "overlap.csv",
        "conflict": out / "conflict.csv",
    }
    _write_matrix_csv(artifacts["comm"], prof.comm, "w")
    _write_matrix_csv(artifacts["overlap"], om, "t_")
    _write_matrix_csv(artifacts["conflict"], conflict.astype(int), "t_")
    manifest = out / "manifest.txt"
    _write_manifest(
        manifest,
        [("tool", "xbarsynth analyze")]
        + _manifest_params(run)
        + [("artifact_" + k, v.name) for k, v in artifacts.items()],
    )
    artifacts["manifest"] = manifest
    return artifacts


def design(run: RunConfig) -> DesignOutcome:
    """Full pipeline; always writes whatever artifacts exist at failure."""
    trace = run.resolve_trace()
    prof = profile(trace, run.params.window_size)
    om = aggregate_overlap(prof)
    conflict = preprocess(prof, run.params)
    inst = build_instance(prof, om, conflict, run.params)

    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {"conflict": out / "conflict.csv"}
    _write_matrix_csv(artifacts["conflict"], conflict.astype(int), "t_")

    status, message = EXIT_OK, "ok"
    report: SolveReport | None = None
    rows: list[CompareRow] = []
    try:
        if run.buses_override is not None:
            report = optimal_binding(inst, run.buses_override, run.limits)
        else:
            buses, probes = min_config(inst, run.limits)
            report = optimal_binding(inst, buses, run.limits)
            report.feasibility_probes = probes + report.feasibility_probes
        if not report.optimal:
            status = EXIT_LIMIT
            message = "solver limit hit; incumbent binding returned, optimality unproven"
    except InfeasibleError as exc:
        status, message = EXIT_INFEASIBLE, str(exc)
    except SolverLimitReached as exc:
        status, message = EXIT_LIMIT, str(exc)
        report = exc.incumbent

    if report is not None:
        violations = validate_binding(inst, report.config)
        if violations:
            raise RuntimeError(
                "designed binding failed re-validation: " + "; ".join(violations)
            )
        artifacts["report"] = out / "solve_report.json"
        with open(artifacts["report"], "w", newline="") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        configs = [
            ("shared", shared_bus_config(trace.num_targets)),
            ("designed", report.config),
            ("full", full_crossbar_config(trace.num_targets)),
        ]
        rows = compare(trace, configs)
        artifacts["comparison"] = out / "comparison.csv"
        _write_csv(
            artifacts["comparison"],
            ["name", "num_buses", "avg_latency", "max_latency", "size_ratio"],
            [
                [r.name, r.num_buses, _fmt(r.avg_latency), r.max_latency, _fmt(r.size_ratio)]
                for r in rows
            ],
        )

    manifest_items = [("tool", "xbarsynth design")] + _manifest_params(run)
    manifest_items += [
        ("status", {EXIT_OK: "ok", EXIT_INFEASIBLE: "infeasible", EXIT_LIMIT: "limit"}[status]),
        ("message", message),
    ]
    if report is not None:
        manifest_items += [
            ("num_buses", report.config.num_buses),
            ("maxov", report.maxov),
            ("binding", ",".join(str(b) for b in report.config.binding)),
            ("optimal", report.optimal),
        ]
    manifest_items += [("artifact_" + k, p.name) for k, p in sorted(artifacts.items())]
    manifest = out / "manifest.txt"
    _write_manifest(manifest, manifest_items)
    artifacts["manifest"] = manifest
    return DesignOutcome(
        status, message, trace, prof, om, conflict, inst, report, rows, artifacts
    )


def sweep_window(run: RunConfig, ws_list: list[int]) -> Path:
    """One design() per window size; failures become in-row status text."""
    if not ws_list:
        raise ValueError("ws_list must be nonempty")
    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for ws in ws_list:
        point = replace(
            run,
            params=replace(run.params, window_size=int(ws)),
            out_dir=out / f"ws_{ws}",
        )
        try:
            outcome = design(point)
        except (TraceError, GenError, ValueError) as exc:
            rows.append([ws, "", "", "", f"error: {exc}"])
            continue
        if outcome.report is None:
            rows.append([ws, "", "", "", outcome.message])
            continue
        designed = next(r for r in outcome.rows if r.name == "designed")
        rows.append(
            [
                ws,
                outcome.report.config.num_buses,
                _fmt(designed.avg_latency),
                designed.max_latency,
                "ok" if outcome.status == EXIT_OK else outcome.message,
            ]
        )
    path = out / "sweep_window.csv"
    _write_csv(path, ["window_size", "bus_count", "avg_latency", "max_latency", "status"], rows)
    return path


def sweep_threshold(run: RunConfig, theta_list: list[float]) -> Path:
    """One design() per overlap threshold."""
    if not theta_list:
        raise ValueError("theta_list must be nonempty")
    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for theta in theta_list:
        label = _fmt(float(theta))
        point = replace(
            run,
            params=replace(run.params, overlap_threshold=float(theta)),
            out_dir=out / f"theta_{label}",
        )
        try:
            outcome = design(point)
        except (TraceError, GenError, ValueError) as exc:
            rows.append([label, "", "", f"error: {exc}"])
            continue
        pairs = int(np.triu(outcome.conflict, k=1).sum())
        bus_count = outcome.report.config.num_buses if outcome.report else ""
        rows.append(
            [label, bus_count, pairs, "ok" if outcome.status == EXIT_OK else outcome.message]
        )
    path = out / "sweep_threshold.csv"
    _write_csv(path, ["overlap_threshold", "bus_count", "conflict_pairs", "status"], rows)
    return path


def random_feasible_binding(
    inst: ProblemInstance, num_buses: int, rng: np.random.Generator
) -> CrossbarConfig | None:
    """Uniform rejection sampling over all bindings into num_buses buses."""
    for _ in range(MAX_REJECTIONS_PER_SAMPLE):
        binding = tuple(int(b) for b in rng.integers(1, num_buses + 1, inst.num_targets))
        config = CrossbarConfig(num_buses, binding)
        if not validate_binding(inst, config):
            return config
    return None


@dataclass
class BindingComparison:
    optimal_avg: float
    random_avgs: list[float]
    mean_ratio: float
    csv_path: Path


def compare_bindings(run: RunConfig, num_random: int) -> BindingComparison:
    """Simulate the optimal binding against uniformly random feasible ones."""
    if num_random < 1:
        raise ValueError("num_random must be >= 1")
    outcome = design(run)
    if outcome.report is None:
        raise InfeasibleError(f"design failed: {outcome.message}")
    inst, trace = outcome.instance, outcome.trace
    best = outcome.report.config
    opt_avg = simulate(trace, best).avg_latency
    rng = np.random.Generator(np.random.PCG64(run.seed))
    rows = [["optimal", _fmt(opt_avg), _fmt(1.0)]]
    ratios = []
    random_avgs = []
    for k in range(num_random):
        config = random_feasible_binding(inst, best.num_buses, rng)
        if config is None:
            raise InfeasibleError(
                f"no feasible random binding found in {MAX_REJECTIONS_PER_SAMPLE} "
                f"draws (sample {k + 1}/{num_random}); instance is very tight"
            )
        avg = simulate(trace, config).avg_latency
        random_avgs.append(avg)
        ratio = avg / opt_avg if opt_avg > 0 else float("inf")
        ratios.append(ratio)
        rows.append([f"random_{k + 1}", _fmt(avg), _fmt(ratio)])
    mean_ratio = float(np.mean(ratios))
    rows.append(["random_mean", _fmt(float(np.mean(random_avgs))), _fmt(mean_ratio)])
    out = run.out_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / "binding_compare.csv"
    _write_csv(path, ["scheme", "avg_latency", "ratio_vs_optimal"], rows)
    return BindingComparison(opt_avg, random_avgs, mean_ratio, path)


def _parse_binding(text: str, num_targets: int) -> tuple[int, ...]:
    try:
        binding = tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ValueError(f"bad --binding {text!r}: expected comma-separated bus ids") from exc
    if len(binding) != num_targets:
        raise ValueError(
            f"--binding lists {len(binding)} targets, trace has {num_targets}"
        )
    return binding


def _add_common(p: argparse.ArgumentParser, needs_analysis: bool = True) -> None:
    src = p.add_argument_group("input")
    src.add_argument("--trace", type=Path, help="trace CSV path")
    src.add_argument("--preset", choices=PRESET_NAMES, help="synthetic benchmark preset")
    src.add_argument("--config", type=Path, help="GenSpec key=value file")
    src.add_argument(
        "--direction",
        choices=("req", "resp"),
        default="req",
        help="which flow of a trace file to design for (default req)",
    )
    src.add_argument("--seed", type=int, default=None, help="override generator seed")
    p.add_argument("--out-dir", type=Path, default=Path("xbarsynth_out"))
    if needs_analysis:
        grp = p.add_argument_group("analysis")
        grp.add_argument("--window-size", type=int, default=1000)
        grp.add_argument("--overlap-threshold", type=float, default=0.3)
        grp.add_argument("--max-targets-per-bus", type=int, default=None)
        grp.add_argument("--time-limit", type=float, default=None, help="solver seconds")
        grp.add_argument("--buses", type=int, default=None, help="fix the bus count")


def _run_from_args(args) -> RunConfig:
    picked = [x for x in (args.trace, args.preset, args.config) if x is not None]
    if len(picked) != 1:
        raise ValueError("exactly one of --trace, --preset, --config is required")
    genspec = None
    label = ""
    if args.preset:
        genspec = benchmark_preset(args.preset)
        label = f"preset:{args.preset}"
    elif args.config:
        genspec = spec_from_text(Path(args.config).read_text())
        label = f"config:{args.config}"
    else:
        label = str(args.trace)
    if genspec is not None and args.seed is not None:
        genspec = replace(genspec, seed=args.seed)
    params = AnalysisParams(
        window_size=getattr(args, "window_size", 1),
        overlap_threshold=getattr(args, "overlap_threshold", 0.3),
        max_targets_per_bus=getattr(args, "max_targets_per_bus", None),
    )
    limits = SolverLimits(time_limit_s=getattr(args, "time_limit", None))
    seed = args.seed if args.seed is not None else (genspec.seed if genspec else 0)
    return RunConfig(
        trace_path=args.trace,
        genspec=genspec,
        params=params,
        direction=args.direction,
        limits=limits,
        out_dir=args.out_dir,
        seed=seed,
        buses_override=getattr(args, "buses", None),
        source_label=label,
    )


def _cmd_gen(args) -> int:
    run = _run_from_args(args)
    if run.genspec is None:
        print("gen requires --preset or --config", file=sys.stderr)
        return EXIT_USAGE
    trace = generate(run.genspec)
    run.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out if args.out else run.out_dir / "trace.csv"
    save_trace(trace, out)
    print(f"wrote {len(trace.transactions)} transactions to {out}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    run = _run_from_args(args)
    artifacts = analyze(run)
    for name, path in sorted(artifacts.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def _cmd_design(args) -> int:
    run = _run_from_args(args)
    outcome = design(run)
    if outcome.report is not None:
        cfg = outcome.report.config
        print(
            f"buses: {cfg.num_buses}  maxov: {outcome.report.maxov}  "
            f"binding: {','.join(str(b) for b in cfg.binding)}"
        )
        for r in outcome.rows:
            print(
                f"  {r.name:>8}: buses={r.num_buses} avg={r.avg_latency:.2f} "
                f"max={r.max_latency} size_ratio={r.size_ratio:.1f}"
            )
    if outcome.status != EXIT_OK:
        print(outcome.message, file=sys.stderr)
    return outcome.status


def _cmd_simulate(args) -> int:
    run = _run_from_args(args)
    trace = run.resolve_trace()
    configs = baseline_configs(trace.num_targets)
    if args.binding:
        binding = _parse_binding(args.binding, trace.num_targets)
        num_buses = args.buses if args.buses else max(binding)
        configs.append(("bound", CrossbarConfig(num_buses, binding)))
    run.out_dir.mkdir(parents=True, exist_ok=True)
    report_rows = []
    for name, config in configs:
        rep = simulate(trace, config)
        for idx, lat in enumerate(rep.per_transaction_latency):
            report_rows.append([name, idx, lat])
        print(
            f"{name:>8}: buses={config.num_buses} avg={rep.avg_latency:.2f} "
            f"max={rep.max_latency} queuing={rep.avg_queuing:.2f}"
        )
    _write_csv(run.out_dir / "latency.csv", ["config", "txn", "latency"], report_rows)
    return EXIT_OK


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _cmd_sweep_window(args) -> int:
    run = _run_from_args(args)
    if args.ws_list:
        ws_list = [int(float(v)) for v in _parse_float_list(args.ws_list)]
    else:
        base = args.window_size
        ws_list = [max(1, int(base * f)) for f in (0.25, 0.5, 1, 2, 4, 8)]
    path = sweep_window(run, ws_list)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_sweep_threshold(args) -> int:
    run = _run_from_args(args)
    thetas = _parse_float_list(args.theta_list) if args.theta_list else [0.1, 0.2, 0.3, 0.4, 0.5]
    path = sweep_threshold(run, thetas)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_compare_bindings(args) -> int:
    run = _run_from_args(args)
    result = compare_bindings(run, args.num_random)
    print(
        f"optimal avg {result.optimal_avg:.2f}; mean random/optimal ratio "
        f"{result.mean_ratio:.3f} over {len(result.random_avgs)} samples"
    )
    print(f"wrote {result.csv_path}")
    return EXIT_OK


def _cmd_export_lp(args) -> int:
    run = _run_from_args(args)
    trace = run.resolve_trace()
    prof = profile(trace, run.params.window_size)
    om = aggregate_overlap(prof)
    conflict = preprocess(prof, run.params)
    inst = build_instance(prof, om, conflict, run.params)
    if args.buses:
        buses = args.buses
    else:
        buses, _ = min_config(inst, run.limits)
    text = export_milp(inst, buses)
    run.out_dir.mkdir(parents=True, exist_ok=True)
    path = run.out_dir / "model.lp"
    path.write_text(text)
    print(f"wrote {path} ({buses} buses)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="xbarsynth",
        description="partial crossbar synthesis from communication traces",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic trace CSV")
    _add_common(g, needs_analysis=False)
    g.add_argument("--out", type=Path, help="trace output path")
    g.set_defaults(func=_cmd_gen)

    a = sub.add_parser("analyze", help="write comm/overlap/conflict matrices")
    _add_common(a)
    a.set_defaults(func=_cmd_analyze)

    d = sub.add_parser("design", help="run the full synthesis pipeline")
    _add_common(d)
    d.set_defaults(func=_cmd_design)

    s = sub.add_parser("simulate", help="replay a trace on baseline or given bindings")
    _add_common(s, needs_analysis=False)
    s.add_argument("--binding", help="comma-separated bus id per target")
    s.add_argument("--buses", type=int, default=None)
    s.set_defaults(func=_cmd_simulate)

    sw = sub.add_parser("sweep-window", help="design at several window sizes")
    _add_common(sw)
    sw.add_argument("--ws-list", help="comma-separated window sizes (cycles)")
    sw.set_defaults(func=_cmd_sweep_window)

    st = sub.add_parser("sweep-threshold", help="design at several overlap thresholds")
    _add_common(st)
    st.add_argument("--theta-list", help="comma-separated thresholds in (0, 0.5]")
    st.set_defaults(func=_cmd_sweep_threshold)

    cb = sub.add_parser("compare-bindings", help="optimal vs random feasible bindings")
    _add_common(cb)
    cb.add_argument("--num-random", type=int, default=10)
    cb.set_defaults(func=_cmd_compare_bindings)

    lp = sub.add_parser("export-lp", help="write the MILP in LP text format")
    _add_common(lp)
    lp.set_defaults(func=_cmd_export_lp)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverLimitReached as exc:
        print(f"solver limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (TraceError, GenError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
