"""Command-line harness: generate streams, run pipelines, benchmark, tune.

Every command is a pure function of (input files, config, seed) to output
files; a manifest recording the exact invocation is dropped into each output
directory.  Wall-clock timings are opt-in (--timing) so default outputs stay
byte-identical across reruns.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__, config as cfgmod, datagen
from .core import ConfigError, DataError
from .evaluation import evaluate_log
from .pipeline import run_stream
from .tune import sequd_search

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

REPORT_SCHEMA = "# driftguard-report v1"
DECISIONS_SCHEMA = "# driftguard-decision-log v1"
BENCH_SCHEMA = "# driftguard-bench v1"
PLOT_SCHEMA = "# driftguard-plot-data v1"
TRACE_SCHEMA = "# driftguard-tune-trace v1"
TIMING_SCHEMA = "# driftguard-timing v1"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, schema: str, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        fh.write(schema + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_manifest(out_dir: Path, command: str, args: argparse.Namespace, extra: dict | None = None) -> None:
    config_path = getattr(args, "config", None)
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config_path": str(config_path) if config_path else "",
        "config_sha256": "",
        "inputs": [],
        "out_dir": str(out_dir),
        "seed": getattr(args, "seed", None),
    }
    if config_path and Path(config_path).exists():
        manifest["config_sha256"] = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    for attr in ("stream", "truth"):
        value = getattr(args, attr, None)
        if value:
            manifest["inputs"].append(str(value))
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_rows(report) -> tuple[list[str], list]:
    flat = report.flat()
    header = sorted(flat)
    return header, [flat[k] for k in header]


def _write_report(out: Path, report) -> None:
    header, row = _report_rows(report)
    write_csv(out / "report.csv", REPORT_SCHEMA, header, [row])
    record = {"schema": REPORT_SCHEMA.lstrip("# "), **dict(zip(header, row))}
    (out / "report.json").write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")


def _write_decisions(out: Path, log) -> None:
    rows = [[d.about_t, d.kind.value] for d in sorted(log.decisions, key=lambda d: d.about_t)]
    write_csv(out / "decisions.csv", DECISIONS_SCHEMA, ["t", "decision"], rows)


def _write_timing(out: Path, cells: list[tuple[str, float]]) -> None:
    write_csv(out / "timings.csv", TIMING_SCHEMA, ["step", "seconds"], [[n, s] for n, s in cells])


# -- generate -----------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = cfgmod.load_config(args.config)
    cfgmod.validate_keys(cfg)
    stream_config = cfgmod.build_stream_config(cfg, seed=args.seed)
    out = _out_dir(args)
    stream = datagen.generate(stream_config)
    datagen.save_stream_csv(stream, out / "stream.csv")
    datagen.save_truth_csv(stream.truth, out / "truth.csv")
    write_manifest(out, "generate", args, {"stream_config": stream_config.__dict__})
    logger.info("wrote %s samples to %s", len(stream), out / "stream.csv")
    return EXIT_OK


# -- run ----------------------------------------------------------------------


def _load_run_inputs(args):
    samples = datagen.load_stream_csv(args.stream)
    truth = datagen.load_truth_csv(args.truth) if args.truth else None
    return samples, truth


def cmd_run(args) -> int:
    cfg = cfgmod.load_config(args.config)
    cfgmod.validate_keys(cfg)
    pipeline_config = cfgmod.build_pipeline_config(cfg, seed=args.seed)
    tolerance = cfgmod.get_int(cfg, "eval.tolerance", 100)
    inc_slack = cfgmod.get_int(cfg, "eval.inc_slack", 0)
    include_warnings = cfgmod.get_bool(cfg, "eval.include_warnings", False)
    if inc_slack > 0 and pipeline_config.window < 2 * inc_slack:
        logger.warning(
            "window %d is below twice the transition length %d; "
            "end-of-transition detection may be unreliable",
            pipeline_config.window,
            inc_slack,
        )
    samples, truth = _load_run_inputs(args)
    out = _out_dir(args)
    started = time.perf_counter()
    log = run_stream(samples, pipeline_config)
    elapsed = time.perf_counter() - started
    report = evaluate_log(
        log,
        truth,
        c=tolerance,
        inc_slack=inc_slack,
        include_warnings_as_outliers=include_warnings,
    )
    report.runtime_seconds = elapsed
    _write_decisions(out, log)
    _write_report(out, report)
    if args.timing:
        _write_timing(out, [("run", elapsed)])
    write_manifest(out, "run", args, {"config_fingerprint": log.config_fingerprint})
    return EXIT_OK


# -- bench --------------------------------------------------------------------


def _bench_cell(cell: dict) -> dict:
    """One grid cell; returns a flat result row (runs in a worker process)."""
    row = {
        "stream": Path(cell["stream"]).name,
        "learner": cell["learner"],
        "detector": cell["detector"],
        "seed": cell["seed"],
        "status": "ok",
        "error": "",
    }
    try:
        cfg = dict(cell["cfg"])
        cfg["regressor.kind"] = cell["learner"]
        cfg["detector.name"] = cell["detector"]
        pipeline_config = cfgmod.build_pipeline_config(cfg, seed=cell["seed"])
        samples = datagen.load_stream_csv(cell["stream"])
        truth = datagen.load_truth_csv(cell["truth"]) if cell["truth"] else None
        started = time.perf_counter()
        log = run_stream(samples, pipeline_config)
        elapsed = time.perf_counter() - started
        report = evaluate_log(
            log, truth, c=cell["tolerance"], inc_slack=cell["inc_slack"]
        )
        row.update(report.flat())
        row["_seconds"] = elapsed
    except Exception as exc:  # noqa: BLE001 - per-cell isolation
        row["status"] = "failed"
        row["error"] = str(exc)
    return row


def _resolve_jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("DRIFTGUARD_JOBS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"DRIFTGUARD_JOBS must be an integer, got {env!r}") from exc
    return 1


def cmd_bench(args) -> int:
    cfg = cfgmod.load_config(args.config)
    cfgmod.validate_keys(cfg)
    streams = cfgmod.get_list(cfg, "bench.streams")
    truths = cfgmod.get_list(cfg, "bench.truths")
    learners = cfgmod.get_list(cfg, "bench.learners") or ["huber"]
    detectors = cfgmod.get_list(cfg, "bench.detectors") or ["ewmad_dt"]
    seeds = [int(s) for s in cfgmod.get_list(cfg, "bench.seeds")] or [
        cfgmod.get_int(cfg, "pipeline.seed", 0)
    ]
    if not streams:
        raise ConfigError("bench.streams must list at least one stream CSV")
    if truths and len(truths) != len(streams):
        raise ConfigError("bench.truths must be empty or match bench.streams in length")
    tolerance = cfgmod.get_int(cfg, "eval.tolerance", 100)
    inc_slack = cfgmod.get_int(cfg, "eval.inc_slack", 0)

    cells = []
    for i, stream in enumerate(streams):
        for learner in learners:
            for detector in detectors:
                for seed in seeds:
                    cells.append(
                        {
                            "cfg": cfg,
                            "stream": stream,
                            "truth": truths[i] if truths else "",
                            "learner": learner,
                            "detector": detector,
                            "seed": seed,
                            "tolerance": tolerance,
                            "inc_slack": inc_slack,
                        }
                    )

    jobs = _resolve_jobs(args)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(cell) for cell in cells]

    if all(row["status"] == "failed" for row in rows):
        raise DataError(
            "every benchmark cell failed; first error: " + rows[0]["error"]
        )

    out = _out_dir(args)
    timing = [(f"{r['stream']}/{r['learner']}/{r['detector']}/{r['seed']}", r.pop("_seconds"))
              for r in rows if "_seconds" in r]
    id_cols = ["stream", "learner", "detector", "seed", "status", "error"]
    metric_cols = sorted({k for r in rows for k in r} - set(id_cols))
    header = id_cols + metric_cols
    write_csv(
        out / "bench.csv",
        BENCH_SCHEMA,
        header,
        [[r.get(k, "") for k in header] for r in rows],
    )

    ok = [r for r in rows if r["status"] == "ok"]
    f1_rows, delay_rows, mape_rows = [], [], []
    for r in ok:
        base = [r["stream"], r["learner"], r["detector"], r["seed"]]
        for cls in ("outlier", "drift", "abrupt", "incremental"):
            key = f"f1_{cls}"
            if key in r and r[key] != "":
                f1_rows.append(base + [cls, r[key]])
        delay_rows.append(base + [r.get("mean_delay", "")])
        mape_rows.append(base + [r.get("mape", ""), r.get("mape_star", "")])
    plot_base = ["stream", "learner", "detector", "seed"]
    write_csv(out / "f1_by_method.csv", PLOT_SCHEMA, plot_base + ["event_class", "f1"], f1_rows)
    write_csv(out / "delay_by_method.csv", PLOT_SCHEMA, plot_base + ["mean_delay"], delay_rows)
    write_csv(out / "mape_star_by_method.csv", PLOT_SCHEMA, plot_base + ["mape", "mape_star"], mape_rows)
    if args.timing:
        _write_timing(out, timing)
    write_manifest(out, "bench", args, {"cells": len(cells), "failed": len(rows) - len(ok)})
    return EXIT_OK


# -- tune ---------------------------------------------------------------------


def cmd_tune(args) -> int:
    cfg = cfgmod.load_config(args.config)
    cfgmod.validate_keys(cfg)
    space = cfgmod.parse_space(cfg)
    rounds = cfgmod.get_int(cfg, "tune.rounds", 5)
    points = cfgmod.get_int(cfg, "tune.points", 20)
    shrink = cfgmod.get_float(cfg, "tune.shrink", 0.5)
    tune_seed = args.seed if args.seed is not None else cfgmod.get_int(cfg, "tune.seed", 0)
    holdout_offset = cfgmod.get_int(cfg, "tune.holdout_seed_offset", 1)
    tolerance = cfgmod.get_int(cfg, "eval.tolerance", 100)
    inc_slack = cfgmod.get_int(cfg, "eval.inc_slack", 0)

    if args.stream:
        samples = datagen.load_stream_csv(args.stream)
        truth = datagen.load_truth_csv(args.truth) if args.truth else None
    else:
        # Held-out replay: tune against a fresh noise draw of the same
        # stream config so parameters do not chase one realization.
        base_stream = cfgmod.build_stream_config(cfg)
        holdout = replace(base_stream, seed=base_stream.seed + holdout_offset)
        stream = datagen.generate(holdout)
        samples = list(stream.samples())
        truth = stream.truth

    def objective(params: dict) -> float:
        merged = cfgmod.apply_overrides(cfg, params)
        pipeline_config = cfgmod.build_pipeline_config(merged)
        log = run_stream(samples, pipeline_config)
        report = evaluate_log(log, truth, c=tolerance, inc_slack=inc_slack)
        if report.mape_star is None:
            raise DataError("no valid samples left for the tuning objective")
        return report.mape_star

    result = sequd_search(
        objective,
        space,
        n_rounds=rounds,
        points_per_round=points,
        shrink=shrink,
        seed=tune_seed,
    )

    out = _out_dir(args)
    param_names = [s.name for s in space]
    trace_rows = []
    for point in result.trace:
        trace_rows.append(
            [point.round, point.index, "ok" if point.objective is not None else "failed",
             "" if point.objective is None else point.objective, point.error]
            + [point.params.get(name, "") for name in param_names]
        )
    write_csv(
        out / "trace.csv",
        TRACE_SCHEMA,
        ["round", "index", "status", "objective", "error"] + param_names,
        trace_rows,
    )
    best_cfg = cfgmod.apply_overrides(cfg, result.best_params)
    best_cfg = {k: v for k, v in best_cfg.items() if not k.startswith("space.")}
    (out / "best_config.cfg").write_text(cfgmod.dump_config(best_cfg))
    write_manifest(
        out,
        "tune",
        args,
        {"best_objective": result.best_objective, "best_params": result.best_params},
    )
    logger.info("best objective %.6g at %s", result.best_objective, result.best_params)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftguard",
        description="Joint outlier and concept-drift detection harness for regression streams.",
    )
    parser.add_argument("--version", action="version", version=f"driftguard {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stream=False):
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if stream:
            p.add_argument("--stream", help="stream CSV (t,x0..x{d-1},y)")
            p.add_argument("--truth", help="ground truth CSV (t,kind)")
        p.add_argument("--timing", action="store_true", help="also write wall-clock timings")

    p_gen = sub.add_parser("generate", help="synthesize a labeled stream")
    common(p_gen)
    p_run = sub.add_parser("run", help="run one pipeline over a stream CSV")
    common(p_run, stream=True)
    p_run.set_defaults(require_stream=True)
    p_bench = sub.add_parser("bench", help="run a detector x learner grid")
    common(p_bench)
    p_bench.add_argument("--jobs", type=int, default=None,
                         help="parallel grid cells (default: DRIFTGUARD_JOBS or 1)")
    p_tune = sub.add_parser("tune", help="sequential space-filling parameter search")
    common(p_tune, stream=True)
    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "bench": cmd_bench,
    "tune": cmd_tune,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    if getattr(args, "require_stream", False) and not args.stream:
        print("error: --stream is required for 'run'", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
