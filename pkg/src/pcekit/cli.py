"""Command-line entry point: build, validate, uq, sobol, grid, cache.

Every command reads one JSON config (see config.py) and writes its
artifacts under the configured report directory, embedding the config hash
and seed in each.  Exit codes: 0 success, 2 configuration error,
3 numerical/model error, 4 I/O or file-format error.

With --reproducible, volatile content (timestamps, wall times, cache
hit/miss counts) is kept out of the written artifacts, so repeated runs of
the same config and seed produce byte-identical files; the volatile values
still go to stdout.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__, sampling, sobol, surrogate
from .blackbox import BlackBoxModel, EvaluationCache, resolve_cache_path
from .config import RunConfig, load_config
from .errors import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    ConfigurationError,
    EvaluationError,
    ModelFormatError,
    ZeroVarianceError,
)
from .quadrature import full_grid, sparse_grid, write_grid_csv
from .sampling import latin_hypercube
from .surrogate import unscale_points


def _append_log(report_dir: Path, line: str) -> None:
    report_dir.mkdir(parents=True, exist_ok=True)
    with open(report_dir / "run.log", "a", encoding="utf-8") as handle:
        handle.write(line + "\n")


def _open_cache(cfg: RunConfig) -> EvaluationCache | None:
    path = resolve_cache_path(cfg.paths.cache)
    if path is None:
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    return EvaluationCache(path)


def _load_model(cfg: RunConfig, override: str | None) -> surrogate.PceModel:
    return surrogate.load(Path(override) if override else cfg.paths.model_file)


def _ordinal(q: float) -> str:
    n = int(q)
    if q != n:
        return f"{q:g}th"
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def cmd_build(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    cache = _open_cache(cfg)
    box = BlackBoxModel(cfg.model, cache=cache, workers=args.workers)
    started = time.perf_counter()
    model = surrogate.build_pce(
        box,
        cfg.inputs,
        cfg.outputs,
        cfg.method,
        record_timestamp=not args.reproducible,
    )
    elapsed = time.perf_counter() - started
    model.build_meta["config_hash"] = cfg.config_hash
    model.build_meta["seed"] = cfg.validation.seed

    cfg.paths.model_file.parent.mkdir(parents=True, exist_ok=True)
    surrogate.save(model, cfg.paths.model_file)

    meta = model.build_meta
    line = (
        f"build method={meta['method']} parameter={meta['parameter']} "
        f"evaluations={meta['evaluation_count']} terms={len(model.indices)} "
        f"config_hash={cfg.config_hash} seed={cfg.validation.seed}"
    )
    if not args.reproducible:
        line += (
            f" cache_hits={box.cached_count} cache_misses={box.fresh_count}"
            f" wall_seconds={elapsed:.3f}"
        )
    _append_log(cfg.paths.report_dir, line)
    print(
        f"built {meta['method']} (parameter {meta['parameter']}) surrogate with "
        f"{meta['evaluation_count']} model evaluations "
        f"({box.cached_count} cached) in {elapsed:.2f} s -> {cfg.paths.model_file}"
    )
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    model = _load_model(cfg, args.model)
    cache = _open_cache(cfg)
    box = BlackBoxModel(cfg.model, cache=cache, workers=args.workers)

    design = latin_hypercube(
        cfg.validation.lhs_strata, model.dim, cfg.validation.lhs_repeats, cfg.validation.seed
    )
    physical = unscale_points(design.points, model.inputs)
    truths = box(physical)
    predictions = model.evaluate_batch(physical)

    comments = [f"config_hash={cfg.config_hash}", f"seed={cfg.validation.seed}"]
    meta = model.build_meta
    report_dir = cfg.paths.report_dir
    report_dir.mkdir(parents=True, exist_ok=True)

    header = ["method", "parameter"]
    row = [str(meta.get("method")), str(meta.get("parameter"))]
    metrics = {}
    for j, name in enumerate(model.output_names):
        metrics[name] = (
            sampling.rmse(predictions[:, j], truths[:, j]),
            sampling.rrmse(predictions[:, j], truths[:, j]),
        )
        header += [f"rmse_{name}", f"rrmse_{name}"]
        row += [format(metrics[name][0], ".17g"), format(metrics[name][1], ".17g")]
    header.append("evaluations")
    row.append(str(meta.get("evaluation_count")))
    with open(report_dir / "validate.csv", "w", encoding="utf-8", newline="") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        handle.write(",".join(header) + "\n")
        handle.write(",".join(row) + "\n")

    with open(report_dir / "scatter.csv", "w", encoding="utf-8", newline="") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        cols = []
        for name in model.output_names:
            cols += [f"{name}_model", f"{name}_surrogate"]
        handle.write(",".join(cols) + "\n")
        for i in range(truths.shape[0]):
            cells = []
            for j in range(truths.shape[1]):
                cells += [format(truths[i, j], ".17g"), format(predictions[i, j], ".17g")]
            handle.write(",".join(cells) + "\n")

    summary = " ".join(
        f"rmse_{name}={m[0]:.6g} rrmse_{name}={m[1]:.6g}" for name, m in metrics.items()
    )
    _append_log(
        report_dir,
        f"validate points={len(design.points)} {summary} "
        f"config_hash={cfg.config_hash} seed={cfg.validation.seed}",
    )
    print(f"validated at {len(design.points)} LHS points: {summary}")
    return EXIT_OK


def cmd_uq(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    model = _load_model(cfg, args.model)
    count = args.samples if args.samples is not None else cfg.report.uq_samples
    if count < 2:
        raise ConfigurationError(f"uq needs at least 2 samples, got {count}")

    design = latin_hypercube(count, model.dim, 1, cfg.validation.seed)
    physical = unscale_points(design.points, model.inputs)
    started = time.perf_counter()
    values = model.evaluate_batch(physical)
    elapsed = time.perf_counter() - started

    mean = model.mean()
    std = model.std_dev()
    report_dir = cfg.paths.report_dir
    report_dir.mkdir(parents=True, exist_ok=True)
    comments = [
        f"config_hash={cfg.config_hash}",
        f"seed={cfg.validation.seed}",
        f"samples={count} generator=PCG64",
    ]

    rows: list[tuple[str, list[float], str]] = [
        ("Mean", list(mean), "Analytic"),
        ("Standard deviation", list(std), "Analytic"),
        ("Sample minimum", list(values.min(axis=0)), "Empirical"),
    ]
    for q in cfg.report.percentiles:
        per_output = [
            float(sampling.percentile_values(values[:, j], [q])[0])
            for j in range(values.shape[1])
        ]
        rows.append((f"{_ordinal(q)} percentile", per_output, "Empirical"))
    rows.append(("Sample maximum", list(values.max(axis=0)), "Empirical"))

    names = list(model.output_names)
    cells = [["Statistic"] + names + ["Derivation"]]
    for label, numbers, derivation in rows:
        cells.append([label] + [f"{v:.6g}" for v in numbers] + [derivation])
    widths = [max(len(row[c]) for row in cells) for c in range(len(cells[0]))]
    with open(report_dir / "uq_summary.txt", "w", encoding="utf-8") as handle:
        for comment in comments:
            handle.write(f"# {comment}\n")
        for row in cells:
            handle.write("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() + "\n")

    distributions = {
        name: sampling.empirical_distribution(values[:, j], cfg.report.histogram_bins)
        for j, name in enumerate(names)
    }
    sampling.write_cdf_csv(report_dir / "cdf.csv", distributions, comments=comments)
    sampling.write_histogram_csv(report_dir / "hist.csv", distributions, comments=comments)

    _append_log(
        report_dir,
        f"uq samples={count} config_hash={cfg.config_hash} seed={cfg.validation.seed}",
    )
    print(
        f"uq summary over {count} surrogate evaluations ({elapsed:.2f} s) "
        f"-> {report_dir / 'uq_summary.txt'}"
    )
    return EXIT_OK


def cmd_sobol(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    model = _load_model(cfg, args.model)
    size = (
        args.max_subset_size
        if args.max_subset_size is not None
        else cfg.report.sobol_max_subset_size
    )
    report = sobol.full_report(model, size)

    report_dir = cfg.paths.report_dir
    report_dir.mkdir(parents=True, exist_ok=True)
    with open(report_dir / "sobol.json", "w", encoding="utf-8") as handle:
        report.write_json(
            handle,
            extra={"config_hash": cfg.config_hash, "seed": cfg.validation.seed},
        )
    text = report.to_text()
    with open(report_dir / "sobol.txt", "w", encoding="utf-8") as handle:
        handle.write(f"# config_hash={cfg.config_hash}\n# seed={cfg.validation.seed}\n")
        handle.write(text)

    _append_log(
        report_dir,
        f"sobol max_subset_size={size} config_hash={cfg.config_hash} "
        f"seed={cfg.validation.seed}",
    )
    print(text, end="")
    return EXIT_OK


def cmd_grid(args: argparse.Namespace) -> int:
    if args.full is not None:
        grid = full_grid(args.dim, args.full)
    else:
        grid = sparse_grid(args.dim, args.sparse)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            write_grid_csv(grid, handle)
        print(f"wrote {len(grid)} points -> {args.out}")
    else:
        write_grid_csv(grid, sys.stdout)
    return EXIT_OK


def cmd_cache(args: argparse.Namespace) -> int:
    if args.path:
        path = resolve_cache_path(args.path)
    elif args.config:
        path = resolve_cache_path(load_config(args.config).paths.cache)
    else:
        raise ConfigurationError("cache command needs --path or --config")
    if path is None:
        raise ConfigurationError("no cache path is configured")
    cache = EvaluationCache(path)
    if args.action == "stats":
        size = path.stat().st_size if path.exists() else 0
        print(f"cache {path}: {len(cache)} entries, {size} bytes, "
              f"{cache.corrupt_lines} corrupt lines skipped at load")
    else:
        valid, corrupt = cache.verify()
        print(f"cache {path}: {valid} valid lines, {corrupt} corrupt lines")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcekit",
        description="Polynomial chaos surrogates for black-box models: "
        "build, validate, quantify uncertainty, rank sensitivities.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, model_flag: bool = True) -> None:
        p.add_argument("--config", required=True, help="path to the run config JSON")
        if model_flag:
            p.add_argument("--model", help="surrogate file (default: config paths.model_file)")

    p_build = sub.add_parser("build", help="evaluate the black box on a grid and fit the surrogate")
    add_common(p_build, model_flag=False)
    p_build.add_argument("--workers", type=int, default=1, help="concurrent evaluation workers")
    p_build.add_argument("--reproducible", action="store_true",
                         help="omit timestamps/timings so artifacts are byte-stable")
    p_build.set_defaults(func=cmd_build)

    p_val = sub.add_parser("validate", help="compare surrogate and black box at LHS test points")
    add_common(p_val)
    p_val.add_argument("--workers", type=int, default=1)
    p_val.add_argument("--reproducible", action="store_true")
    p_val.set_defaults(func=cmd_validate)

    p_uq = sub.add_parser("uq", help="summary statistics and empirical distributions")
    add_common(p_uq)
    p_uq.add_argument("--samples", type=int, help="override report.uq_samples")
    p_uq.add_argument("--reproducible", action="store_true")
    p_uq.set_defaults(func=cmd_uq)

    p_sobol = sub.add_parser("sobol", help="variance-based sensitivity indices")
    add_common(p_sobol)
    p_sobol.add_argument("--max-subset-size", type=int,
                         help="override report.sobol_max_subset_size")
    p_sobol.set_defaults(func=cmd_sobol)

    p_grid = sub.add_parser("grid", help="export a quadrature grid as CSV")
    p_grid.add_argument("--dim", type=int, required=True)
    group = p_grid.add_mutually_exclusive_group(required=True)
    group.add_argument("--full", type=int, metavar="ORDER")
    group.add_argument("--sparse", type=int, metavar="LEVEL")
    p_grid.add_argument("--out", help="output path (default: stdout)")
    p_grid.set_defaults(func=cmd_grid)

    p_cache = sub.add_parser("cache", help="inspect or verify the evaluation cache")
    p_cache.add_argument("action", choices=["stats", "verify"])
    p_cache.add_argument("--path", help="cache file path")
    p_cache.add_argument("--config", help="read the cache path from a run config")
    p_cache.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EvaluationError, ZeroVarianceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModelFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
