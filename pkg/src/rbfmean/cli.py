"""Command-line pipeline: generate | train | score | eval | ablate | bench | tune-sigma | report.

Every subcommand validates its inputs before writing anything, writes files
atomically, exits 0 on success, and on failure emits a machine-readable JSON
error record on stderr with a distinct exit code per failure family:

    2 configuration / schema problems
    3 missing input files
    4 data or shape problems
    5 refusal to overwrite existing output (pass --force)
    6 unreadable or wrong-version model files
    1 anything unexpected

Flags override config values; the environment variables RBFMEAN_SEED,
RBFMEAN_JOBS, and RBFMEAN_OUT supply defaults when the corresponding flag is
absent.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shutil
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import config as cfgmod
from . import detector, evaluation, report, suite
from .core import read_episodes_jsonl, write_episodes_jsonl
from .detector import DetectorModel, ScoreSeries
from .errors import ConfigError, DataError, ModelLoadError, RbfMeanError, ShapeError
from .ioutil import atomic_path, write_bytes_atomic, write_text_atomic

ENV_PREFIX = "RBFMEAN_"


class RefusalError(RbfMeanError):
    """Output already exists and --force was not given."""


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except RefusalError as exc:
        return _fail(exc, 5)
    except ConfigError as exc:
        return _fail(exc, 2)
    except FileNotFoundError as exc:
        return _fail(exc, 3)
    except ModelLoadError as exc:
        return _fail(exc, 6)
    except (DataError, ShapeError, RbfMeanError) as exc:
        return _fail(exc, 4)
    except Exception as exc:  # noqa: BLE001 - map everything to the error record
        return _fail(exc, 1)


def _fail(exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    return code


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    return cast(raw)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbfmean", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
        p.add_argument("--config", type=Path, default=None, help="run-config JSON path")
        p.add_argument("--seed", type=int, default=_env_default("SEED", int, None), help="master seed override")
        p.add_argument("--jobs", type=int, default=_env_default("JOBS", int, 1), help="scenario-level parallelism")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        p.add_argument(
            "--out", type=Path, required=out_required and _env_default("OUT", str, None) is None,
            default=_env_default("OUT", Path, None), help="output directory or file",
        )

    p = sub.add_parser("generate", help="write a benchmark suite (episodes + manifest)")
    common(p)
    p.add_argument("--train-episodes", type=int, default=None)
    p.add_argument("--val-episodes", type=int, default=None)
    p.add_argument("--test-episodes", type=int, default=None)
    p.add_argument("--length", type=int, default=None, help="episode length override")
    p.add_argument("--onset", type=int, default=None, help="anomaly onset override")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("train", help="fit a detector model on clean episodes")
    common(p)
    p.add_argument("--data", type=Path, default=None, help="suite directory from `generate`")
    p.add_argument("--scenario", type=str, default=None, help="scenario id inside --data")
    p.add_argument("--episodes", type=Path, default=None, help="train JSONL (alternative to --data/--scenario)")
    p.add_argument("--val-episodes", type=Path, default=None, help="labeled JSONL for --tune-sigma without --data")
    p.add_argument("--variant", choices=["full", "rbf_only", "mean_only"], default=None)
    p.add_argument("--sigma", type=float, default=None, help="explicit kernel bandwidth")
    p.add_argument("--tune-sigma", action="store_true", help="grid-search sigma on the validation split")
    p.add_argument("--cusum-far", type=float, default=None, help="calibrate CUSUM to this false-alarm rate")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("score", help="score episodes with a trained model")
    common(p)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--episodes", type=Path, required=True)
    p.add_argument("--plots", action="store_true", help="render a PNG trace per episode")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("eval", help="AUROC / delay from score CSVs and labeled episodes")
    common(p)
    p.add_argument("--scores", type=Path, required=True, help="directory of score CSVs from `score`")
    p.add_argument("--episodes", type=Path, required=True, help="labeled episode JSONL")
    p.add_argument("--fpr", type=float, default=None, help="false-positive rate for the delay threshold")
    p.add_argument("--variant", type=str, default=None, help="variant tag stamped into the results row")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("ablate", help="run the full grid for full / rbf_only / mean_only")
    common(p)
    p.add_argument("--data", type=Path, required=True, help="suite directory from `generate`")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("bench", help="scaling/timing table for featurization and training")
    common(p)
    p.add_argument("--lengths", type=str, default="10000,20000,40000")
    p.add_argument("--dims", type=str, default="4,8,16")
    p.add_argument("--fixed-dim", type=int, default=8)
    p.add_argument("--fixed-length", type=int, default=10000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("tune-sigma", help="cross-validate the kernel bandwidth")
    common(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--scenario", type=str, required=True)
    p.add_argument("--grid", type=str, default=None, help="comma-separated sigma values")
    p.set_defaults(handler=cmd_tune_sigma)

    p = sub.add_parser("report", help="render figures from an existing results CSV")
    common(p)
    p.add_argument("--results", type=Path, required=True)
    p.set_defaults(handler=cmd_report)

    return parser


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def _load_config(args) -> dict[str, Any]:
    config = cfgmod.load_run_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {args.seed}")
        config["seed"] = int(args.seed)
    return config


def cmd_generate(args) -> int:
    config = _load_config(args)
    eps = config["episodes"]
    counts = {
        "train": args.train_episodes or eps["train"],
        "val": args.val_episodes or eps["val"],
        "test": args.test_episodes or eps["test"],
    }
    length = args.length or eps["length"]
    onset = args.onset or eps["onset"]
    if not 1 <= onset < length:
        raise ConfigError(f"onset {onset} must be in [1, {length})")
    grid = config["grid"]
    scenarios = suite.build_grid(
        plants=grid["plants"],
        ar_kinds=grid["ar_kinds"],
        ar_levels=grid["ar_levels"],
        ar_orders=grid["ar_orders"],
        semantic_kinds=grid["semantic_kinds"],
        semantic_levels=grid["semantic_levels"],
        onset=onset,
    )
    if not scenarios:
        raise ConfigError("the configured grid is empty")
    manifest = suite.build_manifest(
        seed=config["seed"],
        scenarios=scenarios,
        counts=counts,
        episode_length=length,
        plants=config["plants"],
    )

    out_dir: Path = args.out
    if out_dir.exists():
        if not args.force:
            raise RefusalError(f"output {out_dir} exists; pass --force to overwrite")
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True)
    write_text_atomic(out_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")

    tasks = [(idx, sc.scenario_id) for idx, sc in enumerate(scenarios)]
    if args.jobs > 1:
        payloads = [(manifest, idx, str(out_dir / sid)) for idx, sid in tasks]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(_generate_scenario_task, payloads))
    else:
        for payload in ((manifest, idx, str(out_dir / sid)) for idx, sid in tasks):
            _generate_scenario_task(payload)
    n_eps = sum(counts.values()) * len(scenarios)
    print(f"generated {len(scenarios)} scenarios ({n_eps} episodes) under {out_dir}")
    return 0


def _generate_scenario_task(payload: tuple[dict, int, str]) -> None:
    manifest, idx, scen_dir = payload
    scen_path = Path(scen_dir)
    scen_path.mkdir(parents=True, exist_ok=True)
    for split in suite.SPLITS:
        episodes = list(suite.generate_scenario_split(manifest, idx, split))
        with atomic_path(scen_path / f"{split}.jsonl") as tmp:
            write_episodes_jsonl(tmp, episodes)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _load_manifest(data_dir: Path) -> dict[str, Any]:
    path = data_dir / "manifest.json"
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _resolve_sigma(args, config, train_eps, val_eps) -> float:
    det = config["detector"]
    if args.sigma is not None:
        if args.sigma <= 0:
            raise ConfigError(f"--sigma must be > 0, got {args.sigma}")
        return float(args.sigma)
    if getattr(args, "tune_sigma", False):
        if not val_eps:
            raise ConfigError("--tune-sigma needs a validation split (--data/--scenario or --val-episodes)")
        base_cfg = cfgmod.detector_config(config, sigma=1.0, variant=args.variant)
        grid = detector.default_sigma_grid(train_eps)
        return detector.tune_sigma(train_eps, val_eps, grid, base_cfg)
    if det["kernel"]["sigma"] is not None:
        return float(det["kernel"]["sigma"])
    return detector.suggest_sigma(train_eps, int(det["w"]))


def cmd_train(args) -> int:
    config = _load_config(args)
    if args.episodes is not None:
        train_eps = read_episodes_jsonl(args.episodes)
        val_eps = read_episodes_jsonl(args.val_episodes) if args.val_episodes else []
    elif args.data is not None and args.scenario is not None:
        scen_dir = args.data / args.scenario
        train_eps = read_episodes_jsonl(scen_dir / "train.jsonl")
        val_path = scen_dir / "val.jsonl"
        val_eps = read_episodes_jsonl(val_path) if (args.tune_sigma and val_path.exists()) else []
    else:
        raise ConfigError("train needs either --episodes or both --data and --scenario")
    if not train_eps:
        raise DataError("no training episodes found")

    sigma = _resolve_sigma(args, config, train_eps, val_eps)
    det_cfg = cfgmod.detector_config(config, sigma=sigma, variant=args.variant)

    start = time.perf_counter()
    model = detector.train(train_eps, det_cfg)
    train_seconds = time.perf_counter() - start

    if args.cusum_far is not None:
        cusum_cfg = config["cusum"] or {"kappa_mult": 0.25, "heldout_fraction": 0.2}
        n_holdout = max(1, round(float(cusum_cfg.get("heldout_fraction", 0.2)) * len(train_eps)))
        n_fit = len(train_eps) - n_holdout
        if n_fit < 1:
            raise DataError(f"{len(train_eps)} episodes are too few to hold out {n_holdout} for CUSUM")
        fit_model = detector.train(train_eps[:n_fit], det_cfg)
        params = detector.fit_cusum(
            fit_model,
            train_eps[:n_fit],
            train_eps[n_fit:],
            false_alarm_rate=float(args.cusum_far),
            kappa_mult=float(cusum_cfg.get("kappa_mult", 0.25)),
        )
        model = DetectorModel(forests=model.forests, config=model.config, n_dims=model.n_dims, cusum=params)

    out: Path = args.out
    if out.is_dir():
        out = out / "model.json"
    if out.exists() and not args.force:
        raise RefusalError(f"model file {out} exists; pass --force to overwrite")
    write_bytes_atomic(out, detector.save_model(model))
    print(
        f"trained {model.n_dims} dims x {model.config.forest.n_trees} trees on "
        f"{len(train_eps)} episodes in {train_seconds:.2f}s (sigma={sigma:.6g}) -> {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------


def _write_score_csv(path: Path, series: ScoreSeries, cusum_stats, alarm_idx) -> None:
    with atomic_path(path) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if cusum_stats is None:
                writer.writerow(["t", "score"])
                for t, s in zip(series.timesteps(), series.scores):
                    writer.writerow([int(t), repr(float(s))])
            else:
                writer.writerow(["t", "score", "cusum", "alarm"])
                for i, (t, s) in enumerate(zip(series.timesteps(), series.scores)):
                    alarmed = int(alarm_idx is not None and i >= alarm_idx)
                    writer.writerow([int(t), repr(float(s)), repr(float(cusum_stats[i])), alarmed])


def _read_score_csv(path: Path) -> ScoreSeries:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        ts, scores = [], []
        for row in reader:
            ts.append(int(row["t"]))
            scores.append(float(row["score"]))
    if not ts:
        raise DataError(f"{path}: empty score file")
    return ScoreSeries(scores=np.asarray(scores), first_scored=ts[0])


def cmd_score(args) -> int:
    model = detector.load_model(Path(args.model).read_bytes())
    episodes = read_episodes_jsonl(args.episodes)
    if not episodes:
        raise DataError(f"{args.episodes}: no episodes")
    out_dir: Path = args.out
    if out_dir.exists() and any(out_dir.glob("scores_*.csv")) and not args.force:
        raise RefusalError(f"score CSVs already present in {out_dir}; pass --force to overwrite")
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, ep in enumerate(episodes):
        series = detector.score_episode(model, ep)
        cusum_stats = alarm_idx = None
        if model.cusum is not None:
            cusum_stats, alarm_idx = detector.run_cusum(series.scores, model.cusum)
        path = out_dir / f"scores_{i:04d}.csv"
        _write_score_csv(path, series, cusum_stats, alarm_idx)
        if args.plots:
            alarm_t = None if alarm_idx is None else int(series.first_scored + alarm_idx)
            report.plot_score_trace(
                series.timesteps(),
                series.scores,
                out_dir / f"scores_{i:04d}.png",
                onset=ep.onset,
                cusum=cusum_stats,
                alarm_time=alarm_t,
                title=ep.meta.get("scenario", "episode scores"),
            )
    print(f"scored {len(episodes)} episodes -> {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    config = _load_config(args)
    fpr = float(args.fpr) if args.fpr is not None else float(config["eval"]["fpr"])
    episodes = read_episodes_jsonl(args.episodes)
    score_files = sorted(args.scores.glob("scores_*.csv"))
    if not score_files:
        raise FileNotFoundError(f"no scores_*.csv files under {args.scores}")
    if len(score_files) != len(episodes):
        raise DataError(f"{len(score_files)} score files but {len(episodes)} episodes")
    series_list = [_read_score_csv(p) for p in score_files]
    result, per_episode, threshold, delays = _evaluate_pairs(series_list, episodes, fpr, args.variant)

    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    if results_path.exists() and not args.force:
        raise RefusalError(f"{results_path} exists; pass --force to overwrite")
    with atomic_path(results_path) as tmp:
        evaluation.write_results_csv(tmp, [result])
    summary = {
        "auroc": result.auroc,
        "n_pos": result.n_pos,
        "n_neg": result.n_neg,
        "threshold": threshold,
        "fpr": fpr,
        "auroc_per_episode": per_episode,
        "delays": delays,
        "delay_mean": result.detection_delay,
        "scenario": result.scenario,
    }
    write_text_atomic(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_plots:
        _plot_eval(out_dir, series_list, episodes, per_episode, threshold)
    print(f"pooled AUROC {result.auroc:.4f} over {len(episodes)} episodes -> {results_path}")
    return 0


def _evaluate_pairs(series_list, episodes, fpr, variant):
    pairs = [(series, ep.labels()) for series, ep in zip(series_list, episodes)]
    pooled = evaluation.pooled_auroc(pairs)
    in_dist = np.concatenate(
        [series.scores[labels[series.first_scored :] == 0] for series, labels in pairs]
    )
    threshold = evaluation.calibrate_threshold(in_dist, fpr)
    delays = []
    for series, ep in zip(series_list, episodes):
        if ep.onset is None:
            delays.append(None)
        else:
            delays.append(evaluation.detection_delay(series, ep.onset, threshold))
    defined = [d for d in delays if d is not None]
    meta = episodes[0].meta
    scenario = {
        "plant": meta.get("plant"),
        "kind": meta.get("kind"),
        "level": meta.get("level"),
        "ar_order": meta.get("ar_order"),
        "variant": variant or "",
        "seed": meta.get("master_seed"),
        "train_seconds": None,
    }
    result = evaluation.EvalResult(
        auroc=pooled.auroc,
        n_pos=pooled.n_pos,
        n_neg=pooled.n_neg,
        detection_delay=float(np.mean(defined)) if defined else None,
        scenario=scenario,
    )
    return result, pooled.per_episode, threshold, delays


def _plot_eval(out_dir: Path, series_list, episodes, per_episode, threshold) -> None:
    import matplotlib.pyplot as plt  # backend set by report module

    vals = [a if a is not None else np.nan for a in per_episode]
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.bar(range(len(vals)), vals, color="#2a6f97")
    ax.axhline(0.5, color="#999999", lw=0.8, ls=":")
    ax.set_xlabel("episode")
    ax.set_ylabel("AUROC")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(out_dir / "auroc_per_episode.png", dpi=120)
    plt.close(fig)
    series, ep = series_list[0], episodes[0]
    report.plot_score_trace(
        series.timesteps(),
        series.scores,
        out_dir / "trace_0000.png",
        onset=ep.onset,
        threshold=threshold,
        title=ep.meta.get("scenario", "episode 0"),
    )


# ---------------------------------------------------------------------------
# ablate
# ---------------------------------------------------------------------------


def cmd_ablate(args) -> int:
    config = _load_config(args)
    manifest = _load_manifest(args.data)
    scenarios = suite.manifest_scenarios(manifest)
    out_dir: Path = args.out
    results_path = out_dir / "results.csv"
    if results_path.exists() and not args.force:
        raise RefusalError(f"{results_path} exists; pass --force to overwrite")
    tasks = [
        {
            "data_dir": str(args.data),
            "scenario_id": sc.scenario_id,
            "variant": variant,
            "config": config,
            "fpr": float(config["eval"]["fpr"]),
        }
        for sc in scenarios
        for variant in ("full", "rbf_only", "mean_only")
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_ablate_task, tasks))
    else:
        rows = [_ablate_task(t) for t in tasks]
    rows.sort(key=lambda r: (r.scenario["plant"], r.scenario["kind"], str(r.scenario["level"]),
                             str(r.scenario["ar_order"]), r.scenario["variant"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    with atomic_path(results_path) as tmp:
        evaluation.write_results_csv(tmp, rows)
    write_text_atomic(
        out_dir / "summary.json",
        json.dumps(evaluation.summarize_results(rows), indent=2, sort_keys=True) + "\n",
    )
    if not args.no_plots:
        report.plot_results_bars(evaluation.read_results_csv(results_path), out_dir / "results.png")
    print(f"{len(rows)} rows ({len(scenarios)} scenarios x 3 variants) -> {results_path}")
    return 0


def _ablate_task(task: dict[str, Any]) -> evaluation.EvalResult:
    config = task["config"]
    scen_dir = Path(task["data_dir"]) / task["scenario_id"]
    train_eps = read_episodes_jsonl(scen_dir / "train.jsonl")
    test_eps = read_episodes_jsonl(scen_dir / "test.jsonl")
    det = config["detector"]
    sigma = det["kernel"]["sigma"]
    if sigma is None:
        sigma = detector.suggest_sigma(train_eps, int(det["w"]))
    det_cfg = cfgmod.detector_config(config, sigma=float(sigma), variant=task["variant"])
    start = time.perf_counter()
    model = detector.train(train_eps, det_cfg)
    train_seconds = time.perf_counter() - start
    series_list = [detector.score_episode(model, ep) for ep in test_eps]
    result, _, _, _ = _evaluate_pairs(series_list, test_eps, task["fpr"], task["variant"])
    result.scenario["train_seconds"] = train_seconds
    return result


# ---------------------------------------------------------------------------
# bench / tune-sigma / report
# ---------------------------------------------------------------------------


def _parse_int_list(raw: str, flag: str) -> list[int]:
    try:
        values = [int(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated integers, got {raw!r}") from exc
    if not values:
        raise ConfigError(f"{flag} is empty")
    return values


def cmd_bench(args) -> int:
    config = _load_config(args)
    lengths = _parse_int_list(args.lengths, "--lengths")
    dims = _parse_int_list(args.dims, "--dims")
    cells: list[tuple[int, int]] = []
    for t in lengths:
        cells.append((args.fixed_dim, t))
    for n in dims:
        if (n, args.fixed_length) not in cells:
            cells.append((n, args.fixed_length))
    det_cfg = cfgmod.detector_config(config, sigma=1.0)
    rows = evaluation.measure_scaling(det_cfg, cells, repeats=args.repeats, seed=config["seed"])
    out_dir: Path = args.out
    bench_path = out_dir / "bench.csv"
    if bench_path.exists() and not args.force:
        raise RefusalError(f"{bench_path} exists; pass --force to overwrite")
    out_dir.mkdir(parents=True, exist_ok=True)
    with atomic_path(bench_path) as tmp:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_dims", "n_steps", "extract_seconds", "fit_seconds"])
            for row in rows:
                writer.writerow([row.n_dims, row.n_steps, repr(row.extract_seconds), repr(row.fit_seconds)])
    slopes = evaluation.scaling_slopes(rows)
    summary = {
        "repeats": args.repeats,
        "slopes": slopes,
        "rows": [
            {
                "n_dims": r.n_dims,
                "n_steps": r.n_steps,
                "extract_seconds": r.extract_seconds,
                "fit_seconds": r.fit_seconds,
            }
            for r in rows
        ],
    }
    write_text_atomic(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_plots:
        report.plot_scaling(summary["rows"], out_dir / "bench.png")
    t_slope = slopes.get("t_axis")
    n_slope = slopes.get("n_axis")
    print(
        "bench done: extraction log-log slopes "
        f"T-axis={t_slope if t_slope is None else round(t_slope, 3)}, "
        f"N-axis={n_slope if n_slope is None else round(n_slope, 3)} -> {bench_path}"
    )
    return 0


def cmd_tune_sigma(args) -> int:
    config = _load_config(args)
    scen_dir = args.data / args.scenario
    train_eps = read_episodes_jsonl(scen_dir / "train.jsonl")
    val_eps = read_episodes_jsonl(scen_dir / "val.jsonl")
    if args.grid is not None:
        try:
            grid = [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"--grid expects comma-separated numbers, got {args.grid!r}") from exc
    else:
        grid = detector.default_sigma_grid(train_eps)
    base_cfg = cfgmod.detector_config(config, sigma=1.0)
    sigma = detector.tune_sigma(train_eps, val_eps, grid, base_cfg)
    out: Path = args.out
    if out.is_dir():
        out = out / "sigma.json"
    if out.exists() and not args.force:
        raise RefusalError(f"{out} exists; pass --force to overwrite")
    write_text_atomic(
        out, json.dumps({"scenario": args.scenario, "sigma": sigma, "grid": grid}, indent=2) + "\n"
    )
    print(f"sigma={sigma:.6g} (grid of {len(grid)}) -> {out}")
    return 0


def cmd_report(args) -> int:
    rows = evaluation.read_results_csv(args.results)
    if not rows:
        raise DataError(f"{args.results}: no result rows")
    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    fig_path = report.plot_results_bars(rows, out_dir / "results.png")
    print(f"rendered {fig_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
