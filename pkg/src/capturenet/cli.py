"""Command-line entry point.

Subcommands cover the offline workflow (simulate, train, search, detect,
eval, report) and `serve`, which starts the HTTP service. Defaults follow
the tuned operating point: window 2000, train step 2200, batch 128,
lr 1.83e-4, weight decay 3.32e-3, dropout 0.739, threshold 0.524.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baseline import HistogramLogistic
from .datasets import AnnotatedTrace, build_balanced_dataset, split_runs
from .fileio import (
    discover_runs,
    read_trace,
    write_detections,
    write_run,
)
from .hypersearch import SearchSpace, run_search
from .nn.model import CaptureNetDeep
from .nn.weights import load_weights, save_weights
from .pipeline import detect_trace, evaluate_runs, model_id
from .sim import SimParams, generate_run
from .training import TrainConfig, train_model, write_training_log
from .types import DetectorConfig


def _parse_range(text: str, kind=int) -> tuple:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return kind(lo), kind(hi)
    v = kind(text)
    return v, v


def _detector_config(args, window_size=None) -> DetectorConfig:
    return DetectorConfig(
        downsample_factor=args.downsample,
        window_size=window_size or args.window,
        threshold=args.threshold,
        normalization_scale_pa=args.scale,
    )


def _add_common_detector_flags(p, window_default=2000):
    p.add_argument("--downsample", type=int, default=100,
                   help="downsample factor (default 100)")
    p.add_argument("--window", type=int, default=window_default,
                   help="window size in downsampled points")
    p.add_argument("--threshold", type=float, default=0.524,
                   help="decision threshold (default 0.524)")
    p.add_argument("--scale", type=float, default=200.0,
                   help="normalization scale in pA (default 200)")


# -- commands -------------------------------------------------------------------


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cap_lo, cap_hi = _parse_range(args.captures)
    tot_lo, tot_hi = _parse_range(args.total_samples)
    params = SimParams(
        sample_rate_hz=args.sample_rate,
        capture_duration_s=_parse_range(args.capture_duration, float),
        transloc_duration_s=_parse_range(args.transloc_duration, float),
        min_filler_s=args.min_filler,
    )
    for i in range(args.runs):
        ss = np.random.SeedSequence([args.seed, i])
        rng = np.random.default_rng(ss)
        n_captures = int(rng.integers(cap_lo, cap_hi + 1))
        total = int(rng.integers(tot_lo, tot_hi + 1))
        trace, anns = generate_run(
            n_captures,
            total,
            seed=int(ss.generate_state(1)[0]),
            params=params,
            run_id=f"sim-{args.seed:04d}-{i:03d}",
            channel=(i % 512) + 1,
        )
        run = AnnotatedTrace(trace=trace, annotations=tuple(anns))
        trace_path, _ = write_run(run, out, binary=args.format == "bin")
        print(f"{trace_path.name}: {len(trace)} samples, {len(anns)} captures")
    print(f"wrote {args.runs} runs to {out}")
    return 0


def _build_model(args, config: DetectorConfig):
    if args.model == "capturenet-deep":
        return CaptureNetDeep(window_size=config.window_size, dropout=args.dropout,
                              seed=args.seed)
    return HistogramLogistic(bin_count=args.bins,
                             scale_pa=config.normalization_scale_pa, seed=args.seed)


def cmd_train(args) -> int:
    runs = discover_runs(args.data)
    config = _detector_config(args)
    split = split_runs([r.run_id for r in runs], seed=args.seed)
    by_id = {r.run_id: r for r in runs}
    train_runs = [by_id[i] for i in sorted(split.train)]
    val_runs = [by_id[i] for i in sorted(split.val)]
    print(f"split: {len(split.train)} train / {len(split.val)} val / "
          f"{len(split.test)} test runs")
    if args.split_out:
        Path(args.split_out).write_text(json.dumps(split.as_dict(), indent=2) + "\n")

    train_ds = build_balanced_dataset(train_runs, config, seed=args.seed,
                                      allowed_run_ids=split.train)
    val_ds = build_balanced_dataset(val_runs, config, seed=args.seed,
                                    allowed_run_ids=split.val)
    print(f"balanced datasets: train {train_ds.n_pos}+{train_ds.n_neg}, "
          f"val {val_ds.n_pos}+{val_ds.n_neg} windows")

    model = _build_model(args, config)
    result = train_model(
        model,
        train_ds,
        val_ds,
        TrainConfig(batch_size=args.batch, lr=args.lr, weight_decay=args.weight_decay,
                    max_epochs=args.epochs, patience=args.patience),
        seed=args.seed,
    )
    print(f"stopped at epoch {result.stopped_epoch}, best epoch "
          f"{result.best_epoch} (val loss {result.best_val_loss:.4f})")
    save_weights(result.model, args.weights)
    print(f"weights written to {args.weights}")
    if args.log:
        write_training_log(result.records, args.log)
        print(f"training log written to {args.log}")

    val_eval = evaluate_runs(val_runs, result.model, config)
    m = val_eval.metrics
    print(f"validation windows: acc {m.accuracy:.2f} prec {m.precision:.2f} "
          f"rec {m.recall:.2f} f1 {m.f1:.4f} score {m.maximize_score:.2f} "
          f"iou {val_eval.mean_iou:.3f}")
    return 0


def cmd_search(args) -> int:
    runs = discover_runs(args.data)
    base = DetectorConfig(downsample_factor=args.downsample,
                          normalization_scale_pa=args.scale)
    space = SearchSpace(architecture=args.model,
                        window_size=_parse_range(args.window_space))
    best, results = run_search(
        runs,
        space=space,
        n_trials=args.trials,
        seed=args.seed,
        epoch_cap=args.epoch_cap,
        base_config=base,
        out_path=args.out,
    )
    n_failed = sum(1 for r in results if r.error)
    print(f"{len(results)} trials ({n_failed} failed), best trial "
          f"{best.trial_id} score {best.score:.2f}")
    doc = best.as_dict()
    if args.best_out:
        Path(args.best_out).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"best config written to {args.best_out}")
    print(json.dumps(doc["config"], indent=2))
    return 0


def cmd_detect(args) -> int:
    model = load_weights(args.weights)
    trace = read_trace(args.trace)
    window = getattr(model, "window_size", None) or args.window
    config = _detector_config(args, window_size=window)
    result = detect_trace(trace, model, config)
    export = result.to_export(model, config)
    if args.out:
        write_detections(export, args.out)
        print(f"export written to {args.out}")
    if args.likelihoods:
        with open(args.likelihoods, "w") as f:
            for w in result.window_preds:
                f.write(json.dumps({
                    "ds_start": w.ds_start,
                    "ds_end": w.ds_end,
                    "probability": w.probability,
                    "label": w.label,
                }) + "\n")
        print(f"per-window likelihoods written to {args.likelihoods}")
    if args.json:
        print(json.dumps(export.as_dict(), indent=2))
    else:
        print(f"{trace.run_id}: {len(result.regions)} capture regions, "
              f"status {result.status}")
        for r in result.regions:
            print(f"  [{r.start_raw}, {r.end_raw}) confidence {r.confidence:.3f}")
    return 0


def _select_eval_runs(args, runs):
    if args.runs:
        wanted = set(args.runs.split(","))
        missing = wanted - {r.run_id for r in runs}
        if missing:
            raise SystemExit(f"error: runs not found in data dir: {sorted(missing)}")
        return [r for r in runs if r.run_id in wanted]
    if args.split:
        split = json.loads(Path(args.split).read_text())
        wanted = set(split[args.partition])
        return [r for r in runs if r.run_id in wanted]
    return runs


def cmd_eval(args) -> int:
    model = load_weights(args.weights)
    runs = discover_runs(args.data)
    selected = _select_eval_runs(args, runs)
    if not selected:
        raise SystemExit("error: no runs selected for evaluation")
    window = getattr(model, "window_size", None) or args.window
    config = _detector_config(args, window_size=window)
    result = evaluate_runs(selected, model, config)
    m = result.metrics
    doc = {
        "model": model.architecture,
        "model_id": model_id(model),
        "n_runs": result.n_runs,
        "n_windows": result.n_windows,
        "mean_iou": result.mean_iou,
        **m.as_dict(),
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"eval report written to {args.out}")
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(f"model: {doc['model']} ({doc['model_id']})")
        print(f"runs: {result.n_runs}, windows: {result.n_windows}")
        print(f"accuracy  {m.accuracy:7.2f}")
        print(f"precision {m.precision:7.2f}")
        print(f"recall    {m.recall:7.2f}")
        print(f"f1        {m.f1:7.4f}")
        print(f"maximize_score {m.maximize_score:7.2f}")
        print(f"mean region IoU {result.mean_iou:.3f}")
    return 0


def cmd_report(args) -> int:
    rows = []
    for path in args.evals or []:
        doc = json.loads(Path(path).read_text())
        rows.append({
            "model": doc["model"],
            "accuracy": doc["accuracy"],
            "precision": doc["precision"],
            "recall": doc["recall"],
            "f1": doc["f1"],
            "maximize_score": doc["maximize_score"],
        })
    if args.trials:
        from .hypersearch import read_trials

        docs = [d for d in read_trials(args.trials) if d.get("metrics")]
        if docs:
            best = max(docs, key=lambda d: d["score"] if d["score"] is not None
                       else float("-inf"))
            m = best["metrics"]
            rows.append({
                "model": f"{best['config']['architecture']} (best trial "
                         f"{best['trial_id']})",
                "accuracy": m["accuracy"],
                "precision": m["precision"],
                "recall": m["recall"],
                "f1": m["f1"],
                "maximize_score": m["maximize_score"],
            })
    if not rows:
        raise SystemExit("error: nothing to report; pass --evals and/or --trials")
    rows.sort(key=lambda r: r["maximize_score"], reverse=True)
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    name_w = max(len(r["model"]) for r in rows + [{"model": "Model"}])
    header = (f"{'Model':<{name_w}}  {'Accuracy':>8}  {'Precision':>9}  "
              f"{'Recall':>8}  {'F1':>6}  {'Maximize score':>14}")
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r['model']:<{name_w}}  {r['accuracy']:8.2f}  {r['precision']:9.2f}  "
              f"{r['recall']:8.2f}  {r['f1']:6.2f}  {r['maximize_score']:14.2f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port, log_level=args.log_level)
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capturenet",
        description="Capture-phase detection for nanopore current traces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate labeled synthetic runs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--captures", default="2..4",
                   help="captures per run, e.g. 2 or 0..3 (default 2..4)")
    p.add_argument("--total-samples", default="4500000..6000000",
                   help="samples per run, e.g. 5000000 or 4500000..6000000")
    p.add_argument("--sample-rate", type=float, default=4000.0)
    p.add_argument("--capture-duration", default="80..300",
                   help="capture phase duration bounds in seconds")
    p.add_argument("--transloc-duration", default="20..90",
                   help="translocation phase duration bounds in seconds")
    p.add_argument("--min-filler", type=float, default=20.0,
                   help="minimum open-pore filler between phases (seconds)")
    p.add_argument("--format", choices=("bin", "csv"), default="bin")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a detector on annotated runs")
    p.add_argument("--data", required=True, help="directory of traces + annotations")
    p.add_argument("--weights", default="weights.cnwt")
    p.add_argument("--log", default="train_log.jsonl")
    p.add_argument("--split-out", default="split.json")
    p.add_argument("--model", choices=("capturenet-deep", "histogram-logistic"),
                   default="capturenet-deep")
    p.add_argument("--bins", type=int, default=50,
                   help="histogram bins (histogram-logistic only)")
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=1.83e-4)
    p.add_argument("--weight-decay", type=float, default=3.32e-3)
    p.add_argument("--dropout", type=float, default=0.739)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    _add_common_detector_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search")
    p.add_argument("--data", required=True)
    p.add_argument("--trials", type=int, default=40)
    p.add_argument("--window-space", default="1000..3000",
                   help="window size bounds in downsampled points")
    p.add_argument("--epoch-cap", type=int, default=150)
    p.add_argument("--out", default="trials.jsonl")
    p.add_argument("--best-out", default="best_config.json")
    p.add_argument("--model", choices=("capturenet-deep", "histogram-logistic"),
                   default="capturenet-deep")
    p.add_argument("--downsample", type=int, default=100)
    p.add_argument("--scale", type=float, default=200.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("detect", help="detect capture regions in one trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", help="detection export JSON path")
    p.add_argument("--likelihoods", help="per-window probability dump (JSONL)")
    p.add_argument("--json", action="store_true", help="print export JSON to stdout")
    p.add_argument("--seed", type=int, default=0)
    _add_common_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="window-level metrics against annotations")
    p.add_argument("--data", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--runs", help="comma-separated run ids (default: all)")
    p.add_argument("--split", help="split JSON from train --split-out")
    p.add_argument("--partition", choices=("train", "val", "test"), default="test")
    p.add_argument("--out", help="write eval report JSON here")
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    _add_common_detector_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="model comparison table from eval/trial files")
    p.add_argument("--evals", nargs="*", help="eval report JSON files")
    p.add_argument("--trials", help="trials JSONL from search")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the detection service")
    p.add_argument("--host", default=os.environ.get("CAPTURENET_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("CAPTURENET_PORT", "8077")))
    p.add_argument("--log-level", default="info")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
