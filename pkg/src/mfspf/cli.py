"""Command-line driver: segment, evaluate, sweep, bench, synth.

Exit status: 0 success, 1 usage or config error, 2 I/O error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from mfspf.evaluation import CSV_COLUMNS, MetricsRecord, compare_masks, timing_summary
from mfspf.image_core import (
    SYNTHETIC_KINDS,
    GrayImage,
    ImageFormatError,
    RectRegion,
    load_image,
    load_mask,
    make_synthetic,
    save_image,
    save_mask,
)
from mfspf.levelset import MODELS, ModelConfig, dump_snapshots, segment, zero_crossings

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3
SWEEP_PARAMS = {"lambda": "lam", "alpha": "alpha"}
SWEEP_COLUMNS = ("value", "f", "precision", "recall", "iterations", "converged", "elapsed_s", "error")
BENCH_COLUMNS = CSV_COLUMNS + ("error",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# flag name -> (config field, type)
_CONFIG_FLAGS = {
    "c0": ("c0", float),
    "sigma": ("sigma", float),
    "n": ("n", int),
    "m": ("m", int),
    "lambda": ("lam", float),
    "alpha": ("alpha", float),
    "sigma-phi": ("sigma_phi", float),
    "delta": ("delta", float),
    "epsilon": ("epsilon", float),
    "dt": ("dt", float),
    "max-iters": ("max_iters", int),
}


def _floats3(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(vals)


def _add_config_flags(p):
    g = p.add_argument_group("model parameters (override --config)")
    g.add_argument("--config", help="flat JSON file of ModelConfig fields")
    for flag, (dest, typ) in _CONFIG_FLAGS.items():
        g.add_argument(f"--{flag}", dest=f"cfg_{dest}", type=typ, default=None, metavar=typ.__name__.upper())
    g.add_argument("--selective", dest="cfg_selective", action=argparse.BooleanOptionalAction, default=None,
                   help="re-binarize phi every iteration")
    g.add_argument("--feature-scales", dest="cfg_feature_scales", type=_floats3, default=None,
                   metavar="EN,STD,GRAD")


def build_config(args) -> ModelConfig:
    """Defaults, then the config file, then command-line flags."""
    try:
        cfg = ModelConfig.from_json(args.config) if args.config else ModelConfig()
        flags = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
        return dataclasses.replace(cfg, **flags)
    except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _config_comments(config: ModelConfig, extra: dict | None = None) -> list[str]:
    lines = [f"# {k}={json.dumps(v)}" for k, v in config.to_dict().items()]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}={json.dumps(v)}")
    return lines


def write_csv(path, columns, rows, comments=()):
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        for line in comments:
            out.write(line + "\n")
        w = csv.DictWriter(out, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
    finally:
        if out is not sys.stdout:
            out.close()


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Return (comment lines, data rows) of a CSV written by this tool."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, list(csv.DictReader(body))


def render_overlay(img: GrayImage, phi) -> GrayImage:
    data = img.data.copy()
    data[zero_crossings(phi)] = 1.0
    return GrayImage(data)


def _region(args, shape):
    if not args.init_rect:
        return None
    try:
        region = RectRegion.parse(args.init_rect)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not region.fits(shape):
        raise UsageError(f"--init-rect {args.init_rect} does not fit in a {shape[1]}x{shape[0]} image")
    return region


def _metrics_row(report, truth, image_name):
    rec = compare_masks(report.mask, truth, image=image_name, model=report.model,
                        iterations=report.iterations, converged=report.converged,
                        elapsed=report.elapsed)
    return rec


def cmd_segment(args) -> int:
    config = build_config(args)
    img = load_image(args.input)
    truth = load_mask(args.truth) if args.truth else None
    if truth is not None and truth.shape != img.shape:
        raise UsageError(f"truth {args.truth} is {truth.width}x{truth.height}, image is {img.width}x{img.height}")
    region = _region(args, img.shape)
    report = segment(img, args.model, config, region, snapshots=bool(args.snapshots))
    if args.out_mask:
        save_mask(report.mask, args.out_mask)
    if args.out_overlay:
        save_image(render_overlay(img, report.phi), args.out_overlay)
    if args.snapshots:
        dump_snapshots(report, args.snapshots, config)
    state = "converged" if report.converged else "not converged"
    print(f"{report.model}: {report.iterations} iterations, {state}, {report.elapsed:.3f}s, "
          f"mask area {report.mask.area}", file=sys.stderr)
    if truth is not None:
        rec = _metrics_row(report, truth, str(args.input))
        write_csv(args.out_csv, CSV_COLUMNS, [rec.row()], _config_comments(config, {"model": args.model}))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred = load_mask(args.input)
    truth = load_mask(args.truth)
    if pred.shape != truth.shape:
        raise UsageError(f"mask shapes differ: {pred.width}x{pred.height} vs {truth.width}x{truth.height}")
    rec = compare_masks(pred, truth, image=str(args.input))
    write_csv(args.out_csv, CSV_COLUMNS, [rec.row()])
    return EXIT_OK


def parse_values(text: str) -> list[float]:
    """``"0,0.5,1"`` or inclusive ``"start:stop:step"``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            vals = [round(start + i * step, 12) for i in range(max(count, 0))]
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --values {text!r}: {exc}") from exc
    if not vals or not all(np.isfinite(vals)):
        raise UsageError(f"--values {text!r} gives no usable values")
    return sorted(vals)


def run_sweep(img, truth, param: str, values, config: ModelConfig, model: str = "proposed",
              region=None) -> list[dict]:
    """One segmentation per value, rows sorted by value; failures stay in their row."""
    field = SWEEP_PARAMS[param]
    rows = []
    for v in sorted(values):
        row = {"value": v}
        try:
            cfg = dataclasses.replace(config, **{field: v})
            rep = segment(img, model, cfg, region)
            rec = compare_masks(rep.mask, truth)
            row.update(f=rec.f, precision=rec.precision, recall=rec.recall, iterations=rep.iterations,
                       converged=int(rep.converged), elapsed_s=rep.elapsed, error="")
        except ValueError as exc:
            row.update(error=str(exc))
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    config = build_config(args)
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    values = parse_values(args.values)
    if args.param == "lambda" and min(values) < 0:
        raise UsageError("lambda values must be >= 0")
    if args.param == "alpha" and min(values) <= 0:
        raise UsageError("alpha values must be > 0")
    img = load_image(args.input)
    truth = load_mask(args.truth)
    region = _region(args, img.shape)
    rows = run_sweep(img, truth, args.param, values, config, args.model, region)
    extra = {"model": args.model, "sweep": args.param, "input": str(args.input)}
    write_csv(args.out_csv, SWEEP_COLUMNS, rows, _config_comments(config, extra))
    return EXIT_OK


@dataclasses.dataclass
class ManifestRow:
    image: Path
    truth: Path
    overrides: dict


def load_manifest(path) -> list[ManifestRow]:
    """Rows of ``image,truth[,overrides-json]``; paths relative to the manifest."""
    path = Path(path)
    base = path.parent
    rows, seen = [], set()
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or rec[0].startswith("#"):
                continue
            if lineno == 1 and rec[0].strip().lower() == "image":
                continue
            if len(rec) not in (2, 3):
                raise UsageError(f"{path}:{lineno}: expected image,truth[,overrides]")
            img, truth = (base / rec[0].strip()), (base / rec[1].strip())
            overrides = {}
            if len(rec) == 3 and rec[2].strip():
                try:
                    overrides = json.loads(rec[2])
                except json.JSONDecodeError as exc:
                    raise UsageError(f"{path}:{lineno}: bad overrides JSON: {exc}") from exc
                if not isinstance(overrides, dict):
                    raise UsageError(f"{path}:{lineno}: overrides must be a JSON object")
            for p in (img, truth):
                if not p.is_file():
                    raise FileNotFoundError(f"{path}:{lineno}: no such file {p}")
            key = str(img.resolve())
            if key in seen:
                raise UsageError(f"{path}:{lineno}: duplicate image {rec[0]}")
            seen.add(key)
            rows.append(ManifestRow(img, truth, overrides))
    if not rows:
        raise UsageError(f"{path}: manifest has no rows")
    return rows


def run_bench(manifest: list[ManifestRow], models, config: ModelConfig) -> tuple[list[dict], list[dict]]:
    """Per-image, per-model rows and the per-model average rows."""
    data_rows, records = [], []
    for entry in manifest:
        for model in models:
            try:
                cfg = ModelConfig.from_mapping(entry.overrides, config)
                img = load_image(entry.image)
                truth = load_mask(entry.truth)
                rep = segment(img, model, cfg)
                rec = _metrics_row(rep, truth, str(entry.image))
                records.append(rec)
                data_rows.append({**rec.row(), "error": ""})
            except (OSError, ValueError, KeyError) as exc:
                data_rows.append({"image": str(entry.image), "model": model, "error": str(exc)})
    avg_rows = []
    if records:
        for s in timing_summary(records):
            avg_rows.append({"image": "Ave.", "model": s.model, "precision": s.mean_precision,
                             "recall": s.mean_recall, "f": s.mean_f, "elapsed_s": s.mean_elapsed, "error": ""})
    return data_rows, avg_rows


def cmd_bench(args) -> int:
    config = build_config(args)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    if not models:
        raise UsageError("--models needs at least one of " + ", ".join(MODELS))
    bad = [m for m in models if m not in MODELS]
    if bad:
        raise UsageError(f"unknown model(s) {', '.join(bad)}; choose from {', '.join(MODELS)}")
    manifest = load_manifest(args.manifest)
    data_rows, avg_rows = run_bench(manifest, models, config)
    write_csv(args.out_csv, BENCH_COLUMNS, data_rows + avg_rows,
              _config_comments(config, {"models": models, "manifest": str(args.manifest)}))
    for r in avg_rows:
        print(f"{r['model']}: mean F {r['f']:.4f}, mean time {r['elapsed_s']:.3f}s", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    width = args.width or args.size
    height = args.height or args.size
    try:
        img, truth = make_synthetic(args.kind, width, height, args.noise, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.kind}_{width}x{height}_s{args.seed}"
    img_path = Path(args.out_image) if args.out_image else out_dir / f"{stem}.pgm"
    truth_path = Path(args.out_truth) if args.out_truth else out_dir / f"{stem}_truth.pgm"
    save_image(img, img_path)
    save_mask(truth, truth_path)
    print(f"seed={args.seed} image={img_path} truth={truth_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mfspf", description="Multi-feature SPF active contour segmentation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("segment", help="segment one image")
    p.add_argument("--input", required=True)
    p.add_argument("--truth")
    p.add_argument("--model", choices=MODELS, default="proposed")
    p.add_argument("--out-mask")
    p.add_argument("--out-overlay")
    p.add_argument("--snapshots", metavar="DIR")
    p.add_argument("--init-rect", metavar="CX,CY,W,H")
    p.add_argument("--out-csv", default="-")
    _add_config_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="score a mask file against a truth mask")
    p.add_argument("--input", required=True, help="predicted mask")
    p.add_argument("--truth", required=True)
    p.add_argument("--out-csv", default="-")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="F value over a range of lambda or alpha")
    p.add_argument("--input", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma list or start:stop:step (inclusive)")
    p.add_argument("--model", choices=MODELS, default="proposed")
    p.add_argument("--init-rect", metavar="CX,CY,W,H")
    p.add_argument("--out-csv", default="-")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="run models over a manifest of images")
    p.add_argument("--manifest", required=True)
    p.add_argument("--models", default="proposed,slgs")
    p.add_argument("--out-csv", default="-")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic image and its truth mask")
    p.add_argument("--kind", required=True, choices=SYNTHETIC_KINDS)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--out-image")
    p.add_argument("--out-truth")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mfspf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ImageFormatError) as exc:
        print(f"mfspf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mfspf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"mfspf: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
