"""Command-line surface.

Exit codes: 0 success, 2 validation failure (a machine-readable JSON
error record goes to stderr), 1 unexpected failure.  Generation commands
require an explicit seed (``--seed`` or the config's ``seed``); worker
count for epoch materialization comes from ``--workers`` or the
FDAPIPE_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ABI_VERSION, __version__
from .augmix import AugPolicy, chained_augmix
from .config import load_config, preset_config, write_config
from .corruptions import KINDS, SEVERITIES, corruption_suite
from .curriculum import CurriculumConfig, schedule_table, write_schedule_csv
from .errors import ValidationError
from .fusion import FusionParams, fda_transform
from .imageio import load_image, load_mask, save_image, save_mask
from .pipeline import DatasetManifest, evaluate_masks, generate_epoch, run_all
from .rng import sample_rng


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ValidationError as exc:
        _fail("validation", str(exc))
        return 2
    except OSError as exc:
        _fail("io", str(exc))
        return 1


def _fail(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdapipe",
        description="Curriculum-scheduled spectral fusion and augmentation pipeline.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("fuse", help="blend target amplitude into a source image")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("schedule", help="emit a coefficient schedule as CSV")
    p.add_argument("--kind", default="linear")
    p.add_argument("--beta-opt", type=float, required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--epoch-ratio", type=float, required=True)
    p.add_argument("--gamma", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("augment", help="apply chained augmentation mixing to one image")
    p.add_argument("--in", dest="image", required=True)
    p.add_argument("--mask", default=None)
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--chains", type=int, default=3)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--out-mask", default=None)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("corrupt", help="materialize the corruption grid for a directory")
    p.add_argument("--in", dest="dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--kinds", nargs="*", default=None, choices=list(KINDS))
    p.add_argument("--severities", nargs="*", type=int, default=None,
                   choices=list(SEVERITIES))
    p.add_argument("--assets", default=None)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("epoch", help="materialize one training epoch")
    p.add_argument("--config", required=True)
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--float-dump", action="store_true")
    p.set_defaults(func=_cmd_epoch)

    p = sub.add_parser("run", help="materialize every epoch of a run")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--float-dump", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("dice", help="mask-overlap report for prediction/GT directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--classes", nargs="+", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_dice)

    p = sub.add_parser("sweep", help="schedule curves over epoch-ratio and kind grids")
    p.add_argument("--epoch-ratios", nargs="+", type=float, required=True)
    p.add_argument("--kinds", nargs="+", default=["linear", "exponential"])
    p.add_argument("--beta-opt", type=float, required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--gamma", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("init-config", help="write a run config from a preset")
    p.add_argument("--preset", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--source-images", default=None)
    p.add_argument("--source-masks", default=None)
    p.add_argument("--target-images", default=None)
    p.add_argument("--output-root", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_init_config)

    p = sub.add_parser("make-fixtures", help="generate a small synthetic PNG corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--npy", action="store_true",
                   help="also dump the decoded float arrays")
    p.set_defaults(func=_cmd_make_fixtures)

    p = sub.add_parser("abi", help="print the wire-protocol identity")
    p.set_defaults(func=_cmd_abi)

    p = sub.add_parser("serve", help="speak the binary frame protocol on stdio")
    p.set_defaults(func=_cmd_serve)

    return parser


def _cmd_fuse(args) -> int:
    out = fda_transform(
        load_image(args.src),
        load_image(args.tgt),
        FusionParams(alpha=args.alpha, beta=args.beta),
    )
    save_image(args.out, out)
    return 0


def _cmd_schedule(args) -> int:
    cfg = CurriculumConfig(
        beta_opt=args.beta_opt,
        epoch_ratio=args.epoch_ratio,
        total_epochs=args.epochs,
        kind=args.kind,
        exp_curvature=args.gamma,
    )
    write_schedule_csv(schedule_table(cfg, seed=args.seed), args.out)
    return 0


def _cmd_augment(args) -> int:
    img = load_image(args.image)
    mask = load_mask(args.mask) if args.mask else None
    policy = AugPolicy(
        num_chains=args.chains,
        max_ops_per_chain=args.depth,
        magnitude_level=args.level,
    )
    out, out_mask, _meta = chained_augmix(
        img, mask, policy, sample_rng(args.seed, 0, 0)
    )
    save_image(args.out, out)
    if out_mask is not None and args.out_mask:
        save_mask(args.out_mask, out_mask)
    return 0


def _cmd_corrupt(args) -> int:
    manifest = corruption_suite(
        args.dataset,
        args.out,
        seed=args.seed,
        kinds=args.kinds,
        severities=args.severities,
        assets_dir=args.assets,
    )
    failures = [row for row in manifest if "error" in row]
    sys.stdout.write(
        json.dumps({"written": len(manifest) - len(failures), "failed": len(failures)})
        + "\n"
    )
    return 0


def _cmd_epoch(args) -> int:
    cfg = load_config(args.config)
    manifest = _manifest_from_config(cfg)
    rows = generate_epoch(
        manifest, cfg, args.epoch, workers=args.workers, float_dump=args.float_dump
    )
    failures = [r for r in rows if "error" in r]
    sys.stdout.write(
        json.dumps({"epoch": args.epoch, "written": len(rows) - len(failures),
                    "failed": len(failures)}) + "\n"
    )
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = _manifest_from_config(cfg)
    per_epoch = run_all(
        manifest, cfg, workers=args.workers, float_dump=args.float_dump
    )
    total = sum(len(rows) for rows in per_epoch)
    failed = sum(1 for rows in per_epoch for r in rows if "error" in r)
    sys.stdout.write(
        json.dumps({"epochs": len(per_epoch), "written": total - failed,
                    "failed": failed}) + "\n"
    )
    return 0


def _cmd_dice(args) -> int:
    report = evaluate_masks(args.pred, args.gt, args.classes)
    mean, std = report.overall()
    if args.out:
        report.write_csv(args.out)
    sys.stdout.write(
        json.dumps(
            {
                "mean": mean,
                "std": std,
                "per_class": {
                    str(cid): {"mean": m, "std": s}
                    for cid, (m, s) in report.per_class().items()
                },
                "skipped": len(report.skipped),
            }
        )
        + "\n"
    )
    return 0


def _cmd_sweep(args) -> int:
    import csv

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "epoch_ratio", "epoch", "beta"])
        for kind in args.kinds:
            for ratio in args.epoch_ratios:
                cfg = CurriculumConfig(
                    beta_opt=args.beta_opt,
                    epoch_ratio=ratio,
                    total_epochs=args.epochs,
                    kind=kind,
                    exp_curvature=args.gamma,
                )
                for epoch, beta in schedule_table(cfg, seed=args.seed):
                    writer.writerow([kind, ratio, epoch, f"{beta:.12g}"])
    return 0


def _cmd_init_config(args) -> int:
    values = preset_config(
        args.preset,
        seed=args.seed,
        source_images=args.source_images,
        source_masks=args.source_masks,
        target_images=args.target_images,
        output_root=args.output_root,
        epochs=args.epochs,
    )
    write_config(args.out, values)
    return 0


def _cmd_make_fixtures(args) -> int:
    from scipy import ndimage

    from .imageio import to_uint8

    out = Path(args.out)
    rng = np.random.default_rng([args.seed])
    h, w = args.height, args.width
    for role in ("source", "target"):
        (out / role).mkdir(parents=True, exist_ok=True)
    (out / "source_masks").mkdir(parents=True, exist_ok=True)
    if args.npy:
        for role in ("source", "target"):
            (out / f"{role}_npy").mkdir(parents=True, exist_ok=True)

    for role in ("source", "target"):
        for i in range(args.count):
            field = ndimage.gaussian_filter(
                rng.random((h, w, 3)), sigma=(max(h, w) / 16, max(h, w) / 16, 0)
            )
            lo = field.min(axis=(0, 1), keepdims=True)
            hi = field.max(axis=(0, 1), keepdims=True)
            img8 = to_uint8((field - lo) / np.maximum(hi - lo, 1e-12))
            name = f"{role[0]}{i:04d}"
            save_image(out / role / f"{name}.png", img8 / 255.0)
            if args.npy:
                np.save(out / f"{role}_npy" / f"{name}.npy", img8 / 255.0)
            if role == "source":
                mask = np.zeros((h, w), dtype=np.int32)
                for label in (1, 2):
                    cy, cx = rng.integers(0, h), rng.integers(0, w)
                    r = max(2, int(min(h, w) * 0.2))
                    yy, xx = np.ogrid[:h, :w]
                    mask[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = label
                save_mask(out / "source_masks" / f"{name}.png", mask)
                if args.npy:
                    np.save(out / "source_npy" / f"{name}_mask.npy", mask)
    return 0


def _cmd_abi(args) -> int:
    sys.stdout.write(
        json.dumps({"name": "fdapipe", "abi": ABI_VERSION, "version": __version__})
        + "\n"
    )
    return 0


def _cmd_serve(args) -> int:
    from .serve import serve

    return serve()


def _manifest_from_config(cfg) -> DatasetManifest:
    if cfg.source_images is None or cfg.target_images is None:
        raise ValidationError("config must set source_images and target_images")
    return DatasetManifest.from_dirs(
        cfg.source_images,
        cfg.target_images,
        source_masks=cfg.source_masks,
        target_size=cfg.image_size,
    )


if __name__ == "__main__":
    sys.exit(main())
