"""Dataset ingestion, the epoch loop, and segmentation metrics.

An epoch pairs every source record with a uniformly drawn target record
(reseeded per epoch), pushes each pair through amplitude fusion at the
scheduled coefficient and then through chained augmentation mixing, and
writes exactly one output image per pair.  All randomness is derived from
(seed, epoch[, sample index]) lineages, so generation is reproducible and
embarrassingly parallel: worker count never changes a byte of output.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .augmix import MixCoefficients, chained_augmix
from .config import RunConfig
from .curriculum import schedule_beta
from .errors import ValidationError
from .fusion import FusionParams, fda_transform
from .imageio import (
    load_image,
    load_mask,
    resize_bilinear,
    resize_mask_nearest,
    save_image,
    save_mask,
)
from .rng import epoch_rng, pairing_rng, sample_rng

WORKERS_ENV = "FDAPIPE_WORKERS"


@dataclass(frozen=True)
class ManifestRecord:
    image: Path
    mask: Path | None
    domain: str

    def __post_init__(self):
        if self.domain not in ("source", "target"):
            raise ValidationError(f"unknown domain tag {self.domain!r}")
        if self.domain == "target" and self.mask is not None:
            raise ValidationError("target records do not carry masks")


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[ManifestRecord, ...]
    target_size: tuple[int, int]

    def __post_init__(self):
        if not self.sources or not self.targets:
            raise ValidationError(
                "manifest needs at least one source and one target record"
            )

    @property
    def sources(self) -> list[ManifestRecord]:
        return [r for r in self.records if r.domain == "source"]

    @property
    def targets(self) -> list[ManifestRecord]:
        return [r for r in self.records if r.domain == "target"]

    @classmethod
    def from_dirs(
        cls,
        source_images: str | Path,
        target_images: str | Path,
        source_masks: str | Path | None = None,
        target_size: tuple[int, int] = (384, 384),
    ) -> "DatasetManifest":
        """Scan directories; masks are matched to source images by stem."""
        records = []
        masks_dir = Path(source_masks) if source_masks else None
        for path in _list_images(source_images):
            mask = None
            if masks_dir is not None:
                candidate = masks_dir / f"{path.stem}.png"
                if not candidate.exists():
                    raise ValidationError(f"missing mask for {path.name}")
                mask = candidate
            records.append(ManifestRecord(image=path, mask=mask, domain="source"))
        for path in _list_images(target_images):
            records.append(ManifestRecord(image=path, mask=None, domain="target"))
        return cls(records=tuple(records), target_size=target_size)

    def validate_files(self) -> list[dict]:
        """Try to decode every record; returns per-file error records."""
        errors = []
        for rec in self.records:
            try:
                load_image(rec.image)
                if rec.mask is not None:
                    load_mask(rec.mask)
            except ValidationError as exc:
                errors.append({"path": str(rec.image), "error": str(exc)})
        return errors


def transform_sample(
    src_img: np.ndarray,
    mask: np.ndarray | None,
    tgt_img: np.ndarray,
    cfg: RunConfig,
    epoch: int,
    sample_index: int,
    coefficients: MixCoefficients | None = None,
):
    """One source/target pair -> (image, mask, meta) for one epoch.

    The fusion coefficient comes from the epoch schedule; augmentation
    randomness comes from the (seed, epoch, sample_index) stream.  With
    ``cfg.augment`` off the fused image passes through unchanged.
    """
    beta = schedule_beta(cfg.curriculum, epoch, epoch_rng(cfg.seed, epoch))
    fused = fda_transform(src_img, tgt_img, FusionParams(alpha=cfg.alpha, beta=beta))
    meta = {"epoch": epoch, "index": sample_index, "beta": beta}
    if cfg.augment:
        rng = sample_rng(cfg.seed, epoch, sample_index)
        out, out_mask, aug_meta = chained_augmix(
            fused, mask, cfg.aug, rng, coefficients=coefficients
        )
        meta.update(aug_meta)
    else:
        out = fused
        out_mask = None if mask is None else np.asarray(mask).copy()
    return out, out_mask, meta


def generate_epoch(
    manifest: DatasetManifest,
    cfg: RunConfig,
    epoch: int,
    workers: int | None = None,
    float_dump: bool = False,
) -> list[dict]:
    """Materialize one epoch to ``output_root/epoch_NNN``.

    Returns the manifest rows (also written as JSON lines next to the
    images).  Unreadable inputs become error rows; the run continues.
    ``float_dump`` additionally saves the pre-quantization float raster
    per sample (.npy), which downstream bindings use for exact parity.
    """
    if cfg.output_root is None:
        raise ValidationError("config has no output_root")
    out_dir = Path(cfg.output_root) / f"epoch_{epoch:03d}"
    out_dir.mkdir(parents=True, exist_ok=True)

    sources = manifest.sources
    targets = manifest.targets
    pick = pairing_rng(cfg.seed, epoch).integers(0, len(targets), size=len(sources))
    jobs = [
        (i, sources[i], targets[int(pick[i])], cfg, epoch,
         manifest.target_size, str(out_dir), float_dump)
        for i in range(len(sources))
    ]

    n_workers = _worker_count(workers)
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_epoch_job, jobs, chunksize=4))
    else:
        rows = [_epoch_job(job) for job in jobs]

    with open(out_dir / "manifest.jsonl", "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return rows


def run_all(
    manifest: DatasetManifest,
    cfg: RunConfig,
    workers: int | None = None,
    float_dump: bool = False,
) -> list[list[dict]]:
    return [
        generate_epoch(manifest, cfg, epoch, workers=workers, float_dump=float_dump)
        for epoch in range(cfg.curriculum.total_epochs)
    ]


def _epoch_job(args) -> dict:
    (index, src_rec, tgt_rec, cfg, epoch, size, out_dir, float_dump) = args
    row = {
        "index": index,
        "epoch": epoch,
        "source": str(src_rec.image),
        "target": str(tgt_rec.image),
        "seed": cfg.seed,
    }
    try:
        src = _load_sized(src_rec.image, size)
        # targets repeat across pairs within an epoch; cache per worker
        tgt = _load_sized_cached(str(tgt_rec.image), size[0], size[1])
        mask = None
        if src_rec.mask is not None:
            mask = resize_mask_nearest(load_mask(src_rec.mask), size[0], size[1])
        out, out_mask, meta = transform_sample(src, mask, tgt, cfg, epoch, index)
    except ValidationError as exc:
        row["error"] = str(exc)
        return row

    # Output paths are recorded relative to the epoch directory so the
    # manifest (and the whole tree) is byte-identical across runs and roots.
    stem = f"{index:05d}_{Path(src_rec.image).stem}"
    save_image(Path(out_dir) / f"{stem}.png", out, compress_level=0)
    row.update(meta)
    row["output"] = f"{stem}.png"
    if out_mask is not None:
        save_mask(Path(out_dir) / f"{stem}_mask.png", out_mask)
        row["mask_output"] = f"{stem}_mask.png"
    if float_dump:
        np.save(Path(out_dir) / f"{stem}.npy", out)
        if out_mask is not None:
            np.save(Path(out_dir) / f"{stem}_mask.npy", out_mask.astype(np.int32))
    return row


def _load_sized(path, size) -> np.ndarray:
    img = load_image(path)
    if img.shape[:2] != tuple(size):
        img = resize_bilinear(img, size[0], size[1])
    return img


@lru_cache(maxsize=8)
def _load_sized_cached(path: str, height: int, width: int) -> np.ndarray:
    return _load_sized(path, (height, width))


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError(f"bad {WORKERS_ENV} value {env!r}") from exc
    return 1


def _list_images(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ValidationError(f"not a directory: {directory}")
    return sorted(
        p for p in directory.iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )


# --- segmentation metrics ---


def dice(pred: np.ndarray, gt: np.ndarray, class_id: int) -> float:
    """2|P∩G| / (|P|+|G|) over pixels of one class; both empty -> 1.0."""
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.shape != g.shape:
        raise ValidationError(f"mask shapes differ: {p.shape} vs {g.shape}")
    p_sel = p == class_id
    g_sel = g == class_id
    denom = int(p_sel.sum()) + int(g_sel.sum())
    if denom == 0:
        return 1.0
    return 2.0 * int((p_sel & g_sel).sum()) / denom


@dataclass
class EvalReport:
    rows: list[tuple[str, int, float]]  # (filename, class_id, dice)
    skipped: list[dict]

    def per_class(self) -> dict[int, tuple[float, float]]:
        out = {}
        for cid in sorted({cid for _, cid, _ in self.rows}):
            vals = np.array([d for _, c, d in self.rows if c == cid])
            out[cid] = (float(vals.mean()), float(vals.std()))
        return out

    def overall(self) -> tuple[float, float]:
        vals = np.array([d for _, _, d in self.rows])
        if vals.size == 0:
            raise ValidationError("no mask pairs were evaluated")
        return float(vals.mean()), float(vals.std())

    def write_csv(self, path) -> None:
        mean, std = self.overall()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["file", "class", "dice"])
            for name, cid, val in self.rows:
                writer.writerow([name, cid, f"{val:.6f}"])
            for cid, (cmean, cstd) in self.per_class().items():
                writer.writerow(["mean", cid, f"{cmean:.6f}"])
                writer.writerow(["std", cid, f"{cstd:.6f}"])
            writer.writerow(["mean", "all", f"{mean:.6f}"])
            writer.writerow(["std", "all", f"{std:.6f}"])


def evaluate_masks(
    pred_dir: str | Path, gt_dir: str | Path, classes: list[int]
) -> EvalReport:
    """Dice for every same-named mask pair; std is population (ddof=0)."""
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    rows, skipped = [], []
    for pred_path in _list_images(pred_dir):
        gt_path = gt_dir / pred_path.name
        if not gt_path.exists():
            skipped.append({"path": str(pred_path), "error": "missing counterpart"})
            continue
        try:
            pred = load_mask(pred_path)
            gt = load_mask(gt_path)
            for cid in classes:
                rows.append((pred_path.name, cid, dice(pred, gt, cid)))
        except ValidationError as exc:
            skipped.append({"path": str(pred_path), "error": str(exc)})
    return EvalReport(rows=rows, skipped=skipped)
