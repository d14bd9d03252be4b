#!/usr/bin/env python3
"""Regenerate the frozen rasters under tests/goldens/.

Golden values come from the independent reference paths in tests/oracles.py
wherever one exists (fusion via the naive double-sum transforms); values
without an analytic reference are frozen from the library path once and
guarded against drift.  Rerun only when a documented convention changes.
"""

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import reference_fused_image, seeded_image  # noqa: E402

from fdapipe import AugPolicy, chained_augmix, transform_sample  # noqa: E402
from fdapipe.augmix import apply_aug_op  # noqa: E402
from fdapipe.config import from_mapping  # noqa: E402
from fdapipe.corruptions import CorruptionSpec, corrupt  # noqa: E402
from fdapipe.imageio import save_image  # noqa: E402
from fdapipe.rng import corruption_rng, sample_rng  # noqa: E402

GOLDENS = ROOT / "tests" / "goldens"


def main():
    GOLDENS.mkdir(parents=True, exist_ok=True)

    # Fusion 16x16, alpha=1, beta=0.25 -- computed by the naive-DFT path.
    src = seeded_image(101, 16, 16)
    tgt = seeded_image(202, 16, 16)
    fused = reference_fused_image(src, tgt, alpha=1.0, beta=0.25)
    np.save(GOLDENS / "fusion_16x16_a1_b025.npy", fused)

    # Posterize to 4 bits on a deterministic ramp.
    ramp = np.linspace(0.0, 1.0, 32 * 32 * 3).reshape(32, 32, 3)
    post, _ = apply_aug_op(ramp, None, "posterize", 4)
    np.save(GOLDENS / "posterize_ramp_4bit.npy", post)

    # Chained augmentation mixing, default policy, fixed seed (frozen).
    img = seeded_image(303, 32, 32)
    mask = (seeded_image(304, 32, 32)[:, :, 0] > 0.5).astype(np.int32)
    out, out_mask, meta = chained_augmix(
        img, mask, AugPolicy(), sample_rng(99, 0, 0)
    )
    np.save(GOLDENS / "augmix_32x32_seed99.npy", out)
    np.save(GOLDENS / "augmix_32x32_seed99_mask.npy", out_mask)
    (GOLDENS / "augmix_32x32_seed99_meta.json").write_text(json.dumps(meta, indent=1))

    # Full per-sample transform, 16x16 fixtures, fixed seed (frozen).
    cfg = from_mapping(
        {
            "seed": 41,
            "epochs": 10,
            "epoch_ratio": 0.5,
            "scheduler": "linear",
            "beta_opt": 0.5,
            "alpha": 1.0,
            "aug_level": 3,
            "image_height": 16,
            "image_width": 16,
        }
    )
    s_img = seeded_image(505, 16, 16)
    s_mask = (seeded_image(506, 16, 16)[:, :, 0] > 0.6).astype(np.int32)
    t_img = seeded_image(507, 16, 16)
    out, out_mask, meta = transform_sample(s_img, s_mask, t_img, cfg, 3, 0)
    np.save(GOLDENS / "sample_16x16_seed41_e3.npy", out)
    np.save(GOLDENS / "sample_16x16_seed41_e3_mask.npy", out_mask)
    (GOLDENS / "sample_16x16_seed41_e3_meta.json").write_text(
        json.dumps(meta, indent=1)
    )

    # Pixelate severity 5 on a smooth 384x384 fixture (frozen PNG).
    big = _smooth_image(384, 384, seed=7)
    out = corrupt(
        big, CorruptionSpec("pixelate", 5), corruption_rng(7, "golden", 13, 5)
    )
    save_image(GOLDENS / "pixelate_384_s5.png", out)
    save_image(GOLDENS / "pixelate_384_src.png", big)

    print(f"goldens written to {GOLDENS}")


def _smooth_image(h, w, seed):
    from scipy import ndimage

    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.random((h, w, 3)), sigma=(12, 12, 0))
    lo = field.min(axis=(0, 1), keepdims=True)
    hi = field.max(axis=(0, 1), keepdims=True)
    return np.round((field - lo) / (hi - lo) * 255.0) / 255.0


if __name__ == "__main__":
    main()
