"""Chained augmentation mixing.

Up to ``num_chains`` augmentation chains are applied to the input, their
outputs mixed by Dirichlet weights and then convexly mixed with the
original image by a Beta-drawn weight m:

    out = m * x + (1 - m) * sum_i(w_i * H_i(x))

Geometric consistency rule: mixing chains pixelwise is only well defined
when every chain shares the same geometry, so at most one geometric
transform is drawn per sample (probability |geometric| / |op set|).  When
drawn, it runs with identical parameters as the first step of every chain
and on the mask (nearest-neighbor); all remaining chain slots hold
photometric ops, which never touch the mask.

Op strengths scale linearly with ``magnitude_level`` (1..10); at level 10
a rotation reaches 30 degrees, a shear 0.3, a translation a third of the
image side.  A sub-level jitter factor is drawn per op, so repeated ops at
one level still vary in strength.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageOps
from scipy import ndimage

from .errors import ValidationError
from .imageio import from_uint8, to_uint8

PHOTOMETRIC_OPS = ("auto_contrast", "equalize", "posterize", "solarize")
GEOMETRIC_OPS = ("rotate", "shear_x", "shear_y", "translate_x", "translate_y")
OP_SET = PHOTOMETRIC_OPS + GEOMETRIC_OPS

MAX_LEVEL = 10

# Strength of each parameterized op at MAX_LEVEL.  rotate is in degrees,
# shear in slope units, translate in fraction of the image side.  posterize
# starts from 4 kept bit-planes and loses up to 3 more as strength grows;
# solarize lowers its threshold from 1.0 by up to the full range.
MAX_STRENGTH = {
    "rotate": 30.0,
    "shear_x": 0.3,
    "shear_y": 0.3,
    "translate_x": 1.0 / 3.0,
    "translate_y": 1.0 / 3.0,
    "posterize": 4,
    "solarize": 1.0,
}


@dataclass(frozen=True)
class AugPolicy:
    num_chains: int = 3
    max_ops_per_chain: int = 3
    magnitude_level: int = 3
    beta_params: tuple[float, float] = (1.0, 1.0)
    dirichlet_param: float = 1.0

    def __post_init__(self):
        if self.num_chains < 1:
            raise ValidationError(f"num_chains must be >= 1, got {self.num_chains}")
        if self.max_ops_per_chain < 1:
            raise ValidationError(
                f"max_ops_per_chain must be >= 1, got {self.max_ops_per_chain}"
            )
        if not 1 <= self.magnitude_level <= MAX_LEVEL:
            raise ValidationError(
                f"magnitude_level must be in [1, {MAX_LEVEL}], got {self.magnitude_level}"
            )
        if min(self.beta_params) <= 0 or self.dirichlet_param <= 0:
            raise ValidationError("distribution parameters must be positive")


@dataclass(frozen=True)
class MixCoefficients:
    m: float
    w: tuple[float, ...]

    def __post_init__(self):
        if not 0.0 <= self.m <= 1.0:
            raise ValidationError(f"m must be in [0, 1], got {self.m}")
        if any(wi < 0 for wi in self.w):
            raise ValidationError("chain weights must be non-negative")
        if abs(sum(self.w) - 1.0) > 1e-9:
            raise ValidationError(f"chain weights must sum to 1, got {sum(self.w)}")


def sample_mix_coefficients(
    rng: np.random.Generator, k: int, policy: AugPolicy
) -> MixCoefficients:
    """Draw m ~ Beta and a length-k simplex of chain weights ~ Dirichlet."""
    if k < 1:
        raise ValidationError(f"chain count must be >= 1, got {k}")
    m = float(rng.beta(*policy.beta_params))
    w = rng.dirichlet([policy.dirichlet_param] * k)
    return MixCoefficients(m=m, w=tuple(float(x) for x in w))


def sample_op_magnitude(op: str, level: int, rng: np.random.Generator):
    """Concrete parameter for one op draw at a global magnitude level."""
    if op not in OP_SET:
        raise ValidationError(f"unknown augmentation op {op!r}")
    if op in ("auto_contrast", "equalize"):
        return None
    frac = rng.uniform(0.1, level) / MAX_LEVEL
    if op == "posterize":
        return int(MAX_STRENGTH["posterize"]) - min(int(4 * frac), 3)
    if op == "solarize":
        return 1.0 - MAX_STRENGTH["solarize"] * frac
    magnitude = MAX_STRENGTH[op] * frac
    if rng.random() < 0.5:
        magnitude = -magnitude
    return magnitude


def apply_aug_op(img: np.ndarray, mask, op: str, magnitude):
    """Apply one base op; photometric ops leave the mask untouched.

    Geometric ops use bilinear interpolation with zero-filled borders on
    the image and nearest-neighbor with the identical parameters on the
    mask.
    """
    arr = _as_image(img)
    if op in PHOTOMETRIC_OPS:
        return _PHOTOMETRIC[op](arr, magnitude), mask
    if op in GEOMETRIC_OPS:
        matrix, offset = _affine_params(op, magnitude, arr.shape[0], arr.shape[1])
        out = np.stack(
            [
                ndimage.affine_transform(
                    arr[:, :, c], matrix, offset=offset, order=1, cval=0.0,
                    mode="constant",
                )
                for c in range(arr.shape[2])
            ],
            axis=2,
        )
        out_mask = mask
        if mask is not None:
            out_mask = ndimage.affine_transform(
                np.asarray(mask), matrix, offset=offset, order=0, cval=0,
                mode="constant",
            )
        return np.clip(out, 0.0, 1.0), out_mask
    raise ValidationError(f"unknown augmentation op {op!r}")


def chained_augmix(
    img: np.ndarray,
    mask,
    policy: AugPolicy,
    rng: np.random.Generator,
    coefficients: MixCoefficients | None = None,
):
    """Mix chain outputs with the original image; returns (image, mask, meta).

    ``coefficients`` is a test hook bypassing the Beta/Dirichlet draw.  An
    injected m=1 short-circuits to the identity (no chain is evaluated, so
    the mask is returned unchanged).  Draw order is fixed: coefficients,
    geometric-prefix probe, then per chain the depth, ops, and magnitudes.
    """
    arr = _as_image(img)
    coeffs = coefficients
    if coeffs is None:
        coeffs = sample_mix_coefficients(rng, policy.num_chains, policy)
    if len(coeffs.w) != policy.num_chains:
        raise ValidationError(
            f"got {len(coeffs.w)} chain weights for {policy.num_chains} chains"
        )
    meta = {"m": coeffs.m, "w": list(coeffs.w), "geo": None, "chains": []}
    if coeffs.m == 1.0:
        return arr.copy(), _copy_mask(mask), meta

    probe = OP_SET[int(rng.integers(len(OP_SET)))]
    geo = None
    if probe in GEOMETRIC_OPS:
        geo = (probe, sample_op_magnitude(probe, policy.magnitude_level, rng))
        base, out_mask = apply_aug_op(arr, mask, *geo)
        meta["geo"] = [geo[0], float(geo[1])]
    else:
        base, out_mask = arr, _copy_mask(mask)

    mix = np.zeros_like(arr)
    for i in range(policy.num_chains):
        depth = 1 + int(rng.integers(policy.max_ops_per_chain))
        chain_ops = []
        h = base
        n_photo = depth - 1 if geo is not None else depth
        for _ in range(n_photo):
            op = PHOTOMETRIC_OPS[int(rng.integers(len(PHOTOMETRIC_OPS)))]
            mag = sample_op_magnitude(op, policy.magnitude_level, rng)
            h, _ = apply_aug_op(h, None, op, mag)
            chain_ops.append([op, _json_magnitude(op, mag)])
        meta["chains"].append(chain_ops)
        mix += coeffs.w[i] * h

    np.multiply(mix, 1.0 - coeffs.m, out=mix)
    mix += coeffs.m * arr
    np.clip(mix, 0.0, 1.0, out=mix)
    return mix, out_mask, meta


def _copy_mask(mask):
    return None if mask is None else np.asarray(mask).copy()


def _json_magnitude(op, mag):
    if mag is None:
        return None
    return int(mag) if op == "posterize" else float(mag)


def _as_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValidationError(f"image must be H x W [x C], got shape {arr.shape}")
    return arr


# --- photometric ops (float [0, 1] in and out, deterministic) ---


def _auto_contrast(arr: np.ndarray, _magnitude) -> np.ndarray:
    out = arr.copy()
    for c in range(arr.shape[2]):  # per-channel reductions stay contiguous
        ch = arr[:, :, c]
        lo = ch.min()
        hi = ch.max()
        if hi > lo:
            out[:, :, c] = (ch - lo) / (hi - lo)
    return out


def _equalize(arr: np.ndarray, _magnitude) -> np.ndarray:
    # 8-bit histogram equalization; round-trips through PIL's LUT routine.
    data = to_uint8(arr)
    if data.shape[2] == 1:
        eq = ImageOps.equalize(Image.fromarray(data[:, :, 0], mode="L"))
        return from_uint8(np.asarray(eq))[:, :, None]
    eq = ImageOps.equalize(Image.fromarray(data, mode="RGB"))
    return from_uint8(np.asarray(eq))


def _posterize(arr: np.ndarray, bits) -> np.ndarray:
    if not isinstance(bits, (int, np.integer)) or not 1 <= int(bits) <= 8:
        raise ValidationError(f"posterize bits must be an int in [1, 8], got {bits}")
    shift = 8 - int(bits)
    data = (to_uint8(arr) >> shift) << shift
    return from_uint8(data)


def _solarize(arr: np.ndarray, threshold) -> np.ndarray:
    if not 0.0 <= float(threshold) <= 1.0:
        raise ValidationError(f"solarize threshold must be in [0, 1], got {threshold}")
    # Pixels strictly above the threshold are inverted.
    out = arr.copy()
    sel = arr > float(threshold)
    out[sel] = 1.0 - arr[sel]
    return out


_PHOTOMETRIC = {
    "auto_contrast": _auto_contrast,
    "equalize": _equalize,
    "posterize": _posterize,
    "solarize": _solarize,
}


def _affine_params(op: str, magnitude, height: int, width: int):
    mag = float(magnitude)
    limit = MAX_STRENGTH[op]
    if abs(mag) > limit + 1e-9 and op != "rotate":
        raise ValidationError(f"{op} magnitude {mag} outside [-{limit}, {limit}]")
    if op == "rotate":
        if abs(mag) > MAX_STRENGTH["rotate"] + 1e-9:
            raise ValidationError(f"rotate degrees {mag} outside documented range")
        theta = np.deg2rad(mag)
        matrix = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        center = np.array([(height - 1) / 2.0, (width - 1) / 2.0])
        return matrix, center - matrix @ center
    if op == "shear_x":
        return np.array([[1.0, 0.0], [mag, 1.0]]), np.zeros(2)
    if op == "shear_y":
        return np.array([[1.0, mag], [0.0, 1.0]]), np.zeros(2)
    if op == "translate_x":
        return np.eye(2), np.array([0.0, mag * width])
    return np.eye(2), np.array([mag * height, 0.0])
