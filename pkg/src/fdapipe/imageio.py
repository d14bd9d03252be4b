"""PNG decode/encode and resampling plumbing.

Images travel through the pipeline as H x W x C float64 arrays in [0, 1]
(8-bit PNG decoded as value/255); masks as H x W integer label arrays
with 0 reserved for background/fill.  Written rasters are 8-bit PNG with
round-to-nearest quantization.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ValidationError


def load_image(path: str | Path) -> np.ndarray:
    """Decode a raster file to an H x W x 3 float array in [0, 1]."""
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            return np.asarray(rgb, dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot decode image {path}: {exc}") from exc


def save_image(path: str | Path, image: np.ndarray, compress_level: int = 1) -> None:
    """Write 8-bit PNG.  Any compression level is lossless; the default is
    low because augmented rasters barely compress and encode speed matters
    more than a few percent of disk."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValidationError(f"cannot encode image of shape {arr.shape}")
    data = to_uint8(arr)
    if data.shape[2] == 1:
        Image.fromarray(data[:, :, 0], mode="L").save(path, compress_level=compress_level)
    else:
        Image.fromarray(data, mode="RGB").save(path, compress_level=compress_level)


def load_mask(path: str | Path) -> np.ndarray:
    """Decode a single-channel label raster to an H x W int array."""
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "P", "I", "I;16"):
                im = im.convert("L")
            return np.asarray(im, dtype=np.int32)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot decode mask {path}: {exc}") from exc


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValidationError(f"cannot encode mask of shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 255:
        raise ValidationError("mask labels must fit in 8 bits for PNG output")
    Image.fromarray(arr.astype(np.uint8), mode="L").save(path)


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] floats to 8-bit, round-to-nearest."""
    buf = np.asarray(image, dtype=np.float64) * 255.0
    np.rint(buf, out=buf)
    np.clip(buf, 0, 255, out=buf)
    return buf.astype(np.uint8)


def from_uint8(data: np.ndarray) -> np.ndarray:
    return np.asarray(data, dtype=np.float64) / 255.0


def resize_bilinear(image: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinearly resample an image (or 2-D channel) to height x width."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return _resize_channel(arr, height, width)
    if arr.ndim == 3:
        return np.stack(
            [_resize_channel(arr[:, :, c], height, width) for c in range(arr.shape[2])],
            axis=2,
        )
    raise ValidationError(f"cannot resize array of shape {arr.shape}")


def resize_mask_nearest(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    im = Image.fromarray(np.asarray(mask).astype(np.int32), mode="I")
    out = im.resize((width, height), resample=Image.Resampling.NEAREST)
    return np.asarray(out, dtype=np.int32)


def _resize_channel(channel: np.ndarray, height: int, width: int) -> np.ndarray:
    im = Image.fromarray(channel.astype(np.float32), mode="F")
    out = im.resize((width, height), resample=Image.Resampling.BILINEAR)
    return np.asarray(out, dtype=np.float64)
