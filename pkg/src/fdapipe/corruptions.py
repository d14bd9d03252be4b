"""Synthetic corruption generators for robustness evaluation.

15 corruption kinds in four groups (noise, blur, weather, digital), each
at severities 1..5.  Severity constants follow the published common-
corruptions benchmark where that benchmark defines them; the remaining
kinds (motion streaks, snow, frost, elastic) use the documented constants
below.  snow and frost are procedural approximations so the toolkit stays
self-contained; ``frost`` accepts an optional texture directory for
fidelity with the original benchmark's asset-based version.

All generators take and return H x W x C float arrays in [0, 1] and are
deterministic given their rng.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ValidationError
from .imageio import from_uint8, load_image, save_image, to_uint8
from .rng import corruption_rng

NOISE_KINDS = ("gaussian_noise", "shot_noise", "impulse_noise")
BLUR_KINDS = ("defocus_blur", "glass_blur", "motion_blur", "zoom_blur")
WEATHER_KINDS = ("snow", "frost", "fog", "brightness")
DIGITAL_KINDS = ("contrast", "elastic", "pixelate", "jpeg")
KINDS = NOISE_KINDS + BLUR_KINDS + WEATHER_KINDS + DIGITAL_KINDS

# Kinds whose mean PSNR over a fixture set decreases strictly with
# severity; checked by the acceptance suite.
MONOTONE_KINDS = (
    "gaussian_noise",
    "shot_noise",
    "impulse_noise",
    "defocus_blur",
    "motion_blur",
    "pixelate",
    "jpeg",
    "contrast",
)

SEVERITIES = (1, 2, 3, 4, 5)

# Severity tables, index 0 -> severity 1.
GAUSSIAN_SIGMA = (0.08, 0.12, 0.18, 0.26, 0.38)
SHOT_PHOTONS = (60.0, 25.0, 12.0, 5.0, 3.0)
IMPULSE_AMOUNT = (0.03, 0.06, 0.09, 0.17, 0.27)
DEFOCUS = ((3, 0.1), (4, 0.5), (6, 0.5), (8, 0.5), (10, 0.5))  # radius, alias sigma
GLASS = ((0.7, 1, 2), (0.9, 2, 1), (1.0, 2, 3), (1.1, 3, 2), (1.5, 4, 2))
MOTION_LENGTH = (7, 11, 15, 19, 23)  # streak length in pixels
ZOOM_MAX = (1.11, 1.16, 1.21, 1.26, 1.31)  # zoom factors swept in 0.01 steps
SNOW = (  # layer mean, layer std, zoom, threshold, streak length, blend
    (0.1, 0.3, 3.0, 0.5, 7, 0.8),
    (0.2, 0.3, 2.0, 0.5, 9, 0.7),
    (0.55, 0.3, 4.0, 0.9, 9, 0.7),
    (0.55, 0.3, 4.5, 0.85, 9, 0.65),
    (0.55, 0.3, 2.5, 0.85, 13, 0.55),
)
FROST = ((1.0, 0.4), (0.8, 0.6), (0.7, 0.7), (0.65, 0.7), (0.6, 0.75))
FOG = ((1.5, 2.0), (2.0, 2.0), (2.5, 1.7), (2.5, 1.5), (3.0, 1.4))
BRIGHTNESS_DELTA = (0.1, 0.2, 0.3, 0.4, 0.5)
CONTRAST_FACTOR = (0.4, 0.3, 0.2, 0.1, 0.05)
ELASTIC_ALPHA_FRAC = (0.02, 0.04, 0.06, 0.09, 0.13)  # displacement, fraction of side
ELASTIC_SIGMA_FRAC = 0.06  # smoothing of the displacement field
PIXELATE_FACTOR = (0.6, 0.5, 0.4, 0.3, 0.25)
JPEG_QUALITY = (25, 18, 15, 10, 7)


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown corruption kind {self.kind!r}")
        if self.severity not in SEVERITIES:
            raise ValidationError(
                f"severity must be in 1..5, got {self.severity}"
            )


def corrupt(
    img: np.ndarray,
    spec: CorruptionSpec,
    rng: np.random.Generator,
    assets_dir: str | Path | None = None,
) -> np.ndarray:
    """Apply one corruption; output stays in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValidationError(f"image must be H x W [x C], got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("image contains non-finite values")
    i = spec.severity - 1
    fn = _GENERATORS[spec.kind]
    if spec.kind == "frost":
        out = fn(arr, i, rng, assets_dir)
    else:
        out = fn(arr, i, rng)
    return np.clip(out, 0.0, 1.0)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for [0, 1] images; inf if equal."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValidationError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def corruption_suite(
    dataset_dir: str | Path,
    out_dir: str | Path,
    seed: int,
    kinds=None,
    severities=None,
    assets_dir: str | Path | None = None,
) -> list[dict]:
    """Materialize the (kind, severity) grid for every image in a directory.

    Writes one subdirectory per (kind, severity) and returns the manifest:
    one record per generated file with its spec and derived seed, or an
    error record for undecodable inputs.  Also writes the manifest as
    line-delimited JSON at ``out_dir/manifest.jsonl``.
    """
    kinds = tuple(kinds) if kinds else KINDS
    severities = tuple(severities) if severities else SEVERITIES
    for kind in kinds:
        if kind not in KINDS:
            raise ValidationError(f"unknown corruption kind {kind!r}")
    for sev in severities:
        if sev not in SEVERITIES:
            raise ValidationError(f"severity must be in 1..5, got {sev}")

    dataset_dir = Path(dataset_dir)
    out_dir = Path(out_dir)
    files = sorted(
        p for p in dataset_dir.iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not files:
        raise ValidationError(f"no decodable images found in {dataset_dir}")

    manifest: list[dict] = []
    for src in files:
        try:
            img = load_image(src)
        except ValidationError as exc:
            manifest.append({"source": src.name, "error": str(exc)})
            continue
        for kind in kinds:
            for sev in severities:
                cell = out_dir / f"{kind}_s{sev}"
                cell.mkdir(parents=True, exist_ok=True)
                rng = corruption_rng(seed, src.name, KINDS.index(kind), sev)
                out = corrupt(img, CorruptionSpec(kind, sev), rng, assets_dir)
                dest = cell / f"{src.stem}.png"
                save_image(dest, out)
                manifest.append(
                    {
                        "path": str(dest.relative_to(out_dir)),
                        "source": src.name,
                        "kind": kind,
                        "severity": sev,
                        "seed": seed,
                    }
                )
    with open(out_dir / "manifest.jsonl", "w") as fh:
        for row in manifest:
            fh.write(json.dumps(row) + "\n")
    return manifest


# --- noise ---


def _gaussian_noise(x, i, rng):
    return x + rng.normal(0.0, GAUSSIAN_SIGMA[i], size=x.shape)


def _shot_noise(x, i, rng):
    lam = SHOT_PHOTONS[i]
    return rng.poisson(x * lam) / lam


def _impulse_noise(x, i, rng):
    # Salt-and-pepper over whole pixels: half the corrupted sites white,
    # half black.
    amount = IMPULSE_AMOUNT[i]
    h, w = x.shape[:2]
    u = rng.random((h, w))
    out = x.copy()
    out[u < amount / 2.0] = 0.0
    out[(u >= amount / 2.0) & (u < amount)] = 1.0
    return out


# --- blur ---


def _disk_kernel(radius, alias_sigma):
    span = np.arange(-radius, radius + 1)
    xx, yy = np.meshgrid(span, span)
    disk = ((xx**2 + yy**2) <= radius**2).astype(np.float64)
    disk /= disk.sum()
    return ndimage.gaussian_filter(disk, sigma=alias_sigma)


def _convolve_channels(x, kernel):
    return np.stack(
        [
            ndimage.convolve(x[:, :, c], kernel, mode="mirror")
            for c in range(x.shape[2])
        ],
        axis=2,
    )


def _defocus_blur(x, i, _rng):
    radius, alias = DEFOCUS[i]
    return _convolve_channels(x, _disk_kernel(radius, alias))


def _glass_blur(x, i, rng):
    # Local pixel scrambling between two gaussian passes; a vectorized
    # gather stands in for the benchmark's sequential pairwise swaps.
    sigma, max_delta, iters = GLASS[i]
    h, w = x.shape[:2]
    out = np.stack(
        [ndimage.gaussian_filter(x[:, :, c], sigma) for c in range(x.shape[2])],
        axis=2,
    )
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    for _ in range(iters):
        dr = rng.integers(-max_delta, max_delta + 1, size=(h, w))
        dc = rng.integers(-max_delta, max_delta + 1, size=(h, w))
        rr = np.clip(rows + dr, 0, h - 1)
        cc = np.clip(cols + dc, 0, w - 1)
        out = out[rr, cc]
    return np.stack(
        [ndimage.gaussian_filter(out[:, :, c], sigma) for c in range(x.shape[2])],
        axis=2,
    )


def _motion_kernel(length, angle):
    half = (length - 1) / 2.0
    size = int(length) | 1
    kernel = np.zeros((size, size))
    center = size // 2
    for t in np.linspace(-half, half, 4 * size):
        r = center + t * math.sin(angle)
        c = center + t * math.cos(angle)
        r0, c0 = int(math.floor(r)), int(math.floor(c))
        for dr in (0, 1):
            for dc in (0, 1):
                rr, cc = r0 + dr, c0 + dc
                if 0 <= rr < size and 0 <= cc < size:
                    wgt = (1 - abs(r - rr)) * (1 - abs(c - cc))
                    kernel[rr, cc] += max(wgt, 0.0)
    return kernel / kernel.sum()


def _motion_blur(x, i, rng):
    angle = rng.uniform(-math.pi / 4.0, math.pi / 4.0)
    return _convolve_channels(x, _motion_kernel(MOTION_LENGTH[i], angle))


def _center_crop(arr, h, w):
    r0 = (arr.shape[0] - h) // 2
    c0 = (arr.shape[1] - w) // 2
    return arr[r0 : r0 + h, c0 : c0 + w]


def _zoom_channel(ch, z):
    zoomed = ndimage.zoom(ch, z, order=1, mode="nearest", grid_mode=False)
    return _center_crop(zoomed, ch.shape[0], ch.shape[1])


def _zoom_blur(x, i, _rng):
    acc = x.copy()
    steps = np.arange(1.01, ZOOM_MAX[i] + 1e-9, 0.01)
    for z in steps:
        acc = acc + np.stack(
            [_zoom_channel(x[:, :, c], z) for c in range(x.shape[2])], axis=2
        )
    return acc / (len(steps) + 1)


# --- weather ---


def _snow(x, i, rng):
    mean, std, zoom, thresh, streak, blend = SNOW[i]
    h, w = x.shape[:2]
    layer = rng.normal(mean, std, size=(max(2, int(h / zoom)), max(2, int(w / zoom))))
    layer = ndimage.zoom(layer, (h / layer.shape[0], w / layer.shape[1]), order=1)
    layer = layer[:h, :w]
    pad_h, pad_w = h - layer.shape[0], w - layer.shape[1]
    if pad_h or pad_w:
        layer = np.pad(layer, ((0, pad_h), (0, pad_w)), mode="edge")
    layer[layer < thresh] = 0.0
    angle = rng.uniform(-3.0 * math.pi / 4.0, -math.pi / 4.0)
    layer = ndimage.convolve(layer, _motion_kernel(streak, angle), mode="mirror")
    layer = np.clip(layer, 0.0, 1.0)
    gray = x.mean(axis=2, keepdims=True)
    base = blend * x + (1.0 - blend) * np.maximum(x, gray * 1.5 + 0.5)
    return base + layer[:, :, None] + np.rot90(layer, 2)[:, :, None]


def _frost_pattern(h, w, rng):
    # Band-limited multi-octave noise folded into ridge crystals.
    pattern = np.zeros((h, w))
    side = max(h, w)
    for octave, weight in ((32, 1.0), (16, 0.5), (8, 0.25)):
        sigma = max(side / octave, 1.0)
        pattern += weight * ndimage.gaussian_filter(rng.random((h, w)), sigma)
    pattern -= pattern.min()
    peak = pattern.max()
    if peak > 0:
        pattern /= peak
    ridges = 1.0 - np.abs(pattern - 0.5) * 2.0
    return ridges**3


def _frost(x, i, rng, assets_dir):
    xw, fw = FROST[i]
    h, w = x.shape[:2]
    texture = None
    if assets_dir:
        files = sorted(
            p for p in Path(assets_dir).iterdir()
            if p.suffix.lower() in (".png", ".jpg", ".jpeg")
        )
        if files:
            pick = files[int(rng.integers(len(files)))]
            tex = load_image(pick)
            if tex.shape[0] >= h and tex.shape[1] >= w:
                r0 = int(rng.integers(tex.shape[0] - h + 1))
                c0 = int(rng.integers(tex.shape[1] - w + 1))
                texture = tex[r0 : r0 + h, c0 : c0 + w]
    if texture is None:
        texture = _frost_pattern(h, w, rng)[:, :, None]
    return xw * x + fw * texture


def _plasma_fractal(mapsize, wibble_decay, rng):
    # Diamond-square fractal on a power-of-two grid, normalized to [0, 1].
    assert mapsize & (mapsize - 1) == 0
    maparray = np.zeros((mapsize, mapsize), dtype=np.float64)
    maparray[0, 0] = 0.0
    stepsize = mapsize
    wibble = 100.0

    def wibbled_mean(array):
        return array / 4.0 + rng.uniform(-wibble, wibble, array.shape)

    def fillsquares():
        cornerref = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        squareaccum = cornerref + np.roll(cornerref, 1, axis=0)
        squareaccum += np.roll(squareaccum, 1, axis=1)
        maparray[
            stepsize // 2 : mapsize : stepsize, stepsize // 2 : mapsize : stepsize
        ] = wibbled_mean(squareaccum)

    def filldiamonds():
        drgrid = maparray[
            stepsize // 2 : mapsize : stepsize, stepsize // 2 : mapsize : stepsize
        ]
        ulgrid = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        ldrsum = drgrid + np.roll(drgrid, 1, axis=0)
        lulsum = ulgrid + np.roll(ulgrid, -1, axis=1)
        ltsum = ldrsum + lulsum
        maparray[0:mapsize:stepsize, stepsize // 2 : mapsize : stepsize] = (
            wibbled_mean(ltsum)
        )
        tdrsum = drgrid + np.roll(drgrid, 1, axis=1)
        tulsum = ulgrid + np.roll(ulgrid, -1, axis=0)
        ttsum = tdrsum + tulsum
        maparray[stepsize // 2 : mapsize : stepsize, 0:mapsize:stepsize] = (
            wibbled_mean(ttsum)
        )

    while stepsize >= 2:
        fillsquares()
        filldiamonds()
        stepsize //= 2
        wibble /= wibble_decay

    maparray -= maparray.min()
    return maparray / maparray.max()


def _fog(x, i, rng):
    intensity, decay = FOG[i]
    h, w = x.shape[:2]
    mapsize = 1 << max(5, int(math.ceil(math.log2(max(h, w)))))
    plasma = _plasma_fractal(mapsize, decay, rng)[:h, :w]
    top = max(x.max(), 1e-12)
    return (x + intensity * plasma[:, :, None]) * top / (top + intensity)


def _brightness(x, i, _rng):
    return x + BRIGHTNESS_DELTA[i]


# --- digital ---


def _contrast(x, i, _rng):
    means = x.mean(axis=(0, 1), keepdims=True)
    return CONTRAST_FACTOR[i] * (x - means) + means


def _elastic(x, i, rng):
    h, w = x.shape[:2]
    side = max(h, w)
    sigma = max(ELASTIC_SIGMA_FRAC * side, 2.0)
    alpha = ELASTIC_ALPHA_FRAC[i] * side
    dr = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), sigma) * alpha
    dc = ndimage.gaussian_filter(rng.uniform(-1, 1, (h, w)), sigma) * alpha
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    coords = np.stack([rows + dr, cols + dc])
    return np.stack(
        [
            ndimage.map_coordinates(x[:, :, c], coords, order=1, mode="reflect")
            for c in range(x.shape[2])
        ],
        axis=2,
    )


def _pixelate(x, i, _rng):
    factor = PIXELATE_FACTOR[i]
    h, w = x.shape[:2]
    dh, dw = max(1, int(h * factor)), max(1, int(w * factor))
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        im = Image.fromarray(x[:, :, c].astype(np.float32), mode="F")
        small = im.resize((dw, dh), resample=Image.Resampling.BOX)
        out[:, :, c] = np.asarray(
            small.resize((w, h), resample=Image.Resampling.BOX), dtype=np.float64
        )
    return out


def _jpeg(x, i, _rng):
    # Inputs are quantized to 8 bits by the encode; a real encode/decode
    # cycle runs at the documented quality level.
    data = to_uint8(x)
    mode = "L" if data.shape[2] == 1 else "RGB"
    img = Image.fromarray(data[:, :, 0] if mode == "L" else data, mode=mode)
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=JPEG_QUALITY[i])
    buf.seek(0)
    decoded = from_uint8(np.asarray(Image.open(buf).convert(mode)))
    if decoded.ndim == 2:
        decoded = decoded[:, :, None]
    return decoded


_GENERATORS = {
    "gaussian_noise": _gaussian_noise,
    "shot_noise": _shot_noise,
    "impulse_noise": _impulse_noise,
    "defocus_blur": _defocus_blur,
    "glass_blur": _glass_blur,
    "motion_blur": _motion_blur,
    "zoom_blur": _zoom_blur,
    "snow": _snow,
    "frost": _frost,
    "fog": _fog,
    "brightness": _brightness,
    "contrast": _contrast,
    "elastic": _elastic,
    "pixelate": _pixelate,
    "jpeg": _jpeg,
}
