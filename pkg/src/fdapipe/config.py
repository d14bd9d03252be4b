"""Run configuration: a flat ``key = value`` file plus published presets.

The file format is one assignment per line, ``#`` comments allowed::

    seed = 7
    epochs = 100
    epoch_ratio = 0.5
    scheduler = linear
    beta_opt = 0.006
    alpha = 1.0
    augment = true
    aug_level = 3
    image_height = 384
    image_width = 384
    source_images = data/source
    source_masks = data/source_masks
    target_images = data/target
    output_root = out

Relative paths resolve against the config file's directory.  Presets carry
the published parameter pairs: ``retina`` (beta_opt 0.006, alpha 1.0,
level 3), ``nuclei`` (beta_opt 1.0, alpha 0.7, level 3), and their
``*-transformer`` variants (alpha 0.5 for retina, level 2 for both).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .augmix import AugPolicy
from .curriculum import CurriculumConfig
from .errors import ValidationError

PRESETS = {
    "retina": {"beta_opt": 0.006, "alpha": 1.0, "aug_level": 3},
    "retina-transformer": {"beta_opt": 0.006, "alpha": 0.5, "aug_level": 2},
    "nuclei": {"beta_opt": 1.0, "alpha": 0.7, "aug_level": 3},
    "nuclei-transformer": {"beta_opt": 1.0, "alpha": 0.7, "aug_level": 2},
}

_DEFAULTS = {
    "epochs": 100,
    "epoch_ratio": 0.5,
    "scheduler": "linear",
    "beta_opt": 0.006,
    "gamma": 5.0,
    "alpha": 1.0,
    "augment": True,
    "aug_level": 3,
    "aug_chains": 3,
    "aug_depth": 3,
    "image_height": 384,
    "image_width": 384,
    "pairing": "uniform_random",
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    curriculum: CurriculumConfig
    alpha: float
    aug: AugPolicy
    augment: bool = True
    image_size: tuple[int, int] = (384, 384)
    pairing: str = "uniform_random"
    source_images: Path | None = None
    source_masks: Path | None = None
    target_images: Path | None = None
    output_root: Path | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.pairing != "uniform_random":
            raise ValidationError(f"unknown pairing policy {self.pairing!r}")
        if self.image_size[0] < 1 or self.image_size[1] < 1:
            raise ValidationError(f"bad image size {self.image_size}")


def from_mapping(values: dict, base_dir: Path | None = None) -> RunConfig:
    """Build a RunConfig from a flat mapping (file keys or wire fields)."""
    merged = dict(_DEFAULTS)
    merged.update({k: v for k, v in values.items() if v is not None})
    if "seed" not in merged:
        raise ValidationError("config requires a seed")

    def _path(key):
        raw = merged.get(key)
        if raw is None:
            return None
        p = Path(str(raw))
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return p

    curriculum = CurriculumConfig(
        beta_opt=float(merged["beta_opt"]),
        epoch_ratio=float(merged["epoch_ratio"]),
        total_epochs=int(merged["epochs"]),
        kind=str(merged["scheduler"]),
        exp_curvature=float(merged["gamma"]),
    )
    aug = AugPolicy(
        num_chains=int(merged["aug_chains"]),
        max_ops_per_chain=int(merged["aug_depth"]),
        magnitude_level=int(merged["aug_level"]),
    )
    return RunConfig(
        seed=int(merged["seed"]),
        curriculum=curriculum,
        alpha=float(merged["alpha"]),
        aug=aug,
        augment=_as_bool(merged["augment"]),
        image_size=(int(merged["image_height"]), int(merged["image_width"])),
        pairing=str(merged["pairing"]),
        source_images=_path("source_images"),
        source_masks=_path("source_masks"),
        target_images=_path("target_images"),
        output_root=_path("output_root"),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    return from_mapping(_parse_pairs(text, path), base_dir=path.parent)


def preset_config(name: str, seed: int, **overrides) -> dict:
    """Flat config mapping for a named preset, ready to write or extend."""
    if name not in PRESETS:
        raise ValidationError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        )
    values = dict(_DEFAULTS)
    values.update(PRESETS[name])
    values["seed"] = seed
    values.update({k: v for k, v in overrides.items() if v is not None})
    return values


def write_config(path: str | Path, values: dict) -> None:
    lines = [f"{key} = {_fmt(value)}" for key, value in values.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_pairs(text: str, origin) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{origin}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"cannot parse boolean from {value!r}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)
