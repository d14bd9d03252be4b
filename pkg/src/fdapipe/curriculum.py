"""Epoch-indexed schedules for the amplitude scaling coefficient.

The forward schedules grow the coefficient from 0 at epoch 0 to its
optimum over the first ``epochs * epoch_ratio`` epochs and hold it there
afterwards.  ``linear`` interpolates straight; ``exponential`` uses the
normalized convex curve (exp(g*t) - 1) / (exp(g) - 1), which stays below
the linear ramp and reaches the optimum at the same epoch.  The ``anti_*``
variants mirror their forward schedule (optimum down to 0), and
``random`` redraws uniformly from [0, optimum] once per epoch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

KINDS = ("linear", "exponential", "anti_linear", "anti_exponential", "random")


@dataclass(frozen=True)
class CurriculumConfig:
    beta_opt: float
    epoch_ratio: float
    total_epochs: int
    kind: str = "linear"
    exp_curvature: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.beta_opt <= 1.0:
            raise ValidationError(f"beta_opt must be in [0, 1], got {self.beta_opt}")
        if not 0.0 < self.epoch_ratio <= 1.0:
            raise ValidationError(
                f"epoch_ratio must be in (0, 1], got {self.epoch_ratio}"
            )
        if self.total_epochs < 1:
            raise ValidationError(
                f"total_epochs must be >= 1, got {self.total_epochs}"
            )
        if self.kind not in KINDS:
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if self.exp_curvature <= 0:
            raise ValidationError(
                f"exp_curvature must be positive, got {self.exp_curvature}"
            )


def schedule_beta(
    cfg: CurriculumConfig, epoch: int, rng: np.random.Generator | None = None
) -> float:
    """Coefficient for one epoch; clamped to [0, beta_opt].

    ``rng`` is only consulted for the ``random`` kind and should be an
    epoch-level stream (one draw per epoch, shared by every sample).
    """
    if not 0 <= epoch < cfg.total_epochs:
        raise ValidationError(
            f"epoch {epoch} outside [0, {cfg.total_epochs})"
        )
    if cfg.kind == "random":
        if rng is None:
            raise ValidationError("random schedule needs an epoch rng")
        return float(rng.uniform(0.0, cfg.beta_opt))

    stage = cfg.total_epochs * cfg.epoch_ratio
    if cfg.kind in ("linear", "anti_linear"):
        value = (epoch / stage) * cfg.beta_opt if epoch <= stage else cfg.beta_opt
    else:
        t = min(epoch / stage, 1.0)
        g = cfg.exp_curvature
        value = cfg.beta_opt * (math.exp(g * t) - 1.0) / (math.exp(g) - 1.0)
    if cfg.kind.startswith("anti_"):
        value = cfg.beta_opt - value
    return min(max(value, 0.0), cfg.beta_opt)


def schedule_table(
    cfg: CurriculumConfig, seed: int | None = None
) -> list[tuple[int, float]]:
    """(epoch, coefficient) for every epoch; deterministic given the seed."""
    from .rng import epoch_rng

    rows = []
    for e in range(cfg.total_epochs):
        rng = epoch_rng(seed, e) if cfg.kind == "random" else None
        if cfg.kind == "random" and seed is None:
            raise ValidationError("random schedule table needs a seed")
        rows.append((e, schedule_beta(cfg, e, rng)))
    return rows


def write_schedule_csv(rows, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "beta"])
        for epoch, beta in rows:
            writer.writerow([epoch, f"{beta:.12g}"])
