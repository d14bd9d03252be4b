"""Seed-lineage helpers.

Every random decision in the pipeline is drawn from a generator derived
from (global seed, purpose tag, epoch[, sample index]).  Deriving streams
this way keeps epoch generation independent of worker count and execution
order: a sample's bytes depend only on its lineage, never on which worker
processed it or when.
"""

from __future__ import annotations

import zlib

import numpy as np

# Stream tags keep the different consumers of the same (seed, epoch) from
# colliding on one entropy sequence.
_EPOCH = 1
_PAIRING = 2
_SAMPLE = 3
_CORRUPT = 4


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng([int(e) & 0xFFFFFFFFFFFFFFFF for e in entropy])


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Stream for per-epoch decisions (e.g. the random-schedule draw)."""
    return _rng(seed, _EPOCH, epoch)


def pairing_rng(seed: int, epoch: int) -> np.random.Generator:
    """Stream that assigns a target record to every source record."""
    return _rng(seed, _PAIRING, epoch)


def sample_rng(seed: int, epoch: int, sample_index: int) -> np.random.Generator:
    """Stream for all per-sample randomness (augmentation chains)."""
    return _rng(seed, _SAMPLE, epoch, sample_index)


def corruption_rng(seed: int, name: str, kind_index: int, severity: int) -> np.random.Generator:
    """Stream for one (file, corruption kind, severity) cell of the suite."""
    return _rng(seed, _CORRUPT, zlib.crc32(name.encode("utf-8")), kind_index, severity)
