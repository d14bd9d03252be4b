"""2-D spectral transforms for single image channels.

Convention, fixed so golden values stay stable:

* forward transform is unnormalized, inverse carries the 1/(HW) factor
  (numpy's default), so Parseval reads ``sum|x|^2 == sum|F|^2 / (HW)``;
* spectra are stored DC-centered: the zero-frequency bin sits at index
  ``(H//2, W//2)`` and the low-frequency region is the middle of the grid;
* the phase of a zero bin is 0 (the atan2(0, 0) convention).

Arbitrary (non power-of-two) dimensions are supported; ``numpy.fft``
handles them with mixed-radix/Bluestein plans and is checked against a
naive double-sum transform in the test suite.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as _fft

from .errors import ValidationError


def _as_real_channel(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"expected a 2-D channel, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("channel contains non-finite values")
    return arr


def _as_spectrum(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"expected a 2-D spectrum, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("spectrum contains non-finite values")
    return arr


def forward_dft(channel: np.ndarray) -> np.ndarray:
    """Real channel -> DC-centered complex spectrum of the same shape."""
    return np.fft.fftshift(_fft.fft2(_as_real_channel(channel)))


def inverse_dft(spectrum: np.ndarray, clip: bool = True) -> np.ndarray:
    """DC-centered spectrum -> real channel.

    The imaginary residue of the inverse transform is discarded (it stays
    below 1e-4 for any spectrum built from real channels).  With
    ``clip=True`` (the default) the result is clamped to [0, 1]; callers
    that check spectral invariants pre-clamp pass ``clip=False``.
    """
    arr = _as_spectrum(spectrum)
    out = _fft.ifft2(np.fft.ifftshift(arr)).real
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return out


def decompose(spectrum: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a spectrum into (amplitude, phase) grids."""
    arr = _as_spectrum(spectrum)
    return np.abs(arr), np.angle(arr)


def recompose(amplitude: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Rebuild the complex spectrum ``amplitude * exp(i * phase)``."""
    amp = np.asarray(amplitude, dtype=np.float64)
    pha = np.asarray(phase, dtype=np.float64)
    if amp.shape != pha.shape:
        raise ValidationError(
            f"amplitude shape {amp.shape} != phase shape {pha.shape}"
        )
    if amp.ndim != 2:
        raise ValidationError(f"expected 2-D grids, got shape {amp.shape}")
    if not (np.isfinite(amp).all() and np.isfinite(pha).all()):
        raise ValidationError("amplitude/phase contain non-finite values")
    if (amp < 0).any():
        raise ValidationError("amplitude must be non-negative")
    return amp * np.exp(1j * pha)
