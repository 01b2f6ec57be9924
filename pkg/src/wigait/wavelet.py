"""Shape features: crossing waveforms compressed by a Daubechies 4-tap DWT.

Each detected crossing is cut out of every component waveform and run
through the orthonormal 4-tap Daubechies analysis bank, keeping only the
approximation (low-pass) branch at each level. That shrinks a waveform
by roughly half per level while preserving the slow shape the classifier
compares, and it is what keeps the alignment distance affordable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pca import ComponentSet
from .trace import Segment

DEFAULT_TARGET_LEN = 128

# Orthonormal 4-tap Daubechies low-pass, 15 significant digits.
D4_LOWPASS = np.array(
    [
        0.482962913144690,
        0.836516303737469,
        0.224143868041857,
        -0.129409522550921,
    ]
)
# Quadrature mirror of the low-pass (alternating-sign reversal).
D4_HIGHPASS = np.array(
    [
        -0.129409522550921,
        -0.224143868041857,
        0.836516303737469,
        -0.482962913144690,
    ]
)

_norm = float(D4_LOWPASS @ D4_LOWPASS)
if abs(_norm - 1.0) > 1e-12:
    raise AssertionError(f"D4 taps are not unit norm: {_norm!r}")
D4_LOWPASS.flags.writeable = False
D4_HIGHPASS.flags.writeable = False


@dataclass(frozen=True, eq=False)
class LosWaveform:
    """Component waveforms restricted to one crossing interval.

    values: (n_pairs, p, segment length) float64.
    """

    values: np.ndarray
    segment: Segment
    sample_rate_hz: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError("values must have shape (n_pairs, p, length)")
        if values.shape[2] != self.segment.length:
            raise ValueError("waveform length does not match segment")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_pairs(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ShapeFeature:
    """Approximation coefficients per pair and component.

    coeffs: (n_pairs, p, coeff length) float64; level is the number of
    analysis steps applied; n_samples the pre-compression length.
    """

    coeffs: np.ndarray
    level: int
    n_samples: int

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 3:
            raise ValueError("coeffs must have shape (n_pairs, p, length)")
        if not np.isfinite(coeffs).all():
            raise ValueError("coefficients must be finite")
        if self.level < 0:
            raise ValueError("level must be >= 0")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_pairs(self) -> int:
        return self.coeffs.shape[0]

    @property
    def p(self) -> int:
        return self.coeffs.shape[1]


def extract_los_waveform(components: ComponentSet, segment: Segment) -> LosWaveform:
    """Slice every component waveform to the segment; no resampling."""
    n = components.n_frames
    if segment.j_end > n:
        raise ValueError(
            f"segment [{segment.j_begin}, {segment.j_end}) exceeds trace length {n}"
        )
    values = components.waveforms[:, :, segment.j_begin : segment.j_end]
    return LosWaveform(values.copy(), segment, components.sample_rate_hz)


def analysis_step(x: np.ndarray, filt: np.ndarray) -> np.ndarray:
    """One filter-and-decimate step with symmetric (half-sample) extension.

    Output length is (len(x) + 4) // 2; a constant input comes out
    constant, scaled by sqrt(2) for the low-pass branch.
    """
    x = np.asarray(x, dtype=np.float64)
    ext = np.pad(x, len(filt) - 1, mode="symmetric")
    return np.convolve(ext, filt, mode="valid")[::2]


def approx_len(n: int, level: int) -> int:
    """Coefficient count after `level` analysis steps of a length-n input."""
    for _ in range(level):
        n = (n + 4) // 2
    return n


def dwt_approx(x: np.ndarray, level: int) -> np.ndarray:
    """Approximation coefficients after `level` recursive analysis steps."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("input must be 1-D")
    if level < 0:
        raise ValueError("level must be >= 0")
    minimum = 2**level
    if x.size < minimum:
        raise ValueError(
            f"input of length {x.size} is too short for level {level} "
            f"(minimum length {minimum})"
        )
    for _ in range(level):
        x = analysis_step(x, D4_LOWPASS)
    return x


def dwt_compress(waveform: LosWaveform, level: int) -> ShapeFeature:
    """Compress every component subsequence to its approximation branch."""
    n = waveform.values.shape[2]
    minimum = 2**level
    if n < minimum:
        raise ValueError(
            f"segment of length {n} is too short for level {level} "
            f"(minimum length {minimum})"
        )
    out_len = approx_len(n, level)
    coeffs = np.empty((waveform.n_pairs, waveform.p, out_len))
    for pair in range(waveform.n_pairs):
        for k in range(waveform.p):
            coeffs[pair, k] = dwt_approx(waveform.values[pair, k], level)
    return ShapeFeature(coeffs, level, n)


def level_for_length(n: int, target_len: int = DEFAULT_TARGET_LEN) -> int:
    """Smallest level whose approximation length is at most target_len."""
    if n < 1:
        raise ValueError("length must be positive")
    if target_len < 4:
        raise ValueError("target_len must be >= 4")
    level = 0
    length = n
    while length > target_len and n >= 2 ** (level + 1):
        length = (length + 4) // 2
        level += 1
    return level
