"""Low-pass denoising of CSI amplitude streams.

Walking leaves its signature below roughly 10 Hz, while the raw streams
carry broadband measurement noise, so each stream is run through a
Butterworth IIR low-pass (maximally flat passband, gentle phase). The
digital design uses the bilinear transform with frequency pre-warping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

from .trace import CsiTrace

DEFAULT_CUTOFF_HZ = 10.0
DEFAULT_ORDER = 4


def cutoff_from_hz(f_hz: float, fs_hz: float) -> float:
    """Normalized cutoff 2*pi*f/fs in rad/sample (~0.06 for 10 Hz at 1 kHz)."""
    if fs_hz <= 0:
        raise ValueError("sample rate must be positive")
    if f_hz <= 0:
        raise ValueError("cutoff must be positive")
    if f_hz >= fs_hz / 2:
        raise ValueError(
            f"cutoff {f_hz} Hz is at or above the Nyquist rate {fs_hz / 2} Hz"
        )
    return 2.0 * math.pi * f_hz / fs_hz


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass design request: normalized cutoff in (0, pi), order >= 1."""

    cutoff_rad_per_sample: float
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not 0 < self.cutoff_rad_per_sample < math.pi:
            raise ValueError("cutoff must lie in (0, pi) rad/sample")
        if self.order < 1:
            raise ValueError("order must be >= 1")

    @classmethod
    def from_hz(cls, f_hz: float, fs_hz: float, order: int = DEFAULT_ORDER) -> "FilterSpec":
        return cls(cutoff_from_hz(f_hz, fs_hz), order)


@dataclass(frozen=True, eq=False)
class FilterCoefficients:
    """Realized IIR transfer function b(z)/a(z), a[0] = 1, stable."""

    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64, copy=True)
        a = np.array(self.a, dtype=np.float64, copy=True)
        if a.ndim != 1 or b.ndim != 1 or len(a) < 1:
            raise ValueError("coefficients must be 1-D sequences")
        if abs(a[0] - 1.0) > 1e-12:
            raise ValueError("feedback coefficients must be normalized (a[0] = 1)")
        poles = np.roots(a) if len(a) > 1 else np.array([])
        if poles.size and np.abs(poles).max() >= 1.0:
            raise ValueError("unstable filter: pole on or outside the unit circle")
        b.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    def poles(self) -> np.ndarray:
        return np.roots(self.a)

    def response(self, w: np.ndarray) -> np.ndarray:
        """Complex frequency response H(e^jw) at rad/sample frequencies w."""
        w = np.asarray(w, dtype=np.float64)
        z = np.exp(-1j * np.outer(w, np.arange(max(len(self.b), len(self.a)))))
        num = z[:, : len(self.b)] @ self.b
        den = z[:, : len(self.a)] @ self.a
        return num / den


def design_lowpass(spec: FilterSpec) -> FilterCoefficients:
    """Butterworth low-pass: |H| = 1/sqrt(2) at the cutoff, monotone rolloff."""
    wn = spec.cutoff_rad_per_sample / math.pi  # scipy normalizes to Nyquist = 1
    b, a = sp_signal.butter(spec.order, wn, btype="low")
    return FilterCoefficients(b, a)


def apply_filter(
    coeffs: FilterCoefficients, series: np.ndarray, zero_phase: bool = False
) -> np.ndarray:
    """Run one series through the filter (zero initial state).

    zero_phase applies the filter forward and backward, cancelling group
    delay at the cost of non-causality.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be 1-D")
    if not np.isfinite(x).all():
        raise ValueError("series contains non-finite values")
    if x.size == 0:
        return x.copy()
    if zero_phase:
        return sp_signal.filtfilt(coeffs.b, coeffs.a, x)
    return sp_signal.lfilter(coeffs.b, coeffs.a, x)


def filter_trace(
    trace: CsiTrace, coeffs: FilterCoefficients, zero_phase: bool = False
) -> CsiTrace:
    """Filter every stream of a trace independently.

    The result is stored back at trace precision (float32) so that staged
    file-based runs and fused in-memory runs see identical data. Filter
    undershoot is clamped at zero to keep amplitudes nonnegative.
    """
    streams = trace.stream_matrix()
    if streams.shape[1] == 0:
        return trace
    if not np.isfinite(streams).all():
        raise ValueError("trace contains non-finite values")
    if zero_phase:
        filtered = sp_signal.filtfilt(coeffs.b, coeffs.a, streams, axis=1)
    else:
        filtered = sp_signal.lfilter(coeffs.b, coeffs.a, streams, axis=1)
    filtered = np.maximum(filtered, 0.0)
    frames = filtered.T.reshape(trace.n_frames, trace.n_pairs, trace.n_subcarriers)
    return CsiTrace(
        trace.sample_rate_hz, trace.n_tx, trace.n_rx, trace.n_subcarriers, frames
    )
