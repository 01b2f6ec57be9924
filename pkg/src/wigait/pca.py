"""Per-pair dimensionality reduction of subcarrier streams.

All subcarriers of one antenna pair fluctuate together when a person
crosses the link, so the 30 streams compress well onto a handful of
principal directions. Projection is fit per trace and per pair; the
projected waveforms are then reordered by descending peak-to-peak so
that component identity is stable across recordings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trace import CsiTrace

DEFAULT_COMPONENTS = 4

ORDER_VARIANCE = "variance"
ORDER_PEAK_TO_PEAK = "peak_to_peak"


@dataclass(frozen=True, eq=False)
class ComponentSet:
    """Projected waveforms per antenna pair.

    waveforms: (n_pairs, p, n_frames) float64 — projected time series.
    basis: (n_pairs, p, n_subcarriers) — orthonormal projection directions.
    variances: (n_pairs, p) — sample variance captured by each waveform.
    ordering: ORDER_VARIANCE right after projection, ORDER_PEAK_TO_PEAK
    after reordering (peak-to-peak non-increasing within each pair).
    """

    waveforms: np.ndarray
    basis: np.ndarray
    variances: np.ndarray
    sample_rate_hz: float
    ordering: str = ORDER_VARIANCE

    def __post_init__(self):
        waveforms = np.asarray(self.waveforms, dtype=np.float64)
        basis = np.asarray(self.basis, dtype=np.float64)
        variances = np.asarray(self.variances, dtype=np.float64)
        if waveforms.ndim != 3:
            raise ValueError("waveforms must have shape (n_pairs, p, n_frames)")
        n_pairs, p, _ = waveforms.shape
        if basis.shape[:2] != (n_pairs, p) or variances.shape != (n_pairs, p):
            raise ValueError("basis/variances shapes do not match waveforms")
        if self.ordering not in (ORDER_VARIANCE, ORDER_PEAK_TO_PEAK):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.ordering == ORDER_PEAK_TO_PEAK and waveforms.shape[2]:
            ptp = waveforms.max(axis=2) - waveforms.min(axis=2)
            if (np.diff(ptp, axis=1) > 1e-12).any():
                raise ValueError("peak-to-peak ordering violated")
        for arr in (waveforms, basis, variances):
            arr.flags.writeable = False
        object.__setattr__(self, "waveforms", waveforms)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "variances", variances)

    @property
    def n_pairs(self) -> int:
        return self.waveforms.shape[0]

    @property
    def p(self) -> int:
        return self.waveforms.shape[1]

    @property
    def n_frames(self) -> int:
        return self.waveforms.shape[2]


def _fit_pair(data: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """PCA of one pair's (n_frames, n_subcarriers) matrix.

    Returns (waveforms (p, n), basis (p, n_sub), variances (p,)) in
    descending variance order, each component oriented so its sample of
    maximum absolute value is positive.
    """
    n = data.shape[0]
    centered = data - data.mean(axis=0)
    # SVD route; the eigendecomposition of the covariance serves as the
    # independent oracle in the test suite.
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    variances = s**2 / (n - 1)
    basis = vt[:p]
    waveforms = centered @ basis.T  # (n, p)
    waveforms = waveforms.T.copy()
    for k in range(waveforms.shape[0]):
        y = waveforms[k]
        if y.size:
            peak = np.argmax(np.abs(y))
            if y[peak] < 0:
                waveforms[k] = -y
                basis[k] = -basis[k]
    return waveforms, basis, variances[:p]


def pca_project(trace: CsiTrace, p: int = DEFAULT_COMPONENTS) -> ComponentSet:
    """Project each pair's subcarriers onto its top-p variance directions."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    if p > trace.n_subcarriers:
        raise ValueError(
            f"p = {p} exceeds the {trace.n_subcarriers} subcarriers per pair"
        )
    if trace.n_frames < 2:
        raise ValueError("need at least 2 frames to estimate variance directions")
    if p > trace.n_frames:
        raise ValueError(f"p = {p} exceeds the {trace.n_frames} available frames")
    waveforms = np.empty((trace.n_pairs, p, trace.n_frames))
    basis = np.empty((trace.n_pairs, p, trace.n_subcarriers))
    variances = np.empty((trace.n_pairs, p))
    for pair in range(trace.n_pairs):
        w, b, v = _fit_pair(trace.pair_matrix(pair), p)
        waveforms[pair], basis[pair], variances[pair] = w, b, v
    return ComponentSet(
        waveforms, basis, variances, trace.sample_rate_hz, ORDER_VARIANCE
    )


def reorder_by_peak_to_peak(components: ComponentSet) -> ComponentSet:
    """Sort each pair's waveforms by descending max-minus-min, stably."""
    ptp = components.waveforms.max(axis=2) - components.waveforms.min(axis=2)
    waveforms = np.empty_like(components.waveforms)
    basis = np.empty_like(components.basis)
    variances = np.empty_like(components.variances)
    for pair in range(components.n_pairs):
        order = np.argsort(-ptp[pair], kind="stable")
        waveforms[pair] = components.waveforms[pair, order]
        basis[pair] = components.basis[pair, order]
        variances[pair] = components.variances[pair, order]
    return ComponentSet(
        waveforms, basis, variances, components.sample_rate_hz, ORDER_PEAK_TO_PEAK
    )
