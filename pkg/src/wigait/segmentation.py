"""Crossing detection on component waveforms.

A walk across the link raises the local rate of change of every
component waveform. For each index j we take the mean absolute
deviation (MAD) of the w samples before j and of the w samples from j
on, each measured against its own window mean, and sum the two
statistics over all components in scope. A crossing start is a point
that is quiet before and busy after (MAD_before <= T2, MAD_after >= T1
with T1 > T2); an end point mirrors the conditions. Start/end pairs are
kept only when their spacing passes the duration gate
[timelen1, timelen2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .pca import ComponentSet
from .trace import Segment

DEFAULT_WINDOW = 500
DEFAULT_T1_PERCENTILE = 90.0
DEFAULT_T2_PERCENTILE = 60.0
DEFAULT_TIMELEN1 = 500
DEFAULT_TIMELEN2 = 4000
DEFAULT_BASELINE_PERCENTILE = 60.0


@dataclass(frozen=True)
class SegmenterParams:
    """Window size, thresholds and duration gate for the detector.

    t1/t2 may be None, in which case they are resolved per profile from
    the percentiles below. Explicit values must satisfy t1 > t2.
    """

    window: int = DEFAULT_WINDOW
    t1: float | None = None
    t2: float | None = None
    t1_percentile: float = DEFAULT_T1_PERCENTILE
    t2_percentile: float = DEFAULT_T2_PERCENTILE
    timelen1: int = DEFAULT_TIMELEN1
    timelen2: int = DEFAULT_TIMELEN2
    match_tol: int | None = None
    pool_pairs: bool = True
    baseline_percentile: float = DEFAULT_BASELINE_PERCENTILE

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2 samples")
        if (self.t1 is None) != (self.t2 is None):
            raise ValueError("set both t1 and t2 or neither")
        if self.t1 is not None and self.t1 <= self.t2:
            raise ValueError("thresholds must satisfy t1 > t2")
        if self.t1 is None and not self.t1_percentile > self.t2_percentile:
            raise ValueError("percentiles must satisfy t1_percentile > t2_percentile")
        if not 0 < self.timelen1 < self.timelen2:
            raise ValueError("duration gate must satisfy 0 < timelen1 < timelen2")
        if self.match_tol is not None and self.match_tol < 0:
            raise ValueError("match_tol must be nonnegative")

    @property
    def effective_match_tol(self) -> int:
        return self.window if self.match_tol is None else self.match_tol


@dataclass(frozen=True, eq=False)
class MadProfile:
    """Summed MAD statistics per index; NaN outside [w, n - w]."""

    before: np.ndarray
    after: np.ndarray
    window: int

    def __post_init__(self):
        before = np.asarray(self.before, dtype=np.float64)
        after = np.asarray(self.after, dtype=np.float64)
        if before.shape != after.shape or before.ndim != 1:
            raise ValueError("profiles must be equal-length 1-D arrays")
        before.flags.writeable = False
        after.flags.writeable = False
        object.__setattr__(self, "before", before)
        object.__setattr__(self, "after", after)

    @property
    def n(self) -> int:
        return len(self.before)

    @property
    def valid_start(self) -> int:
        return self.window

    @property
    def valid_stop(self) -> int:
        """One past the last valid index (valid j in [w, n - w])."""
        return self.n - self.window + 1

    def valid_values(self) -> np.ndarray:
        lo, hi = self.valid_start, self.valid_stop
        return np.concatenate([self.before[lo:hi], self.after[lo:hi]])


@njit(cache=True)
def _mad_sums(waveforms, w, before, after):  # pragma: no cover - numba
    n_wave, n = waveforms.shape
    for k in range(n_wave):
        y = waveforms[k]
        for j in range(w, n - w + 1):
            mean_b = 0.0
            for i in range(j - w, j):
                mean_b += y[i]
            mean_b /= w
            mad_b = 0.0
            for i in range(j - w, j):
                mad_b += abs(y[i] - mean_b)
            before[j] += mad_b / w

            mean_a = 0.0
            for i in range(j, j + w):
                mean_a += y[i]
            mean_a /= w
            mad_a = 0.0
            for i in range(j, j + w):
                mad_a += abs(y[i] - mean_a)
            after[j] += mad_a / w


def _profile_from_waveforms(waveforms: np.ndarray, w: int) -> MadProfile:
    n = waveforms.shape[1]
    before = np.zeros(n)
    after = np.zeros(n)
    _mad_sums(np.ascontiguousarray(waveforms), w, before, after)
    before[:w] = np.nan
    after[:w] = np.nan
    before[n - w + 1 :] = np.nan
    after[n - w + 1 :] = np.nan
    return MadProfile(before, after, w)


def mad_profile(
    components: ComponentSet, w: int = DEFAULT_WINDOW, pool_pairs: bool = True
) -> MadProfile | list[MadProfile]:
    """Summed sliding MAD of all component waveforms.

    With pool_pairs (default) the sum runs over every pair's components,
    giving one trace-wide profile; otherwise one profile per pair.
    """
    if w < 2:
        raise ValueError("window must be >= 2 samples")
    n = components.n_frames
    if n < 2 * w:
        raise ValueError(f"trace length {n} is too short for window {w} (need >= {2 * w})")
    if pool_pairs:
        flat = components.waveforms.reshape(-1, n)
        return _profile_from_waveforms(flat, w)
    return [
        _profile_from_waveforms(components.waveforms[pair], w)
        for pair in range(components.n_pairs)
    ]


def resolve_thresholds(profile: MadProfile, params: SegmenterParams) -> tuple[float, float]:
    """Explicit thresholds, or percentiles of the pooled valid MAD values."""
    if params.t1 is not None:
        return float(params.t1), float(params.t2)
    values = profile.valid_values()
    if values.size == 0:
        return np.inf, np.inf
    t1 = float(np.percentile(values, params.t1_percentile))
    t2 = float(np.percentile(values, params.t2_percentile))
    return t1, t2


def detect_segments(profile: MadProfile, params: SegmenterParams) -> list[Segment]:
    """Scan for quiet-to-busy starts paired with busy-to-quiet ends.

    Left-to-right scan; a start commits to the first admissible end
    within the duration gate, otherwise it is discarded. Returns
    non-overlapping segments in increasing order. A profile whose
    resolved activity threshold is not positive (flat input) yields no
    segments.
    """
    t1, t2 = resolve_thresholds(profile, params)
    if not np.isfinite(t1) or t1 <= 0:
        return []
    before, after = profile.before, profile.after
    lo, hi = profile.valid_start, profile.valid_stop
    is_start = np.zeros(profile.n, dtype=bool)
    is_end = np.zeros(profile.n, dtype=bool)
    b, a = before[lo:hi], after[lo:hi]
    is_start[lo:hi] = (b <= t2) & (a >= t1)
    is_end[lo:hi] = (a <= t2) & (b >= t1)
    end_indices = np.flatnonzero(is_end)
    segments: list[Segment] = []
    j = lo
    while j < hi:
        if not is_start[j]:
            j += 1
            continue
        pos = np.searchsorted(end_indices, j + params.timelen1)
        if pos < len(end_indices) and end_indices[pos] - j <= params.timelen2:
            end = int(end_indices[pos])
            segments.append(Segment(j, end))
            j = end + 1
        else:
            j += 1
    return segments


def baseline_segments(profile: MadProfile, params: SegmenterParams) -> list[Segment]:
    """Single-threshold reference detector (comparison baseline).

    Activity is any run of after-window MAD at or above one threshold
    (resolved from baseline_percentile unless t1 is explicit); no dual
    gate and no duration gate, so noise bursts surface as detections.
    """
    if params.t1 is not None:
        threshold = float(params.t1)
    else:
        values = profile.valid_values()
        if values.size == 0:
            return []
        threshold = float(np.percentile(values, params.baseline_percentile))
    if threshold <= 0:
        return []
    lo, hi = profile.valid_start, profile.valid_stop
    active = np.zeros(profile.n, dtype=bool)
    active[lo:hi] = profile.after[lo:hi] >= threshold
    segments = []
    j = lo
    while j < hi:
        if active[j]:
            start = j
            while j < hi and active[j]:
                j += 1
            segments.append(Segment(start, j))
        else:
            j += 1
    return segments


def match_segments(
    detected: list[Segment], truth: list[Segment], match_tol: int
) -> list[tuple[int, int]]:
    """Greedy one-to-one matching in time order.

    A detection matches a truth segment when both endpoints lie within
    match_tol samples. Returns (detected_index, truth_index) pairs.
    """
    if match_tol < 0:
        raise ValueError("match_tol must be nonnegative")
    matches = []
    used = [False] * len(truth)
    for di, det in enumerate(detected):
        for ti, tru in enumerate(truth):
            if used[ti]:
                continue
            if (
                abs(det.j_begin - tru.j_begin) <= match_tol
                and abs(det.j_end - tru.j_end) <= match_tol
            ):
                matches.append((di, ti))
                used[ti] = True
                break
    return matches


def segmentation_metrics(
    detected: list[Segment], truth: list[Segment], match_tol: int
) -> tuple[float, float]:
    """(detection ratio, error ratio).

    DR = correctly detected / true events; ER = false detections / all
    detections, defined as 0 when nothing was detected.
    """
    matches = match_segments(detected, truth, match_tol)
    n_cd = len(matches)
    m_a = len(truth)
    m_d = len(detected)
    dr = n_cd / m_a if m_a else 0.0
    er = (m_d - n_cd) / m_d if m_d else 0.0
    return dr, er
