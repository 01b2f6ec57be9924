"""Identification: alignment distance, gallery KNN, and evaluation sweeps.

Crossing waveforms differ in length and never line up exactly, so the
distance between two shape features is the sum of dynamic time warping
costs over every (pair, component) series. A query is labeled by
majority vote among its k nearest gallery entries.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .trace import SubjectId
from .wavelet import ShapeFeature

DEFAULT_K = 3


@njit(cache=True)
def _dtw_kernel(x, y, band):  # pragma: no cover - numba
    n = len(x)
    m = len(y)
    if band > 0:
        radius = band if band > abs(n - m) else abs(n - m)
    else:
        radius = m if m > n else n
    inf = np.inf
    prev = np.full(m + 1, inf)
    curr = np.full(m + 1, inf)
    prev[0] = 0.0
    for i in range(1, n + 1):
        curr[:] = inf
        j_lo = i - radius
        if j_lo < 1:
            j_lo = 1
        j_hi = i + radius
        if j_hi > m:
            j_hi = m
        for j in range(j_lo, j_hi + 1):
            cost = abs(x[i - 1] - y[j - 1])
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if curr[j - 1] < best:
                best = curr[j - 1]
            curr[j] = cost + best
        prev, curr = curr, prev
    return prev[m]


def dtw_distance(x, y, band: int = 0) -> float:
    """Minimal accumulated |x_i - y_j| over monotone alignments.

    Steps (1,0), (0,1), (1,1); full window unless band > 0 restricts
    |i - j| (widened automatically to reach the corner).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("inputs must be 1-D sequences")
    if x.size == 0 or y.size == 0:
        raise ValueError("inputs must be nonempty")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("inputs must be finite")
    return float(_dtw_kernel(x, y, band))


def ensemble_distance(a: ShapeFeature, b: ShapeFeature, band: int = 0) -> float:
    """Sum of DTW over all antenna pairs and all components."""
    if a.n_pairs != b.n_pairs or a.p != b.p:
        raise ValueError(
            f"feature layouts differ: {a.n_pairs}x{a.p} vs {b.n_pairs}x{b.p}"
        )
    total = 0.0
    for pair in range(a.n_pairs):
        for k in range(a.p):
            total += _dtw_kernel(a.coeffs[pair, k], b.coeffs[pair, k], band)
    return float(total)


@dataclass(frozen=True)
class Gallery:
    """Labeled training features with shared layout parameters."""

    entries: tuple[tuple[SubjectId, ShapeFeature], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("gallery must contain at least one entry")
        entries = tuple(self.entries)
        _, first = entries[0]
        for subject, feat in entries:
            if not subject:
                raise ValueError("gallery subjects must be nonempty")
            if feat.n_pairs != first.n_pairs or feat.p != first.p:
                raise ValueError("gallery entries disagree on pair/component layout")
            if feat.level != first.level:
                raise ValueError("gallery entries disagree on DWT level")
        object.__setattr__(self, "entries", entries)

    @property
    def subjects(self) -> list[SubjectId]:
        return sorted({subject for subject, _ in self.entries})

    @property
    def level(self) -> int:
        return self.entries[0][1].level

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class IdentificationResult:
    predicted: SubjectId
    neighbors: tuple[tuple[SubjectId, float], ...]

    def __post_init__(self):
        if not self.neighbors:
            raise ValueError("need at least one neighbor")
        dists = [d for _, d in self.neighbors]
        if any(b < a for a, b in zip(dists, dists[1:])):
            raise ValueError("neighbor distances must be non-decreasing")


def _vote(neighbors: list[tuple[SubjectId, float]]) -> SubjectId:
    """Majority label; ties broken by smaller summed distance, then name."""
    counts = Counter(subject for subject, _ in neighbors)
    top = max(counts.values())
    tied = [subject for subject, c in counts.items() if c == top]
    if len(tied) == 1:
        return tied[0]
    sums = {
        subject: sum(d for s, d in neighbors if s == subject) for subject in tied
    }
    best = min(sums.values())
    return min(subject for subject, s in sums.items() if s == best)


def knn_classify(
    query: ShapeFeature, gallery: Gallery, k: int = DEFAULT_K, band: int = 0
) -> IdentificationResult:
    """Label a query by majority vote among its k nearest gallery entries."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(gallery):
        raise ValueError(f"k = {k} exceeds gallery size {len(gallery)}")
    scored = [
        (ensemble_distance(query, feat, band), subject)
        for subject, feat in gallery.entries
    ]
    scored.sort(key=lambda t: (t[0], t[1]))
    neighbors = [(subject, dist) for dist, subject in scored[:k]]
    return IdentificationResult(_vote(neighbors), tuple(neighbors))


# ---------------------------------------------------------------------------
# Evaluation protocols


@dataclass(frozen=True)
class EvalProtocol:
    """Split sizes and sweep settings for gallery evaluation.

    train_size entries per subject form the gallery for the main run and
    the subject-count sweep. The training-size sweep holds out the last
    `holdout` samples per subject as a fixed probe set.
    """

    k: int = DEFAULT_K
    train_size: int = 20
    train_sizes: tuple[int, ...] = (10, 20, 30)
    subject_counts: tuple[int, ...] | None = None
    holdout: int = 10
    seed: int = 0
    max_subsets: int = 200
    band: int = 0

    def __post_init__(self):
        if self.k < 1 or self.train_size < 1 or self.holdout < 1:
            raise ValueError("k, train_size and holdout must be positive")
        if self.max_subsets < 1:
            raise ValueError("max_subsets must be positive")
        if any(s < 1 for s in self.train_sizes):
            raise ValueError("train sizes must be positive")


@dataclass
class EvalReport:
    subjects: list[SubjectId]
    overall_accuracy: float
    accuracy_by_subject_count: list[tuple[int, int, float]]  # (n, subsets, mean acc)
    accuracy_by_train_size: list[tuple[int, int, float]]  # (size, probes, acc)
    confusion: np.ndarray  # true x predicted counts
    n_samples: int = 0


def _group_by_subject(
    samples: list[tuple[SubjectId, ShapeFeature]]
) -> dict[SubjectId, list[int]]:
    groups: dict[SubjectId, list[int]] = {}
    for idx, (subject, _) in enumerate(samples):
        groups.setdefault(subject, []).append(idx)
    return groups


def pairwise_distances(
    features: list[ShapeFeature], band: int = 0
) -> np.ndarray:
    """Symmetric matrix of ensemble distances between all samples."""
    n = len(features)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = ensemble_distance(features[i], features[j], band)
            out[i, j] = d
            out[j, i] = d
    return out


def _predict(
    dist: np.ndarray,
    probe: int,
    gallery_idx: list[int],
    labels: list[SubjectId],
    k: int,
) -> SubjectId:
    scored = sorted(
        ((dist[probe, g], labels[g]) for g in gallery_idx),
        key=lambda t: (t[0], t[1]),
    )
    neighbors = [(subject, d) for d, subject in scored[:k]]
    return _vote(neighbors)


def _subject_subsets(
    subjects: list[SubjectId], size: int, max_subsets: int, rng: np.random.Generator
) -> list[tuple[SubjectId, ...]]:
    from math import comb

    total = comb(len(subjects), size)
    if total <= max_subsets:
        return list(itertools.combinations(subjects, size))
    chosen: set[tuple[SubjectId, ...]] = set()
    while len(chosen) < max_subsets:
        pick = rng.choice(len(subjects), size=size, replace=False)
        chosen.add(tuple(sorted(subjects[i] for i in pick)))
    return sorted(chosen)


def evaluate_identification(
    samples: list[tuple[SubjectId, ShapeFeature]],
    protocol: EvalProtocol = EvalProtocol(),
    distances: np.ndarray | None = None,
) -> EvalReport:
    """Accuracy sweeps over subject-set size and training-set size.

    samples are (subject, feature) in acquisition order; the first
    train_size per subject train, the rest probe. One pairwise distance
    matrix backs every sweep, so results are deterministic given the
    protocol seed.
    """
    groups = _group_by_subject(samples)
    subjects = sorted(groups)
    if len(subjects) < 2:
        raise ValueError("need at least 2 subjects")
    for subject, idxs in groups.items():
        if len(idxs) < protocol.train_size + 1:
            raise ValueError(
                f"subject {subject!r} has {len(idxs)} samples; "
                f"need > train_size = {protocol.train_size}"
            )
    labels = [subject for subject, _ in samples]
    if distances is None:
        distances = pairwise_distances([f for _, f in samples], protocol.band)

    train = {s: idxs[: protocol.train_size] for s, idxs in groups.items()}
    test = {s: idxs[protocol.train_size :] for s, idxs in groups.items()}

    # Main run: all subjects, confusion matrix.
    gallery_idx = [i for s in subjects for i in train[s]]
    sub_pos = {s: i for i, s in enumerate(subjects)}
    confusion = np.zeros((len(subjects), len(subjects)), dtype=np.int64)
    correct = total = 0
    for s in subjects:
        for probe in test[s]:
            pred = _predict(distances, probe, gallery_idx, labels, protocol.k)
            confusion[sub_pos[s], sub_pos[pred]] += 1
            correct += pred == s
            total += 1
    overall = correct / total

    # Sweep 1: accuracy vs number of enrolled subjects.
    rng = np.random.default_rng(protocol.seed)
    counts = protocol.subject_counts or tuple(range(2, len(subjects) + 1))
    by_count = []
    for n_sub in counts:
        if not 2 <= n_sub <= len(subjects):
            raise ValueError(f"subject count {n_sub} out of range")
        accs = []
        for subset in _subject_subsets(subjects, n_sub, protocol.max_subsets, rng):
            g_idx = [i for s in subset for i in train[s]]
            c = t = 0
            for s in subset:
                for probe in test[s]:
                    pred = _predict(distances, probe, g_idx, labels, protocol.k)
                    c += pred == s
                    t += 1
            accs.append(c / t)
        by_count.append((n_sub, len(accs), float(np.mean(accs))))

    # Sweep 2: accuracy vs training-set size, fixed probe tail.
    by_size = []
    pools = {s: idxs[: -protocol.holdout] for s, idxs in groups.items()}
    tails = {s: idxs[-protocol.holdout :] for s, idxs in groups.items()}
    for size in protocol.train_sizes:
        g_idx = [i for s in subjects for i in pools[s][:size]]
        c = t = 0
        for s in subjects:
            for probe in tails[s]:
                pred = _predict(distances, probe, g_idx, labels, protocol.k)
                c += pred == s
                t += 1
        by_size.append((size, t, c / t))

    return EvalReport(
        subjects=subjects,
        overall_accuracy=overall,
        accuracy_by_subject_count=by_count,
        accuracy_by_train_size=by_size,
        confusion=confusion,
        n_samples=len(samples),
    )
