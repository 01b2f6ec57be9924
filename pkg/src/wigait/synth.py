"""Deterministic synthetic CSI traces with ground-truth crossing labels.

Each subject gets a walk signature: a burst duration, an amplitude
envelope (gaussian-edged plateau whose flank widths and asymmetry are
subject parameters), a slow within-burst amplitude modulation, a pair
of oscillation tones in the sub-10 Hz walking band, and per-stream
coupling weights that spread the burst over all subcarriers with a
low-rank structure. Traces are a slowly drifting baseline plus white
measurement noise plus one burst per scheduled crossing. The
generator's own bookkeeping (envelope support above 5% of peak) is
emitted as the ground-truth label, which makes every pipeline stage
testable without hardware captures.

This is a test harness, not a channel simulator: no claim of physical
multipath fidelity is made.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .trace import CsiTrace, Segment, SegmentLabel, SubjectId

DEFAULT_SAMPLE_RATE = 1000.0
DEFAULT_NOISE_SIGMA = 0.3
DEFAULT_DRIFT_AMP = 0.05
DEFAULT_DRIFT_PERIOD_S = 45.0
DEFAULT_MIN_SPACING = 4000  # samples between crossing starts

_ENVELOPE_FLOOR = 0.05  # label = envelope support above this fraction of peak
_EDGE_K = 2.448  # flank cut at the 5% point of the gaussian edge
_DURATION_CLIP = (1000.0, 3400.0)

# Base (separation-independent) signature parameters.
_BASE_DURATION_MEAN = 1500.0
_BASE_DURATION_SIGMA = 60.0
_BASE_EDGE_WIDTH = 0.015
_BASE_FREQ_HZ = 5.0
_BASE_AMPLITUDE = 5.5
_BASE_MOD_DEPTH = 0.05
_BASE_MOD_CYCLES = 2.0


def _stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass(frozen=True, eq=False)
class SubjectProfile:
    """Walk signature; all durations in samples at the nominal rate."""

    subject: SubjectId
    duration_mean: float
    duration_sigma: float
    env_width: float  # gaussian flank sigma as a fraction of duration
    env_skew: float  # -1..1, widens one flank, narrows the other
    mod_depth: float  # within-burst amplitude modulation depth
    mod_cycles: float  # modulation cycles per burst
    mod_phase: float
    freqs_hz: tuple[float, ...]
    tone_amps: tuple[float, ...]
    band_hz: tuple[float, float]
    amplitude: float
    coupling: np.ndarray  # (n_streams, 3) weights for (sin, cos, bulge)

    def __post_init__(self):
        if not self.subject:
            raise ValueError("subject must be nonempty")
        coupling = np.asarray(self.coupling, dtype=np.float64)
        if coupling.ndim != 2 or coupling.shape[1] != 3:
            raise ValueError("coupling must have shape (n_streams, 3)")
        coupling.flags.writeable = False
        object.__setattr__(self, "coupling", coupling)

    @property
    def n_streams(self) -> int:
        return self.coupling.shape[0]


def synth_subject_profile(
    seed: int,
    subject: SubjectId,
    separation: float,
    n_streams: int = 180,
) -> SubjectProfile:
    """Deterministic signature for (seed, subject).

    separation in [0, 1] scales how far the subject's parameters stray
    from the shared base values: 0 makes every subject identical, 1
    spreads them over the full design range (oscillation bands both
    disperse and narrow, so distinct subjects separate in frequency).
    """
    if not 0.0 <= separation <= 1.0:
        raise ValueError("separation must lie in [0, 1]")
    s = separation
    base_rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA5E]))
    subj_rng = np.random.default_rng(
        np.random.SeedSequence([seed, _stable_hash(subject)])
    )

    base_coupling = base_rng.normal(size=(n_streams, 3))
    stream_gain = base_rng.uniform(0.65, 1.25, size=n_streams)

    u = subj_rng.uniform(-1.0, 1.0, size=9)
    duration_mean = _BASE_DURATION_MEAN + s * 350.0 * u[0]
    duration_sigma = _BASE_DURATION_SIGMA + s * 25.0 * u[1]
    env_width = _BASE_EDGE_WIDTH + s * 0.006 * u[2]
    env_skew = s * 0.8 * u[3]
    center = _BASE_FREQ_HZ + s * 2.2 * u[4]
    halfwidth = 1.0 - 0.8 * s
    freqs = (center - 0.5 * halfwidth, center + 0.6 * halfwidth)
    tone_amps = (0.28, 0.15 + 0.07 * s * u[5])
    mod_depth = _BASE_MOD_DEPTH + s * 0.03 * u[6]
    mod_cycles = _BASE_MOD_CYCLES + s * 1.2 * u[7]
    mod_phase = s * np.pi * u[8]
    amplitude = _BASE_AMPLITUDE + s * 1.0 * subj_rng.uniform(-1.0, 1.0)

    subj_coupling = subj_rng.normal(size=(n_streams, 3))
    raw = base_coupling + s * 0.9 * subj_coupling
    # Level bulge dominates (a blocked line of sight shifts the mean
    # amplitude); the quadrature tones add oscillation texture on top.
    raw = raw * np.array([1.0, 0.7, 2.2])
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    coupling = raw / norms * stream_gain[:, None]

    return SubjectProfile(
        subject=subject,
        duration_mean=float(duration_mean),
        duration_sigma=float(duration_sigma),
        env_width=float(env_width),
        env_skew=float(env_skew),
        mod_depth=float(mod_depth),
        mod_cycles=float(mod_cycles),
        mod_phase=float(mod_phase),
        freqs_hz=tuple(float(f) for f in freqs),
        tone_amps=tuple(float(a) for a in tone_amps),
        band_hz=(float(center - halfwidth), float(center + halfwidth)),
        amplitude=float(amplitude),
        coupling=coupling,
    )


@dataclass(frozen=True)
class SynthSpec:
    """One trace's generation parameters; fully determines the output."""

    duration_s: float
    schedule: tuple[tuple[float, SubjectId], ...] = ()
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE
    noise_sigma: float = DEFAULT_NOISE_SIGMA
    drift_amp: float = DEFAULT_DRIFT_AMP
    drift_period_s: float = DEFAULT_DRIFT_PERIOD_S
    seed: int = 0
    n_tx: int = 2
    n_rx: int = 3
    n_subcarriers: int = 30
    min_spacing: int = DEFAULT_MIN_SPACING

    def __post_init__(self):
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("duration and sample rate must be positive")
        if self.noise_sigma < 0 or self.drift_amp < 0:
            raise ValueError("noise and drift amplitudes must be nonnegative")
        starts = sorted(t for t, _ in self.schedule)
        spacing_s = self.min_spacing / self.sample_rate_hz
        for a, b in zip(starts, starts[1:]):
            if b - a < spacing_s:
                raise ValueError(
                    f"crossings at {a}s and {b}s are closer than "
                    f"min_spacing = {spacing_s}s"
                )
        object.__setattr__(self, "schedule", tuple(self.schedule))

    @property
    def n_streams(self) -> int:
        return self.n_tx * self.n_rx * self.n_subcarriers

    @property
    def n_frames(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


def _envelope(
    duration: int,
    width: float,
    skew: float,
    mod_depth: float,
    mod_cycles: float,
    mod_phase: float,
) -> np.ndarray:
    """Plateau with gaussian flanks and a slow amplitude modulation.

    The flanks' sigmas are width*duration scaled by the skew; the 5%
    points of the flanks sit at the ends of [0, duration), so the
    ground-truth support is essentially the whole burst.
    """
    u = np.arange(duration, dtype=np.float64)
    sigma_left = width * duration * (1.0 + 0.3 * skew)
    sigma_right = width * duration * (1.0 - 0.3 * skew)
    a = _EDGE_K * sigma_left
    b = duration - 1 - _EDGE_K * sigma_right
    env = np.ones(duration)
    left = u < a
    right = u > b
    env[left] = np.exp(-0.5 * ((u[left] - a) / sigma_left) ** 2)
    env[right] = np.exp(-0.5 * ((u[right] - b) / sigma_right) ** 2)
    env *= 1.0 + mod_depth * np.sin(
        2.0 * np.pi * mod_cycles * u / duration + mod_phase
    )
    return env


def synth_trace(
    profiles: dict[SubjectId, SubjectProfile] | list[SubjectProfile],
    spec: SynthSpec,
) -> tuple[CsiTrace, list[SegmentLabel]]:
    """Generate one trace and its ground-truth crossing labels."""
    if not isinstance(profiles, dict):
        profiles = {p.subject: p for p in profiles}
    for _, subject in spec.schedule:
        if subject not in profiles:
            raise ValueError(f"schedule references unknown subject {subject!r}")

    n = spec.n_frames
    n_streams = spec.n_streams
    fs = spec.sample_rate_hz

    ss = np.random.SeedSequence([spec.seed, 0x7ACE])
    children = ss.spawn(1 + len(spec.schedule))
    rng = np.random.default_rng(children[0])

    base_amp = rng.uniform(8.0, 12.0, size=n_streams)
    drift_phase = rng.uniform(0.0, 2.0 * np.pi, size=n_streams)

    t = np.arange(n, dtype=np.float64) / fs
    data = np.empty((n, n_streams))
    data[:] = base_amp
    if spec.drift_amp > 0:
        omega = 2.0 * np.pi / spec.drift_period_s
        data += spec.drift_amp * np.sin(omega * t[:, None] + drift_phase)

    labels: list[SegmentLabel] = []
    order = sorted(range(len(spec.schedule)), key=lambda i: spec.schedule[i][0])
    intervals: list[tuple[int, int]] = []
    for i in order:
        t_start, subject = spec.schedule[i]
        profile = profiles[subject]
        if profile.n_streams != n_streams:
            raise ValueError(
                f"profile {subject!r} built for {profile.n_streams} streams, "
                f"trace has {n_streams}"
            )
        crng = np.random.default_rng(children[1 + i])
        duration = int(
            np.clip(
                crng.normal(profile.duration_mean, profile.duration_sigma),
                *_DURATION_CLIP,
            )
        )
        start = int(round(t_start * fs))
        if start < 0 or start + duration > n:
            raise ValueError(
                f"crossing at {t_start}s (duration {duration} samples) "
                f"does not fit in the {n}-frame trace"
            )
        env = _envelope(
            duration,
            profile.env_width,
            profile.env_skew,
            profile.mod_depth,
            profile.mod_cycles,
            profile.mod_phase + crng.normal(0.0, 0.3),
        )
        u = np.arange(duration, dtype=np.float64) / fs
        osc_sin = np.zeros(duration)
        osc_cos = np.zeros(duration)
        for f_hz, amp in zip(profile.freqs_hz, profile.tone_amps):
            f_jit = f_hz * (1.0 + crng.normal(0.0, 0.015))
            phase = crng.uniform(0.0, 2.0 * np.pi)
            osc_sin += amp * np.sin(2.0 * np.pi * f_jit * u + phase)
            osc_cos += amp * np.cos(2.0 * np.pi * f_jit * u + phase)
        amp_jitter = float(np.exp(crng.normal(0.0, 0.06)))
        burst = np.stack([env * osc_sin, env * osc_cos, env * 0.8], axis=1)
        data[start : start + duration] += (
            profile.amplitude * amp_jitter * burst @ profile.coupling.T
        )

        support = np.flatnonzero(env >= _ENVELOPE_FLOOR * env.max())
        j_begin = start + int(support[0])
        j_end = start + int(support[-1]) + 1
        for lo, hi in intervals:
            if j_begin < hi and lo < j_end:
                raise ValueError("crossings overlap after duration draw")
        intervals.append((j_begin, j_end))
        labels.append(SegmentLabel(Segment(j_begin, j_end), subject))

    if spec.noise_sigma > 0:
        data += rng.normal(0.0, spec.noise_sigma, size=(n, n_streams))
    np.maximum(data, 0.0, out=data)

    frames = data.reshape(n, spec.n_tx * spec.n_rx, spec.n_subcarriers)
    trace = CsiTrace(fs, spec.n_tx, spec.n_rx, spec.n_subcarriers, frames)
    labels.sort(key=lambda lab: lab.segment.j_begin)
    return trace, labels


# ---------------------------------------------------------------------------
# Corpus plans


@dataclass(frozen=True)
class CorpusPlan:
    """A reproducible set of single-crossing traces cycling over subjects."""

    subjects: tuple[SubjectId, ...]
    separation: float
    seed: int
    specs: tuple[SynthSpec, ...]
    profiles: dict[SubjectId, SubjectProfile] = field(compare=False)

    def jobs(self):
        """Yield (spec, subject) for every trace in the plan."""
        for spec in self.specs:
            yield spec, spec.schedule[0][1]


def make_corpus_plan(
    n_subjects: int,
    n_traces: int,
    separation: float,
    seed: int,
    duration_s: float = 7.0,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE,
    n_tx: int = 2,
    n_rx: int = 3,
    n_subcarriers: int = 30,
) -> CorpusPlan:
    """Plan n_traces single-crossing traces, subjects round-robin.

    Extending n_traces keeps every earlier trace identical, so a corpus
    can be grown without invalidating previous results.
    """
    if n_subjects < 1:
        raise ValueError("need at least one subject")
    subjects = tuple(f"s{i:02d}" for i in range(n_subjects))
    n_streams = n_tx * n_rx * n_subcarriers
    profiles = {
        s: synth_subject_profile(seed, s, separation, n_streams) for s in subjects
    }
    start_rng = np.random.default_rng(np.random.SeedSequence([seed, 0x57A7]))
    specs = []
    for i in range(n_traces):
        t0 = float(start_rng.uniform(1.0, 1.8))
        specs.append(
            SynthSpec(
                duration_s=duration_s,
                schedule=((t0, subjects[i % n_subjects]),),
                sample_rate_hz=sample_rate_hz,
                noise_sigma=noise_sigma,
                seed=(seed * 1_000_003 + i) % 2**63,
                n_tx=n_tx,
                n_rx=n_rx,
                n_subcarriers=n_subcarriers,
            )
        )
    return CorpusPlan(subjects, separation, seed, tuple(specs), profiles)


def generate_corpus(plan: CorpusPlan):
    """Yield (spec, trace, labels) for every planned trace."""
    for spec in plan.specs:
        trace, labels = synth_trace(plan.profiles, spec)
        yield spec, trace, labels
