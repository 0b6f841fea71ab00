"""Monte Carlo photon counting through a :class:`ContextPipeline`.

One heralded photon per shot.  At stage ``k`` the photon lands on detector
mode 0, detector mode 1 or the unmonitored mode with the Born
probabilities of the stage's effective projectors; then detector
efficiency thins real clicks and independent dark counts add spurious
ones.  A click maps to -1, silence to +1.

Randomness
----------
Shots are split into fixed-size blocks.  Every block draws from its own
``numpy`` generator seeded by ``SeedSequence(seed, spawn_key=(stream,
stage, block))``, so results do not depend on how blocks are scheduled
and per-block counts merge by plain addition.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EmptyTally, InvalidStage
from .pipeline import ContextPipeline, effective_vector
from .qutrit import QutritState, projector_probability

__all__ = [
    "DetectorModel",
    "TallyTable",
    "Estimate",
    "sample_context",
    "estimate_correlation",
    "click_rate",
    "blocked_click_rate",
    "overlap_term",
    "exact_overlap_term",
    "exact_context_correlation",
    "exact_click_probability",
    "exact_blocked_probability",
    "merge_tallies",
    "tallies_to_csv",
    "BLOCK_SHOTS",
]

BLOCK_SHOTS = 1 << 16
CLAMP_TOL = 1e-12

STREAM_CONTEXT = 0
STREAM_RATE = 1
STREAM_BLOCKED = 2

OUTCOMES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_rate: float = 0.0
    postselect: bool = False

    def __post_init__(self):
        for name in ("efficiency", "dark_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def to_dict(self) -> dict:
        return {"efficiency": self.efficiency, "darkRate": self.dark_rate, "postselect": self.postselect}

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorModel":
        return cls(d["efficiency"], d["darkRate"], d["postselect"])


@dataclass(frozen=True)
class TallyTable:
    """Joint outcome counts ``(a, b)`` of one context.

    ``a`` belongs to the stage's first observable, ``b`` to the second.
    ``discarded`` counts no-click shots dropped by postselection, so
    ``sum(counts) + discarded == shots`` always.
    """

    context: int
    counts: dict
    double_clicks: int
    shots: int
    seed: int
    discarded: int = 0
    stream: int = STREAM_CONTEXT
    labels: tuple[str, str] = ("", "")
    detector: DetectorModel = field(default_factory=DetectorModel)

    def __post_init__(self):
        counts = {k: int(self.counts.get(k, 0)) for k in OUTCOMES}
        object.__setattr__(self, "counts", counts)
        if sum(counts.values()) + self.discarded != self.shots:
            raise ValueError("tally counts do not add up to the number of shots")

    @property
    def kept(self) -> int:
        return self.shots - self.discarded

    def clicks(self, which: int) -> int:
        """Shots in which the detector of observable ``which`` (0 first, 1 second) fired."""
        return sum(c for (a, b), c in self.counts.items() if (a, b)[which] == -1)

    def to_dict(self) -> dict:
        return {
            "context": self.context,
            "labels": list(self.labels),
            "counts": [[a, b, c] for (a, b), c in self.counts.items()],
            "doubleClicks": self.double_clicks,
            "shots": self.shots,
            "discarded": self.discarded,
            "seed": self.seed,
            "stream": self.stream,
            "detector": self.detector.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TallyTable":
        return cls(
            context=d["context"],
            counts={(a, b): c for a, b, c in d["counts"]},
            double_clicks=d["doubleClicks"],
            shots=d["shots"],
            seed=d["seed"],
            discarded=d["discarded"],
            stream=d["stream"],
            labels=tuple(d["labels"]),
            detector=DetectorModel.from_dict(d["detector"]),
        )


@dataclass(frozen=True)
class Estimate:
    """A sampled mean with its standard error.

    ``n == 0`` marks a noise-free (exact) value, which carries stderr 0.
    """

    mean: float
    stderr: float
    n: int

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        return cls(float(value), 0.0, 0)

    @property
    def is_exact(self) -> bool:
        return self.n == 0

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "Estimate":
        return cls(d["mean"], d["stderr"], d["n"])


def _probabilities(pl: ContextPipeline, stage: int, psi: QutritState) -> tuple[float, float]:
    u0 = effective_vector(pl, stage, 0)
    u1 = effective_vector(pl, stage, 1)
    p0 = projector_probability(u0, psi)
    p1 = projector_probability(u1, psi)
    p_none = 1.0 - p0 - p1
    if p_none < -CLAMP_TOL:
        raise ValueError(f"stage {stage}: detector probabilities exceed one by {-p_none:.3g}")
    return p0, p1


def _run_blocks(probs, det: DetectorModel, shots: int, seed: int, key: tuple, workers: int) -> np.ndarray:
    p0, p1 = probs
    n_blocks = -(-shots // BLOCK_SHOTS)

    def one(b):
        n = min(BLOCK_SHOTS, shots - b * BLOCK_SHOTS)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key + (b,)))
        u = rng.random((n, _kernels.UNIFORMS_PER_SHOT))
        return _kernels.classify_shots(u, p0, p1, det.efficiency, det.dark_rate)

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_blocks)))
    else:
        parts = [one(b) for b in range(n_blocks)]
    return np.sum(parts, axis=0)


def sample_context(
    pl: ContextPipeline,
    stage: int,
    psi: QutritState,
    det: DetectorModel,
    shots: int,
    seed: int,
    *,
    stream: int = STREAM_CONTEXT,
    workers: int = 1,
) -> TallyTable:
    """Simulate ``shots`` heralded photons through measurement stage ``stage``."""
    if not (isinstance(stage, (int, np.integer)) and 1 <= stage <= 5):
        raise InvalidStage(f"stage must be in 1..5, got {stage!r}")
    if shots <= 0:
        raise ValueError("shots must be positive")
    st = pl.stage(stage)
    raw = _run_blocks(_probabilities(pl, stage, psi), det, shots, seed, (stream, stage), workers)
    # raw[c0 * 2 + c1] with c0/c1 the click flags of detector modes 0/1
    first_on_zero = st.first[1] == 0
    counts = {}
    for code, n in enumerate(raw):
        c0, c1 = divmod(code, 2)
        ca, cb = (c0, c1) if first_on_zero else (c1, c0)
        counts[(1 - 2 * ca, 1 - 2 * cb)] = int(n)
    discarded = 0
    if det.postselect:
        discarded = counts[(1, 1)]
        counts[(1, 1)] = 0
    return TallyTable(
        context=stage,
        counts=counts,
        double_clicks=int(raw[3]),
        shots=int(shots),
        seed=int(seed),
        discarded=discarded,
        stream=stream,
        labels=(st.first[0], st.second[0]),
        detector=det,
    )


def merge_tallies(a: TallyTable, b: TallyTable) -> TallyTable:
    """Combine tallies of the same context (associative, commutative)."""
    if a.context != b.context or a.labels != b.labels or a.detector != b.detector:
        raise ValueError("can only merge tallies of the same context and detector model")
    return TallyTable(
        context=a.context,
        counts={k: a.counts[k] + b.counts[k] for k in OUTCOMES},
        double_clicks=a.double_clicks + b.double_clicks,
        shots=a.shots + b.shots,
        seed=min(a.seed, b.seed),
        discarded=a.discarded + b.discarded,
        stream=a.stream,
        labels=a.labels,
        detector=a.detector,
    )


def estimate_correlation(t: TallyTable) -> Estimate:
    """Empirical ``<A B>`` with plug-in stderr ``sqrt((1 - mean^2) / n)``."""
    n = t.kept
    if n <= 0:
        raise EmptyTally(f"context {t.context}: no shots left after postselection")
    total = sum(a * b * c for (a, b), c in t.counts.items())
    mean = total / n
    return Estimate(mean, math.sqrt(max(0.0, 1.0 - mean * mean) / n), n)


def _bernoulli(k: int, n: int) -> Estimate:
    if n <= 0:
        raise EmptyTally("no shots to estimate a click rate from")
    p = k / n
    return Estimate(p, math.sqrt(p * (1.0 - p) / n), n)


def click_rate(t: TallyTable, which: int) -> Estimate:
    """Per-heralded-photon click probability of one detector of the tally."""
    return _bernoulli(t.clicks(which), t.shots)


def exact_blocked_probability(pl: ContextPipeline, psi: QutritState) -> float:
    """``|<A1'|(1 - |v1><v1|) psi>|^2``: photon reaches the A1' detector
    although its v1 component was blocked at the source."""
    v1 = pl.pentagram[0].vector
    blocked = psi.amplitudes - v1 * np.vdot(v1, psi.amplitudes)
    amp = np.vdot(pl.a1_prime.vector, blocked)
    return float(amp.real * amp.real + amp.imag * amp.imag)


def _with_detector(q: float, det: DetectorModel) -> float:
    return 1.0 - (1.0 - det.efficiency * q) * (1.0 - det.dark_rate)


def blocked_click_rate(
    pl: ContextPipeline, psi: QutritState, det: DetectorModel, shots: int, seed: int
) -> Estimate:
    """Click rate ``r1`` at the A1' detector with the A1 mode blocked."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    q = exact_blocked_probability(pl, psi)
    raw = _run_blocks((q, 0.0), det, shots, seed, (STREAM_BLOCKED, 5), 1)
    return _bernoulli(int(raw[2] + raw[3]), shots)


def overlap_term(p1: Estimate, r1: Estimate, r2: Estimate) -> Estimate:
    """Agreement ``1 - 2 P(A1 != A1')`` from three click rates.

    ``P(disagree) = p1 - r2 + 2 r1``: of the A1' clicks, ``r2 - r1`` come
    through the v1 component (agreeing with A1), ``r1`` leak in from the
    rest (disagreeing), and A1 clicks not matched by A1' disagree as well.
    Errors are propagated as uncorrelated.
    """
    mean = 1.0 - 2.0 * (p1.mean - r2.mean + 2.0 * r1.mean)
    stderr = 2.0 * math.sqrt(p1.stderr**2 + r2.stderr**2 + 4.0 * r1.stderr**2)
    ns = [e.n for e in (p1, r1, r2)]
    n = 0 if 0 in ns else min(ns)
    return Estimate(mean, stderr, n)


def exact_click_probability(v, psi: QutritState, det: DetectorModel | None = None) -> float:
    q = projector_probability(v, psi)
    return q if det is None else _with_detector(q, det)


def exact_overlap_term(pl: ContextPipeline, psi: QutritState, det: DetectorModel | None = None) -> float:
    """Noise-free value of :func:`overlap_term`."""
    p1 = exact_click_probability(pl.pentagram[0], psi, det)
    r2 = exact_click_probability(pl.a1_prime, psi, det)
    q = exact_blocked_probability(pl, psi)
    r1 = q if det is None else _with_detector(q, det)
    return 1.0 - 2.0 * (p1 - r2 + 2.0 * r1)


def exact_context_correlation(
    pl: ContextPipeline, stage: int, psi: QutritState, det: DetectorModel | None = None
) -> float:
    """Exact ``<A_first A_second>`` at a stage, including detector effects.

    With ideal detectors this is ``1 - 2 p_first - 2 p_second``.
    """
    p0, p1 = _probabilities(pl, stage, psi)
    if det is None:
        return 1.0 - 2.0 * p0 - 2.0 * p1
    eta, d = det.efficiency, det.dark_rate
    pn = max(0.0, 1.0 - p0 - p1)
    hit = 1.0 - (1.0 - eta) * (1.0 - d)  # detector fires when the photon is on its mode
    # joint click-pattern probabilities, conditioned on photon location
    loc = ((p0, hit, d), (p1, d, hit), (pn, d, d))
    p_c0 = sum(p * a for p, a, _ in loc)
    p_c1 = sum(p * b for p, _, b in loc)
    p_both = sum(p * a * b for p, a, b in loc)
    corr = 1.0 - 2.0 * p_c0 - 2.0 * p_c1 + 4.0 * p_both
    if det.postselect:
        p_silent = sum(p * (1.0 - a) * (1.0 - b) for p, a, b in loc)
        if p_silent >= 1.0:
            raise EmptyTally("no clicks possible under this detector model")
        corr = (corr - p_silent) / (1.0 - p_silent)
    return corr


def tallies_to_csv(tallies) -> str:
    """CSV with columns ``context,outcome_a,outcome_b,count``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["context", "outcome_a", "outcome_b", "count"])
    for t in tallies:
        for (a, b), c in t.counts.items():
            w.writerow([t.context, a, b, c])
    return buf.getvalue()
