"""Five-stage measurement sequence built from two-mode transformations.

Detectors always sit on modes 0 and 1; mode 2 is never monitored.  Stage
``k`` measures the pair ``(A_k, A_{k+1})`` and stage 5 closes the cycle
with ``(A_5, A_1')``.  Between stages a single two-mode unitary acts on the
unmonitored mode and the mode of the observable being replaced; the mode
carrying the observable shared by the two stages is left untouched, so its
effective projector is bitwise the same object in both stages.

Wiring (observable -> detector mode)::

    stage 1   A1:0  A2:1          T1 acts on {0,2}, fixed 1
    stage 2   A2:1  A3:0          T2 acts on {1,2}, fixed 0
    stage 3   A3:0  A4:1          T3 acts on {0,2}, fixed 1
    stage 4   A4:1  A5:0          T4 acts on {1,2}, fixed 0
    stage 5   A5:0  A1':1

``A1'`` is whatever ``W5^dagger e_1`` turns out to be; it is never snapped
back onto ``v1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ClosureFailure, IncompatiblePair, InvalidStage
from .geometry import COMPAT_TOL, Pentagram, orthogonality_residual
from .qutrit import (
    DEGENERATE_TOL,
    ModeObservable,
    StageTransform,
    basis,
    compose,
    projector_probability,
    rotation_on_pair,
    two_mode_unitary,
    unitarity_residual,
)

__all__ = [
    "MeasurementStage",
    "ContextPipeline",
    "SharedCheck",
    "AuditReport",
    "build_pipeline",
    "effective_vector",
    "shared_measurement_audit",
    "perturb",
    "closure_overlap",
]

FRAME_TOL = 1e-11
UNMONITORED = 2

# (first label, first mode, second label, second mode) per stage
_WIRING = (
    ("A1", 0, "A2", 1),
    ("A2", 1, "A3", 0),
    ("A3", 0, "A4", 1),
    ("A4", 1, "A5", 0),
    ("A5", 0, "A1'", 1),
)
_ACTED = ((0, 2), (1, 2), (0, 2), (1, 2))


@dataclass(frozen=True)
class MeasurementStage:
    index: int
    frame: np.ndarray
    detector_assignment: tuple[tuple[str, int], tuple[str, int]]
    unmonitored_mode: int = UNMONITORED

    def __post_init__(self):
        f = np.array(self.frame, dtype=np.complex128)
        f.setflags(write=False)
        object.__setattr__(self, "frame", f)
        modes = {m for _, m in self.detector_assignment} | {self.unmonitored_mode}
        if modes != {0, 1, 2}:
            raise ValueError(f"stage {self.index}: detector modes do not partition the modes")
        res = unitarity_residual(f)
        if res > FRAME_TOL:
            raise ValueError(f"stage {self.index}: frame not unitary (residual {res:.3g})")

    @property
    def first(self) -> tuple[str, int]:
        return self.detector_assignment[0]

    @property
    def second(self) -> tuple[str, int]:
        return self.detector_assignment[1]

    def mode_of(self, label: str) -> int:
        for lab, m in self.detector_assignment:
            if lab == label:
                return m
        raise KeyError(label)

    def __eq__(self, other):
        if not isinstance(other, MeasurementStage):
            return NotImplemented
        return (
            self.index == other.index
            and self.detector_assignment == other.detector_assignment
            and self.unmonitored_mode == other.unmonitored_mode
            and bool(np.array_equal(self.frame, other.frame))
        )

    __hash__ = None


@dataclass(frozen=True)
class ContextPipeline:
    pentagram: Pentagram
    stages: tuple[MeasurementStage, ...]
    inter_stage: tuple[StageTransform, ...]
    a1_prime: ModeObservable

    def stage(self, k: int) -> MeasurementStage:
        if not 1 <= k <= 5:
            raise InvalidStage(f"stage must be in 1..5, got {k}")
        return self.stages[k - 1]

    def to_dict(self) -> dict:
        return {
            "pentagram": {
                "theta": self.pentagram.theta,
                "vectors": [_cplx_list(v.vector) for v in self.pentagram.vectors],
            },
            "stages": [
                {
                    "index": s.index,
                    "frame": [_cplx_list(row) for row in s.frame],
                    "detectors": [[lab, m] for lab, m in s.detector_assignment],
                    "unmonitored": s.unmonitored_mode,
                }
                for s in self.stages
            ],
            "interStage": [
                {"actedModes": list(t.acted_modes), "fixedMode": t.fixed_mode,
                 "matrix": [_cplx_list(row) for row in t.matrix]}
                for t in self.inter_stage
            ],
            "a1Prime": _cplx_list(self.a1_prime.vector),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContextPipeline":
        pent = Pentagram.from_vectors(
            [_from_cplx_list(v) for v in d["pentagram"]["vectors"]], d["pentagram"]["theta"]
        )
        stages = tuple(
            MeasurementStage(
                s["index"],
                np.array([_from_cplx_list(r) for r in s["frame"]]),
                tuple((lab, int(m)) for lab, m in s["detectors"]),
                s["unmonitored"],
            )
            for s in d["stages"]
        )
        inter = tuple(
            StageTransform(np.array([_from_cplx_list(r) for r in t["matrix"]]), tuple(t["actedModes"]))
            for t in d["interStage"]
        )
        return cls(pent, stages, inter, ModeObservable(_from_cplx_list(d["a1Prime"]), "A1'"))


def _cplx_list(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v)]


def _from_cplx_list(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)


def _initial_frame(p: Pentagram) -> np.ndarray:
    """Unitary taking v1 -> e0 and v2 -> e1, built from Givens steps."""
    w = np.eye(3, dtype=np.complex128)
    v1 = p[0].vector
    # fold v1's weight on modes 1,2 into mode 1, then rotate onto mode 0
    tail = np.array([0.0, v1[1], v1[2]], dtype=np.complex128)
    if np.linalg.norm(tail) >= DEGENERATE_TOL:
        w = compose(two_mode_unitary(tail, (1, 2), 1), w)
    w = compose(two_mode_unitary(w @ v1, (0, 1), 0), w)
    w = compose(two_mode_unitary(w @ p[1].vector, (1, 2), 1), w)
    return w


def _frames_from_transforms(w1: np.ndarray, transforms) -> list[np.ndarray]:
    frames = [w1]
    for t in transforms:
        frames.append(compose(t, frames[-1]))
    return frames


def _assemble(p: Pentagram, frames, transforms) -> ContextPipeline:
    stages = tuple(
        MeasurementStage(k + 1, frames[k], ((a, ma), (b, mb)))
        for k, (a, ma, b, mb) in enumerate(_WIRING)
    )
    a1p = ModeObservable(frames[4][1, :].conj(), "A1'")
    return ContextPipeline(p, stages, tuple(transforms), a1p)


def build_pipeline(p: Pentagram) -> ContextPipeline:
    """Stage frames and the four inter-stage transforms for pentagram ``p``.

    Raises :class:`IncompatiblePair` for a geometry that is not cyclically
    orthogonal and :class:`ClosureFailure` if a target leaks onto a fixed
    mode by more than 1e-10.
    """
    res = orthogonality_residual(p)
    if res > COMPAT_TOL:
        raise IncompatiblePair(f"pentagram orthogonality residual {res:.3g} > {COMPAT_TOL:g}")
    w = _initial_frame(p)
    frames = [w]
    transforms = []
    for k in range(4):
        target = w @ p[k + 2].vector  # v3, v4, v5, v1 in the current frame
        dest = _WIRING[k + 1][3]
        try:
            t = two_mode_unitary(target, _ACTED[k], dest)
        except ClosureFailure as exc:
            raise ClosureFailure(f"inter-stage transform {k + 1}: {exc}") from exc
        assert t.fixed_mode == _WIRING[k][3] == _WIRING[k + 1][1]
        transforms.append(t)
        w = compose(t, w)
        frames.append(w)
    return _assemble(p, frames, transforms)


def effective_vector(pl: ContextPipeline, stage: int, mode: int) -> ModeObservable:
    """Source-frame projector ``W_k^dagger e_mode`` seen by a detector."""
    st = pl.stage(stage)
    if mode not in (0, 1, 2):
        raise ValueError(f"mode must be 0, 1 or 2, got {mode}")
    label = next((lab for lab, m in st.detector_assignment if m == mode), f"u{stage}{mode}")
    return ModeObservable(st.frame[mode, :].conj(), label)


def closure_overlap(pl: ContextPipeline) -> float:
    """``|<A1'|v1>|^2``; 1 for a perfectly closed cycle."""
    return projector_probability(pl.a1_prime, pl.pentagram[0])


@dataclass(frozen=True)
class SharedCheck:
    label: str
    stages: tuple[int, int]
    mode: int
    identical: bool


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[SharedCheck, ...]
    overlap: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "checks": [
                {"label": c.label, "stages": list(c.stages), "mode": c.mode, "identical": c.identical}
                for c in self.checks
            ],
            "overlap": self.overlap,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditReport":
        checks = tuple(
            SharedCheck(c["label"], tuple(c["stages"]), c["mode"], c["identical"]) for c in d["checks"]
        )
        return cls(checks, d["overlap"], d["passed"])


def shared_measurement_audit(pl: ContextPipeline) -> AuditReport:
    """Check that each observable shared by neighbouring stages is realised
    by the very same projector (bit-for-bit) in both."""
    checks = []
    for k in range(1, 5):
        label, _ = pl.stage(k).second
        m_here = pl.stage(k).mode_of(label)
        m_next = pl.stage(k + 1).mode_of(label)
        same = m_here == m_next and np.array_equal(
            effective_vector(pl, k, m_here).vector, effective_vector(pl, k + 1, m_next).vector
        )
        checks.append(SharedCheck(label, (k, k + 1), m_here, bool(same)))
    return AuditReport(tuple(checks), closure_overlap(pl), all(c.identical for c in checks))


def perturb(pl: ContextPipeline, sigma: float, seed: int) -> ContextPipeline:
    """Model imperfect optics: follow every inter-stage transform by an extra
    rotation on its own mode pair, angle ~ N(0, sigma)."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    angles = np.random.default_rng(seed).normal(0.0, 1.0, size=len(pl.inter_stage)) * sigma
    transforms = []
    for t, ang in zip(pl.inter_stage, angles):
        jitter = rotation_on_pair(float(ang), t.acted_modes)
        transforms.append(StageTransform(compose(jitter, t.matrix), t.acted_modes))
    frames = _frames_from_transforms(pl.stages[0].frame, transforms)
    return _assemble(pl.pentagram, frames, transforms)


def tamper_stage(pl: ContextPipeline, stage: int, frame: np.ndarray) -> ContextPipeline:
    """Replace one stage frame verbatim (no consistency checks beyond unitarity).

    Only meant for negative controls of the audit.
    """
    stages = list(pl.stages)
    stages[stage - 1] = replace(stages[stage - 1], frame=frame)
    return replace(pl, stages=tuple(stages))
