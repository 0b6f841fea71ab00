"""The five KCBS measurement directions and the exact quantum value of the
five-term cyclic correlation sum.

Directions are stored as ``v1..v5`` at indices ``0..4``; the cycle closes
with the pair ``(v5, v1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IncompatiblePair
from .qutrit import ModeObservable, QutritState, inner, projector_probability

__all__ = [
    "Pentagram",
    "PairCorrelation",
    "OPTIMAL_THETA",
    "QUANTUM_MIN",
    "symmetric_pentagram",
    "optimal_pentagram",
    "orthogonality_residual",
    "pair_correlation",
    "eq1_lhs",
    "SYMMETRIC_STATE",
]

COMPAT_TOL = 1e-10

# cos^2(theta*) = cos(pi/5) / (1 + cos(pi/5)) = 1/sqrt(5)
OPTIMAL_THETA = math.acos(math.sqrt(math.cos(math.pi / 5) / (1.0 + math.cos(math.pi / 5))))
QUANTUM_MIN = 5.0 - 4.0 * math.sqrt(5.0)

SYMMETRIC_STATE = QutritState.basis(2)


@dataclass(frozen=True)
class Pentagram:
    vectors: tuple[ModeObservable, ...]
    theta: float | None = None

    def __post_init__(self):
        if len(self.vectors) != 5:
            raise ValueError("a pentagram has exactly five directions")
        object.__setattr__(self, "vectors", tuple(self.vectors))

    @classmethod
    def from_vectors(cls, vectors: Sequence, theta: float | None = None) -> "Pentagram":
        obs = tuple(
            v if isinstance(v, ModeObservable) else ModeObservable(np.asarray(v), f"A{i + 1}")
            for i, v in enumerate(vectors)
        )
        return cls(obs, theta)

    def __getitem__(self, i: int) -> ModeObservable:
        return self.vectors[i % 5]

    def matrix(self) -> np.ndarray:
        """Directions as rows of a (5, 3) complex array."""
        return np.stack([v.vector for v in self.vectors])

    def rotated(self, u: np.ndarray) -> "Pentagram":
        return Pentagram.from_vectors([u @ v.vector for v in self.vectors], self.theta)


@dataclass(frozen=True)
class PairCorrelation:
    i: int
    j: int
    value: float


def symmetric_pentagram(theta: float) -> Pentagram:
    """Five directions on a cone of half-angle ``theta`` about mode 2,
    azimuths ``4 pi i / 5``."""
    s, c = math.sin(theta), math.cos(theta)
    vecs = []
    for i in range(5):
        phi = 4.0 * math.pi * i / 5.0
        vecs.append(np.array([s * math.cos(phi), s * math.sin(phi), c], dtype=np.complex128))
    return Pentagram.from_vectors(vecs, theta)


def optimal_pentagram() -> Pentagram:
    return symmetric_pentagram(OPTIMAL_THETA)


def orthogonality_residual(p: Pentagram) -> float:
    """max_i |<v_i|v_{i+1}>| around the cycle."""
    return max(abs(inner(p[i].vector, p[i + 1].vector)) for i in range(5))


def pair_correlation(p: Pentagram, i: int, psi: QutritState) -> PairCorrelation:
    """``<A_i A_{i+1}>`` for cyclic neighbours (0-based ``i``).

    A single photon cannot click two orthogonal detectors, so the joint
    click term is zero; orthogonality is checked instead of computed.
    """
    j = (i + 1) % 5
    overlap = abs(inner(p[i].vector, p[j].vector))
    if overlap > COMPAT_TOL:
        raise IncompatiblePair(
            f"<v{i + 1}|v{j + 1}> = {overlap:.3g} exceeds compatibility tolerance {COMPAT_TOL:g}"
        )
    value = 1.0 - 2.0 * projector_probability(p[i], psi) - 2.0 * projector_probability(p[j], psi)
    return PairCorrelation(i, j, value)


def eq1_lhs(p: Pentagram, psi: QutritState) -> float:
    """Left-hand side of the KCBS inequality (classical bound -3)."""
    total = 0.0
    for i in range(5):
        total += pair_correlation(p, i, psi).value
    return total
