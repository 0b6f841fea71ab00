"""Complex linear algebra on the three-mode space of a single photon.

States and observable directions are unit vectors in C^3.  A detector on a
mode realises the projector onto that mode's basis vector in the current
frame; with the click -> -1 convention the observable is ``1 - 2|v><v|``.

Two-mode transformations are the basic optical building block: they mix
exactly two mode amplitudes and leave the third one alone.  ``apply`` and
``compose`` only ever write the acted coordinates, so the untouched mode is
bitwise identical before and after, not merely close.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ClosureFailure, DegenerateTarget

__all__ = [
    "QutritState",
    "ModeObservable",
    "StageTransform",
    "inner",
    "projector_probability",
    "observable_expectation",
    "two_mode_unitary",
    "rotation_on_pair",
    "apply",
    "compose",
    "unitarity_residual",
    "basis",
]

NORM_TOL = 1e-12
UNITARY_TOL = 1e-12
RESIDUE_TOL = 1e-10
DEGENERATE_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def basis(i: int) -> np.ndarray:
    e = np.zeros(3, dtype=np.complex128)
    e[i] = 1.0
    return e


def unitarity_residual(m: np.ndarray) -> float:
    """Max-abs entry of ``U^dagger U - I``."""
    m = np.asarray(m)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))


@dataclass(frozen=True)
class QutritState:
    """Mode amplitudes of one photon; unit norm.

    Use :meth:`normalized` to build from an arbitrary non-zero vector.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        a = _frozen(self.amplitudes)
        if a.shape != (3,):
            raise ValueError(f"qutrit state needs 3 amplitudes, got shape {a.shape}")
        if abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
            raise ValueError("state is not normalised")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def normalized(cls, amplitudes: Sequence[complex]) -> "QutritState":
        a = np.asarray(amplitudes, dtype=np.complex128)
        n = np.linalg.norm(a)
        if n == 0:
            raise ValueError("cannot normalise the zero vector")
        return cls(a / n)

    @classmethod
    def basis(cls, i: int) -> "QutritState":
        return cls(basis(i))

    def __getitem__(self, i):
        return self.amplitudes[i]

    def __eq__(self, other):
        if not isinstance(other, QutritState):
            return NotImplemented
        return bool(np.array_equal(self.amplitudes, other.amplitudes))

    def __hash__(self):
        return hash(self.amplitudes.tobytes())


@dataclass(frozen=True)
class ModeObservable:
    """Projector direction ``v`` of a two-outcome observable ``1 - 2|v><v|``."""

    vector: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = _frozen(self.vector)
        if v.shape != (3,):
            raise ValueError(f"observable vector needs 3 entries, got shape {v.shape}")
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise ValueError(f"observable {self.label!r} is not unit length")
        object.__setattr__(self, "vector", v)

    def __eq__(self, other):
        if not isinstance(other, ModeObservable):
            return NotImplemented
        return self.label == other.label and bool(np.array_equal(self.vector, other.vector))

    def __hash__(self):
        return hash((self.label, self.vector.tobytes()))


@dataclass(frozen=True)
class StageTransform:
    """A 3x3 unitary mixing ``acted_modes`` and leaving ``fixed_mode`` alone.

    Construction checks unitarity (1e-12) and that the fixed row and column
    are exactly those of the identity.
    """

    matrix: np.ndarray
    acted_modes: tuple[int, int]
    fixed_mode: int = field(init=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        a, b = sorted(int(x) for x in self.acted_modes)
        if a == b or not {a, b} <= {0, 1, 2}:
            raise ValueError(f"acted_modes must be two distinct modes, got {self.acted_modes}")
        f = 3 - a - b
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "acted_modes", (a, b))
        object.__setattr__(self, "fixed_mode", f)
        if m.shape != (3, 3):
            raise ValueError("stage transform must be 3x3")
        e = basis(f)
        if not (np.array_equal(m[f, :], e) and np.array_equal(m[:, f], e)):
            raise ValueError(f"stage transform touches its fixed mode {f}")
        res = unitarity_residual(m)
        if res > UNITARY_TOL:
            raise ValueError(f"stage transform not unitary (residual {res:.3g})")

    @property
    def block(self) -> np.ndarray:
        a, b = self.acted_modes
        return self.matrix[np.ix_((a, b), (a, b))]

    @classmethod
    def from_block(cls, block: np.ndarray, acted_modes: tuple[int, int]) -> "StageTransform":
        a, b = sorted(acted_modes)
        m = np.eye(3, dtype=np.complex128)
        m[np.ix_((a, b), (a, b))] = block
        return cls(m, (a, b))

    @classmethod
    def identity(cls, acted_modes: tuple[int, int] = (0, 1)) -> "StageTransform":
        return cls(np.eye(3, dtype=np.complex128), acted_modes)

    def dagger(self) -> "StageTransform":
        return StageTransform.from_block(self.block.conj().T, self.acted_modes)

    def __eq__(self, other):
        if not isinstance(other, StageTransform):
            return NotImplemented
        return self.acted_modes == other.acted_modes and bool(
            np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.acted_modes, self.matrix.tobytes()))


def inner(u, v) -> complex:
    """``<u|v>``, conjugating the first argument."""
    return complex(np.vdot(np.asarray(u), np.asarray(v)))


def _vec(x) -> np.ndarray:
    if isinstance(x, ModeObservable):
        return x.vector
    if isinstance(x, QutritState):
        return x.amplitudes
    return np.asarray(x, dtype=np.complex128)


def projector_probability(v, psi) -> float:
    """Click probability ``|<v|psi>|^2`` of a detector realising ``v``."""
    amp = np.vdot(_vec(v), _vec(psi))
    return float(amp.real * amp.real + amp.imag * amp.imag)


def observable_expectation(v, psi) -> float:
    """``<A> = 1 - 2|<v|psi>|^2`` (click -> -1, no click -> +1)."""
    return 1.0 - 2.0 * projector_probability(v, psi)


def two_mode_unitary(target, acted_modes: tuple[int, int], destination_mode: int) -> StageTransform:
    """Givens-type unitary on ``acted_modes`` sending ``target`` to ``e_destination``.

    With ``(w_a, w_b)`` the normalised target components on the acted pair
    (``a < b``) the block is ``[[w_a*, w_b*], [-w_b, w_a]]`` (det 1, maps to
    ``e_a``); for destination ``b`` the two rows are swapped.  A fixed-mode
    component up to 1e-10 is discarded, anything larger raises
    :class:`ClosureFailure`.
    """
    t = _vec(target)
    a, b = sorted(int(x) for x in acted_modes)
    if a == b or not {a, b} <= {0, 1, 2}:
        raise ValueError(f"acted_modes must be two distinct modes, got {acted_modes}")
    if destination_mode not in (a, b):
        raise ValueError("destination mode must be one of the acted modes")
    f = 3 - a - b
    if abs(t[f]) > RESIDUE_TOL:
        raise ClosureFailure(
            f"target has weight {abs(t[f]):.3g} on fixed mode {f} (limit {RESIDUE_TOL:g})"
        )
    wa, wb = complex(t[a]), complex(t[b])
    n = np.hypot(abs(wa), abs(wb))
    if n < DEGENERATE_TOL:
        raise DegenerateTarget(f"target norm {n:.3g} on modes {(a, b)}")
    wa, wb = wa / n, wb / n
    block = np.array([[wa.conjugate(), wb.conjugate()], [-wb, wa]], dtype=np.complex128)
    if destination_mode == b:
        block = block[::-1].copy()
    return StageTransform.from_block(block, (a, b))


def rotation_on_pair(angle: float, acted_modes: tuple[int, int]) -> StageTransform:
    """Real rotation by ``angle`` on the acted pair."""
    c, s = np.cos(angle), np.sin(angle)
    return StageTransform.from_block(np.array([[c, -s], [s, c]], dtype=np.complex128), acted_modes)


def apply(t: StageTransform, psi: QutritState) -> QutritState:
    a, b = t.acted_modes
    amps = psi.amplitudes.copy()
    amps[[a, b]] = t.block @ psi.amplitudes[[a, b]]
    return QutritState(amps)


def compose(t_outer: StageTransform, w: np.ndarray) -> np.ndarray:
    """``T @ W`` with the fixed row of ``W`` copied, never recomputed."""
    a, b = t_outer.acted_modes
    w = np.asarray(w, dtype=np.complex128)
    out = w.copy()
    out[[a, b], :] = t_outer.block @ w[[a, b], :]
    return out
