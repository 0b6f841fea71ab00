"""Noncontextual hidden-variable bounds by exhaustive enumeration.

Every deterministic model assigns a fixed +-1 to each observable, so the
classical minimum of a correlation sum is a minimum over finitely many
integer assignments.  Everything here is exact integer arithmetic.
"""

from __future__ import annotations

import itertools
import numbers
from dataclasses import dataclass
from typing import Sequence

from . import _kernels
from .errors import InvalidN

__all__ = [
    "Assignment",
    "LHVCertificate",
    "eq1_value",
    "eq2_value",
    "eq1_min",
    "eq2_min",
    "eq1_certificate",
    "eq2_certificate",
    "cycle_min",
    "cycle_sum",
]


@dataclass(frozen=True)
class Assignment:
    """Deterministic outcomes ``a1..a5`` (and ``a1'`` as a sixth entry)."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v not in (-1, 1) for v in vals):
            raise ValueError(f"assignment entries must be +-1, got {self.values}")
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class LHVCertificate:
    minimum: int
    maximum: int
    n_assignments: int
    minimizers: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "minimum": self.minimum,
            "maximum": self.maximum,
            "assignments": self.n_assignments,
            "minimizers": [list(m) for m in self.minimizers],
        }


def _values(a) -> tuple[int, ...]:
    return a.values if isinstance(a, Assignment) else tuple(Assignment(tuple(a)).values)


def cycle_sum(a: Sequence[int]) -> int:
    a = _values(a)
    n = len(a)
    return sum(a[i] * a[(i + 1) % n] for i in range(n))


def eq1_value(a) -> int:
    """``a1a2 + a2a3 + a3a4 + a4a5 + a5a1``."""
    a = _values(a)
    if len(a) != 5:
        raise ValueError("five-term assignment has five entries")
    return cycle_sum(a)


def eq2_value(a) -> int:
    """``a1a2 + a2a3 + a3a4 + a4a5 + a5a1' - a1'a1``, entries ordered a1..a5, a1'."""
    a = _values(a)
    if len(a) != 6:
        raise ValueError("six-observable assignment has six entries (a1..a5, a1')")
    a1, a2, a3, a4, a5, a1p = a
    return a1 * a2 + a2 * a3 + a3 * a4 + a4 * a5 + a5 * a1p - a1p * a1


def _certify(fn, length: int) -> LHVCertificate:
    table = [(vals, fn(vals)) for vals in itertools.product((1, -1), repeat=length)]
    lo = min(v for _, v in table)
    hi = max(v for _, v in table)
    mins = tuple(vals for vals, v in table if v == lo)
    return LHVCertificate(lo, hi, len(table), mins)


def eq1_certificate() -> LHVCertificate:
    return _certify(eq1_value, 5)


def eq2_certificate() -> LHVCertificate:
    return _certify(eq2_value, 6)


def eq1_min() -> int:
    return eq1_certificate().minimum


def eq2_min() -> int:
    return eq2_certificate().minimum


def cycle_min(n: int) -> int:
    """Classical minimum of the n-cycle correlation sum, by full enumeration.

    Only odd ``3 <= n <= 25``; the answer is ``-(n - 2)``.
    """
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n % 2 == 0 or not 3 <= n <= 25:
        raise InvalidN(f"n must be odd with 3 <= n <= 25, got {n!r}")
    lo, _, _ = _kernels.cycle_extremes(int(n))
    return int(lo)
