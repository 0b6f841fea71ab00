"""Derivative-free search for the state that maximally violates the KCBS sum.

States are parameterised without global phase as::

    psi(a, b, f1, f2) = (sin a cos b e^{i f1}, sin a sin b e^{i f2}, cos a)

and searched with a multi-start compass search (poll +-step along every
axis, move to the best improving point, shrink the step otherwise).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .geometry import Pentagram, eq1_lhs, orthogonality_residual, symmetric_pentagram
from .qutrit import QutritState

__all__ = ["SearchConfig", "SearchResult", "optimize_state", "theta_scan", "state_from_params", "params_from_state"]


@dataclass(frozen=True)
class SearchConfig:
    starts: int = 20
    initial_step: float = 0.5
    shrink_factor: float = 0.5
    tolerance: float = 1e-9
    max_iters: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("need at least one start")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ValueError("shrink_factor must lie in (0, 1)")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")


class SearchResult(NamedTuple):
    state: QutritState
    value: float
    converged: bool
    evaluations: int
    start_index: int


def state_from_params(x) -> QutritState:
    a, b, f1, f2 = (float(v) for v in x)
    return QutritState.normalized(
        [math.sin(a) * math.cos(b) * np.exp(1j * f1), math.sin(a) * math.sin(b) * np.exp(1j * f2), math.cos(a)]
    )


def params_from_state(psi: QutritState) -> np.ndarray:
    """Inverse of :func:`state_from_params` after removing the phase of mode 2."""
    z = psi.amplitudes
    if abs(z[2]) > 0:
        z = z * np.exp(-1j * np.angle(z[2]))
    a = math.acos(min(1.0, abs(z[2])))
    b = math.atan2(abs(z[1]), abs(z[0]))
    return np.array([a, b, float(np.angle(z[0])), float(np.angle(z[1]))])


def _split(p: Pentagram):
    m = p.matrix()
    return np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)


def optimize_state(
    p: Pentagram,
    cfg: SearchConfig = SearchConfig(),
    initial=None,
    workers: int = 1,
) -> SearchResult:
    """Minimise the five-term correlation sum over pure qutrit states.

    ``initial`` (a state or list of states) replaces the leading random
    starts.  Ties between starts go to the lowest start index.
    """
    rng = np.random.default_rng(cfg.seed)
    lo = np.array([0.0, 0.0, 0.0, 0.0])
    hi = np.array([math.pi, math.pi / 2, 2 * math.pi, 2 * math.pi])
    x0s = list(rng.uniform(lo, hi, size=(cfg.starts, 4)))
    if initial is not None:
        given = [initial] if isinstance(initial, QutritState) else list(initial)
        for i, psi in enumerate(given[: cfg.starts]):
            x0s[i] = params_from_state(psi)
    vr, vi = _split(p)

    def run(x0):
        return _kernels.compass_search(
            np.asarray(x0, dtype=np.float64), vr, vi,
            cfg.initial_step, cfg.shrink_factor, cfg.tolerance, cfg.max_iters,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, x0s))
    else:
        runs = [run(x0) for x0 in x0s]

    best = min(range(len(runs)), key=lambda i: (runs[i][1], i))
    x, _, converged, _ = runs[best]
    psi = state_from_params(x)
    total_evals = int(sum(r[3] for r in runs))
    return SearchResult(psi, eq1_lhs(p, psi), bool(converged), total_evals, best)


def theta_scan(theta_grid) -> np.ndarray:
    """Cyclic orthogonality residual of the symmetric construction.

    Returns an ``(n, 2)`` array of ``(theta, max_i |<v_i|v_{i+1}>|)``.
    """
    grid = np.atleast_1d(np.asarray(theta_grid, dtype=np.float64))
    if grid.size == 0:
        raise ValueError("theta grid is empty")
    out = np.empty((grid.size, 2))
    for k, th in enumerate(grid):
        out[k] = th, orthogonality_residual(symmetric_pentagram(float(th)))
    return out
