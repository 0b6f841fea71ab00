"""Hot inner loops, each in two flavours: a numba ``@njit`` kernel and a
pure-numpy fallback.

The backend is picked once at import time.  Set ``KCBS_DISABLE_NUMBA=1``
(or run without numba installed) to force the numpy path.  Both flavours
of a kernel consume the same inputs; the integer kernels return identical
results, the floating-point ones agree to rounding.

Kernels
-------
classify_shots
    Turn pre-drawn uniforms into detector click patterns.
cycle_extremes
    Min/max and minimiser count of the n-cycle +-1 correlation sum.
compass_search
    Best-improvement compass search of the KCBS objective over the
    four-angle qutrit parameterisation.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("KCBS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"

UNIFORMS_PER_SHOT = 4


def _njit(fn):
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# photon shots
#
# uniforms[:, 0] photon location, [:, 1] detection given arrival,
# [:, 2] / [:, 3] dark click on detector 0 / 1.
# Result counts[c0 * 2 + c1] for click flags c0, c1 of detectors on mode 0, 1.


def _classify_shots_loop(uniforms, p0, p1, efficiency, dark_rate):
    counts = np.zeros(4, dtype=np.int64)
    edge = p0 + p1
    for i in range(uniforms.shape[0]):
        u = uniforms[i, 0]
        detected = uniforms[i, 1] < efficiency
        c0 = 0
        c1 = 0
        if u < p0:
            if detected:
                c0 = 1
        elif u < edge:
            if detected:
                c1 = 1
        if uniforms[i, 2] < dark_rate:
            c0 = 1
        if uniforms[i, 3] < dark_rate:
            c1 = 1
        counts[c0 * 2 + c1] += 1
    return counts


def classify_shots_numpy(uniforms, p0, p1, efficiency, dark_rate):
    u = uniforms[:, 0]
    detected = uniforms[:, 1] < efficiency
    c0 = ((u < p0) & detected) | (uniforms[:, 2] < dark_rate)
    c1 = ((u >= p0) & (u < p0 + p1) & detected) | (uniforms[:, 3] < dark_rate)
    code = c0.astype(np.int64) * 2 + c1.astype(np.int64)
    return np.bincount(code, minlength=4).astype(np.int64)


classify_shots_numba = _njit(_classify_shots_loop)


# --------------------------------------------------------------------------
# n-cycle enumeration: s_i = 1 - 2 * bit_i, sum_i s_i s_{i+1} = n - 2 * popcount(m ^ rot(m))


def _cycle_extremes_loop(n):
    full = (1 << n) - 1
    lo = n
    hi = -n
    count = 0
    for m in range(1 << n):
        rot = ((m >> 1) | ((m & 1) << (n - 1))) & full
        x = m ^ rot
        pc = 0
        while x:
            x &= x - 1
            pc += 1
        val = n - 2 * pc
        if val < lo:
            lo = val
            count = 1
        elif val == lo:
            count += 1
        if val > hi:
            hi = val
    return lo, hi, count


def _popcount64(x):
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    return (x * 0x0101010101010101) >> 56


def cycle_extremes_numpy(n, chunk=1 << 20):
    full = np.uint64((1 << n) - 1)
    lo, hi, count = n, -n, 0
    for start in range(0, 1 << n, chunk):
        m = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint64)
        rot = ((m >> np.uint64(1)) | ((m & np.uint64(1)) << np.uint64(n - 1))) & full
        vals = n - 2 * _popcount64(m ^ rot).astype(np.int64)
        cmin = int(vals.min())
        if cmin < lo:
            lo, count = cmin, 0
        if cmin == lo:
            count += int(np.count_nonzero(vals == lo))
        hi = max(hi, int(vals.max()))
    return lo, hi, count


cycle_extremes_numba = _njit(_cycle_extremes_loop)


# --------------------------------------------------------------------------
# KCBS objective  5 - 4 * sum_i |<v_i|psi>|^2  with
# psi = (sin a cos b e^{i f1}, sin a sin b e^{i f2}, cos a)


def _objective_py(x, vr, vi):
    sa = np.sin(x[0])
    r0 = sa * np.cos(x[1])
    r1 = sa * np.sin(x[1])
    re0 = r0 * np.cos(x[2])
    im0 = r0 * np.sin(x[2])
    re1 = r1 * np.cos(x[3])
    im1 = r1 * np.sin(x[3])
    re2 = np.cos(x[0])
    total = 0.0
    for k in range(vr.shape[0]):
        # <v|psi> = sum conj(v_j) psi_j
        re = vr[k, 0] * re0 + vi[k, 0] * im0 + vr[k, 1] * re1 + vi[k, 1] * im1 + vr[k, 2] * re2
        im = vr[k, 0] * im0 - vi[k, 0] * re0 + vr[k, 1] * im1 - vi[k, 1] * re1 - vi[k, 2] * re2
        total += re * re + im * im
    return 5.0 - 4.0 * total


_objective_scalar = _njit(_objective_py) or _objective_py


def _compass_loop(x0, vr, vi, step, shrink, tol, max_iters):
    dim = x0.shape[0]
    x = x0.copy()
    fx = _objective_scalar(x, vr, vi)
    evals = 1
    it = 0
    while step >= tol and it < max_iters:
        it += 1
        best_f = fx
        best_j = -1
        best_sign = 0.0
        for j in range(dim):
            for sign in (1.0, -1.0):
                y = x.copy()
                y[j] += sign * step
                fy = _objective_scalar(y, vr, vi)
                evals += 1
                if fy < best_f:
                    best_f = fy
                    best_j = j
                    best_sign = sign
        if best_j >= 0:
            x[best_j] += best_sign * step
            fx = best_f
        else:
            step *= shrink
    return x, fx, step < tol, evals


def objective_numpy(points, vr, vi):
    """Vectorised objective over a (m, 4) array of parameter points."""
    points = np.atleast_2d(points)
    a, b, f1, f2 = points.T
    sa = np.sin(a)
    psi = np.stack(
        [sa * np.cos(b) * np.exp(1j * f1), sa * np.sin(b) * np.exp(1j * f2), np.cos(a) + 0j], axis=1
    )
    amps = psi @ (vr - 1j * vi).T
    return 5.0 - 4.0 * np.sum(amps.real**2 + amps.imag**2, axis=1)


def compass_search_numpy(x0, vr, vi, step, shrink, tol, max_iters):
    dim = x0.shape[0]
    x = x0.copy()
    fx = float(objective_numpy(x, vr, vi)[0])
    evals = 1
    it = 0
    # poll order matches the loop kernel: +e0, -e0, +e1, -e1, ...
    dirs = np.repeat(np.eye(dim), 2, axis=0) * np.tile([1.0, -1.0], dim)[:, None]
    while step >= tol and it < max_iters:
        it += 1
        vals = objective_numpy(x + step * dirs, vr, vi)
        evals += len(dirs)
        j = int(np.argmin(vals))
        if vals[j] < fx:
            x = x + step * dirs[j]
            fx = float(vals[j])
        else:
            step *= shrink
    return x, fx, step < tol, evals


compass_search_numba = _njit(_compass_loop)


if USE_NUMBA:
    classify_shots = classify_shots_numba
    cycle_extremes = cycle_extremes_numba
    compass_search = compass_search_numba
else:
    classify_shots = classify_shots_numpy
    cycle_extremes = cycle_extremes_numpy
    compass_search = compass_search_numpy
