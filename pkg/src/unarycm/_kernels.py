"""Hot loops of the coincidence pipeline, compiled with numba when available.

Each kernel exists as a numba ``@njit`` function and as a pure-numpy
fallback.  Setting ``UNARYCM_NO_NUMBA=1`` in the environment (before import)
selects the fallback; so does a missing numba install.  Both paths return
identical results; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised via the env flag in tests
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("UNARYCM_NO_NUMBA", "") not in ("1", "true", "yes")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


# -- numpy fallbacks ------------------------------------------------------------
def splitmix64_np(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer on ``uint64`` input (wrapping arithmetic)."""
    z = np.asarray(x, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def dead_time_mask_np(t: np.ndarray, det: np.ndarray, dead: int) -> np.ndarray:
    """Non-paralyzable dead time per detector on a time-sorted stream.

    An event is kept iff it comes at least ``dead`` after the last kept event
    on the same detector and its timestamp differs from the previous kept
    event of the stream.  Only events closer than ``dead`` to their raw
    predecessor need a sequential pass.
    """
    n = len(t)
    keep = np.ones(n, dtype=bool)
    if n == 0:
        return keep
    t = np.asarray(t, dtype=np.int64)
    # same-timestamp duplicates: first one wins
    keep[1:] = t[1:] != t[:-1]
    for d in np.unique(det):
        idx = np.flatnonzero((det == d) & keep)
        if len(idx) < 2:
            continue
        td = t[idx]
        close = np.flatnonzero(np.diff(td) < dead) + 1
        if len(close) == 0:
            continue
        ok = np.ones(len(idx), dtype=bool)
        # events with a raw gap >= dead are kept regardless of earlier drops
        last = None
        prev_close = -2
        for p in close:
            if p != prev_close + 1 or last is None:
                last = td[p - 1]
            if td[p] - last >= dead:
                last = td[p]
            else:
                ok[p] = False
            prev_close = p
        keep[idx[~ok]] = False
    return keep


def candidate_pairs_np(ta: np.ndarray, tb: np.ndarray, window: float):
    """All ``(i, j)`` with ``|ta[i] - tb[j]| <= window`` for sorted inputs."""
    ta = np.asarray(ta, dtype=np.int64)
    tb = np.asarray(tb, dtype=np.int64)
    w = int(np.floor(window))
    lo = np.searchsorted(tb, ta - w, side="left")
    hi = np.searchsorted(tb, ta + w, side="right")
    cnt = hi - lo
    ci = np.repeat(np.arange(len(ta)), cnt)
    offs = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    cj = np.repeat(lo, cnt) + offs
    return ci.astype(np.int64), cj.astype(np.int64)


def greedy_accept_np(ci: np.ndarray, cj: np.ndarray, na: int, nb: int) -> np.ndarray:
    """Accept candidates in the given order unless an endpoint is already used.

    Candidates whose endpoints appear in no other candidate are accepted in
    bulk; the remaining conflicted ones are resolved sequentially.
    """
    m = len(ci)
    acc = np.zeros(m, dtype=bool)
    if m == 0:
        return acc
    ca = np.bincount(ci, minlength=na)
    cb = np.bincount(cj, minlength=nb)
    free = (ca[ci] == 1) & (cb[cj] == 1)
    acc[free] = True
    used_a = np.zeros(na, dtype=bool)
    used_b = np.zeros(nb, dtype=bool)
    for k in np.flatnonzero(~free):
        i, j = ci[k], cj[k]
        if not used_a[i] and not used_b[j]:
            used_a[i] = used_b[j] = True
            acc[k] = True
    return acc


# -- numba kernels ----------------------------------------------------------------
if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _splitmix64_nb(x):
        out = np.empty(x.shape[0], dtype=np.uint64)
        for k in range(x.shape[0]):
            z = x[k] + np.uint64(0x9E3779B97F4A7C15)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            out[k] = z ^ (z >> np.uint64(31))
        return out

    @numba.njit(cache=True, nogil=True)
    def _dead_time_mask_nb(t, det, dead):
        n = t.shape[0]
        keep = np.ones(n, dtype=np.bool_)
        last1 = np.int64(-(2**62))
        last2 = np.int64(-(2**62))
        prev = np.int64(-(2**62))
        for k in range(n):
            tk = t[k]
            if tk == prev:
                keep[k] = False
                continue
            prev = tk
            if det[k] == 1:
                if tk - last1 >= dead:
                    last1 = tk
                else:
                    keep[k] = False
            else:
                if tk - last2 >= dead:
                    last2 = tk
                else:
                    keep[k] = False
        return keep

    @numba.njit(cache=True, nogil=True)
    def _candidate_pairs_nb(ta, tb, w):
        na, nb = ta.shape[0], tb.shape[0]
        # first pass counts, second fills
        total = 0
        lo = 0
        for i in range(na):
            while lo < nb and tb[lo] < ta[i] - w:
                lo += 1
            j = lo
            while j < nb and tb[j] <= ta[i] + w:
                total += 1
                j += 1
        ci = np.empty(total, dtype=np.int64)
        cj = np.empty(total, dtype=np.int64)
        k = 0
        lo = 0
        for i in range(na):
            while lo < nb and tb[lo] < ta[i] - w:
                lo += 1
            j = lo
            while j < nb and tb[j] <= ta[i] + w:
                ci[k] = i
                cj[k] = j
                k += 1
                j += 1
        return ci, cj

    @numba.njit(cache=True, nogil=True)
    def _greedy_accept_nb(ci, cj, na, nb):
        used_a = np.zeros(na, dtype=np.bool_)
        used_b = np.zeros(nb, dtype=np.bool_)
        acc = np.zeros(ci.shape[0], dtype=np.bool_)
        for k in range(ci.shape[0]):
            i, j = ci[k], cj[k]
            if not used_a[i] and not used_b[j]:
                used_a[i] = True
                used_b[j] = True
                acc[k] = True
        return acc


# -- dispatch ---------------------------------------------------------------------
def splitmix64(x, use_numba: bool | None = None) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.uint64)
    if _pick(use_numba):
        return _splitmix64_nb(x)
    return splitmix64_np(x)


def dead_time_mask(t, det, dead: int, use_numba: bool | None = None) -> np.ndarray:
    t = np.ascontiguousarray(t, dtype=np.int64)
    det = np.ascontiguousarray(det, dtype=np.uint8)
    if _pick(use_numba):
        return _dead_time_mask_nb(t, det, np.int64(dead))
    return dead_time_mask_np(t, det, int(dead))


def candidate_pairs(ta, tb, window: float, use_numba: bool | None = None):
    ta = np.ascontiguousarray(ta, dtype=np.int64)
    tb = np.ascontiguousarray(tb, dtype=np.int64)
    if _pick(use_numba):
        return _candidate_pairs_nb(ta, tb, np.int64(np.floor(window)))
    return candidate_pairs_np(ta, tb, window)


def greedy_accept(ci, cj, na: int, nb: int, use_numba: bool | None = None) -> np.ndarray:
    ci = np.ascontiguousarray(ci, dtype=np.int64)
    cj = np.ascontiguousarray(cj, dtype=np.int64)
    if _pick(use_numba):
        return _greedy_accept_nb(ci, cj, int(na), int(nb))
    return greedy_accept_np(ci, cj, int(na), int(nb))


def _pick(use_numba: bool | None) -> bool:
    if use_numba is None:
        return USE_NUMBA
    if use_numba and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    return bool(use_numba)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
