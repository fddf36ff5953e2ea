"""Compiled exclusive-contribution recursion for the hypervolume (minimization).

HV(S) = sum_i [ box(s_i) - HV(limit(s_{i+1..n}, s_i)) ], where ``limit`` clips
the later points to the region dominated by ``s_i`` and drops dominated or
duplicate rows.  Points are processed in order of the last objective, which
keeps the limited sets small.  Two objectives fall back to a sweep.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _box(p, ref):
    v = 1.0
    for k in range(p.shape[0]):
        v *= ref[k] - p[k]
    return v


@njit(cache=True)
def _limit(pts, start, p):
    n = pts.shape[0] - start
    m = pts.shape[1]
    lim = np.empty((n, m))
    for i in range(n):
        for k in range(m):
            a = pts[start + i, k]
            lim[i, k] = a if a > p[k] else p[k]
    keep = np.ones(n, dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j or not keep[j]:
                continue
            le = True
            eq = True
            for k in range(m):
                if lim[j, k] > lim[i, k]:
                    le = False
                    break
                if lim[j, k] != lim[i, k]:
                    eq = False
            # j weakly dominates i; among duplicates the earliest survives
            if le and (not eq or j < i):
                keep[i] = False
                break
    cnt = 0
    for i in range(n):
        if keep[i]:
            cnt += 1
    out = np.empty((cnt, m))
    c = 0
    for i in range(n):
        if keep[i]:
            out[c] = lim[i]
            c += 1
    return out


@njit(cache=True)
def _sweep2d(pts, ref):
    order = np.argsort(pts[:, 0], kind="mergesort")
    vol = 0.0
    best = ref[1]
    for idx in order:
        x = pts[idx, 0]
        y = pts[idx, 1]
        if y < best:
            vol += (ref[0] - x) * (best - y)
            best = y
    return vol


@njit(cache=True)
def _direct(pts, ref):
    """Volume for the cases that need no further splitting, else -1."""
    n = pts.shape[0]
    if n == 0:
        return 0.0
    if n == 1:
        return _box(pts[0], ref)
    if pts.shape[1] == 2:
        return _sweep2d(pts, ref)
    return -1.0


@njit(cache=True)
def _sorted_by_last(pts):
    order = np.argsort(pts[:, -1], kind="mergesort")
    s = np.empty_like(pts)
    for i in range(pts.shape[0]):
        s[i] = pts[order[i]]
    return s


@njit(cache=True)
def wfg(pts, ref):
    # explicit stack instead of recursion: numba cannot cache self-recursive functions
    if pts.shape[1] == 1:
        lo = pts[0, 0]
        for i in range(1, pts.shape[0]):
            if pts[i, 0] < lo:
                lo = pts[i, 0]
        return ref[0] - lo
    v = _direct(pts, ref)
    if v >= 0.0:
        return v
    frames = [_sorted_by_last(pts)]
    index = [0]
    totals = [0.0]
    ret = 0.0
    returning = False
    while len(frames) > 0:
        top = len(frames) - 1
        s = frames[top]
        i = index[top]
        tot = totals[top]
        if returning:
            tot -= ret
            i += 1
            returning = False
        n = s.shape[0]
        descended = False
        while i < n:
            tot += _box(s[i], ref)
            if i + 1 < n:
                lim = _limit(s, i + 1, s[i])
                v = _direct(lim, ref)
                if v < 0.0:
                    index[top] = i
                    totals[top] = tot
                    frames.append(_sorted_by_last(lim))
                    index.append(0)
                    totals.append(0.0)
                    descended = True
                    break
                tot -= v
            i += 1
        if descended:
            continue
        ret = tot
        frames.pop()
        index.pop()
        totals.pop()
        returning = True
    return ret
