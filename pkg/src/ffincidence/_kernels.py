"""Compiled counting kernels."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _energy_sharded(x1, x2, x3, p):
    # Pair sums grouped by their first coordinate s.  Within a shard only
    # pairs with x1[i] + x1[j] = s occur, so the working set is about n^2/p;
    # (s2, s3) collisions are resolved with a stamp array over s2 plus a
    # small sort for crowded s2 buckets.  Unordered pairs carry weight 2,
    # diagonal pairs weight 1, and a sum with ordered multiplicity m adds m^2.
    n = x1.shape[0]
    order = np.argsort(x1)
    cnt = np.zeros(p, np.int64)
    for i in range(n):
        cnt[x1[i]] += 1
    start = np.zeros(p + 1, np.int64)
    for v in range(p):
        start[v + 1] = start[v] + cnt[v]
    ys = np.empty(n, np.int64)
    zs = np.empty(n, np.int64)
    for r in range(n):
        ys[r] = x2[order[r]]
        zs[r] = x3[order[r]]
    nvals = 0
    maxc = 0
    for v in range(p):
        if cnt[v] > 0:
            nvals += 1
            maxc = max(maxc, cnt[v])
    vals = np.empty(nvals, np.int64)
    t = 0
    for v in range(p):
        if cnt[v] > 0:
            vals[t] = v
            t += 1

    cap = n * maxc
    k2 = np.empty(cap, np.int32)
    k3 = np.empty(cap, np.int32)
    wt = np.empty(cap, np.int8)
    crowd = np.empty(cap, np.int64)
    bucket = np.zeros(p, np.int32)

    total = 0
    for s in range(p):
        m = 0
        for t in range(nvals):
            v = vals[t]
            w = s - v
            if w < 0:
                w += p
            if w < v or cnt[w] == 0:
                continue
            for a in range(start[v], start[v + 1]):
                ya = ys[a]
                za = zs[a]
                b0 = start[w]
                if w == v:
                    b0 = a
                for b in range(b0, start[w + 1]):
                    u = ya + ys[b]
                    if u >= p:
                        u -= p
                    z = za + zs[b]
                    if z >= p:
                        z -= p
                    k2[m] = u
                    k3[m] = z
                    wt[m] = 1 if a == b else 2
                    m += 1
        if m == 0:
            continue
        for r in range(m):
            bucket[k2[r]] += 1
        c = 0
        for r in range(m):
            if bucket[k2[r]] == 1:
                total += wt[r] * wt[r]
            else:
                crowd[c] = (np.int64(k2[r]) * p + k3[r]) * 2 + (wt[r] - 1)
                c += 1
        for r in range(m):
            bucket[k2[r]] = 0
        if c > 0:
            keys = np.sort(crowd[:c])
            run = (keys[0] & 1) + 1
            for r in range(1, c):
                if (keys[r] >> 1) == (keys[r - 1] >> 1):
                    run += (keys[r] & 1) + 1
                else:
                    total += run * run
                    run = (keys[r] & 1) + 1
            total += run * run
    return total


def energy_sharded(points: np.ndarray, p: int) -> int:
    pts = np.ascontiguousarray(np.asarray(points, dtype=np.int64) % p)
    if pts.shape[0] == 0:
        return 0
    return int(_energy_sharded(pts[:, 0].copy(), pts[:, 1].copy(), pts[:, 2].copy(), int(p)))
