"""Compiled inner loops for the per-instance hot path.

Layout shared by every kernel: a region set stores its live regions in slots
``0..size-1`` of parallel arrays, plus a dense symmetric matrix ``D`` of
pairwise core distances. Slot order is arbitrary (removal swaps the last
slot into the hole); anything order-sensitive keys on arrival index ``t``.
"""

import math

import numpy as np
from numba import njit

INF = math.inf

# largest rank offset handled by the bounded-buffer scan before falling back
# to a full selection
_SMALL_OFFSET = 24

@njit(cache=True)
def ceil_rank(phi, m):
    """ceil(phi * m), robust to products like 0.1 * 30 = 3.0000000000000004."""
    k = int(math.ceil(phi * m - 1e-9))
    if k < 1:
        k = 1
    return k


@njit(cache=True)
def row_distances(X, size, x, out):
    n = x.shape[0]
    for i in range(size):
        s = 0.0
        for j in range(n):
            d = x[j] - X[i, j]
            s += d * d
        out[i] = math.sqrt(s)


@njit(cache=True)
def _full_select(row, size, skip, k, tmp):
    cnt = 0
    for j in range(size):
        if j != skip:
            tmp[cnt] = row[j]
            cnt += 1
    return np.partition(tmp[:cnt], k - 1)[k - 1]


@njit(cache=True)
def kth_smallest(row, size, skip, k, pivot, tmp, buf):
    """k-th smallest (1-based) of ``row[j]`` over ``j < size, j != skip``.

    ``pivot`` is a guess (the previous radius). When the answer is near it,
    one counting pass plus a bounded buffer replaces the full selection.
    """
    if pivot < INF:
        lt = 0
        le = 0
        for j in range(size):
            v = row[j]
            if v < pivot:
                lt += 1
            if v <= pivot:
                le += 1
        if skip >= 0 and skip < size:
            v = row[skip]
            if v < pivot:
                lt -= 1
            if v <= pivot:
                le -= 1
        if lt < k <= le:
            return pivot
        if k > le:
            # m-th smallest among values strictly above the pivot
            m = k - le
            if m <= _SMALL_OFFSET:
                filled = 0
                for j in range(size):
                    if j == skip:
                        continue
                    v = row[j]
                    if v <= pivot:
                        continue
                    if filled < m:
                        p = filled
                        filled += 1
                    elif v < buf[m - 1]:
                        p = m - 1
                    else:
                        continue
                    while p > 0 and buf[p - 1] > v:
                        buf[p] = buf[p - 1]
                        p -= 1
                    buf[p] = v
                return buf[m - 1]
        else:
            # m-th largest among values strictly below the pivot
            m = lt - k + 1
            if m <= _SMALL_OFFSET:
                filled = 0
                for j in range(size):
                    if j == skip:
                        continue
                    v = row[j]
                    if v >= pivot:
                        continue
                    if filled < m:
                        p = filled
                        filled += 1
                    elif v > buf[m - 1]:
                        p = m - 1
                    else:
                        continue
                    while p > 0 and buf[p - 1] < v:
                        buf[p] = buf[p - 1]
                        p -= 1
                    buf[p] = v
                return buf[m - 1]
    return _full_select(row, size, skip, k, tmp)


@njit(cache=True)
def knn_proba(dist, y, t, size, k, c, out, nbr):
    """Inverse-distance weighted k-NN class probabilities.

    Neighbours are ranked by (distance, arrival index). An exact match
    short-circuits to a one-hot vector; no candidates gives the uniform
    vector. ``nbr`` receives the chosen slots in rank order.
    """
    kk = k if k < size else size
    if kk == 0:
        for j in range(c):
            out[j] = 1.0 / c
        return 0
    filled = 0
    for i in range(size):
        d = dist[i]
        ti = t[i]
        if filled == kk:
            last = nbr[kk - 1]
            dl = dist[last]
            if d > dl or (d == dl and ti > t[last]):
                continue
            p = kk - 1
        else:
            p = filled
            filled += 1
        while p > 0:
            q = nbr[p - 1]
            dq = dist[q]
            if dq > d or (dq == d and t[q] > ti):
                nbr[p] = q
                p -= 1
            else:
                break
        nbr[p] = i
    for j in range(c):
        out[j] = 0.0
    first = nbr[0]
    if dist[first] == 0.0:
        out[y[first]] = 1.0
        return kk
    total = 0.0
    for r in range(kk):
        i = nbr[r]
        w = 1.0 / dist[i]
        out[y[i]] += w
        total += w
    for j in range(c):
        out[j] = out[j] / total
    return kk


@njit(cache=True)
def _move_slot(src, dst, live, X, y, t, radius, misses, weight, D, dist):
    """Move region ``src`` into slot ``dst``; ``live`` slots remain after."""
    if src == dst:
        return
    X[dst, :] = X[src, :]
    y[dst] = y[src]
    t[dst] = t[src]
    radius[dst] = radius[src]
    misses[dst] = misses[src]
    weight[dst] = weight[src]
    dist[dst] = dist[src]
    for j in range(live):
        if j == dst:
            continue
        v = D[src, j]
        D[dst, j] = v
        D[j, dst] = v
    D[dst, dst] = 0.0


@njit(cache=True)
def update_kernel(
    X, y, t, radius, misses, weight, D, size, dist,
    x, label, tnew, phi, alpha, pw, min_size, max_buffer,
    removed, tmp, buf,
):
    """One region-set step; ``dist`` must hold distances from ``x`` to cores.

    Returns ``(new_size, n_removed)``; removed arrival indices are written
    to ``removed``.
    """
    # 1. hit -> reset and re-estimate radius; miss -> decay
    pool = size
    finite = pool >= min_size
    k_hit = ceil_rank(phi, pool)
    for i in range(size):
        if dist[i] <= radius[i]:
            misses[i] = 0
            weight[i] = 1.0
            if finite:
                radius[i] = kth_smallest(D[i], size, i, k_hit, radius[i], tmp, buf)
            else:
                radius[i] = INF
        else:
            misses[i] += 1
            weight[i] = pw[misses[i]]

    # 2. drop drifted regions
    nrem = 0
    i = 0
    while i < size:
        if weight[i] < alpha:
            removed[nrem] = t[i]
            nrem += 1
            size -= 1
            _move_slot(size, i, size, X, y, t, radius, misses, weight, D, dist)
        else:
            i += 1

    # 3. region for the new instance
    if size >= min_size:
        r = kth_smallest(dist, size, -1, ceil_rank(phi, size), INF, tmp, buf)
    else:
        r = INF
    slot = size
    X[slot, :] = x
    y[slot] = label
    t[slot] = tnew
    radius[slot] = r
    misses[slot] = 0
    weight[slot] = 1.0
    for j in range(size):
        v = dist[j]
        D[slot, j] = v
        D[j, slot] = v
    D[slot, slot] = 0.0
    dist[slot] = 0.0
    size += 1

    # 4. capacity: evict the minimum weight, oldest first on ties
    if size > max_buffer:
        victim = 0
        for j in range(1, size):
            if weight[j] < weight[victim] or (
                weight[j] == weight[victim] and t[j] < t[victim]
            ):
                victim = j
        removed[nrem] = t[victim]
        nrem += 1
        size -= 1
        _move_slot(size, victim, size, X, y, t, radius, misses, weight, D, dist)
    return size, nrem


@njit(cache=True)
def fill_distance_matrix(X, size, D, scratch):
    for j in range(size):
        row_distances(X, size, X[j], scratch)
        for i in range(size):
            D[j, i] = scratch[i]
        D[j, j] = 0.0


@njit(cache=True)
def init_radii(D, size, k, radius, tmp, buf):
    for i in range(size):
        radius[i] = kth_smallest(D[i], size, i, k, INF, tmp, buf)


@njit(cache=True)
def _exact_mean(R, idx, r):
    total = 0.0
    for j in range(r - 1):
        for k in range(j + 1, r):
            total += R[idx[j], idx[k]]
    return 2.0 * total / (r * (r - 1))


@njit(cache=True)
def best_combination(R, r, eps):
    """Lexicographically first r-subset maximising the mean pairwise value.

    Depth-first over combinations in lexicographic order. ``cross[d, j]``
    holds the sum of ``R[idx[e], j]`` over the first ``d`` chosen members, so
    a leaf costs one addition. Leaves within ``eps`` of the incumbent are
    re-scored with the plain j<k double loop, which makes ties and near-ties
    resolve exactly as a naive enumeration would. Requires r >= 2.
    Returns ``(indices, mean)``.
    """
    m = R.shape[0]
    idx = np.zeros(r, dtype=np.int64)
    best = np.arange(r)
    cross = np.zeros((r, m))
    prefix = np.zeros(r + 1)
    best_fast = -1.0
    best_exact = -1.0
    d = 0
    idx[0] = -1
    while d >= 0:
        v = idx[d] + 1
        # last start position that still leaves room for the remaining picks
        if v > m - r + d:
            d -= 1
            continue
        idx[d] = v
        if d == r - 1:
            base = prefix[d]
            for w in range(v, m):
                s = base + cross[d, w]
                if s >= best_fast - eps:
                    idx[d] = w
                    mean = _exact_mean(R, idx, r)
                    if mean > best_exact:
                        best_exact = mean
                        best_fast = s
                        best[:] = idx
            idx[d] = m
            continue
        prefix[d + 1] = prefix[d] + cross[d, v]
        for j in range(v + 1, m):
            cross[d + 1, j] = cross[d, j] + R[v, j]
        d += 1
        idx[d] = v
    return best, best_exact


@njit(cache=True)
def _bump(mask_t, s, inter, delta):
    m = mask_t & ~(1 << s)
    r = 0
    while m:
        if m & 1:
            inter[s, r] += delta
            inter[r, s] += delta
        m >>= 1
        r += 1
    inter[s, s] += delta


@njit(cache=True)
def observe_kernel(mask, inter, s, added, removed, nrem):
    """Membership bookkeeping for member ``s`` gaining ``added`` and losing ``removed``.

    ``mask[t]`` has bit r set when member r stores the core with arrival
    index t; ``inter`` holds pairwise intersection counts.
    """
    _bump(mask[added], s, inter, 1)
    mask[added] |= 1 << s
    for i in range(nrem):
        t = removed[i]
        _bump(mask[t], s, inter, -1)
        mask[t] &= ~(1 << s)
