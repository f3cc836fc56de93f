"""Compiled inner loops of the growth simulator.

The weight index is a Fenwick tree over integer vertex degrees.  The weight
of a prefix of ``i`` vertices is ``degsum(i) + alpha * i``, so block weights
during the descent are exact integers plus ``alpha * blocksize``; no float
error accumulates in the tree however long the run.
"""
import numba as nb
import numpy as np


@nb.njit(cache=True)
def fenwick_add(tree, i, delta):
    # i is 0-based
    n = tree.shape[0] - 1
    j = i + 1
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@nb.njit(cache=True)
def fenwick_build(tree, deg, count):
    tree[:] = 0
    for i in range(count):
        fenwick_add(tree, i, deg[i])


@nb.njit(cache=True)
def fenwick_prefix(tree, i):
    """Sum of the first ``i`` degrees."""
    s = 0
    j = i
    while j > 0:
        s += tree[j]
        j -= j & (-j)
    return s


@nb.njit(cache=True)
def fenwick_find(tree, count, alpha, target):
    """Smallest 0-based index whose inclusive prefix weight exceeds ``target``."""
    n = tree.shape[0] - 1
    step = 1
    while step * 2 <= n:
        step *= 2
    pos = 0
    rem = target
    while step > 0:
        nxt = pos + step
        if nxt <= count:
            w = tree[nxt] + alpha * step
            if w <= rem:
                pos = nxt
                rem -= w
        step //= 2
    if pos >= count:
        pos = count - 1
    return pos


@nb.njit(cache=True)
def pick_rank(cum_xi, last_rank, u):
    r = cum_xi.shape[0] - 1
    for k in range(r):
        if cum_xi[k + 1] > u:
            return k
    return last_rank


@nb.njit(cache=True)
def grow(loc, deg, tree, parent, state, alpha, cum_xi, last_rank, uniforms):
    """Apply one growth step per row of ``uniforms``.

    Row layout: ``[location, r sampling draws, rank draw]``.  ``state`` holds
    ``[count, max_id, max_degree]`` and is updated in place.
    """
    r = cum_xi.shape[0] - 1
    ids = np.empty(r, dtype=np.int64)
    order = np.empty(r, dtype=np.int64)
    count = state[0]
    max_id = state[1]
    max_deg = state[2]
    for t in range(uniforms.shape[0]):
        total = 2.0 * (count - 1) + alpha * count
        for s in range(r):
            ids[s] = fenwick_find(tree, count, alpha, uniforms[t, 1 + s] * total)
        # stable insertion sort by location; equal locations keep draw order
        for s in range(r):
            order[s] = s
        for s in range(1, r):
            cur = order[s]
            key = loc[ids[cur]]
            q = s - 1
            while q >= 0 and loc[ids[order[q]]] > key:
                order[q + 1] = order[q]
                q -= 1
            order[q + 1] = cur
        k = pick_rank(cum_xi, last_rank, uniforms[t, r + 1])
        target = ids[order[k]]
        new = count
        loc[new] = uniforms[t, 0]
        deg[new] = 1
        parent[new] = target
        deg[target] += 1
        fenwick_add(tree, new, 1)
        fenwick_add(tree, target, 1)
        count += 1
        if deg[target] > max_deg:
            max_deg = deg[target]
            max_id = target
    state[0] = count
    state[1] = max_id
    state[2] = max_deg
