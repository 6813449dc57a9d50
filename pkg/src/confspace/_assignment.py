"""Exact min-cost perfect assignment with deterministic tie-breaking.

Shortest-augmenting-path Hungarian method with row/column potentials,
O(n^3), vectorised over columns. Forbidden entries are ``+inf``. Among all
optimal assignments the lexicographically smallest row -> column vector is
returned: optimal assignments are exactly the perfect matchings of the
tight-edge graph of any optimal dual, so the lexicographic choice is made
greedily on that graph.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ._errors import NumericError


def _hungarian(cost: np.ndarray):
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j]: row matched to column j (1-based, 0 = none)
    way = np.zeros(n + 1, dtype=np.int64)
    # pad so that row/column 0 is the virtual source
    c = np.full((n + 1, n + 1), np.inf)
    c[1:, 1:] = cost
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            cols = np.flatnonzero(~used)
            cur = c[i0, cols] - u[i0] - v[cols]
            better = cur < minv[cols]
            minv[cols[better]] = cur[better]
            way[cols[better]] = j0
            k = int(np.argmin(minv[cols]))
            delta = minv[cols[k]]
            if not np.isfinite(delta):
                raise NumericError("assignment problem is infeasible")
            j1 = int(cols[k])
            used_cols = np.flatnonzero(used)
            u[p[used_cols]] += delta
            v[used_cols] -= delta
            minv[cols] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assign = np.empty(n, dtype=np.int64)
    assign[p[1:] - 1] = np.arange(n)
    return assign, u[1:], v[1:]


def _force(tight, assign, owner, fixed_row, fixed_col, i, j):
    """Try to re-match so that row i takes column j, keeping rows < i fixed.

    Alternating BFS from the row displaced from j towards the column i frees.
    Returns the updated (assign, owner) or None.
    """
    target = assign[i]
    start = owner[j]
    parent = {start: None}
    queue = deque([start])
    found = None
    while queue and found is None:
        r = queue.popleft()
        for col in tight[r]:
            if fixed_col[col] or col == j:
                continue
            if col == target:
                found = (r, col)
                break
            nxt = owner[col]
            if nxt == i or fixed_row[nxt] or nxt in parent:
                continue
            parent[nxt] = (r, col)
            queue.append(nxt)
    if found is None:
        return None
    assign = assign.copy()
    owner = owner.copy()
    r, col = found
    while True:
        assign[r] = col
        owner[col] = r
        step = parent[r]
        if step is None:
            break
        r, col = step
    assign[i] = j
    owner[j] = i
    return assign, owner


def solve_assignment(cost) -> tuple[np.ndarray, float]:
    """Minimise sum_i cost[i, assign[i]] over permutations.

    Returns the lexicographically smallest optimal ``assign`` and its cost,
    summed directly from ``cost``.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0
    base, u, v = _hungarian(cost)
    best = float(cost[np.arange(n), base].sum())
    finite = cost[np.isfinite(cost)]
    scale = float(np.max(np.abs(finite))) if finite.size else 1.0
    tol = 1e-11 * (1.0 + scale) * n
    reduced = cost - u[:, None] - v[None, :]
    tight = [np.flatnonzero(np.isfinite(cost[r]) & (reduced[r] <= tol)) for r in range(n)]
    assign = base.copy()
    owner = np.empty(n, dtype=np.int64)
    owner[assign] = np.arange(n)
    fixed_row = np.zeros(n, dtype=bool)
    fixed_col = np.zeros(n, dtype=bool)
    for i in range(n):
        for j in tight[i]:
            if j >= assign[i]:
                break
            if fixed_col[j]:
                continue
            res = _force(tight, assign, owner, fixed_row, fixed_col, i, j)
            if res is not None:
                assign, owner = res
                break
        fixed_row[i] = True
        fixed_col[assign[i]] = True
    total = float(cost[np.arange(n), assign].sum())
    if not total <= best + 1e-12 * (1.0 + abs(best)):
        return base, best
    return assign, total
