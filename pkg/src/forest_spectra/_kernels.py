"""Compiled inner loops: alias tables, Wilson sampling, coupled forest trajectories.

All random draws go through numba's per-thread Mersenne Twister, seeded
explicitly with ``np.random.seed`` at the start of every independent stream.
Forest successor arrays use ``NONE`` for roots and ``KILL`` for the killing
pseudo-arrow of sub-Laplacians.
"""
import numpy as np
from numba import njit

NONE = -1
KILL = -2
MARK_ROOT = 0
KILL_ROOT = 1


@njit(cache=True)
def build_alias_tables(ptr, target_weight):
    """Vose alias tables, one per node, laid out along ``ptr``.

    ``alias`` holds slot offsets local to the node's table.
    """
    m = target_weight.shape[0]
    prob = np.ones(m)
    alias = np.zeros(m, dtype=np.int64)
    n = ptr.shape[0] - 1
    small = np.empty(m, dtype=np.int64)
    large = np.empty(m, dtype=np.int64)
    scaled = np.empty(m)
    for x in range(n):
        lo = ptr[x]
        d = ptr[x + 1] - lo
        if d == 0:
            continue
        total = 0.0
        for j in range(d):
            total += target_weight[lo + j]
        ns = 0
        nl = 0
        for j in range(d):
            scaled[j] = target_weight[lo + j] * d / total
            alias[lo + j] = j
            if scaled[j] < 1.0:
                small[ns] = j
                ns += 1
            else:
                large[nl] = j
                nl += 1
        while ns > 0 and nl > 0:
            ns -= 1
            s = small[ns]
            nl -= 1
            g = large[nl]
            prob[lo + s] = scaled[s]
            alias[lo + s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            if scaled[g] < 1.0:
                small[ns] = g
                ns += 1
            else:
                large[nl] = g
                nl += 1
        # leftovers are 1 up to roundoff
        while nl > 0:
            nl -= 1
            prob[lo + large[nl]] = 1.0
        while ns > 0:
            ns -= 1
            prob[lo + small[ns]] = 1.0
    return prob, alias


@njit(cache=True)
def seed_stream(seed):
    np.random.seed(seed)


@njit(cache=True)
def sample_successor(x, ptr, target, prob, alias):
    lo = ptr[x]
    d = ptr[x + 1] - lo
    j = int(np.random.random() * d)
    if j == d:
        j = d - 1
    if np.random.random() >= prob[lo + j]:
        j = alias[lo + j]
    return target[lo + j]


@njit(cache=True)
def sample_successor_batch(x, count, seed, ptr, target, prob, alias):
    np.random.seed(seed)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        out[i] = sample_successor(x, ptr, target, prob, alias)
    return out


# ---------------------------------------------------------------------------
# max-heap on (q, node): larger q first, ties to the smaller node id


@njit(cache=True)
def _heap_before(qa, xa, qb, xb):
    return qa > qb or (qa == qb and xa < xb)


@njit(cache=True)
def heap_push(hq, hx, size, q, x):
    i = size
    hq[i] = q
    hx[i] = x
    while i > 0:
        p = (i - 1) // 2
        if _heap_before(hq[i], hx[i], hq[p], hx[p]):
            hq[i], hq[p] = hq[p], hq[i]
            hx[i], hx[p] = hx[p], hx[i]
            i = p
        else:
            break
    return size + 1


@njit(cache=True)
def heap_pop(hq, hx, size):
    """Remove the top entry; caller reads ``hq[0], hx[0]`` beforehand."""
    size -= 1
    hq[0] = hq[size]
    hx[0] = hx[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        c = left
        right = left + 1
        if right < size and _heap_before(hq[right], hx[right], hq[left], hx[left]):
            c = right
        if _heap_before(hq[c], hx[c], hq[i], hx[i]):
            hq[i], hq[c] = hq[c], hq[i]
            hx[i], hx[c] = hx[c], hx[i]
            i = c
        else:
            break
    return size


# ---------------------------------------------------------------------------
# forest state


@njit(cache=True)
def _link_child(x, parent, first_child, next_sib):
    next_sib[x] = first_child[parent]
    first_child[parent] = x


@njit(cache=True)
def _grow_branch(start, q, w_tot, ptr, target, prob, alias,
                 nxt, kind, in_forest, replay, first_child, next_sib,
                 hq, hx, hsize, counters, fresh_root):
    """Loop-erased walk from ``start`` until it hits the forest, then commit.

    ``counters[0]`` accumulates fresh (mark, arrow) reads, ``counters[1]``
    replays of previously sampled arrows (``fresh_root`` is excluded: its
    arrow was drawn at the reactivation itself).
    """
    u = start
    while not in_forest[u]:
        if replay[u]:
            replay[u] = False
            if u != fresh_root:
                counters[1] += 1
            v = nxt[u]
            if v == KILL:
                in_forest[u] = True
                nxt[u] = NONE
                kind[u] = KILL_ROOT
                break
            u = v
        else:
            counters[0] += 1
            U = np.random.random()
            wt = w_tot[u]
            if U * (q + wt) <= q:
                in_forest[u] = True
                nxt[u] = NONE
                kind[u] = MARK_ROOT
                hsize = heap_push(hq, hx, hsize, U * wt / (1.0 - U), u)
            else:
                v = sample_successor(u, ptr, target, prob, alias)
                if v == KILL:
                    in_forest[u] = True
                    nxt[u] = NONE
                    kind[u] = KILL_ROOT
                    break
                nxt[u] = v
                u = v
    u = start
    while not in_forest[u]:
        in_forest[u] = True
        _link_child(u, nxt[u], first_child, next_sib)
        u = nxt[u]
    return hsize


@njit(cache=True)
def wilson_forest(n, q, w_tot, ptr, target, prob, alias,
                  nxt, kind, in_forest, replay, first_child, next_sib,
                  hq, hx, counters):
    """Algorithm-1 forest at rate ``q`` written into the state arrays.

    Returns the heap size (the heap holds exactly the MARK roots).
    """
    for i in range(n):
        nxt[i] = NONE
        kind[i] = MARK_ROOT
        in_forest[i] = False
        replay[i] = False
        first_child[i] = NONE
        next_sib[i] = NONE
    hsize = 0
    for i in range(n):
        hsize = _grow_branch(i, q, w_tot, ptr, target, prob, alias,
                             nxt, kind, in_forest, replay, first_child, next_sib,
                             hq, hx, hsize, counters, NONE)
    return hsize


@njit(cache=True)
def root_array(nxt, kind, out, stack):
    """Flat root map; KILL roots are encoded as ``-(root + 1)``.

    ``out`` doubles as the memo: entries are filled by path compression.
    """
    n = nxt.shape[0]
    unset = np.iinfo(np.int32).min
    for x in range(n):
        out[x] = unset
    for x in range(n):
        if out[x] != unset:
            continue
        top = 0
        u = x
        while out[u] == unset and nxt[u] != NONE:
            stack[top] = u
            top += 1
            u = nxt[u]
        if out[u] == unset:
            out[u] = u if kind[u] == MARK_ROOT else -(u + 1)
        r = out[u]
        while top > 0:
            top -= 1
            out[stack[top]] = r


@njit(cache=True)
def _unfreeze(u, q, w_tot, ptr, target, prob, alias,
              nxt, kind, in_forest, replay, first_child, next_sib,
              hq, hx, hsize, counters, tree):
    """Reactivate the tree rooted at ``u`` and rebuild it in Wilson's order."""
    # collect the tree
    size = 1
    tree[0] = u
    head = 0
    while head < size:
        y = tree[head]
        head += 1
        c = first_child[y]
        while c != NONE:
            tree[size] = c
            size += 1
            c = next_sib[c]
    for j in range(size):
        y = tree[j]
        in_forest[y] = False
        replay[y] = True
        first_child[y] = NONE
        next_sib[y] = NONE
    nxt[u] = sample_successor(u, ptr, target, prob, alias)
    for j in range(size):
        hsize = _grow_branch(tree[j], q, w_tot, ptr, target, prob, alias,
                             nxt, kind, in_forest, replay, first_child, next_sib,
                             hq, hx, hsize, counters, u)
    # every tag is consumed at most once per episode
    for j in range(size):
        replay[tree[j]] = False
    return hsize


@njit(cache=True)
def coupled_run(n, q_max, q_min, grid_desc, w_tot, ptr, target, prob, alias,
                roots_out, next_at_max, counters):
    """One coupled trajectory from ``q_max`` down to ``q_min``.

    Writes the root map of the forest at each grid value (descending) into
    ``roots_out[g]`` and the full successor map at ``q_max`` into
    ``next_at_max``.  Uses the current RNG stream.
    """
    nxt = np.empty(n, dtype=np.int64)
    kind = np.empty(n, dtype=np.int8)
    in_forest = np.empty(n, dtype=np.bool_)
    replay = np.empty(n, dtype=np.bool_)
    first_child = np.empty(n, dtype=np.int64)
    next_sib = np.empty(n, dtype=np.int64)
    hq = np.empty(n)
    hx = np.empty(n, dtype=np.int64)
    tree = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    hsize = wilson_forest(n, q_max, w_tot, ptr, target, prob, alias,
                          nxt, kind, in_forest, replay, first_child, next_sib,
                          hq, hx, counters)
    for i in range(n):
        next_at_max[i] = nxt[i]
    G = grid_desc.shape[0]
    g = 0
    while True:
        if hsize > 0:
            qe = hq[0]
            u = hx[0]
        else:
            qe = -1.0
            u = NONE
        while g < G and grid_desc[g] >= qe:
            root_array(nxt, kind, roots_out[g], stack)
            g += 1
        if hsize == 0 or qe <= q_min:
            break
        hsize = heap_pop(hq, hx, hsize)
        hsize = _unfreeze(u, qe, w_tot, ptr, target, prob, alias,
                          nxt, kind, in_forest, replay, first_child, next_sib,
                          hq, hx, hsize, counters, tree)
    while g < G:
        root_array(nxt, kind, roots_out[g], stack)
        g += 1


@njit(cache=True)
def coupled_events(n, q_max, q_min, w_tot, ptr, target, prob, alias, seed):
    """Unfreezing thresholds actually processed along one trajectory."""
    np.random.seed(seed)
    nxt = np.empty(n, dtype=np.int64)
    kind = np.empty(n, dtype=np.int8)
    in_forest = np.empty(n, dtype=np.bool_)
    replay = np.empty(n, dtype=np.bool_)
    first_child = np.empty(n, dtype=np.int64)
    next_sib = np.empty(n, dtype=np.int64)
    hq = np.empty(n)
    hx = np.empty(n, dtype=np.int64)
    tree = np.empty(n, dtype=np.int64)
    counters = np.zeros(2, dtype=np.int64)
    hsize = wilson_forest(n, q_max, w_tot, ptr, target, prob, alias,
                          nxt, kind, in_forest, replay, first_child, next_sib,
                          hq, hx, counters)
    events = []
    while hsize > 0 and hq[0] > q_min:
        qe = hq[0]
        u = hx[0]
        events.append(qe)
        hsize = heap_pop(hq, hx, hsize)
        hsize = _unfreeze(u, qe, w_tot, ptr, target, prob, alias,
                          nxt, kind, in_forest, replay, first_child, next_sib,
                          hq, hx, hsize, counters, tree)
    out = np.empty(len(events))
    for i in range(len(events)):
        out[i] = events[i]
    return out


@njit(cache=True)
def wilson_batch(n, q, count, seed, w_tot, ptr, target, prob, alias):
    """``count`` independent forests from one stream.

    Returns successor maps, root kinds, unfreeze thresholds per node
    (NaN for non-roots and KILL roots) and per-sample (S, R) counters.
    """
    np.random.seed(seed)
    nexts = np.empty((count, n), dtype=np.int64)
    kinds = np.empty((count, n), dtype=np.int8)
    thresholds = np.full((count, n), np.nan)
    costs = np.zeros((count, 2), dtype=np.int64)
    in_forest = np.empty(n, dtype=np.bool_)
    replay = np.empty(n, dtype=np.bool_)
    first_child = np.empty(n, dtype=np.int64)
    next_sib = np.empty(n, dtype=np.int64)
    hq = np.empty(n)
    hx = np.empty(n, dtype=np.int64)
    for s in range(count):
        hsize = wilson_forest(n, q, w_tot, ptr, target, prob, alias,
                              nexts[s], kinds[s], in_forest, replay,
                              first_child, next_sib, hq, hx, costs[s])
        for j in range(hsize):
            thresholds[s, hx[j]] = hq[j]
    return nexts, kinds, thresholds, costs


@njit(cache=True)
def trajectory_batch(n, q_max, q_min, grid_desc, count, seed,
                     w_tot, ptr, target, prob, alias):
    """``count`` independent coupled trajectories from one stream."""
    np.random.seed(seed)
    G = grid_desc.shape[0]
    roots = np.empty((count, G, n), dtype=np.int32)
    nexts = np.empty((count, n), dtype=np.int64)
    costs = np.zeros((count, 2), dtype=np.int64)
    for s in range(count):
        coupled_run(n, q_max, q_min, grid_desc, w_tot, ptr, target, prob, alias,
                    roots[s], nexts[s], costs[s])
    return roots, nexts, costs


@njit(cache=True)
def xi_counts(roots, out, cur):
    """Replica composition sizes for one grid value.

    ``roots`` has shape (l, n); ``out[k]`` receives the size of the set of
    nodes returning to themselves after composing the first ``k + 1`` root
    maps.  A negative entry (KILL root) breaks the chain.
    """
    l, n = roots.shape
    for k in range(l):
        out[k] = 0
    for x in range(n):
        cur[x] = x
    for k in range(l):
        r = roots[k]
        c = 0
        for x in range(n):
            y = cur[x]
            if y < 0:
                continue
            z = r[y]
            cur[x] = z
            if z == x:
                c += 1
        out[k] = c


@njit(cache=True)
def group_xi(n, l, q_max, q_min, grid_desc, seeds, w_tot, ptr, target, prob, alias):
    """Run ``len(seeds)`` groups of ``l`` trajectories, one stream per group.

    Returns ``xi[s, g, k]`` (grid descending) and ``costs[s, j, 2]``.
    """
    s_count = seeds.shape[0]
    G = grid_desc.shape[0]
    xi = np.zeros((s_count, G, l), dtype=np.int64)
    costs = np.zeros((s_count, l, 2), dtype=np.int64)
    roots = np.empty((l, G, n), dtype=np.int32)
    nxt_buf = np.empty(n, dtype=np.int64)
    layer = np.empty((l, n), dtype=np.int32)
    cur = np.empty(n, dtype=np.int64)
    for s in range(s_count):
        np.random.seed(seeds[s])
        for j in range(l):
            coupled_run(n, q_max, q_min, grid_desc, w_tot, ptr, target, prob, alias,
                        roots[j], nxt_buf, costs[s, j])
        for g in range(G):
            for j in range(l):
                layer[j] = roots[j, g]
            xi_counts(layer, xi[s, g], cur)
    return xi, costs
