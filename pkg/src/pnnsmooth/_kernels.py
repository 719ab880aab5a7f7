"""Compiled inner loops.

Every kernel that evaluates a squared distance between two D-dimensional
vectors returns how many it evaluated, so callers can charge the ledger.
All nearest-centroid decisions compare squared distances produced by
``sqdist`` and break ties towards the lowest centroid index, so every
assignment strategy agrees bit-for-bit with the plain full scan.
"""

import numpy as np
from numba import njit, prange

INF = np.inf


@njit(cache=True, nogil=True, inline="always")
def sqdist(a, b):
    s = 0.0
    for d in range(a.shape[0]):
        t = a[d] - b[d]
        s += t * t
    return s


# ---------------------------------------------------------------------------
# plain assignment

@njit(cache=True, nogil=True)
def assign_block(X, C, lo, hi, assignment, costs):
    k = C.shape[0]
    for i in range(lo, hi):
        best = 0
        bd = sqdist(X[i], C[0])
        for j in range(1, k):
            d = sqdist(X[i], C[j])
            if d < bd:
                bd = d
                best = j
        assignment[i] = best
        costs[i] = bd
    return (hi - lo) * k


@njit(cache=True, nogil=True)
def point_costs(X, C, assignment, costs):
    for i in range(X.shape[0]):
        costs[i] = sqdist(X[i], C[assignment[i]])
    return X.shape[0]


@njit(cache=True, nogil=True)
def centroid_sums(X, assignment, k, lo, hi):
    sums = np.zeros((k, X.shape[1]))
    for i in range(lo, hi):
        a = assignment[i]
        for d in range(X.shape[1]):
            sums[a, d] += X[i, d]
    return sums


@njit(cache=True, nogil=True)
def distances_to(X, c, out):
    for i in range(X.shape[0]):
        out[i] = sqdist(X[i], c)
    return X.shape[0]


@njit(cache=True, nogil=True)
def update_nearest(X, c, label, costs, assignment):
    """Lower per-point costs against a newly added centroid ``c`` (index ``label``)."""
    for i in range(X.shape[0]):
        d = sqdist(X[i], c)
        if d < costs[i]:
            costs[i] = d
            assignment[i] = label
    return X.shape[0]


# ---------------------------------------------------------------------------
# centroid-level bookkeeping shared by several accelerators

@njit(cache=True, nogil=True)
def centroid_moves(C_old, C_new, moves, moved):
    """sqrt-distance travelled by each centroid; bitwise-identical rows cost nothing."""
    n = 0
    for j in range(C_new.shape[0]):
        same = True
        for d in range(C_new.shape[1]):
            if C_old[j, d] != C_new[j, d]:
                same = False
                break
        if same:
            moves[j] = 0.0
            moved[j] = False
        else:
            moves[j] = np.sqrt(sqdist(C_old[j], C_new[j]))
            moved[j] = True
            n += 1
    return n


@njit(cache=True, nogil=True)
def refresh_cc(C, cc, moved, full):
    """Refresh the inter-centroid sqrt-distance matrix for pairs touching a moved centroid."""
    k = C.shape[0]
    n = 0
    for a in range(k):
        for b in range(a + 1, k):
            if full or moved[a] or moved[b]:
                v = np.sqrt(sqdist(C[a], C[b]))
                cc[a, b] = v
                cc[b, a] = v
                n += 1
    for a in range(k):
        cc[a, a] = 0.0
    return n


@njit(cache=True, nogil=True)
def half_separation(cc, s):
    k = cc.shape[0]
    for a in range(k):
        m = INF
        for b in range(k):
            if b != a and cc[a, b] < m:
                m = cc[a, b]
        s[a] = 0.5 * m


@njit(cache=True, nogil=True)
def sorted_neighbours(cc, order):
    k = cc.shape[0]
    for a in range(k):
        idx = np.argsort(cc[a], kind="mergesort")
        t = 0
        for q in range(k):
            if idx[q] != a:
                order[a, t] = idx[q]
                t += 1


@njit(cache=True, nogil=True)
def top2(values):
    """Largest value, its index, and the largest value among the other entries."""
    m1 = 0.0
    i1 = -1
    m2 = 0.0
    for j in range(values.shape[0]):
        v = values[j]
        if v > m1:
            m2 = m1
            m1 = v
            i1 = j
        elif v > m2:
            m2 = v
    return m1, i1, m2


# ---------------------------------------------------------------------------
# reduced computation (activity detection)

@njit(cache=True, nogil=True)
def rc_step(X, C, lo, hi, assignment, costs, moved, active, dirty):
    k = C.shape[0]
    n = 0
    for i in range(lo, hi):
        a = assignment[i]
        if dirty[i] or moved[a]:
            best = 0
            bd = sqdist(X[i], C[0])
            for j in range(1, k):
                d = sqdist(X[i], C[j])
                if d < bd:
                    bd = d
                    best = j
            n += k
        else:
            best = a
            bd = costs[i]
            for t in range(active.shape[0]):
                j = active[t]
                d = sqdist(X[i], C[j])
                n += 1
                if d < bd or (d == bd and j < best):
                    bd = d
                    best = j
        assignment[i] = best
        costs[i] = bd
    return n


# ---------------------------------------------------------------------------
# simplified Elkan: one upper bound and k lower bounds per point

@njit(cache=True, nogil=True)
def elk_init(X, C, lo, hi, assignment, upper, lower):
    k = C.shape[0]
    for i in range(lo, hi):
        best = 0
        bd = INF
        for j in range(k):
            d = sqdist(X[i], C[j])
            lower[i, j] = np.sqrt(d)
            if d < bd:
                bd = d
                best = j
        assignment[i] = best
        upper[i] = np.sqrt(bd)
    return (hi - lo) * k


@njit(cache=True, nogil=True)
def elk_step(X, C, lo, hi, assignment, upper, lower, moves, safe, tol):
    k = C.shape[0]
    n = 0
    for i in range(lo, hi):
        a = assignment[i]
        u = upper[i] + moves[a]
        for j in range(k):
            lower[i, j] -= moves[j]
        tight = False
        ba = 0.0
        for j in range(k):
            if j == a:
                continue
            if lower[i, j] > u * safe + tol:
                continue
            if not tight:
                ba = sqdist(X[i], C[a])
                n += 1
                u = np.sqrt(ba)
                lower[i, a] = u
                tight = True
                if lower[i, j] > u * safe + tol:
                    continue
            d = sqdist(X[i], C[j])
            n += 1
            dj = np.sqrt(d)
            lower[i, j] = dj
            if d < ba or (d == ba and j < a):
                a = j
                ba = d
                u = dj
        assignment[i] = a
        upper[i] = u
    return n


# ---------------------------------------------------------------------------
# Hamerly: one upper bound, one lower bound on the second-nearest distance

@njit(cache=True, nogil=True)
def ham_init(X, C, lo, hi, assignment, upper, lower):
    k = C.shape[0]
    for i in range(lo, hi):
        best = 0
        bd = INF
        second = INF
        for j in range(k):
            d = sqdist(X[i], C[j])
            if d < bd:
                second = bd
                bd = d
                best = j
            elif d < second:
                second = d
        assignment[i] = best
        upper[i] = np.sqrt(bd)
        lower[i] = np.sqrt(second)
    return (hi - lo) * k


@njit(cache=True, nogil=True)
def ham_step(X, C, lo, hi, assignment, upper, lower, moves, half_sep,
             safe, tol, m1, i1, m2):
    k = C.shape[0]
    n = 0
    for i in range(lo, hi):
        a = assignment[i]
        u = upper[i] + moves[a]
        l = lower[i] - (m2 if a == i1 else m1)
        z = max(l, half_sep[a])
        if u * safe + tol < z:
            upper[i] = u
            lower[i] = l
            continue
        ba = sqdist(X[i], C[a])
        n += 1
        u = np.sqrt(ba)
        if u * safe + tol < z:
            upper[i] = u
            lower[i] = l
            continue
        best = a
        bd = ba
        second = INF
        for j in range(k):
            if j == a:
                continue
            d = sqdist(X[i], C[j])
            n += 1
            if d < bd or (d == bd and j < best):
                second = min(second, bd)
                bd = d
                best = j
            else:
                second = min(second, d)
        assignment[i] = best
        upper[i] = np.sqrt(bd)
        lower[i] = np.sqrt(second)
    return n


# ---------------------------------------------------------------------------
# exponion: Hamerly filter, then search only a ball around the old centroid

@njit(cache=True, nogil=True)
def exp_step(X, C, lo, hi, assignment, upper, lower, moves, half_sep, cc, order,
             safe, tol, m1, i1, m2):
    k = C.shape[0]
    n = 0
    for i in range(lo, hi):
        a = assignment[i]
        u = upper[i] + moves[a]
        l = lower[i] - (m2 if a == i1 else m1)
        z = max(l, half_sep[a])
        if u * safe + tol < z:
            upper[i] = u
            lower[i] = l
            continue
        ba = sqdist(X[i], C[a])
        n += 1
        u = np.sqrt(ba)
        if u * safe + tol < z:
            upper[i] = u
            lower[i] = l
            continue
        radius = (2.0 * u + 2.0 * half_sep[a]) * safe + tol
        best = a
        bd = ba
        second = INF
        outside = INF
        for t in range(k - 1):
            j = order[a, t]
            if cc[a, j] > radius:
                outside = cc[a, j] - u
                break
            d = sqdist(X[i], C[j])
            n += 1
            if d < bd or (d == bd and j < best):
                second = min(second, bd)
                bd = d
                best = j
            else:
                second = min(second, d)
        assignment[i] = best
        upper[i] = np.sqrt(bd)
        lower[i] = min(np.sqrt(second), outside)
    return n


# ---------------------------------------------------------------------------
# simplified Yinyang: one upper bound, one lower bound per centroid group

@njit(cache=True, nogil=True)
def yy_init(X, C, lo, hi, assignment, upper, glower, group_of, n_groups):
    k = C.shape[0]
    dist = np.empty(k)
    for i in range(lo, hi):
        best = 0
        bd = INF
        for j in range(k):
            d = sqdist(X[i], C[j])
            dist[j] = d
            if d < bd:
                bd = d
                best = j
        for g in range(n_groups):
            glower[i, g] = INF
        for j in range(k):
            if j != best:
                g = group_of[j]
                v = np.sqrt(dist[j])
                if v < glower[i, g]:
                    glower[i, g] = v
        assignment[i] = best
        upper[i] = np.sqrt(bd)
    return (hi - lo) * k


@njit(cache=True, nogil=True)
def yy_step(X, C, lo, hi, assignment, upper, glower, moves, gmoves,
            group_of, gstart, members, safe, tol):
    G = gmoves.shape[0]
    n = 0
    examined = np.zeros(G, dtype=np.bool_)
    gmin1 = np.empty(G)
    gmin2 = np.empty(G)
    for i in range(lo, hi):
        a = assignment[i]
        u = upper[i] + moves[a]
        gl = INF
        for g in range(G):
            glower[i, g] -= gmoves[g]
            if glower[i, g] < gl:
                gl = glower[i, g]
        if u * safe + tol < gl:
            upper[i] = u
            continue
        ba = sqdist(X[i], C[a])
        n += 1
        u = np.sqrt(ba)
        if u * safe + tol < gl:
            upper[i] = u
            continue
        best = a
        bd = ba
        for g in range(G):
            if glower[i, g] > np.sqrt(bd) * safe + tol:
                examined[g] = False
                continue
            examined[g] = True
            v1 = INF
            v2 = INF
            for t in range(gstart[g], gstart[g + 1]):
                j = members[t]
                if j == a:
                    d = ba
                else:
                    d = sqdist(X[i], C[j])
                    n += 1
                if d < v1:
                    v2 = v1
                    v1 = d
                elif d < v2:
                    v2 = d
                if d < bd or (d == bd and j < best):
                    bd = d
                    best = j
            gmin1[g] = v1
            gmin2[g] = v2
        ga = group_of[a]
        gb = group_of[best]
        for g in range(G):
            if examined[g]:
                if g == gb:
                    glower[i, g] = np.sqrt(gmin2[g])
                else:
                    glower[i, g] = np.sqrt(gmin1[g])
            elif g == ga and best != a:
                glower[i, g] = min(glower[i, g], u)
        assignment[i] = best
        upper[i] = np.sqrt(bd)
    return n


# ---------------------------------------------------------------------------
# pairwise nearest neighbour merging

@njit(cache=True, nogil=True, inline="always")
def merge_delta(ca, za, cb, zb):
    return za * zb * sqdist(ca, cb) / (za + zb)


@njit(cache=True, nogil=True)
def pnn_table(C, w, nn, nncost):
    m = C.shape[0]
    for a in range(m):
        nn[a] = -1
        nncost[a] = INF
    for a in range(m):
        for b in range(a + 1, m):
            v = merge_delta(C[a], w[a], C[b], w[b])
            if v < nncost[a]:
                nncost[a] = v
                nn[a] = b
            if v < nncost[b]:
                nncost[b] = v
                nn[b] = a
    return m * (m - 1) // 2


@njit(cache=True, nogil=True)
def pnn_scan(C, w, alive, c, nn, nncost):
    best = -1
    bv = INF
    n = 0
    for b in range(C.shape[0]):
        if b == c or not alive[b]:
            continue
        v = merge_delta(C[c], w[c], C[b], w[b])
        n += 1
        if v < bv:
            bv = v
            best = b
    nn[c] = best
    nncost[c] = bv
    return n


def _pnn_reduce_impl(C, w, alive, nn, nncost, target, merges, parallel_from):
    """Greedy merging down to ``target`` alive clusters; fills ``merges`` rows (a, b)."""
    m = C.shape[0]
    n_alive = 0
    for a in range(m):
        if alive[a]:
            n_alive += 1
    count = 0
    step = 0
    stale = np.empty(m, dtype=np.int64)
    while n_alive > target:
        a = -1
        bv = INF
        for c in range(m):
            if alive[c] and nncost[c] < bv:
                bv = nncost[c]
                a = c
        b = nn[a]
        if b < a:
            a, b = b, a
        merges[step, 0] = a
        merges[step, 1] = b
        step += 1
        za = w[a]
        zb = w[b]
        for d in range(C.shape[1]):
            C[a, d] = (za * C[a, d] + zb * C[b, d]) / (za + zb)
        w[a] = za + zb
        alive[b] = False
        n_alive -= 1
        n_stale = 0
        for c in range(m):
            if alive[c] and c != a and (nn[c] == a or nn[c] == b):
                stale[n_stale] = c
                n_stale += 1
        # merged cluster: full scan, also offering itself to everyone else
        best = -1
        bestv = INF
        for c in range(m):
            if c == a or not alive[c]:
                continue
            v = merge_delta(C[a], w[a], C[c], w[c])
            count += 1
            if v < bestv:
                bestv = v
                best = c
            if v < nncost[c] or (v == nncost[c] and a < nn[c]):
                nncost[c] = v
                nn[c] = a
        nn[a] = best
        nncost[a] = bestv
        if n_alive >= parallel_from:
            extra = 0
            for t in prange(n_stale):
                extra += pnn_scan(C, w, alive, stale[t], nn, nncost)
            count += extra
        else:
            for t in range(n_stale):
                count += pnn_scan(C, w, alive, stale[t], nn, nncost)
    return count


pnn_reduce_serial = njit(cache=True, nogil=True)(_pnn_reduce_impl)
pnn_reduce_parallel = njit(cache=True, parallel=True)(_pnn_reduce_impl)
