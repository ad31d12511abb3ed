"""numba kernels for the hot path: cell binning, pair generation, pair
forces, force reduction and integration.

Determinism contract: the serial and parallel pair-force kernels share a
textually identical per-pair body and write each pair's result into its own
slot; the reduction over particles is always the same fixed-order serial
loop, so serial and parallel accumulation are bit-identical.

Two binning modes with identical pair semantics: a dense grid over the
occupied bounding box (O(1) cell lookup, used when the box is compact) and
a sparse packed-key mode with binary search (arbitrarily spread clouds).
Key packing uses 21 signed bits per axis; wrapping of far-apart coordinates
can only merge unrelated cells into one candidate list, which the exact
distance test filters out again, so exactness holds for any input.
"""

import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numpy as np
from numba import njit, prange

_BITS = 21
_MASK = (1 << _BITS) - 1


@njit(cache=True)
def cell_coords(positions, cell_size):
    n, dim = positions.shape
    coords = np.empty((n, 3), dtype=np.int64)
    for i in range(n):
        coords[i, 0] = np.int64(np.floor(positions[i, 0] / cell_size))
        coords[i, 1] = np.int64(np.floor(positions[i, 1] / cell_size))
        coords[i, 2] = np.int64(np.floor(positions[i, 2] / cell_size)) if dim == 3 else 0
    return coords


@njit(cache=True)
def pack_keys(coords):
    n = coords.shape[0]
    keys = np.empty(n, dtype=np.int64)
    for i in range(n):
        keys[i] = (
            ((coords[i, 0] & _MASK) << (2 * _BITS))
            | ((coords[i, 1] & _MASK) << _BITS)
            | (coords[i, 2] & _MASK)
        )
    return keys


@njit(cache=True)
def counting_sort_cells(ids, ncells):
    """order grouped by cell id, ascending particle index inside each cell,
    plus the cell start offsets (len ncells + 1)."""
    n = len(ids)
    counts = np.zeros(ncells + 1, dtype=np.int64)
    for i in range(n):
        counts[ids[i] + 1] += 1
    for c in range(ncells):
        counts[c + 1] += counts[c]
    order = np.empty(n, dtype=np.int64)
    cursor = counts.copy()
    for i in range(n):
        order[cursor[ids[i]]] = i
        cursor[ids[i]] += 1
    return order, counts


@njit(cache=True)
def dense_cell_ids(coords, cmin, shape):
    n = coords.shape[0]
    ids = np.empty(n, dtype=np.int64)
    for i in range(n):
        ids[i] = (
            (coords[i, 0] - cmin[0]) * shape[1] + (coords[i, 1] - cmin[1])
        ) * shape[2] + (coords[i, 2] - cmin[2])
    return ids


@njit(cache=True)
def coord_bounds(coords):
    n = coords.shape[0]
    cmin = np.empty(3, dtype=np.int64)
    cmax = np.empty(3, dtype=np.int64)
    for c in range(3):
        cmin[c] = coords[0, c]
        cmax[c] = coords[0, c]
    for i in range(1, n):
        for c in range(3):
            v = coords[i, c]
            if v < cmin[c]:
                cmin[c] = v
            elif v > cmax[c]:
                cmax[c] = v
    return cmin, cmax


@njit(cache=True)
def pairs_dense(positions, coords, order, starts, cmin, shape, radius):
    """Emit (i, j, dist, unit) for all i < j with |x_i - x_j| <= radius,
    in lexicographic (i, j) order.

    `order` holds particle indices grouped by dense cell id (ascending index
    within a cell); starts[c]:starts[c+1] is cell c's slice.  Per particle,
    accepted neighbors are insertion-sorted by j before emission, and the
    outer loop ascends in i, so the output is globally sorted.
    """
    n, dim = positions.shape
    r2 = radius * radius
    cap = max(16, n * 4)
    ii = np.empty(cap, dtype=np.int64)
    jj = np.empty(cap, dtype=np.int64)
    dd = np.empty(cap, dtype=np.float64)
    uu = np.empty((cap, dim), dtype=np.float64)
    cj = np.empty(n, dtype=np.int64)
    cd = np.empty((n, 4), dtype=np.float64)  # dx, dy, dz, d2 per candidate
    count = 0
    sx, sy, sz = shape[0], shape[1], shape[2]
    mx, my, mz = cmin[0], cmin[1], cmin[2]
    for i in range(n):
        px = positions[i, 0]
        py = positions[i, 1]
        pz = positions[i, 2] if dim == 3 else 0.0
        cx = coords[i, 0] - mx
        cy = coords[i, 1] - my
        cz = coords[i, 2] - mz
        zlo = cz - 1 if cz > 0 else 0
        zhi = cz + 1 if cz + 1 < sz else sz - 1
        m = 0
        for ox in range(-1, 2):
            nx = cx + ox
            if nx < 0 or nx >= sx:
                continue
            for oy in range(-1, 2):
                ny = cy + oy
                if ny < 0 or ny >= sy:
                    continue
                base = (nx * sy + ny) * sz
                for idx in range(starts[base + zlo], starts[base + zhi + 1]):
                    j = order[idx]
                    if j <= i:
                        continue
                    dx = px - positions[j, 0]
                    dy = py - positions[j, 1]
                    d2 = dx * dx + dy * dy
                    dz = 0.0
                    if dim == 3:
                        dz = pz - positions[j, 2]
                        d2 += dz * dz
                    if d2 <= r2:
                        cj[m] = j
                        cd[m, 0] = dx
                        cd[m, 1] = dy
                        cd[m, 2] = dz
                        cd[m, 3] = d2
                        m += 1
        if count + m > cap:
            cap = max(cap * 2, count + m + n)
            ii, jj, dd, uu = _grow(ii, jj, dd, uu, count, cap, dim)
        count = _emit_sorted(i, m, cj, cd, ii, jj, dd, uu, count, dim)
    return ii[:count], jj[:count], dd[:count], uu[:count]


@njit(cache=True)
def pairs_sparse(positions, coords, order, starts, uniq_keys, radius):
    """Sparse twin of pairs_dense: packed-key cells + binary search."""
    n, dim = positions.shape
    r2 = radius * radius
    cap = max(16, n * 4)
    ii = np.empty(cap, dtype=np.int64)
    jj = np.empty(cap, dtype=np.int64)
    dd = np.empty(cap, dtype=np.float64)
    uu = np.empty((cap, dim), dtype=np.float64)
    cj = np.empty(n, dtype=np.int64)
    cd = np.empty((n, 4), dtype=np.float64)
    count = 0
    ncells = len(uniq_keys)
    zspan = 1 if dim == 3 else 0
    for i in range(n):
        px = positions[i, 0]
        py = positions[i, 1]
        pz = positions[i, 2] if dim == 3 else 0.0
        cx = coords[i, 0]
        cy = coords[i, 1]
        cz = coords[i, 2]
        m = 0
        for ox in range(-1, 2):
            for oy in range(-1, 2):
                for oz in range(-zspan, zspan + 1):
                    key = (
                        (((cx + ox) & _MASK) << (2 * _BITS))
                        | (((cy + oy) & _MASK) << _BITS)
                        | ((cz + oz) & _MASK)
                    )
                    lo = 0
                    hi = ncells
                    while lo < hi:
                        mid = (lo + hi) >> 1
                        if uniq_keys[mid] < key:
                            lo = mid + 1
                        else:
                            hi = mid
                    if lo >= ncells or uniq_keys[lo] != key:
                        continue
                    for idx in range(starts[lo], starts[lo + 1]):
                        j = order[idx]
                        if j <= i:
                            continue
                        dx = px - positions[j, 0]
                        dy = py - positions[j, 1]
                        d2 = dx * dx + dy * dy
                        dz = 0.0
                        if dim == 3:
                            dz = pz - positions[j, 2]
                            d2 += dz * dz
                        if d2 <= r2:
                            cj[m] = j
                            cd[m, 0] = dx
                            cd[m, 1] = dy
                            cd[m, 2] = dz
                            cd[m, 3] = d2
                            m += 1
        if count + m > cap:
            cap = max(cap * 2, count + m + n)
            ii, jj, dd, uu = _grow(ii, jj, dd, uu, count, cap, dim)
        count = _emit_sorted(i, m, cj, cd, ii, jj, dd, uu, count, dim)
    return ii[:count], jj[:count], dd[:count], uu[:count]


@njit(cache=True)
def brute_pairs(positions, radius):
    """O(n^2) oracle using the same distance arithmetic as the grid modes."""
    n, dim = positions.shape
    r2 = radius * radius
    cap = max(16, n * 4)
    ii = np.empty(cap, dtype=np.int64)
    jj = np.empty(cap, dtype=np.int64)
    dd = np.empty(cap, dtype=np.float64)
    uu = np.empty((cap, dim), dtype=np.float64)
    count = 0
    for i in range(n):
        px = positions[i, 0]
        py = positions[i, 1]
        pz = positions[i, 2] if dim == 3 else 0.0
        for j in range(i + 1, n):
            dx = px - positions[j, 0]
            dy = py - positions[j, 1]
            d2 = dx * dx + dy * dy
            dz = 0.0
            if dim == 3:
                dz = pz - positions[j, 2]
                d2 += dz * dz
            if d2 <= r2:
                if count == cap:
                    cap *= 2
                    ii, jj, dd, uu = _grow(ii, jj, dd, uu, count, cap, dim)
                d = np.sqrt(d2)
                ii[count] = i
                jj[count] = j
                dd[count] = d
                if d > 0.0:
                    inv = 1.0 / d
                    uu[count, 0] = dx * inv
                    uu[count, 1] = dy * inv
                    if dim == 3:
                        uu[count, 2] = dz * inv
                else:
                    for c in range(dim):
                        uu[count, c] = 0.0
                count += 1
    return ii[:count], jj[:count], dd[:count], uu[:count]


@njit(cache=True)
def _emit_sorted(i, m, cj, cd, ii, jj, dd, uu, count, dim):
    """Insertion-sort particle i's accepted neighbors by j, then emit."""
    for a in range(1, m):
        j = cj[a]
        v0 = cd[a, 0]
        v1 = cd[a, 1]
        v2 = cd[a, 2]
        v3 = cd[a, 3]
        b = a - 1
        while b >= 0 and cj[b] > j:
            cj[b + 1] = cj[b]
            cd[b + 1, 0] = cd[b, 0]
            cd[b + 1, 1] = cd[b, 1]
            cd[b + 1, 2] = cd[b, 2]
            cd[b + 1, 3] = cd[b, 3]
            b -= 1
        cj[b + 1] = j
        cd[b + 1, 0] = v0
        cd[b + 1, 1] = v1
        cd[b + 1, 2] = v2
        cd[b + 1, 3] = v3
    for a in range(m):
        d = np.sqrt(cd[a, 3])
        ii[count] = i
        jj[count] = cj[a]
        dd[count] = d
        if d > 0.0:
            inv = 1.0 / d
            uu[count, 0] = cd[a, 0] * inv
            uu[count, 1] = cd[a, 1] * inv
            if dim == 3:
                uu[count, 2] = cd[a, 2] * inv
        else:
            for c in range(dim):
                uu[count, c] = 0.0
        count += 1
    return count


@njit(cache=True)
def _grow(ii, jj, dd, uu, count, cap, dim):
    ii2 = np.empty(cap, dtype=np.int64)
    jj2 = np.empty(cap, dtype=np.int64)
    dd2 = np.empty(cap, dtype=np.float64)
    uu2 = np.empty((cap, dim), dtype=np.float64)
    ii2[:count] = ii[:count]
    jj2[:count] = jj[:count]
    dd2[:count] = dd[:count]
    uu2[:count] = uu[:count]
    return ii2, jj2, dd2, uu2


# The serial and parallel scalar kernels must keep textually identical loop
# bodies: bit-identical output is part of the engine's determinism contract.

@njit(cache=True)
def pair_scalars_serial(ii, jj, dist, unit, velocities, material_ids,
                        Ktab, Ztab, Detab, Dvtab, D0tab):
    npairs = len(ii)
    dim = unit.shape[1]
    scalar = np.zeros(npairs)
    elastic = np.zeros(npairs)
    active = np.zeros(npairs, dtype=np.uint8)
    degenerate = np.zeros(npairs, dtype=np.uint8)
    for k in range(npairs):
        i = ii[k]
        j = jj[k]
        d = dist[k]
        if d == 0.0:
            degenerate[k] = 1
            continue
        a = material_ids[i]
        b = material_ids[j]
        k_el = Ktab[a, b]
        s = 0.0
        if k_el > 0.0 and d <= Detab[a, b]:
            se = k_el * (d - D0tab[a, b])
            elastic[k] = se
            active[k] = 1
            s += se
        z = Ztab[a, b]
        if z > 0.0 and d <= Dvtab[a, b]:
            ddot = 0.0
            for c in range(dim):
                ddot += (velocities[i, c] - velocities[j, c]) * unit[k, c]
            s += z * ddot
        scalar[k] = s
    return scalar, elastic, active, degenerate


@njit(cache=True, parallel=True)
def pair_scalars_parallel(ii, jj, dist, unit, velocities, material_ids,
                          Ktab, Ztab, Detab, Dvtab, D0tab):
    npairs = len(ii)
    dim = unit.shape[1]
    scalar = np.zeros(npairs)
    elastic = np.zeros(npairs)
    active = np.zeros(npairs, dtype=np.uint8)
    degenerate = np.zeros(npairs, dtype=np.uint8)
    for k in prange(npairs):
        i = ii[k]
        j = jj[k]
        d = dist[k]
        if d == 0.0:
            degenerate[k] = 1
            continue
        a = material_ids[i]
        b = material_ids[j]
        k_el = Ktab[a, b]
        s = 0.0
        if k_el > 0.0 and d <= Detab[a, b]:
            se = k_el * (d - D0tab[a, b])
            elastic[k] = se
            active[k] = 1
            s += se
        z = Ztab[a, b]
        if z > 0.0 and d <= Dvtab[a, b]:
            ddot = 0.0
            for c in range(dim):
                ddot += (velocities[i, c] - velocities[j, c]) * unit[k, c]
            s += z * ddot
        scalar[k] = s
    return scalar, elastic, active, degenerate


@njit(cache=True)
def reduce_forces(ii, jj, scalar, elastic, active, unit, n):
    """Fixed-order serial reduction: forces, contact counts, |elastic| sums.

    F_i = -s * unit, F_j = +s * unit with unit = (x_i - x_j)/D; the two
    writes are exact negations so pair antisymmetry is bit-exact.
    """
    dim = unit.shape[1]
    forces = np.zeros((n, dim))
    count = np.zeros(n, dtype=np.int64)
    stress = np.zeros(n)
    for k in range(len(ii)):
        i = ii[k]
        j = jj[k]
        s = scalar[k]
        for c in range(dim):
            f = s * unit[k, c]
            forces[i, c] -= f
            forces[j, c] += f
        if active[k]:
            count[i] += 1
            count[j] += 1
            mag = abs(elastic[k])
            stress[i] += mag
            stress[j] += mag
    return forces, count, stress


@njit(cache=True)
def add_body_forces(forces, velocities, masses, free, gravity, c_amb):
    n, dim = forces.shape
    for i in range(n):
        if not free[i]:
            continue
        for c in range(dim):
            forces[i, c] += masses[i] * gravity[c] - c_amb * velocities[i, c]


@njit(cache=True)
def integrate(positions, velocities, forces, masses, free, dt):
    """Semi-implicit Euler on free particles: v += dt*F/m then x += dt*v."""
    n, dim = positions.shape
    for i in range(n):
        if not free[i]:
            continue
        inv_m = 1.0 / masses[i]
        for c in range(dim):
            velocities[i, c] += dt * forces[i, c] * inv_m
        for c in range(dim):
            positions[i, c] += dt * velocities[i, c]


@njit(cache=True)
def finite_check(positions, velocities):
    """Index of the first particle with a non-finite component, or -1."""
    n, dim = positions.shape
    for i in range(n):
        for c in range(dim):
            if not (np.isfinite(positions[i, c]) and np.isfinite(velocities[i, c])):
                return i
    return -1


@njit(cache=True)
def elastic_pair_potential(dist, ii, jj, material_ids, Ktab, Detab, D0tab):
    """Sum of 1/2 K (D - D0)^2 over pairs inside their elastic segment."""
    total = 0.0
    for k in range(len(ii)):
        d = dist[k]
        if d == 0.0:
            continue
        a = material_ids[ii[k]]
        b = material_ids[jj[k]]
        k_el = Ktab[a, b]
        if k_el > 0.0 and d <= Detab[a, b]:
            dd = d - D0tab[a, b]
            total += 0.5 * k_el * dd * dd
    return total


def warmup():
    """Compile every kernel once on tiny inputs (2D and 3D)."""
    for dim in (2, 3):
        pos = np.array([[0.0] * dim, [0.5] + [0.0] * (dim - 1)])
        vel = np.zeros_like(pos)
        coords = cell_coords(pos, 1.0)
        cmin, cmax = coord_bounds(coords)
        shape = cmax - cmin + 1
        ids = dense_cell_ids(coords, cmin, shape)
        ncells = int(shape[0] * shape[1] * shape[2])
        order, starts = counting_sort_cells(ids, ncells)
        ii, jj, dd, uu = pairs_dense(pos, coords, order, starts, cmin, shape, 1.0)
        keys = pack_keys(coords)
        korder = np.argsort(keys, kind="stable").astype(np.int64)
        uniq, first = np.unique(keys[korder], return_index=True)
        kstarts = np.concatenate([first, [len(korder)]]).astype(np.int64)
        pairs_sparse(pos, coords, korder, kstarts, uniq, 1.0)
        brute_pairs(pos, 1.0)
        mats = np.zeros(2, dtype=np.int32)
        tab = np.ones((1, 1))
        args = (ii, jj, dd, uu, vel, mats, tab, tab, tab, tab, tab)
        s, e, a, g = pair_scalars_serial(*args)
        pair_scalars_parallel(*args)
        forces, _, _ = reduce_forces(ii, jj, s, e, a, uu, 2)
        add_body_forces(forces, vel, np.ones(2), np.ones(2, dtype=np.bool_),
                        np.zeros(dim), 0.1)
        integrate(pos.copy(), vel.copy(), forces, np.ones(2),
                  np.ones(2, dtype=np.bool_), 0.01)
        finite_check(pos, vel)
        elastic_pair_potential(dd, ii, jj, mats, tab, tab, tab)
