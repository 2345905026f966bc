"""Hot inner loops, each in a numba and a pure Python/NumPy flavour.

The numba versions are used when numba imports and ``BRINK_DISABLE_JIT`` is
unset (or ``0``).  Both flavours are always importable under the ``*_py`` and
``*_nb`` names so tests and the benchmark can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

RESCALE = 1e150

_flag = os.environ.get("BRINK_DISABLE_JIT", "").strip().lower()
JIT_ENABLED = numba is not None and _flag not in ("1", "true", "yes", "on")


def _njit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# Numerov recurrence for y'' = Q y with Q = qa - E * qb
# ---------------------------------------------------------------------------


def _numerov_fill(qa, qb, energy, h, out, i0, stop, direction):
    # out[i0] and out[i0 + direction] are seeded; march until index `stop`.
    c = h * h / 12.0
    nodes = 0
    last_sign = 0.0
    for k in (i0, i0 + direction):
        if out[k] != 0.0:
            s = 1.0 if out[k] > 0.0 else -1.0
            if last_sign != 0.0 and s != last_sign:
                nodes += 1
            last_sign = s
    i = i0 + direction
    while i != stop:
        im = i - direction
        ip = i + direction
        fm = 1.0 - c * (qa[im] - energy * qb[im])
        f0 = 1.0 + 5.0 * c * (qa[i] - energy * qb[i])
        fp = 1.0 - c * (qa[ip] - energy * qb[ip])
        y = (2.0 * f0 * out[i] - fm * out[im]) / fp
        out[ip] = y
        if y != 0.0:
            s = 1.0 if y > 0.0 else -1.0
            if last_sign != 0.0 and s != last_sign:
                nodes += 1
            last_sign = s
        if abs(y) > RESCALE:
            # rescale everything already written, including any seeded prefix
            if direction > 0:
                for k in range(0, ip + 1):
                    out[k] /= RESCALE
            else:
                for k in range(ip, out.shape[0]):
                    out[k] /= RESCALE
        i = ip
    return nodes


def _numerov_nodes(qa, qb, energy, h, y0, y1, i0, stop):
    # Outward march that keeps only two values; returns (nodes, y[stop-1], y[stop]).
    c = h * h / 12.0
    nodes = 0
    last_sign = 0.0
    for v in (y0, y1):
        if v != 0.0:
            s = 1.0 if v > 0.0 else -1.0
            if last_sign != 0.0 and s != last_sign:
                nodes += 1
            last_sign = s
    ym = y0
    yc = y1
    for i in range(i0 + 1, stop):
        fm = 1.0 - c * (qa[i - 1] - energy * qb[i - 1])
        f0 = 1.0 + 5.0 * c * (qa[i] - energy * qb[i])
        fp = 1.0 - c * (qa[i + 1] - energy * qb[i + 1])
        y = (2.0 * f0 * yc - fm * ym) / fp
        if y != 0.0:
            s = 1.0 if y > 0.0 else -1.0
            if last_sign != 0.0 and s != last_sign:
                nodes += 1
            last_sign = s
        ym = yc
        yc = y
        if abs(yc) > RESCALE:
            ym /= RESCALE
            yc /= RESCALE
    return nodes, ym, yc


numerov_fill_py = _numerov_fill
numerov_nodes_py = _numerov_nodes
numerov_fill_nb = _njit(_numerov_fill)
numerov_nodes_nb = _njit(_numerov_nodes)


# ---------------------------------------------------------------------------
# Many-body Coulomb sums over batches of configurations, shape (M, N, 3)
# ---------------------------------------------------------------------------


def coulomb_energy_py(pos, Z):
    """Vectorised -Z/|x_j| + sum_{k<j} 1/|x_j - x_k| for each configuration."""
    radii = np.sqrt(np.einsum("mnk,mnk->mn", pos, pos))
    total = -Z * np.sum(1.0 / radii, axis=1)
    n = pos.shape[1]
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        diff = pos[:, iu, :] - pos[:, ju, :]
        total = total + np.sum(1.0 / np.sqrt(np.einsum("mpk,mpk->mp", diff, diff)), axis=1)
    return total


def _coulomb_energy_loop(pos, Z):
    m, n, _ = pos.shape
    out = np.empty(m)
    for a in range(m):
        acc = 0.0
        for j in range(n):
            rj = np.sqrt(pos[a, j, 0] ** 2 + pos[a, j, 1] ** 2 + pos[a, j, 2] ** 2)
            acc -= Z / rj
            for k in range(j):
                dx = pos[a, j, 0] - pos[a, k, 0]
                dy = pos[a, j, 1] - pos[a, k, 1]
                dz = pos[a, j, 2] - pos[a, k, 2]
                acc += 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
        out[a] = acc
    return out


coulomb_energy_nb = _njit(_coulomb_energy_loop)


def _sorted_batch(pos):
    radii = np.sqrt(np.einsum("mnk,mnk->mn", pos, pos))
    order = np.argsort(radii, axis=1, kind="stable")
    r_sorted = np.take_along_axis(radii, order, axis=1)
    p_sorted = np.take_along_axis(pos, order[:, :, None], axis=1)
    return r_sorted, p_sorted


def _inner_energy_py(r_sorted, p_sorted, M, Z):
    if M <= 0:
        return np.zeros(r_sorted.shape[0])
    return coulomb_energy_py(p_sorted[:, :M, :], Z)


def natom_bound_py(pos, Z, K, delta):
    """Region flags (True for A_>) and the two-region lower bound, vectorised."""
    n = pos.shape[1]
    r_sorted, p_sorted = _sorted_batch(pos)
    inner = n - K
    greater = r_sorted[:, inner - 1] > delta * r_sorted[:, inner]
    outer_inv = np.sum(1.0 / r_sorted[:, inner:], axis=1)
    b_greater = (
        _inner_energy_py(r_sorted, p_sorted, inner - 1, Z)
        - Z / (delta * r_sorted[:, inner])
        - Z * outer_inv
    )
    b_less = _inner_energy_py(r_sorted, p_sorted, inner, Z) + (inner / (1.0 + delta) - Z) * outer_inv
    return greater, np.where(greater, b_greater, b_less)


def _natom_bound_loop(pos, Z, K, delta):
    m, n, _ = pos.shape
    inner = n - K
    flags = np.empty(m, dtype=np.bool_)
    out = np.empty(m)
    radii = np.empty(n)
    for a in range(m):
        for j in range(n):
            radii[j] = np.sqrt(pos[a, j, 0] ** 2 + pos[a, j, 1] ** 2 + pos[a, j, 2] ** 2)
        order = np.argsort(radii, kind="mergesort")
        greater = radii[order[inner - 1]] > delta * radii[order[inner]]
        upto = inner - 1 if greater else inner
        acc = 0.0
        for j in range(upto):
            pj = order[j]
            acc -= Z / radii[pj]
            for k in range(j):
                pk = order[k]
                dx = pos[a, pj, 0] - pos[a, pk, 0]
                dy = pos[a, pj, 1] - pos[a, pk, 1]
                dz = pos[a, pj, 2] - pos[a, pk, 2]
                acc += 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
        outer_inv = 0.0
        for j in range(inner, n):
            outer_inv += 1.0 / radii[order[j]]
        if greater:
            acc += -Z / (delta * radii[order[inner]]) - Z * outer_inv
        else:
            acc += (inner / (1.0 + delta) - Z) * outer_inv
        flags[a] = greater
        out[a] = acc
    return flags, out


natom_bound_nb = _njit(_natom_bound_loop)


def helium_bound_py(pos, Z, delta, alpha):
    """Inside flags and the matching two-electron lower bound, vectorised."""
    radii = np.sqrt(np.einsum("mnk,mnk->mn", pos, pos))
    r0 = np.min(radii, axis=1)
    rinf = np.max(radii, axis=1)
    inside = r0 >= delta * rinf**alpha
    b_in = (0.5 - Z) / rinf - Z / (delta * rinf**alpha)
    b_out = -Z / r0 + (1.0 / (1.0 + delta * rinf ** (alpha - 1.0)) - Z) / rinf
    return inside, np.where(inside, b_in, b_out)


def _helium_bound_loop(pos, Z, delta, alpha):
    m = pos.shape[0]
    flags = np.empty(m, dtype=np.bool_)
    out = np.empty(m)
    for a in range(m):
        r1 = np.sqrt(pos[a, 0, 0] ** 2 + pos[a, 0, 1] ** 2 + pos[a, 0, 2] ** 2)
        r2 = np.sqrt(pos[a, 1, 0] ** 2 + pos[a, 1, 1] ** 2 + pos[a, 1, 2] ** 2)
        r0 = min(r1, r2)
        rinf = max(r1, r2)
        inside = r0 >= delta * rinf**alpha
        if inside:
            out[a] = (0.5 - Z) / rinf - Z / (delta * rinf**alpha)
        else:
            out[a] = -Z / r0 + (1.0 / (1.0 + delta * rinf ** (alpha - 1.0)) - Z) / rinf
        flags[a] = inside
    return flags, out


helium_bound_nb = _njit(_helium_bound_loop)


# ---------------------------------------------------------------------------
# Monte Carlo hit count for the solid of revolution |v| <= delta * u**alpha
# ---------------------------------------------------------------------------


def cone_hits_py(u, v1, v2, delta, alpha):
    return int(np.count_nonzero(v1 * v1 + v2 * v2 <= (delta * u**alpha) ** 2))


def _cone_hits_loop(u, v1, v2, delta, alpha):
    hits = 0
    for i in range(u.shape[0]):
        t = delta * u[i] ** alpha
        if v1[i] * v1[i] + v2[i] * v2[i] <= t * t:
            hits += 1
    return hits


cone_hits_nb = _njit(_cone_hits_loop)


if JIT_ENABLED:
    numerov_fill = numerov_fill_nb
    numerov_nodes = numerov_nodes_nb
    coulomb_energy = coulomb_energy_nb
    natom_bound = natom_bound_nb
    helium_bound = helium_bound_nb
    cone_hits = cone_hits_nb
else:
    numerov_fill = numerov_fill_py
    numerov_nodes = numerov_nodes_py
    coulomb_energy = coulomb_energy_py
    natom_bound = natom_bound_py
    helium_bound = helium_bound_py
    cone_hits = cone_hits_py
