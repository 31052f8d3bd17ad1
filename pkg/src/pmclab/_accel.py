"""Loop-heavy kernels: sphere interpolation, ray resampling, membership tests.

Each kernel has a numba ``@njit`` implementation and a pure-numpy fallback.
The numba path is used when numba imports and ``PMCLAB_NUMBA`` is not set to
``0``. Both paths compute the same quantities to rounding error.
"""

from __future__ import annotations

import os

import numpy as np

ORDER = 6  # stencil width per axis for local Lagrange interpolation
HALF = ORDER // 2

try:  # pragma: no cover - exercised implicitly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    return _HAVE_NUMBA and os.environ.get("PMCLAB_NUMBA", "1") != "0"


def _to_angles(v):
    r = np.sqrt(np.sum(v * v, axis=-1))
    ct = np.clip(v[..., 2] / r, -1.0, 1.0)
    th = np.arccos(ct)
    ph = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * np.pi)
    return th, ph, r


# ---------------------------------------------------------------------------
# numpy fallback


def _lagrange_weights_np(nodes, x):
    # nodes (Q, K), x (Q,) -> (Q, K)
    K = nodes.shape[1]
    w = np.ones_like(nodes)
    for j in range(K):
        for m in range(K):
            if m != j:
                w[:, j] *= (x - nodes[:, m]) / (nodes[:, j] - nodes[:, m])
    return w


def _interp_np(field, theta, th, ph):
    nth, nph = field.shape
    Q = th.size
    h = 2.0 * np.pi / nph
    # azimuthal stencil for phi and phi + pi
    s = ph / h
    k0 = np.floor(s).astype(np.int64)
    offs = np.arange(-HALF + 1, HALF + 1)
    knodes = (k0[:, None] + offs[None, :]).astype(float)
    wphi = _lagrange_weights_np(knodes, s)
    kidx = np.mod(k0[:, None] + offs[None, :], nph)
    kidx_pi = np.mod(kidx + nph // 2, nph)

    j0 = np.searchsorted(theta, th)
    jext = j0[:, None] + np.arange(-HALF, HALF)[None, :]
    below = jext < 0
    above = jext >= nth
    jrow = np.where(below, -jext - 1, np.where(above, 2 * nth - 1 - jext, jext))
    tnodes = theta[jrow]
    tnodes = np.where(below, -tnodes, np.where(above, 2.0 * np.pi - tnodes, tnodes))
    wth = _lagrange_weights_np(tnodes, th)
    flip = below | above

    out = np.zeros(Q)
    for a in range(ORDER):
        rows = jrow[:, a]
        vals_direct = np.sum(field[rows[:, None], kidx] * wphi, axis=1)
        vals_flip = np.sum(field[rows[:, None], kidx_pi] * wphi, axis=1)
        out += wth[:, a] * np.where(flip[:, a], vals_flip, vals_direct)
    return out


def interp_field_np(field, theta, dirs):
    th, ph, _ = _to_angles(np.asarray(dirs, dtype=float).reshape(-1, 3))
    return _interp_np(np.ascontiguousarray(field), theta, th, ph)


def resample_np(field, theta, offset, dirs, nscan, tmax):
    """Per-ray root of rho(dir(offset + t d)) = |offset + t d| for t > 0."""
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    Q = dirs.shape[0]
    ts = np.linspace(0.0, tmax, nscan)

    def F(t):
        y = offset[None, :] + t[:, None] * dirs
        th, ph, r = _to_angles(y)
        return np.exp(_interp_np(field, theta, th, ph)) - r

    vals = np.empty((nscan, Q))
    for i, t in enumerate(ts):
        vals[i] = F(np.full(Q, t))
    pos = vals > 0
    changes = np.sum(pos[1:] != pos[:-1], axis=0)
    ok = pos[0] & (changes == 1)
    idx = np.argmax(~pos, axis=0)  # first non-positive sample
    idx = np.clip(idx, 1, nscan - 1)
    lo = ts[idx - 1].copy()
    hi = ts[idx].copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        right = fm > 0
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    return 0.5 * (lo + hi), ok


def inside_np(field, theta, center, points):
    y = np.asarray(points, dtype=float).reshape(-1, 3) - center[None, :]
    th, ph, r = _to_angles(y)
    rho = np.exp(_interp_np(field, theta, th, ph))
    return (r <= rho) | (r == 0.0)


# ---------------------------------------------------------------------------
# numba kernels


def _interp_one(field, theta, th, ph):
    nth, nph = field.shape
    h = 2.0 * np.pi / nph
    s = ph / h
    k0 = int(np.floor(s))
    wphi = np.empty(ORDER)
    kidx = np.empty(ORDER, dtype=np.int64)
    for a in range(ORDER):
        ka = k0 - HALF + 1 + a
        kidx[a] = ka % nph
        wa = 1.0
        for m in range(ORDER):
            if m != a:
                km = k0 - HALF + 1 + m
                wa *= (s - km) / (ka - km)
        wphi[a] = wa
    # searchsorted(theta, th), side='left'
    lo, hi = 0, nth
    while lo < hi:
        mid = (lo + hi) // 2
        if theta[mid] < th:
            lo = mid + 1
        else:
            hi = mid
    j0 = lo
    tn = np.empty(ORDER)
    rows = np.empty(ORDER, dtype=np.int64)
    flips = np.zeros(ORDER, dtype=np.bool_)
    for a in range(ORDER):
        j = j0 - HALF + a
        if j < 0:
            rows[a] = -j - 1
            tn[a] = -theta[-j - 1]
            flips[a] = True
        elif j >= nth:
            rows[a] = 2 * nth - 1 - j
            tn[a] = 2.0 * np.pi - theta[2 * nth - 1 - j]
            flips[a] = True
        else:
            rows[a] = j
            tn[a] = theta[j]
    out = 0.0
    for a in range(ORDER):
        wa = 1.0
        for m in range(ORDER):
            if m != a:
                wa *= (th - tn[m]) / (tn[a] - tn[m])
        shift = nph // 2 if flips[a] else 0
        v = 0.0
        for b in range(ORDER):
            v += wphi[b] * field[rows[a], (kidx[b] + shift) % nph]
        out += wa * v
    return out


def _angles_one(y0, y1, y2):
    r = np.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
    ct = y2 / r
    if ct > 1.0:
        ct = 1.0
    elif ct < -1.0:
        ct = -1.0
    th = np.arccos(ct)
    ph = np.arctan2(y1, y0)
    if ph < 0.0:
        ph += 2.0 * np.pi
    if ph >= 2.0 * np.pi:
        ph -= 2.0 * np.pi
    return th, ph, r


def _interp_many(field, theta, dirs):
    Q = dirs.shape[0]
    out = np.empty(Q)
    for q in range(Q):
        th, ph, _ = _angles_one(dirs[q, 0], dirs[q, 1], dirs[q, 2])
        out[q] = _interp_one(field, theta, th, ph)
    return out


def _ray_F(field, theta, offset, d, t):
    y0 = offset[0] + t * d[0]
    y1 = offset[1] + t * d[1]
    y2 = offset[2] + t * d[2]
    th, ph, r = _angles_one(y0, y1, y2)
    return np.exp(_interp_one(field, theta, th, ph)) - r


def _resample_many(field, theta, offset, dirs, nscan, tmax):
    Q = dirs.shape[0]
    roots = np.empty(Q)
    ok = np.empty(Q, dtype=np.bool_)
    dt = tmax / (nscan - 1)
    for q in range(Q):
        d = dirs[q]
        prev = _ray_F(field, theta, offset, d, 0.0)
        good = prev > 0.0
        changes = 0
        first = -1
        for i in range(1, nscan):
            cur = _ray_F(field, theta, offset, d, i * dt)
            if (cur > 0.0) != (prev > 0.0):
                changes += 1
                if first < 0:
                    first = i
            prev = cur
        ok[q] = good and changes == 1
        if first < 0:
            first = nscan - 1
        lo = (first - 1) * dt
        hi = first * dt
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _ray_F(field, theta, offset, d, mid) > 0.0:
                lo = mid
            else:
                hi = mid
        roots[q] = 0.5 * (lo + hi)
    return roots, ok


def _inside_many(field, theta, center, points):
    Q = points.shape[0]
    out = np.empty(Q, dtype=np.bool_)
    for q in range(Q):
        y0 = points[q, 0] - center[0]
        y1 = points[q, 1] - center[1]
        y2 = points[q, 2] - center[2]
        r = np.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
        if r == 0.0:
            out[q] = True
            continue
        th, ph, _ = _angles_one(y0, y1, y2)
        out[q] = r <= np.exp(_interp_one(field, theta, th, ph))
    return out


if _HAVE_NUMBA:
    _interp_one = numba.njit(cache=True)(_interp_one)
    _angles_one = numba.njit(cache=True)(_angles_one)
    _interp_many = numba.njit(cache=True)(_interp_many)
    _ray_F = numba.njit(cache=True)(_ray_F)
    _resample_many = numba.njit(cache=True)(_resample_many)
    _inside_many = numba.njit(cache=True)(_inside_many)


# ---------------------------------------------------------------------------
# dispatch


def interp_field(field, theta, dirs):
    """Interpolate a nodal field at arbitrary (not necessarily unit) directions."""
    if numba_enabled():
        d = np.ascontiguousarray(np.asarray(dirs, dtype=float).reshape(-1, 3))
        return _interp_many(np.ascontiguousarray(field), theta, d)
    return interp_field_np(field, theta, dirs)


def resample_rays(field, theta, offset, dirs, nscan=48, tmax=1.0):
    offset = np.asarray(offset, dtype=float)
    if numba_enabled():
        d = np.ascontiguousarray(np.asarray(dirs, dtype=float).reshape(-1, 3))
        return _resample_many(np.ascontiguousarray(field), theta, offset, d, int(nscan), float(tmax))
    return resample_np(np.ascontiguousarray(field), theta, offset, dirs, int(nscan), float(tmax))


def inside(field, theta, center, points):
    center = np.asarray(center, dtype=float)
    if numba_enabled():
        p = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
        return _inside_many(np.ascontiguousarray(field), theta, center, p)
    return inside_np(np.ascontiguousarray(field), theta, center, points)
