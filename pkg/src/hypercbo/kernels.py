"""Per-particle Euler-Maruyama update with projection, in numba and numpy.

The compiled kernel handles the built-in sphere and torus; custom manifolds
always take the numpy path because their geometry lives in Python callbacks.
Both paths draw the same keyed Gaussian bits, so they agree to rounding.
"""
import numpy as np

from . import rng as _rng
from .rng import normal_nb
from ._accel import get_backend, njit
from .errors import NonFiniteState, ProjectionDiverged, SingularPoint
from .manifold import KIND_CUSTOM, KIND_SPHERE, PROJECTION_MAX_ITER, PROJECTION_TOL

OK = 0
DIVERGED = 1
NONFINITE = 2
SINGULAR = 3


# -- numba -------------------------------------------------------------------

@njit
def _sdf_nb(kind, params, x):
    if kind == KIND_SPHERE:
        return np.sqrt(np.sum(x * x)) - params[0]
    rho = np.hypot(x[0], x[1])
    return np.hypot(rho - params[0], x[2]) - params[1]


@njit
def _geometry_nb(kind, params, x, normal):
    """Writes the unit normal into ``normal``; returns (laplacian, ok)."""
    d = x.shape[0]
    if kind == KIND_SPHERE:
        r = np.sqrt(np.sum(x * x))
        if r == 0.0:
            return 0.0, False
        for k in range(d):
            normal[k] = x[k] / r
        return (d - 1) / r, True
    R = params[0]
    rho = np.hypot(x[0], x[1])
    q = np.hypot(rho - R, x[2])
    if rho == 0.0 or q == 0.0:
        return 0.0, False
    s = (rho - R) / (q * rho)
    normal[0] = s * x[0]
    normal[1] = s * x[1]
    normal[2] = x[2] / q
    return 1.0 / q + (rho - R) / (q * rho), True


@njit
def _closest_nb(kind, params, x, normal):
    """In-place closest-point projection; returns a status code."""
    if kind == KIND_SPHERE:
        r = np.sqrt(np.sum(x * x))
        if r == 0.0:
            return SINGULAR
        for k in range(x.shape[0]):
            x[k] = params[0] * x[k] / r
        return OK
    g = _sdf_nb(kind, params, x)
    for _ in range(PROJECTION_MAX_ITER):
        if np.abs(g) <= PROJECTION_TOL:
            return OK
        lap, ok = _geometry_nb(kind, params, x, normal)
        if not ok:
            return SINGULAR
        for k in range(x.shape[0]):
            x[k] -= g * normal[k]
        g = _sdf_nb(kind, params, x)
    if np.abs(g) <= PROJECTION_TOL:
        return OK
    return DIVERGED


@njit
def _update_nb(pos, v, lam, sigma, dt, substeps, key, step, indices, kind, params, project, out, defect):
    n, d = pos.shape
    normal = np.empty(d)
    diff = np.empty(d)
    db = np.empty(d)
    x = np.empty(d)
    sub_scale = np.sqrt(dt / substeps)
    half_s2 = 0.5 * sigma * sigma
    for i in range(n):
        lap, ok = _geometry_nb(kind, params, pos[i], normal)
        if not ok:
            return SINGULAR, i
        dist2 = 0.0
        nd = 0.0
        for k in range(d):
            diff[k] = pos[i, k] - v[k]
            dist2 += diff[k] * diff[k]
            nd += normal[k] * diff[k]
        dist = np.sqrt(dist2)
        nb = 0.0
        for k in range(d):
            acc = 0.0
            for s in range(substeps):
                acc += normal_nb(key, indices[i], step * substeps + s, k)
            db[k] = sub_scale * acc
            nb += normal[k] * db[k]
        corr = half_s2 * dist2 * lap * dt
        for k in range(d):
            drift = -lam * dt * (diff[k] - nd * normal[k])
            noise = sigma * dist * (db[k] - nb * normal[k])
            x[k] = pos[i, k] + drift + noise - corr * normal[k]
        g = _sdf_nb(kind, params, x)
        if not np.isfinite(g):
            return NONFINITE, i
        defect[i] = np.abs(g)
        if project:
            status = _closest_nb(kind, params, x, normal)
            if status != OK:
                return status, i
        for k in range(d):
            if not np.isfinite(x[k]):
                return NONFINITE, i
            out[i, k] = x[k]
    return OK, -1


# -- numpy -------------------------------------------------------------------

def _update_np(manifold, pos, v, lam, sigma, dt, substeps, key, step, indices, project):
    d = pos.shape[1]
    normal = manifold.grad(pos)
    lap = manifold.laplacian(pos)
    diff = pos - v
    dist2 = np.sum(diff * diff, axis=1)
    dist = np.sqrt(dist2)
    db = _rng.keyed_normals_np(key, indices, step * substeps, d)
    for s in range(1, substeps):
        db = db + _rng.keyed_normals_np(key, indices, step * substeps + s, d)
    db = np.sqrt(dt / substeps) * db
    nd = np.sum(normal * diff, axis=1)
    nb = np.sum(normal * db, axis=1)
    drift = -lam * dt * (diff - nd[:, None] * normal)
    noise = (sigma * dist)[:, None] * (db - nb[:, None] * normal)
    corr = (0.5 * sigma * sigma * dist2 * lap * dt)[:, None] * normal
    x = pos + drift + noise - corr
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("non-finite particle position after update")
    defect = np.abs(manifold.sdf(x))
    if project:
        x = manifold.closest_point(x)
    return x, defect


def update_particles(manifold, pos, v, lam, sigma, dt, key, step, indices=None, project=True, substeps=1):
    """One Euler-Maruyama step for every particle against a frozen consensus ``v``.

    Returns ``(new_positions, defect)`` where ``defect[i]`` is |gamma| of the
    pre-projection point. Brownian increments for particle ``i`` are keyed by
    ``(key, indices[i], step)``; with ``substeps > 1`` the increment is the sum
    of ``substeps`` finer keyed increments, so runs at dt and dt/2 share one
    Brownian path.
    """
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    n = pos.shape[0]
    if indices is None:
        indices = np.arange(n, dtype=np.int64)
    else:
        indices = np.ascontiguousarray(indices, dtype=np.int64)
    if get_backend() == "numba" and manifold.kind != KIND_CUSTOM:
        out = np.empty_like(pos)
        defect = np.empty(n)
        status, bad = _update_nb(
            pos, v, float(lam), float(sigma), float(dt), int(substeps), np.uint64(key), int(step),
            indices, manifold.kind, manifold.kernel_params(), bool(project), out, defect,
        )
        if status == SINGULAR:
            raise SingularPoint(f"geometry undefined at particle {bad}")
        if status == DIVERGED:
            raise ProjectionDiverged(f"closest-point projection failed for particle {bad}; reduce dt")
        if status == NONFINITE:
            raise NonFiniteState(f"non-finite position for particle {bad}")
        return out, defect
    return _update_np(manifold, pos, v, lam, sigma, dt, int(substeps), np.uint64(key), int(step), indices, project)


@njit
def _diameter_nb(pos):
    n, d = pos.shape
    best = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.0
            for k in range(d):
                t = pos[i, k] - pos[j, k]
                s += t * t
            if s > best:
                best = s
    return np.sqrt(best)


def diameter(pos):
    """Largest pairwise Euclidean distance."""
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    if pos.shape[0] < 2:
        return 0.0
    if get_backend() == "numba":
        return float(_diameter_nb(pos))
    from scipy.spatial.distance import pdist

    return float(pdist(pos).max())
