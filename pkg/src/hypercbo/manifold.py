"""Hypersurfaces given as zero level sets of signed distance functions.

All geometric methods are vectorized: a point is an array whose last axis has
length ``dim``; leading axes are batch axes.
"""
import numpy as np

from .errors import OffManifold, ParseError, ProjectionDiverged, SingularPoint, UnsupportedSampler
from .rng import INIT_STREAM, KeyedRNG

# Kernel codes for the compiled update step.
KIND_CUSTOM = 0
KIND_SPHERE = 1
KIND_TORUS = 2

ON_MANIFOLD_TOL = 1e-8
PROJECTION_TOL = 1e-12
PROJECTION_MAX_ITER = 5


class Manifold:
    """Base class. Subclasses provide ``sdf``, ``grad`` and ``laplacian``."""

    kind = KIND_CUSTOM
    dim = None
    name = "custom"

    def kernel_params(self):
        return np.zeros(0)

    def _as_points(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}, got shape {v.shape}")
        return v

    def project_tangent(self, v, y):
        """Apply P(v) = I - n n^T to ``y`` where n is the unit normal at ``v``.

        ``v`` must lie on the surface (|gamma(v)| <= 1e-8).
        """
        v = self._as_points(v)
        y = np.asarray(y, dtype=np.float64)
        defect = np.max(np.abs(self.sdf(v)))
        if defect > ON_MANIFOLD_TOL:
            raise OffManifold(f"base point is {defect:.3g} away from the surface")
        n = self.grad(v)
        return y - np.sum(n * y, axis=-1, keepdims=True) * n

    def closest_point(self, v, tol=PROJECTION_TOL, max_iter=PROJECTION_MAX_ITER):
        """Closest-point map v -> v - gamma(v) grad gamma(v), iterated until
        |gamma| <= tol. Raises ProjectionDiverged after ``max_iter`` steps."""
        x = np.array(self._as_points(v), dtype=np.float64)
        g = self.sdf(x)
        for _ in range(max_iter):
            bad = np.abs(g) > tol
            if not np.any(bad):
                return x
            if x.ndim == 1:
                x = x - g * self.grad(x)
            else:
                xb = x[bad]
                x[bad] = xb - g[bad][:, None] * self.grad(xb)
            g = self.sdf(x)
        if np.any(np.abs(g) > tol):
            raise ProjectionDiverged(
                f"closest-point projection left |gamma| = {np.max(np.abs(g)):.3g} after {max_iter} iterations"
            )
        return x

    def sample_uniform(self, n, rng):
        raise UnsupportedSampler(f"{self.name} has no uniform sampler")

    def spec_string(self):
        raise NotImplementedError


class Sphere(Manifold):
    """Sphere ``|v| = radius`` in R^dim."""

    kind = KIND_SPHERE
    name = "sphere"

    def __init__(self, radius=1.0, dim=3):
        if not radius > 0:
            raise ValueError("sphere radius must be positive")
        if int(dim) < 2:
            raise ValueError("ambient dimension must be >= 2")
        self.radius = float(radius)
        self.dim = int(dim)

    def kernel_params(self):
        return np.array([self.radius])

    def _norm(self, v):
        v = self._as_points(v)
        r = np.linalg.norm(v, axis=-1)
        if np.any(r == 0.0):
            raise SingularPoint("signed distance of a sphere is singular at its center")
        return v, r

    def sdf(self, v):
        _, r = self._norm(v)
        return r - self.radius

    def grad(self, v):
        v, r = self._norm(v)
        return v / r[..., None]

    def laplacian(self, v):
        _, r = self._norm(v)
        return (self.dim - 1) / r

    def closest_point(self, v, tol=PROJECTION_TOL, max_iter=PROJECTION_MAX_ITER):
        v, r = self._norm(v)
        return self.radius * v / r[..., None]

    def sample_uniform(self, n, rng, indices=None):
        """Normalized standard Gaussians.

        ``rng`` is a :class:`numpy.random.Generator` or a :class:`KeyedRNG`;
        with the latter, draws are keyed by ``indices`` (default ``0..n-1``).
        """
        if isinstance(rng, KeyedRNG):
            idx = np.arange(n) if indices is None else np.asarray(indices)
            z = rng.normal(idx, INIT_STREAM, self.dim)
        else:
            z = rng.standard_normal((n, self.dim))
        return self.radius * z / np.linalg.norm(z, axis=1, keepdims=True)

    def geodesic_distance(self, u, v):
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        c = np.sum(u * v, axis=-1) / (np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1))
        return self.radius * np.arccos(np.clip(c, -1.0, 1.0))

    def spec_string(self):
        return f"sphere:radius={self.radius!r},dim={self.dim}"

    def __repr__(self):
        return f"Sphere(radius={self.radius}, dim={self.dim})"


class Torus(Manifold):
    """Torus in R^3, rotationally symmetric about the third axis.

    ``R`` is the distance from the axis to the tube center, ``r`` the tube
    radius (r < R).
    """

    kind = KIND_TORUS
    name = "torus"

    def __init__(self, R=1.0, r=0.5):
        if not (r > 0 and R > r):
            raise ValueError("torus radii must satisfy 0 < r < R")
        self.R = float(R)
        self.r = float(r)
        self.dim = 3

    def kernel_params(self):
        return np.array([self.R, self.r])

    def _parts(self, v):
        v = self._as_points(v)
        rho = np.hypot(v[..., 0], v[..., 1])
        q = np.hypot(rho - self.R, v[..., 2])
        if np.any(rho == 0.0) or np.any(q == 0.0):
            raise SingularPoint("torus signed distance is singular on the symmetry axis and the core circle")
        return v, rho, q

    def sdf(self, v):
        _, _, q = self._parts(v)
        return q - self.r

    def grad(self, v):
        v, rho, q = self._parts(v)
        s = (rho - self.R) / (q * rho)
        return np.stack([s * v[..., 0], s * v[..., 1], v[..., 2] / q], axis=-1)

    def laplacian(self, v):
        # Cylindrical coordinates: q is the planar distance to (R, 0), whose
        # planar Laplacian is 1/q, plus the first-order term q_rho / rho.
        _, rho, q = self._parts(v)
        return 1.0 / q + (rho - self.R) / (q * rho)

    def sample_uniform(self, n, rng, indices=None):
        """Uniform w.r.t. surface area, by rejection on the minor angle.

        The area element is proportional to R + r cos(theta); a candidate
        angle is accepted with probability (R + r cos theta) / (R + r).
        """
        if isinstance(rng, KeyedRNG):
            idx = np.arange(n) if indices is None else np.asarray(indices)
            phi = np.empty(len(idx))
            theta = np.empty(len(idx))
            pending = np.arange(len(idx))
            attempt = 0
            while pending.size:
                u = rng.uniform(idx[pending], INIT_STREAM + attempt, 3)
                th = 2.0 * np.pi * u[:, 1]
                ok = u[:, 2] * (self.R + self.r) <= self.R + self.r * np.cos(th)
                phi[pending[ok]] = 2.0 * np.pi * u[ok, 0]
                theta[pending[ok]] = th[ok]
                pending = pending[~ok]
                attempt += 1
        else:
            phi = np.empty(0)
            theta = np.empty(0)
            while theta.size < n:
                m = 2 * (n - theta.size) + 16
                th = rng.uniform(0.0, 2.0 * np.pi, m)
                keep = rng.uniform(0.0, self.R + self.r, m) <= self.R + self.r * np.cos(th)
                theta = np.concatenate([theta, th[keep]])
                phi = np.concatenate([phi, rng.uniform(0.0, 2.0 * np.pi, m)[keep]])
            theta, phi = theta[:n], phi[:n]
        w = self.R + self.r * np.cos(theta)
        return np.stack([w * np.cos(phi), w * np.sin(phi), self.r * np.sin(theta)], axis=1)

    def minor_angle(self, v):
        v = self._as_points(v)
        rho = np.hypot(v[..., 0], v[..., 1])
        return np.arctan2(v[..., 2], rho - self.R)

    def spec_string(self):
        return f"torus:R={self.R!r},r={self.r!r}"

    def __repr__(self):
        return f"Torus(R={self.R}, r={self.r})"


class CustomManifold(Manifold):
    """Surface defined by user callbacks.

    Parameters
    ----------
    sdf, grad : callable
        Vectorized over leading axes: ``sdf(v)`` maps ``(..., dim)`` to
        ``(...)`` and ``grad(v)`` maps ``(..., dim)`` to ``(..., dim)``.
    dim : int
        Ambient dimension.
    laplacian : callable, optional
        Analytic Laplacian of the SDF. When omitted, a central second
        difference of ``sdf`` with step ``1e-4 * scale`` is used.
    sampler : callable, optional
        ``sampler(n, rng) -> (n, dim)`` uniform surface sampler.
    scale : float
        Characteristic length of the surface; sets the finite-difference step.
    """

    def __init__(self, sdf, grad, dim, laplacian=None, sampler=None, scale=1.0, name="custom"):
        if int(dim) < 2:
            raise ValueError("ambient dimension must be >= 2")
        self._sdf = sdf
        self._grad = grad
        self._lap = laplacian
        self._sampler = sampler
        self.dim = int(dim)
        self.scale = float(scale)
        self.name = name

    def sdf(self, v):
        return np.asarray(self._sdf(self._as_points(v)), dtype=np.float64)

    def grad(self, v):
        return np.asarray(self._grad(self._as_points(v)), dtype=np.float64)

    def laplacian(self, v):
        v = self._as_points(v)
        if self._lap is not None:
            return np.asarray(self._lap(v), dtype=np.float64)
        h = 1e-4 * self.scale
        center = self.sdf(v)
        total = -2.0 * self.dim * center
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            total = total + self.sdf(v + e) + self.sdf(v - e)
        return total / h**2

    def sample_uniform(self, n, rng, indices=None):
        if self._sampler is None:
            raise UnsupportedSampler("custom manifold was created without a sampler")
        return np.asarray(self._sampler(n, rng), dtype=np.float64)

    def spec_string(self):
        return self.name


def parse_manifold(text):
    """Parse ``"sphere:radius=1,dim=3"`` or ``"torus:R=1,r=0.5"``."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        if not eq:
            raise ParseError(f"expected key=value, got {item!r}", field="manifold")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise ParseError(f"bad number {val!r} for {key.strip()!r}", field="manifold") from None
    try:
        if kind == "sphere":
            unknown = set(params) - {"radius", "dim"}
            if unknown:
                raise ParseError(f"unknown sphere parameters {sorted(unknown)}", field="manifold")
            dim = params.get("dim", 3)
            if dim != int(dim):
                raise ParseError("dim must be an integer", field="manifold")
            return Sphere(params.get("radius", 1.0), int(dim))
        if kind == "torus":
            unknown = set(params) - {"R", "r"}
            if unknown:
                raise ParseError(f"unknown torus parameters {sorted(unknown)}", field="manifold")
            return Torus(params.get("R", 1.0), params.get("r", 0.5))
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), field="manifold") from None
    raise ParseError(f"unknown manifold kind {kind!r}", field="manifold")
