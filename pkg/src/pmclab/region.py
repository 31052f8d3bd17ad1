"""Star-shaped regions as radial graphs over a :class:`SphereGrid`.

A region is a center ``c`` and a log-radius field ``u`` over the grid nodes;
its boundary is ``{c + exp(u(d)) d}``. All geometric quantities are computed
with discrete formulas that are exactly differentiable in ``(u, c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _accel
from .grid import SphereGrid

RHO_MIN = 1e-3  # radius of the empty-set proxy ball
RADIAL_ORDER = 16

_xi, _eta = np.polynomial.legendre.leggauss(RADIAL_ORDER)
RADIAL_NODES = 0.5 * (_xi + 1.0)
RADIAL_WEIGHTS = 0.5 * _eta

# nodes for ray segments inside a truncation shell, where the integrand is
# smooth but not analytic and 16 nodes over a whole ray resolve it poorly
SHELL_ORDER = 48
_xs, _es = np.polynomial.legendre.leggauss(SHELL_ORDER)
SHELL_NODES = 0.5 * (_xs + 1.0)
SHELL_WEIGHTS = 0.5 * _es


class IntegrationError(FloatingPointError):
    """A non-finite integrand value was met at a quadrature point."""


@dataclass(frozen=True, eq=False)
class StarRegion:
    grid: SphereGrid
    center: np.ndarray
    log_radius: np.ndarray

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(3)
        u = np.array(self.log_radius, dtype=float)
        if u.shape != self.grid.shape:
            u = u.reshape(self.grid.shape)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(c))):
            raise ValueError("region fields must be finite")
        c.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "log_radius", u)

    @classmethod
    def ball(cls, grid: SphereGrid, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> "StarRegion":
        if radius <= 0:
            raise ValueError("radius must be positive")
        return cls(grid, np.asarray(center, float), np.full(grid.shape, np.log(radius)))

    @classmethod
    def empty_proxy(cls, grid: SphereGrid, center=(0.0, 0.0, 0.0)) -> "StarRegion":
        return cls.ball(grid, RHO_MIN, center)

    @classmethod
    def from_radius(cls, grid: SphereGrid, radius_fn: Callable, center=(0.0, 0.0, 0.0)):
        """Build from a function of unit directions ``(..., 3) -> radius``."""
        rho = np.asarray(radius_fn(grid.directions), dtype=float)
        return cls(grid, np.asarray(center, float), np.log(rho))

    @classmethod
    def from_dofs(cls, grid: SphereGrid, x: np.ndarray) -> "StarRegion":
        return cls(grid, x[-3:], x[:-3].reshape(grid.shape))

    @property
    def dofs(self) -> np.ndarray:
        return np.concatenate([self.log_radius.ravel(), self.center])

    @property
    def radius(self) -> np.ndarray:
        return np.exp(self.log_radius)

    @property
    def boundary_points(self) -> np.ndarray:
        return self.center + self.radius[..., None] * self.grid.directions

    @property
    def support_radius(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius.max())

    def same_as(self, other: "StarRegion") -> bool:
        return (self.grid == other.grid and np.array_equal(self.center, other.center)
                and np.array_equal(self.log_radius, other.log_radius))


@dataclass
class RegionPath:
    """Discrete mountain pass path: regions at strictly increasing t in [0, 1]."""

    regions: list
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        m = len(self.regions)
        if m < 2:
            raise ValueError("a path needs at least 2 nodes")
        if self.t is None:
            self.t = np.linspace(0.0, 1.0, m)
        self.t = np.asarray(self.t, dtype=float)
        if self.t.shape != (m,) or self.t[0] != 0.0 or self.t[-1] != 1.0 or np.any(np.diff(self.t) <= 0):
            raise ValueError("node parameters must increase strictly from 0 to 1")
        g = self.regions[0].grid
        if any(r.grid != g for r in self.regions):
            raise ValueError("all path nodes must share one grid")
        if self.regions[0].support_radius > RHO_MIN + np.linalg.norm(self.regions[0].center) + 1e-12:
            raise ValueError("first node must be the empty-set proxy")

    def __len__(self) -> int:
        return len(self.regions)

    @property
    def grid(self) -> SphereGrid:
        return self.regions[0].grid


# ---------------------------------------------------------------------------
# geometric building blocks shared with the functional module


def slope_terms(grid: SphereGrid, u: np.ndarray):
    """Tangential gradient of ``u`` and the factor s = sqrt(1 + |grad u|^2)."""
    gt, gp = grid.surface_gradient(u)
    s = np.sqrt(1.0 + gt * gt + gp * gp)
    return gt, gp, s


def area_element(grid: SphereGrid, u: np.ndarray) -> np.ndarray:
    """Per-node surface measure ``w rho^2 s``."""
    _, _, s = slope_terms(grid, u)
    return grid.weights * np.exp(2.0 * u) * s


def outward_normal(region: StarRegion) -> np.ndarray:
    g = region.grid
    gt, gp, s = slope_terms(g, region.log_radius)
    nu = g.directions - gt[..., None] * g.e_theta - gp[..., None] * g.e_phi
    return nu / s[..., None]


def radial_points(region: StarRegion) -> np.ndarray:
    """Interior quadrature points, shape ``(ntheta, nphi, RADIAL_ORDER, 3)``."""
    rho = region.radius
    return (region.center
            + (rho[..., None] * RADIAL_NODES)[..., None] * region.grid.directions[:, :, None, :])


@dataclass(frozen=True)
class RayRule:
    """Composite Gauss rule on every ray, split where the rays cross given spheres.

    ``t`` holds distances from the center and ``w`` the weights including the
    t^2 Jacobian (grid weights excluded). The ``d*`` fields are derivatives of
    ``t`` and ``w`` in the ray radius rho and in the center; they are ``None``
    when not requested.
    """

    t: np.ndarray
    w: np.ndarray
    dt_drho: np.ndarray | None = None
    dw_drho: np.ndarray | None = None
    dt_dc: np.ndarray | None = None
    dw_dc: np.ndarray | None = None


def split_radii(center: np.ndarray, rho: np.ndarray, breaks) -> tuple:
    """The break radii to split at, or () when no ray reaches them.

    Splitting needs every ray to cross each sphere exactly once, so the
    center must lie inside the smallest one.
    """
    if not breaks:
        return ()
    r0 = breaks[0]
    cn = float(np.sqrt(center @ center))
    if cn >= r0 or cn + float(rho.max()) <= r0:
        return ()
    return tuple(breaks)


def ray_rule(center: np.ndarray, rho: np.ndarray, directions: np.ndarray, breaks,
             outer: bool = True, derivatives: bool = False) -> RayRule:
    """Gauss nodes on [0, t_1], [t_1, t_2], ..., [t_k, rho], each end clamped to rho.

    t_j is where the ray leaves the origin-centered sphere of radius breaks[j].
    Segments between breaks get the shell rule; the outer segment is dropped
    when ``outer`` is false (integrand known to vanish there).
    """
    shape = rho.shape
    zero, one = np.zeros(shape), np.ones(shape)
    ends = [(zero, zero, np.zeros(shape + (3,)))]
    for r in breaks:
        tk = ray_exit_distance(center, directions, r)
        inside = rho <= tk
        e = np.where(inside, rho, tk)
        if derivatives:
            x = center + tk[..., None] * directions
            dtk_dc = -x / np.sum(x * directions, axis=-1)[..., None]
            ends.append((e, inside.astype(float), np.where(inside[..., None], 0.0, dtk_dc)))
        else:
            ends.append((e, None, None))
    if outer:
        ends.append((rho, one, np.zeros(shape + (3,))))
    parts = []
    for k in range(len(ends) - 1):
        (a, da_r, da_c), (b, db_r, db_c) = ends[k], ends[k + 1]
        shell = 0 < k < len(breaks)
        xi, eta = (SHELL_NODES, SHELL_WEIGHTS) if shell else (RADIAL_NODES, RADIAL_WEIGHTS)
        L = (b - a)[..., None]
        t = a[..., None] + L * xi
        w = L * eta * t * t
        if not derivatives:
            parts.append((t, w))
            continue
        dt_r = da_r[..., None] * (1.0 - xi) + db_r[..., None] * xi
        dw_r = (db_r - da_r)[..., None] * eta * t * t + 2.0 * L * eta * t * dt_r
        dt_c = da_c[..., None, :] * (1.0 - xi)[:, None] + db_c[..., None, :] * xi[:, None]
        dw_c = (db_c - da_c)[..., None, :] * (eta * t * t)[..., None] + (2.0 * L * eta * t)[..., None] * dt_c
        parts.append((t, w, dt_r, dw_r, dt_c, dw_c))
    cat = [np.concatenate(f, axis=2) for f in zip(*parts)]
    return RayRule(*cat)


def _check_finite(values: np.ndarray, points: np.ndarray):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise IntegrationError(f"non-finite integrand at point {points[tuple(idx)].tolist()}")


# ---------------------------------------------------------------------------
# operations


def area(region: StarRegion) -> float:
    return float(np.sum(area_element(region.grid, region.log_radius)))


def volume(region: StarRegion) -> float:
    g = region.grid
    return float(np.sum(g.weights * np.exp(3.0 * region.log_radius)) / (g.n + 1))


def integrate_interior(region: StarRegion, f: Callable, breaks=()) -> float:
    """Integrate ``f(points)`` over the region with a Gauss rule on every ray.

    ``breaks`` lists origin-centered sphere radii across which ``f`` is rough
    (a truncation shell); rays are split there when possible.
    """
    g = region.grid
    rho = region.radius
    radii = split_radii(region.center, rho, breaks)
    if radii:
        rule = ray_rule(region.center, rho, g.directions, radii)
        pts = region.center + rule.t[..., None] * g.directions[:, :, None, :]
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        return float(np.sum(g.weights * np.sum(rule.w * vals, axis=-1)))
    pts = radial_points(region)
    vals = np.asarray(f(pts), dtype=float)
    _check_finite(vals, pts)
    ray = vals @ (RADIAL_WEIGHTS * RADIAL_NODES**2)
    return float(np.sum(g.weights * np.exp(3.0 * region.log_radius) * ray))


def integrate_boundary(region: StarRegion, f: Callable) -> float:
    """Integrate ``f(points)`` or ``f(points, normals)`` over the boundary."""
    pts = region.boundary_points
    try:
        vals = f(pts, outward_normal(region))
    except TypeError:
        vals = f(pts)
    vals = np.asarray(vals, dtype=float)
    _check_finite(vals, pts)
    return float(np.sum(area_element(region.grid, region.log_radius) * vals))


def barycenter(region: StarRegion) -> np.ndarray:
    g = region.grid
    m4 = g.weights * np.exp(4.0 * region.log_radius) / 4.0
    return region.center + np.einsum("ij,ijk->k", m4, g.directions) / volume(region)


def scale(region: StarRegion, s: float) -> StarRegion:
    if s <= 0:
        raise ValueError("scale factor must be positive")
    if s == 1:
        return region
    return StarRegion(region.grid, s * region.center, region.log_radius + np.log(s))


def translate(region: StarRegion, vector) -> StarRegion:
    return StarRegion(region.grid, region.center + np.asarray(vector, float), region.log_radius)


def recenter(region: StarRegion, new_center) -> tuple[StarRegion, bool]:
    """Resample the radial field about ``new_center``.

    Returns the resampled region and a flag that is False when some ray from
    the new center does not cross the boundary exactly once.
    """
    p = np.asarray(new_center, float)
    if np.array_equal(p, region.center):
        return region, True
    g = region.grid
    offset = p - region.center
    tmax = np.linalg.norm(offset) + region.radius.max() * 1.05 + 1e-12
    roots, ok = _accel.resample_rays(region.log_radius, g.theta, offset,
                                     g.directions.reshape(-1, 3), nscan=48, tmax=tmax)
    # a boundary through the new center is not star-shaped about it
    ok = bool(np.all(ok)) and bool(np.all(roots > 1e-9 * tmax))
    roots = np.maximum(roots, 1e-300)
    return StarRegion(g, p, np.log(roots).reshape(g.shape)), ok


def contains(region: StarRegion, points: np.ndarray) -> np.ndarray:
    return _accel.inside(region.log_radius, region.grid.theta, region.center, points)


@dataclass(frozen=True)
class FlatDistance:
    value: float
    method: str  # "same-center", "resampled" or "monte-carlo"
    stderr: float = 0.0

    def __float__(self) -> float:
        return self.value


def _same_center_distance(a: StarRegion, b: StarRegion) -> float:
    g = a.grid
    n1 = g.n + 1
    return float(np.sum(g.weights * np.abs(np.exp(n1 * a.log_radius) - np.exp(n1 * b.log_radius))) / n1)


def flat_distance(a: StarRegion, b: StarRegion, samples: int = 400_000, seed: int = 0) -> FlatDistance:
    """Volume of the symmetric difference of two regions on the same grid."""
    if a.grid != b.grid:
        raise ValueError("regions must share a grid")
    if np.array_equal(a.center, b.center):
        return FlatDistance(_same_center_distance(a, b), "same-center")
    b2, ok = recenter(b, a.center)
    if ok:
        return FlatDistance(_same_center_distance(a, b2), "resampled")
    return monte_carlo_flat_distance(a, b, samples, seed)


def monte_carlo_flat_distance(a: StarRegion, b: StarRegion, samples: int = 400_000,
                              seed: int = 0) -> FlatDistance:
    mid = 0.5 * (a.center + b.center)
    R = max(np.linalg.norm(a.center - mid) + a.radius.max(),
            np.linalg.norm(b.center - mid) + b.radius.max())
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(samples, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = R * rng.random(samples) ** (1.0 / 3.0)
    pts = mid + r[:, None] * d
    diff = contains(a, pts) != contains(b, pts)
    f = diff.mean()
    vball = 4.0 * np.pi * R**3 / 3.0
    return FlatDistance(float(vball * f), "monte-carlo", float(vball * np.sqrt(f * (1 - f) / samples)))


def ray_exit_distance(center: np.ndarray, directions: np.ndarray, barrier: float) -> np.ndarray:
    """Distance along each ray from ``center`` to the sphere of radius ``barrier``."""
    cd = directions @ center
    return -cd + np.sqrt(cd * cd - center @ center + barrier * barrier)


def clip_to_ball(region: StarRegion, barrier_radius: float) -> StarRegion:
    """Intersect the region with the origin-centered ball of the given radius.

    When the region's center lies inside the ball the intersection is again
    star-shaped about that center and the clipped radius is exact per ray.
    """
    c = region.center
    if c @ c >= barrier_radius**2:
        moved, ok = recenter(region, np.zeros(3))
        if not ok:
            raise ValueError("region center outside the barrier ball and not star-shaped about 0")
        region, c = moved, moved.center
    exit_r = ray_exit_distance(c, region.grid.directions, barrier_radius)
    u = np.minimum(region.log_radius, np.log(exit_r))
    if np.array_equal(u, region.log_radius):
        return region
    return StarRegion(region.grid, c, u)


# ---------------------------------------------------------------------------
# snapshot file


def write_snapshot(region: StarRegion, path) -> Path:
    path = Path(path)
    g = region.grid
    head = [str(g.n), str(g.ntheta), str(g.nphi)] + [repr(float(x)) for x in region.center]
    lines = [" ".join(head)] + [repr(float(x)) for x in region.log_radius.ravel()]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot(path, grid: SphereGrid | None = None) -> StarRegion:
    lines = Path(path).read_text().split("\n")
    head = lines[0].split()
    if len(head) != 6:
        raise ValueError("snapshot header must hold n, ntheta, nphi and 3 center coordinates")
    n, nt, npf = (int(x) for x in head[:3])
    if grid is None or grid.shape != (nt, npf):
        grid = SphereGrid(nt, npf, n)
    vals = np.array([float(x) for x in lines[1:] if x.strip()])
    if vals.size != nt * npf:
        raise ValueError(f"expected {nt * npf} log-radius values, found {vals.size}")
    return StarRegion(grid, np.array([float(x) for x in head[3:]]), vals.reshape(nt, npf))


def path_from_dofs(grid: SphereGrid, xs: Sequence[np.ndarray], t=None) -> RegionPath:
    return RegionPath([StarRegion.from_dofs(grid, x) for x in xs], t)


def regrid(region: StarRegion, grid: SphereGrid) -> StarRegion:
    """Transfer a region to another grid by interpolating its log-radius field."""
    if grid == region.grid:
        return region
    u = _accel.interp_field(region.log_radius, region.grid.theta, grid.directions.reshape(-1, 3))
    return StarRegion(grid, region.center, u.reshape(grid.shape))
