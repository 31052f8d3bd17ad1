"""The energy A^h(Omega) = Area(boundary) - int_Omega h and its exact discrete derivatives.

Gradients are derivatives of the discrete energy itself (discretize, then
differentiate), so finite differences check the implementation rather than
the discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .grid import SphereGrid
from .prescription import N_DIM, Prescription, Truncated, sphere_area
from .region import (RADIAL_NODES, RADIAL_WEIGHTS, IntegrationError, StarRegion, area_element,
                     integrate_interior, outward_normal, ray_rule, slope_terms, split_radii)

_RAY_W = RADIAL_WEIGHTS * RADIAL_NODES**2
_RAY_W3 = RADIAL_WEIGHTS * RADIAL_NODES**3


@dataclass(frozen=True)
class EnergyBreakdown:
    area: float
    prescription_term: float
    total: float

    @classmethod
    def of(cls, area: float, term: float) -> "EnergyBreakdown":
        return cls(float(area), float(term), float(area - term))


@dataclass(frozen=True)
class ShapeGradient:
    d_log_radius: np.ndarray
    d_center: np.ndarray
    norm: float

    @property
    def dofs(self) -> np.ndarray:
        return np.concatenate([self.d_log_radius.ravel(), self.d_center])


class EnergyModel:
    """Energy of a region given as a flat DOF vector ``(u.ravel(), center)``.

    ``metric`` is ``None`` for the Euclidean metric, or any object exposing
    ``surface_weight``/``volume_weight`` and their gradients (a conformal metric).
    """

    def __init__(self, grid: SphereGrid, prescription: Prescription, metric=None):
        self.grid = grid
        self.prescription = prescription
        # a metric that is exactly flat takes the Euclidean code path (bit-identical results)
        self.metric = None if getattr(metric, "is_flat", False) else metric
        self.nu = grid.size

    def split(self, x):
        return x[:-3].reshape(self.grid.shape), x[-3:]

    def _evaluate(self, x, want_grad: bool):
        g = self.grid
        u, c = self.split(np.asarray(x, dtype=float))
        w = g.weights
        dirs = g.directions
        rho = np.exp(u)
        gt, gp, s = slope_terms(g, u)
        a = w * rho * rho
        dA = a * s
        metric = self.metric

        if metric is not None:
            bpts = c + rho[..., None] * dirs
            sw = metric.surface_weight(bpts)
            area = np.sum(dA * sw)
        else:
            sw = 1.0
            area = np.sum(dA)

        p = self.prescription
        wr3 = w * rho**3
        fast = metric is None and p.is_constant
        radii = () if fast else split_radii(c, rho, p.breaks)
        rule = None
        if fast:
            I = wr3 * (p.c / 3.0)
        elif radii:
            # rays reach a truncation shell: composite rule, outer piece dropped where h vanishes
            outer = p.support is None or p.support > radii[-1]
            rule = ray_rule(c, rho, dirs, radii, outer=outer, derivatives=want_grad)
            pts = c + rule.t[..., None] * dirs[:, :, None, :]
            if want_grad:
                hv, gF = p.value_and_grad(pts)
            else:
                hv = p.value(pts)
            F = hv * metric.volume_weight(pts) if metric is not None else hv
            if not np.all(np.isfinite(F)):
                idx = np.argwhere(~np.isfinite(F))[0]
                raise IntegrationError(f"non-finite integrand at point {pts[tuple(idx)].tolist()}")
            I = w * np.sum(rule.w * F, axis=-1)
        else:
            pts = c + (rho[..., None] * RADIAL_NODES)[..., None] * dirs[:, :, None, :]
            if want_grad:
                hv, gF = p.value_and_grad(pts)
            else:
                hv = p.value(pts)
            F = hv * metric.volume_weight(pts) if metric is not None else hv
            if not np.all(np.isfinite(F)):
                idx = np.argwhere(~np.isfinite(F))[0]
                raise IntegrationError(f"non-finite integrand at point {pts[tuple(idx)].tolist()}")
            I = wr3 * (F @ _RAY_W)
        term = np.sum(I)
        if not want_grad:
            return area, term, None

        q = a * sw / s
        gu = 2.0 * dA * sw + g.d_theta_adjoint(q * gt) + g.d_phi_adjoint(q * gp / g.sin_theta[:, None])
        gc = np.zeros(3)
        if metric is not None:
            gsw = metric.surface_weight_grad(bpts)
            gu = gu + dA * rho * np.sum(gsw * dirs, axis=-1)
            gc += np.einsum("ij,ijk->k", dA, gsw)

        if fast:
            gu = gu - 3.0 * I
        elif rule is not None:
            if metric is not None:
                gF = gF * metric.volume_weight(pts)[..., None] + hv[..., None] * metric.volume_weight_grad(pts)
            gFd = np.einsum("ijrk,ijk->ijr", gF, dirs)
            gu = gu - w * rho * np.sum(rule.dw_drho * F + rule.w * gFd * rule.dt_drho, axis=-1)
            dc = rule.dw_dc * F[..., None] + (rule.w * gFd)[..., None] * rule.dt_dc + rule.w[..., None] * gF
            gc -= np.einsum("ij,ijrk->k", w, dc)
        else:
            if metric is not None:
                gF = gF * metric.volume_weight(pts)[..., None] + hv[..., None] * metric.volume_weight_grad(pts)
            radial = np.einsum("ijrk,ijk->ijr", gF, dirs) @ _RAY_W3
            gu = gu - (3.0 * I + wr3 * rho * radial)
            gc -= np.einsum("ij,ijrk,r->k", wr3, gF, _RAY_W)
        return area, term, np.concatenate([gu.ravel(), gc])

    def breakdown(self, x) -> EnergyBreakdown:
        area, term, _ = self._evaluate(x, False)
        return EnergyBreakdown.of(area, term)

    def value(self, x) -> float:
        area, term, _ = self._evaluate(x, False)
        return float(area - term)

    def value_and_grad(self, x):
        area, term, grad = self._evaluate(x, True)
        return float(area - term), grad

    def grad(self, x) -> np.ndarray:
        return self._evaluate(x, True)[2]

    def hvp(self, x, v, eps: float = 1e-6) -> np.ndarray:
        """Hessian-vector product by central differences of the exact gradient."""
        nv = np.max(np.abs(v))
        if nv == 0:
            return np.zeros_like(v)
        h = eps / nv
        return (self.grad(x + h * v) - self.grad(x - h * v)) / (2.0 * h)


def _model(region: StarRegion, prescription: Prescription, metric=None) -> EnergyModel:
    return EnergyModel(region.grid, prescription, metric)


def energy(region: StarRegion, prescription: Prescription, metric=None) -> EnergyBreakdown:
    return _model(region, prescription, metric).breakdown(region.dofs)


def gradient(region: StarRegion, prescription: Prescription, metric=None) -> ShapeGradient:
    gvec = _model(region, prescription, metric).grad(region.dofs)
    w = region.grid.weights
    gu = gvec[:-3].reshape(region.grid.shape)
    norm = float(np.sqrt(np.sum(gu**2 / w) + np.sum(gvec[-3:] ** 2)))
    return ShapeGradient(gu, gvec[-3:].copy(), norm)


def area_gradient(region: StarRegion) -> np.ndarray:
    g = region.grid
    u = region.log_radius
    gt, gp, s = slope_terms(g, u)
    a = g.weights * np.exp(2.0 * u)
    q = a / s
    return 2.0 * a * s + g.d_theta_adjoint(q * gt) + g.d_phi_adjoint(q * gp / g.sin_theta[:, None])


def mean_curvature(region: StarRegion) -> np.ndarray:
    """Discrete scalar mean curvature (sum of principal curvatures) at boundary nodes.

    Area gradient density with respect to normal displacement: a log-radius
    change du moves the boundary normally by rho du / s over measure w rho^2 s.
    """
    return area_gradient(region) / (region.grid.weights * region.radius**3)


def pmc_residual(region: StarRegion, prescription: Prescription) -> np.ndarray:
    """H - h at the boundary nodes."""
    return mean_curvature(region) - prescription.value(region.boundary_points)


def first_variation(region: StarRegion, prescription: Prescription, X, metric=None) -> float:
    """Derivative of the energy along the boundary motion with velocity field X.

    Only the normal component moves a radial graph to first order; it is
    converted to a log-radius velocity s (X . nu) / rho.
    """
    pts = region.boundary_points
    Xv = np.asarray(X(pts), dtype=float)
    if not np.all(np.isfinite(Xv)):
        raise IntegrationError("vector field not evaluable on the boundary")
    nu = outward_normal(region)
    _, _, s = slope_terms(region.grid, region.log_radius)
    du = s * np.sum(Xv * nu, axis=-1) / region.radius
    g = gradient(region, prescription, metric)
    return float(np.sum(g.d_log_radius * du))


def homothety_derivative(region: StarRegion, prescription: Prescription) -> float:
    """d/ds at s = 1 of A^h(s Omega): n Area - int_Omega div(h x)."""
    n = region.grid.n

    def div_hx(x):
        return (n + 1) * prescription.value(x) + np.sum(prescription.grad(x) * x, axis=-1)

    return float(n * np.sum(area_element(region.grid, region.log_radius))
                 - integrate_interior(region, div_hx, prescription.breaks))


def homothety_fd(region: StarRegion, prescription: Prescription, step: float = 1e-5) -> float:
    from .region import scale
    e = lambda s: energy(scale(region, s), prescription).total  # noqa: E731
    return (e(1.0 + step) - e(1.0 - step)) / (2.0 * step)


def translation_derivative(region: StarRegion, prescription: Prescription, direction) -> float:
    e = np.asarray(direction, dtype=float)
    return -integrate_interior(region, lambda x: prescription.grad(x) @ e, prescription.breaks)


def transition_mass(region: StarRegion, truncation: Truncated) -> float:
    return integrate_interior(region, truncation.transition_density, truncation.breaks)


def isoperimetric_constant(n: int = N_DIM) -> float:
    """Sharp C with Area >= C Vol^(n/(n+1)) in R^(n+1)."""
    wn = sphere_area(n)
    return wn * (wn / (n + 1)) ** (-n / (n + 1))


def isoperimetric_certificate(n: int, M: float) -> tuple[float, float]:
    """Volume v and barrier a with A^h >= a on {Vol = v} whenever h <= M.

    Maximizes C V^(n/(n+1)) - M V over V.
    """
    if M <= 0:
        raise ValueError("sup h must be positive")
    C = isoperimetric_constant(n)
    v = (C * n / ((n + 1) * M)) ** (n + 1)
    a = C * v ** (n / (n + 1)) / (n + 1)
    return float(v), float(a)


@dataclass(frozen=True)
class HessianSpectrum:
    eigenvalues: np.ndarray  # mass-normalized, ascending (lowest part only for large grids)
    negative: int
    zero: int
    threshold: float


def radial_hessian(region: StarRegion, prescription: Prescription, metric=None,
                   threshold: float = 1e-8, dense_max: int = 2048, k: int = 10) -> HessianSpectrum:
    """Spectrum of the energy Hessian in the log-radius DOFs.

    The Hessian is normalized by the mass M = w rho^4 (squared normal
    displacement), so a sphere of radius r critical for A^c has eigenvalues
    (l(l+1) - 2) / r^2. Translations give three near-zero modes. The azimuthal
    Nyquist mode is excluded: the grid carries no derivative information for it.
    """
    model = _model(region, prescription, metric)
    grid = region.grid
    x0 = region.dofs
    N = grid.size
    minv = 1.0 / np.sqrt((grid.weights * region.radius**4).ravel())
    # azimuthal Nyquist directions, orthogonal in the scaled coordinates (disjoint rows)
    a = (minv.reshape(grid.shape) * grid.nyquist_pattern[None, :])
    a2 = np.sum(a * a, axis=1)
    shift = 1e6

    def proj(y):
        y = y.reshape(grid.shape)
        return (y - a * ((y * a).sum(axis=1) / a2)[:, None]).ravel()

    def hv(v):
        pv = proj(v)
        full = np.concatenate([minv * pv, np.zeros(3)])
        return proj(minv * model.hvp(x0, full)[:N]) + shift * (v - pv)

    if N <= dense_max:
        H = np.empty((N, N))
        for j in range(N):
            e = np.zeros(N)
            e[j] = 1.0
            H[:, j] = hv(e)
        H = 0.5 * (H + H.T)
        lam = np.linalg.eigvalsh(H)[: N - grid.ntheta]
    else:
        op = LinearOperator((N, N), matvec=hv, dtype=float)
        lam = np.sort(eigsh(op, k=k, which="SA", tol=1e-10, return_eigenvectors=False))
    return HessianSpectrum(lam, int(np.sum(lam < -threshold)),
                           int(np.sum(np.abs(lam) <= threshold)), threshold)
