"""Conformally flat metrics g_t = (1 + t v)^4 g_euc on R^3 and their diagnostics.

A radial profile ``v`` with ``v ~ 1/r`` gives an asymptotically flat metric.
Areas carry the weight psi^4 and volumes psi^6, psi = 1 + t v(|x|). The
module provides the metric weights consumed by :class:`EnergyModel`,
closed-form coordinate-sphere quantities, and the radial certificate phi(r)
whose sign decides whether the unit ball's energy drops below 4 pi / 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .functional import EnergyBreakdown, energy
from .prescription import Constant, _norm, h4_threshold
from .region import StarRegion


class ConformalFactor:
    """Radial profile v(r) with derivative and 3-D Laplacian v'' + 2 v' / r."""

    name = "base"
    asymptotics = "v ~ 1/r"

    def v(self, r):
        raise NotImplementedError

    def dv(self, r):
        raise NotImplementedError

    def laplacian(self, r):
        raise NotImplementedError

    def __reduce__(self):
        return (type(self), self._args())

    def _args(self):
        return ()


class InverseSqrtProfile(ConformalFactor):
    """v(r) = (1 + r^2)^(-1/2); smooth at the origin with Laplacian -3 (1 + r^2)^(-5/2)."""

    name = "inverse-sqrt"

    def v(self, r):
        r = np.asarray(r, dtype=float)
        return 1.0 / np.sqrt(1.0 + r * r)

    def dv(self, r):
        r = np.asarray(r, dtype=float)
        return -r * (1.0 + r * r) ** -1.5

    def laplacian(self, r):
        r = np.asarray(r, dtype=float)
        return -3.0 * (1.0 + r * r) ** -2.5


class UniformBallProfile(ConformalFactor):
    """Potential of a uniform ball of radius a: exactly 1/r for r >= a.

    Inside, v = (3 - r^2/a^2) / (2a), so v is C^1 with Laplacian -3/a^3 < 0 on
    B_a and 0 outside.
    """

    name = "uniform-ball"

    def __init__(self, a: float = 2.0):
        if a <= 0:
            raise ValueError("ball radius must be positive")
        self.a = float(a)

    def _args(self):
        return (self.a,)

    def v(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        a = self.a
        inner = (3.0 - (r / a) ** 2) / (2.0 * a)
        return np.where(r < a, inner, 1.0 / np.maximum(r, a))

    def dv(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        a = self.a
        return np.where(r < a, -r / a**3, -1.0 / np.maximum(r, a) ** 2)

    def laplacian(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        return np.where(r < self.a, -3.0 / self.a**3, 0.0)


PROFILES = {"inverse-sqrt": InverseSqrtProfile, "uniform-ball": UniformBallProfile}


def make_profile(name: str, params=()) -> ConformalFactor:
    try:
        cls = PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown conformal profile {name!r}") from None
    return cls(*(float(p) for p in params))


class ConformalMetric:
    """g_t = psi^4 g_euc with psi = 1 + t v(|x|)."""

    def __init__(self, profile: ConformalFactor, t: float):
        if t < 0:
            raise ValueError("t must be non-negative")
        self.profile = profile
        self.t = float(t)

    def __reduce__(self):
        return (ConformalMetric, (self.profile, self.t))

    @property
    def is_flat(self) -> bool:
        return self.t == 0.0

    def psi(self, x):
        return 1.0 + self.t * self.profile.v(_norm(x))

    def _dpsi(self, x):
        r = _norm(x)
        safe = np.where(r > 0, r, 1.0)
        return (self.t * self.profile.dv(r) / safe)[..., None] * x

    def surface_weight(self, x):
        return self.psi(x) ** 4

    def volume_weight(self, x):
        return self.psi(x) ** 6

    def surface_weight_grad(self, x):
        return (4.0 * self.psi(x) ** 3)[..., None] * self._dpsi(x)

    def volume_weight_grad(self, x):
        return (6.0 * self.psi(x) ** 5)[..., None] * self._dpsi(x)

    # radial closed forms for coordinate spheres
    def _radial(self, r):
        if np.any(np.asarray(r) <= 0):
            raise ValueError("radius must be positive")
        r = np.asarray(r, dtype=float)
        return r, 1.0 + self.t * self.profile.v(r), self.t * self.profile.dv(r)


def metric_energy(region: StarRegion, c: float, metric: ConformalMetric | None) -> EnergyBreakdown:
    """A^c under g_t: psi^4-weighted area minus c times psi^6-weighted volume."""
    return energy(region, Constant(c), metric)


def dt_energy_at_zero(profile: ConformalFactor) -> float:
    """d/dt of A^2_{g_t}(B_1) at t = 0: 16 pi v(1) - 48 pi int_0^1 v r^2 dr."""
    J, _ = quad(lambda s: float(profile.v(s)) * s * s, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return float(16.0 * np.pi * profile.v(1.0) - 48.0 * np.pi * J)


def _moment(profile: ConformalFactor, r: float) -> float:
    J, _ = quad(lambda s: float(profile.v(s)) * s * s, 0.0, r, epsabs=1e-15, epsrel=1e-13, limit=200)
    return J


def phi(profile: ConformalFactor, r: float) -> float:
    """Sphere average minus ball average of v, with the common factor 4 pi removed.

    phi(r) = v(r) - (3 / r^3) int_0^r v(s) s^2 ds.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    return float(profile.v(r) - 3.0 * _moment(profile, r) / r**3)


@dataclass(frozen=True)
class ODEResidual:
    lhs: float  # r^3 phi' + 3 r^2 phi
    rhs: float  # r times the normalized integral of the Laplacian over B_r

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


def phi_ode_residual(profile: ConformalFactor, r: float) -> ODEResidual:
    """Both sides of r^3 phi' + 3 r^2 phi = r int_0^r (Lap v) s^2 ds.

    The left side differentiates phi through its moment integral, the right
    side integrates the Laplacian, so agreement checks both computations.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    J = _moment(profile, r)
    v = float(profile.v(r))
    ph = v - 3.0 * J / r**3
    dph = float(profile.dv(r)) + 9.0 * J / r**4 - 3.0 * v / r
    kink = getattr(profile, "a", None)
    pts = [kink] if kink is not None and kink < r else None
    L, _ = quad(lambda s: float(profile.laplacian(s)) * s * s, 0.0, r, epsabs=1e-15, epsrel=1e-13,
                limit=200, points=pts)
    return ODEResidual(float(r**3 * dph + 3.0 * r * r * ph), float(r * L))


def sphere_mean_curvature(metric: ConformalMetric, r):
    """Mean curvature of the coordinate sphere S_r: 2 / (r psi^2) + 4 psi' / psi^3."""
    r, p, dp = metric._radial(r)
    return 2.0 / (r * p * p) + 4.0 * dp / p**3


def normal_divergence(metric: ConformalMetric, r):
    """g-divergence of the unit radial field N = psi^-2 d/dr, evaluated on S_r."""
    r, p, dp = metric._radial(r)
    # (1 / (psi^6 r^2)) d/dr (r^2 psi^4)
    return (2.0 * r * p**4 + 4.0 * r * r * p**3 * dp) / (p**6 * r * r)


def lapse(metric: ConformalMetric, r):
    """Speed factor taking S_r to S_r' in time r' - r along N: psi^2."""
    _, p, _ = metric._radial(r)
    return p * p


def sphere_area(metric: ConformalMetric, r):
    r, p, _ = metric._radial(r)
    return 4.0 * np.pi * r * r * p**4


def sphere_volume(metric: ConformalMetric, r: float) -> float:
    val, _ = quad(lambda s: 4.0 * np.pi * s * s * float(1.0 + metric.t * metric.profile.v(s)) ** 6,
                  0.0, r, epsabs=1e-14, epsrel=1e-13)
    return float(val)


def fd_sphere_mean_curvature(metric: ConformalMetric, r: float, step: float = 1e-5) -> float:
    """Area derivative over volume derivative, both by finite differences in r."""
    dA = (sphere_area(metric, r + step) - sphere_area(metric, r - step)) / (2.0 * step)
    dV = (sphere_volume(metric, r + step) - sphere_volume(metric, r - step)) / (2.0 * step)
    return float(dA / dV)


def decay_constant(fn, metric: ConformalMetric, radii=None) -> float:
    """Smallest K with |r f(r) - 2| <= K / r on the sampled radii."""
    radii = np.geomspace(10.0, 100.0, 200) if radii is None else np.asarray(radii, dtype=float)
    return float(np.max(radii * np.abs(radii * fn(metric, radii) - 2.0)))


@dataclass
class ConformalReport:
    profile: str
    t: list
    width: list
    first_order: list
    margin: list
    decay_H: list
    decay_divN: list
    threshold: float = 4.0 * np.pi / 3.0
    epsilon_estimate: float | None = None
    notes: list = field(default_factory=list)

    def rows(self):
        for i, t in enumerate(self.t):
            yield (t, self.width[i], self.first_order[i], self.margin[i], self.decay_H[i], self.decay_divN[i])


def hypothesis_H_check(profile: ConformalFactor, t_grid, engine_config=None) -> ConformalReport:
    """Width of A^2 under g_t for each t, compared with 4 pi / 3.

    The width comes from the min-max engine with metric weights; the first
    order prediction uses the derivative of the unit ball's energy at t = 0.
    """
    from .engine import EngineConfig, estimate_width  # engine imports functional only

    cfg = engine_config or EngineConfig()
    slope = dt_energy_at_zero(profile)
    thr = h4_threshold(2.0)
    rep = ConformalReport(profile.name, [], [], [], [], [], [])
    for t in t_grid:
        metric = ConformalMetric(profile, float(t))
        est = estimate_width(Constant(2.0), cfg, metric=metric)
        rep.t.append(float(t))
        rep.width.append(est.value)
        rep.first_order.append(thr + float(t) * slope)
        rep.margin.append(thr - est.value)
        rep.decay_H.append(decay_constant(sphere_mean_curvature, metric))
        rep.decay_divN.append(decay_constant(normal_divergence, metric))
        if t > 1.0:
            rep.notes.append(f"t = {t}: outside the small-t regime, reported only")
    # largest t such that every positive grid t up to it has a positive margin
    for t, m in sorted(zip(rep.t, rep.margin)):
        if t == 0:
            continue
        if m <= 0:
            break
        rep.epsilon_estimate = t
    return rep
