"""Mountain pass paths, string-method relaxation, widths and saddle refinement.

A path is a list of DOF vectors ``(u.ravel(), center)`` pinned at the empty
set proxy and at a region of negative energy. Relaxation moves interior nodes
along the energy gradient projected off the path tangent (the string method),
so the path maximum can only decrease. Saddle refinement turns the path's top
node into a numerical PMC: a mountain pass point is a maximum along the
scaling direction and a minimum across it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .functional import (EnergyModel, HessianSpectrum, energy, pmc_residual, radial_hessian,
                         transition_mass)
from .grid import SphereGrid
from .prescription import Prescription, Truncated, barrier_radius, epsilon_R, h4_threshold
from .region import (RHO_MIN, RegionPath, StarRegion, barycenter, clip_to_ball, flat_distance,
                     recenter, regrid)

log = logging.getLogger(__name__)

FOUR_PI = 4.0 * np.pi


class NotMountainPass(ValueError):
    """The path endpoint does not have negative energy."""


class DegeneratePath(ValueError):
    """Every interior node coincides with the empty-set proxy."""


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RelaxSchedule:
    max_sweeps: int = 200
    gtol: float = 1e-7  # on the largest tangent-free preconditioned gradient norm
    ftol: float = 1e-10  # on the decrease of the path maximum per sweep
    patience: int = 5
    max_du: float = 0.2
    max_dc: float = 0.5
    armijo: float = 1e-4
    backtracks: int = 30
    reparam_ratio: float = 1.25  # reparameterize when max spacing / mean spacing exceeds this
    clip: bool = True


@dataclass(frozen=True)
class EngineConfig:
    ntheta: int = 32
    nphi: int = 64
    nodes: int = 101
    centers: tuple = ((0.0, 0.0, 0.0),)
    r_max: float = 10.0
    perturbations: int = 0
    perturbation_amplitude: float = 0.05
    seed: int = 0
    schedule: RelaxSchedule = field(default_factory=RelaxSchedule)

    @property
    def grid(self) -> SphereGrid:
        return SphereGrid(self.ntheta, self.nphi)


# ---------------------------------------------------------------------------
# results


@dataclass
class WidthEstimate:
    value: float
    argmax: int
    t: np.ndarray
    energies: np.ndarray
    transition_mass: np.ndarray
    support_radius: np.ndarray
    barycenter_norm: np.ndarray
    log: list  # path maximum after each accepted sweep
    converged: bool
    sweeps: int = 0
    clip_violations: int = 0
    multi_peak: bool = False
    initial_value: float = float("nan")

    @property
    def argmax_t(self) -> float:
        return float(self.t[self.argmax])


@dataclass
class NiceClassReport:
    R: float
    C: float
    eta: float
    theta: float
    support_ok: bool
    energy_ok: bool
    transition_ok: bool
    max_support: float
    support_bound: float
    max_energy: float
    max_transition: float

    @property
    def passed(self) -> bool:
        return self.support_ok and self.energy_ok and self.transition_ok


@dataclass
class SaddleCandidate:
    region: StarRegion
    energy: float
    residual_sup: float
    residual_l2: float
    gradient_norm: float
    negative: int
    zero: int
    eigenvalues: np.ndarray
    converged: bool
    iterations: int = 0


# ---------------------------------------------------------------------------
# paths


def _mass(x: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Diagonal preconditioner: squared normal motion per DOF (w rho^4; area/3 for the center)."""
    rho = np.exp(x[:-3])
    w = grid.weights.ravel()
    area = np.sum(w * rho * rho)
    return np.concatenate([w * rho**4, np.full(3, area / 3.0)])


def _transition(region: StarRegion, p: Prescription) -> float:
    return transition_mass(region, p) if isinstance(p, Truncated) else 0.0


def sphere_path(grid: SphereGrid, prescription: Prescription, center=(0.0, 0.0, 0.0),
                r_max: float = 10.0, m: int = 101, metric=None) -> RegionPath:
    """Balls B_{r t}(x) at t = k / (m - 1), with the empty-set proxy at t = 0."""
    if m < 2:
        raise ValueError("a path needs at least 2 nodes")
    if r_max <= RHO_MIN:
        raise ValueError("r_max must exceed the proxy radius")
    t = np.linspace(0.0, 1.0, m)
    regions = [StarRegion.empty_proxy(grid, center)]
    regions += [StarRegion.ball(grid, r_max * tk, center) for tk in t[1:]]
    end = energy(regions[-1], prescription, metric).total
    if not end < 0:
        raise NotMountainPass(f"endpoint energy {end:.6g} >= 0: not a mountain pass path")
    return RegionPath(regions, t)


def perturb_path(path: RegionPath, amplitude: float, rng: np.random.Generator) -> RegionPath:
    """Add a smooth random low-degree shape perturbation to interior nodes."""
    g = path.grid
    d = g.directions
    coeff = rng.normal(size=(4, 3))
    quad = 0.5 * (coeff[1:] + coeff[1:].T)
    field_ = amplitude * (d @ coeff[0] + np.einsum("...i,ij,...j->...", d, quad, d) / 3)
    regions = [path.regions[0]]
    for k, reg in enumerate(path.regions[1:-1], start=1):
        bump = np.sin(np.pi * path.t[k])
        regions.append(StarRegion(g, reg.center, reg.log_radius + bump * field_))
    regions.append(path.regions[-1])
    return RegionPath(regions, path.t.copy())


def _spacing(xs, grid: SphereGrid) -> np.ndarray:
    w = grid.weights.ravel() / FOUR_PI
    out = np.empty(len(xs) - 1)
    for k in range(len(xs) - 1):
        a, b = xs[k], xs[k + 1]
        dr = np.exp(a[:-3]) - np.exp(b[:-3])
        out[k] = np.sqrt(np.sum(w * dr * dr) + np.sum((a[-3:] - b[-3:]) ** 2))
    return out


def _reparameterize(xs, t, grid: SphereGrid):
    d = _spacing(xs, grid)
    s = np.concatenate([[0.0], np.cumsum(d)])
    if s[-1] == 0:
        return xs, t
    target = np.linspace(0.0, s[-1], len(xs))
    new = [xs[0]]
    for st in target[1:-1]:
        i = min(np.searchsorted(s, st, side="right") - 1, len(xs) - 2)
        lam = (st - s[i]) / d[i] if d[i] > 0 else 0.0
        new.append((1.0 - lam) * xs[i] + lam * xs[i + 1])
    new.append(xs[-1])
    return new, np.linspace(0.0, 1.0, len(xs))


def _line_max(model: EnergyModel, a, b):
    """Maximize the energy on the segment (1 - s) a + s b, s in [0, 1]."""
    res = minimize_scalar(lambda s: -model.value((1.0 - s) * a + s * b), bounds=(0.0, 1.0),
                          method="bounded", options={"xatol": 1e-9})
    return float(res.x), float(-res.fun)


def _resolve_peak(model: EnergyModel, xs, t, E):
    """Insert the maxima of the two segments next to the top node when they exceed it."""
    k = int(np.argmax(E))
    inserts = []
    for lo in (k - 1, k):
        if lo < 0 or lo + 1 >= len(xs):
            continue
        s, val = _line_max(model, xs[lo], xs[lo + 1])
        if val > E[k] + 1e-13 and 0.0 < s < 1.0:
            inserts.append((lo, s, val))
    for lo, s, val in sorted(inserts, reverse=True):
        xs.insert(lo + 1, (1.0 - s) * xs[lo] + s * xs[lo + 1])
        t = np.insert(t, lo + 1, t[lo] + s * (t[lo + 1] - t[lo]))
        E = np.insert(E, lo + 1, val)
    return xs, t, E


def _descend_node(model, x, g, e, tangent, sched: RelaxSchedule):
    """One Armijo step along minus the preconditioned gradient with the tangent removed."""
    grid = model.grid
    M = _mass(x, grid)
    G = g / M
    tt = np.sum(M * tangent * tangent)
    if tt > 0:
        G = G - (np.dot(g, tangent) / tt) * tangent
    du = grid.remove_nyquist(G[:-3].reshape(grid.shape)).ravel()
    d = -np.concatenate([du, G[-3:]])
    gnorm = float(np.sqrt(np.sum(M * d * d)))
    slope = float(np.dot(g, d))
    if slope >= 0 or gnorm == 0:
        return x, e, g, gnorm, False
    alpha = 1.0
    mu = np.max(np.abs(d[:-3]))
    mc = np.linalg.norm(d[-3:])
    if mu > 0:
        alpha = min(alpha, sched.max_du / mu)
    if mc > 0:
        alpha = min(alpha, sched.max_dc / mc)
    for _ in range(sched.backtracks):
        xn = x + alpha * d
        en, gn = model.value_and_grad(xn)
        if en <= e + sched.armijo * alpha * slope:
            return xn, en, gn, gnorm, True
        alpha *= 0.5
    return x, e, g, gnorm, False


def _degenerate(xs) -> bool:
    proxy = xs[0]
    return all(np.array_equal(x, proxy) for x in xs[1:-1])


def relax_path(path: RegionPath, prescription: Prescription, schedule: RelaxSchedule | None = None,
               metric=None) -> tuple[RegionPath, WidthEstimate]:
    """String-method relaxation with pinned endpoints.

    Every sweep moves each interior node by one accepted descent step, clips
    nodes to the barrier ball of a truncated prescription when that does not
    raise their energy, and reparameterizes by arclength when the spacing has
    become uneven. Any sweep that would raise the path maximum is undone.
    """
    sched = schedule or RelaxSchedule()
    grid = path.grid
    model = EnergyModel(grid, prescription, metric)
    xs = [r.dofs for r in path.regions]
    if _degenerate(xs):
        raise DegeneratePath("all interior nodes equal the empty-set proxy")
    t = path.t.copy()
    E, Gs = [], []
    for x in xs:
        e, g = model.value_and_grad(x)
        E.append(e)
        Gs.append(g)
    E = np.array(E)
    if not E[-1] < 0:
        raise NotMountainPass(f"endpoint energy {E[-1]:.6g} >= 0")
    barrier = barrier_radius(prescription.R, prescription.cutoff) \
        if (sched.clip and isinstance(prescription, Truncated)) else None

    history = [float(E.max())]
    initial = history[0]
    converged = False
    quiet = 0
    violations = 0
    sweep = 0
    for sweep in range(1, sched.max_sweeps + 1):
        old_max = float(E.max())
        moved = 0
        worst = 0.0
        for k in range(1, len(xs) - 1):
            tangent = xs[k + 1] - xs[k - 1]
            xn, en, gn, gnorm, ok = _descend_node(model, xs[k], Gs[k], E[k], tangent, sched)
            worst = max(worst, gnorm)
            if ok:
                xs[k], E[k], Gs[k] = xn, en, gn
                moved += 1
        if barrier is not None:
            for k in range(1, len(xs)):
                reg = StarRegion.from_dofs(grid, xs[k])
                if reg.support_radius <= barrier:
                    continue
                clipped = clip_to_ball(reg, barrier)
                xc = clipped.dofs
                ec, gc = model.value_and_grad(xc)
                if ec <= E[k] + 1e-10:
                    xs[k], E[k], Gs[k] = xc, ec, gc
                else:
                    violations += 1
        d = _spacing(xs, grid)
        if d.mean() > 0 and d.max() > sched.reparam_ratio * d.mean():
            xr, tr = _reparameterize(xs, t, grid)
            er, gr = zip(*(model.value_and_grad(x) for x in xr))
            er = np.array(er)
            if er.max() <= E.max() + 1e-12:
                xs, t, E, Gs = list(xr), tr, er, list(gr)
        new_max = float(E.max())
        assert new_max <= old_max + 1e-10, "accepted sweep raised the path maximum"
        history.append(new_max)
        if worst < sched.gtol:
            converged = True
            break
        if moved == 0:
            log.info("relax_path: no node accepted a step in sweep %d", sweep)
            break
        quiet = quiet + 1 if old_max - new_max < sched.ftol else 0
        if quiet >= sched.patience:
            converged = True
            break

    xs, t, E = _resolve_peak(model, xs, t, E)
    regions = [StarRegion.from_dofs(grid, x) for x in xs]
    est = _estimate_from(regions, t, E, prescription, history, converged, sweep, violations, initial)
    return RegionPath(regions, t), est


def _estimate_from(regions, t, E, prescription, history, converged, sweeps, violations, initial):
    E = np.asarray(E, dtype=float)
    k = int(np.argmax(E))  # first index on ties
    top = np.flatnonzero(E >= E[k] - 1e-9)
    multi = bool(np.any(np.diff(top) > 1))
    return WidthEstimate(
        value=float(E[k]), argmax=k, t=np.asarray(t, dtype=float), energies=E,
        transition_mass=np.array([_transition(r, prescription) for r in regions]),
        support_radius=np.array([r.support_radius for r in regions]),
        barycenter_norm=np.array([np.linalg.norm(barycenter(r)) for r in regions]),
        log=list(history), converged=converged, sweeps=sweeps, clip_violations=violations,
        multi_peak=multi, initial_value=float(initial))


def path_energies(path: RegionPath, prescription: Prescription, metric=None) -> np.ndarray:
    model = EnergyModel(path.grid, prescription, metric)
    return np.array([model.value(r.dofs) for r in path.regions])


def estimate_width(prescription: Prescription, config: EngineConfig | None = None, metric=None,
                   return_path: bool = False):
    """Best relaxed path maximum over sphere-path initializations.

    Initial paths are balls about each configured center plus, when requested,
    seeded random perturbations of them.
    """
    cfg = config or EngineConfig()
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    best = None
    for c in cfg.centers:
        base = sphere_path(grid, prescription, c, cfg.r_max, cfg.nodes, metric)
        starts = [base] + [perturb_path(base, cfg.perturbation_amplitude, rng)
                           for _ in range(cfg.perturbations)]
        for start in starts:
            relaxed, est = relax_path(start, prescription, cfg.schedule, metric)
            if best is None or est.value < best[1].value:
                best = (relaxed, est)
    return best if return_path else best[1]


# ---------------------------------------------------------------------------
# width tables and the monotonicity trick


@dataclass
class WidthTable:
    R: np.ndarray
    omega: np.ndarray
    slope: np.ndarray
    selected: np.ndarray
    violations: list
    estimates: list = field(default_factory=list)
    paths: list = field(default_factory=list)

    @property
    def limit_estimate(self) -> float:
        return float(self.omega[-1])

    @property
    def plateau_gap(self) -> float:
        return float(abs(self.omega[-1] - self.omega[-2]))


def _width_job(args):
    base, R, cfg = args
    path, est = estimate_width(Truncated(base, R), cfg, return_path=True)
    return path, est


def centered_slopes(R, omega) -> np.ndarray:
    """Second-order finite-difference slopes on a possibly uneven grid (NaN at the ends)."""
    R = np.asarray(R, dtype=float)
    w = np.asarray(omega, dtype=float)
    s = np.full(R.size, np.nan)
    for i in range(1, R.size - 1):
        h1, h2 = R[i] - R[i - 1], R[i + 1] - R[i]
        s[i] = (h1 * h1 * w[i + 1] - h2 * h2 * w[i - 1] + (h2 * h2 - h1 * h1) * w[i]) / (h1 * h2 * (h1 + h2))
    return s


def select_monotonicity_radii(R, omega, tol: float = 1e-3) -> np.ndarray:
    """Boolean mask of grid radii whose slope lies in [-2/R - tol, tol]."""
    R = np.asarray(R, dtype=float)
    if R.size < 3:
        raise ValueError("need at least 3 table points for centered slopes")
    s = centered_slopes(R, omega)
    with np.errstate(invalid="ignore"):
        return (s >= -2.0 / R - tol) & (s <= tol)


def width_sweep(base: Prescription, R_grid, config: EngineConfig | None = None, jobs: int = 1,
                slack: float = 1e-3, tol: float = 1e-3) -> WidthTable:
    """omega(R) over a grid of truncation radii, sharing initialization seeds."""
    cfg = config or EngineConfig()
    R_grid = [float(R) for R in R_grid]
    args = [(base, R, cfg) for R in R_grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_width_job, args))
    else:
        results = [_width_job(a) for a in args]
    omega = np.array([est.value for _, est in results])
    violations = [i for i in range(1, len(omega)) if omega[i] > omega[i - 1] + slack]
    R = np.array(R_grid)
    if R.size >= 3:
        slope = centered_slopes(R, omega)
        sel = select_monotonicity_radii(R, omega, tol)
    else:
        slope = np.full(R.size, np.nan)
        sel = np.zeros(R.size, dtype=bool)
    return WidthTable(R, omega, slope, sel, violations, [e for _, e in results], [p for p, _ in results])


def check_nice_class(path: RegionPath, truncation: Truncated, C: float, eta: float, theta: float,
                     omega: float, metric=None) -> NiceClassReport:
    """Support, energy and transition-mass conditions of the nice class on a stored path."""
    R = truncation.R
    bound = R + 1.0 - epsilon_R(truncation.cutoff, R)
    supp = np.array([r.support_radius for r in path.regions])
    E = path_energies(path, truncation, metric)
    high = E >= omega - eta
    tm = np.array([transition_mass(r, truncation) if h else 0.0 for r, h in zip(path.regions, high)])
    return NiceClassReport(R=R, C=C, eta=eta, theta=theta,
                           support_ok=bool(np.all(supp <= bound)),
                           energy_ok=bool(E.max() <= omega + theta),
                           transition_ok=bool(np.all(tm[high] <= C)),
                           max_support=float(supp.max()), support_bound=float(bound),
                           max_energy=float(E.max()), max_transition=float(tm.max()))


# ---------------------------------------------------------------------------
# saddle refinement


@dataclass(frozen=True)
class SaddleOptions:
    outer_iterations: int = 60
    center_step: float = 0.5
    scale_bracket: float = 0.3
    gtol: float = 1e-10  # on the scaled gradient norm
    newton_steps: int = 6
    newton_rcond: float = 1e-10
    hessian_threshold: float = 1e-8
    dense_max: int = 2048


def _scaled_gradient_norm(model, x) -> float:
    g = model.grad(x)
    M = _mass(x, model.grid)
    return float(np.sqrt(np.sum(g * g / M)))


def _center_step(model, x, opts):
    e, g = model.value_and_grad(x)
    gc = g[-3:]
    n = np.linalg.norm(gc)
    if n == 0:
        return x
    d = np.zeros_like(x)
    d[-3:] = -gc / n
    a = opts.center_step
    for _ in range(40):
        xn = x + a * d
        if model.value(xn) <= e - 1e-4 * a * n:
            return xn
        a *= 0.5
    return x


def _scale_step(model, x, opts):
    b = opts.scale_bracket
    one = np.zeros_like(x)
    one[:-3] = 1.0
    res = minimize_scalar(lambda s: -model.value(x + s * one), bounds=(-b, b), method="bounded",
                          options={"xatol": 1e-12})
    return x + res.x * one if -res.fun >= model.value(x) else x


def _shape_step(model, x, sched: RelaxSchedule):
    grid = model.grid
    e, g = model.value_and_grad(x)
    M = _mass(x, grid)
    Gu = g[:-3] / M[:-3]
    Gu = Gu - np.sum(M[:-3] * Gu) / np.sum(M[:-3])  # drop the scaling component
    Gu = grid.remove_nyquist(Gu.reshape(grid.shape)).ravel()
    d = np.concatenate([-Gu, np.zeros(3)])
    slope = float(np.dot(g, d))
    if slope >= 0:
        return x
    a = min(1.0, sched.max_du / max(np.max(np.abs(Gu)), 1e-300))
    for _ in range(sched.backtracks):
        xn = x + a * d
        if model.value(xn) <= e + sched.armijo * a * slope:
            return xn
        a *= 0.5
    return x


def dense_hessian(model: EnergyModel, x) -> np.ndarray:
    """Symmetrized Hessian of the discrete energy, column by column from gradient differences."""
    n = x.size
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        H[:, j] = model.hvp(x, e)
    return 0.5 * (H + H.T)


def _newton_polish(model, x, opts):
    """Newton steps on the gradient with a least-squares solve (zero modes are left alone).

    Near-flat directions can make single steps overshoot, so the iterate with
    the smallest mass-scaled gradient is kept.
    """
    best, best_norm = x, _scaled_gradient_norm(model, x)
    for _ in range(opts.newton_steps):
        if best_norm < opts.gtol:
            break
        H = dense_hessian(model, x)
        g = model.grad(x)
        x = x - np.linalg.lstsq(H, g, rcond=opts.newton_rcond)[0]
        nrm = _scaled_gradient_norm(model, x)
        if nrm < best_norm:
            best, best_norm = x, nrm
    return best


def refine_saddle(region: StarRegion, prescription: Prescription, metric=None,
                  options: SaddleOptions | None = None, schedule: RelaxSchedule | None = None,
                  grid: SphereGrid | None = None, newton: bool = True) -> SaddleCandidate:
    """Drive a path top node to a critical point of the energy.

    Alternates a center line search (minimization), a 1-D maximization over
    homothety of the radial field, and a shape descent with the scaling mode
    removed; Newton steps on the gradient finish.
    """
    opts = options or SaddleOptions()
    sched = schedule or RelaxSchedule()
    if grid is not None:
        region = regrid(region, grid)
    model = EnergyModel(region.grid, prescription, metric)
    x = region.dofs
    it = 0
    for it in range(1, opts.outer_iterations + 1):
        x = _center_step(model, x, opts)
        x = _scale_step(model, x, opts)
        x = _shape_step(model, x, sched)
        if _scaled_gradient_norm(model, x) < opts.gtol:
            break
    if newton and region.grid.size <= opts.dense_max and _scaled_gradient_norm(model, x) > opts.gtol:
        x = _newton_polish(model, x, opts)
    x = _scale_step(model, x, opts) if _scaled_gradient_norm(model, x) > opts.gtol else x
    reg = StarRegion.from_dofs(region.grid, x)
    return _candidate(reg, prescription, metric, opts, it)


def _candidate(reg: StarRegion, prescription, metric, opts: SaddleOptions, iterations: int) -> SaddleCandidate:
    model = EnergyModel(reg.grid, prescription, metric)
    gnorm = _scaled_gradient_norm(model, reg.dofs)
    if metric is None:
        res = pmc_residual(reg, prescription)
        w = reg.grid.weights
        sup = float(np.max(np.abs(res)))
        l2 = float(np.sqrt(np.sum(w * res * res) / np.sum(w)))
    else:
        sup = l2 = float("nan")
    spectrum: HessianSpectrum = radial_hessian(reg, prescription, metric, threshold=opts.hessian_threshold,
                                           dense_max=opts.dense_max)
    return SaddleCandidate(region=reg, energy=energy(reg, prescription, metric).total,
                           residual_sup=sup, residual_l2=l2, gradient_norm=gnorm,
                           negative=spectrum.negative, zero=spectrum.zero, eigenvalues=spectrum.eigenvalues,
                           converged=bool(gnorm < 1e-6), iterations=iterations)


# ---------------------------------------------------------------------------
# drift to infinity


@dataclass
class DriftReport:
    classification: str  # "confined", "drifting", "neutral drift" or "inconclusive"
    R: np.ndarray
    support_radius: np.ndarray
    barycenter_norm: np.ndarray
    sphere_distance: np.ndarray  # flat distance of the recentred, unit-volume candidate to B_1
    energy: np.ndarray
    growth_rate: float
    energy_limit_gap: float  # |E_last - A^c(B_{n/c})| for drifting sequences


def unit_sphere_distance(region: StarRegion) -> float:
    """Flat distance between the candidate recentred at its barycenter, scaled to unit
    volume, and the unit ball with the same center."""
    b = barycenter(region)
    moved, ok = recenter(region, b)
    if not ok:
        moved = region
    vol = np.sum(moved.grid.weights * moved.radius**3) / 3.0
    s = (FOUR_PI / 3.0 / vol) ** (1.0 / 3.0)
    unit = StarRegion(moved.grid, moved.center, moved.log_radius + np.log(s))
    return float(flat_distance(unit, StarRegion.ball(moved.grid, 1.0, moved.center)))


def ball_distance(region: StarRegion, radius: float = 1.0) -> float:
    """Flat distance to the ball of the given radius centered at the region's barycenter."""
    return float(flat_distance(region, StarRegion.ball(region.grid, radius, barycenter(region))))


def drift_diagnostic(R, candidates, prescription_base: Prescription) -> DriftReport:
    """Classify a sequence of saddle candidates over growing truncation radii."""
    R = np.asarray(R, dtype=float)
    regs = [c.region if isinstance(c, SaddleCandidate) else c for c in candidates]
    supp = np.array([r.support_radius for r in regs])
    bar = np.array([np.linalg.norm(barycenter(r)) for r in regs])
    dist = np.array([unit_sphere_distance(r) for r in regs])
    E = np.array([c.energy if isinstance(c, SaddleCandidate) else np.nan for c in candidates])
    rate = float(np.polyfit(R, bar, 1)[0]) if R.size >= 2 else 0.0
    c = prescription_base.c
    gap = float(abs(E[-1] - h4_threshold(c))) if E.size else float("nan")
    if prescription_base.is_constant:
        cls = "neutral drift"
    elif rate > 0.5:
        cls = "drifting"
    elif rate < 0.1 and np.ptp(bar) < 0.1 * np.ptp(R):
        cls = "confined"
    else:
        cls = "inconclusive"
    return DriftReport(cls, R, supp, bar, dist, E, rate, gap)


def drift_demo(base: Prescription, R_grid, config: EngineConfig | None = None,
               offset: float = 3.0, saddle_grid: SphereGrid | None = None,
               options: SaddleOptions | None = None):
    """Min-max candidates over growing R from centered and far-out sphere paths.

    For each R the best relaxed path among centers {0, (R - offset) e_1} is
    taken (radius ``offset``), its top node is refined to a saddle, and the
    sequence is classified by :func:`drift_diagnostic`.
    """
    cfg = config or EngineConfig(r_max=offset)
    cands = []
    widths = []
    for R in R_grid:
        trunc = Truncated(base, float(R))
        c_far = (float(R) - offset, 0.0, 0.0)
        local = replace(cfg, centers=((0.0, 0.0, 0.0), c_far), r_max=offset)
        path, est = estimate_width(trunc, local, return_path=True)
        widths.append(est.value)
        top = path.regions[est.argmax]
        cands.append(refine_saddle(top, trunc, options=options, grid=saddle_grid))
    return drift_diagnostic(R_grid, cands, base), cands, np.array(widths)


__all__ = [
    "RelaxSchedule", "EngineConfig", "WidthEstimate", "NiceClassReport", "SaddleCandidate",
    "SaddleOptions", "WidthTable", "DriftReport", "NotMountainPass", "DegeneratePath",
    "sphere_path", "perturb_path", "relax_path", "path_energies", "estimate_width",
    "centered_slopes", "select_monotonicity_radii", "width_sweep", "check_nice_class",
    "refine_saddle", "drift_diagnostic", "drift_demo", "unit_sphere_distance", "ball_distance",
]
