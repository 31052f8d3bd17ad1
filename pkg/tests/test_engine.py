import numpy as np
import pytest

from pmclab.engine import (DegeneratePath, EngineConfig, NotMountainPass, RelaxSchedule, SaddleCandidate,
                           ball_distance, centered_slopes, check_nice_class, drift_diagnostic,
                           estimate_width, path_energies, perturb_path, refine_saddle, relax_path,
                           select_monotonicity_radii, sphere_path, unit_sphere_distance, width_sweep)
from pmclab.functional import isoperimetric_certificate
from pmclab.prescription import Constant, GaussianBump, RadialIncreasing, Truncated, ball_energy
from pmclab.region import RegionPath, StarRegion

FOUR_PI_3 = 4 * np.pi / 3
TINY = EngineConfig(ntheta=8, nphi=16, nodes=31, r_max=4.0, schedule=RelaxSchedule(max_sweeps=40))


def test_sphere_path_energies_closed_form(small_grid):
    p = sphere_path(small_grid, Constant(2.0), r_max=10.0, m=201)
    E = path_energies(p, Constant(2.0))
    r = 10.0 * p.t
    exact = np.array([ball_energy(2.0, max(x, 1e-300)) for x in r])
    assert np.allclose(E[1:], exact[1:], atol=1e-11)
    # the maximum sits at t = n / (c r_max) = 0.1, which is a node for m = 201
    assert p.t[np.argmax(E)] == pytest.approx(0.1)
    assert E.max() == pytest.approx(FOUR_PI_3, abs=1e-12)


def test_sphere_path_rejects_non_mountain_pass(small_grid):
    with pytest.raises(NotMountainPass):
        sphere_path(small_grid, Constant(2.0), r_max=1.4)
    with pytest.raises(ValueError):
        sphere_path(small_grid, Constant(2.0), m=1)


def test_relax_path_constant_width(small_grid):
    p = Truncated(Constant(2.0), 5.0)
    path, est = relax_path(sphere_path(small_grid, p, r_max=4.0, m=41), p, RelaxSchedule(max_sweeps=50))
    a = isoperimetric_certificate(2, 2.0)[1]
    assert abs(est.value - FOUR_PI_3) < 5e-3
    assert est.value >= a - 5e-3
    assert est.log[-1] <= est.log[0] + 1e-10
    assert np.all(np.diff(est.log) <= 1e-10)
    assert path.regions[0].same_as(StarRegion.empty_proxy(small_grid))
    assert np.all(np.diff(path.t) > 0)


def test_relax_path_lowers_gaussian_width(small_grid):
    p = Truncated(GaussianBump(), 5.0)
    _, est = relax_path(sphere_path(small_grid, p, r_max=4.0, m=41), p, RelaxSchedule(max_sweeps=60))
    # radial h: balls are already optimal, the resolved peak sits between nodes
    assert est.value >= est.energies[np.arange(len(est.energies)) != est.argmax].max()
    assert est.value < FOUR_PI_3 - 2.0
    assert abs(est.value - est.initial_value) < 1e-3


def test_relax_path_rejects_degenerate(small_grid):
    e = StarRegion.empty_proxy(small_grid)
    with pytest.raises(DegeneratePath):
        relax_path(RegionPath([e, e, StarRegion.ball(small_grid, 4.0)]), Constant(2.0))
    with pytest.raises(NotMountainPass):
        relax_path(RegionPath([e, StarRegion.ball(small_grid, 0.5), StarRegion.ball(small_grid, 1.0)]),
                   Constant(2.0))


def test_estimate_width_is_deterministic():
    cfg = EngineConfig(ntheta=8, nphi=16, nodes=21, r_max=4.0, perturbations=1, seed=7,
                       schedule=RelaxSchedule(max_sweeps=15))
    a = estimate_width(GaussianBump(), cfg)
    b = estimate_width(GaussianBump(), cfg)
    assert a.value == b.value and np.array_equal(a.energies, b.energies)


def test_perturb_path_keeps_endpoints(small_grid, rng):
    p = sphere_path(small_grid, Constant(2.0), r_max=4.0, m=11)
    q = perturb_path(p, 0.05, rng)
    assert q.regions[0].same_as(p.regions[0]) and q.regions[-1].same_as(p.regions[-1])
    assert not q.regions[5].same_as(p.regions[5])


def test_centered_slopes_exact_for_quadratics():
    R = np.array([5.0, 7.5, 10.0, 15.0, 20.0])
    w = 3.0 - 0.1 * R + 0.002 * R**2
    s = centered_slopes(R, w)
    assert np.isnan(s[0]) and np.isnan(s[-1])
    assert np.allclose(s[1:-1], -0.1 + 0.004 * R[1:-1], atol=1e-13)


def test_select_monotonicity_radii():
    R = np.array([5.0, 10.0, 15.0, 20.0])
    w = np.array([6.0, 3.0, 2.99, 2.99])
    mask = select_monotonicity_radii(R, w)
    s = centered_slopes(R, w)
    assert mask.tolist() == [False, False, True, False]
    assert s[1] < -2 / R[1] - 1e-3
    with pytest.raises(ValueError):
        select_monotonicity_radii([5.0, 10.0], [1.0, 1.0])


def test_width_sweep_parallel_matches_serial():
    cfg = EngineConfig(ntheta=8, nphi=16, nodes=21, r_max=4.0, schedule=RelaxSchedule(max_sweeps=10))
    a = width_sweep(GaussianBump(), [5.0, 6.0, 7.0], cfg, jobs=1)
    b = width_sweep(GaussianBump(), [5.0, 6.0, 7.0], cfg, jobs=2)
    assert np.array_equal(a.omega, b.omega)
    assert a.selected.shape == (3,) and len(a.paths) == 3
    assert a.plateau_gap == abs(a.omega[2] - a.omega[1])


def test_check_nice_class(small_grid):
    p = Truncated(GaussianBump(), 5.0)
    path, est = relax_path(sphere_path(small_grid, p, r_max=4.0, m=31), p, RelaxSchedule(max_sweeps=30))
    rep = check_nice_class(path, p, C=2.0, eta=0.5, theta=1e-3, omega=est.value)
    assert rep.passed and rep.max_transition == 0.0
    assert rep.support_bound == pytest.approx(6.0 - 0.0, abs=0.5)
    assert not check_nice_class(path, p, C=2.0, eta=0.5, theta=1e-3, omega=est.value - 0.1).energy_ok


def test_refine_saddle_from_perturbed_ball(tiny_grid):
    d = tiny_grid.directions
    start = StarRegion(tiny_grid, [0.1, 0.0, -0.05], np.log(1.1) + 0.05 * d[..., 0] * d[..., 2])
    c = refine_saddle(start, Constant(2.0))
    assert isinstance(c, SaddleCandidate)
    assert c.residual_sup < 1e-6
    assert abs(c.energy - FOUR_PI_3) < 1e-8
    assert c.negative == 1
    assert ball_distance(c.region) < 1e-6


def test_unit_sphere_distance(mid_grid):
    assert unit_sphere_distance(StarRegion.ball(mid_grid, 2.0, (3.0, 0, 0))) < 1e-10
    d = mid_grid.directions
    ell = StarRegion(mid_grid, [0, 0, 0], 0.2 * d[..., 2] ** 2)
    assert unit_sphere_distance(ell) > 0.05


def test_drift_diagnostic_classes(tiny_grid):
    R = [5.0, 10.0, 20.0]
    far = [StarRegion.ball(tiny_grid, 1.0, (r - 1.0, 0, 0)) for r in R]
    near = [StarRegion.ball(tiny_grid, 1.0) for _ in R]
    assert drift_diagnostic(R, far, RadialIncreasing()).classification == "drifting"
    assert drift_diagnostic(R, near, GaussianBump()).classification == "confined"
    assert drift_diagnostic(R, near, Constant(2.0)).classification == "neutral drift"
    half = [StarRegion.ball(tiny_grid, 1.0, (0.3 * r, 0, 0)) for r in R]
    assert drift_diagnostic(R, half, GaussianBump()).classification == "inconclusive"
