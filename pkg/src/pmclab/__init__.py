"""Desk-scale laboratory for prescribed mean curvature min-max widths.

Regions are star-shaped radial graphs over a Gauss-Legendre sphere grid; the
energy A^h = Area - int h is evaluated with exactly differentiable discrete
formulas, and mountain pass paths are relaxed with a string method.
"""

__version__ = "0.1.0"

from .grid import SphereGrid  # noqa: E402
from .region import (RHO_MIN, FlatDistance, IntegrationError, RegionPath, StarRegion, area,  # noqa: E402
                     barycenter, clip_to_ball, flat_distance, integrate_boundary, integrate_interior,
                     read_snapshot, recenter, regrid, scale, translate, volume, write_snapshot)
from .prescription import (Constant, Cutoff, GaussianBump, AffineRadial, Prescription,  # noqa: E402
                           RadialIncreasing, Slab, Truncated, barrier_radius, check_H1, check_H2,
                           check_H4, epsilon_R, make_prescription, make_standard_cutoff)
from .functional import (EnergyBreakdown, EnergyModel, ShapeGradient, energy, first_variation,  # noqa: E402
                         gradient, homothety_derivative, isoperimetric_certificate, mean_curvature,
                         pmc_residual, radial_hessian, transition_mass, translation_derivative)
from .conformal import (ConformalMetric, InverseSqrtProfile, UniformBallProfile,  # noqa: E402
                        dt_energy_at_zero, hypothesis_H_check, lapse, metric_energy,
                        normal_divergence, phi, phi_ode_residual, sphere_mean_curvature)
from .engine import (EngineConfig, NiceClassReport, RelaxSchedule, SaddleCandidate,  # noqa: E402
                     WidthEstimate, check_nice_class, drift_diagnostic, estimate_width, refine_saddle,
                     relax_path, select_monotonicity_radii, sphere_path, width_sweep)
