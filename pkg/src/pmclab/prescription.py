"""Prescription functions h, the cutoff profile, truncations and hypothesis checks.

Every prescription exposes ``value(x)`` and ``grad(x)`` for point arrays of
shape ``(..., 3)``, plus ``c`` (the constant at infinity) and ``sup`` (an
upper bound for h, or ``None`` when unbounded).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gamma

N_DIM = 2


def _sq(x: np.ndarray) -> np.ndarray:
    # componentwise sum is much faster than a reduction over a length-3 axis
    return x[..., 0] * x[..., 0] + x[..., 1] * x[..., 1] + x[..., 2] * x[..., 2]


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(_sq(x))


def _sigma(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


class Cutoff:
    """Smooth decreasing step: 1 on r <= 0, 0 on r >= 1.

    zeta(r) = sigma(1 - r) / (sigma(1 - r) + sigma(r)) with sigma(s) = exp(-1/s)
    for s > 0 and 0 otherwise.
    """

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        a, b = _sigma(1.0 - r), _sigma(r)
        return a / (a + b)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        mid = (r > 0) & (r < 1)
        rm = r[mid]
        a, b = np.exp(-1.0 / (1.0 - rm)), np.exp(-1.0 / rm)
        out[mid] = -a * b * (1.0 / (1.0 - rm) ** 2 + 1.0 / rm**2) / (a + b) ** 2
        return out

    def __reduce__(self):
        return (Cutoff, ())


def make_standard_cutoff() -> Cutoff:
    return Cutoff()


STANDARD_CUTOFF = Cutoff()


class Prescription:
    family = "base"
    c: float
    sup: float | None = None
    # sphere radii across which h is rough; interior rules split rays there
    breaks: tuple = ()
    # h vanishes beyond this radius (None: no such radius)
    support: float | None = None

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def value_and_grad(self, x):
        return self.value(x), self.grad(x)

    @property
    def is_constant(self) -> bool:
        return False


class Constant(Prescription):
    family = "constant"

    def __init__(self, c: float = 2.0):
        if c <= 0:
            raise ValueError("c must be positive")
        self.c = float(c)
        self.sup = self.c
        self.params = (self.c,)

    def value(self, x):
        return np.full(np.shape(x)[:-1], self.c)

    def grad(self, x):
        return np.zeros(np.shape(x))

    @property
    def is_constant(self) -> bool:
        return True


class GaussianBump(Prescription):
    """h(x) = c (1 + A exp(-|x|^2 / s^2))."""

    family = "gaussian"

    def __init__(self, c: float = 2.0, amplitude: float = 0.5, width: float = 2.0):
        self.c, self.amplitude, self.width = float(c), float(amplitude), float(width)
        self.sup = self.c * (1.0 + max(self.amplitude, 0.0))
        self.params = (self.c, self.amplitude, self.width)

    def value(self, x):
        return self.c * (1.0 + self.amplitude * np.exp(-_sq(x) / self.width**2))

    def grad(self, x):
        return self.value_and_grad(x)[1]

    def value_and_grad(self, x):
        e = self.c * self.amplitude * np.exp(-_sq(x) / self.width**2)
        return self.c + e, (-2.0 * e / self.width**2)[..., None] * x


class RadialIncreasing(Prescription):
    """h(x) = c (1 - A / (1 + |x|^2 / s^2)), increasing in |x| for A > 0."""

    family = "radial-increasing"

    def __init__(self, c: float = 2.0, amplitude: float = 0.5, width: float = 1.0):
        if not 0 <= amplitude < 1:
            raise ValueError("amplitude must lie in [0, 1) to keep h positive")
        self.c, self.amplitude, self.width = float(c), float(amplitude), float(width)
        self.sup = self.c
        self.params = (self.c, self.amplitude, self.width)

    def value(self, x):
        q = 1.0 + _sq(x) / self.width**2
        return self.c * (1.0 - self.amplitude / q)

    def grad(self, x):
        return self.value_and_grad(x)[1]

    def value_and_grad(self, x):
        q = 1.0 + _sq(x) / self.width**2
        k = 2.0 * self.c * self.amplitude / (q**2 * self.width**2)
        return self.c * (1.0 - self.amplitude / q), k[..., None] * x


class AffineRadial(Prescription):
    """h(x) = a + b |x|; not asymptotic to a constant when b != 0."""

    family = "affine-radial"

    def __init__(self, a: float = 2.0, b: float = 1.0):
        self.a, self.b = float(a), float(b)
        self.c = self.a
        self.sup = None if self.b > 0 else self.a
        self.params = (self.a, self.b)

    def value(self, x):
        return self.a + self.b * _norm(x)

    def grad(self, x):
        r = _norm(x)
        safe = np.where(r > 0, r, 1.0)
        return np.where((r > 0)[..., None], self.b * x / safe[..., None], 0.0)


class Slab(Prescription):
    """h(x) = n zeta(x . nu + tau): n on one side of a slab, 0 on the other."""

    family = "slab"

    def __init__(self, normal=(1.0, 0.0, 0.0), offset: float = 0.0, n: int = N_DIM,
                 cutoff: Cutoff = STANDARD_CUTOFF):
        nu = np.asarray(normal, dtype=float)
        self.normal = nu / np.linalg.norm(nu)
        self.offset = float(offset)
        self.c = float(n)
        self.sup = float(n)
        self.cutoff = cutoff
        self.params = tuple(self.normal) + (self.offset,)

    def value(self, x):
        return self.c * self.cutoff(x @ self.normal + self.offset)

    def grad(self, x):
        d = self.c * self.cutoff.derivative(x @ self.normal + self.offset)
        return d[..., None] * self.normal


class Truncated(Prescription):
    """h_R(x) = zeta(|x| - R) h(x)."""

    family = "truncated"

    def __init__(self, base: Prescription, R: float, cutoff: Cutoff = STANDARD_CUTOFF):
        if R <= 0:
            raise ValueError("R must be positive")
        self.base, self.R, self.cutoff = base, float(R), cutoff
        self.breaks = (self.R, self.R + 1.0)
        self.support = self.R + 1.0
        self.c = base.c
        self.sup = base.sup
        self.params = base.params

    @property
    def is_constant(self) -> bool:
        return False

    def zeta(self, x):
        return self.cutoff(_norm(x) - self.R)

    def zeta_grad(self, x):
        r = _norm(x)
        safe = np.where(r > 0, r, 1.0)
        d = self.cutoff.derivative(r - self.R) / safe
        return d[..., None] * x

    def value(self, x):
        return self.zeta(x) * self.base.value(x)

    def grad(self, x):
        return self.value_and_grad(x)[1]

    def value_and_grad(self, x):
        r = _norm(x)
        z = self.cutoff(r - self.R)
        dz = self.cutoff.derivative(r - self.R) / np.where(r > 0, r, 1.0)
        hv, hg = self.base.value_and_grad(x)
        return z * hv, z[..., None] * hg + (hv * dz)[..., None] * x

    def transition_density(self, x):
        """|grad zeta_R| h, the integrand of the transition mass."""
        return np.abs(self.cutoff.derivative(_norm(x) - self.R)) * self.base.value(x)


FAMILIES = {
    "constant": Constant,
    "gaussian": GaussianBump,
    "radial-increasing": RadialIncreasing,
    "affine-radial": AffineRadial,
    "slab": None,  # built from (nu_x, nu_y, nu_z, tau)
}


def make_prescription(family: str, params=()) -> Prescription:
    params = tuple(float(p) for p in params)
    if family == "slab":
        if len(params) not in (0, 1, 4):
            raise ValueError("slab parameters: tau or (nu_x, nu_y, nu_z, tau)")
        if len(params) == 4:
            return Slab(params[:3], params[3])
        return Slab(offset=params[0] if params else 0.0)
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown prescription family {family!r}") from None
    return cls(*params)


# ---------------------------------------------------------------------------
# barrier margin


def epsilon_R(cutoff: Cutoff, R: float, samples: int = 10_000) -> float:
    """Margin eps in (0, 1/2) with zeta(r) < 1 / (4 (r + R)) for all r >= 1 - 2 eps."""
    def g(r):
        return float(cutoff(r)) - 1.0 / (4.0 * (r + R))

    if R <= 0 or g(0.0) <= 0:
        raise ValueError(f"R too small: no admissible epsilon for R = {R}")
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    eps = 0.5 * (1.0 - hi)
    r = np.linspace(1.0 - 2.0 * eps, 1.0, samples)
    if not np.all(cutoff(r) < 1.0 / (4.0 * (r + R))):
        raise ValueError(f"epsilon verification failed for R = {R}")
    return eps


def barrier_radius(R: float, cutoff: Cutoff = STANDARD_CUTOFF) -> float:
    return R + 1.0 - 2.0 * epsilon_R(cutoff, R)


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass
class HypothesisReport:
    hypothesis: str
    passed: bool | None
    margin: float | None
    samples: int = 0
    seed: int | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _directions(count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, 3))
    return d / np.linalg.norm(d, axis=1)[:, None]


def check_H1(p: Prescription, radii=(5.0, 10.0, 20.0, 40.0, 80.0), tol: float = 1e-3,
             n_dirs: int = 256, seed: int = 0) -> HypothesisReport:
    """Deviation of h from c and size of grad h on spheres of growing radius."""
    dirs = _directions(n_dirs, seed)
    dev, gmax = [], []
    for r in radii:
        x = r * dirs
        dev.append(float(np.max(np.abs(p.value(x) - p.c))))
        gmax.append(float(np.max(_norm(p.grad(x)))))
    dev_a, g_a = np.array(dev), np.array(gmax)
    decays = bool(np.all(np.diff(dev_a) <= 1e-15) and np.all(np.diff(g_a) <= 1e-15))
    last = max(dev_a[-1], g_a[-1])
    ok = decays and last < tol
    return HypothesisReport("H1", ok, float(tol - last), len(radii) * n_dirs, seed,
                            {"radii": list(radii), "deviation": dev, "grad_max": gmax})


def check_H2(p: Prescription, rho: float, sigma: float, r_max: float = 1000.0,
             n_dirs: int = 64, n_radii: int = 512, seed: int = 0) -> HypothesisReport:
    """Sample |grad h(x) . x| - sigma h(x) on rho <= |x| <= r_max."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    if n_dirs < 1 or n_radii < 1:
        raise ValueError("sampler exhausted: need at least one direction and radius")
    dirs = _directions(n_dirs, seed)
    radii = np.geomspace(rho, r_max, n_radii)
    x = radii[:, None, None] * dirs[None, :, :]
    val = np.abs(np.sum(p.grad(x) * x, axis=-1)) - sigma * p.value(x)
    worst = float(val.max())
    i, j = np.unravel_index(np.argmax(val), val.shape)
    return HypothesisReport("H2", worst < 0, -worst, val.size, seed,
                            {"rho": rho, "sigma": sigma, "r_max": r_max,
                             "worst_point": x[i, j].tolist()})


def sphere_area(n: int = N_DIM) -> float:
    """Area of the unit n-sphere."""
    return 2.0 * np.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)


def ball_energy(c: float, radius: float, n: int = N_DIM) -> float:
    """A^c(B_r) = |S^n| r^n - c |S^n| r^(n+1) / (n+1)."""
    w = sphere_area(n)
    return w * radius**n - c * w * radius ** (n + 1) / (n + 1)


def h4_threshold(c: float, n: int = N_DIM) -> float:
    return ball_energy(c, n / c, n)


def check_H4(width: float, p: Prescription, n: int = N_DIM) -> HypothesisReport:
    thr = h4_threshold(p.c, n)
    return HypothesisReport("H4", bool(width < thr), float(thr - width), 1, None,
                            {"width": width, "threshold": thr})


def H3_report() -> HypothesisReport:
    return HypothesisReport("H3", None, None, 0, None,
                            {"note": "H3: not evaluated (external reference)"})
