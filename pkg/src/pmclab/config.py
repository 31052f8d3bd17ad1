"""Flat ``key = value`` experiment configuration with a typed schema.

Lines starting with ``#`` are comments. Lists are whitespace or comma
separated; center lists separate points with ``;``. Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = ("width-sweep", "pmc-solve", "drift-demo", "conformal-example", "hypothesis-report")
FAMILIES = ("constant", "gaussian", "radial-increasing", "affine-radial", "slab")
PROFILES = ("inverse-sqrt", "uniform-ball")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _floats(text: str) -> tuple:
    parts = text.replace(",", " ").split()
    return tuple(float(p) for p in parts)


def _ints(text: str) -> tuple:
    parts = text.replace(",", " ").replace("x", " ").split()
    return tuple(int(p) for p in parts)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _points(text: str) -> tuple:
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            p = _floats(chunk)
            if len(p) != 3:
                raise ValueError(f"center needs 3 coordinates, got {chunk.strip()!r}")
            pts.append(p)
    return tuple(pts)


# key -> (parser, default or REQUIRED, range check or None, description)
REQUIRED = object()


def _pos(x):
    return x > 0


SCHEMA = {
    "experiment": (str, REQUIRED, lambda v: v in EXPERIMENTS, f"one of {', '.join(EXPERIMENTS)}"),
    "n": (int, REQUIRED, lambda v: v == 2, "hypersurface dimension; only 2 is supported"),
    "prescription": (str, REQUIRED, lambda v: v in FAMILIES, f"one of {', '.join(FAMILIES)}"),
    "prescription_params": (_floats, REQUIRED, None, "numbers passed to the family constructor"),
    "grid": (_ints, REQUIRED, lambda v: len(v) == 2 and v[0] >= 4 and v[1] >= 8 and v[1] % 2 == 0,
             "ntheta nphi (nphi even)"),
    "nodes": (int, REQUIRED, lambda v: v >= 2, "path node count m >= 2"),
    "seed": (int, REQUIRED, lambda v: v >= 0, "non-negative integer"),
    "R_grid": (_floats, (5.0, 10.0, 20.0), lambda v: len(v) >= 1 and all(r > 0 for r in v), "truncation radii"),
    "t_grid": (_floats, (0.0, 0.02, 0.05), lambda v: all(t >= 0 for t in v), "conformal parameters"),
    "centers": (_points, ((0.0, 0.0, 0.0),), lambda v: len(v) >= 1, "sphere path centers 'x y z; x y z'"),
    "r_max": (float, 10.0, _pos, "sphere path end radius"),
    "max_sweeps": (int, 200, _pos, "string method sweeps"),
    "gtol": (float, 1e-7, _pos, "relaxation gradient tolerance"),
    "ftol": (float, 1e-10, _pos, "relaxation energy tolerance"),
    "perturbations": (int, 0, lambda v: v >= 0, "perturbed copies per initial path"),
    "perturbation_amplitude": (float, 0.05, lambda v: v >= 0, "log-radius perturbation size"),
    "saddle_grid": (_ints, (16, 32), lambda v: len(v) == 2 and v[0] >= 4 and v[1] >= 8 and v[1] % 2 == 0,
                    "grid for saddle refinement and the Hessian"),
    "start_center": (_floats, (0.3, 0.0, 0.0), lambda v: len(v) == 3, "start ball center (slab runs)"),
    "start_radius": (float, 1.0, _pos, "start ball radius (slab runs)"),
    "truncate": (_bool, True, None, "use h_R instead of h in pmc-solve"),
    "drift_offset": (float, 3.0, _pos, "far sphere paths start at (R - offset) e_1 with radius offset"),
    "profile": (str, "inverse-sqrt", lambda v: v in PROFILES, f"one of {', '.join(PROFILES)}"),
    "profile_params": (_floats, (), None, "profile constructor parameters"),
    "slack": (float, 1e-3, lambda v: v >= 0, "monotonicity slack"),
    "slope_tol": (float, 1e-3, lambda v: v >= 0, "slope tolerance for radius selection"),
    "residual_tol": (float, 1e-4, _pos, "saddle residual tolerance"),
    "nice_C": (float, 10.0, _pos, "transition bound C = nice_C / R"),
    "nice_eta": (float, 0.5, lambda v: v >= 0, "high-energy window"),
    "nice_theta": (float, 1e-3, lambda v: v >= 0, "energy excess allowed over the width"),
    "h_rho": (float, 3.0, _pos, "inner radius for the gradient hypothesis"),
    "h_sigma": (float, 0.5, lambda v: 0 < v < 1, "sigma in (0, 1)"),
    "h_dirs": (int, 64, _pos, "sampled directions"),
    "h_radii": (int, 512, _pos, "sampled radii"),
    "h_rmax": (float, 1000.0, _pos, "outer sampling radius"),
    "check_width": (_bool, True, None, "estimate the width for the strict-bound hypothesis"),
    "expect": (str, "", None, "expected drift classification (empty: no assertion)"),
    "assert_t_max": (float, 0.05, lambda v: v >= 0, "conformal margins must be positive for t <= this"),
    "out_dir": (str, "", None, "output directory"),
    "jobs": (int, 1, _pos, "worker processes"),
}


@dataclass
class ExperimentConfig:
    values: dict
    source: str = ""
    raw: dict = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def echo(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.values.items()}


def parse_text(text: str) -> tuple[dict, list]:
    raw, problems = {}, []
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            problems.append(f"line {i}: expected 'key = value'")
            continue
        k, v = (p.strip() for p in s.split("=", 1))
        if k in raw:
            problems.append(f"line {i}: duplicate key '{k}'")
        raw[k] = v
    return raw, problems


def check(raw: dict) -> tuple[dict, list]:
    """Typed values and the full list of schema violations."""
    values, problems = {}, []
    for k in raw:
        if k not in SCHEMA:
            problems.append(f"unknown key '{k}'")
    for k, (parser, default, ok, desc) in SCHEMA.items():
        if k not in raw:
            if default is REQUIRED:
                problems.append(f"missing required key '{k}'")
            else:
                values[k] = default
            continue
        try:
            v = parser(raw[k])
        except ValueError as exc:
            problems.append(f"key '{k}': cannot parse {raw[k]!r} ({exc})")
            continue
        if ok is not None and not ok(v):
            problems.append(f"key '{k}': value {raw[k]!r} out of range ({desc})")
            continue
        values[k] = v
    return values, problems


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    raw, problems = parse_text(text)
    values, more = check(raw)
    problems += more
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(values, str(path), raw)


def validate(path) -> list:
    """All violations in a config file; an empty list means it is valid."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return [f"cannot read config: {exc}"]
    raw, problems = parse_text(text)
    _, more = check(raw)
    return problems + more
