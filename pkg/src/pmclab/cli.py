"""Command line entry point: ``pmclab run <config>`` and ``pmclab validate <config>``.

Exit codes: 0 success, 1 an experiment assertion failed, 2 invalid config,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .conformal import (dt_energy_at_zero, hypothesis_H_check, make_profile, phi, phi_ode_residual)
from .engine import (DegeneratePath, EngineConfig, NotMountainPass, RelaxSchedule, ball_distance,
                     check_nice_class, drift_demo, estimate_width, refine_saddle, width_sweep)
from .functional import homothety_derivative, isoperimetric_certificate, translation_derivative
from .grid import SphereGrid
from .prescription import (H3_report, Truncated, check_H1, check_H2, check_H4, make_prescription)
from .region import IntegrationError, StarRegion, integrate_interior, write_snapshot

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
ENV_OUT_DIR = "PMCLAB_OUT_DIR"

log = logging.getLogger("pmclab")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Run:
    """Output directory bookkeeping shared by the experiments."""

    def __init__(self, out_dir: Path):
        self.out = out_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.checks: dict[str, bool] = {}
        self.timings: dict[str, float] = {}
        self.summary: dict = {}

    def csv(self, name: str, header, rows) -> Path:
        path = self.out / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        self.files.append(name)
        return path

    def json(self, name: str, obj) -> Path:
        path = self.out / name
        path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
        self.files.append(name)
        return path

    def snapshot(self, name: str, region: StarRegion) -> Path:
        write_snapshot(region, self.out / name)
        self.files.append(name)
        return self.out / name

    def stage(self, name: str, t0: float):
        self.timings[name] = time.perf_counter() - t0

    def check(self, name: str, ok) -> None:
        self.checks[name] = bool(ok)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


def engine_config(c: cfgmod.ExperimentConfig) -> EngineConfig:
    sched = RelaxSchedule(max_sweeps=c.max_sweeps, gtol=c.gtol, ftol=c.ftol)
    return EngineConfig(ntheta=c.grid[0], nphi=c.grid[1], nodes=c.nodes, centers=c.centers,
                        r_max=c.r_max, perturbations=c.perturbations,
                        perturbation_amplitude=c.perturbation_amplitude, seed=c.seed, schedule=sched)


# ---------------------------------------------------------------------------
# experiments


def exp_width_sweep(c, run: Run, jobs: int):
    base = make_prescription(c.prescription, c.prescription_params)
    t0 = time.perf_counter()
    table = width_sweep(base, c.R_grid, engine_config(c), jobs=jobs, slack=c.slack, tol=c.slope_tol)
    run.stage("width_sweep", t0)
    run.csv("width_table.csv", ["R", "omega", "slope", "selected"],
            zip(table.R, table.omega, table.slope, table.selected))
    run.csv("sweep_log.csv", ["R", "sweep", "max_energy", "argmax_t", "converged"],
            ((R, i, e, est.argmax_t, est.converged) for R, est in zip(table.R, table.estimates)
             for i, e in enumerate(est.log)))
    run.check("monotone", not table.violations)
    if c.prescription != "slab" and base.sup is not None and base.sup <= base.c:
        _, a = isoperimetric_certificate(2, base.sup)
        run.check("above_certificate", bool(np.all(table.omega >= a - 5e-3)))
    t0 = time.perf_counter()
    rows = []
    for i, R in enumerate(table.R):
        if not table.selected[i]:
            continue
        trunc = Truncated(base, R)
        rep = check_nice_class(table.paths[i], trunc, c.nice_C / R, c.nice_eta, c.nice_theta, table.omega[i])
        rows.append((R, rep.C, rep.support_ok, rep.energy_ok, rep.transition_ok, rep.max_support,
                     rep.max_energy, rep.max_transition))
        run.check(f"nice_class_R{R:g}", rep.passed)
    run.stage("nice_class", t0)
    run.csv("nice_class.csv", ["R", "C", "support_ok", "energy_ok", "transition_ok", "max_support",
                               "max_energy", "max_transition"], rows)
    run.summary.update(limit_estimate=table.limit_estimate,
                       plateau_gap=table.plateau_gap if len(table.R) > 1 else None,
                       violations=[float(table.R[i]) for i in table.violations])


def _saddle_rows(cand, p):
    return [(cand.energy, cand.residual_sup, cand.residual_l2, cand.gradient_norm, cand.negative,
             cand.zero, homothety_derivative(cand.region, p), cand.converged)]


SADDLE_HEADER = ["energy", "residual_sup", "residual_l2", "gradient_norm", "hessian_negative",
                 "hessian_zero", "homothety_derivative", "converged"]


def exp_pmc_solve(c, run: Run, jobs: int):
    base = make_prescription(c.prescription, c.prescription_params)
    sgrid = SphereGrid(*c.saddle_grid)
    t0 = time.perf_counter()
    if c.prescription == "slab":
        p = base
        start = StarRegion.ball(sgrid, c.start_radius, c.start_center)
    else:
        p = Truncated(base, c.R_grid[-1]) if c.truncate else base
        path, est = estimate_width(p, engine_config(c), return_path=True)
        run.csv("sweep_log.csv", ["sweep", "max_energy"], enumerate(est.log))
        run.summary.update(width=est.value, argmax_t=est.argmax_t)
        start = path.regions[est.argmax]
    run.stage("path", t0)
    t0 = time.perf_counter()
    cand = refine_saddle(start, p, grid=sgrid)
    run.stage("refine", t0)
    run.csv("saddle.csv", SADDLE_HEADER, _saddle_rows(cand, p))
    run.snapshot("saddle.snap", cand.region)
    run.check("residual", cand.residual_sup < c.residual_tol)
    if c.prescription == "slab":
        td = [translation_derivative(cand.region, p, e) for e in np.eye(3)]
        slab_mass = integrate_interior(cand.region, lambda x: np.linalg.norm(p.grad(x), axis=-1))
        dist = ball_distance(cand.region, 1.0)
        run.csv("slab.csv", ["dE_dx", "dE_dy", "dE_dz", "slab_mass", "ball_distance"], [(*td, slab_mass, dist)])
        run.check("translation_critical", max(abs(v) for v in td) < 1e-6)
        run.check("misses_slab", slab_mass < 1e-6)
    run.summary.update(energy=cand.energy, residual_sup=cand.residual_sup, negative=cand.negative)


def exp_drift_demo(c, run: Run, jobs: int):
    base = make_prescription(c.prescription, c.prescription_params)
    cfg = replace(engine_config(c), r_max=c.drift_offset)
    t0 = time.perf_counter()
    rep, cands, widths = drift_demo(base, c.R_grid, cfg, offset=c.drift_offset,
                                    saddle_grid=SphereGrid(*c.saddle_grid))
    run.stage("drift", t0)
    run.csv("drift.csv", ["R", "width", "energy", "support_radius", "barycenter_norm", "sphere_distance",
                          "residual_sup", "hessian_negative"],
            ((R, w, e, s, b, d, cd.residual_sup, cd.negative) for R, w, e, s, b, d, cd in
             zip(rep.R, widths, rep.energy, rep.support_radius, rep.barycenter_norm, rep.sphere_distance, cands)))
    for R, cd in zip(rep.R, cands):
        run.snapshot(f"saddle_R{R:g}.snap", cd.region)
    run.summary.update(classification=rep.classification, growth_rate=rep.growth_rate,
                       energy_limit_gap=rep.energy_limit_gap)
    if c.expect:
        run.check("classification", rep.classification == c.expect)


def exp_conformal(c, run: Run, jobs: int):
    prof = make_profile(c.profile, c.profile_params)
    t0 = time.perf_counter()
    slope = dt_energy_at_zero(prof)
    radii = np.geomspace(1e-2, 2.0, 60)
    rows = []
    for r in radii:
        o = phi_ode_residual(prof, r)
        rows.append((r, phi(prof, r), o.lhs, o.rhs, o.gap))
    run.csv("certificate.csv", ["r", "phi", "ode_lhs", "ode_rhs", "gap"], rows)
    run.check("ode_identity", max(abs(r[4]) for r in rows) < 1e-8)
    run.check("phi_negative", all(r[1] < 0 for r in rows))
    run.stage("certificate", t0)
    t0 = time.perf_counter()
    cfg = engine_config(c)
    rep = hypothesis_H_check(prof, c.t_grid, cfg)
    run.stage("widths", t0)
    run.csv("conformal.csv", ["t", "width", "first_order", "margin", "decay_H", "decay_divN"], rep.rows())
    for t, m in zip(rep.t, rep.margin):
        if 0 < t <= c.assert_t_max:
            run.check(f"margin_t{t:g}", m > 0)
    run.summary.update(dt_energy_at_zero=slope, phi_1=phi(prof, 1.0), epsilon_estimate=rep.epsilon_estimate,
                       notes=rep.notes)


def exp_hypotheses(c, run: Run, jobs: int):
    base = make_prescription(c.prescription, c.prescription_params)
    reports = [check_H1(base, seed=c.seed),
               check_H2(base, c.h_rho, c.h_sigma, r_max=c.h_rmax, n_dirs=c.h_dirs, n_radii=c.h_radii,
                        seed=c.seed),
               H3_report()]
    if c.check_width and c.prescription != "slab":
        est = estimate_width(Truncated(base, c.R_grid[-1]), engine_config(c))
        reports.append(check_H4(est.value, base))
    run.json("hypotheses.json", [r.to_dict() for r in reports])
    run.csv("hypotheses.csv", ["hypothesis", "pass", "margin", "samples", "seed"],
            ((r.hypothesis, "n/a" if r.passed is None else r.passed,
              "" if r.margin is None else r.margin, r.samples, "" if r.seed is None else r.seed)
             for r in reports))
    for r in reports:
        if r.passed is not None:
            run.check(r.hypothesis, r.passed)


EXPERIMENTS = {
    "width-sweep": exp_width_sweep,
    "pmc-solve": exp_pmc_solve,
    "drift-demo": exp_drift_demo,
    "conformal-example": exp_conformal,
    "hypothesis-report": exp_hypotheses,
}


# ---------------------------------------------------------------------------
# commands


def resolve_out_dir(flag: str | None, conf: cfgmod.ExperimentConfig) -> Path:
    if flag:
        return Path(flag)
    if conf.out_dir:
        return Path(conf.out_dir)
    return Path(os.environ.get(ENV_OUT_DIR, "pmclab-out"))


def run(config_path, seed=None, out_dir=None, jobs=None) -> int:
    try:
        conf = cfgmod.load(config_path)
    except cfgmod.ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None:
        conf.values["seed"] = int(seed)
    njobs = int(jobs) if jobs else conf.jobs
    r = Run(resolve_out_dir(out_dir, conf))
    start = time.perf_counter()
    code = EXIT_OK
    error = None
    try:
        EXPERIMENTS[conf.experiment](conf, r, njobs)
        if not all(r.checks.values()):
            code = EXIT_ASSERT
    except (FloatingPointError, IntegrationError, NotMountainPass, DegeneratePath,
            np.linalg.LinAlgError, ValueError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        print(f"numerical failure: {error}", file=sys.stderr)
        code = EXIT_NUMERIC
    manifest = {
        "config": conf.echo(),
        "config_path": str(config_path),
        "tool_version": __version__,
        "wall_clock_seconds": time.perf_counter() - start,
        "stage_seconds": r.timings,
        "files": list(r.files),
        "checks": r.checks,
        "passed": code == EXIT_OK,
        "exit_code": code,
        "summary": r.summary,
        "error": error,
    }
    r.json("manifest.json", manifest)
    for name, ok in r.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {len(r.files)} files to {r.out}")
    return code


def validate(config_path) -> int:
    problems = cfgmod.validate(config_path)
    for p in problems:
        print(p)
    if problems:
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmclab", description="Prescribed mean curvature min-max experiments")
    ap.add_argument("--version", action="version", version=f"pmclab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="run the experiment described by a config file")
    pr.add_argument("config")
    pr.add_argument("--seed", type=int, default=None, help="override the config seed")
    pr.add_argument("--out-dir", default=None, help=f"output directory (default: config, then ${ENV_OUT_DIR})")
    pr.add_argument("--jobs", type=int, default=None, help="worker processes for R or t sweeps")
    pv = sub.add_parser("validate", help="check a config file without running it")
    pv.add_argument("config")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("PMCLAB_LOG", "WARNING"))
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.config, args.seed, args.out_dir, args.jobs)
    return validate(args.config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
