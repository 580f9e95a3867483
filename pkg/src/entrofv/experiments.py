"""Experiment runners behind the command line.

Every runner takes a :class:`RunConfig`, writes its artifacts to
``config.out`` when set (``series.csv``, ``table.csv``, ``summary.txt``) and
returns a plain dict with the numbers the acceptance checks read.
"""

from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from . import diagnostics as dg
from .cases import NU, TestCase, ddfv_eps, get_case, tpfa_mixed, validate_case
from .ddfv import DdfvProblem
from .ddfv_mesh import build_ddfv
from .inequalities import (
    VALIDATION_MARGIN,
    Inequality,
    beckner_p_dependence,
    calibrate,
    random_ddfv_pair,
    validate,
    verify_csiszar_kullback,
    verify_logsob_ddfv,
    verify_means_lemma,
)
from .kernels import MeanKind
from .mesh import (
    PrimalMesh,
    generate_cartesian,
    generate_distorted_quad,
    generate_triangular,
    import_mesh,
    regularity_report,
)
from .newton import march
from .tpfa import TpfaProblem

ALL_MEANS = ("arithmetic", "logarithmic", "sqrtsquare", "max")

# Reference L2 errors at T = 0.1 on the triangular family, sizes h0 / 2**level.
REFERENCE_ERRORS = {
    "arithmetic": (1.94e-2, 4.94e-3, 1.24e-3, 3.10e-4, 7.74e-5, 1.94e-5),
    "logarithmic": (1.98e-2, 5.08e-3, 1.28e-3, 3.20e-4, 8.00e-5, 2.00e-5),
    "sqrtsquare": (1.97e-2, 5.05e-3, 1.27e-3, 3.17e-4, 7.93e-5, 1.98e-5),
    "max": (6.64e-3, 2.86e-3, 1.35e-3, 6.77e-4, 3.41e-4, 1.71e-4),
}

TPFA_WINDOW = (0.2, 2.0)
DDFV_EARLY = (0.05, 0.6)
DDFV_LATE = (4.0, 10.0)


# ------------------------------------------------------------------ config
@dataclass
class RunConfig:
    """All knobs of one run; mirrors the command-line flags one to one."""

    scheme: str = "tpfa"
    mesh: str = "tri:0"
    mean: str = "arithmetic"
    combiner: str = "arithmetic"
    dt: float = 1e-4
    tfinal: float = 2.0
    case: str = "tpfa_mixed"
    eps: float = 1e-2
    lambda11: float = 1.0
    p: tuple[float, ...] = (1.0, 2.0)
    seed: int = 0
    out: str | None = None
    levels: int = 3
    dt0: float = 1e-3
    sampling: str = "centroid"
    means: tuple[str, ...] = ALL_MEANS
    draws: int = 1000
    jobs: int = 1

    def __post_init__(self):
        self.dt, self.tfinal = float(self.dt), float(self.tfinal)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.tfinal < self.dt:
            raise ValueError("tfinal must be at least dt")
        if self.sampling not in ("centroid", "center", "average"):
            raise ValueError("sampling must be centroid, center or average")
        self.p = tuple(float(q) for q in self.p)
        self.means = tuple(MeanKind.parse(m).value for m in self.means)

    def echo(self) -> str:
        return "\n".join(f"{k} = {_fmt(v)}" for k, v in dataclasses.asdict(self).items())


def _fmt(v: Any) -> str:
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt(x) for x in v)
    return "" if v is None else str(v)


def parse_config_text(text: str) -> dict[str, Any]:
    """``key = value`` lines, ``#`` comments; values are coerced by field type."""
    types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = coerce(key, value)
    return out


def coerce(key: str, value: str) -> Any:
    t = {f.name: str(f.type) for f in dataclasses.fields(RunConfig)}[key]
    if "tuple[float" in t:
        return tuple(float(x) for x in value.split(",") if x.strip())
    if "tuple[str" in t:
        return tuple(x.strip() for x in value.split(",") if x.strip())
    if t.startswith("float"):
        return float(value)
    if t.startswith("int"):
        return int(value)
    if "None" in t and value == "":
        return None
    return value


# ------------------------------------------------------------------ meshes
def build_mesh(spec: str, dirichlet=None) -> PrimalMesh:
    """``tri:LEVEL``, ``cart:N[xM]``, ``quad:N[:AMPLITUDE]`` or ``file:PATH``."""
    kind, _, arg = spec.partition(":")
    if kind == "tri":
        return generate_triangular(int(arg or 0), dirichlet=dirichlet)
    if kind == "cart":
        nx, _, ny = (arg or "4").partition("x")
        return generate_cartesian(int(nx), int(ny or nx), dirichlet=dirichlet)
    if kind == "quad":
        n, _, amp = (arg or "8").partition(":")
        return generate_distorted_quad(int(n), float(amp or 0.3), dirichlet=dirichlet)
    if kind == "file":
        mesh = import_mesh(arg)
        return mesh.with_boundary(dirichlet) if dirichlet is not None else mesh
    raise ValueError(f"unknown mesh spec {spec!r}")


def _initial_values(case: TestCase, mesh: PrimalMesh, sampling: str):
    """Initial data for TPFA: a field (cell average) or point values at ``x_K``."""
    if sampling == "center":
        return case.initial(mesh.centers[:, 0], mesh.centers[:, 1])
    return case.initial


def _quadrature(sampling: str) -> int:
    return 7 if sampling == "average" else 1


def _write(out: str | None, name: str, text: str) -> None:
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text)


def _summary(config: RunConfig, report: dict | None, results: dict) -> str:
    lines = ["# config", config.echo()]
    if report is not None:
        lines += ["", "# mesh"] + [f"{k} = {v}" for k, v in report.items()]
    lines += ["", "# results"] + [f"{k} = {_fmt(v)}" for k, v in results.items() if not isinstance(v, dict)]
    for k, v in results.items():
        if isinstance(v, dict):
            lines += ["", f"# {k}"] + [f"{kk} = {_fmt(vv)}" for kk, vv in v.items()]
    return "\n".join(lines) + "\n"


def _fit_dict(fit: dg.DecayFit | None) -> dict:
    if fit is None:
        return {"rate": None}
    return {"rate": fit.rate, "intercept": fit.intercept, "residual": fit.residual,
            "n_samples": fit.n_samples, "reliable": fit.reliable, "window": fit.window}


def _try_fit(t, v, window) -> dg.DecayFit | None:
    try:
        return dg.fit_decay(t, v, window)
    except ValueError:
        return None


# ------------------------------------------------------------------ convergence
def convergence_error(mean: str, level: int, dt0: float = 1e-3, sampling: str = "centroid",
                      tfinal: float = 0.1) -> dict:
    """One table cell: L2 error at ``tfinal`` with ``dt = dt0 / 4**level``."""
    case = tpfa_mixed()
    mesh = generate_triangular(level, dirichlet=case.dirichlet)
    dt = dt0 / 4**level
    n_steps = int(round(tfinal / dt))
    problem = TpfaProblem(mesh, case.potential, mean, dt, case.dirichlet_value,
                          _initial_values(case, mesh, sampling), quadrature=_quadrature(sampling))
    start = time.perf_counter()
    iters, u = 0, problem.initial_state()
    for _, u, rep in march(problem, n_steps):
        iters += rep.iterations
    x, y = mesh.centers.T
    err = float(np.sqrt(mesh.areas @ (u - case.exact(x, y, n_steps * dt)) ** 2))
    return {"mean": MeanKind.parse(mean).value, "level": level, "h": mesh.size, "dt": dt,
            "steps": n_steps, "newton": iters, "error": err, "seconds": time.perf_counter() - start}


def _conv_job(args):
    return convergence_error(*args)


def run_convergence(config: RunConfig) -> dict:
    """Error table over levels ``0..config.levels`` for every requested mean."""
    jobs = [(m, l, config.dt0, config.sampling) for m in config.means for l in range(config.levels + 1)]
    start = time.perf_counter()
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_conv_job, jobs))
    else:
        rows = [_conv_job(j) for j in jobs]
    for row in rows:
        prev = next((r for r in rows if r["mean"] == row["mean"] and r["level"] == row["level"] - 1), None)
        row["order"] = math.log2(prev["error"] / row["error"]) if prev else float("nan")
        ref = REFERENCE_ERRORS[row["mean"]]
        row["reference"] = ref[row["level"]] if row["level"] < len(ref) else float("nan")
        row["ratio_to_reference"] = row["error"] / row["reference"]
    cols = ["mean", "level", "h", "dt", "steps", "newton", "error", "order", "reference", "ratio_to_reference", "seconds"]
    table = ",".join(cols) + "\n" + "".join(
        ",".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols) + "\n" for r in rows
    )
    results = {"rows": rows, "seconds": time.perf_counter() - start}
    _write(config.out, "table.csv", table)
    report = regularity_report(generate_triangular(0))
    _write(config.out, "summary.txt", _summary(config, report, {"seconds": results["seconds"]}) + "\n# table\n" + table)
    return results


def orders(rows: list[dict], mean: str) -> dict[int, float]:
    """Observed order between ``level - 1`` and ``level``, keyed by ``level``."""
    return {r["level"]: r["order"] for r in rows if r["mean"] == mean and r["level"] > 0}


# ------------------------------------------------------------------ TPFA decay
def run_decay_tpfa(config: RunConfig) -> dict:
    """L1 distance to equilibrium and Newton statistics for one mean."""
    case = get_case(config.case)
    if case.dirichlet is None:
        raise ValueError("decay-tpfa needs the mixed boundary case")
    mesh = build_mesh(config.mesh, case.dirichlet)
    problem = TpfaProblem(mesh, case.potential, config.mean, config.dt, case.dirichlet_value,
                          _initial_values(case, mesh, config.sampling), quadrature=_quadrature(config.sampling))
    steady = problem.steady_state()
    m = mesh.areas
    n_steps = int(round(config.tfinal / config.dt))
    records = [_tpfa_record(problem, 0.0, problem.initial_state(), steady, config.p, 0)]
    start = time.perf_counter()
    for n, u, rep in march(problem, n_steps):
        records.append(_tpfa_record(problem, n * config.dt, u, steady, config.p, rep.iterations))
    elapsed = time.perf_counter() - start
    t = np.array([r.t for r in records])
    L1 = np.array([r.L1 for r in records])
    its = np.array([r.newton_iters for r in records])
    fit = _try_fit(t, L1, TPFA_WINDOW)
    early = (t > 0) & (t <= 0.5)
    late = t > 0.5
    results = {
        "mean": problem.mean.value,
        "reference_rate": NU,
        "rate": fit.rate if fit else float("nan"),
        "fit": _fit_dict(fit),
        "newton_mean_early": float(its[early].mean()),
        "newton_max_early": int(its[early].max()),
        "newton_min_late": int(its[late].min()) if late.any() else None,
        "newton_max_late": int(its[late].max()) if late.any() else None,
        "mass_initial": float(m @ problem.initial_state()),
        "seconds": elapsed,
    }
    _write(config.out, "series.csv", dg.records_to_csv(records))
    _write(config.out, "summary.txt", _summary(config, regularity_report(mesh), results))
    results["series"] = {"t": t, "L1": L1, "newton": its,
                         "E": {p: np.array([r.E[p] for r in records]) for p in config.p}}
    return results


def _tpfa_record(problem: TpfaProblem, t, u, steady, ps, iters) -> dg.EntropyRecord:
    m = problem.mesh.areas
    E = {p: dg.entropy(u, steady, p, m) for p in ps}
    I1 = dg.dissipation_tpfa(problem, u, steady, 1.0) if t > 0 else float("nan")
    mass = float(m @ u)
    return dg.EntropyRecord(t, E, I1, mass, float("nan"), dg.l1_distance(u, steady, m),
                            dg.l2_distance(u, steady, m), iters)


# ------------------------------------------------------------------ DDFV decay
def ddfv_problem(config: RunConfig) -> tuple[DdfvProblem, TestCase]:
    case = ddfv_eps(config.eps, config.lambda11)
    mesh = build_mesh(config.mesh)
    ddfv = build_ddfv(mesh, case.anisotropy)
    problem = DdfvProblem(ddfv, case.potential, config.mean, config.combiner, config.dt, case.initial)
    return problem, case


def run_decay_ddfv(config: RunConfig) -> dict:
    """Two-mesh relative entropy series with early and late rate fits."""
    problem, case = ddfv_problem(config)
    d = problem.ddfv
    steady = problem.steady_state()
    w = problem.half_mass
    n_steps = int(round(config.tfinal / config.dt))
    u0 = problem.initial_state()
    records = [_ddfv_record(problem, 0.0, u0, steady, config.p, 0)]
    start = time.perf_counter()
    for n, u, rep in march(problem, n_steps):
        records.append(_ddfv_record(problem, n * config.dt, u, steady, config.p, rep.iterations))
    elapsed = time.perf_counter() - start
    t = np.array([r.t for r in records])
    E1 = np.array([r.E[1.0] if 1.0 in r.E else r.E[config.p[0]] for r in records])
    early = _try_fit(t, E1, DDFV_EARLY)
    late = _try_fit(t, E1, DDFV_LATE)
    cross_t, cross_level = dg.regime_crossover(early, late) if early and late else (float("inf"), 0.0)
    ratio = early.rate / late.rate if early and late and late.rate > 0 else float("nan")
    # one regime: nothing measurable late, or the late slope matches the early one
    single = late is None or (early is not None and abs(late.rate / early.rate - 1.0) < 0.1)
    results = {
        "eps": case.eps,
        "lambda11": case.lambda11,
        "early_reference": 2 * NU,
        "late_reference": 2 * np.pi**2 * case.lambda11,
        "ratio_reference": NU / (np.pi**2 * case.lambda11),
        "early_rate": early.rate if early else float("nan"),
        "late_rate": late.rate if late else float("nan"),
        "ratio": ratio,
        "crossover_time": cross_t,
        "crossover_level": cross_level,
        "single_regime": bool(single),
        "clipped_initial_values": problem.n_clipped,
        "mass_primal_drift": _drift([r.mass_primal for r in records]),
        "mass_dual_drift": _drift([r.mass_dual for r in records]),
        "Theta": d.Theta,
        "seconds": elapsed,
        "early_fit": _fit_dict(early),
        "late_fit": _fit_dict(late),
    }
    _write(config.out, "series.csv", dg.records_to_csv(records))
    _write(config.out, "summary.txt", _summary(config, regularity_report(d.primal), results))
    results["series"] = {"t": t, "E1": E1, "newton": np.array([r.newton_iters for r in records]),
                         "I1": np.array([r.I1 for r in records]), "weights": w}
    return results


def _drift(values) -> float:
    v = np.asarray(values, dtype=float)
    return float(np.abs(v - v[0]).max() / abs(v[0]))


def _ddfv_record(problem: DdfvProblem, t, u, steady, ps, iters) -> dg.EntropyRecord:
    w = problem.half_mass
    E = {p: dg.entropy(u, steady, p, w) for p in ps}
    I1 = dg.dissipation_ddfv(problem, u, steady) if t > 0 else float("nan")
    mp, md = problem.masses(u)
    return dg.EntropyRecord(t, E, I1, mp, md, dg.l1_distance(u, steady, w), dg.l2_distance(u, steady, w), iters)


# ------------------------------------------------------------------ inequalities
def run_check_inequalities(config: RunConfig) -> dict:
    """Calibrate and validate the three functional inequalities plus the two lemmas."""
    mesh = build_mesh(config.mesh)
    n_cal = max(config.draws // 3, 50)
    families = {}
    for which, p in ((Inequality.PW, 2.0), (Inequality.BECKNER, 1.5), (Inequality.LOGSOB, 2.0)):
        cal = calibrate(mesh, which, p, n_draws=n_cal, seed=config.seed)
        families[f"{which.value}"] = validate(mesh, cal, n_draws=config.draws, seed=config.seed + 1)
    rng = np.random.default_rng(config.seed)
    n_lemma = max(config.draws, 1)
    means_ok = cs_ok = 0
    for _ in range(n_lemma):
        k = int(rng.integers(2, 12))
        mu = rng.dirichlet(np.ones(k))
        g = rng.normal(size=k) * rng.uniform(0.1, 10)
        q = float(rng.choice([1.0, 1.5, 2.0, 3.0, np.inf]))
        means_ok += verify_means_lemma(mu, g, q)
        h = rng.lognormal(size=k)
        cs_ok += verify_csiszar_kullback(mu, h / float(mu @ h))
    ddfv = build_ddfv(mesh)
    n_ddfv = min(config.draws, 300)
    cal_ls, fresh_ls = (_ddfv_logsob_max(ddfv, n_ddfv, config.seed + k) for k in (0, 1))
    families["logsob_ddfv"] = {"which": "logsob_ddfv", "calibrated": cal_ls, "worst_fresh": fresh_ls,
                               "excess": fresh_ls / cal_ls, "passed": fresh_ls <= VALIDATION_MARGIN * cal_ls}
    beck = beckner_p_dependence(mesh, n_draws=min(config.draws, 200), seed=config.seed)
    results = {
        "families": families,
        "means_lemma_pass": means_ok == n_lemma,
        "csiszar_kullback_pass": cs_ok == n_lemma,
        "beckner_p": {f"p={b['p']:g}": b["constant"] for b in beck},
        "all_pass": all(f["passed"] for f in families.values()) and means_ok == cs_ok == n_lemma,
    }
    flat = dict(results)
    for name, f in families.items():
        flat[name] = f
    _write(config.out, "summary.txt", _summary(config, regularity_report(mesh), flat))
    return results


def _ddfv_logsob_max(ddfv, n: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    return max(verify_logsob_ddfv(ddfv, *random_ddfv_pair(ddfv, rng))["ratio"] for _ in range(n))


def run_validate_case(config: RunConfig, sign: float = -1.0) -> dict:
    case = get_case(config.case, sign=sign, eps=config.eps, lambda11=config.lambda11)
    res = validate_case(case)
    _write(config.out, "summary.txt", _summary(config, None, res))
    return res


RUNNERS = {
    "convergence": run_convergence,
    "decay-tpfa": run_decay_tpfa,
    "decay-ddfv": run_decay_ddfv,
    "check-inequalities": run_check_inequalities,
    "validate-case": run_validate_case,
}


def default_jobs() -> int:
    return max(1, min(4, os.cpu_count() or 1))
