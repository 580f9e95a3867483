"""Relative entropies, dissipations, distances and decay-rate fits."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ddfv import DdfvProblem
from .ddfv_mesh import delta, quadratic_form
from .kernels import EntropyGenerator, mean
from .tpfa import TpfaProblem

FIT_FLOOR = 1e-13
MIN_SAMPLES = 5


def entropy(u: np.ndarray, steady: np.ndarray, p: float, weights: np.ndarray) -> float:
    """``sum w u_inf Phi_p(u / u_inf)``; zero weights drop their entries."""
    keep = weights > 0
    s = steady[keep]
    return float(weights[keep] @ (s * EntropyGenerator(p).phi(u[keep] / s)))


def _tpfa_edge_values(problem: TpfaProblem, u: np.ndarray, steady: np.ndarray):
    """Per-edge ``(tau, u_K, u_L, s_K, s_L)`` over interior then Dirichlet edges."""
    K, L, KD = problem._K, problem._L, problem._KD
    tau = np.concatenate([problem._tau, problem._tauD])
    uK = np.concatenate([u[K], u[KD]])
    uL = np.concatenate([u[L], problem.u_D])
    sK = np.concatenate([steady[K], steady[KD]])
    # at thermal equilibrium the boundary steady value is the data itself
    sL = np.concatenate([steady[L], problem.u_D])
    return tau, uK, uL, sK, sL


def dissipation_tpfa(problem: TpfaProblem, u: np.ndarray, steady: np.ndarray, p: float) -> float:
    """``sum tau r(u_K, u_L) D log(u/u_inf) D Phi_p'(u/u_inf)`` over interior and Dirichlet edges."""
    tau, uK, uL, sK, sL = _tpfa_edge_values(problem, u, steady)
    if len(tau) == 0:
        return 0.0
    gen = EntropyGenerator(p)
    wK, wL = uK / sK, uL / sL
    dlog = np.log(wL) - np.log(wK)
    dphi = gen.phi_prime(wL) - gen.phi_prime(wK)
    return float(np.sum(tau * mean(problem.mean, uK, uL) * dlog * dphi))


def dissipation_hat(problem: TpfaProblem, u: np.ndarray, steady: np.ndarray, p: float) -> float:
    """``(4/p) sum tau min(u_inf_K, u_inf_L) (D (u/u_inf)^{p/2})^2``."""
    tau, uK, uL, sK, sL = _tpfa_edge_values(problem, u, steady)
    d = (uL / sL) ** (p / 2) - (uK / sK) ** (p / 2)
    return float(4.0 / p * np.sum(tau * np.minimum(sK, sL) * d * d))


def dissipation_ddfv(problem: DdfvProblem, u: np.ndarray, steady: np.ndarray) -> float:
    """``sum_D r^D(u) delta log(u/u_inf) . A^D delta log(u/u_inf)``."""
    g = np.log(u / steady)
    rD = problem.reconstruct_rD(u)
    return float(np.sum(rD * quadratic_form(problem.ddfv, delta(problem.ddfv, g))))


def l1_distance(u, steady, weights) -> float:
    return float(weights @ np.abs(u - steady))


def l2_distance(u, steady, weights) -> float:
    return float(np.sqrt(weights @ (u - steady) ** 2))


# ------------------------------------------------------------------ records
@dataclass
class EntropyRecord:
    t: float
    E: dict[float, float]
    I1: float
    mass_primal: float
    mass_dual: float
    L1: float
    L2: float
    newton_iters: int
    I_hat: dict[float, float] = field(default_factory=dict)


def _pname(p: float) -> str:
    return f"E{p:g}"


def records_to_csv(records: Sequence[EntropyRecord], path: str | Path | None = None) -> str:
    """CSV with columns ``t, E1, Ep..., I1, mass_primal, mass_dual, L1, L2, newton_iters``."""
    ps = list(records[0].E) if records else [1.0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *[_pname(p) for p in ps], "I1", "mass_primal", "mass_dual", "L1", "L2", "newton_iters"])
    for r in records:
        w.writerow(
            [f"{r.t:.10g}", *[f"{r.E[p]:.17g}" for p in ps], f"{r.I1:.17g}",
             f"{r.mass_primal:.17g}", f"{r.mass_dual:.17g}", f"{r.L1:.17g}", f"{r.L2:.17g}", r.newton_iters]
        )
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_series_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]} if rows else {}


# ------------------------------------------------------------------ fits
@dataclass(frozen=True)
class DecayFit:
    window: tuple[float, float]
    rate: float
    intercept: float
    residual: float
    n_samples: int
    reliable: bool

    def value_at(self, t: float) -> float:
        return float(np.exp(self.intercept - self.rate * t))


def fit_decay(t, values, window: tuple[float, float], floor: float = FIT_FLOOR) -> DecayFit:
    """Least-squares slope of ``log(value)`` against ``t`` inside ``window``.

    Samples at or below ``floor`` are ignored. ``reliable`` requires the RMS
    residual to be under 10% of the spread of ``log(value)``.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    sel = (t >= window[0]) & (t <= window[1]) & (v > floor)
    if np.count_nonzero(sel) < MIN_SAMPLES:
        raise ValueError(
            f"only {int(np.count_nonzero(sel))} usable samples in window {window}; need {MIN_SAMPLES}"
        )
    ts, ys = t[sel], np.log(v[sel])
    A = np.column_stack([ts, np.ones_like(ts)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ys, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [slope, icpt] - ys) ** 2)))
    spread = float(np.ptp(ys))
    return DecayFit(
        window=(float(window[0]), float(window[1])),
        rate=float(-slope),
        intercept=float(icpt),
        residual=rms,
        n_samples=int(sel.sum()),
        reliable=rms <= 0.1 * spread if spread > 0 else rms == 0.0,
    )


def regime_crossover(early: DecayFit, late: DecayFit) -> tuple[float, float]:
    """Time and value where the two fitted lines intersect."""
    if np.isclose(early.rate, late.rate):
        return float("inf"), 0.0
    t = (early.intercept - late.intercept) / (early.rate - late.rate)
    return float(t), early.value_at(t)


def last_time_above(t, values, level: float) -> float:
    t = np.asarray(t)
    above = np.flatnonzero(np.asarray(values) > level)
    return float(t[above[-1]]) if len(above) else float(t[0])
