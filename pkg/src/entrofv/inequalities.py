"""Sampling verifiers for discrete functional inequalities.

The constants in the Poincare-Wirtinger, Beckner and log-Sobolev
inequalities exist but are not known. Each verifier therefore reports the
ratio ``lhs / (weight * seminorm)`` and the constants are fitted in two phases:
a seed-pinned calibration run gives the largest ratio, then fresh draws must
stay below ``VALIDATION_MARGIN`` times that value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .ddfv_mesh import DdfvMesh, discrete_gradient
from .kernels import EntropyGenerator
from .mesh import PrimalMesh

VALIDATION_MARGIN = 1.05
SLACK = 1e-12


class Inequality(str, enum.Enum):
    PW = "pw"
    BECKNER = "beckner"
    LOGSOB = "logsob"


def seminorm(mesh: PrimalMesh, f: np.ndarray) -> float:
    """``sum over interior edges of tau |f_K - f_L|^2``."""
    ii = mesh.interior
    K, L = mesh.edge_cells[ii, 0], mesh.edge_cells[ii, 1]
    return float(mesh.transmissibility[ii] @ (f[K] - f[L]) ** 2)


def functional_lhs(mesh: PrimalMesh, mu: np.ndarray, f: np.ndarray, which: Inequality | str, p: float = 2.0) -> float:
    which = Inequality(which)
    m = mesh.areas
    if which is Inequality.PW:
        mean_f = float(m @ (f * mu))
        return float(m @ ((f - mean_f) ** 2 * mu))
    if which is Inequality.BECKNER:
        return float(m @ (f**2 * mu) - (m @ (f ** (2.0 / p) * mu)) ** p)
    norm2 = float(m @ (f**2 * mu))
    return float(m @ (f**2 * np.log(f**2 / norm2) * mu))


def verify_pw_beckner_logsob(
    mesh: PrimalMesh, mu: np.ndarray, f: np.ndarray, which: Inequality | str, p: float = 2.0
) -> dict:
    """Both sides of the chosen inequality and their ratio.

    ``weight`` is ``mu_inf / zeta`` for PW and Beckner and
    ``sqrt(mu_inf) / zeta^2`` for log-Sobolev.
    """
    which = Inequality(which)
    mu = np.asarray(mu, dtype=float)
    f = np.asarray(f, dtype=float)
    if np.any(mu < 0) or abs(float(mesh.areas @ mu) - 1.0) > 1e-12:
        raise ValueError("mu must be non-negative with sum m_K mu_K = 1")
    if which is Inequality.BECKNER:
        if not 1.0 < p <= 2.0:
            raise ValueError("Beckner needs p in (1, 2]")
        if np.any(f < 0):
            raise ValueError("Beckner needs f >= 0")
    if which is Inequality.LOGSOB and np.any(~(f > 0)):
        raise ValueError("log-Sobolev needs f > 0")
    lhs = functional_lhs(mesh, mu, f, which, p)
    semi = seminorm(mesh, f)
    mu_inf = float(mu.max())
    weight = mu_inf / mesh.zeta if which is not Inequality.LOGSOB else np.sqrt(mu_inf) / mesh.zeta**2
    if semi <= 0.0:
        if lhs > SLACK:
            raise ArithmeticError("zero seminorm with positive left-hand side")
        ratio = 0.0
    else:
        ratio = max(lhs, 0.0) / (weight * semi)
    return {"lhs": lhs, "rhs_seminorm": semi, "weight": float(weight), "ratio": float(ratio)}


# ------------------------------------------------------------------ sampling
def _laplacian(mesh: PrimalMesh) -> np.ndarray:
    n = mesh.n_cells
    ii = mesh.interior
    K, L = mesh.edge_cells[ii, 0], mesh.edge_cells[ii, 1]
    tau = mesh.transmissibility[ii]
    G = np.zeros((n, n))
    np.add.at(G, (K, K), tau)
    np.add.at(G, (L, L), tau)
    np.add.at(G, (K, L), -tau)
    np.add.at(G, (L, K), -tau)
    return G


AMPLITUDES = (0.01, 0.3, 0.9, 3.0)


def gibbs_measure(mesh: PrimalMesh, a: np.ndarray) -> np.ndarray:
    """``exp(-W_a)`` normalized to ``sum m mu = 1``; ``a`` spans the family."""
    x, y = mesh.centers.T
    w = np.exp(-(a[0] * x + a[1] * y + a[2] * x * y + a[3] * (x * x - y * y)))
    return w / float(mesh.areas @ w)


def random_measure(mesh: PrimalMesh, rng: np.random.Generator) -> np.ndarray:
    return gibbs_measure(mesh, rng.uniform(-2.0, 2.0, 4))


def anchor_measures(mesh: PrimalMesh) -> list[np.ndarray]:
    """Uniform measure plus the corners of the parameter box."""
    corners = np.array(np.meshgrid(*[[-2.0, 2.0]] * 4)).reshape(4, -1).T
    return [gibbs_measure(mesh, a) for a in np.vstack([np.zeros(4), corners])]


def worst_pw_direction(mesh: PrimalMesh, mu: np.ndarray) -> np.ndarray:
    """Maximizer of the PW quotient for fixed ``mu`` (generalized eigenvector)."""
    m = mesh.areas
    pm = m * mu
    Q = np.diag(pm) - np.outer(pm, pm)
    G = _laplacian(mesh) + np.outer(m, m)  # regularize the constant mode
    vals, vecs = sla.eigh(Q, G)
    v = vecs[:, -1]
    return v / np.abs(v).max()


def random_function(mesh: PrimalMesh, mu: np.ndarray, rng: np.random.Generator, positive: bool) -> np.ndarray:
    """Mixture of smooth modes, noise and the extremal PW direction."""
    x, y = mesh.centers.T
    kind = rng.integers(4)
    if kind == 0:
        k = rng.integers(0, 3, size=(3, 2))
        c = rng.normal(size=3)
        v = sum(ci * np.cos(np.pi * kx * x) * np.cos(np.pi * ky * y) for ci, (kx, ky) in zip(c, k))
    elif kind == 1:
        v = rng.normal(size=mesh.n_cells)
    else:
        v = worst_pw_direction(mesh, mu) + (0.1 * rng.normal(size=mesh.n_cells) if kind == 3 else 0.0)
    v = np.asarray(v, dtype=float) + 0.0 * x
    if not positive:
        return rng.uniform(0.1, 3.0) * v
    return np.exp(rng.choice(AMPLITUDES) * v / max(np.abs(v).max(), 1e-300))


@dataclass(frozen=True)
class Calibration:
    which: Inequality
    p: float
    constant: float
    n_draws: int
    seed: int


def _ratios(mesh, which, p, n, seed):
    rng = np.random.default_rng(seed)
    positive = Inequality(which) is not Inequality.PW
    out = np.empty(n)
    for i in range(n):
        mu = random_measure(mesh, rng)
        f = random_function(mesh, mu, rng, positive)
        out[i] = verify_pw_beckner_logsob(mesh, mu, f, which, p)["ratio"]
    return out


def _anchor_ratios(mesh, which, p):
    """Extremal directions on the anchor measures, every amplitude for positive forms."""
    which = Inequality(which)
    out = []
    for mu in anchor_measures(mesh):
        v = worst_pw_direction(mesh, mu)
        fs = [v] if which is Inequality.PW else [np.exp(a * v) for a in AMPLITUDES]
        out += [verify_pw_beckner_logsob(mesh, mu, f, which, p)["ratio"] for f in fs]
    return np.array(out)


def calibrate(mesh: PrimalMesh, which: Inequality | str, p: float = 2.0, n_draws: int = 300, seed: int = 0) -> Calibration:
    """Largest ratio over seeded random draws and the deterministic anchor sweep."""
    r = np.concatenate([_ratios(mesh, which, p, n_draws, seed), _anchor_ratios(mesh, which, p)])
    return Calibration(Inequality(which), p, float(r.max()), n_draws, seed)


def validate(mesh: PrimalMesh, cal: Calibration, n_draws: int = 1000, seed: int = 1) -> dict:
    """Fresh draws against the calibrated constant."""
    if seed == cal.seed:
        raise ValueError("validation must use a different seed than calibration")
    r = _ratios(mesh, cal.which, cal.p, n_draws, seed)
    worst = float(r.max())
    return {
        "which": cal.which.value,
        "p": cal.p,
        "calibrated": cal.constant,
        "worst_fresh": worst,
        "excess": worst / cal.constant if cal.constant > 0 else np.inf,
        "passed": worst <= VALIDATION_MARGIN * cal.constant,
    }


def beckner_p_dependence(mesh: PrimalMesh, ps=(2.0, 1.5, 1.2, 1.1, 1.05, 1.01), n_draws: int = 200, seed: int = 0) -> list[dict]:
    """Largest ``(p - 1) zeta lhs / (M_inf seminorm)`` in the particularized Beckner form.

    This is the constant needed per ``p``; it shrinks as ``p -> 1`` while the
    bound's prefactor ``1/(p - 1)`` blows up, so the bound loosens.
    """
    out = []
    for p in ps:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_draws):
            mu = random_measure(mesh, rng)
            v_inf = mu
            v = random_function(mesh, mu, rng, positive=True) * v_inf
            v *= float(mesh.areas @ v_inf) / float(mesh.areas @ v)
            lhs = float(mesh.areas @ (EntropyGenerator(p).phi(v / v_inf) * v_inf))
            semi = seminorm(mesh, (v / v_inf) ** (p / 2))
            if semi > 0:
                worst = max(worst, (p - 1) * mesh.zeta * lhs / (v_inf.max() * semi))
        out.append({"p": p, "constant": worst, "prefactor": 1.0 / (p - 1)})
    return out


# ------------------------------------------------------------------ lemmas
def verify_means_lemma(mu: np.ndarray, g: np.ndarray, q: float, lebesgue: np.ndarray | None = None) -> bool:
    """``||g - mu g||_{L^q_mu} <= 2 ||g - gbar||_{L^q_mu}``.

    ``mu`` and ``lebesgue`` are atom weights summing to one; ``gbar`` is the
    ``lebesgue``-mean (uniform by default).
    """
    mu = np.asarray(mu, dtype=float)
    g = np.asarray(g, dtype=float)
    leb = np.full(len(g), 1.0 / len(g)) if lebesgue is None else np.asarray(lebesgue, dtype=float)
    mu_g, g_bar = float(mu @ g), float(leb @ g)

    def norm(h):
        if np.isinf(q):
            return float(np.abs(h[mu > 0]).max()) if np.any(mu > 0) else 0.0
        return float(mu @ np.abs(h) ** q) ** (1.0 / q)

    lhs, rhs = norm(g - mu_g), 2.0 * norm(g - g_bar)
    return lhs <= rhs + SLACK * max(1.0, abs(rhs))


def verify_csiszar_kullback(mu: np.ndarray, g: np.ndarray) -> bool:
    """``(sum mu |g - 1|)^2 <= 2 sum mu g log g`` for ``sum mu g = 1``."""
    mu = np.asarray(mu, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(~(g > 0)) or abs(float(mu @ g) - 1.0) > 1e-12:
        raise ValueError("g must be positive with sum mu g = 1")
    lhs = float(mu @ np.abs(g - 1.0)) ** 2
    rhs = 2.0 * float(mu @ (g * np.log(g)))
    return lhs <= rhs + SLACK * max(1.0, abs(rhs))


def verify_logsob_ddfv(ddfv: DdfvMesh, v: np.ndarray, v_inf: np.ndarray) -> dict:
    """Both sides (without the constant) of the two-mesh log-Sobolev inequality.

    Needs equal masses on primal and dual cells for ``v`` and ``v_inf``.
    """
    v = np.asarray(v, dtype=float)
    v_inf = np.asarray(v_inf, dtype=float)
    if np.any(~(v > 0)) or np.any(~(v_inf > 0)):
        raise ValueError("states must be positive")
    m = ddfv.measure
    pi, du = ddfv.interior_slice, ddfv.dual_slice
    masses = [m[pi] @ v[pi], m[pi] @ v_inf[pi], m[du] @ v[du], m[du] @ v_inf[du]]
    if np.ptp(masses) > 1e-10 * max(masses):
        raise ValueError("primal and dual masses of v and v_inf must agree")
    M1 = float(masses[0])
    lhs = 0.5 * float(m @ (v * np.log(v / v_inf)))
    grad = discrete_gradient(ddfv, np.sqrt(v / v_inf))
    semi = float(ddfv.m_D @ (grad**2).sum(axis=1))
    rhs = np.sqrt(M1 * float(v_inf.max())) * semi
    return {"lhs": lhs, "rhs": float(rhs), "ratio": lhs / rhs if rhs > 0 else 0.0}


def _gradient_matrix(ddfv: DdfvMesh) -> np.ndarray:
    """Dense ``sum_D m_D |grad^D w|^2`` as a matrix in ``w``."""
    n = ddfv.n_unknowns
    cols = [discrete_gradient(ddfv, e) for e in np.eye(n)]
    Gd = np.stack(cols, axis=-1)                        # (nd, 2, n)
    return np.einsum("d,dki,dkj->ij", ddfv.m_D, Gd, Gd)


def worst_logsob_ddfv_direction(ddfv: DdfvMesh, v_inf: np.ndarray) -> np.ndarray:
    """Perturbation ``w`` maximizing the linearized log-Sobolev quotient.

    For ``v = v_inf (1 + s w)`` with small ``s`` both sides are quadratic in
    ``w``; the maximizer is a generalized eigenvector restricted to
    perturbations that keep the primal and dual masses.
    """
    m = ddfv.measure
    C = np.zeros((2, ddfv.n_unknowns))
    C[0, ddfv.interior_slice] = (m * v_inf)[ddfv.interior_slice]
    C[1, ddfv.dual_slice] = (m * v_inf)[ddfv.dual_slice]
    Z = sla.null_space(C)
    Q = Z.T @ ((m * v_inf)[:, None] * Z)
    G = Z.T @ _gradient_matrix(ddfv) @ Z
    vals, vecs = sla.eigh(Q, G)
    w = Z @ vecs[:, -1]
    return w / np.abs(w).max()


def random_ddfv_pair(ddfv: DdfvMesh, rng: np.random.Generator, amp: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Positive ``(v, v_inf)`` with all four masses equal to one.

    Half of the draws perturb ``v_inf`` along the extremal direction, so the
    running maximum of the ratio settles quickly.
    """
    x, y = ddfv.points.T
    extremal = rng.random() < 0.5
    # extremal draws use the steepest reference densities of the family
    a = rng.choice([-2.0, 2.0], 3) if extremal else rng.uniform(-2, 2, 3)
    v_inf = np.exp(-(a[0] * x + a[1] * y + a[2] * x * y))
    if extremal:
        w = worst_logsob_ddfv_direction(ddfv, v_inf)
        v = v_inf * (1.0 + rng.choice([1e-3, 0.1, 0.5]) * w)
    else:
        k = rng.integers(0, 3, size=2)
        wave = np.cos(np.pi * k[0] * x) * np.cos(np.pi * k[1] * y) + 0.3 * rng.normal(size=len(x))
        v = v_inf * np.exp(amp * rng.uniform(0.01, 1.0) * wave)
    m = ddfv.measure
    for mass, part in ((ddfv.interior_slice, ddfv.primal_slice), (ddfv.dual_slice, ddfv.dual_slice)):
        v_inf[part] /= m[mass] @ v_inf[mass]
        v[part] /= m[mass] @ v[mass]
    return v, v_inf
