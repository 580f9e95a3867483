"""Nonlinear DDFV scheme without stabilization, Neumann boundary only.

Testing the weak form against the indicator of each unknown gives

    (1/2) m_K (u_K - u_K^old) / dt + sum_D r^D(u) (A^D delta^D g) . delta^D 1_K = 0

with ``g = log u + V``. Boundary-edge cells carry no mass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .assembly import SparsePattern
from .ddfv_mesh import DdfvMesh, delta
from .kernels import MeanKind, mean, mean_partials

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

# row sign and component of each diamond corner K, L, K*, L*
_SIGN = np.array([1.0, -1.0, 1.0, -1.0])
_COMP = np.array([0, 0, 1, 1])


class Combiner(str, enum.Enum):
    MAX = "max"
    ARITHMETIC = "arithmetic"

    @classmethod
    def parse(cls, value: "str | Combiner") -> "Combiner":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown combiner {value!r}; expected max or arithmetic") from None


def _require_positive(u: np.ndarray) -> None:
    if np.any(~(u > 0)):
        raise ValueError("state must be positive")


@dataclass(eq=False)
class DdfvProblem:
    ddfv: DdfvMesh
    potential: Field
    mean: MeanKind | str = MeanKind.ARITHMETIC
    combiner: Combiner | str = Combiner.ARITHMETIC
    dt: float = 1e-3
    initial: Union[Field, np.ndarray, None] = None
    quadrature: int = 3
    clip_initial: bool = True

    V: np.ndarray = field(init=False)
    u0: np.ndarray = field(init=False)
    n_clipped: int = field(init=False, default=0)

    def __post_init__(self):
        d = self.ddfv
        self.mean = MeanKind.parse(self.mean)
        self.combiner = Combiner.parse(self.combiner)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if len(d.primal.dirichlet):
            raise ValueError("the DDFV scheme supports only Neumann boundaries")
        x = d.points
        self.V = np.asarray(self.potential(x[:, 0], x[:, 1]), dtype=float) * np.ones(d.n_unknowns)
        if self.initial is None:
            u0 = np.ones(d.n_unknowns)
        elif callable(self.initial):
            u0 = d.averages(self.initial, self.quadrature)
        else:
            u0 = np.asarray(self.initial, dtype=float).copy()
        if self.clip_initial:
            # closed-form data may dip below zero near a boundary
            self.n_clipped = int(np.count_nonzero(u0 < 0))
            u0 = np.maximum(u0, 0.0)
        if u0.shape != (d.n_unknowns,) or np.any(u0 < 0):
            raise ValueError("initial data must be non-negative, one value per unknown")
        u0[d.n_interior : d.n_interior + d.n_boundary] = 0.0
        self.u0 = u0
        c = d.corners
        rows = np.concatenate([np.arange(d.n_unknowns), np.repeat(c, 4, axis=1).ravel()])
        cols = np.concatenate([np.arange(d.n_unknowns), np.tile(c, (1, 4)).ravel()])
        self._pattern = SparsePattern(rows, cols, d.n_unknowns)

    @property
    def n_unknowns(self) -> int:
        return self.ddfv.n_unknowns

    @property
    def half_mass(self) -> np.ndarray:
        return 0.5 * self.ddfv.measure

    def initial_state(self) -> np.ndarray:
        return self.u0.copy()

    def newton_guess(self, u_old: np.ndarray, floor: float) -> np.ndarray:
        """First Newton iterate: entries at ``floor`` take the mean of their live neighbours.

        Only the starting point changes; the discrete system is the same. Near-zero
        entries otherwise make the log-mean partials blow up.
        """
        d = self.ddfv
        u = np.maximum(u_old, floor)
        low = u <= floor
        a = np.concatenate([d.iK, d.iL, d.iKs, d.iLs])
        b = np.concatenate([d.iL, d.iK, d.iLs, d.iKs])
        n = d.n_unknowns
        # sweep inward until clusters of zeros are filled
        while low.any():
            live = ~low[b]
            total = np.bincount(a[live], weights=u[b[live]], minlength=n)
            count = np.bincount(a[live], minlength=n)
            fill = low & (count > 0)
            if not fill.any():
                break
            u[fill] = total[fill] / count[fill]
            low &= ~fill
        return u

    def newton_norm(self, res: np.ndarray) -> float:
        """Residual rows carry half measures; doubling restores the lumped mass form."""
        return float(2.0 * np.abs(res).sum())

    # ---------------------------------------------------------------- pieces
    def _r_parts(self, u: np.ndarray):
        d = self.ddfv
        r1 = mean(self.mean, u[d.iK], u[d.iL])
        r2 = mean(self.mean, u[d.iKs], u[d.iLs])
        if self.combiner is Combiner.ARITHMETIC:
            rD = 0.5 * (r1 + r2)
            f1 = np.full_like(r1, 0.5)
        else:
            rD = np.maximum(r1, r2)
            f1 = np.where(r1 > r2, 1.0, np.where(r1 < r2, 0.0, 0.5))
        return rD, r1, r2, f1, 1.0 - f1

    def reconstruct_rD(self, u: np.ndarray, D=None) -> np.ndarray:
        _require_positive(np.asarray(u))
        rD = self._r_parts(np.asarray(u, dtype=float))[0]
        return rD if D is None else rD[D]

    def bilinear_T(self, u: np.ndarray, g: np.ndarray, psi: np.ndarray) -> float:
        """``sum_D r^D(u) delta g . A^D delta psi``."""
        rD = self.reconstruct_rD(u)
        dg, dp = delta(self.ddfv, g), delta(self.ddfv, psi)
        return float(np.sum(rD * np.einsum("ni,nij,nj->n", dg, self.ddfv.A, dp)))

    def diamond_fluxes(self, u: np.ndarray) -> np.ndarray:
        """``r^D A^D delta^D g`` per diamond, shape (nd, 2)."""
        _require_positive(u)
        g = np.log(u) + self.V
        rD = self._r_parts(u)[0]
        return rD[:, None] * np.einsum("nij,nj->ni", self.ddfv.A, delta(self.ddfv, g))

    # ---------------------------------------------------------------- system
    def residual(self, u: np.ndarray, u_old: np.ndarray) -> np.ndarray:
        d = self.ddfv
        q = self.diamond_fluxes(u)
        vals = q[:, _COMP] * _SIGN
        div = np.bincount(d.corners.ravel(), weights=vals.ravel(), minlength=d.n_unknowns)
        return self.half_mass * (u - u_old) / self.dt + div

    def jacobian(self, u: np.ndarray) -> sp.csr_matrix:
        _require_positive(u)
        d = self.ddfv
        g = np.log(u) + self.V
        rD, r1, r2, f1, f2 = self._r_parts(u)
        a1, b1 = mean_partials(self.mean, u[d.iK], u[d.iL])
        a2, b2 = mean_partials(self.mean, u[d.iKs], u[d.iLs])
        Adg = np.einsum("nij,nj->ni", d.A, delta(d, g))           # (nd, 2)
        drD = np.column_stack([f1 * a1, f1 * b1, f2 * a2, f2 * b2])  # (nd, 4)
        inv = 1.0 / u[d.corners]                                    # (nd, 4)
        # d(delta g)/du_b = sign_b / u_b in component comp_b
        ddg = np.zeros((d.n_diamonds, 2, 4))
        ddg[:, 0, 0], ddg[:, 0, 1] = inv[:, 0], -inv[:, 1]
        ddg[:, 1, 2], ddg[:, 1, 3] = inv[:, 2], -inv[:, 3]
        dq = Adg[:, :, None] * drD[:, None, :] + rD[:, None, None] * np.einsum("nij,njb->nib", d.A, ddg)
        block = _SIGN[None, :, None] * dq[:, _COMP, :]              # (nd, 4 rows, 4 cols)
        vals = np.concatenate([self.half_mass / self.dt, block.ravel()])
        return self._pattern.assemble(vals)

    # ---------------------------------------------------------------- equilibrium
    def masses(self, u: np.ndarray) -> tuple[float, float]:
        d = self.ddfv
        m = d.measure
        return float(m[d.interior_slice] @ u[d.interior_slice]), float(m[d.dual_slice] @ u[d.dual_slice])

    def steady_state(self) -> np.ndarray:
        """``rho e^{-V}`` on primal cells and ``rho* e^{-V}`` on dual cells, each mass-matched."""
        d = self.ddfv
        w = np.exp(-self.V)
        M1, M1s = self.masses(self.u0)
        if not (M1 > 0 and M1s > 0):
            raise ValueError("initial mass must be positive on both meshes")
        m = d.measure
        rho = M1 / float(m[d.interior_slice] @ w[d.interior_slice])
        rho_s = M1s / float(m[d.dual_slice] @ w[d.dual_slice])
        out = rho * w
        out[d.dual_slice] = rho_s * w[d.dual_slice]
        return out
