"""Nonlinear two-point flux scheme with backward Euler in time.

On each edge the flux is ``F = -tau * r(u_K, u_L) * (g_L - g_K)`` with
``g = log u + V``. The Neumann boundary contributes nothing, and Dirichlet
edges use the fixed boundary value as the neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.sparse as sp

from .assembly import SparsePattern
from .kernels import MeanKind, mean, mean_partials
from .mesh import EdgeKind, PrimalMesh, cell_averages

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]
EQUILIBRIUM_TOL = 1e-10


def _require_positive(u: np.ndarray, what: str = "state") -> None:
    if np.any(~(u > 0)):
        raise ValueError(f"{what} must be positive")


@dataclass(eq=False)
class TpfaProblem:
    """Discrete data of one TPFA run.

    ``potential`` and ``dirichlet_value`` are evaluated at cell centers and
    Dirichlet edge midpoints. ``initial`` may be a field (cell-averaged with
    ``quadrature`` points) or an array of cell values.
    """

    mesh: PrimalMesh
    potential: Field
    mean: MeanKind | str = MeanKind.ARITHMETIC
    dt: float = 1e-3
    dirichlet_value: Field | None = None
    initial: Union[Field, np.ndarray, None] = None
    diffusivity: float = 1.0
    quadrature: int = 1
    check_equilibrium: bool = True

    V: np.ndarray = field(init=False)
    V_D: np.ndarray = field(init=False)
    u_D: np.ndarray = field(init=False)
    u0: np.ndarray = field(init=False)

    def __post_init__(self):
        m = self.mesh
        self.mean = MeanKind.parse(self.mean)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if np.ndim(self.diffusivity) != 0 or not self.diffusivity > 0:
            raise ValueError("TPFA supports only a positive scalar diffusivity; use DDFV for tensors")
        if not m.admissible:
            raise ValueError("TPFA needs an orthogonal (admissible) mesh")
        c = m.centers
        self.V = np.asarray(self.potential(c[:, 0], c[:, 1]), dtype=float) * np.ones(m.n_cells)
        self._int = m.interior
        self._dir = m.dirichlet
        xs = m.edge_midpoints[self._dir]
        self.V_D = np.asarray(self.potential(xs[:, 0], xs[:, 1]), dtype=float) * np.ones(len(xs))
        if len(self._dir):
            if self.dirichlet_value is None:
                raise ValueError("mesh has Dirichlet edges but no boundary data was given")
            self.u_D = np.asarray(self.dirichlet_value(xs[:, 0], xs[:, 1]), dtype=float) * np.ones(len(xs))
            _require_positive(self.u_D, "Dirichlet data")
            alpha = np.log(self.u_D) + self.V_D
            if self.check_equilibrium and np.ptp(alpha) > EQUILIBRIUM_TOL:
                raise ValueError(
                    f"log u_D + V varies by {np.ptp(alpha):.3e} across Dirichlet edges; "
                    "boundary data is not at thermal equilibrium"
                )
        else:
            self.u_D = np.empty(0)
        if self.initial is None:
            self.u0 = np.ones(m.n_cells)
        elif callable(self.initial):
            self.u0 = cell_averages(m, self.initial, self.quadrature)
        else:
            self.u0 = np.asarray(self.initial, dtype=float).copy()
        if self.u0.shape != (m.n_cells,) or np.any(self.u0 < 0):
            raise ValueError("initial data must be non-negative, one value per cell")

        ii, dd = self._int, self._dir
        self._K = m.edge_cells[ii, 0]
        self._L = m.edge_cells[ii, 1]
        self._tau = self.diffusivity * m.transmissibility[ii]
        self._KD = m.edge_cells[dd, 0]
        self._tauD = self.diffusivity * m.transmissibility[dd]
        n = m.n_cells
        rows = np.concatenate([np.arange(n), self._K, self._K, self._L, self._L, self._KD])
        cols = np.concatenate([np.arange(n), self._K, self._L, self._K, self._L, self._KD])
        self._pattern = SparsePattern(rows, cols, n)

    # ---------------------------------------------------------------- sizes
    @property
    def n_unknowns(self) -> int:
        return self.mesh.n_cells

    @property
    def mass_weights(self) -> np.ndarray:
        """Diagonal of the mass matrix used in the stopping rule."""
        return self.mesh.areas

    @property
    def has_dirichlet(self) -> bool:
        return len(self._dir) > 0

    def newton_norm(self, res: np.ndarray) -> float:
        """The residual already equals ``dt^-1 M (Phi(u) - u_old)``."""
        return float(np.abs(res).sum())

    def initial_state(self) -> np.ndarray:
        return self.u0.copy()

    # ---------------------------------------------------------------- fluxes
    def neighbor_value(self, u: np.ndarray, K: int, s: int) -> float:
        """Value across edge ``s`` seen from cell ``K``."""
        m = self.mesh
        kind = m.edge_kind[s]
        if kind == EdgeKind.NEUMANN:
            return float(u[K])
        if kind == EdgeKind.DIRICHLET:
            return float(self.u_D[np.searchsorted(self._dir, s)])
        a, b = m.edge_cells[s]
        if K not in (a, b):
            raise ValueError(f"edge {s} is not an edge of cell {K}")
        return float(u[b if K == a else a])

    def flux(self, u: np.ndarray, K: int, s: int) -> float:
        """Single edge flux ``F_{K,s}`` (outgoing from ``K``)."""
        _require_positive(np.asarray(u))
        m = self.mesh
        kind = m.edge_kind[s]
        if kind == EdgeKind.NEUMANN:
            if K != m.edge_cells[s, 0]:
                raise ValueError(f"edge {s} is not an edge of cell {K}")
            return 0.0
        uL = self.neighbor_value(u, K, s)
        if kind == EdgeKind.DIRICHLET:
            VL = float(self.V_D[np.searchsorted(self._dir, s)])
        else:
            a, b = m.edge_cells[s]
            VL = float(self.V[b if K == a else a])
        tau = self.diffusivity * m.transmissibility[s]
        r = float(mean(self.mean, u[K], uL))
        return -tau * r * ((np.log(uL) + VL) - (np.log(u[K]) + self.V[K]))

    def edge_fluxes(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Interior fluxes ``F_{K,s}`` (K = first cell) and Dirichlet fluxes."""
        _require_positive(u)
        g = np.log(u) + self.V
        K, L = self._K, self._L
        F = -self._tau * mean(self.mean, u[K], u[L]) * (g[L] - g[K])
        gD = np.log(self.u_D) + self.V_D
        uK = u[self._KD]
        FD = -self._tauD * mean(self.mean, uK, self.u_D) * (gD - g[self._KD]) if len(uK) else np.empty(0)
        return F, FD

    # ---------------------------------------------------------------- system
    def residual(self, u: np.ndarray, u_old: np.ndarray) -> np.ndarray:
        """``m_K (u_K - u_old_K)/dt + sum of outgoing fluxes`` per cell."""
        n = self.mesh.n_cells
        F, FD = self.edge_fluxes(u)
        div = (
            np.bincount(self._K, weights=F, minlength=n)
            - np.bincount(self._L, weights=F, minlength=n)
            + np.bincount(self._KD, weights=FD, minlength=n)
        )
        return self.mesh.areas * (u - u_old) / self.dt + div

    def jacobian(self, u: np.ndarray) -> sp.csr_matrix:
        _require_positive(u)
        g = np.log(u) + self.V
        K, L = self._K, self._L
        uK, uL = u[K], u[L]
        r = mean(self.mean, uK, uL)
        rx, ry = mean_partials(self.mean, uK, uL)
        dg = g[L] - g[K]
        dFK = -self._tau * (rx * dg - r / uK)
        dFL = -self._tau * (ry * dg + r / uL)
        KD = self._KD
        if len(KD):
            uK = u[KD]
            rD = mean(self.mean, uK, self.u_D)
            rxD, _ = mean_partials(self.mean, uK, self.u_D)
            dgD = np.log(self.u_D) + self.V_D - g[KD]
            dFD = -self._tauD * (rxD * dgD - rD / uK)
        else:
            dFD = np.empty(0)
        vals = np.concatenate([self.mesh.areas / self.dt, dFK, dFL, -dFK, -dFL, dFD])
        return self._pattern.assemble(vals)

    # ---------------------------------------------------------------- equilibrium
    def steady_state(self) -> np.ndarray:
        """Thermal equilibrium ``rho * exp(-V)``.

        ``rho`` matches the initial mass without Dirichlet edges and equals
        ``exp(log u_D + V)`` otherwise.
        """
        w = np.exp(-self.V)
        if self.has_dirichlet:
            rho = float(np.exp(np.mean(np.log(self.u_D) + self.V_D)))
        else:
            mass = float(self.mesh.areas @ self.u0)
            if not mass > 0:
                raise ValueError("initial mass must be positive")
            rho = mass / float(self.mesh.areas @ w)
        return rho * w

    def steady_bounds(self) -> tuple[float, float]:
        s = self.steady_state()
        return float(s.min()), float(s.max())
