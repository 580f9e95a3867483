"""Dual and diamond meshes for discrete duality finite volumes.

Unknowns are laid out as ``[interior cells | boundary-edge cells | dual cells]``.
Diamond ``D`` is built on primal edge ``s`` and joins the primal pair
``(K, L)`` (``L`` a boundary-edge cell on the boundary) with the dual pair
``(K*, L*)``, the two edge endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .mesh import MeshError, PrimalMesh, triangles_average

Anisotropy = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _tri_area(a, b, c) -> np.ndarray:
    return 0.5 * _cross(b - a, c - a)


def evaluate_anisotropy(lam: Anisotropy | None, pts: np.ndarray) -> np.ndarray:
    """Tensor values of shape (n, 2, 2) at ``pts``."""
    n = len(pts)
    if lam is None:
        return np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    if callable(lam):
        out = np.asarray(lam(pts[:, 0], pts[:, 1]), dtype=float)
        return np.broadcast_to(out, (n, 2, 2)).copy()
    arr = np.asarray(lam, dtype=float)
    if arr.shape == ():
        arr = arr * np.eye(2)
    return np.broadcast_to(arr, (n, 2, 2)).copy()


@dataclass(frozen=True, eq=False)
class DdfvMesh:
    primal: PrimalMesh
    n_interior: int
    n_boundary: int
    n_dual: int
    points: np.ndarray          # location of every unknown
    boundary_edge: np.ndarray   # primal edge id of each boundary-edge cell
    dual_boundary: np.ndarray   # bool per dual cell
    measure: np.ndarray         # m_K, 0 for boundary-edge cells, m_K*
    iK: np.ndarray
    iL: np.ndarray
    iKs: np.ndarray
    iLs: np.ndarray
    m_sigma: np.ndarray
    m_sigma_star: np.ndarray
    m_D: np.ndarray
    sin_alpha: np.ndarray
    n1: np.ndarray              # unit normal to sigma, from K to L
    n2: np.ndarray              # unit normal to sigma*, from K* to L*
    x_D: np.ndarray
    lam_D: np.ndarray
    A: np.ndarray               # (nd, 2, 2)
    m_DK: np.ndarray            # (nd, 4): areas of D meeting K, L, K*, L*
    theta: np.ndarray
    theta_tilde: np.ndarray

    @property
    def n_unknowns(self) -> int:
        return self.n_interior + self.n_boundary + self.n_dual

    @property
    def n_diamonds(self) -> int:
        return len(self.iK)

    @property
    def primal_slice(self) -> slice:
        return slice(0, self.n_interior + self.n_boundary)

    @property
    def interior_slice(self) -> slice:
        return slice(0, self.n_interior)

    @property
    def dual_slice(self) -> slice:
        return slice(self.n_interior + self.n_boundary, self.n_unknowns)

    @property
    def Theta(self) -> float:
        return float(max(self.theta.max(), self.theta_tilde.max()))

    @property
    def corners(self) -> np.ndarray:
        """(nd, 4) unknown ids ``K, L, K*, L*``."""
        return np.column_stack([self.iK, self.iL, self.iKs, self.iLs])

    def averages(
        self, f: Callable[[np.ndarray, np.ndarray], np.ndarray], points: int = 3
    ) -> np.ndarray:
        """Averages of ``f`` over primal and dual cells; boundary-edge cells get point values."""
        x = self.points
        xK, xL, xKs, xLs = (x[i] for i in (self.iK, self.iL, self.iKs, self.iLs))
        out = np.asarray(f(x[:, 0], x[:, 1]), dtype=float).copy()
        nc = self.n_interior
        tri = np.concatenate([np.stack([xK, xKs, xLs], 1), np.stack([xL, xKs, xLs], 1)])
        owner = np.concatenate([self.iK, self.iL])
        keep = owner < nc
        out[:nc] = triangles_average(f, tri[keep], owner[keep], nc, points)
        tri = np.concatenate([np.stack([xKs, xK, xL], 1), np.stack([xLs, xK, xL], 1)])
        owner = np.concatenate([self.iKs, self.iLs]) - self.dual_slice.start
        out[self.dual_slice] = triangles_average(f, tri, owner, self.n_dual, points)
        return out


def build_ddfv(primal: PrimalMesh, anisotropy: Anisotropy | None = None) -> DdfvMesh:
    """Construct dual cells and diamonds; ``anisotropy`` is a 2x2 tensor or a field."""
    nc, nv = primal.n_cells, primal.n_vertices
    bnd = primal.boundary
    nb = len(bnd)
    off_dual = nc + nb
    bcell = np.full(primal.n_edges, -1, dtype=np.intp)
    bcell[bnd] = nc + np.arange(nb)

    K = primal.edge_cells[:, 0].copy()
    L = np.where(primal.edge_cells[:, 1] >= 0, primal.edge_cells[:, 1], bcell)
    Ks = off_dual + primal.edges[:, 0]
    Ls = off_dual + primal.edges[:, 1]

    pts = np.vstack([primal.centers, primal.edge_midpoints[bnd], primal.vertices])
    xK, xL, xKs, xLs = pts[K], pts[L], pts[Ks], pts[Ls]
    d_star = xL - xK      # sigma* diagonal
    d_prim = xLs - xKs    # sigma diagonal
    m_s = np.hypot(*d_prim.T)
    m_ss = np.hypot(*d_star.T)
    cross = _cross(d_star, d_prim)
    m_D = 0.5 * np.abs(cross)
    if np.any(m_D <= 0):
        raise MeshError(f"degenerate diamond on edge {int(np.flatnonzero(m_D <= 0)[0])}")
    sin_a = 2.0 * m_D / (m_s * m_ss)

    rot = lambda v: np.column_stack([v[:, 1], -v[:, 0]])
    n1 = rot(d_prim) / m_s[:, None]
    n1 *= np.sign(np.einsum("ij,ij->i", n1, d_star))[:, None]
    n2 = rot(d_star) / m_ss[:, None]
    n2 *= np.sign(np.einsum("ij,ij->i", n2, d_prim))[:, None]

    # diagonal intersection: xK + t d_star on the line of sigma
    t = _cross(xKs - xK, d_prim) / _cross(d_star, d_prim)
    x_D = xK + t[:, None] * d_star
    lam = evaluate_anisotropy(anisotropy, x_D)
    if not np.allclose(lam, np.swapaxes(lam, 1, 2)):
        raise ValueError("anisotropy tensor must be symmetric")
    ln = lambda a, b: np.einsum("ni,nij,nj->n", a, lam, b)
    A = np.empty((len(K), 2, 2))
    A[:, 0, 0] = m_s**2 * ln(n1, n1) / (4 * m_D)
    A[:, 0, 1] = A[:, 1, 0] = m_s * m_ss * ln(n1, n2) / (4 * m_D)
    A[:, 1, 1] = m_ss**2 * ln(n2, n2) / (4 * m_D)

    # sub-triangle areas of D meeting each corner
    m_DK = np.column_stack(
        [
            np.abs(_tri_area(xK, xKs, xLs)),
            np.abs(_tri_area(xL, xKs, xLs)),
            np.abs(_tri_area(xKs, xK, xL)),
            np.abs(_tri_area(xLs, xK, xL)),
        ]
    )
    split_p = m_DK[:, 0] + m_DK[:, 1]
    split_d = m_DK[:, 2] + m_DK[:, 3]
    if not (np.allclose(split_p, m_D, rtol=1e-10) and np.allclose(split_d, m_D, rtol=1e-10)):
        raise MeshError("non-convex diamond: cell center on the wrong side of an edge or dual edge")

    measure = np.zeros(off_dual + nv)
    measure[:nc] = primal.areas
    measure[off_dual:] = np.bincount(Ks - off_dual, weights=m_DK[:, 2], minlength=nv) + np.bincount(
        Ls - off_dual, weights=m_DK[:, 3], minlength=nv
    )
    if np.any(measure[off_dual:] <= 0):
        raise MeshError("dual cell with non-positive measure")

    theta = (m_s / m_ss + m_ss / m_s) / (2.0 * sin_a)
    ratio = np.where(m_DK > 0, m_D[:, None] / np.where(m_DK > 0, m_DK, 1.0), 0.0)
    ratio[:, 1] = np.where(L < nc, ratio[:, 1], 0.0)  # boundary-edge cells carry no area
    theta_tilde = ratio.max(axis=1)

    dual_boundary = np.zeros(nv, dtype=bool)
    dual_boundary[primal.edges[bnd].ravel()] = True

    return DdfvMesh(
        primal=primal,
        n_interior=nc,
        n_boundary=nb,
        n_dual=nv,
        points=pts,
        boundary_edge=bnd.copy(),
        dual_boundary=dual_boundary,
        measure=measure,
        iK=K, iL=L, iKs=Ks, iLs=Ls,
        m_sigma=m_s,
        m_sigma_star=m_ss,
        m_D=m_D,
        sin_alpha=sin_a,
        n1=n1,
        n2=n2,
        x_D=x_D,
        lam_D=lam,
        A=A,
        m_DK=m_DK,
        theta=theta,
        theta_tilde=theta_tilde,
    )


def delta(ddfv: DdfvMesh, u: np.ndarray, D=None) -> np.ndarray:
    """``(u_K - u_L, u_K* - u_L*)`` per diamond, shape (nd, 2) or (2,) for one ``D``."""
    u = np.asarray(u, dtype=float)
    idx = slice(None) if D is None else D
    return np.stack(
        [u[ddfv.iK[idx]] - u[ddfv.iL[idx]], u[ddfv.iKs[idx]] - u[ddfv.iLs[idx]]], axis=-1
    )


def discrete_gradient(ddfv: DdfvMesh, u: np.ndarray, D=None) -> np.ndarray:
    """Diamond gradient built from the two diagonal differences."""
    idx = slice(None) if D is None else D
    d = delta(ddfv, u, D)
    m_s, m_ss = ddfv.m_sigma[idx], ddfv.m_sigma_star[idx]
    g = -(
        (m_s * d[..., 0])[..., None] * ddfv.n1[idx]
        + (m_ss * d[..., 1])[..., None] * ddfv.n2[idx]
    )
    return g / (2.0 * np.asarray(ddfv.m_D[idx])[..., None])


def b_matrix(ddfv: DdfvMesh, D=None) -> np.ndarray:
    """Diagonal bound ``B^D`` with ``w.A w <= w.B w``; returns the two diagonal entries."""
    A = ddfv.A if D is None else ddfv.A[D]
    off = np.abs(A[..., 0, 1])
    return np.stack([np.abs(A[..., 0, 0]) + off, np.abs(A[..., 1, 1]) + off], axis=-1)


def quadratic_form(ddfv: DdfvMesh, d: np.ndarray) -> np.ndarray:
    """``d.A^D d`` per diamond for ``d`` of shape (nd, 2)."""
    return np.einsum("ni,nij,nj->n", d, ddfv.A, d)
