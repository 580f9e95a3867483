"""Closed-form test cases and a finite-difference PDE-residual oracle.

Model: ``d_t u = div(Lambda (grad u + u grad V))`` on the unit square.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

NU = np.pi**2 + 0.25


@dataclass(frozen=True)
class TestCase:
    id: str
    potential: Callable
    grad_potential: Callable
    anisotropy: np.ndarray
    exact: Callable                  # exact(x, y, t)
    dirichlet: Callable | None = None  # predicate on an edge midpoint
    dirichlet_value: Callable | None = None
    eps: float = 0.0
    lambda11: float = 1.0

    __test__ = False  # not a pytest class

    def initial(self, x, y):
        return self.exact(x, y, 0.0)


def _on_vertical_sides(xs: np.ndarray) -> bool:
    return bool(xs[0] < 1e-12 or xs[0] > 1 - 1e-12)


def tpfa_mixed(sign: float = -1.0) -> TestCase:
    """Dirichlet on ``x1 = 0, 1`` and Neumann on ``x2 = 0, 1``; ``V = sign * x1``.

    Only ``sign = -1`` is consistent with the closed form; ``+1`` is kept to
    exhibit the mismatch.
    """

    def exact(x, y, t):
        x = np.asarray(x, dtype=float)
        return np.exp(x) + np.exp(x / 2 - NU * t) * np.sin(np.pi * x) + 0.0 * np.asarray(y)

    return TestCase(
        id="tpfa_mixed" if sign < 0 else "tpfa_mixed_plus",
        potential=lambda x, y: sign * np.asarray(x, dtype=float) + 0.0 * np.asarray(y),
        grad_potential=lambda x, y: (sign + 0.0 * np.asarray(x), 0.0 * np.asarray(y)),
        anisotropy=np.eye(2),
        exact=exact,
        dirichlet=_on_vertical_sides,
        dirichlet_value=lambda x, y: np.exp(np.asarray(x, dtype=float)) + 0.0 * np.asarray(y),
    )


def ddfv_eps(eps: float = 1e-2, lambda11: float = 1.0) -> TestCase:
    """Neumann problem with ``V = -x2`` and ``Lambda = diag(lambda11, 1)``."""

    def exact(x, y, t):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (
            np.pi * np.exp(y - 0.5)
            + np.exp(-NU * t + y / 2) * (np.pi * np.cos(np.pi * y) + 0.5 * np.sin(np.pi * y))
            + eps * np.exp(-np.pi**2 * lambda11 * t) * np.cos(np.pi * x)
        )

    return TestCase(
        id="ddfv_eps",
        potential=lambda x, y: -np.asarray(y, dtype=float) + 0.0 * np.asarray(x),
        grad_potential=lambda x, y: (0.0 * np.asarray(x), -1.0 + 0.0 * np.asarray(y)),
        anisotropy=np.diag([float(lambda11), 1.0]),
        exact=exact,
        eps=float(eps),
        lambda11=float(lambda11),
    )


def get_case(name: str, **kw) -> TestCase:
    if name == "tpfa_mixed":
        return tpfa_mixed(kw.get("sign", -1.0))
    if name == "ddfv_eps":
        return ddfv_eps(kw.get("eps", 1e-2), kw.get("lambda11", 1.0))
    raise ValueError(f"unknown test case {name!r}")


# ------------------------------------------------------------------ oracle
_H = 1e-3


def _d1(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float = _H) -> np.ndarray:
    """Fourth-order central first derivative."""
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)


def flux_field(case: TestCase, x, y, t) -> tuple[np.ndarray, np.ndarray]:
    """``J = -Lambda (grad u + u grad V)``."""
    u = case.exact(x, y, t)
    ux = _d1(lambda s: case.exact(s, y, t), x)
    uy = _d1(lambda s: case.exact(x, s, t), y)
    vx, vy = case.grad_potential(x, y)
    gx, gy = ux + u * vx, uy + u * vy
    A = case.anisotropy
    return -(A[0, 0] * gx + A[0, 1] * gy), -(A[1, 0] * gx + A[1, 1] * gy)


def pde_residual(case: TestCase, x, y, t) -> np.ndarray:
    """``d_t u + div J`` by nested fourth-order differences."""
    ut = _d1(lambda s: case.exact(x, y, s), t)
    divx = _d1(lambda s: flux_field(case, s, y, t)[0], x)
    divy = _d1(lambda s: flux_field(case, x, s, t)[1], y)
    return ut + divx + divy


def validate_case(case: TestCase, n_space: int = 21, times=(0.0, 0.05, 0.2, 1.0)) -> dict:
    """Max PDE and boundary residuals on a space-time sample grid.

    Residuals are scaled by ``max(1, max |u|)``.
    """
    s = np.linspace(0.02, 0.98, n_space)
    X, Y = np.meshgrid(s, s)
    edge = np.linspace(0.0, 1.0, n_space)
    pde, bc_dir, bc_neu_x1, bc_neu_x2, scale = 0.0, 0.0, 0.0, 0.0, 1.0
    for t in times:
        t = max(float(t), 3 * _H)
        scale = max(scale, float(np.abs(case.exact(X, Y, t)).max()))
        pde = max(pde, float(np.abs(pde_residual(case, X, Y, t)).max()))
        for side in (0.0, 1.0):
            xs = np.full_like(edge, side)
            if case.dirichlet is not None:
                bc_dir = max(bc_dir, float(np.abs(case.exact(xs, edge, t) - case.dirichlet_value(xs, edge)).max()))
            else:
                bc_neu_x1 = max(bc_neu_x1, float(np.abs(flux_field(case, xs, edge, t)[0]).max()))
            bc_neu_x2 = max(bc_neu_x2, float(np.abs(flux_field(case, edge, xs, t)[1]).max()))
    bc = max(bc_dir, bc_neu_x1, bc_neu_x2)
    return {
        "case": case.id,
        "pde_residual": pde / scale,
        "dirichlet_residual": bc_dir / scale,
        "noflux_x1_residual": bc_neu_x1 / scale,
        "noflux_x2_residual": bc_neu_x2 / scale,
        "boundary_residual": bc / scale,
        "pde_ok": pde / scale < 1e-6,
        "boundary_ok": bc / scale < 1e-6,
    }
