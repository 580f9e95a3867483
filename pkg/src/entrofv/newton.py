"""Projected Newton-Raphson for one backward Euler step.

A problem object must provide ``residual(u, u_old)``, ``jacobian(u)`` and
``newton_norm(res)``. The norm is the l1 norm of ``dt^-1 M (Phi(u) - u_old)``
where ``M`` is the lumped mass matrix and ``Phi`` the explicit map of the
scheme; both schemes express it through their residual.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)


class LinearSolver(str, enum.Enum):
    DIRECT = "direct"
    ITERATIVE = "iterative"


class SingularJacobian(RuntimeError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, message: str, report: "NewtonReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class NewtonConfig:
    floor: float = 1e-12
    tol: float = 1e-10
    max_iter: int = 50
    linear_solver: LinearSolver = LinearSolver.DIRECT
    growth_guard: float = 10.0
    max_halvings: int = 5

    def __post_init__(self):
        if not (self.floor > 0 and self.tol > 0):
            raise ValueError("floor and tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        object.__setattr__(self, "linear_solver", LinearSolver(self.linear_solver))


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_norm: float = np.inf
    converged: bool = False
    norms: list[float] = field(default_factory=list)
    projected: list[int] = field(default_factory=list)
    halvings: int = 0


def linear_solve(jacobian, rhs: np.ndarray, method: LinearSolver | str = LinearSolver.DIRECT) -> np.ndarray:
    """Solve ``J x = rhs``; sparse LU by default, GMRES+ILU with LU fallback otherwise."""
    J = sp.csc_matrix(jacobian)
    rhs = np.asarray(rhs, dtype=float)
    if J.shape[0] != J.shape[1] or J.shape[0] != rhs.shape[0]:
        raise ValueError("jacobian must be square and match the right-hand side")
    if LinearSolver(method) is LinearSolver.ITERATIVE:
        try:
            ilu = spla.spilu(J)
            M = spla.LinearOperator(J.shape, ilu.solve)
            x, info = spla.gmres(J, rhs, M=M, rtol=1e-13, atol=0.0, maxiter=200)
            if info == 0 and np.all(np.isfinite(x)):
                return x
        except RuntimeError:
            pass
        log.debug("iterative solve failed, falling back to LU")
    # Both Jacobians are structurally symmetric and dominated by the mass
    # diagonal, so a symmetric ordering with diagonal pivots is tried first.
    try:
        x = spla.splu(J, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True}).solve(rhs)
        scale = np.abs(rhs).max() + np.abs(J).max() * np.abs(x).max()
        if np.all(np.isfinite(x)) and np.abs(J @ x - rhs).max() <= 1e-10 * scale:
            return x
    except RuntimeError:
        pass
    try:
        x = spla.splu(J).solve(rhs)
    except RuntimeError as err:
        raise SingularJacobian(str(err)) from None
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("non-finite solution of the Newton system")
    return x


def solve_step(problem, u_old: np.ndarray, config: NewtonConfig = NewtonConfig(), guess: np.ndarray | None = None):
    """Advance one time step; returns ``(u_new, report)``.

    At least one Newton update is performed; ``report.iterations`` counts
    updates. Iterates are projected on ``[floor, inf)`` after each update.
    """
    u_old = np.asarray(u_old, dtype=float)
    if not np.all(np.isfinite(u_old)):
        raise ValueError("previous state must be finite")
    if guess is None and hasattr(problem, "newton_guess"):
        guess = problem.newton_guess(u_old, config.floor)
    u = np.maximum(u_old if guess is None else guess, config.floor)
    report = NewtonReport()
    res = problem.residual(u, u_old)
    norm = problem.newton_norm(res)
    while True:
        if report.iterations >= config.max_iter:
            report.residual_norm = norm
            raise NonConvergence(
                f"Newton did not converge in {config.max_iter} iterations (norm {norm:.3e})", report
            )
        step = linear_solve(problem.jacobian(u), -res, config.linear_solver)
        lam = 1.0
        for _ in range(config.max_halvings + 1):
            trial = u + lam * step
            n_proj = int(np.count_nonzero(trial < config.floor))
            trial = np.maximum(trial, config.floor)
            new_res = problem.residual(trial, u_old)
            new_norm = problem.newton_norm(new_res)
            if np.isfinite(new_norm) and new_norm <= config.growth_guard * norm:
                break
            lam *= 0.5
            report.halvings += 1
        u, res, norm = trial, new_res, new_norm
        report.iterations += 1
        report.norms.append(norm)
        report.projected.append(n_proj)
        if norm <= config.tol:
            report.converged = True
            report.residual_norm = norm
            return u, report


def march(
    problem,
    n_steps: int,
    config: NewtonConfig = NewtonConfig(),
    u0: np.ndarray | None = None,
) -> Iterator[tuple[int, np.ndarray, NewtonReport]]:
    """Yield ``(n, u^n, report)`` for ``n = 1 .. n_steps``."""
    u = problem.initial_state() if u0 is None else np.asarray(u0, dtype=float)
    for n in range(1, n_steps + 1):
        u, report = solve_step(problem, u, config)
        yield n, u, report
