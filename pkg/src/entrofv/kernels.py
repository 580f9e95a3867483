"""Scalar kernels: two-point means, entropy generators, elementary inequalities.

All functions are vectorized over numpy arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

LOGMEAN_SWITCH = 1e-5
INEQ_SLACK = 1e-12


class MeanKind(str, enum.Enum):
    ARITHMETIC = "arithmetic"
    LOGARITHMIC = "logarithmic"
    SQRTSQUARE = "sqrtsquare"
    MAX = "max"

    @classmethod
    def parse(cls, value: "str | MeanKind") -> "MeanKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown mean {value!r}; expected one of {names}") from None


def _positive(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise ValueError("mean arguments must be positive")
    return x, y


def _log_ratio(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # log(y/x) via log1p: y - x is exact for close arguments
    return np.log1p((y - x) / x)


def _logmean(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # ordered arguments keep r(x, y) == r(y, x) bit for bit
    x, y = np.minimum(x, y), np.maximum(x, y)
    u = _log_ratio(x, y)
    small = np.abs(u) < LOGMEAN_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (y - x) / np.where(small, 1.0, u)
    # x * (e^u - 1) / u near u = 0
    series = x * (1.0 + u / 2.0 + u * u / 6.0)
    return np.where(small, series, exact)


def mean(kind: MeanKind | str, x, y) -> np.ndarray:
    """Two-point mean ``r(x, y)`` for positive ``x`` and ``y``."""
    kind = MeanKind.parse(kind)
    x, y = _positive(x, y)
    if kind is MeanKind.ARITHMETIC:
        return 0.5 * (x + y)
    if kind is MeanKind.LOGARITHMIC:
        return _logmean(x, y)
    if kind is MeanKind.SQRTSQUARE:
        return 0.25 * (np.sqrt(x) + np.sqrt(y)) ** 2
    return np.maximum(x, y)


def mean_partials(kind: MeanKind | str, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives ``(dr/dx, dr/dy)``.

    For ``Max`` the derivative at ``x == y`` is split evenly.
    """
    kind = MeanKind.parse(kind)
    x, y = _positive(x, y)
    if kind is MeanKind.ARITHMETIC:
        h = np.full(np.broadcast(x, y).shape, 0.5)
        return h, h.copy()
    if kind is MeanKind.SQRTSQUARE:
        s = 0.5 * (np.sqrt(x) + np.sqrt(y))
        return s / (2.0 * np.sqrt(x)), s / (2.0 * np.sqrt(y))
    if kind is MeanKind.MAX:
        gx = np.where(x > y, 1.0, np.where(x < y, 0.0, 0.5))
        return gx, 1.0 - gx
    swap = x > y
    a, b = np.minimum(x, y), np.maximum(x, y)
    u = _log_ratio(a, b)
    small = np.abs(u) < LOGMEAN_SWITCH
    safe = np.where(small, 1.0, u)
    r = _logmean(a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        da = (r / a - 1.0) / safe
        db = (1.0 - r / b) / safe
    da = np.where(small, 0.5 + u / 6.0 + u * u / 24.0, da)
    db = np.where(small, 0.5 - u / 6.0 + u * u / 24.0, db)
    return np.where(swap, db, da), np.where(swap, da, db)


@dataclass(frozen=True)
class EntropyGenerator:
    """``Phi_1(s) = s log s - s + 1`` for ``p == 1``, else ``(s^p - p s)/(p - 1) + 1``."""

    p: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise ValueError("p must lie in [1, 2]")

    def phi(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("entropy argument must be non-negative")
        if self.p == 1.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                slog = np.where(s > 0, s * np.log(np.where(s > 0, s, 1.0)), 0.0)
            return slog - s + 1.0
        p = self.p
        return (s**p - p * s) / (p - 1.0) + 1.0

    def phi_prime(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.p == 1.0:
            if np.any(~(s > 0)):
                raise ValueError("Phi_1' needs a positive argument")
            return np.log(s)
        if np.any(s < 0):
            raise ValueError("entropy argument must be non-negative")
        p = self.p
        return p * (s ** (p - 1.0) - 1.0) / (p - 1.0)


def _holds(lhs, rhs, slack: float = INEQ_SLACK) -> np.ndarray:
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return lhs <= rhs + slack * scale


def check_ineq_func(p, x, y) -> np.ndarray:
    """``(4/p)(x^{p/2} - y^{p/2})^2 <= (x - y)(Phi_p'(x) - Phi_p'(y))``."""
    p = np.asarray(p, dtype=float)
    x, y = _positive(x, y)
    lhs = (4.0 / p) * (x ** (p / 2) - y ** (p / 2)) ** 2
    is_one = p == 1.0
    pp = np.where(is_one, 2.0, p)
    dphi = np.where(
        is_one,
        np.log(x) - np.log(y),
        pp * (x ** (pp - 1) - y ** (pp - 1)) / (pp - 1),
    )
    return _holds(lhs, (x - y) * dphi)


def check_ineq_sub_quadratic(p, x, y) -> np.ndarray:
    """``(x^{p/2} - y^{p/2})^2 >= x^p - y^p - p y^{p-1}(x - y)`` for ``p`` in (1, 2]."""
    p = np.asarray(p, dtype=float)
    x, y = _positive(x, y)
    big = (x ** (p / 2) - y ** (p / 2)) ** 2
    small = x**p - y**p - p * y ** (p - 1) * (x - y)
    return _holds(small, big)


def check_sqrt_log_ineq(x, y) -> np.ndarray:
    """``4 (sqrt x - sqrt y)^2 <= (x - y)(log x - log y)``."""
    x, y = _positive(x, y)
    return _holds(4.0 * (np.sqrt(x) - np.sqrt(y)) ** 2, (x - y) * (np.log(x) - np.log(y)))
