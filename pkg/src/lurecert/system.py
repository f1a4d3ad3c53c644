"""Plant and nonlinearity types for forced four-block Lur'e systems.

The plant is

    x' = A x + B1 f(t, C1 x) + B2 w,    y1 = C1 x,    y2 = C2 x,

with ``A`` Metzler and ``B1, B2, C1, C2`` nonnegative, and the nonlinearity
obeys the componentwise increment bound
``|f(t, z1) - f(t, z2)| <= Delta |z1 - z2|``.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ShapeError
from .linalg import DEFAULT_TOL, as_matrix, is_metzler, is_nonnegative

__all__ = ["LureSystem", "Nonlinearity"]


@dataclass(frozen=True, eq=False)
class LureSystem:
    """The five plant matrices; positivity is validated on construction."""

    A: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        for name in ("A", "B1", "B2", "C1", "C2"):
            arr = as_matrix(getattr(self, name), name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ShapeError(f"A must be square, got {self.A.shape}")
        if self.B1.shape[0] != n or self.B2.shape[0] != n:
            raise ShapeError("B1 and B2 must have n rows")
        if self.C1.shape[1] != n or self.C2.shape[1] != n:
            raise ShapeError("C1 and C2 must have n columns")
        if not is_metzler(self.A, self.tol):
            raise DomainError("A is not Metzler")
        for name in ("B1", "B2", "C1", "C2"):
            if not is_nonnegative(getattr(self, name), self.tol):
                raise DomainError(f"{name} has negative entries")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m1(self):
        return self.B1.shape[1]

    @property
    def m2(self):
        return self.B2.shape[1]

    @property
    def p1(self):
        return self.C1.shape[0]

    @property
    def p2(self):
        return self.C2.shape[0]

    def check_delta(self, Delta):
        """Validate an increment-bound matrix against this plant and return it."""
        Delta = as_matrix(Delta, "Delta")
        if Delta.shape != (self.m1, self.p1):
            raise ShapeError(f"Delta must have shape {(self.m1, self.p1)}, got {Delta.shape}")
        if np.any(Delta < 0):
            raise DomainError("Delta must be nonnegative")
        return Delta

    def closed_loop(self, Delta):
        """``A + B1 Delta C1``, the worst-case linearisation."""
        return self.A + self.B1 @ self.check_delta(Delta) @ self.C1

    def vector_field(self, f, t, x, w):
        return self.A @ x + self.B1 @ f(t, self.C1 @ x) + self.B2 @ w


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Evaluatable map ``f(t, zeta)`` with a declared increment bound ``Delta``.

    ``maps_nonnegative`` declares that ``f(t, .)`` sends the nonnegative
    orthant into itself, which together with nonnegative data gives
    nonnegative states.
    """

    func: Callable[[float, np.ndarray], np.ndarray]
    Delta: np.ndarray
    time_varying: bool = False
    maps_nonnegative: bool = False
    name: str = "f"
    descriptor: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        Delta = as_matrix(self.Delta, "Delta")
        if np.any(Delta < 0):
            raise DomainError("Delta must be nonnegative")
        Delta.setflags(write=False)
        object.__setattr__(self, "Delta", Delta)

    @property
    def m1(self):
        return self.Delta.shape[0]

    @property
    def p1(self):
        return self.Delta.shape[1]

    def __call__(self, t, zeta):
        return np.asarray(self.func(t, zeta), dtype=float).reshape(self.m1)
