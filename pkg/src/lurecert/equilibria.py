"""Constant trajectories of forced positive Lur'e systems.

For constant forcing ``w*`` the equilibrium equation
``0 = A x + B1 f(C1 x) + B2 w*`` is solved through the output fixed point

    y = F(y) := G11(0) f(y) - C1 A^{-1} B2 w*,

which contracts in the weighted seminorm ``|.|_v`` when
``v^T G11(0) Delta <= rho v^T`` with ``v >> 0`` and ``rho < 1``. The state
follows as ``x* = -A^{-1} (B1 f(y*) + B2 w*)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, PreconditionError, ShapeError
from .linalg import (
    DEFAULT_TOL,
    as_vector,
    is_irreducible,
    perron_left_vector,
    spectral_abscissa,
    transfer_eval,
    weighted_seminorm,
)
from .system import LureSystem, Nonlinearity

__all__ = [
    "PerronWeight",
    "Equilibrium",
    "find_perron_weight",
    "solve_equilibrium",
    "uniqueness_probe",
]


@dataclass(frozen=True, eq=False)
class PerronWeight:
    """Weight ``v >> 0`` and rate ``rho in [0, 1)`` with ``v^T G11(0) Delta <= rho v^T``."""

    v: np.ndarray
    rho: float


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """Solution of the equilibrium equation.

    ``error_bound`` is the a-posteriori bound on ``|y - y*|_v`` from the
    contraction estimate; ``max_contraction`` is the largest observed ratio
    ``|F(y_{k+1}) - F(y_k)|_v / |y_{k+1} - y_k|_v``.
    """

    w_star: np.ndarray
    x_star: np.ndarray
    y_star: np.ndarray
    residual: float
    iterations: int
    error_bound: float
    max_contraction: float

    def to_dict(self):
        return {
            "w_star": self.w_star.tolist(),
            "x_star": self.x_star.tolist(),
            "y_star": self.y_star.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "error_bound": self.error_bound,
            "max_contraction": self.max_contraction,
        }


def _require_hurwitz(sys):
    if spectral_abscissa(sys.A) >= 0:
        raise PreconditionError("A must be Hurwitz for constant trajectories to be computed")


def find_perron_weight(sys: LureSystem, Delta, v=None, rho=None, tol=DEFAULT_TOL) -> PerronWeight:
    """Weight for the contraction argument on ``G11(0) Delta``.

    With ``v`` supplied it is verified (and ``rho`` defaults to the smallest
    admissible value). Otherwise the scalar case returns ``v = 1``, a zero
    matrix returns ``v = 1/p1`` with ``rho = 0``, and an irreducible matrix
    returns its left Perron vector. A reducible non-scalar matrix needs a
    user-supplied ``v``.

    Raises
    ------
    PreconditionError
        If ``rho >= 1``, or if no weight can be produced.
    """
    Delta = sys.check_delta(Delta)
    _require_hurwitz(sys)
    M = transfer_eval(sys, 0.0).G11 @ Delta
    M = np.where(np.abs(M) < 1e-300, 0.0, M)
    p1 = M.shape[0]
    if v is not None:
        v = as_vector(v, "v")
        if v.size != p1:
            raise ShapeError(f"v must have length {p1}")
        if not np.all(v > 0):
            raise DomainError("v must be strictly positive")
        vM = v @ M
        needed = float(np.max(vM / v))
        rho = needed if rho is None else float(rho)
        if np.any(vM > rho * v + tol * max(1.0, float(np.max(v)))):
            raise PreconditionError(
                f"v^T G11(0) Delta <= rho v^T fails for rho={rho}; smallest rho is {needed:.6g}"
            )
        if rho >= 1:
            raise PreconditionError(f"rho={rho} is not below 1; the fixed-point map need not contract")
        return PerronWeight(v, max(rho, 0.0))
    if not np.any(M):
        return PerronWeight(np.full(p1, 1.0 / p1), 0.0)
    if p1 == 1:
        rho = float(M[0, 0])
        v = np.ones(1)
    elif is_irreducible(M):
        rho, v = perron_left_vector(M)
    else:
        raise PreconditionError(
            "G11(0) Delta is reducible; supply a weight v >> 0 with v^T G11(0) Delta <= rho v^T"
        )
    if rho >= 1:
        raise PreconditionError(
            f"rho(G11(0) Delta) = {rho:.6g} >= 1: the small-gain condition fails and no "
            "contraction weight exists"
        )
    return PerronWeight(v, rho)


def solve_equilibrium(sys: LureSystem, f: Nonlinearity, w_star, pw: PerronWeight, tol=1e-10,
                      max_iter=100_000, y0=None) -> Equilibrium:
    """Fixed-point iteration ``y <- F(y)`` from ``y0`` (default zero).

    Stops once ``|y_{k+1} - y_k|_v <= tol (1 - rho) / rho``, which bounds
    ``|y_{k+1} - y*|_v`` by ``tol``. The equilibrium residual
    ``||A x* + B1 f(C1 x*) + B2 w*||_inf`` is then required to be at most
    ``10 tol`` relative to the magnitude of ``A x*``.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` is reached, the iterates become non-finite, or the
        residual check fails (all indicate an invalid weight or bound).
    """
    if f.time_varying:
        raise PreconditionError("constant trajectories require a time-invariant nonlinearity")
    _require_hurwitz(sys)
    w_star = as_vector(w_star, "w_star")
    if w_star.size != sys.m2:
        raise ShapeError(f"w_star must have length {sys.m2}")
    A = np.asarray(sys.A)
    Ainv_B1 = np.linalg.solve(A, sys.B1)
    Ainv_B2w = np.linalg.solve(A, sys.B2 @ w_star)
    G11 = -sys.C1 @ Ainv_B1
    offset = -sys.C1 @ Ainv_B2w
    v, rho = pw.v, float(pw.rho)
    if not 0 <= rho < 1:
        raise DomainError("rho must lie in [0, 1)")

    def F(y):
        return G11 @ f(0.0, y) + offset

    y = np.zeros(sys.p1) if y0 is None else as_vector(y0, "y0").copy()
    threshold = tol * (1.0 - rho) / rho if rho > 0 else math.inf
    max_ratio = 0.0
    prev_step = None
    y_next = F(y)
    iterations = 1
    while True:
        if not np.all(np.isfinite(y_next)):
            raise ConvergenceError(f"fixed-point iterates became non-finite at iteration {iterations}")
        step = weighted_seminorm(y_next - y, v)
        if prev_step is not None and prev_step > 0:
            max_ratio = max(max_ratio, step / prev_step)
        if step <= threshold or step == 0.0:
            break
        if iterations >= max_iter:
            raise ConvergenceError(
                f"fixed-point iteration did not converge in {max_iter} steps "
                f"(last step {step:.3e}); check the weight and increment bound"
            )
        y, y_next = y_next, F(y_next)
        prev_step = step
        iterations += 1
    y_star = y_next
    bound = rho / (1.0 - rho) * step if rho > 0 else 0.0
    x_star = -(Ainv_B1 @ f(0.0, y_star) + Ainv_B2w) + 0.0  # no signed zeros
    Ax = A @ x_star
    residual = float(np.max(np.abs(Ax + sys.B1 @ f(0.0, sys.C1 @ x_star) + sys.B2 @ w_star)))
    scale = max(1.0, float(np.max(np.abs(Ax))))
    if residual > 10.0 * tol * scale:
        raise ConvergenceError(
            f"equilibrium residual {residual:.3e} exceeds 10*tol*scale={10 * tol * scale:.3e}"
        )
    return Equilibrium(w_star, x_star, y_star, residual, iterations, bound, max_ratio)


def uniqueness_probe(sys: LureSystem, f: Nonlinearity, w_star, pw: PerronWeight, trials=20,
                     tol=1e-10, seed=0, max_iter=100_000, return_spread=False):
    """Restart the iteration from random ``y0`` of magnitudes ``1e-2 .. 1e4``.

    True iff every restart converges and all limits lie within ``100 tol``
    (max-norm, relative to ``max(1, |y*|)``) of the reference solution from
    zero. Divergence gives False. With ``return_spread`` the largest
    observed distance is returned as well (``inf`` on divergence).
    """
    rng = np.random.default_rng(seed)
    ref = solve_equilibrium(sys, f, w_star, pw, tol, max_iter).y_star
    scale = max(1.0, float(np.max(np.abs(ref))))
    spread = 0.0
    for _ in range(int(trials)):
        mag = 10.0 ** rng.uniform(-2, 4)
        y0 = rng.normal(0.0, mag, sys.p1)
        try:
            y = solve_equilibrium(sys, f, w_star, pw, tol, max_iter, y0=y0).y_star
        except ConvergenceError:
            return (False, math.inf) if return_spread else False
        spread = max(spread, float(np.max(np.abs(y - ref))))
    agree = spread <= 100.0 * tol * scale
    return (agree, spread) if return_spread else agree
