"""Small dense matrix utilities for positive-systems analysis.

Everything here works on plain ``numpy.ndarray`` values and is pure: no
function mutates its arguments. Cone relations between vectors or matrices
(``>=``, ``>``, ``>>``) are evaluated with an explicit absolute tolerance,
default :data:`DEFAULT_TOL`.
"""

import enum
import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import (
    ConvergenceError,
    DomainError,
    InconsistencyError,
    ShapeError,
    SingularityError,
)

DEFAULT_TOL = 1e-9
#: entries with magnitude at or below this count as structural zeros
PATTERN_TOL = 1e-12
#: condition number above which ``sI - A`` is treated as singular
COND_LIMIT = 1e12

__all__ = [
    "DEFAULT_TOL",
    "Relation",
    "NonnegativityWarning",
    "TransferBlocks",
    "as_matrix",
    "as_vector",
    "compare",
    "weighted_seminorm",
    "is_metzler",
    "is_nonnegative",
    "spectral_abscissa",
    "is_hurwitz",
    "is_hurwitz_metzler_crosscheck",
    "spectral_radius",
    "is_irreducible",
    "perron_left_vector",
    "matrix_exp",
    "lti_transfer",
    "transfer_eval",
]


class NonnegativityWarning(RuntimeWarning):
    """A quantity that is nonnegative in exact arithmetic came out negative."""


class Relation(enum.Enum):
    """Cone orderings: ``M >= N``, ``M > N`` (>= and not equal), ``M >> N``."""

    GEQ = ">="
    GT = ">"
    GG = ">>"


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array (1-D input becomes one row)."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {arr.ndim}-D")
    if arr.size == 0:
        raise ShapeError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def as_vector(v, name="vector"):
    """Return ``v`` as a finite 1-D float array."""
    arr = np.atleast_1d(np.array(v, dtype=float))
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def _square(M, name="matrix"):
    M = as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    return M


def compare(M, N, relation=Relation.GEQ, tol=DEFAULT_TOL):
    """Evaluate the cone relation ``M relation N`` componentwise.

    ``GEQ`` means every gap ``M - N`` is ``>= -tol``; ``GT`` additionally
    requires some gap ``> tol``; ``GG`` requires every gap ``> tol``.
    """
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    M = np.asarray(M, dtype=float)
    N = np.broadcast_to(np.asarray(N, dtype=float), M.shape)
    gap = M - N
    relation = Relation(relation)
    if relation is Relation.GEQ:
        return bool(np.all(gap >= -tol))
    if relation is Relation.GT:
        return bool(np.all(gap >= -tol) and np.any(gap > tol))
    return bool(np.all(gap > tol))


def is_nonnegative(M, tol=DEFAULT_TOL):
    return compare(M, 0.0, Relation.GEQ, tol)


def weighted_seminorm(z, v):
    """Weighted one-seminorm ``v^T |z|``.

    A norm exactly when ``v >> 0``; with ``v = 1`` it is the usual 1-norm.
    """
    z = as_vector(z, "z")
    v = as_vector(v, "v")
    if z.shape != v.shape:
        raise ShapeError(f"z has length {z.size} but v has length {v.size}")
    if np.any(v < 0):
        raise DomainError("weight v must be nonnegative")
    return float(v @ np.abs(z))


def is_metzler(M, tol=DEFAULT_TOL):
    """True iff every off-diagonal entry of the square matrix ``M`` is ``>= -tol``."""
    M = _square(M)
    off = M - np.diag(np.diag(M))
    return bool(np.all(off >= -tol))


def _eigvals(M):
    try:
        lam = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise ConvergenceError("eigenvalue iteration returned non-finite values")
    return lam


def spectral_abscissa(M):
    """Largest real part over the spectrum of ``M``."""
    return float(np.max(_eigvals(_square(M)).real))


def is_hurwitz(M):
    return spectral_abscissa(M) < 0.0


def spectral_radius(M):
    """Largest eigenvalue modulus of ``M``."""
    return float(np.max(np.abs(_eigvals(_square(M)))))


def is_hurwitz_metzler_crosscheck(M, tol=1e-10):
    """Decide whether a Metzler matrix is Hurwitz by two independent routes.

    Route one is the sign of the spectral abscissa; route two is the
    characterisation via ``M^{-1} <= 0``. Both must agree, otherwise an
    :class:`~lurecert.errors.InconsistencyError` is raised. ``tol`` is taken
    relative to the largest inverse entry.
    """
    M = _square(M)
    if not is_metzler(M):
        raise DomainError("matrix is not Metzler")
    by_spectrum = spectral_abscissa(M) < 0.0
    if np.linalg.cond(M) > 1.0 / np.finfo(float).eps:
        if by_spectrum:
            raise InconsistencyError(
                "matrix is numerically singular although its abscissa is negative"
            )
        return False
    inv = np.linalg.inv(M)
    scale = max(1.0, float(np.max(np.abs(inv))))
    by_inverse = bool(np.all(inv <= tol * scale))
    if by_inverse != by_spectrum:
        raise InconsistencyError(
            f"spectral test says Hurwitz={by_spectrum} but inverse sign test "
            f"says {by_inverse}"
        )
    return by_spectrum


def is_irreducible(M):
    """Strong connectivity of the graph with an edge ``j -> i`` when ``|m_ij| > 1e-12``."""
    M = _square(M)
    n = M.shape[0]
    if n == 1:
        return True
    pattern = (np.abs(M) > PATTERN_TOL).astype(np.int8)
    # graph orientation is irrelevant for strong connectivity
    ncomp, _ = connected_components(pattern, directed=True, connection="strong")
    return ncomp == 1


def perron_left_vector(M, tol=None, max_iter=200_000):
    """Perron root and strictly positive left Perron vector of ``M``.

    Runs power iteration on ``(M + sigma I)^T``; the shift makes the matrix
    primitive, so the iteration converges even when ``M`` is periodic (for
    instance a permutation matrix). The vector is normalised to unit 1-norm.

    Parameters
    ----------
    M : array_like
        Square, nonnegative and irreducible.
    tol : float, optional
        Target for the residual ``||v^T M - rho v^T||_1``. Defaults to
        ``1e-12 * max(1, max|M|)``.
    max_iter : int
        Iteration cap; reaching it raises :class:`ConvergenceError`.

    Returns
    -------
    (rho, v) : (float, ndarray)
    """
    M = _square(M)
    if np.any(M < -PATTERN_TOL):
        raise DomainError("Perron vector requires a nonnegative matrix")
    if not is_irreducible(M):
        raise DomainError("matrix is reducible; the Perron vector need not be positive")
    n = M.shape[0]
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.max(np.abs(M))))
    M = np.clip(M, 0.0, None)
    if n == 1:
        return float(M[0, 0]), np.ones(1)

    sigma = max(spectral_radius(M), PATTERN_TOL)
    shifted_T = (M + sigma * np.eye(n)).T
    # warm start from a dense eigen-solve; the power iteration certifies it
    lam, vecs = np.linalg.eig(M.T)
    guess = np.abs(vecs[:, int(np.argmax(lam.real))].real)
    v = guess / guess.sum() if guess.sum() > 0 and np.all(np.isfinite(guess)) else np.full(n, 1.0 / n)
    v = np.maximum(v, np.finfo(float).tiny)
    v /= v.sum()

    for _ in range(max_iter):
        vM = M.T @ v
        rho = float(vM.sum())  # ||v^T M||_1 with ||v||_1 = 1
        if np.abs(vM - rho * v).sum() <= tol:
            break
        v = shifted_T @ v
        v /= v.sum()
    else:
        raise ConvergenceError(
            f"Perron power iteration stagnated after {max_iter} iterations"
        )
    if not np.all(v > 0):
        raise ConvergenceError("Perron vector lost strict positivity")
    return rho, v


def matrix_exp(M, t=1.0, clamp_tol=1e-12):
    """Matrix exponential ``e^{M t}`` by scaling and squaring with a Pade core.

    For Metzler ``M`` and ``t >= 0`` the exact result is entrywise
    nonnegative; tiny negative round-off (above ``-clamp_tol`` times the
    largest entry) is clamped to zero and any larger violation is reported
    with a :class:`NonnegativityWarning`.
    """
    M = _square(M)
    t = float(t)
    if not np.isfinite(t):
        raise DomainError("time must be finite")
    if t == 0.0:
        return np.eye(M.shape[0])
    with np.errstate(over="raise", invalid="raise"):
        try:
            E = scipy.linalg.expm(M * t)
        except FloatingPointError as exc:
            raise OverflowError(f"matrix exponential overflowed for t={t}") from exc
    if not np.all(np.isfinite(E)):
        raise OverflowError(f"matrix exponential overflowed for t={t}")
    if t > 0 and is_metzler(M, tol=0.0):
        floor = -clamp_tol * max(1.0, float(np.max(np.abs(E))))
        if np.any(E < floor):
            warnings.warn(
                f"e^(Mt) of a Metzler matrix has entry {E.min():.3e} below {floor:.3e}",
                NonnegativityWarning,
                stacklevel=2,
            )
        else:
            E = np.where(E < 0.0, 0.0, E)
    return E


def _resolvent_solve(A, s, rhs):
    n = A.shape[0]
    shifted = s * np.eye(n) - A
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularityError(
            f"s={s} is numerically an eigenvalue of A (condition number {cond:.3e})"
        )
    return np.linalg.solve(shifted, rhs)


def lti_transfer(A, B, C, D=None, s=0.0):
    """Real-argument transfer matrix ``C (sI - A)^{-1} B + D``."""
    A = _square(A, "A")
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    if B.shape[0] != A.shape[0] or C.shape[1] != A.shape[0]:
        raise ShapeError("A, B, C dimensions are inconsistent")
    G = C @ _resolvent_solve(A, float(s), B)
    if D is not None:
        D = as_matrix(D, "D")
        if D.shape != G.shape:
            raise ShapeError(f"D has shape {D.shape}, expected {G.shape}")
        G = G + D
    return G


class TransferBlocks(NamedTuple):
    G11: np.ndarray
    G12: np.ndarray
    G21: np.ndarray
    G22: np.ndarray


def transfer_eval(sys, s):
    """The four blocks ``G_ij(s) = C_i (sI - A)^{-1} B_j`` at real ``s``.

    ``sys`` is anything exposing ``A, B1, B2, C1, C2`` (typically a
    :class:`~lurecert.certify.LureSystem`).
    """
    A = _square(sys.A, "A")
    m1 = sys.B1.shape[1]
    X = _resolvent_solve(A, float(s), np.hstack([sys.B1, sys.B2]))
    X1, X2 = X[:, :m1], X[:, m1:]
    return TransferBlocks(sys.C1 @ X1, sys.C1 @ X2, sys.C2 @ X1, sys.C2 @ X2)
