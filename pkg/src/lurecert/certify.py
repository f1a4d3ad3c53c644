"""Linear dissipativity certificates for positive Lur'e systems.

Two certificate types are handled:

* :class:`CertificateH1` -- a rate ``xi > 0`` and ``p >> 0`` with
  ``p^T (A + B1 Delta C1) <= -xi p^T``;
* :class:`CertificateH2` -- the linear dissipation equalities

      p^T (A + B1 Delta C1) + xi p^T + q^T C2 + l^T = 0
      p^T B2 - r^T + k^T = 0

  with ``p >> 0`` and ``l, k, q, r >= 0``.

Both are constructed rather than searched for: the storage vector is an
explicit resolvent expression, so every check reduces to linear solves.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InconsistencyError, PreconditionError, ShapeError
from .linalg import (
    COND_LIMIT,
    DEFAULT_TOL,
    as_matrix,
    as_vector,
    is_metzler,
    is_nonnegative,
    spectral_abscissa,
    spectral_radius,
    transfer_eval,
)
from .system import LureSystem, Nonlinearity

__all__ = [
    "LureSystem",
    "CertificateH1",
    "CertificateH2",
    "DissipationReport",
    "H1Report",
    "H2Report",
    "check_linear_dissipativity",
    "check_H1",
    "default_xi",
    "construct_H1_certificate",
    "verify_H1_certificate",
    "check_H2",
    "alpha_s",
    "loop_shift",
]

#: agreement required between the resolvent and Woodbury forms of the H2 gain
WOODBURY_AGREEMENT = 1e-8
#: relative margin by which a shifted matrix must be Hurwitz
HURWITZ_MARGIN = 1e-10


@dataclass(frozen=True, eq=False)
class CertificateH1:
    xi: float
    p: np.ndarray


@dataclass(frozen=True, eq=False)
class CertificateH2:
    xi: float
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    l: np.ndarray
    k: np.ndarray

    def as_h1(self):
        """The H1 certificate implied by this one (same rate and storage)."""
        return CertificateH1(self.xi, self.p)


@dataclass(frozen=True, eq=False)
class DissipationReport:
    """Outcome of the linear dissipation lemma for one ``(xi, q, r)``.

    ``margin`` is ``r - G(-xi)^T q``; the lemma holds iff it is nonnegative.
    ``residuals`` are the max-norms of the two equality defects.
    """

    holds: bool
    p: np.ndarray
    l: np.ndarray
    k: np.ndarray
    residuals: tuple
    observability_ok: bool
    p_strictly_positive: bool
    margin: np.ndarray
    gain: np.ndarray

    @property
    def worst_margin(self):
        return float(np.min(self.margin))


def _strictly_hurwitz(M):
    """Abscissa below ``-HURWITZ_MARGIN`` relative to the matrix scale, so that
    boundary cases decided by round-off are rejected."""
    scale = max(1.0, float(np.max(np.abs(M))))
    return spectral_abscissa(M) < -HURWITZ_MARGIN * scale


def check_linear_dissipativity(A, B, C, D, xi, q, r, tol=DEFAULT_TOL):
    """Test ``r^T - q^T G(-xi) >= 0`` and build the dissipation triple.

    When the inequality holds, ``p^T = q^T C (-(A + xi I))^{-1}``, ``l = 0``
    and ``k = r - G(-xi)^T q`` satisfy the two dissipation equalities. The
    triple is returned even when the test fails (``k`` then has a negative
    entry), so callers can inspect margins.

    Raises
    ------
    PreconditionError
        If the system is not positive or ``A + xi I`` is not Hurwitz.
    DomainError
        If ``q`` or ``r`` has a negative entry.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    n = A.shape[0]
    D = np.zeros((C.shape[0], B.shape[1])) if D is None else as_matrix(D, "D")
    q = as_vector(q, "q")
    r = as_vector(r, "r")
    xi = float(xi)
    if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
        raise ShapeError("A, B, C dimensions are inconsistent")
    if D.shape != (C.shape[0], B.shape[1]):
        raise ShapeError(f"D must have shape {(C.shape[0], B.shape[1])}")
    if q.size != C.shape[0] or r.size != B.shape[1]:
        raise ShapeError("q must match the output dimension and r the input dimension")
    if np.any(q < 0) or np.any(r < 0):
        raise DomainError("q and r must be nonnegative")
    if xi < 0:
        raise DomainError("xi must be nonnegative")
    if not (is_metzler(A, tol) and is_nonnegative(B, tol) and is_nonnegative(C, tol)
            and is_nonnegative(D, tol)):
        raise PreconditionError("(A, B, C, D) is not a positive linear system")
    shifted = A + xi * np.eye(n)
    if not _strictly_hurwitz(shifted):
        raise PreconditionError(f"A + {xi} I is not Hurwitz")

    # p^T = q^T C (-(A + xi I))^{-1}
    p = np.linalg.solve(-shifted.T, C.T @ q)
    gain = B.T @ p + D.T @ q  # G(-xi)^T q
    margin = r - gain
    l = np.zeros(n)
    k = margin.copy()
    res1 = p @ A + xi * p + q @ C + l
    res2 = p @ B + q @ D - r + k
    residuals = (float(np.max(np.abs(res1))), float(np.max(np.abs(res2))))

    observability = np.linalg.solve(-A.T, C.T @ q)  # (q^T C (-A)^{-1})^T
    return DissipationReport(
        holds=bool(np.all(margin >= -tol)) and max(residuals) <= tol * max(1.0, np.abs(p).max()),
        p=p,
        l=l,
        k=k,
        residuals=residuals,
        observability_ok=bool(np.all(observability > tol)),
        p_strictly_positive=bool(np.all(p > tol)),
        margin=margin,
        gain=gain,
    )


@dataclass(frozen=True)
class H1Report:
    holds: bool
    abscissa_A: float
    gain_radius: float
    closed_loop_abscissa: float
    consistent: bool


def check_H1(sys: LureSystem, Delta):
    """Small-gain test: ``A`` Hurwitz and ``rho(G11(0) Delta) < 1``.

    The equivalent condition that ``A + B1 Delta C1`` is Hurwitz is evaluated
    as well; ``details.consistent`` records whether the two agree.

    Returns
    -------
    (holds, details) : (bool, H1Report)
    """
    Delta = sys.check_delta(Delta)
    abscissa_A = spectral_abscissa(sys.A)
    if abscissa_A < 0:
        G11 = transfer_eval(sys, 0.0).G11
        radius = spectral_radius(G11 @ Delta)
        holds = radius < 1.0
    else:
        radius = math.inf
        holds = False
    closed = spectral_abscissa(sys.closed_loop(Delta))
    return holds, H1Report(holds, abscissa_A, radius, closed, holds == (closed < 0))


def default_xi(sys: LureSystem, Delta, safety=0.9):
    """A safety-margined decay rate ``safety * (-abscissa(A + B1 Delta C1))``."""
    abscissa = spectral_abscissa(sys.closed_loop(Delta))
    if abscissa >= 0:
        raise PreconditionError("A + B1 Delta C1 is not Hurwitz; no admissible rate")
    return safety * (-abscissa)


def construct_H1_certificate(sys: LureSystem, Delta, xi=None, c=None):
    """Build ``p^T := c^T (-(M + xi I))^{-1}`` with ``M = A + B1 Delta C1``.

    Then ``p^T (M + xi I) = -c^T <= 0`` holds exactly. ``c`` defaults to the
    all-ones vector; a merely nonnegative ``c`` is accepted provided the
    resulting ``p`` comes out strictly positive.
    """
    M = sys.closed_loop(Delta)
    abscissa = spectral_abscissa(M)
    if xi is None:
        xi = default_xi(sys, Delta)
    xi = float(xi)
    if xi <= 0:
        raise DomainError("xi must be positive")
    if not _strictly_hurwitz(M + xi * np.eye(sys.n)):
        raise PreconditionError(
            f"xi={xi} is not below -abscissa(A + B1 Delta C1) = {-abscissa}"
        )
    c = np.ones(sys.n) if c is None else as_vector(c, "c")
    if c.size != sys.n:
        raise ShapeError(f"c must have length {sys.n}")
    if np.any(c < 0) or not np.any(c > 0):
        raise DomainError("c must be nonnegative and nonzero")
    p = np.linalg.solve(-(M + xi * np.eye(sys.n)).T, c)
    if not np.all(p > 0):
        raise PreconditionError("weighting c does not yield a strictly positive p")
    return CertificateH1(xi, p)


def verify_H1_certificate(sys: LureSystem, Delta, cert: CertificateH1, tol=DEFAULT_TOL):
    """Componentwise check of ``p >> 0`` and ``p^T (M + xi I) <= 0``."""
    p = as_vector(cert.p, "p")
    if p.size != sys.n:
        return False
    if not np.all(p > tol):
        return False
    defect = p @ sys.closed_loop(Delta) + cert.xi * p
    return bool(np.all(defect <= tol))


@dataclass(frozen=True, eq=False)
class H2Report:
    """Outcome of :func:`check_H2`.

    ``certificate`` is set only when the hypothesis holds. The Woodbury
    cross-check is skipped (``woodbury_checked`` false) when
    ``I - Delta G11(-xi)`` is ill-conditioned.
    """

    holds: bool
    certificate: Optional[CertificateH2]
    dissipation: Optional[DissipationReport]
    standing_assumption_ok: bool
    shifted_hurwitz: bool
    woodbury_checked: bool
    woodbury_margin: Optional[np.ndarray]
    q_scale: float = 1.0
    notes: list = field(default_factory=list)


def check_H2(sys: LureSystem, Delta, xi, q, r, tol=DEFAULT_TOL, rescale_q=False):
    """Test the linear dissipation hypothesis at rate ``xi`` with weights ``(q, r)``.

    Delegates to :func:`check_linear_dissipativity` on the closed-loop system
    ``(A + B1 Delta C1, B2, C2, 0)`` and independently evaluates the gain in
    transfer-block form

        q^T (G22 + G21 (I - Delta G11)^{-1} Delta G12)   at s = -xi,

    asserting that both agree to ``1e-8``.

    With ``rescale_q=True`` the output weight is replaced by ``c q`` with the
    largest ``c`` for which ``r - c G^T q >= 0``, the tightest weighting the
    given ``r`` admits.

    Raises
    ------
    PreconditionError
        If ``A + B1 Delta C1`` is not Hurwitz.
    InconsistencyError
        If the two gain formulations disagree.
    """
    Delta = sys.check_delta(Delta)
    q = as_vector(q, "q")
    r = as_vector(r, "r")
    xi = float(xi)
    if q.size != sys.p2 or r.size != sys.m2:
        raise ShapeError(f"q must have length {sys.p2} and r length {sys.m2}")
    if xi <= 0:
        raise DomainError("xi must be positive")
    M = sys.closed_loop(Delta)
    if spectral_abscissa(M) >= 0:
        raise PreconditionError("A + B1 Delta C1 is not Hurwitz")
    notes = []
    standing = bool(np.all(np.linalg.solve(-M.T, sys.C2.T @ q) > tol))
    if not standing:
        notes.append("q^T C2 (-(A + B1 Delta C1))^{-1} is not strictly positive")
    if not _strictly_hurwitz(M + xi * np.eye(sys.n)):
        notes.append(f"A + B1 Delta C1 + {xi} I is not Hurwitz")
        return H2Report(False, None, None, standing, False, False, None, 1.0, notes)

    q_scale = 1.0
    if rescale_q:
        gain = check_linear_dissipativity(M, sys.B2, sys.C2, None, xi, q, r, tol).gain
        positive = gain > 0
        if np.any(positive):
            q_scale = float(np.min(r[positive] / gain[positive]))
            q = q_scale * q
            notes.append(f"q rescaled by {q_scale:.6g}")
    report = check_linear_dissipativity(M, sys.B2, sys.C2, None, xi, q, r, tol)

    woodbury, checked = None, False
    blocks = transfer_eval(sys, -xi)
    inner = np.eye(sys.m1) - Delta @ blocks.G11
    if np.linalg.cond(inner) > COND_LIMIT:
        notes.append("I - Delta G11(-xi) ill-conditioned; Woodbury cross-check skipped")
    else:
        closed_gain = blocks.G22 + blocks.G21 @ np.linalg.solve(inner, Delta @ blocks.G12)
        woodbury = r - closed_gain.T @ q
        checked = True
        scale = max(1.0, float(np.max(np.abs(report.gain))))
        gap = float(np.max(np.abs(woodbury - report.margin)))
        if gap > WOODBURY_AGREEMENT * scale:
            raise InconsistencyError(
                f"resolvent and Woodbury forms of the H2 gain differ by {gap:.3e}"
            )

    holds = report.holds and report.p_strictly_positive
    cert = None
    if holds:
        cert = CertificateH2(xi, report.p, q, r, np.clip(report.l, 0, None),
                             np.clip(report.k, 0, None))
    elif report.holds:
        notes.append("dissipation inequality holds but p is not strictly positive")
    return H2Report(holds, cert, report, standing, True, checked, woodbury, q_scale, notes)


def alpha_s(xi, s):
    """Forcing gain in the L^s incremental estimate.

    ``1`` for ``s = 1``, ``1/xi`` for ``s = inf`` and ``(s0 xi)^(-1/s0)``
    with the conjugate exponent ``s0 = s / (s - 1)`` otherwise.
    """
    xi = float(xi)
    s = float(s)
    if xi <= 0:
        raise DomainError("xi must be positive")
    if not s >= 1:
        raise DomainError("s must be >= 1")
    if s == 1:
        return 1.0
    if math.isinf(s):
        return 1.0 / xi
    s0 = s / (s - 1.0)
    return (s0 * xi) ** (-1.0 / s0)


def loop_shift(sys: LureSystem, f: Nonlinearity, K, Delta_K=None):
    """Loop-shifted pair ``(A + B1 K C1, f - K)``.

    The shifted nonlinearity ``f_K(t, z) = f(t, z) - K z`` needs its own
    increment bound, which must be supplied as ``Delta_K`` (it cannot be
    derived from ``Delta`` in general); it is sampled for plausibility.
    ``K = 0`` returns the inputs unchanged.
    """
    K = as_matrix(K, "K")
    if K.shape != (sys.m1, sys.p1):
        raise ShapeError(f"K must have shape {(sys.m1, sys.p1)}")
    if not np.any(K):
        return sys, f
    if Delta_K is None:
        raise PreconditionError("the increment bound of f - K z must be supplied as Delta_K")
    A_K = sys.A + sys.B1 @ K @ sys.C1
    if not is_metzler(A_K, sys.tol):
        raise PreconditionError("A + B1 K C1 is not Metzler")
    shifted = LureSystem(A_K, sys.B1, sys.B2, sys.C1, sys.C2, sys.tol)
    K_frozen = K.copy()

    def shifted_func(t, z, _f=f, _K=K_frozen):
        return _f(t, z) - _K @ z

    f_K = Nonlinearity(shifted_func, sys.check_delta(Delta_K), f.time_varying, False,
                       name=f"{f.name}-K")
    from .simulate import verify_increment_bound

    ok, worst = verify_increment_bound(f_K, samples=2000, domain_radius=10.0, times=[0.0])
    if not ok:
        raise PreconditionError(
            f"Delta_K does not bound the increments of f - K z (observed ratio {worst:.3g})"
        )
    return shifted, f_K
