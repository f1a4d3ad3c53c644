"""Weighted norms on sampled trajectories and verifiers for incremental estimates.

All quadrature is trapezoidal on the uniform simulation grid. Verifiers
compare both sides of an estimate on a set of sampled windows
``[t0, t1]`` and return an :class:`EstimateReport`. Each window gets the
tolerance

    tol = 1e-6 * max(1, RHS) + E,

where ``E`` is a trapezoid error estimate built from second differences of
the integrand (``dt/4 * sum |second difference|``, a bound that also covers
a jump inside a grid cell). A violation is reported only when
``LHS - RHS`` exceeds that tolerance, so quadrature error alone never
produces one.

Stepanov norms on a finite record are suprema over windows contained in the
record, the last windows being truncated at its end. Truncated windows are
subsets of full windows, so for a record of length at least one the value
equals the full-window supremum.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.signal import lfilter

from .certify import CertificateH1, CertificateH2, alpha_s
from .errors import DomainError, ShapeError
from .linalg import as_vector

__all__ = [
    "NormSpec",
    "EstimateReport",
    "PairSampling",
    "sample_pairs",
    "weighted_Ls_norm",
    "stepanov_norm",
    "stepanov_window_integrals",
    "discounted_integral",
    "default_beta0",
    "verify_thm1_H1",
    "verify_thm1_H2",
    "verify_cor1_Ls",
    "verify_cor_Sp",
    "verify_S1_io",
    "verify_L1xi_gain",
    "convergence_diagnostic",
    "log_decay_slope",
]

ATOL = 1e-6


@dataclass(frozen=True)
class NormSpec:
    """Exponent ``s``, exponential weight ``alpha``, weight vector and window."""

    s: float = 1.0
    alpha: float = 0.0
    weight: Optional[np.ndarray] = None
    window: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not float(self.s) >= 1:
            raise DomainError("norm exponent s must be >= 1")
        if self.window is not None and self.window[0] > self.window[1]:
            raise DomainError("window must satisfy t0 <= t1")
        if self.weight is not None and np.any(np.asarray(self.weight) < 0):
            raise DomainError("norm weight must be nonnegative")


@dataclass(frozen=True)
class EstimateReport:
    """Result of checking one estimate on many windows.

    ``worst_margin`` is the smallest ``RHS - LHS`` seen; ``tolerance`` is the
    tolerance that applied where the slack ``RHS - LHS + tol`` was smallest.
    ``holds`` is true iff every window has nonnegative slack.
    """

    holds: bool
    worst_margin: float
    n_checks: int
    violating_pair: Optional[Tuple[float, float]]
    tolerance: float = 0.0
    name: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "holds": self.holds,
            "worst_margin": self.worst_margin,
            "n_checks": self.n_checks,
            "violating_pair": None if self.violating_pair is None else list(self.violating_pair),
            "tolerance": self.tolerance,
            "details": self.details,
        }


@dataclass(frozen=True)
class PairSampling:
    """All ordered pairs on a coarse sub-grid plus uniformly random pairs."""

    coarse: int = 25
    n_random: int = 100
    seed: int = 0


def sample_pairs(N, sampling: PairSampling = PairSampling()):
    """Index pairs ``(i, j)`` with ``0 <= i < j < N``, sorted and unique.

    Degenerate windows ``i == j`` are excluded: every estimate holds there
    with zero margin.
    """
    if N < 2:
        raise DomainError("need at least two samples")
    grid = np.unique(np.round(np.linspace(0, N - 1, max(1, sampling.coarse))).astype(int))
    ii, jj = np.meshgrid(grid, grid, indexing="ij")
    mask = ii < jj
    pairs = [np.column_stack([ii[mask], jj[mask]]).reshape(-1, 2)]
    if sampling.n_random > 0:
        rng = np.random.default_rng(sampling.seed)
        rand = np.sort(rng.integers(0, N, size=(sampling.n_random, 2)), axis=1)
        pairs.append(rand[rand[:, 0] < rand[:, 1]])
    return np.unique(np.vstack(pairs), axis=0)


def _grid_index(t, t_start, dt, N, name="t"):
    k = (t - t_start) / dt
    kr = int(round(k))
    if abs(k - kr) > 1e-6 or not 0 <= kr < N:
        raise DomainError(f"{name}={t} is outside the sampled grid or off-grid")
    return kr


def _seminorm_rows(samples, weight):
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if weight is None:
        weight = np.ones(samples.shape[1])
    weight = as_vector(weight, "weight")
    if weight.size != samples.shape[1]:
        raise ShapeError(f"weight has length {weight.size}, samples have {samples.shape[1]} columns")
    if np.any(weight < 0):
        raise DomainError("weight must be nonnegative")
    return np.abs(samples) @ weight


def weighted_Ls_norm(samples, spec: NormSpec, dt, t_start=0.0):
    """``|| t -> e^{alpha t} f(t) ||_{L^s(t0, t1; r)}`` of gridded samples.

    Parameters
    ----------
    samples : array_like, shape (N,) or (N, m)
        Values on the grid ``t_start + k dt``.
    spec : NormSpec
        ``window=None`` means the whole record; ``weight=None`` means ones.
    """
    g = _seminorm_rows(samples, spec.weight)
    N = g.size
    if spec.window is None:
        i, j = 0, N - 1
    else:
        i = _grid_index(spec.window[0], t_start, dt, N, "t0")
        j = _grid_index(spec.window[1], t_start, dt, N, "t1")
    t = t_start + dt * np.arange(i, j + 1)
    seg = g[i:j + 1]
    if spec.alpha != 0.0:
        seg = seg * np.exp(spec.alpha * t)
    s = float(spec.s)
    if math.isinf(s):
        return float(seg.max())
    if j == i:
        return 0.0
    pw = seg if s == 1 else seg ** s
    total = dt * (pw.sum() - 0.5 * (pw[0] + pw[-1]))
    return float(total ** (1.0 / s))


def _window_steps(dt):
    L = int(round(1.0 / dt))
    if L < 1 or abs(L * dt - 1.0) > 1e-9:
        raise DomainError(f"dt={dt} does not divide the unit window")
    return L


def _cumtrapz(g, dt):
    out = np.zeros(g.size)
    if g.size > 1:
        out[1:] = np.cumsum(0.5 * dt * (g[1:] + g[:-1]))
    return out


def stepanov_window_integrals(g, dt, s=1.0):
    """``W[a] = int_{t_a}^{min(t_a + 1, end)} g^s`` for every grid start ``a``."""
    L = _window_steps(dt)
    C = _cumtrapz(np.asarray(g, dtype=float) ** s, dt)
    N = C.size
    ends = np.minimum(np.arange(N) + L, N - 1)
    return C[ends] - C


def stepanov_norm(samples, s, r, dt, horizon=None, t_start=0.0):
    """Finite-horizon Stepanov norm ``sup_a (int_a^{a+1} |f|_r^s)^{1/s}``.

    The supremum runs over grid starts ``a`` in ``[t_start, horizon]``.
    """
    g = _seminorm_rows(samples, r)
    if np.any(as_vector(r, "r") <= 0):
        raise DomainError("Stepanov weight r must be strictly positive")
    if horizon is not None:
        if horizon - t_start < 1.0 - 1e-12:
            raise DomainError("horizon must be at least one time unit")
        g = g[: _grid_index(horizon, t_start, dt, g.size, "horizon") + 1]
    if (g.size - 1) * dt < 1.0 - 1e-12:
        raise DomainError("record shorter than one time unit")
    s = float(s)
    if math.isinf(s):
        return float(g.max())
    W = stepanov_window_integrals(g, dt, s)
    return float(W.max() ** (1.0 / s))


def discounted_integral(u, dt, xi):
    """``J_j = int_{t_0}^{t_j} e^{-xi (t_j - t)} u(t) dt`` by the trapezoid rule.

    Evaluated by the stable recursion
    ``J_{j+1} = a J_j + (dt/2)(a u_j + u_{j+1})`` with ``a = e^{-xi dt}``.
    """
    u = np.asarray(u, dtype=float)
    a = math.exp(-xi * dt)
    if u.size == 0:
        return u.copy()
    y = lfilter([0.5 * dt, 0.5 * dt * a], [1.0, -a], u)
    return y - (0.5 * dt * u[0]) * a ** np.arange(u.size)


def _discounted_sum(c, dt, xi):
    """``S_j = sum_{k <= j} a^{j-k} c_k`` with ``a = e^{-xi dt}``."""
    a = math.exp(-xi * dt)
    return lfilter([1.0], [1.0, -a], c)


def _discounted_error(u, dt, xi):
    """Trapezoid error bound for :func:`discounted_integral`, per end index."""
    n = u.size
    err = np.zeros(n)
    if n < 3:
        return err
    a = math.exp(-xi * dt)
    # second differences of e^{xi (t - t_k)} u(t) at interior nodes
    d2 = np.abs(u[2:] / a - 2.0 * u[1:-1] + u[:-2] * a)
    c = np.zeros(n)
    c[1:-1] = 0.25 * dt * d2
    acc = _discounted_sum(c, dt, xi)
    err[1:] = acc[:-1] * a
    return err


def _check_grids(trajA, trajB):
    if trajA.N != trajB.N or abs(trajA.dt - trajB.dt) > 1e-15 or abs(trajA.t0 - trajB.t0) > 1e-12:
        raise ShapeError("trajectories are on different grids")


def _pairs_for(N, pairs):
    if pairs is None:
        return sample_pairs(N)
    if isinstance(pairs, PairSampling):
        return sample_pairs(N, pairs)
    pairs = np.asarray(pairs, dtype=int)
    if pairs.ndim != 2 or pairs.shape[1] != 2 or np.any(pairs[:, 0] > pairs[:, 1]):
        raise DomainError("pairs must be index pairs (i, j) with i <= j")
    if pairs.min() < 0 or pairs.max() >= N:
        raise DomainError("pair index outside the trajectory")
    return pairs


class _Collector:
    """Accumulates per-window margins and tolerances into a report."""

    def __init__(self, name, times):
        self.name = name
        self.times = times
        self.n = 0
        self.worst_margin = math.inf
        self.worst_slack = math.inf
        self.slack_tol = 0.0
        self.violation = None

    def add(self, i, js, rhs, lhs, err):
        rhs = np.asarray(rhs, dtype=float)
        margin = rhs - np.asarray(lhs, dtype=float)
        tol = ATOL * np.maximum(1.0, np.abs(rhs)) + err
        slack = margin + tol
        self.n += margin.size
        if margin.size == 0:
            return
        self.worst_margin = min(self.worst_margin, float(margin.min()))
        k = int(np.argmin(slack))
        if slack[k] < self.worst_slack:
            self.worst_slack = float(slack[k])
            self.slack_tol = float(tol[k])
            if slack[k] < 0:
                self.violation = (float(self.times[i]), float(self.times[js[k]]))

    def report(self, **details):
        holds = self.worst_slack >= 0
        worst = self.worst_margin if self.n else 0.0
        return EstimateReport(bool(holds), worst, self.n,
                              None if holds else self.violation, self.slack_tol,
                              self.name, details)


def _group(pairs):
    for i in np.unique(pairs[:, 0]):
        yield int(i), pairs[pairs[:, 0] == i, 1]


def verify_thm1_H1(trajA, trajB, cert: CertificateH1, B2, pairs=None, r=None, name="thm1_H1"):
    """Check the incremental state estimate on sampled windows.

    For each window ``[t0, t1]``::

        |dx(t1)|_p <= e^{-xi (t1 - t0)} |dx(t0)|_p
                      + int_{t0}^{t1} e^{-xi (t1 - t)} |dw(t)|_{B2^T p} dt

    When ``r`` is given, the same estimate with ``B2^T p`` replaced by ``r``
    is checked too and both outcomes are reported.
    """
    _check_grids(trajA, trajB)
    p = as_vector(cert.p, "p")
    xi = float(cert.xi)
    B2 = np.atleast_2d(np.asarray(B2, dtype=float))
    dt = trajA.dt
    dx = np.abs(trajA.x - trajB.x) @ p
    dw = np.abs(trajA.w - trajB.w)
    weights = {"B2p": B2.T @ p}
    if r is not None:
        weights["r"] = as_vector(r, "r")
    pairs = _pairs_for(trajA.N, pairs)
    reports = {}
    for label, rt in weights.items():
        u = dw @ rt
        col = _Collector(f"{name}[{label}]", trajA.times)
        for i, js in _group(pairs):
            J = discounted_integral(u[i:], dt, xi)
            E = _discounted_error(u[i:], dt, xi)
            k = js - i
            rhs = np.exp(-xi * k * dt) * dx[i] + J[k]
            col.add(i, js, rhs, dx[js], E[k])
        reports[label] = col.report()
    return _merge(name, reports)


def _merge(name, reports):
    primary = next(iter(reports.values()))
    if len(reports) == 1:
        return EstimateReport(primary.holds, primary.worst_margin, primary.n_checks,
                              primary.violating_pair, primary.tolerance, name, primary.details)
    holds = all(r.holds for r in reports.values())
    failing = next((r for r in reports.values() if not r.holds), primary)
    details = {label: {"holds": r.holds, "worst_margin": r.worst_margin}
               for label, r in reports.items()}
    return EstimateReport(holds, min(r.worst_margin for r in reports.values()),
                          sum(r.n_checks for r in reports.values()),
                          None if holds else failing.violating_pair, failing.tolerance,
                          name, details)


def verify_thm1_H2(trajA, trajB, cert: CertificateH2, C2, pairs=None, name="thm1_H2"):
    """Check the input-output dissipation estimate on sampled windows.

    The estimate is evaluated after multiplying through by ``e^{-xi t1}``::

        int e^{-xi (t1 - t)} (|dy2|_q + |dw|_k + |dx|_l) dt + |dx(t1)|_p
            <= e^{-xi (t1 - t0)} |dx(t0)|_p + int e^{-xi (t1 - t)} |dw|_r dt

    ``C2`` is accepted for cross-checking the stored ``y2`` samples.
    """
    _check_grids(trajA, trajB)
    C2 = np.atleast_2d(np.asarray(C2, dtype=float))
    if np.max(np.abs(trajA.x @ C2.T - trajA.y2)) > 1e-9 * max(1.0, np.abs(trajA.y2).max()):
        raise ShapeError("C2 is inconsistent with the stored y2 samples")
    xi = float(cert.xi)
    dt = trajA.dt
    dxs = np.abs(trajA.x - trajB.x)
    dws = np.abs(trajA.w - trajB.w)
    dy2 = np.abs(trajA.y2 - trajB.y2)
    dxp = dxs @ cert.p
    gain_side = dy2 @ cert.q + dws @ cert.k + dxs @ cert.l
    supply = dws @ cert.r
    pairs = _pairs_for(trajA.N, pairs)
    col = _Collector(name, trajA.times)
    for i, js in _group(pairs):
        Jg = discounted_integral(gain_side[i:], dt, xi)
        Js = discounted_integral(supply[i:], dt, xi)
        E = _discounted_error(gain_side[i:], dt, xi) + _discounted_error(supply[i:], dt, xi)
        k = js - i
        lhs = Jg[k] + dxp[js]
        rhs = np.exp(-xi * k * dt) * dxp[i] + Js[k]
        col.add(i, js, rhs, lhs, E[k])
    return col.report()


def _jump_augmented(g, trajA, wa, wb, weight):
    """Grid sup-norm samples enlarged by left limits at declared jumps."""
    if wa is None or wb is None:
        return g
    t_end = trajA.t0 + trajA.dt * (trajA.N - 1)
    jumps = np.union1d(wa.jumps(trajA.t0, t_end), wb.jumps(trajA.t0, t_end))
    if jumps.size == 0:
        return g
    left = np.abs(wa.left_limit(jumps) - wb.left_limit(jumps)) @ weight
    idx = np.clip(np.ceil((jumps - trajA.t0) / trajA.dt - 1e-9).astype(int), 0, trajA.N - 1)
    out = g.copy()
    np.maximum.at(out, idx, left)
    return out


def verify_cor1_Ls(trajA, trajB, cert: CertificateH1, s, B2, pairs=None, signals=None,
                   name=None):
    """Check ``|dx(t1)|_p <= e^{-xi(t1-t0)} |dx(t0)|_p + alpha_s ||dw||_{L^s(t0,t1; B2^T p)}``.

    ``signals=(w_a, w_b)`` lets the ``s = inf`` norm include left limits at
    declared jump points.
    """
    _check_grids(trajA, trajB)
    s = float(s)
    name = name or f"cor1_L{'inf' if math.isinf(s) else format(s, 'g')}"
    xi = float(cert.xi)
    p = as_vector(cert.p, "p")
    B2 = np.atleast_2d(np.asarray(B2, dtype=float))
    rt = B2.T @ p
    alpha = alpha_s(xi, s)
    dt = trajA.dt
    dx = np.abs(trajA.x - trajB.x) @ p
    g = np.abs(trajA.w - trajB.w) @ rt
    pairs = _pairs_for(trajA.N, pairs)
    col = _Collector(name, trajA.times)
    if math.isinf(s):
        g = _jump_augmented(g, trajA, *(signals or (None, None)), rt)
        step_var = float(np.max(np.abs(np.diff(g)))) if g.size > 1 else 0.0
        for i, js in _group(pairs):
            run = np.maximum.accumulate(g[i:])
            k = js - i
            rhs = np.exp(-xi * k * dt) * dx[i] + alpha * run[k]
            col.add(i, js, rhs, dx[js], np.full(k.size, alpha * step_var))
    else:
        gs = g ** s
        C = _cumtrapz(gs, dt)
        d2 = np.zeros(g.size)
        if g.size > 2:
            d2[1:-1] = 0.25 * dt * np.abs(gs[2:] - 2.0 * gs[1:-1] + gs[:-2])
        D = np.cumsum(d2)
        for i, js in _group(pairs):
            integral = np.maximum(C[js] - C[i], 0.0)
            err = D[js] - D[i]
            k = js - i
            rhs = np.exp(-xi * k * dt) * dx[i] + alpha * integral ** (1.0 / s)
            col.add(i, js, rhs, dx[js], alpha * err ** (1.0 / s))
    return col.report(alpha_s=alpha)


def default_beta0(xi):
    """``max(1, e^xi / (1 - e^{-xi}))``, a valid constant for the Stepanov estimates."""
    xi = float(xi)
    if not xi > 0:
        raise DomainError("xi must be positive")
    return max(1.0, math.exp(xi) / (1.0 - math.exp(-xi)))


def _suffix_max(W):
    return np.maximum.accumulate(W[::-1])[::-1]


def _stepanov_error(g_pow, dt):
    L = _window_steps(dt)
    n = g_pow.size
    d2 = np.zeros(n)
    if n > 2:
        d2[1:-1] = 0.25 * dt * np.abs(g_pow[2:] - 2.0 * g_pow[1:-1] + g_pow[:-2])
    D = np.concatenate([[0.0], np.cumsum(d2)])
    ends = np.minimum(np.arange(n) + L, n - 1)
    return D[ends + 1] - D[np.arange(n)]


def verify_cor_Sp(trajA, trajB, cert: CertificateH1, s=1.0, beta0=None, xi0=None, *, B2,
                  pairs=None, name=None):
    """Check the Stepanov-norm state estimate on sampled windows::

        |dx(t1)|_p <= beta0 (e^{-xi0 (t1 - t0)} |dx(t0)|_p
                             + || sigma_{t0} dw ||_{S^s_{B2^T p}})

    ``beta0`` and ``xi0`` default to :func:`default_beta0` and ``xi``. The
    Stepanov norm of the shifted difference uses the windows inside
    ``[t0, T]``.
    """
    _check_grids(trajA, trajB)
    s = float(s)
    if not 1 <= s < math.inf:
        raise DomainError("Stepanov exponent must satisfy 1 <= s < inf")
    xi = float(cert.xi)
    beta0 = default_beta0(xi) if beta0 is None else float(beta0)
    xi0 = xi if xi0 is None else float(xi0)
    if beta0 <= 0 or xi0 <= 0:
        raise DomainError("beta0 and xi0 must be positive")
    name = name or f"cor_S{format(s, 'g')}"
    p = as_vector(cert.p, "p")
    rt = np.atleast_2d(np.asarray(B2, dtype=float)).T @ p
    dt = trajA.dt
    dx = np.abs(trajA.x - trajB.x) @ p
    g = np.abs(trajA.w - trajB.w) @ rt
    W = stepanov_window_integrals(g, dt, s)
    Wmax = _suffix_max(W)
    Emax = _suffix_max(_stepanov_error(g ** s, dt))
    pairs = _pairs_for(trajA.N, pairs)
    col = _Collector(name, trajA.times)
    for i, js in _group(pairs):
        k = js - i
        snorm = Wmax[i] ** (1.0 / s)
        rhs = beta0 * (np.exp(-xi0 * k * dt) * dx[i] + snorm)
        col.add(i, js, rhs, dx[js], np.full(k.size, beta0 * Emax[i] ** (1.0 / s)))
    return col.report(beta0=beta0, xi0=xi0)


def verify_S1_io(trajA, trajB, cert: CertificateH2, beta0=None, starts=None, name="S1_io"):
    """Check the Stepanov input-output estimate at sampled start times ``t0``::

        || sigma_{t0} dy2 ||_{S^1_q} <= beta0 |dx(t0)|_p
                                        + (beta0 + e^xi) || sigma_{t0} dw ||_{S^1_r}

    Both Stepanov norms use the windows inside ``[t0, T]``.
    """
    _check_grids(trajA, trajB)
    xi = float(cert.xi)
    beta0 = default_beta0(xi) if beta0 is None else float(beta0)
    dt = trajA.dt
    dx = np.abs(trajA.x - trajB.x) @ cert.p
    gy = np.abs(trajA.y2 - trajB.y2) @ cert.q
    gw = np.abs(trajA.w - trajB.w) @ cert.r
    Wy = _suffix_max(stepanov_window_integrals(gy, dt, 1.0))
    Ww = _suffix_max(stepanov_window_integrals(gw, dt, 1.0))
    Ey = _suffix_max(_stepanov_error(gy, dt))
    Ew = _suffix_max(_stepanov_error(gw, dt))
    N = trajA.N
    if starts is None:
        last = N - 1 - _window_steps(dt)
        if last < 0:
            raise DomainError("trajectory shorter than one Stepanov window")
        rng = np.random.default_rng(0)
        starts = np.unique(np.concatenate([np.round(np.linspace(0, last, 25)).astype(int),
                                           rng.integers(0, last + 1, 100)]))
    starts = np.asarray(starts, dtype=int)
    col = _Collector(name, trajA.times)
    gain = beta0 + math.exp(xi)
    for i in starts:
        rhs = np.array([beta0 * dx[i] + gain * Ww[i]])
        col.add(int(i), np.array([i]), rhs, np.array([Wy[i]]),
                np.array([Ey[i] + gain * Ew[i]]))
    return col.report(beta0=beta0, gain=gain)


def verify_L1xi_gain(trajA, trajB, xi, q, r, output="y2", name="L1xi_gain", atol=1e-5):
    """Check ``||dy||_{L^1_xi(0,t; q)} <= ||dw||_{L^1_xi(0,t; r)}`` at every grid ``t``.

    This is the weighted-L1 input-output gain bound implied by linear
    dissipation from a common initial state. ``output`` selects ``"y2"``
    or ``"x"``; comparisons use ``atol`` plus the trapezoid error estimate.
    """
    _check_grids(trajA, trajB)
    xi = float(xi)
    dt = trajA.dt
    if xi * trajA.T > 600:
        raise DomainError("xi * T too large for the unscaled exponential weight")
    ya = trajA.y2 if output == "y2" else trajA.x
    yb = trajB.y2 if output == "y2" else trajB.x
    weight = np.exp(xi * trajA.times)
    gy = (np.abs(ya - yb) @ as_vector(q, "q")) * weight
    gw = (np.abs(trajA.w - trajB.w) @ as_vector(r, "r")) * weight
    lhs = _cumtrapz(gy, dt)
    rhs = _cumtrapz(gw, dt)
    err = np.zeros(gy.size)
    if gy.size > 2:
        d2 = 0.25 * dt * (np.abs(gy[2:] - 2 * gy[1:-1] + gy[:-2])
                          + np.abs(gw[2:] - 2 * gw[1:-1] + gw[:-2]))
        err[2:] = np.cumsum(d2)
    margin = rhs - lhs
    slack = margin + atol + err
    k = int(np.argmin(slack))
    holds = bool(slack[k] >= 0)
    return EstimateReport(holds, float(margin[1:].min()) if margin.size > 1 else 0.0,
                          int(margin.size),
                          None if holds else (0.0, float(trajA.times[k])),
                          float(atol + err[k]), name,
                          {"max_lhs": float(lhs[-1]), "max_rhs": float(rhs[-1])})


def log_decay_slope(values, dt, t_start=0.0, fraction=0.5, floor=1e-14):
    """Least-squares slope of ``log(values)`` over the trailing ``fraction`` of the record.

    Samples at or below ``floor`` are excluded. Returns ``-inf`` when every
    sample in the fit range is below the floor.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    start = int(math.floor((1.0 - fraction) * (n - 1)))
    seg = values[start:]
    t = t_start + dt * np.arange(start, n)
    mask = seg > floor
    if mask.sum() < 2:
        return -math.inf
    slope, _ = np.polyfit(t[mask], np.log(seg[mask]), 1)
    return float(slope)


def convergence_diagnostic(traj, target, mode="plain", tol=1e-2, ord=np.inf):
    """Convergence of ``x(t)`` to ``target`` (a vector, or another trajectory).

    Returns ``(converged, rate_estimate)``. ``rate_estimate`` is the fitted
    slope of ``log ||x(t) - target||`` over the last half of the record
    (``-inf`` if the deviation vanishes there). ``converged`` requires the
    terminal deviation to be below ``tol``; in ``"exponential"`` mode the
    slope must also be negative.
    """
    if mode not in ("plain", "exponential"):
        raise DomainError("mode must be 'plain' or 'exponential'")
    if hasattr(target, "x"):
        _check_grids(traj, target)
        diff = traj.x - target.x
    else:
        diff = traj.x - as_vector(target, "target")[None, :]
    dev = np.linalg.norm(diff, ord=ord, axis=1)
    slope = log_decay_slope(dev, traj.dt, traj.t0)
    converged = bool(dev[-1] < tol)
    if mode == "exponential":
        converged = converged and slope < 0
    return converged, slope
