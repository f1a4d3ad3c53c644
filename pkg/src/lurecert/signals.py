"""Closed-form forcing signals on the half line.

Every signal is an immutable evaluator ``t -> R^m`` defined for ``t >= 0``.
Calling a signal on a scalar returns shape ``(m,)``; calling it on a 1-D
array of times returns ``(N, m)``. Signals are never tabulated, so the
integrator's stage evaluations and the norm quadratures read the same
closed form.

Signals round-trip through plain ``dict`` descriptors (``kind`` tag plus
parameters) via :meth:`Signal.to_descriptor` and :func:`from_descriptor`.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError, DomainError, ShapeError

__all__ = [
    "Signal",
    "Constant",
    "ConvergentExample1",
    "TrigSum",
    "StepanovAP",
    "Transient",
    "AsymptoticSum",
    "Shifted",
    "Stacked",
    "SumDecomposition",
    "mod",
    "make_constant",
    "make_convergent_example1",
    "make_almost_periodic",
    "make_periodic",
    "make_stepanov_ap",
    "make_stepanov_ap_example2",
    "make_transient",
    "make_ap_example2",
    "add_transient",
    "stack",
    "shift",
    "epsilon_period_check",
    "scan_epsilon_periods",
    "from_descriptor",
]

#: tolerance for declared periods: ``freq * period`` must be this close to an integer
PERIOD_TOL = 1e-9


def mod(t, tau):
    """``t - k tau`` with ``k`` the largest integer such that ``t >= k tau``.

    Uses ``fmod``, which returns the exactly rounded remainder of the two
    floating-point operands, so the result lies in ``[0, tau)`` for every
    ``t >= 0`` without drift at large ``t``.
    """
    if not tau > 0:
        raise DomainError("mod period must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("mod is defined for t >= 0 only")
    return np.fmod(t, tau)


def _times(t):
    arr = np.asarray(t, dtype=float)
    if arr.ndim > 1:
        raise ShapeError("times must be a scalar or a 1-D array")
    if np.any(~np.isfinite(arr)):
        raise DomainError("times must be finite")
    if np.any(arr < 0):
        raise DomainError("signals are defined on t >= 0")
    return arr


class Signal:
    """Base class; concrete kinds implement ``_eval`` on a 1-D time array."""

    kind = "Signal"
    m = 1

    def _eval(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def _eval_left(self, t):
        return self._eval(t)

    def __call__(self, t):
        arr = _times(t)
        if arr.ndim == 0:
            return self._eval(arr.reshape(1))[0]
        return self._eval(arr)

    def left_limit(self, t):
        """One-sided limit from the left (equals the value for continuous signals)."""
        arr = _times(t)
        if arr.ndim == 0:
            return self._eval_left(arr.reshape(1))[0]
        return self._eval_left(arr)

    def jumps(self, t0, t1):
        """Sorted declared discontinuity times in ``[t0, t1]``."""
        return np.empty(0)

    @property
    def period(self) -> Optional[float]:
        return None

    def limit(self) -> Optional[np.ndarray]:
        """Limit as ``t -> inf`` when it is known in closed form."""
        return None

    def to_descriptor(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError

    def __add__(self, other):
        return add_transient(self, other)[0]


@dataclass(frozen=True, eq=False)
class Constant(Signal):
    value: np.ndarray
    kind = "Constant"

    def __post_init__(self):
        v = np.atleast_1d(np.array(self.value, dtype=float))
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise DomainError("constant value must be a finite vector")
        v.setflags(write=False)
        object.__setattr__(self, "value", v)

    @property
    def m(self):
        return self.value.size

    def _eval(self, t):
        return np.broadcast_to(self.value, (t.size, self.m)).copy()

    @property
    def period(self):
        return 0.0

    def limit(self):
        return self.value.copy()

    def to_descriptor(self):
        return {"kind": "constant", "value": self.value.tolist()}


@dataclass(frozen=True, eq=False)
class ConvergentExample1(Signal):
    """``k (1 + t^2 e^{-t}, 1 + t / (1 + t^3))``, converging to ``(k, k)``."""

    k: float
    kind = "Convergent"
    m = 2

    def _eval(self, t):
        out = np.empty((t.size, 2))
        out[:, 0] = self.k * (1.0 + t * t * np.exp(-t))
        out[:, 1] = self.k * (1.0 + t / (1.0 + t ** 3))
        return out

    def limit(self):
        return np.array([self.k, self.k], dtype=float)

    def to_descriptor(self):
        return {"kind": "convergent_example1", "k": float(self.k)}


@dataclass(frozen=True, eq=False)
class TrigSum(Signal):
    """Scalar ``offset + sum_i a_i sin(2 pi f_i t + phi_i)``.

    With a declared ``period`` the kind is Periodic and time is reduced
    modulo the period before evaluation; otherwise the sum is treated as
    (Bohr) almost periodic.
    """

    amps: tuple
    freqs: tuple
    phases: tuple
    offset: float = 0.0
    declared_period: Optional[float] = None
    m = 1

    def __post_init__(self):
        if not (len(self.amps) == len(self.freqs) == len(self.phases)):
            raise ShapeError("amps, freqs and phases must have equal length")
        if len(self.amps) == 0:
            raise DomainError("a trigonometric sum needs at least one term")
        for name in ("amps", "freqs", "phases"):
            vals = tuple(float(x) for x in getattr(self, name))
            if not all(math.isfinite(x) for x in vals):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, vals)
        if self.declared_period is not None:
            tau = float(self.declared_period)
            if not tau > 0:
                raise DomainError("period must be positive")
            for f in self.freqs:
                if abs(f * tau - round(f * tau)) > PERIOD_TOL * max(1.0, abs(f * tau)):
                    raise DomainError(f"frequency {f} is not a multiple of 1/{tau}")
            object.__setattr__(self, "declared_period", tau)

    @property
    def kind(self):
        return "Periodic" if self.declared_period is not None else "AlmostPeriodic"

    def _eval(self, t):
        if self.declared_period is not None:
            t = np.fmod(t, self.declared_period)
        a = np.asarray(self.amps)
        w = 2.0 * np.pi * np.asarray(self.freqs)
        ph = np.asarray(self.phases)
        vals = np.sin(np.outer(t, w) + ph) @ a + self.offset
        return vals.reshape(-1, 1)

    @property
    def period(self):
        return self.declared_period

    def to_descriptor(self):
        d = {
            "kind": "trig",
            "amps": list(self.amps),
            "freqs": list(self.freqs),
            "phases": list(self.phases),
            "offset": float(self.offset),
        }
        if self.declared_period is not None:
            d["period"] = self.declared_period
        return d


@dataclass(frozen=True, eq=False)
class StepanovAP(Signal):
    """Scalar ``offset + sum_i a_i sin(omega_i mod(t, tau_i))``.

    Each term is ``tau_i``-periodic and jumps at multiples of ``tau_i``
    unless ``sin(omega_i tau_i) = 0``. Incommensurate ``tau_i`` give a
    discontinuous Stepanov almost periodic signal.
    """

    amps: tuple
    omegas: tuple
    taus: tuple
    offset: float = 0.0
    kind = "StepanovAP"
    m = 1

    def __post_init__(self):
        if not (len(self.amps) == len(self.omegas) == len(self.taus)):
            raise ShapeError("amps, omegas and taus must have equal length")
        if len(self.amps) == 0:
            raise DomainError("need at least one term")
        for name in ("amps", "omegas", "taus"):
            vals = tuple(float(x) for x in getattr(self, name))
            if not all(math.isfinite(x) for x in vals):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, vals)
        if any(tau <= 0 for tau in self.taus):
            raise DomainError("mod periods must be positive")

    def _terms(self, t, left):
        out = np.full(t.size, float(self.offset))
        for a, om, tau in zip(self.amps, self.omegas, self.taus):
            r = np.fmod(t, tau)
            if left:
                r = np.where((r == 0.0) & (t > 0.0), tau, r)
            out += a * np.sin(om * r)
        return out.reshape(-1, 1)

    def _eval(self, t):
        return self._terms(t, left=False)

    def _eval_left(self, t):
        return self._terms(t, left=True)

    def jumps(self, t0, t1):
        pts = []
        for tau in self.taus:
            first = math.ceil(max(t0, 0.0) / tau)
            last = math.floor(t1 / tau)
            if last >= max(first, 1):
                pts.append(np.arange(max(first, 1), last + 1) * tau)
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def to_descriptor(self):
        return {
            "kind": "stepanov",
            "amps": list(self.amps),
            "omegas": list(self.omegas),
            "taus": list(self.taus),
            "offset": float(self.offset),
        }


@dataclass(frozen=True, eq=False)
class Transient(Signal):
    """``amp * t^power * exp(-rate t)`` with a vector amplitude and ``rate > 0``."""

    amp: np.ndarray
    power: int
    rate: float
    kind = "Transient"

    def __post_init__(self):
        a = np.atleast_1d(np.array(self.amp, dtype=float))
        if a.ndim != 1 or not np.all(np.isfinite(a)):
            raise DomainError("amplitude must be a finite vector")
        if int(self.power) != self.power or self.power < 0:
            raise DomainError("power must be a nonnegative integer")
        if not float(self.rate) > 0:
            raise DomainError("decay rate must be positive")
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def m(self):
        return self.amp.size

    def _eval(self, t):
        return np.outer(t ** self.power * np.exp(-self.rate * t), self.amp)

    def limit(self):
        return np.zeros(self.m)

    def to_descriptor(self):
        return {"kind": "transient", "amp": self.amp.tolist(), "power": self.power,
                "rate": self.rate}


@dataclass(frozen=True, eq=False)
class SumDecomposition:
    """Stored split of a composite signal into principal and transient parts."""

    principal: Signal
    transient: Signal


@dataclass(frozen=True, eq=False)
class AsymptoticSum(Signal):
    principal: Signal
    transient: Signal
    kind = "AsymptoticSum"

    def __post_init__(self):
        if self.principal.m != self.transient.m:
            raise ShapeError(
                f"dimension mismatch: {self.principal.m} vs {self.transient.m}"
            )

    @property
    def m(self):
        return self.principal.m

    @property
    def decomposition(self):
        return SumDecomposition(self.principal, self.transient)

    def _eval(self, t):
        return self.principal._eval(t) + self.transient._eval(t)

    def _eval_left(self, t):
        return self.principal._eval_left(t) + self.transient._eval_left(t)

    def jumps(self, t0, t1):
        return np.union1d(self.principal.jumps(t0, t1), self.transient.jumps(t0, t1))

    def limit(self):
        a, b = self.principal.limit(), self.transient.limit()
        return None if a is None or b is None else a + b

    def to_descriptor(self):
        return {"kind": "sum", "principal": self.principal.to_descriptor(),
                "transient": self.transient.to_descriptor()}


@dataclass(frozen=True, eq=False)
class Shifted(Signal):
    """Translation ``t -> base(t + tau)``."""

    base: Signal
    tau: float

    def __post_init__(self):
        if not float(self.tau) >= 0:
            raise DomainError("shift must be nonnegative")
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def kind(self):
        return self.base.kind

    @property
    def m(self):
        return self.base.m

    def _eval(self, t):
        return self.base._eval(t + self.tau)

    def _eval_left(self, t):
        return self.base._eval_left(t + self.tau)

    def jumps(self, t0, t1):
        pts = self.base.jumps(t0 + self.tau, t1 + self.tau) - self.tau
        return pts[pts > 0]

    @property
    def period(self):
        return self.base.period

    def limit(self):
        return self.base.limit()

    def to_descriptor(self):
        return {"kind": "shift", "tau": self.tau, "base": self.base.to_descriptor()}


@dataclass(frozen=True, eq=False)
class Stacked(Signal):
    """Vector signal whose components are the given scalar or vector signals."""

    channels: tuple

    def __post_init__(self):
        if len(self.channels) == 0:
            raise DomainError("stack needs at least one channel")
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def kind(self):
        kinds = {c.kind for c in self.channels}
        return kinds.pop() if len(kinds) == 1 else "Mixed"

    @property
    def m(self):
        return sum(c.m for c in self.channels)

    def _eval(self, t):
        return np.hstack([c._eval(t) for c in self.channels])

    def _eval_left(self, t):
        return np.hstack([c._eval_left(t) for c in self.channels])

    def jumps(self, t0, t1):
        out = np.empty(0)
        for c in self.channels:
            out = np.union1d(out, c.jumps(t0, t1))
        return out

    def limit(self):
        parts = [c.limit() for c in self.channels]
        return None if any(p is None for p in parts) else np.concatenate(parts)

    def to_descriptor(self):
        return {"kind": "stack", "channels": [c.to_descriptor() for c in self.channels]}


def make_constant(value):
    return Constant(value)


def make_convergent_example1(k):
    """Two-channel convergent forcing ``k (1 + t^2 e^{-t}, 1 + t/(1 + t^3))``."""
    return ConvergentExample1(float(k))


def make_almost_periodic(amps, freqs, phases, offset=0.0, period=None):
    """Finite trigonometric sum; ``freqs`` are in cycles per unit time.

    The result is of kind Periodic when ``period`` is declared (each
    frequency must then be an integer multiple of ``1/period``) and
    AlmostPeriodic otherwise.
    """
    return TrigSum(tuple(amps), tuple(freqs), tuple(phases), float(offset), period)


def make_periodic(amps, freqs, phases, period, offset=0.0):
    return make_almost_periodic(amps, freqs, phases, offset, period)


def make_stepanov_ap(amps, omegas, taus, offset=0.0):
    return StepanovAP(tuple(amps), tuple(omegas), tuple(taus), float(offset))


def make_ap_example2():
    """``sin(2 pi t) + sin(2 sqrt(3) pi t)``."""
    return make_almost_periodic([1.0, 1.0], [1.0, math.sqrt(3.0)], [0.0, 0.0])


def make_stepanov_ap_example2():
    """``2 + sin(mod(t, 3pi/2)) + sin(sqrt2 mod(t, 3pi/(2 sqrt2)))``."""
    r2 = math.sqrt(2.0)
    return make_stepanov_ap([1.0, 1.0], [1.0, r2], [1.5 * math.pi, 1.5 * math.pi / r2], 2.0)


def make_transient(amp, power, rate):
    """``amp t^power e^{-rate t}``; ``5 t e^{-t}`` is ``make_transient(5, 1, 1)``."""
    return Transient(amp, power, rate)


def add_transient(base: Signal, transient: Signal) -> Tuple[Signal, SumDecomposition]:
    """Composite ``base + transient`` together with its stored decomposition."""
    composite = AsymptoticSum(base, transient)
    return composite, composite.decomposition


def stack(*channels):
    return Stacked(tuple(channels))


def shift(sig: Signal, tau):
    """Translation operator ``(sigma_tau sig)(t) = sig(t + tau)`` for ``tau >= 0``."""
    tau = float(tau)
    if tau < 0:
        raise DomainError("shift must be nonnegative")
    if tau == 0:
        return sig
    if isinstance(sig, Shifted):
        return Shifted(sig.base, sig.tau + tau)
    return Shifted(sig, tau)


def epsilon_period_check(sig: Signal, tau, eps, horizon=100.0, dt=1e-2):
    """Finite-horizon test of ``sup_t |sig(t) - sig(t + tau)|_inf <= eps``.

    The supremum runs over the grid ``0, dt, ..., horizon`` only, so a
    ``True`` result is finite-horizon evidence, not a proof.
    """
    tau = float(tau)
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    t = np.arange(0.0, horizon + 0.5 * dt, dt)
    gap = np.max(np.abs(sig(t) - sig(t + tau)))
    return bool(gap <= eps)


def scan_epsilon_periods(sig: Signal, eps, tau_max=100.0, tau_step=1e-3, horizon=20.0,
                         dt=1e-2, chunk=256):
    """Scan candidate ``tau`` in ``(0, tau_max]`` for finite-horizon eps-periods.

    Returns ``(taus, largest_gap)`` where ``largest_gap`` is the longest
    stretch of ``[0, tau_max]`` containing no passing ``tau``. A finite scan
    cannot establish relative density; it only bounds the gaps it sees.
    """
    t = np.arange(0.0, horizon + 0.5 * dt, dt)
    base = sig(t)
    cands = np.arange(tau_step, tau_max + 0.5 * tau_step, tau_step)
    passing = []
    for start in range(0, cands.size, chunk):
        block = cands[start:start + chunk]
        shifted = sig((t[None, :] + block[:, None]).ravel()).reshape(block.size, t.size, -1)
        gaps = np.max(np.abs(shifted - base[None]), axis=(1, 2))
        passing.append(block[gaps <= eps])
    taus = np.concatenate(passing)
    edges = np.concatenate([[0.0], taus, [tau_max]])
    return taus, float(np.max(np.diff(edges)))


def from_descriptor(d) -> Signal:
    """Rebuild a signal from its descriptor; raises :class:`ConfigError` on bad input."""
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("signal descriptor must be a mapping with a 'kind' key")
    kind = d["kind"]
    try:
        if kind == "constant":
            return Constant(d["value"])
        if kind == "convergent_example1":
            return ConvergentExample1(float(d["k"]))
        if kind == "trig":
            return TrigSum(tuple(d["amps"]), tuple(d["freqs"]),
                           tuple(d.get("phases", [0.0] * len(d["amps"]))),
                           float(d.get("offset", 0.0)), d.get("period"))
        if kind == "stepanov":
            return StepanovAP(tuple(d["amps"]), tuple(d["omegas"]), tuple(d["taus"]),
                              float(d.get("offset", 0.0)))
        if kind == "transient":
            return Transient(d["amp"], d.get("power", 0), d["rate"])
        if kind == "sum":
            return AsymptoticSum(from_descriptor(d["principal"]),
                                 from_descriptor(d["transient"]))
        if kind == "shift":
            return shift(from_descriptor(d["base"]), d["tau"])
        if kind == "stack":
            return Stacked(tuple(from_descriptor(c) for c in d["channels"]))
    except KeyError as exc:
        raise ConfigError(f"signal of kind '{kind}' is missing parameter {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad parameters for signal of kind '{kind}': {exc}") from exc
    raise ConfigError(f"unknown signal kind '{kind}'")
