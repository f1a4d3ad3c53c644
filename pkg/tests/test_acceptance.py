"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are collected into a
terminal-summary section) or ``python tests/test_acceptance.py``.
"""

import json
import math
import sys
import tempfile
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, random_metzler, random_positive_system  # noqa: E402
from lurecert.catalog import (  # noqa: E402
    EXAMPLE2_P,
    example1_forcing,
    example1_initial_states,
    example1_nonlinearity,
    example1_system,
    example2_forcing,
    example2_nonlinearity,
    example2_system,
)
from lurecert.certify import (  # noqa: E402
    CertificateH1,
    check_H1,
    check_H2,
    check_linear_dissipativity,
    construct_H1_certificate,
    verify_H1_certificate,
)
from lurecert.cli import main  # noqa: E402
from lurecert.config import bundled_config  # noqa: E402
from lurecert.equilibria import find_perron_weight, solve_equilibrium, uniqueness_probe  # noqa: E402
from lurecert.errors import PreconditionError  # noqa: E402
from lurecert.linalg import (  # noqa: E402
    NonnegativityWarning,
    is_hurwitz_metzler_crosscheck,
    matrix_exp,
    spectral_abscissa,
    transfer_eval,
)
from lurecert.metrics import (  # noqa: E402
    PairSampling,
    log_decay_slope,
    verify_L1xi_gain,
    verify_thm1_H1,
    verify_thm1_H2,
)
from lurecert.signals import make_almost_periodic, make_constant, make_periodic  # noqa: E402
from lurecert.simulate import (  # noqa: E402
    SimConfig,
    make_diagonal_slope_nonlinearity,
    make_linear_nonlinearity,
    make_saturation_nonlinearity,
    make_zero_nonlinearity,
    simulate,
)
from lurecert.system import LureSystem  # noqa: E402


def _record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# ---------------------------------------------------------------- criterion 1

def criterion_1():
    with tempfile.TemporaryDirectory() as out:
        start = time.perf_counter()
        code = main(["threshold", "--config", str(bundled_config("example1")), "--tol", "0.01",
                     "--out", out])
        elapsed = time.perf_counter() - start
        th = json.loads((Path(out) / "report.json").read_text())["results"]["threshold"]
    delta = th["delta"]
    ok = code == 0 and 89.84 <= delta <= 89.94 and elapsed < 10.0
    return ok, f"delta* = {delta:.6f} in [89.84, 89.94], runtime {elapsed:.2f} s < 10 s"


# ---------------------------------------------------------------- criterion 2

def criterion_2():
    rep = check_H2(example2_system(), np.eye(1), 0.1, [1.0], [0.05])
    p = rep.certificate.p if rep.holds else rep.dissipation.p
    gap = float(np.max(np.abs(p - np.array(EXAMPLE2_P))))
    res = max(rep.dissipation.residuals)
    ok = rep.holds and gap <= 1e-3 and res <= 1e-9
    return ok, f"p = {np.round(p, 6).tolist()}, max gap {gap:.2e} <= 1e-3, residual {res:.1e} <= 1e-9"


# ---------------------------------------------------------------- criterion 3

def criterion_3():
    sys_, f, w = example2_system(), example2_nonlinearity(), example2_forcing()
    cfg = SimConfig(dt=1e-3, T=40.0)
    runs = {name: simulate(sys_, f, w[name], np.zeros(4), cfg)
            for name in ("zero", "w_ap", "w_aap", "w_s", "w_as")}
    worst, ok = math.inf, True
    parts = []
    for a, b in (("w_ap", "zero"), ("w_ap", "w_aap"), ("w_s", "w_as")):
        rep = verify_L1xi_gain(runs[a], runs[b], 0.1, [1.0], [0.05], atol=1e-5)
        ok &= rep.holds
        worst = min(worst, rep.worst_margin)
        parts.append(f"{a}|{b} {'ok' if rep.holds else 'violated'}")
    return ok, f"{', '.join(parts)}; worst margin {worst:.3e} (atol 1e-5)"


# ---------------------------------------------------------------- criterion 4

def _family_linear(rng):
    sys_ = random_positive_system(rng, n=int(rng.integers(1, 7)))
    G = transfer_eval(sys_, 0.0).G11
    K = rng.uniform(0, 1, (sys_.m1, sys_.p1))
    rho = np.max(np.abs(np.linalg.eigvals(G @ K)))
    K = K * rng.uniform(0.2, 0.9) / max(rho, 1e-12)
    return sys_, make_linear_nonlinearity(K), K


def _family_saturation(rng):
    sys_ = random_positive_system(rng, n=int(rng.integers(1, 7)), m1=1, p1=1)
    g = transfer_eval(sys_, 0.0).G11[0, 0]
    scale = rng.uniform(0.2, 0.9) / g
    sys_ = LureSystem(sys_.A, sys_.B1 * scale, sys_.B2, sys_.C1, sys_.C2)
    return sys_, make_saturation_nonlinearity(), np.eye(1)


def _family_sine(rng):
    m = int(rng.integers(1, 4))
    sys_ = random_positive_system(rng, n=int(rng.integers(1, 7)), m1=m, p1=m)
    G = transfer_eval(sys_, 0.0).G11
    delta0 = rng.uniform(0.2, 0.9) / max(np.max(np.abs(np.linalg.eigvals(G))), 1e-12)
    half = 0.5 * delta0
    f = make_diagonal_slope_nonlinearity(lambda z: half * (z + np.sin(z)), delta0, m, True)
    return sys_, f, delta0 * np.eye(m)


FAMILIES = {"linear": _family_linear, "saturation": _family_saturation, "sine": _family_sine}


def _random_forcing(rng, m2):
    if rng.uniform() < 0.5:
        return make_constant(rng.uniform(0, 3, m2))
    amps = rng.uniform(0, 1, 2)
    freqs = rng.uniform(0.05, 1.0, 2)
    # offset keeps each channel nonnegative
    sig = make_almost_periodic(amps, freqs, rng.uniform(0, 1, 2), offset=float(amps.sum()))
    return sig if m2 == 1 else _stack_copies(sig, m2)


def _stack_copies(sig, m2):
    from lurecert.signals import stack
    return stack(*([sig] * m2))


def criterion_4(per_family=40, T=20.0, dt=1e-2):
    rng = np.random.default_rng(2024)
    sampling = PairSampling(coarse=12, n_random=60, seed=1)
    cfg = SimConfig(dt=dt, T=T)
    stats = {}
    for fam, build in FAMILIES.items():
        n_sys = h1_ok = h2_n = h2_ok = falsified = 0
        while n_sys < per_family:
            sys_, f, Delta = build(rng)
            if not check_H1(sys_, Delta)[0]:
                continue
            n_sys += 1
            cert = construct_H1_certificate(sys_, Delta)
            assert verify_H1_certificate(sys_, Delta, cert)
            x0a, x0b = rng.uniform(0, 5, sys_.n), rng.uniform(0, 5, sys_.n)
            wa, wb = _random_forcing(rng, sys_.m2), _random_forcing(rng, sys_.m2)
            ta = simulate(sys_, f, wa, x0a, cfg)
            tb = simulate(sys_, f, wb, x0b, cfg)
            h1_ok += verify_thm1_H1(ta, tb, cert, sys_.B2, sampling).holds
            bad = CertificateH1(10.0 * cert.xi, cert.p)
            falsified += not verify_thm1_H1(ta, tb, bad, sys_.B2, sampling).holds

            M = sys_.closed_loop(Delta)
            xi2 = 0.5 * (-spectral_abscissa(M))
            q = np.ones(sys_.p2)
            gain = check_linear_dissipativity(M, sys_.B2, sys_.C2, None, xi2, q,
                                              np.ones(sys_.m2)).gain
            r = gain * rng.uniform(0.7, 2.0) + 1e-9
            rep = check_H2(sys_, Delta, xi2, q, r)
            if rep.holds:
                h2_n += 1
                h2_ok += verify_thm1_H2(ta, tb, rep.certificate, sys_.C2, sampling).holds
        stats[fam] = (n_sys, h1_ok, h2_n, h2_ok, falsified)
    total = sum(s[0] for s in stats.values())
    ok = (total >= 100
          and all(s[1] == s[0] for s in stats.values())
          and all(s[3] == s[2] for s in stats.values())
          and sum(s[2] for s in stats.values()) > 0
          and all(s[4] >= 1 for s in stats.values()))
    detail = "; ".join(f"{fam}: H1 {s[1]}/{s[0]}, H2 {s[3]}/{s[2]}, 10x-xi violations {s[4]}"
                       for fam, s in stats.items())
    return ok, f"{total} systems. {detail}"


# ---------------------------------------------------------------- criterion 5

def criterion_5():
    sys_, f = example1_system(), example1_nonlinearity()
    pw = find_perron_weight(sys_, 89.0 * np.eye(3))
    cfg = SimConfig(dt=1e-3, T=40.0)
    worst_eq, worst_pair = 0.0, 0.0
    per_k = []
    for k in (3, 6, 9):
        w = example1_forcing(k)
        x_star = solve_equilibrium(sys_, f, w.limit(), pw).x_star
        finals = [simulate(sys_, f, w, x0, cfg).x[-1] for x0 in example1_initial_states(k)]
        gap_eq = max(float(np.max(np.abs(x - x_star))) for x in finals)
        gap_pair = max(float(np.max(np.abs(finals[i] - finals[j])))
                       for i in range(3) for j in range(i + 1, 3))
        worst_eq, worst_pair = max(worst_eq, gap_eq), max(worst_pair, gap_pair)
        per_k.append(f"k={k}: |x(T)-x*| {gap_eq:.2e}, pair {gap_pair:.2e}")

    sys2, f2, w2 = example2_system(), example2_nonlinearity(), example2_forcing()
    T = 40.0
    cfg2 = SimConfig(dt=1e-3, T=T)
    ta = simulate(sys2, f2, w2["w_s"], np.zeros(4), cfg2)
    tb = simulate(sys2, f2, w2["w_as"], np.zeros(4), cfg2)
    diff = np.max(np.abs(ta.x - tb.x), axis=1)
    slope = log_decay_slope(diff, cfg2.dt)
    ok = worst_eq <= 1e-2 and worst_pair <= 1e-3 and slope <= -0.05
    detail = (f"{'; '.join(per_k)} (need 1e-2 and 1e-3); "
              f"transient decay slope {slope:.3f} <= -0.05")
    return ok, detail


# ---------------------------------------------------------------- criterion 6

def criterion_6():
    sys_, f = example1_system(), example1_nonlinearity()
    pw = find_perron_weight(sys_, 89.0 * np.eye(3))
    worst_res = worst_spread = worst_hold = 0.0
    nonneg = True
    for k in (3, 6, 9):
        w_star = example1_forcing(k).limit()
        eq = solve_equilibrium(sys_, f, w_star, pw, tol=1e-12)
        _, spread = uniqueness_probe(sys_, f, w_star, pw, trials=20, tol=1e-12,
                                     return_spread=True)
        tr = simulate(sys_, f, make_constant(w_star), eq.x_star, SimConfig(dt=1e-3, T=20.0))
        worst_res = max(worst_res, eq.residual)
        worst_spread = max(worst_spread, spread)
        worst_hold = max(worst_hold, float(np.max(np.abs(tr.x - eq.x_star))))
        nonneg &= bool(np.all(eq.x_star >= -1e-9))
    ok = worst_res <= 1e-8 and worst_spread <= 1e-6 and nonneg and worst_hold <= 1e-5
    return ok, (f"residual {worst_res:.1e} <= 1e-8, restart spread {worst_spread:.1e} <= 1e-6, "
                f"x* >= 0 {nonneg}, hold-in-place {worst_hold:.1e} <= 1e-5")


# ---------------------------------------------------------------- criterion 7

def criterion_7():
    sys_, f = example2_system(), example2_nonlinearity()
    tau, dt, T = 1.0, 1e-3, 30.0
    w = make_periodic([1.0, 0.5], [1.0, 2.0], [0.0, 0.0], period=tau, offset=2.0)
    cfg = SimConfig(dt=dt, T=T)
    ra = simulate(sys_, f, w, np.zeros(4), cfg)
    rb = simulate(sys_, f, w, np.array([4.0, 3.0, 2.0, 1.0]), cfg)
    shift = int(round(tau / dt))
    keep = ra.times >= 20.0 - 1e-12
    first = np.flatnonzero(keep)[0]
    window = slice(first, first + shift + 1)
    periodic_gap = max(
        float(np.max(np.abs(tr.x[window.start + shift:window.stop + shift]
                            - tr.x[window]))) for tr in (ra, rb))
    agree = float(np.max(np.abs(ra.x[keep] - rb.x[keep])))
    ok = periodic_gap <= 1e-3 and agree <= 1e-3
    return ok, f"sup |x(t+tau)-x(t)| on [20, 21] = {periodic_gap:.1e}, run gap {agree:.1e}"


# ---------------------------------------------------------------- criterion 8

def _rk4_ratio():
    A = np.array([[-1.0, 0.5, 0.0], [0.2, -2.0, 0.3], [0.0, 0.4, -3.0]])
    sys_ = LureSystem(A, np.zeros((3, 1)), np.zeros((3, 1)), np.zeros((1, 3)), np.ones((1, 3)))
    x0 = np.array([1.0, 2.0, 3.0])
    exact = matrix_exp(A, 2.0) @ x0
    errs = []
    for dt in (0.1, 0.05):
        tr = simulate(sys_, make_zero_nonlinearity(1, 1), make_constant([0.0]), x0,
                      SimConfig(dt=dt, T=2.0))
        errs.append(float(np.max(np.abs(tr.x[-1] - exact))))
    return errs[0] / errs[1]


def criterion_8():
    ratio = _rk4_ratio()
    rng = np.random.default_rng(808)
    f1 = f3 = True
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonnegativityWarning)
        for trial in range(100):
            n = int(rng.integers(1, 9))
            M = random_metzler(rng, n, hurwitz=[True, False, None][trial % 3])
            f1 &= bool(matrix_exp(M, float(rng.uniform(0, 5))).min() >= -1e-12)
            a = spectral_abscissa(M)
            if abs(a) > 1e-6:
                inv = np.linalg.inv(M)
                inv_nonpos = bool(np.all(inv <= 1e-10 * max(1.0, np.abs(inv).max())))
                f3 &= (a < 0) == inv_nonpos == is_hurwitz_metzler_crosscheck(M)

    agree = 0
    holds_count = 0
    for _ in range(200):
        sys_ = random_positive_system(rng)
        Delta = rng.uniform(0, 1, (sys_.m1, sys_.p1)) * rng.uniform(0.1, 3.0)
        by_gain = check_H1(sys_, Delta)[0]
        by_closed_loop = spectral_abscissa(sys_.closed_loop(Delta)) < 0
        try:
            cert = construct_H1_certificate(sys_, Delta)
            by_certificate = verify_H1_certificate(sys_, Delta, cert)
        except PreconditionError:
            by_certificate = False
        agree += by_gain == by_closed_loop == by_certificate
        holds_count += by_gain
    ok = 12.0 <= ratio <= 20.0 and f1 and f3 and agree == 200
    return ok, (f"RK4 ratio {ratio:.2f} in [12, 20], F1 {f1}, F3 {f3}, "
                f"three-way H1 agreement {agree}/200 ({holds_count} hold)")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
            5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    ok, detail = CRITERIA[number]()
    assert _record(number, ok, detail), detail


if __name__ == "__main__":
    failed = 0
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]()
        failed += not _record(number, ok, detail)
    sys.exit(1 if failed else 0)
