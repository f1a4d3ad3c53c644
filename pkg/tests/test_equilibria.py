import numpy as np
import pytest

from conftest import random_positive_system
from lurecert.equilibria import (
    PerronWeight,
    find_perron_weight,
    solve_equilibrium,
    uniqueness_probe,
)
from lurecert.errors import ConvergenceError, DomainError, PreconditionError
from lurecert.linalg import transfer_eval, weighted_seminorm
from lurecert.signals import make_constant
from lurecert.simulate import (
    SimConfig,
    make_linear_nonlinearity,
    make_saturation_nonlinearity,
    make_zero_nonlinearity,
    simulate,
)
from lurecert.system import LureSystem, Nonlinearity


@pytest.fixture(scope="module")
def ex1_weight(ex1):
    return find_perron_weight(ex1, 89.0 * np.eye(3))


class TestPerronWeight:
    def test_example1(self, ex1_weight, ex1):
        v, rho = ex1_weight.v, ex1_weight.rho
        assert np.all(v > 0) and 0 < rho < 1
        M = transfer_eval(ex1, 0.0).G11 * 89.0
        assert np.all(v @ M <= rho * v + 1e-12)

    def test_zero_delta(self, ex1):
        pw = find_perron_weight(ex1, np.zeros((3, 3)))
        assert pw.rho == 0
        np.testing.assert_allclose(pw.v, np.full(3, 1 / 3))

    def test_example2_scalar(self, ex2):
        # G11(0) = 4/7 for this system, so the weight exists (decisions ledger)
        pw = find_perron_weight(ex2, np.eye(1))
        np.testing.assert_array_equal(pw.v, [1.0])
        assert pw.rho == pytest.approx(4 / 7)

    def test_scalar_above_one(self, ex2):
        with pytest.raises(PreconditionError, match="small-gain"):
            find_perron_weight(ex2, 2.0 * np.eye(1))

    def test_example1_above_threshold(self, ex1):
        with pytest.raises(PreconditionError):
            find_perron_weight(ex1, 91.0 * np.eye(3))

    def test_reducible_needs_weight(self):
        sys = LureSystem(-np.eye(2), np.eye(2), np.zeros((2, 1)), np.eye(2), np.eye(2))
        Delta = np.array([[0.5, 0.0], [0.1, 0.5]])
        with pytest.raises(PreconditionError, match="supply a weight"):
            find_perron_weight(sys, Delta)
        pw = find_perron_weight(sys, Delta, v=[1.0, 1.0])
        assert pw.rho == pytest.approx(0.6)
        with pytest.raises(PreconditionError):
            find_perron_weight(sys, Delta, v=[1.0, 1.0], rho=0.55)

    def test_supplied_weight_validated(self, ex1):
        with pytest.raises(DomainError):
            find_perron_weight(ex1, 89.0 * np.eye(3), v=[1.0, 0.0, 1.0])

    def test_unstable_A(self):
        sys = LureSystem([[1.0]], [[1.0]], [[1.0]], [[1.0]], [[1.0]])
        with pytest.raises(PreconditionError):
            find_perron_weight(sys, np.eye(1))


class TestSolve:
    def test_linear_case_one_step(self, ex1):
        eq = solve_equilibrium(ex1, make_zero_nonlinearity(3, 3), [3.0, 3.0],
                               PerronWeight(np.full(3, 1 / 3), 0.0))
        np.testing.assert_allclose(eq.x_star, -np.linalg.solve(ex1.A, ex1.B2 @ [3.0, 3.0]),
                                   rtol=1e-14)
        assert eq.iterations == 1

    def test_zero_forcing(self, ex1, ex1_f, ex1_weight):
        eq = solve_equilibrium(ex1, ex1_f, [0.0, 0.0], ex1_weight)
        np.testing.assert_array_equal(eq.x_star, np.zeros(3))

    def test_example1_k3(self, ex1, ex1_f, ex1_weight):
        eq = solve_equilibrium(ex1, ex1_f, [3.0, 3.0], ex1_weight)
        assert eq.residual <= 1e-8
        assert np.all(eq.x_star >= -1e-9)
        # state equation holds with the independently evaluated nonlinearity
        lhs = ex1.A @ eq.x_star + ex1.B1 @ ex1_f(0.0, ex1.C1 @ eq.x_star) + ex1.B2 @ [3.0, 3.0]
        assert np.max(np.abs(lhs)) <= 1e-8 * max(1, np.abs(ex1.A @ eq.x_star).max())
        assert eq.max_contraction <= ex1_weight.rho + 1e-12

    def test_contraction_along_iterates(self, ex1, ex1_f, ex1_weight):
        # direct oracle: |F(a) - F(b)|_v <= rho |a - b|_v for random pairs
        G11 = transfer_eval(ex1, 0.0).G11
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b = rng.normal(0, 10, 3), rng.normal(0, 10, 3)
            lhs = weighted_seminorm(G11 @ (ex1_f(0, a) - ex1_f(0, b)), ex1_weight.v)
            assert lhs <= ex1_weight.rho * weighted_seminorm(a - b, ex1_weight.v) + 1e-12

    def test_error_bound_reported(self, ex1, ex1_f, ex1_weight):
        coarse = solve_equilibrium(ex1, ex1_f, [3.0, 3.0], ex1_weight, tol=1e-4)
        fine = solve_equilibrium(ex1, ex1_f, [3.0, 3.0], ex1_weight, tol=1e-13)
        assert coarse.error_bound <= 1e-4
        assert weighted_seminorm(coarse.y_star - fine.y_star, ex1_weight.v) <= 1e-4 + 1e-12

    def test_example2(self, ex2, ex2_f):
        pw = find_perron_weight(ex2, np.eye(1))
        eq = solve_equilibrium(ex2, ex2_f, [2.0], pw)
        assert eq.residual <= 1e-8 and np.all(eq.x_star >= 0)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_understated_bound_diverges(self):
        sys = LureSystem([[-1.0]], [[1.0]], [[0.0]], [[1.0]], [[1.0]])
        # declared slope 0.5 but the map has slope 3 through the loop
        liar = Nonlinearity(lambda t, z: 3.0 * z + 1.0, [[0.5]])
        pw = find_perron_weight(sys, liar.Delta)
        with pytest.raises(ConvergenceError):
            solve_equilibrium(sys, liar, [0.0], pw, max_iter=2000)

    def test_probe_detects_divergence(self):
        sys = LureSystem([[-1.0]], [[1.0]], [[0.0]], [[1.0]], [[1.0]])
        # contracting near zero, expanding for |z| > 10: restarts far away escape
        liar = Nonlinearity(lambda t, z: np.where(np.abs(z) > 10, 3.0 * z, 0.5 * z), [[0.5]])
        pw = find_perron_weight(sys, liar.Delta)
        ok, spread = uniqueness_probe(sys, liar, [0.0], pw, trials=20, seed=0,
                                      max_iter=500, return_spread=True)
        assert ok is False and spread == np.inf

    def test_time_varying_rejected(self, ex2):
        f = Nonlinearity(lambda t, z: z / (1 + t), np.eye(1), time_varying=True)
        with pytest.raises(PreconditionError):
            solve_equilibrium(ex2, f, [1.0], PerronWeight(np.ones(1), 0.5))

    def test_bad_rho(self, ex2, ex2_f):
        with pytest.raises(DomainError):
            solve_equilibrium(ex2, ex2_f, [1.0], PerronWeight(np.ones(1), 1.0))


class TestUniquenessAndDynamics:
    def test_example1_restarts(self, ex1, ex1_f, ex1_weight):
        ok, spread = uniqueness_probe(ex1, ex1_f, [3.0, 3.0], ex1_weight, trials=20,
                                      return_spread=True)
        assert ok and spread <= 1e-6

    def test_linear_restarts(self, ex2):
        f = make_linear_nonlinearity([[0.5]])
        assert uniqueness_probe(ex2, f, [1.0], find_perron_weight(ex2, f.Delta))

    @pytest.mark.parametrize("k", [3, 6, 9])
    def test_hold_in_place(self, k, ex1, ex1_f, ex1_weight):
        eq = solve_equilibrium(ex1, ex1_f, [k, k], ex1_weight, tol=1e-12)
        tr = simulate(ex1, ex1_f, make_constant([k, k]), eq.x_star, SimConfig(dt=1e-3, T=20))
        assert np.max(np.abs(tr.x - eq.x_star)) <= 1e-5

    def test_nonnegativity_random(self):
        rng = np.random.default_rng(8)
        f = make_saturation_nonlinearity()
        done = 0
        for _ in range(60):
            sys = random_positive_system(rng, m1=1, p1=1)
            try:
                pw = find_perron_weight(sys, f.Delta)
            except PreconditionError:
                continue
            w = rng.uniform(0, 3, sys.m2)
            eq = solve_equilibrium(sys, f, w, pw)
            assert np.all(eq.x_star >= -1e-9) and eq.residual <= 1e-8
            done += 1
        assert done >= 20

    def test_round_trip_dict(self, ex1, ex1_f, ex1_weight):
        d = solve_equilibrium(ex1, ex1_f, [3.0, 3.0], ex1_weight).to_dict()
        assert set(d) >= {"w_star", "x_star", "y_star", "residual", "iterations"}
