"""The two worked example systems and their forcing terms."""

import numpy as np

from .signals import (
    add_transient,
    make_ap_example2,
    make_constant,
    make_convergent_example1,
    make_stepanov_ap_example2,
    make_transient,
)
from .simulate import make_diagonal_slope_nonlinearity, make_saturation_nonlinearity
from .system import LureSystem

__all__ = [
    "EXAMPLE1_DELTA0",
    "EXAMPLE2_XI",
    "EXAMPLE2_R",
    "EXAMPLE2_P",
    "example1_system",
    "example1_nonlinearity",
    "example1_forcing",
    "example1_initial_states",
    "example2_system",
    "example2_nonlinearity",
    "example2_forcing",
]

EXAMPLE1_DELTA0 = 89.0
EXAMPLE2_XI = 0.1
EXAMPLE2_R = 0.05
#: storage vector quoted for the second example (four significant digits)
EXAMPLE2_P = (0.05, 0.05, 0.05, 0.1949)


def example1_system():
    """Three states, three feedback channels, two forcing inputs, scalar output."""
    A = np.diag([-1.0, -10.0, -100.0]) + 0.01 * np.ones((3, 3))
    B1 = np.eye(3)
    B2 = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    C1 = np.array([[0.0, 1.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    C2 = np.array([[1.0, 0.0, 0.0]])
    return LureSystem(A, B1, B2, C1, C2)


def example1_nonlinearity(delta0=EXAMPLE1_DELTA0):
    """Repeated ``g(z) = (delta0/2)(z + sin z)``, slope in ``[0, delta0]``."""
    half = 0.5 * float(delta0)

    def g(z):
        return half * (z + np.sin(z))

    return make_diagonal_slope_nonlinearity(
        g, delta0, 3, maps_nonnegative=True, name="example1_sine",
        descriptor={"kind": "example1_sine", "delta0": float(delta0)},
    )


def example1_forcing(k):
    return make_convergent_example1(k)


def example1_initial_states(k):
    """``(0, 4k(-1, 1, 1), 4k(-1, 0, -1))``."""
    k = float(k)
    return (np.zeros(3), 4 * k * np.array([-1.0, 1.0, 1.0]), 4 * k * np.array([-1.0, 0.0, -1.0]))


def example2_system(n=4):
    """``A = -7I``, ``B1 = 1``, ``B2 = e1``, ``C1 = 1^T``, ``C2 = e_n^T``."""
    A = -7.0 * np.eye(n)
    B1 = np.ones((n, 1))
    B2 = np.zeros((n, 1))
    B2[0, 0] = 1.0
    C1 = np.ones((1, n))
    C2 = np.zeros((1, n))
    C2[0, n - 1] = 1.0
    return LureSystem(A, B1, B2, C1, C2)


def example2_nonlinearity():
    return make_saturation_nonlinearity()


def example2_forcing():
    """Named forcing terms of the second example, plus the zero signal."""
    w_ap = make_ap_example2()
    w_s = make_stepanov_ap_example2()
    w_aap, _ = add_transient(w_ap, make_transient(5.0, 1, 1.0))
    w_as, _ = add_transient(w_s, make_transient(5.0, 1, 0.25))
    return {
        "zero": make_constant([0.0]),
        "w_ap": w_ap,
        "w_aap": w_aap,
        "w_s": w_s,
        "w_as": w_as,
    }
