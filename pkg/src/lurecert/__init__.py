"""Incremental stability certificates for forced positive Lur'e systems."""

from .certify import (
    CertificateH1,
    CertificateH2,
    alpha_s,
    check_H1,
    check_H2,
    check_linear_dissipativity,
    construct_H1_certificate,
    loop_shift,
    verify_H1_certificate,
)
from .equilibria import find_perron_weight, solve_equilibrium, uniqueness_probe
from .simulate import SimConfig, Trajectory, simulate
from .system import LureSystem, Nonlinearity

__version__ = "0.1.0"

__all__ = [
    "LureSystem",
    "Nonlinearity",
    "CertificateH1",
    "CertificateH2",
    "check_linear_dissipativity",
    "check_H1",
    "construct_H1_certificate",
    "verify_H1_certificate",
    "check_H2",
    "alpha_s",
    "loop_shift",
    "SimConfig",
    "Trajectory",
    "simulate",
    "find_perron_weight",
    "solve_equilibrium",
    "uniqueness_probe",
]
