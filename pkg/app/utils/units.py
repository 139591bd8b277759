"""
Physical constants and boundary unit conversions.

Everything inside the services is SI (rad/s, J, N, Pa, m). The CLI and the
HTTP layer speak μm, eV, K and mPa and convert here.
"""

import math
from scipy import constants
from scipy.special import zeta

HBAR = constants.hbar
C = constants.c
KB = constants.Boltzmann
EV = constants.electron_volt

# Apéry's constant ζ(3)
ZETA3 = float(zeta(3.0, 1.0))

MICRON = 1e-6


def ev_to_rad_s(energy_ev):
    """Photon energy in eV to angular frequency in rad/s"""
    return energy_ev * EV / HBAR


def rad_s_to_ev(omega):
    """Angular frequency in rad/s to photon energy in eV"""
    return omega * HBAR / EV


def um_to_m(length_um):
    return length_um * MICRON


def m_to_um(length_m):
    return length_m / MICRON


def pa_to_mpa(pressure):
    return pressure * 1e3


def gradient_to_mpa(gradient, radius):
    """Force gradient (N/m) to the F'/2πR figure of merit in mPa"""
    return gradient / (2.0 * math.pi * radius) * 1e3


def matsubara_xi1(temperature):
    """First Matsubara frequency 2π k_B T/ħ in rad/s"""
    return 2.0 * math.pi * KB * temperature / HBAR
