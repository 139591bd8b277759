"""
Exact classical (n=0) sphere-plate channel for Drude metals.

𝓕 = (k_B T/2) Φ(Z) with

    Φ = S1 + ln g,   S1 = Σ_l (2l+1) ln(1 − Z^{2l+1}),
    g = 1 − (1 − Z²) S2,   S2 = Σ_l Z^{2l+1} (1 − Z^{2l})/(1 − Z^{2l+1}),

summed from l = 1 and Z = 1/(1 + x + √(x(2+x))), x = a/R. Force and gradient
come from term-by-term derivatives in Z and the chain rule through Z(a).
"""

import math
import logging
from typing import NamedTuple

import numpy as np

from app.models.material_schema import MaterialKind
from app.utils.errors import DomainError, PrecisionError
from app.utils.settings import SERIES_TOL
from app.utils.units import KB, ZETA3

# Setup logging
logger = logging.getLogger(__name__)

Z_LIMIT = 1.0 - 1e-8
_CHUNK = 4096
# Resource bound: terms <= _TERM_FACTOR * ln(1/tol) / (1 - Z) + _TERM_SLACK
_TERM_FACTOR = 4.0
_TERM_SLACK = 64


class SeriesSums(NamedTuple):
    """Φ(Z) with its first two Z-derivatives"""
    phi: float
    dphi: float
    d2phi: float
    n_terms: int


def z_parameter(x):
    """Bispherical parameter Z = 1/(1 + x + √(x(2+x))) for x = a/R.

    Raises:
        DomainError: If x <= 0
    """
    if not x > 0:
        raise DomainError(f"x = a/R must be positive, got {x}")
    return 1.0 / (1.0 + x + math.sqrt(x * (2.0 + x)))


def z_derivatives(geom):
    """(Z, dZ/da, d²Z/da²) at fixed R"""
    x = geom.x
    z = z_parameter(x)
    w = math.sqrt(x * (2.0 + x))
    z_x = -z * z * (1.0 + (1.0 + x) / w)
    z_xx = 2.0 * z_x * z_x / z + z * z / w ** 3
    return z, z_x / geom.radius, z_xx / geom.radius ** 2


def term_budget(z, tol):
    return int(_TERM_FACTOR * math.log(1.0 / tol) / (1.0 - z)) + _TERM_SLACK


def _chunk_terms(z, log_z, l):
    """Per-l terms of S1, S2 and their first two Z-derivatives"""
    p = 2.0 * l + 1.0
    z_p = np.exp(p * log_z)                 # Z^{2l+1}
    z_2l = np.exp(2.0 * l * log_z)          # Z^{2l}
    b = -np.expm1(p * log_z)                # 1 − Z^{2l+1}
    one_minus_z2l = -np.expm1(2.0 * l * log_z)

    s1 = p * np.log1p(-z_p)
    ds1 = -p * p * z_2l / b
    d2s1 = -p * p * (2.0 * l * z_2l / z + z_2l * z_2l) / (b * b)

    # s = A/B with A = Z^{2l+1} − Z^{4l+1}, B = 1 − Z^{2l+1}
    a_ = z_p * one_minus_z2l
    z_4l = z_2l * z_2l
    da = p * z_2l - (4.0 * l + 1.0) * z_4l
    d2a = p * 2.0 * l * z_2l / z - (4.0 * l + 1.0) * 4.0 * l * z_4l / z
    db = -p * z_2l
    d2b = -p * 2.0 * l * z_2l / z
    cross = da * b - a_ * db
    s2 = a_ / b
    ds2 = cross / (b * b)
    d2s2 = (d2a * b - a_ * d2b) / (b * b) - 2.0 * db * cross / b ** 3
    return s1, ds1, d2s1, s2, ds2, d2s2


def series_sums(z, tol=None):
    """Sum the n=0 series and its Z-derivatives to relative tolerance tol.

    Each series stops at the first l whose term falls below tol times the
    partial sum in magnitude; all six run to the same l.

    Args:
        z: Bispherical parameter, 0 < Z < 1 − 1e-8
        tol: Relative truncation tolerance in (0, 1e-6]

    Returns:
        SeriesSums: Φ, dΦ/dZ, d²Φ/dZ² and the number of l terms used

    Raises:
        DomainError: If tol is outside (0, 1e-6] or Z outside (0, 1)
        PrecisionError: If Z is too close to 1 or the term budget is exhausted
    """
    tol = SERIES_TOL if tol is None else tol
    if not 0.0 < tol <= 1e-6:
        raise DomainError(f"series tolerance must lie in (0, 1e-6], got {tol}")
    if not 0.0 < z < 1.0:
        raise DomainError(f"Z must lie in (0, 1), got {z}")
    if z >= Z_LIMIT:
        raise PrecisionError(f"Z = {z!r} is too close to 1 for the n=0 series; use a larger a/R")

    budget = term_budget(z, tol)
    log_z = math.log(z)
    partial = np.zeros(6)
    start = 1
    while start <= budget:
        l = np.arange(start, min(start + _CHUNK, budget + 1), dtype=float)
        terms = np.vstack(_chunk_terms(z, log_z, l))
        running = partial[:, None] + np.cumsum(terms, axis=1)
        small = np.all(np.abs(terms) < tol * np.abs(running), axis=0)
        done = np.flatnonzero(small)
        if done.size:
            stop = done[0]
            partial = running[:, stop]
            n_terms = int(start + stop)
            break
        partial = running[:, -1]
        start += l.size
    else:
        logger.error(f"n=0 series exhausted its budget of {budget} terms at Z={z!r}")
        raise PrecisionError(f"n=0 series did not reach tol={tol} within {budget} terms; "
                             f"use a larger tol or a larger a/R")

    s1, ds1, d2s1, s2, ds2, d2s2 = partial
    q = 1.0 - z * z
    g = 1.0 - q * s2
    dg = 2.0 * z * s2 - q * ds2
    d2g = 2.0 * s2 + 4.0 * z * ds2 - q * d2s2
    phi = s1 + math.log(g)
    dphi = ds1 + dg / g
    d2phi = d2s1 + d2g / g - (dg / g) ** 2
    logger.debug(f"n=0 series at Z={z!r}: {n_terms} terms (budget {budget})")
    return SeriesSums(phi=float(phi), dphi=float(dphi), d2phi=float(d2phi), n_terms=n_terms)


def require_drude_prescription(model):
    """Reject materials whose static TE reflection is nonzero.

    The closed form assumes r_TE = 0, r_TM = 1 at ξ = 0; the plasma model
    reflects TE too and has no exact sphere-plate n=0 term.

    Raises:
        DomainError: For the plasma model
    """
    if model.kind == MaterialKind.plasma:
        raise DomainError("no exact n=0 sphere-plate term for the plasma model; "
                          "use drude, tabulated or lorentz_drude")


def _check(geom, temperature):
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")


def free_energy_n0(geom, temperature, tol=None):
    """Exact Drude n=0 sphere-plate free energy in J (negative)"""
    _check(geom, temperature)
    sums = series_sums(z_parameter(geom.x), tol)
    return 0.5 * KB * temperature * sums.phi


def force_n0(geom, temperature, tol=None):
    """n=0 force −∂𝓕/∂a in N (negative: attractive)"""
    _check(geom, temperature)
    z, z_a, _ = z_derivatives(geom)
    sums = series_sums(z, tol)
    return -0.5 * KB * temperature * sums.dphi * z_a


def gradient_n0(geom, temperature, tol=None):
    """n=0 force gradient ∂F/∂a = −∂²𝓕/∂a² in N/m (positive for attraction)"""
    _check(geom, temperature)
    z, z_a, z_aa = z_derivatives(geom)
    sums = series_sums(z, tol)
    return -0.5 * KB * temperature * (sums.d2phi * z_a * z_a + sums.dphi * z_aa)


def classical_pfa_energy_n0(geom, temperature):
    """PFA of the Drude n=0 channel, −k_B T ζ(3) R/(8a)"""
    _check(geom, temperature)
    return -KB * temperature * ZETA3 / (8.0 * geom.x)
