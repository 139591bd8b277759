"""
Associated Legendre functions of argument x = cosh χ >= 1 and sphere Mie
coefficients at imaginary frequency, both kept in log/scaled form so that
large multipole orders neither overflow nor underflow.
"""

import math
import logging

import numpy as np
from scipy.special import gammaln, ive, kve

from app.utils.errors import NumericalError

# Setup logging
logger = logging.getLogger(__name__)


def hyperbolic_legendre(m, l_max, x):
    """log 𝒫_l^m(x) and g_l = (x² − 1) 𝒫_l^m'(x)/𝒫_l^m(x) for l = m..l_max.

    𝒫_l^m(x) = (x² − 1)^{m/2} d^m P_l(x)/dx^m without the Condon-Shortley
    phase; it is positive for x > 1. The upward recurrence in l is stable for
    x > 1; the functions are renormalised to 1 after every step and the scale
    is carried in log form.

    Args:
        m: Azimuthal order >= 0
        l_max: Highest degree, >= m
        x: Nodes, all > 1

    Returns:
        tuple: (log_p, g), each of shape (l_max - m + 1, len(x))
    """
    x = np.asarray(x, dtype=float)
    sh2 = x * x - 1.0
    n_l = l_max - m + 1
    log_p = np.empty((n_l, x.size))
    g = np.empty((n_l, x.size))

    # 𝒫_m^m = (2m−1)!! sh^m
    scale = gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1) + 0.5 * m * np.log(sh2)
    p_prev = np.zeros_like(x)
    d_prev = np.zeros_like(x)
    p_cur = np.ones_like(x)
    d_cur = m * x / sh2

    for l in range(m, l_max + 1):
        log_p[l - m] = scale
        g[l - m] = sh2 * d_cur
        if l == l_max:
            break
        k = l - m + 1
        p_next = ((2 * l + 1) * x * p_cur - (l + m) * p_prev) / k
        d_next = ((2 * l + 1) * (p_cur + x * d_cur) - (l + m) * d_prev) / k
        scale = scale + np.log(p_next)
        p_prev, d_prev = p_cur / p_next, d_cur / p_next
        p_cur, d_cur = np.ones_like(x), d_next / p_next

    return log_p, g


def _log_i(order, z):
    """log of the modified spherical Bessel function i_l(z) = √(π/2z) I_{l+½}(z)"""
    with np.errstate(divide="ignore"):
        scaled = ive(order + 0.5, z)
        value = np.log(scaled) + z + 0.5 * np.log(0.5 * math.pi / z)
    small = ~np.isfinite(value)
    if np.any(small):
        # i_l(z) ≈ z^l/(2l+1)!! where the scaled function underflows
        o = np.broadcast_to(order, value.shape)[small]
        zz = np.broadcast_to(z, value.shape)[small]
        value[small] = o * np.log(zz) - (gammaln(2 * o + 2) - o * math.log(2.0) - gammaln(o + 1))
    return value


def _log_k(order, z):
    """log of k_l(z) = √(π/2z) K_{l+½}(z) (scipy's spherical_kn convention)"""
    with np.errstate(over="ignore"):
        scaled = kve(order + 0.5, z)
        value = np.log(scaled) - z + 0.5 * np.log(0.5 * math.pi / z)
    big = ~np.isfinite(value)
    if np.any(big):
        # k_l(z) ≈ (π/2)(2l−1)!!/z^{l+1} where the scaled function overflows
        o = np.broadcast_to(order, value.shape)[big]
        zz = np.broadcast_to(z, value.shape)[big]
        value[big] = (math.log(0.5 * math.pi) + gammaln(2 * o + 1) - o * math.log(2.0) - gammaln(o + 1)
                      - (o + 1) * np.log(zz))
    return value


def _ratio_i(order, z):
    """i_{l+1}(z)/i_l(z)"""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = ive(order + 1.5, z) / ive(order + 0.5, z)
    bad = ~np.isfinite(ratio)
    if np.any(bad):
        ratio = np.where(bad, z / (2.0 * order + 3.0), ratio)
    return ratio


def _ratio_k(order, z):
    """k_{l+1}(z)/k_l(z)"""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = kve(order + 1.5, z) / kve(order + 0.5, z)
    bad = ~np.isfinite(ratio)
    if np.any(bad):
        ratio = np.where(bad, (2.0 * order + 1.0) / z, ratio)
    return ratio


def log_derivative_i(order, z):
    """(z i_l(z))'/(z i_l(z))"""
    return (order + 1.0) / z + _ratio_i(order, z)


def log_derivative_k(order, z):
    """(z k_l(z))'/(z k_l(z))"""
    return (order + 1.0) / z - _ratio_k(order, z)


def mie_log_coefficients(eps, y, ls):
    """Imaginary-frequency Mie coefficients of a homogeneous sphere in log form.

    With n = √ε, y = ξR/c, D_I and D_K the log derivatives of z i_l(z) and
    z k_l(z):

        T_TE = −(i_l(y)/k_l(y)) [D_I(y) − n D_I(ny)] / [D_K(y) − n D_I(ny)]
        T_TM = −(i_l(y)/k_l(y)) [n D_I(y) − D_I(ny)] / [n D_K(y) − D_I(ny)]

    Args:
        eps: ε(iξ) >= 1
        y: Size parameter ξR/c > 0
        ls: Multipole orders >= 1

    Returns:
        tuple: (log|T_TE|, sign T_TE, log|T_TM|, sign T_TM) as arrays over ls

    Raises:
        NumericalError: If a coefficient is not finite
    """
    ls = np.asarray(ls, dtype=float)
    n = math.sqrt(eps)
    y_arr = np.full(ls.shape, float(y))
    log_ratio = _log_i(ls, y_arr) - _log_k(ls, y_arr)
    di_out = log_derivative_i(ls, y_arr)
    dk_out = log_derivative_k(ls, y_arr)
    di_in = log_derivative_i(ls, n * y_arr)

    te = -(di_out - n * di_in) / (dk_out - n * di_in)
    tm = -(n * di_out - di_in) / (n * dk_out - di_in)
    if not (np.all(np.isfinite(te)) and np.all(np.isfinite(tm))):
        logger.error(f"Non-finite Mie coefficients at eps={eps!r}, y={y!r}")
        raise NumericalError(f"Mie coefficients are not finite at eps={eps!r}, y={y!r}")

    with np.errstate(divide="ignore"):
        log_te = log_ratio + np.log(np.abs(te))
        log_tm = log_ratio + np.log(np.abs(tm))
    return log_te, np.sign(te), log_tm, np.sign(tm)
