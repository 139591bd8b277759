"""
Parallel-plate Lifshitz theory per Matsubara mode.

Sign convention used throughout the package: free energies are negative, and
pp_pressure_mode / pp_pressure return the positive magnitude of the attractive
pressure, +∂𝓕/∂a. Sphere-plate forces elsewhere are signed, F = −∂𝓕/∂a < 0.

The k⊥ integrals are taken in u = 2qa, q = √(ξ²/c² + k⊥²), over
[2ξa/c, ∞) with composite Gauss-Legendre panels whose widths double away from
the lower limit.
"""

import math
import logging
from functools import partial

import numpy as np
from scipy.special import spence

from app.models.geometry_schema import MatsubaraGrid, Polarization
from app.models.material_schema import MaterialKind
from app.services.material_service import eps_at, eps_on_grid
from app.utils.errors import DomainError, NumericalError
from app.utils.parallel import fixed_order_sum, ordered_map
from app.utils.quadrature import composite_gauss_legendre
from app.utils.settings import QUAD_RTOL
from app.utils.units import C, HBAR, KB, ZETA3, matsubara_xi1

# Setup logging
logger = logging.getLogger(__name__)

_NODES = 16
_MAX_REFINEMENTS = 5
# Li₂ series terms; 2⁻⁶⁰ is below double precision
_DILOG_TERMS = 60

# Panel edges relative to the lower limit: [0, 1/64, 1/32, ..., 64]
_BASE_EDGES = np.concatenate(([0.0], 2.0 ** np.arange(-6, 7)))


def _check_gap(a):
    if not a > 0:
        raise DomainError(f"separation must be positive, got {a}")


def _check_temperature(temperature):
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")


def thermal_length(temperature):
    """Thermal length λ_T = ħc/(2π k_B T) in m.

    Raises:
        DomainError: If T <= 0
    """
    _check_temperature(temperature)
    return HBAR * C / (2.0 * math.pi * KB * temperature)


def default_n_max(a, temperature):
    """Matsubara truncation ceil(10 λ_T/a)"""
    return math.ceil(10.0 * thermal_length(temperature) / a)


def matsubara_grid(temperature, n_max=None, a=None):
    """Matsubara grid with an explicit n_max or the ceil(10 λ_T/a) default for gap a"""
    _check_temperature(temperature)
    if n_max is None:
        if a is None:
            raise DomainError("either n_max or the smallest separation a is required")
        _check_gap(a)
        n_max = default_n_max(a, temperature)
    return MatsubaraGrid(temperature=temperature, n_max=n_max)


def fresnel(eps, xi, kperp):
    """Plate Fresnel coefficients at imaginary frequency.

    Args:
        eps: ε(iξ) >= 1
        xi: Imaginary frequency (rad/s, > 0)
        kperp: Transverse wavevector (1/m, >= 0), scalar or array

    Returns:
        tuple: (r_TE, r_TM) with r_TE in (-1, 0] and r_TM in [0, 1)
    """
    if eps < 1:
        raise DomainError(f"permittivity at imaginary frequency must be >= 1, got {eps}")
    if not xi > 0:
        raise DomainError(f"imaginary frequency must be positive, got {xi}")
    kperp = np.asarray(kperp, dtype=float)
    if np.any(kperp < 0):
        raise DomainError("transverse wavevector must be >= 0")
    q = np.sqrt((xi / C) ** 2 + kperp ** 2)
    r_te, r_tm = _fresnel_q(eps, xi, q)
    if np.ndim(r_te) == 0:
        return float(r_te), float(r_tm)
    return r_te, r_tm


def _fresnel_q(eps, xi, q):
    # q'² − q² = (ε−1)ξ²/c², written without cancellation
    shift = (eps - 1.0) * (xi / C) ** 2
    qp = np.sqrt(q * q + shift)
    r_te = -shift / (q + qp) ** 2
    r_tm = (eps * q - qp) / (eps * q + qp)
    return r_te, r_tm


def _reflection_squares(eps, xi, a, u):
    q = u / (2.0 * a)
    r_te, r_tm = _fresnel_q(eps, xi, q)
    return r_te * r_te, r_tm * r_tm


def _dilog(x):
    """Li₂(x) for 0 <= x <= 1.

    The power series is used below 1/2, where spence(1 − x) would lose the
    low digits of x.
    """
    x = np.asarray(x, dtype=float)
    small = np.minimum(x, 0.5)
    series = np.zeros_like(small)
    for k in range(_DILOG_TERMS, 0, -1):
        series = small * (1.0 / (k * k) + series)
    return np.where(x < 0.5, series, spence(1.0 - x))


def _integrand(quantity, r2_pair, u):
    decay = np.exp(-u)
    total = np.zeros_like(u)
    for r2 in r2_pair:
        x = r2 * decay
        if quantity == "energy":
            total += u * np.log1p(-x)
        elif quantity == "pressure":
            total += u * u * x / (1.0 - x)
        else:
            # ∫_a^∞ ln(1 − r² e^{−2qa'}) da' = −Li₂(r² e^{−2qa})/(2q)
            total -= _dilog(x)
    return total


def _tail_bound(quantity, upper):
    # bound on the two-polarization integrand beyond the last panel, with |r| <= 1
    lead = {"energy": upper + 1.0, "pressure": upper * upper + 2.0 * upper + 2.0, "pfa_energy": 2.0}[quantity]
    return 2.0 * lead * math.exp(-upper) / (-math.expm1(-upper))


def _u_integral(quantity, r2_func, u0, rtol):
    """Integral over u >= u0 of the chosen integrand, refined by panel doubling"""
    edges = u0 + _BASE_EDGES
    previous = None
    for level in range(_MAX_REFINEMENTS + 1):
        u, w = composite_gauss_legendre(edges, _NODES)
        value = float(np.dot(w, _integrand(quantity, r2_func(u), u)))
        if previous is not None:
            change = abs(value - previous)
            if change <= rtol * abs(value) or value == 0.0:
                return value, change + _tail_bound(quantity, edges[-1])
        previous = value
        # halve every panel
        edges = np.sort(np.concatenate((edges, 0.5 * (edges[:-1] + edges[1:]))))
    logger.error(f"Plate quadrature for {quantity} did not converge at u0={u0!r}")
    raise NumericalError(f"plate {quantity} quadrature did not converge", estimate=value, error_bound=change)


def _mode_quantity(quantity, eps, xi, a, temperature, rtol):
    u0 = 2.0 * xi * a / C
    integral, error = _u_integral(quantity, partial(_reflection_squares, eps, xi, a), u0, rtol)
    kt = KB * temperature
    # k⊥ dk⊥ = u du/(4a²); (k_B T/2π)·1/(4a²) for the energy, extra 1/a for the pressure
    if quantity == "energy":
        scale = kt / (8.0 * math.pi * a * a)
    elif quantity == "pressure":
        scale = kt / (8.0 * math.pi * a ** 3)
    else:
        scale = kt / (8.0 * math.pi * a)
    logger.debug(f"{quantity} mode at xi={xi:.4e}, a={a:.4e}: integral {integral:.6e} +/- {error:.1e}")
    return scale * integral


def _mode_xi(model, a, temperature, n):
    _check_gap(a)
    _check_temperature(temperature)
    if n < 1:
        raise DomainError(f"Matsubara index must be >= 1, got {n}")
    xi = n * matsubara_xi1(temperature)
    return xi, float(eps_at(model, xi))


def pp_free_energy_mode(model, a, temperature, n, rtol=None):
    """Unit-area free energy of Matsubara mode n >= 1 between two plates.

    (k_B T/2π) ∫₀^∞ k⊥ dk⊥ Σ_α ln(1 − r_α² e^{−2qa}), in J/m²; negative.

    Raises:
        DomainError: On a <= 0, T <= 0 or n < 1
        NumericalError: If the quadrature does not converge
    """
    xi, eps = _mode_xi(model, a, temperature, n)
    return _mode_quantity("energy", eps, xi, a, temperature, QUAD_RTOL if rtol is None else rtol)


def pp_pressure_mode(model, a, temperature, n, rtol=None):
    """Attractive pressure magnitude of Matsubara mode n >= 1, +∂𝓕_n/∂a in Pa.

    (k_B T/π) ∫₀^∞ k⊥ q dk⊥ Σ_α r_α² e^{−2qa}/(1 − r_α² e^{−2qa}); positive.
    """
    xi, eps = _mode_xi(model, a, temperature, n)
    return _mode_quantity("pressure", eps, xi, a, temperature, QUAD_RTOL if rtol is None else rtol)


def pp_pfa_energy_mode(model, a, temperature, n, rtol=None):
    """∫_a^∞ 𝓕_n(a') da' for mode n >= 1, in J/m (the PFA sphere energy over 2πR)"""
    xi, eps = _mode_xi(model, a, temperature, n)
    return _mode_quantity("pfa_energy", eps, xi, a, temperature, QUAD_RTOL if rtol is None else rtol)


def pp_zero_mode_drude(a, temperature):
    """Half-weighted n=0 plate energy with r_TE = 0, r_TM = 1: −k_B T ζ(3)/(16π a²)"""
    _check_gap(a)
    _check_temperature(temperature)
    return -KB * temperature * ZETA3 / (16.0 * math.pi * a * a)


def pp_zero_mode_drude_pressure(a, temperature):
    """Attractive pressure magnitude of the Drude n=0 plate term, k_B T ζ(3)/(8π a³)"""
    _check_gap(a)
    _check_temperature(temperature)
    return KB * temperature * ZETA3 / (8.0 * math.pi * a ** 3)


def reflection_at_zero(model, kperp):
    """Static (ξ → 0) reflection coefficients (r_TE, r_TM).

    Dissipative models reflect only TM at zero frequency; the plasma model
    also reflects TE, r_TE = (k − √(k² + ωp²/c²))/(k + √(k² + ωp²/c²)).
    """
    kperp = np.asarray(kperp, dtype=float)
    if model.kind != MaterialKind.plasma:
        return np.zeros_like(kperp), np.ones_like(kperp)
    kp = model.plasma_frequency / C
    root = np.sqrt(kperp * kperp + kp * kp)
    return -kp * kp / (kperp + root) ** 2, np.ones_like(kperp)


def channel_reflection(model, temperature, channel):
    """Plate reflection coefficient of one PlateChannel (n, polarization, k⊥).

    n = 0 uses the static limits of reflection_at_zero.
    """
    if channel.n == 0:
        r_te, r_tm = reflection_at_zero(model, channel.kperp)
    else:
        xi = channel.n * matsubara_xi1(temperature)
        r_te, r_tm = fresnel(float(eps_at(model, xi)), xi, channel.kperp)
    r = r_te if channel.polarization == Polarization.TE else r_tm
    return float(r)


def _zero_mode_plasma(quantity, model, a, temperature, rtol):
    def r2(u):
        r_te, r_tm = reflection_at_zero(model, u / (2.0 * a))
        return r_te * r_te, r_tm * r_tm

    integral, error = _u_integral(quantity, r2, 0.0, rtol)
    kt = KB * temperature
    # ½ weight of the n=0 term
    if quantity == "energy":
        return 0.5 * kt / (8.0 * math.pi * a * a) * integral
    if quantity == "pressure":
        return 0.5 * kt / (8.0 * math.pi * a ** 3) * integral
    return 0.5 * kt / (8.0 * math.pi * a) * integral


def pp_zero_mode(model, a, temperature, rtol=None):
    """Half-weighted n=0 plate free energy per unit area for any model"""
    if model.kind != MaterialKind.plasma:
        return pp_zero_mode_drude(a, temperature)
    _check_gap(a)
    _check_temperature(temperature)
    return _zero_mode_plasma("energy", model, a, temperature, QUAD_RTOL if rtol is None else rtol)


def pp_zero_mode_pressure(model, a, temperature, rtol=None):
    """Attractive pressure magnitude of the half-weighted n=0 plate term"""
    if model.kind != MaterialKind.plasma:
        return pp_zero_mode_drude_pressure(a, temperature)
    _check_gap(a)
    _check_temperature(temperature)
    return _zero_mode_plasma("pressure", model, a, temperature, QUAD_RTOL if rtol is None else rtol)


def pp_zero_mode_pfa_energy(model, a, temperature, rtol=None):
    """∫_a^∞ of the half-weighted n=0 plate energy"""
    if model.kind != MaterialKind.plasma:
        return -KB * temperature * ZETA3 / (16.0 * math.pi * a)
    _check_gap(a)
    _check_temperature(temperature)
    return _zero_mode_plasma("pfa_energy", model, a, temperature, QUAD_RTOL if rtol is None else rtol)


def mode_series(model, a, temperature, grid=None, quantity="energy", threads=None, rtol=None):
    """Per-mode values for n = 1..n_max, in mode order.

    Args:
        quantity: "energy" (J/m²), "pressure" (Pa) or "pfa_energy" (J/m)
        grid: MatsubaraGrid; defaults to the ceil(10 λ_T/a) truncation

    Returns:
        list: One float per Matsubara mode
    """
    _check_gap(a)
    _check_temperature(temperature)
    if quantity not in ("energy", "pressure", "pfa_energy"):
        raise ValueError(f"unknown quantity {quantity!r}")
    grid = grid or matsubara_grid(temperature, a=a)
    rtol = QUAD_RTOL if rtol is None else rtol
    frequencies = grid.frequencies
    eps_values = eps_on_grid(model, frequencies)

    def one_mode(index):
        return _mode_quantity(quantity, float(eps_values[index]), float(frequencies[index]), a, temperature, rtol)

    try:
        values = ordered_map(one_mode, range(grid.n_max), threads=threads)
    except Exception as e:
        logger.error(f"Matsubara sum of {quantity} failed at a={a!r}: {e}")
        raise
    logger.debug(f"{quantity}: {grid.n_max} modes at a={a!r}, first {values[0]:.3e}, last {values[-1]:.3e}")
    return values


def pp_free_energy(model, a, temperature, grid=None, threads=None):
    """Total plate free energy per unit area Σ' over n >= 0, in J/m²"""
    modes = mode_series(model, a, temperature, grid, "energy", threads)
    return fixed_order_sum([pp_zero_mode(model, a, temperature)] + modes)


def pp_pressure(model, a, temperature, grid=None, threads=None):
    """Total attractive plate pressure magnitude Σ' over n >= 0, in Pa"""
    modes = mode_series(model, a, temperature, grid, "pressure", threads)
    return fixed_order_sum([pp_zero_mode_pressure(model, a, temperature)] + modes)


def ideal_pp_pressure(a):
    """Zero-temperature perfect-mirror pressure π²ħc/(240a⁴)"""
    _check_gap(a)
    return math.pi ** 2 * HBAR * C / (240.0 * a ** 4)


def ideal_pp_free_energy(a):
    """Zero-temperature perfect-mirror energy per unit area −π²ħc/(720a³)"""
    _check_gap(a)
    return -math.pi ** 2 * HBAR * C / (720.0 * a ** 3)
