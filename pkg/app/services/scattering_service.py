"""
Scattering-formula oracle for the n>0 Matsubara modes.

The free energy of the modes n >= 1 is k_B T Σ_n Σ_m ln det(1 − M(n, m)),
where M is the round trip sphere → plate → sphere in the multipole basis
(l, polarization) at fixed azimuthal order m. Entries of the translation
operator U are integrals over the imaginary incidence angle, x = cosh χ:

    U_{l'l} = (π/2) (−1)^{l+l'} Λ_{l'} Λ_l ∫_1^∞ dx e^{−2κLx} 𝒫_{l'} 𝒫_l W/(x² − 1)

with κ = ξ/c, L = R + a, Λ_l² = (2l+1)(l−m)!/((l+m)! l(l+1)) and W a
bilinear form in the plate Fresnel coefficients and g_l = (x²−1)𝒫_l'/𝒫_l
(see documents/multipole-round-trip.md). M = U·diag(T) with the sphere Mie
coefficients T; the code assembles the similar matrix
U_{l'l} √|T_{l'}| √|T_l| sgn(T_l), which keeps every entry in floating range.
"""

import math
import logging
import warnings

import numpy as np
from scipy.linalg import lu_factor
from scipy.special import gammaln

from app.cache import cache_manager
from app.models.geometry_schema import MultipoleTruncation
from app.models.result_schema import ConvergenceReport, OracleResult, RoundTripBlock
from app.services.lifshitz_service import matsubara_grid
from app.services.material_service import eps_at, eps_on_grid
from app.services.zero_mode_service import force_n0, free_energy_n0, gradient_n0, require_drude_prescription
from app.utils.differentiation import richardson_derivative
from app.utils.errors import ConfigError, DomainError, NumericalError
from app.utils.parallel import fixed_order_sum, ordered_map
from app.utils.quadrature import gauss_laguerre_mesh
from app.utils.special_functions import hyperbolic_legendre, mie_log_coefficients
from app.utils.units import C, KB

# Setup logging
logger = logging.getLogger(__name__)

SUPPORTED_ASPECT_RATIO = 20.0
FORCE_STEP = 1e-4
GRADIENT_STEP = 1e-2
# Gauss-Laguerre nodes: l_max + _EXTRA_NODES, at least _MIN_NODES
_EXTRA_NODES = 24
_MIN_NODES = 40


def _node_count(l_max):
    return max(_MIN_NODES, l_max + _EXTRA_NODES)


def mie_coefficients(eps, xi, radius, l):
    """Mie coefficients (TE, TM) of the sphere at imaginary frequency iξ.

    TE is negative and TM positive for a metallic sphere; both vanish as
    ξR/c → 0, scaling as (ξR/c)^{2l+1}.

    Args:
        eps: ε(iξ) of the sphere
        xi: Imaginary frequency in rad/s (> 0)
        radius: Sphere radius in m (> 0)
        l: Multipole order >= 1

    Returns:
        tuple: (TE, TM) as floats

    Raises:
        DomainError: On xi <= 0, radius <= 0 or l < 1
        NumericalError: If the coefficients are not finite
    """
    if not xi > 0:
        raise DomainError(f"imaginary frequency must be positive, got {xi}")
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    if l < 1:
        raise DomainError(f"multipole order must be >= 1, got {l}")
    log_te, sign_te, log_tm, sign_tm = mie_log_coefficients(eps, xi * radius / C, [l])
    return float(sign_te[0] * np.exp(log_te[0])), float(sign_tm[0] * np.exp(log_tm[0]))


def _plate_fresnel_x(eps, x):
    """Plate Fresnel coefficients along the imaginary-angle path, q = κx"""
    root = np.sqrt(eps - 1.0 + x * x)
    r_te = (x - root) / (x + root)
    r_tm = (eps * x - root) / (eps * x + root)
    return r_te, r_tm


def _assemble(eps, xi, radius, gap, m, l_max):
    """Scaled round-trip matrix of one (n, m) block, ordered TE l..., TM l..."""
    kappa = xi / C
    s = 2.0 * kappa * (radius + gap)
    u, w = gauss_laguerre_mesh(_node_count(l_max))
    x = 1.0 + u / s
    l_min = max(1, m)
    ls = np.arange(l_min, l_max + 1)

    log_p, g = hyperbolic_legendre(m, l_max, x)
    log_p, g = log_p[l_min - m:], g[l_min - m:]
    sh2 = x * x - 1.0
    r_te, r_tm = _plate_fresnel_x(eps, x)
    log_te, sign_te, log_tm, sign_tm = mie_log_coefficients(eps, kappa * radius, ls)

    log_norm = 0.5 * (np.log(2 * ls + 1.0) + gammaln(ls - m + 1.0) - gammaln(ls + m + 1.0)
                      - np.log(ls * (ls + 1.0)))
    # dx e^{−sx} = e^{−s} e^{−u} du/s, split evenly between row and column factors
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    base = log_p + log_norm[:, None] + 0.5 * (log_w - np.log(sh2) - s - math.log(s))[None, :]
    with np.errstate(under="ignore"):
        e_te = np.exp(base + 0.5 * log_te[:, None])
        e_tm = np.exp(base + 0.5 * log_tm[:, None])

    gte, gtm = e_te * g, e_tm * g
    mm = (gte * r_te) @ gte.T - m * m * (e_te * r_tm) @ e_te.T
    nn = (gtm * r_tm) @ gtm.T - m * m * (e_tm * r_te) @ e_tm.T
    mn = m * ((gte * r_te) @ e_tm.T - (e_te * r_tm) @ gtm.T)
    nm = m * ((gtm * r_tm) @ e_te.T - (e_tm * r_te) @ gte.T)

    parity = np.where(ls % 2 == 0, 1.0, -1.0)
    outer = 0.5 * math.pi * np.outer(parity, parity)
    matrix = np.block([[outer * mm * sign_te[None, :], outer * mn * sign_tm[None, :]],
                       [outer * nm * sign_te[None, :], outer * nn * sign_tm[None, :]]])
    if not np.all(np.isfinite(matrix)):
        logger.error(f"Non-finite round-trip entries at xi={xi:.4e}, m={m}")
        raise NumericalError(f"round-trip block (m={m}) has non-finite entries")
    return matrix


def _check_truncation(geom, truncation, allow_undersized):
    floor = math.ceil(geom.aspect_ratio)
    if truncation.l_max < floor and not allow_undersized:
        raise ConfigError(f"l_max = {truncation.l_max} is below the geometric floor ceil(R/a) = {floor}; "
                          f"use l_max >= {math.ceil(6 * geom.aspect_ratio)} (6R/a) for 1e-4 accuracy")
    if geom.aspect_ratio > SUPPORTED_ASPECT_RATIO:
        message = (f"R/a = {geom.aspect_ratio:.1f} exceeds the supported range R/a <= {SUPPORTED_ASPECT_RATIO:g}; "
                   f"results are not validated")
        logger.warning(message)
        warnings.warn(message, RuntimeWarning, stacklevel=3)


def round_trip_block(model, geom, temperature, n, m, truncation):
    """Round-trip matrix of Matsubara mode n and azimuthal order m.

    Blocks for −m equal those for +m, so m is taken by absolute value.

    Raises:
        DomainError: If n or |m| lies outside the truncation
    """
    m = abs(m)
    if not 1 <= n <= truncation.n_max:
        raise DomainError(f"Matsubara index {n} outside 1..{truncation.n_max}")
    if m > truncation.m_max:
        raise DomainError(f"|m| = {m} exceeds m_max = {truncation.m_max}")
    xi = n * matsubara_grid(temperature, n_max=truncation.n_max).xi1
    matrix = _assemble(float(eps_at(model, xi)), xi, geom.radius, geom.gap, m, truncation.l_max)
    return RoundTripBlock(n=n, m=m, l_min=max(1, m), l_max=truncation.l_max, matrix=matrix)


def log_det_one_minus(matrix):
    """ln det(1 − M) through a pivoted LU factorization.

    Raises:
        NumericalError: If det(1 − M) is not positive
    """
    if matrix.size == 0:
        return 0.0
    lu, piv = lu_factor(np.eye(matrix.shape[0]) - matrix, check_finite=False)
    diag = np.diag(lu)
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    sign = (-1.0) ** swaps * np.prod(np.sign(diag))
    if sign <= 0:
        logger.error("det(1 - M) is not positive")
        raise NumericalError("det(1 - M) is not positive; the round-trip block is not contracting "
                             "(truncation or assembly problem)")
    return float(np.sum(np.log(np.abs(diag))))


def free_energy_npos_scattering(model, geom, temperature, truncation=None, allow_undersized=False,
                                threads=None, use_cache=True):
    """Free energy of the n >= 1 modes from the scattering formula, in J.

    k_B T Σ_{n=1}^{n_max} [ln det(1 − M_{n,0}) + 2 Σ_{m=1}^{m_max} ln det(1 − M_{n,m})]

    Args:
        truncation: MultipoleTruncation; defaults to 6R/a, 6√(R/a), 10λ_T/a
        allow_undersized: Accept l_max below ceil(R/a) (for diagnostics)
        threads: Worker threads for the (n, m) blocks
        use_cache: Read and write the Redis result cache

    Raises:
        ConfigError: If l_max is below ceil(R/a) and allow_undersized is False
        NumericalError: If a block has det(1 − M) <= 0
    """
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")
    truncation = truncation or MultipoleTruncation.for_geometry(geom, temperature)
    _check_truncation(geom, truncation, allow_undersized)
    return _npos_energy(model, geom, temperature, truncation, threads, use_cache)


def _npos_energy(model, geom, temperature, truncation, threads, use_cache):
    key = cache_manager.oracle_key(model, geom, temperature, truncation, _EXTRA_NODES) if use_cache else None
    if key is not None:
        cached = cache_manager.get_energy(key)
        if cached is not None:
            return cached

    grid = matsubara_grid(temperature, n_max=truncation.n_max)
    frequencies = grid.frequencies
    eps_values = eps_on_grid(model, frequencies)
    m_top = min(truncation.m_max, truncation.l_max)
    items = [(n, m) for n in range(truncation.n_max) for m in range(m_top + 1)]

    def block_term(item):
        n, m = item
        matrix = _assemble(float(eps_values[n]), float(frequencies[n]), geom.radius, geom.gap, m,
                           truncation.l_max)
        weight = 1.0 if m == 0 else 2.0
        return weight * log_det_one_minus(matrix)

    try:
        terms = ordered_map(block_term, items, threads=threads)
    except Exception as e:
        logger.error(f"Scattering free energy failed at R={geom.radius!r}, a={geom.gap!r}: {e}")
        raise

    energy = KB * temperature * fixed_order_sum(terms)
    logger.info(f"Oracle energy at R/a={geom.aspect_ratio:.3g}: {energy:.10e} J "
                f"(l_max={truncation.l_max}, m_max={m_top}, n_max={truncation.n_max}, {len(items)} blocks)")
    if key is not None:
        cache_manager.set_energy(key, energy)
    return energy


def _energy_of_gap(model, geom, temperature, truncation, threads, use_cache):
    def energy(gap):
        return _npos_energy(model, geom.with_gap(gap), temperature, truncation, threads, use_cache)
    return energy


def force_scattering(model, geom, temperature, truncation=None, step=FORCE_STEP, threads=None, use_cache=True):
    """Oracle force: −∂/∂a of the n>0 scattering energy plus the exact n=0 force.

    The truncation is fixed at the central gap for every finite-difference
    point; the derivative uses central differences with steps a·step and
    a·step/2 and one Richardson extrapolation.

    Returns:
        OracleResult: total force in N with its breakdown
    """
    require_drude_prescription(model)
    truncation = truncation or MultipoleTruncation.for_geometry(geom, temperature)
    _check_truncation(geom, truncation, allow_undersized=False)
    derivative, error = richardson_derivative(
        _energy_of_gap(model, geom, temperature, truncation, threads, use_cache),
        geom.gap, geom.gap * step, order=1)
    n_pos = -derivative
    n0 = force_n0(geom, temperature)
    return OracleResult(quantity="force", total=n0 + n_pos, n0_exact=n0, n_pos=n_pos, derivative_error=error,
                        geometry=geom, temperature=temperature, material=model.label, truncation=truncation)


def gradient_scattering(model, geom, temperature, truncation=None, step=GRADIENT_STEP, threads=None,
                        use_cache=True):
    """Oracle force gradient: −∂²/∂a² of the n>0 scattering energy plus the exact n=0 gradient"""
    require_drude_prescription(model)
    truncation = truncation or MultipoleTruncation.for_geometry(geom, temperature)
    _check_truncation(geom, truncation, allow_undersized=False)
    derivative, error = richardson_derivative(
        _energy_of_gap(model, geom, temperature, truncation, threads, use_cache),
        geom.gap, geom.gap * step, order=2)
    n_pos = -derivative
    n0 = gradient_n0(geom, temperature)
    return OracleResult(quantity="gradient", total=n0 + n_pos, n0_exact=n0, n_pos=n_pos, derivative_error=error,
                        geometry=geom, temperature=temperature, material=model.label, truncation=truncation)


def convergence_scan(model, geom, temperature, schedule, target_delta=1e-4, quantity="energy",
                     m_max=None, n_max=None, threads=None, use_cache=True):
    """Oracle values along an ascending l_max schedule.

    m_max and n_max stay at their geometric defaults (or the given overrides),
    with m_max clipped to each l_max.

    Args:
        schedule: Strictly ascending l_max values
        target_delta: Relative change regarded as converged
        quantity: "energy" (oracle free energy, exact n=0 plus the n>0 scattering
            energy), "npos_energy" (n>0 modes only) or "force" (total oracle force)

    Returns:
        ConvergenceReport
    """
    schedule = [int(l) for l in schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError(f"l_max schedule must be non-empty and strictly ascending, got {schedule}")
    if quantity not in ("energy", "npos_energy", "force"):
        raise ConfigError(f"convergence quantity must be 'energy', 'npos_energy' or 'force', got {quantity!r}")
    if quantity != "npos_energy":
        require_drude_prescription(model)
    base = MultipoleTruncation.for_geometry(geom, temperature, l_max=max(schedule), m_max=m_max, n_max=n_max)
    n0_energy = free_energy_n0(geom, temperature) if quantity == "energy" else 0.0

    values, deltas = [], []
    converged = None
    for l_max in schedule:
        truncation = MultipoleTruncation(l_max=l_max, m_max=min(base.m_max, l_max), n_max=base.n_max)
        if quantity == "force":
            value = force_scattering(model, geom, temperature, truncation, threads=threads,
                                     use_cache=use_cache).total
        else:
            value = free_energy_npos_scattering(model, geom, temperature, truncation, threads=threads,
                                                use_cache=use_cache)
            if quantity == "energy":
                value += n0_energy
        delta = abs(value - values[-1]) / abs(value) if values else None
        if converged is None and delta is not None and delta < target_delta:
            converged = l_max
        values.append(value)
        deltas.append(delta)
        logger.info(f"Convergence scan l_max={l_max}: {value:.10e} (delta {delta})")

    return ConvergenceReport(quantity=quantity, l_max_values=schedule, values=values, deltas=deltas,
                             target_delta=target_delta, converged_l_max=converged, geometry=geom,
                             temperature=temperature, material=model.label)
