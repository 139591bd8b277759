"""
Permittivity at imaginary frequency: analytic Drude, plasma and Lorentz-Drude
models, and tabulated optical data through the dispersion integral.
"""

import io
import os
import math
import logging

import numpy as np

from app.models.material_schema import (
    DrudeParameters,
    LorentzOscillator,
    MaterialKind,
    MaterialModel,
    OpticalDataTable,
)
from app.utils.errors import DataValidationError, DomainError, NumericalError
from app.utils.quadrature import composite_gauss_legendre
from app.utils.settings import QUAD_RTOL
from app.utils.units import ev_to_rad_s, rad_s_to_ev

# Setup logging
logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
AU_SAMPLE_PATH = os.path.join(DATA_DIR, "au_optical_sample.txt")

# Au Drude defaults (eV)
AU_PLASMA_EV = 9.0
AU_GAMMA_EV = 0.035

# Interband oscillators of the Lorentz-Drude Au fit: (f_j, Γ_j eV, ω_j eV), weights f_j·(9.03 eV)²
AU_INTERBAND = (
    (0.024, 0.241, 0.415),
    (0.010, 0.345, 0.830),
    (0.071, 0.870, 2.969),
    (0.601, 2.494, 4.304),
    (4.384, 2.214, 13.32),
)
AU_INTERBAND_PLASMA_EV = 9.03

# Gauss-Legendre nodes per sub-panel of the dispersion integral
_DISPERSION_NODES = 8
_MAX_SUBDIVISION = 256


def _check_xi(xi):
    xi = np.asarray(xi, dtype=float)
    if not np.all(xi > 0):
        raise DomainError(f"imaginary frequency must be positive, got {xi}")
    return xi


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


def eps_drude(xi, wp, gamma):
    """Drude permittivity ε(iξ) = 1 + ωp²/(ξ(ξ+γ)).

    Args:
        xi: Imaginary frequency in rad/s (scalar or array, > 0)
        wp: Plasma frequency in rad/s (> 0)
        gamma: Relaxation rate in rad/s (>= 0)

    Returns:
        float or ndarray: ε(iξ)

    Raises:
        DomainError: On xi <= 0, wp <= 0 or gamma < 0
    """
    xi = _check_xi(xi)
    if not wp > 0:
        raise DomainError(f"plasma frequency must be positive, got {wp}")
    if gamma < 0:
        raise DomainError(f"relaxation rate must be >= 0, got {gamma}")
    return _scalar(1.0 + wp * wp / (xi * (xi + gamma)))


def eps_plasma(xi, wp):
    """Dissipationless plasma permittivity ε(iξ) = 1 + ωp²/ξ²"""
    xi = _check_xi(xi)
    if not wp > 0:
        raise DomainError(f"plasma frequency must be positive, got {wp}")
    return _scalar(1.0 + wp * wp / (xi * xi))


def eps_lorentz_drude(xi, wp, gamma, oscillators):
    """Drude term plus Lorentz interband oscillators at imaginary frequency.

    ε(iξ) = 1 + ωp²/(ξ(ξ+γ)) + Σ_j Ω_j²/(ω_j² + ξ² + ξΓ_j)
    """
    xi = _check_xi(xi)
    value = np.asarray(eps_drude(xi, wp, gamma), dtype=float)
    for osc in oscillators:
        value = value + osc.strength ** 2 / (osc.resonance ** 2 + xi * xi + xi * osc.damping)
    return _scalar(value)


def au_oscillators():
    """Interband oscillators of the Au Lorentz-Drude fit in rad/s"""
    weight = ev_to_rad_s(AU_INTERBAND_PLASMA_EV)
    return tuple(
        LorentzOscillator(strength=math.sqrt(f) * weight, resonance=ev_to_rad_s(w0), damping=ev_to_rad_s(g))
        for f, g, w0 in AU_INTERBAND
    )


def drude_model(plasma_ev=AU_PLASMA_EV, gamma_ev=AU_GAMMA_EV, name="Au"):
    return MaterialModel(kind=MaterialKind.drude, plasma_frequency=ev_to_rad_s(plasma_ev),
                         relaxation_rate=ev_to_rad_s(gamma_ev), name=name)


def plasma_model(plasma_ev=AU_PLASMA_EV, name="Au"):
    return MaterialModel(kind=MaterialKind.plasma, plasma_frequency=ev_to_rad_s(plasma_ev), name=name)


def lorentz_drude_model(plasma_ev=AU_PLASMA_EV, gamma_ev=AU_GAMMA_EV, oscillators=None, name="Au"):
    return MaterialModel(kind=MaterialKind.lorentz_drude, plasma_frequency=ev_to_rad_s(plasma_ev),
                         relaxation_rate=ev_to_rad_s(gamma_ev),
                         oscillators=au_oscillators() if oscillators is None else tuple(oscillators), name=name)


def tabulated_model(path=None, plasma_ev=AU_PLASMA_EV, gamma_ev=AU_GAMMA_EV, name="Au"):
    """Material backed by an optical data file (the shipped Au sample by default)"""
    path = path or AU_SAMPLE_PATH
    extrapolation = DrudeParameters(plasma_frequency=ev_to_rad_s(plasma_ev), relaxation_rate=ev_to_rad_s(gamma_ev))
    with open(path, "rb") as handle:
        table = load_optical_data(handle, extrapolation)
    return MaterialModel(kind=MaterialKind.tabulated, plasma_frequency=extrapolation.plasma_frequency,
                         relaxation_rate=extrapolation.relaxation_rate, data=table, name=name)


def _read_text(source):
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    if hasattr(source, "read"):
        content = source.read()
        return content.decode("utf-8") if isinstance(content, bytes) else content
    raise TypeError(f"cannot read optical data from {type(source).__name__}")


def load_optical_data(source, extrapolation, source_label=None):
    """Parse an optical data file into a validated table.

    Data lines hold "ω_eV ε''" separated by whitespace; lines starting with
    '#' are comments and are kept as provenance notes.

    Args:
        source: bytes, text, or a binary/text stream
        extrapolation: DrudeParameters for frequencies below the first row
        source_label: Optional provenance prefix (e.g. the file name)

    Returns:
        OpticalDataTable: Rows converted to rad/s

    Raises:
        DataValidationError: On malformed lines, non-increasing frequencies,
            negative ε'' or fewer than 2 rows; the message names the line
    """
    try:
        text = _read_text(source)
    except UnicodeDecodeError as e:
        raise DataValidationError(f"optical data is not UTF-8: {e}")

    notes = [source_label] if source_label else []
    rows = []
    previous = 0.0
    for line_no, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            notes.append(stripped.lstrip("#").strip())
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise DataValidationError(f"expected 2 columns, got {len(fields)}", row=line_no)
        try:
            omega_ev, eps2 = float(fields[0]), float(fields[1])
        except ValueError:
            raise DataValidationError(f"non-numeric value in {stripped!r}", row=line_no)
        if not (math.isfinite(omega_ev) and math.isfinite(eps2)):
            raise DataValidationError("non-finite value", row=line_no)
        if not omega_ev > 0:
            raise DataValidationError(f"frequency must be positive, got {omega_ev}", row=line_no)
        if not omega_ev > previous:
            raise DataValidationError(f"frequency {omega_ev} eV is not above the previous row", row=line_no)
        if eps2 < 0:
            raise DataValidationError(f"negative eps'' {eps2}", row=line_no)
        rows.append((ev_to_rad_s(omega_ev), eps2))
        previous = omega_ev

    if len(rows) < 2:
        raise DataValidationError(f"need at least 2 data rows, got {len(rows)}")

    logger.info(f"Loaded {len(rows)} optical data rows spanning "
                f"{rad_s_to_ev(rows[0][0]):.3g}-{rad_s_to_ev(rows[-1][0]):.3g} eV")
    return OpticalDataTable(rows=tuple(rows), low_freq_extrapolation=extrapolation, source="\n".join(notes))


def dump_optical_data(table):
    """Serialize a table back into the optical data file format"""
    lines = [f"# {note}" for note in table.source.splitlines() if note]
    lines += [f"{rad_s_to_ev(omega)!r}  {eps2!r}" for omega, eps2 in table.rows]
    return "\n".join(lines) + "\n"


def _drude_tail(xi, omega1, wp, gamma):
    """(2/π)∫_0^ω1 ω ε''_Drude(ω)/(ω²+ξ²) dω in closed form"""
    if wp == 0.0:
        return np.zeros_like(xi)
    if gamma == 0.0:
        # the dissipationless Drude weight sits at ω = 0
        return wp * wp / (xi * xi)

    def f(s):
        return np.arctan(omega1 / s) / s

    near = np.abs(xi - gamma) <= 1e-6 * gamma
    safe = np.where(near, 2.0 * gamma, xi)
    value = (f(gamma) - f(safe)) / (safe * safe - gamma * gamma)
    # ξ → γ: difference quotient becomes -f'(γ)/(2γ)
    fprime = -np.arctan(omega1 / gamma) / gamma ** 2 - omega1 / (gamma * (gamma ** 2 + omega1 ** 2))
    value = np.where(near, -fprime / (2.0 * gamma), value)
    return (2.0 / math.pi) * wp * wp * gamma * value


def _table_integral(table, xi, subdivision):
    log_w = np.log(table.frequencies)
    fractions = np.linspace(0.0, 1.0, subdivision + 1)[:-1]
    edges = (log_w[:-1, None] + np.diff(log_w)[:, None] * fractions[None, :]).ravel()
    edges = np.append(edges, log_w[-1])
    t, weights = composite_gauss_legendre(edges, _DISPERSION_NODES)
    omega = np.exp(t)
    eps2 = np.interp(t, log_w, table.eps2)
    # dω = ω dt
    kernel = omega[None, :] ** 2 / (omega[None, :] ** 2 + xi[:, None] ** 2)
    return (2.0 / math.pi) * (kernel * (weights * eps2)[None, :]).sum(axis=1)


def eps_tabulated(table, xi, rtol=None):
    """ε(iξ) = 1 + (2/π)∫ ω ε''(ω)/(ω² + ξ²) dω from tabulated ε''.

    Below the first row ε'' follows the table's Drude extrapolation (integrated
    in closed form), inside the table it is linear in ln ω, and it is zero above
    the last row. The table part is integrated panel by panel in ln ω, doubling
    the sub-panels until the relative change drops below rtol.

    Raises:
        DomainError: If xi <= 0
        NumericalError: If the panel refinement does not converge
    """
    xi_arr = np.atleast_1d(_check_xi(xi))
    rtol = QUAD_RTOL if rtol is None else rtol
    drude = table.low_freq_extrapolation
    tail = _drude_tail(xi_arr, table.frequencies[0], drude.plasma_frequency, drude.relaxation_rate)

    subdivision = 1
    previous = _table_integral(table, xi_arr, subdivision)
    while True:
        subdivision *= 2
        current = _table_integral(table, xi_arr, subdivision)
        change = np.max(np.abs(current - previous) / (1.0 + tail + np.abs(current)))
        if change < rtol:
            break
        if subdivision >= _MAX_SUBDIVISION:
            logger.error(f"Dispersion integral did not converge (change {change:.3e})")
            raise NumericalError("dispersion integral did not converge",
                                 estimate=float(1.0 + tail[0] + current[0]), error_bound=float(change))
        previous = current

    value = 1.0 + tail + current
    return float(value[0]) if np.ndim(xi) == 0 else value


def eps_at(model, xi):
    """ε(iξ) of any material model"""
    if model.kind == MaterialKind.drude:
        return eps_drude(xi, model.plasma_frequency, model.relaxation_rate)
    if model.kind == MaterialKind.plasma:
        return eps_plasma(xi, model.plasma_frequency)
    if model.kind == MaterialKind.lorentz_drude:
        return eps_lorentz_drude(xi, model.plasma_frequency, model.relaxation_rate, model.oscillators)
    return eps_tabulated(model.data, xi)


def eps_on_grid(model, frequencies):
    """ε(iξ_n) for an array of Matsubara frequencies"""
    return np.asarray(eps_at(model, np.asarray(frequencies, dtype=float)), dtype=float)


def build_material(kind, plasma_ev=AU_PLASMA_EV, gamma_ev=AU_GAMMA_EV, optical_data=None, name="Au"):
    """Material model from boundary units (eV) and a kind name"""
    kind = MaterialKind(kind)
    if kind == MaterialKind.drude:
        return drude_model(plasma_ev, gamma_ev, name)
    if kind == MaterialKind.plasma:
        return plasma_model(plasma_ev, name)
    if kind == MaterialKind.lorentz_drude:
        return lorentz_drude_model(plasma_ev, gamma_ev, name=name)
    return tabulated_model(optical_data, plasma_ev, gamma_ev, name)
