"""
Sphere-plate force and gradient from the exact n=0 channel plus the
curvature-corrected proximity force approximation of the n>0 modes:

    F  = F_n0 + F_PFA,n>0 (1 − θ a/R)
    F' = F'_n0 + F'_PFA,n>0 (1 − θ̃ a/R)

θ and θ̃ come from a shipped table and are interpolated monotonically in a.
"""

import io
import os
import math
import logging
from functools import lru_cache

from scipy.interpolate import PchipInterpolator

from app.models.geometry_schema import Geometry
from app.models.result_schema import ForceResult, ThetaTable
from app.services import lifshitz_service as lifshitz
from app.services.zero_mode_service import force_n0, free_energy_n0, gradient_n0, require_drude_prescription
from app.utils.errors import DataValidationError, DomainError, RangeError
from app.utils.parallel import fixed_order_sum
from app.utils.units import C, HBAR, MICRON, m_to_um

# Setup logging
logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
THETA_TABLE_PATH = os.path.join(DATA_DIR, "theta_au_300K.txt")
THETA_HEADER = "# a_um  theta  theta_tilde"

# Relative tolerance for matching a table node
NODE_RTOL = 1e-12


def load_theta_table(source=None):
    """Parse a θ table file; the shipped Au table when source is None.

    Lines "# key: value" before the column header set material, temperature_k
    and source; data lines hold "a_um theta theta_tilde".

    Args:
        source: Path, text, bytes or stream

    Returns:
        ThetaTable

    Raises:
        DataValidationError: On malformed or out-of-range rows (names the line)
    """
    if source is None:
        return _shipped_theta_table()
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
        text = text.decode("utf-8") if isinstance(text, bytes) else text
    elif isinstance(source, str) and "\n" not in source and os.path.exists(source):
        with open(source, encoding="utf-8") as handle:
            text = handle.read()
    else:
        text = str(source)
    return _parse_theta_text(text)


@lru_cache(maxsize=1)
def _shipped_theta_table():
    with open(THETA_TABLE_PATH, encoding="utf-8") as handle:
        return _parse_theta_text(handle.read())


def _parse_theta_text(text):
    meta = {"material": "Au", "temperature_k": "300", "source": ""}
    rows = []
    for line_no, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            key, sep, value = body.partition(":")
            if sep and key.strip() in meta:
                meta[key.strip()] = value.strip()
            continue
        fields = stripped.split()
        if len(fields) != 3:
            raise DataValidationError(f"expected 3 columns, got {len(fields)}", row=line_no)
        try:
            gap_um, theta, theta_tilde = (float(f) for f in fields)
        except ValueError:
            raise DataValidationError(f"non-numeric value in {stripped!r}", row=line_no)
        if rows and not gap_um * MICRON > rows[-1][0]:
            raise DataValidationError(f"separation {gap_um} um is not above the previous row", row=line_no)
        if not (0.0 < theta < 1.0 and 0.0 < theta_tilde < 1.0):
            raise DataValidationError("coefficients must lie in (0, 1)", row=line_no)
        rows.append((gap_um * MICRON, theta, theta_tilde))
    try:
        temperature = float(meta["temperature_k"])
    except ValueError:
        raise DataValidationError(f"invalid temperature_k {meta['temperature_k']!r}")
    if len(rows) < 2:
        raise DataValidationError(f"need at least 2 data rows, got {len(rows)}")
    return ThetaTable(rows=tuple(rows), material=meta["material"], temperature=temperature, source=meta["source"])


def dump_theta_table(table):
    """Serialize a ThetaTable in the file format read by load_theta_table"""
    lines = [f"# material: {table.material}", f"# temperature_k: {table.temperature:g}"]
    if table.source:
        lines.append(f"# source: {table.source}")
    lines.append(THETA_HEADER)
    lines += [f"{m_to_um(gap):.6g}  {theta!r}  {theta_tilde!r}" for gap, theta, theta_tilde in table.rows]
    return "\n".join(lines) + "\n"


@lru_cache(maxsize=8)
def _interpolants(table):
    gaps = table.gaps
    return (PchipInterpolator(gaps, [row[1] for row in table.rows], extrapolate=False),
            PchipInterpolator(gaps, [row[2] for row in table.rows], extrapolate=False))


def theta_coeffs(table, a):
    """(θ, θ̃) at separation a in m.

    Table nodes (to a relative tolerance of 1e-12) return the stored values
    exactly; between nodes the interpolation is monotone cubic in a.

    Raises:
        RangeError: If a lies outside the tabulated separations
    """
    lo, hi = table.a_range
    if not (lo * (1.0 - NODE_RTOL) <= a <= hi * (1.0 + NODE_RTOL)):
        raise RangeError(f"a = {m_to_um(a):.6g} um is outside the tabulated range "
                         f"[{m_to_um(lo):g}, {m_to_um(hi):g}] um")
    for gap, theta, theta_tilde in table.rows:
        if abs(a - gap) <= NODE_RTOL * gap:
            return theta, theta_tilde
    theta_i, theta_tilde_i = _interpolants(table)
    return float(theta_i(a)), float(theta_tilde_i(a))


def _check(radius, a, temperature):
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    if not a > 0:
        raise DomainError(f"separation must be positive, got {a}")
    if not temperature > 0:
        raise DomainError(f"temperature must be positive, got {temperature}")


def force_pfa_npos(model, radius, a, temperature, grid=None, threads=None):
    """PFA force of the n>0 modes, 2πR Σ_{n>0} 𝓕_n(a), in N (negative)"""
    _check(radius, a, temperature)
    modes = lifshitz.mode_series(model, a, temperature, grid, "energy", threads)
    return 2.0 * math.pi * radius * fixed_order_sum(modes)


def gradient_pfa_npos(model, radius, a, temperature, grid=None, threads=None):
    """PFA gradient of the n>0 modes, d/da of force_pfa_npos = 2πR Σ_{n>0} P_n(a), in N/m"""
    _check(radius, a, temperature)
    modes = lifshitz.mode_series(model, a, temperature, grid, "pressure", threads)
    return 2.0 * math.pi * radius * fixed_order_sum(modes)


def force_pfa_full(model, radius, a, temperature, grid=None, threads=None):
    """PFA force including the n=0 plate term"""
    zero = 2.0 * math.pi * radius * lifshitz.pp_zero_mode(model, a, temperature)
    return zero + force_pfa_npos(model, radius, a, temperature, grid, threads)


def gradient_pfa_full(model, radius, a, temperature, grid=None, threads=None):
    """PFA gradient including the n=0 plate term; divided by 2πR it is the plate pressure"""
    zero = 2.0 * math.pi * radius * lifshitz.pp_zero_mode_pressure(model, a, temperature)
    return zero + gradient_pfa_npos(model, radius, a, temperature, grid, threads)


def ideal_pfa_force(radius, a):
    """PFA force between ideal sphere and plate at T = 0, −π³ħcR/(360a³)"""
    _check(radius, a, 1.0)
    return -math.pi ** 3 * HBAR * C * radius / (360.0 * a ** 3)


def _warn_mismatches(table, model, temperature):
    if abs(temperature - table.temperature) > 1e-9 * table.temperature:
        logger.warning(f"theta table is tabulated at {table.temperature:g} K but T = {temperature:g} K")
    if table.material != model.name:
        logger.warning(f"theta table is for {table.material} but the material is {model.name}")


def _approx(quantity, model, radius, a, temperature, table, grid, threads, tol):
    _check(radius, a, temperature)
    require_drude_prescription(model)
    table = table or load_theta_table()
    _warn_mismatches(table, model, temperature)
    theta, theta_tilde = theta_coeffs(table, a)
    grid = grid or lifshitz.matsubara_grid(temperature, a=a)
    geom = Geometry(radius=radius, gap=a)

    try:
        if quantity == "force":
            coefficient = theta
            n0 = force_n0(geom, temperature, tol)
            n_pos = force_pfa_npos(model, radius, a, temperature, grid, threads)
            zero_pfa = 2.0 * math.pi * radius * lifshitz.pp_zero_mode(model, a, temperature)
        else:
            coefficient = theta_tilde
            n0 = gradient_n0(geom, temperature, tol)
            n_pos = gradient_pfa_npos(model, radius, a, temperature, grid, threads)
            zero_pfa = 2.0 * math.pi * radius * lifshitz.pp_zero_mode_pressure(model, a, temperature)
    except Exception as e:
        logger.error(f"Approximate {quantity} failed at R={radius!r}, a={a!r}: {e}")
        raise

    factor = 1.0 - coefficient * a / radius
    total = n0 + n_pos * factor
    logger.info(f"{quantity} at R={m_to_um(radius):g} um, a={m_to_um(a):g} um: {total:.6e} "
                f"(n0 {n0:.4e}, n>0 PFA {n_pos:.4e}, factor {factor:.6f})")
    return ForceResult(quantity=quantity, total=total, n0_exact=n0, n_pos_pfa=n_pos, theta=coefficient,
                       de_correction_factor=factor, pfa_total=zero_pfa + n_pos, geometry=geom,
                       temperature=temperature, material=model.label, n_max=grid.n_max,
                       n0_share=n0 / total, thermal_length_ratio=lifshitz.thermal_length(temperature) / a)


def force_approx(model, radius, a, temperature, table=None, grid=None, threads=None, tol=None):
    """Approximate sphere-plate force F_n0 + F_PFA,n>0 (1 − θ a/R).

    Args:
        model: MaterialModel of sphere and plate
        radius: Sphere radius R in m
        a: Minimum separation in m, within the θ table range
        temperature: Temperature in K
        table: ThetaTable; the shipped Au table by default
        grid: MatsubaraGrid; ceil(10 λ_T/a) modes by default
        threads: Worker threads for the Matsubara sum
        tol: Tolerance of the n=0 series

    Returns:
        ForceResult: total force in N (negative: attractive) and its breakdown

    Raises:
        RangeError: If a is outside the θ table
        DomainError: For the plasma model, which has no exact n=0 term
        NumericalError: If a quadrature or series does not converge
    """
    return _approx("force", model, radius, a, temperature, table, grid, threads, tol)


def gradient_approx(model, radius, a, temperature, table=None, grid=None, threads=None, tol=None):
    """Approximate force gradient F'_n0 + F'_PFA,n>0 (1 − θ̃ a/R); see force_approx"""
    return _approx("gradient", model, radius, a, temperature, table, grid, threads, tol)


def free_energy_approx(model, radius, a, temperature, grid=None, threads=None, tol=None):
    """Exact n=0 energy plus the uncorrected PFA energy of the n>0 modes, in J.

    The PFA energy is 2πR ∫_a^∞ Σ_{n>0} 𝓕_n(a') da'.
    """
    _check(radius, a, temperature)
    require_drude_prescription(model)
    geom = Geometry(radius=radius, gap=a)
    modes = lifshitz.mode_series(model, a, temperature, grid, "pfa_energy", threads)
    return free_energy_n0(geom, temperature, tol) + 2.0 * math.pi * radius * fixed_order_sum(modes)


def figure_series(model, radius, a_values, temperature, table=None, threads=None, oracle=None):
    """Force data normalized by the ideal PFA force, one dict per separation.

    Args:
        oracle: Optional callable (geom) -> force in N for an exact column

    Returns:
        list: dicts with a_um, approx, pfa and (when oracle is given) exact
    """
    series = []
    for a in a_values:
        result = force_approx(model, radius, a, temperature, table, threads=threads)
        ideal = ideal_pfa_force(radius, a)
        row = {"a_um": m_to_um(a), "approx": result.total / ideal, "pfa": result.pfa_total / ideal}
        if oracle is not None:
            row["exact"] = oracle(Geometry(radius=radius, gap=a)) / ideal
        series.append(row)
    return series
