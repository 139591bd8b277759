import math

import numpy as np
import pytest

from app.models.geometry_schema import Geometry
from app.services import lifshitz_service as lif
from app.services import pfa_service as pfa
from app.services.zero_mode_service import force_n0
from app.utils.differentiation import richardson_derivative
from app.utils.errors import DataValidationError, DomainError, RangeError
from app.utils.units import HBAR, C, gradient_to_mpa

T = 300.0
R_TABLE = 150e-6
TABLE_GAPS_UM = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
APPROX_MPA = [493.4, 109.0, 36.50, 15.415, 7.557, 4.110]
PFA_MPA = [493.7, 109.1, 36.53, 15.43, 7.568, 4.117]


def _shipped_rows():
    rows = []
    with open(pfa.THETA_TABLE_PATH, encoding="utf-8") as handle:
        for line in handle:
            if line.strip() and not line.startswith("#"):
                a_um, theta, theta_tilde = line.split()
                rows.append((float(a_um), float(theta), float(theta_tilde)))
    return rows


def test_theta_table_nodes_are_exact():
    table = pfa.load_theta_table()
    rows = _shipped_rows()
    assert len(rows) == len(table.rows) == 24
    for a_um, theta, theta_tilde in rows:
        assert pfa.theta_coeffs(table, a_um * 1e-6) == (theta, theta_tilde)


def test_theta_table_printed_values():
    table = pfa.load_theta_table()
    assert pfa.theta_coeffs(table, 0.2e-6) == (0.6645, 0.470)
    assert pfa.theta_coeffs(table, 1e-6) == (0.378, 0.332)
    assert table.material == "Au"
    assert table.temperature == 300.0


def test_theta_outside_table_raises():
    table = pfa.load_theta_table()
    with pytest.raises(RangeError):
        pfa.theta_coeffs(table, 0.05e-6)
    with pytest.raises(RangeError):
        pfa.theta_coeffs(table, 2.5e-6)


def test_theta_interpolation_is_monotone():
    table = pfa.load_theta_table()
    gaps = np.linspace(0.1e-6, 2e-6, 400)
    values = np.array([pfa.theta_coeffs(table, a) for a in gaps])
    assert np.all(np.diff(values[:, 0]) < 0)
    # θ̃ stays between its bracketing nodes
    nodes = table.gaps
    for a, (_, theta_tilde) in zip(gaps, values):
        k = min(np.searchsorted(nodes, a, side="right"), len(nodes) - 1)
        lo, hi = sorted((table.rows[k - 1][2], table.rows[k][2]))
        assert lo - 1e-12 <= theta_tilde <= hi + 1e-12


def test_theta_table_round_trip():
    table = pfa.load_theta_table()
    again = pfa.load_theta_table(pfa.dump_theta_table(table))
    assert len(again.rows) == len(table.rows)
    for (a1, t1, s1), (a2, t2, s2) in zip(table.rows, again.rows):
        assert a2 == pytest.approx(a1, rel=1e-12)
        assert (t1, s1) == (t2, s2)


@pytest.mark.parametrize("text, row", [
    ("# a_um theta theta_tilde\n0.1 0.7 0.4\n0.1 0.6 0.4\n", 3),
    ("0.1 0.7\n", 1),
    ("0.1 0.7 0.4\n0.2 1.2 0.4\n", 2),
])
def test_theta_table_validation(text, row):
    with pytest.raises(DataValidationError) as excinfo:
        pfa.load_theta_table(text)
    assert excinfo.value.row == row


def test_pfa_is_linear_in_radius(drude):
    a = 0.5e-6
    one = pfa.force_pfa_npos(drude, 5e-6, a, T)
    two = pfa.force_pfa_npos(drude, 10e-6, a, T)
    assert two == pytest.approx(2.0 * one, rel=1e-15)
    assert one < 0


def test_pfa_gradient_is_force_slope(drude):
    a = 0.5e-6
    grid = lif.matsubara_grid(T, a=a)
    slope, _ = richardson_derivative(lambda gap: pfa.force_pfa_npos(drude, 5e-6, gap, T, grid), a, a * 1e-2)
    assert pfa.gradient_pfa_npos(drude, 5e-6, a, T, grid) == pytest.approx(slope, rel=1e-6)


def test_full_pfa_gradient_is_plate_pressure(drude):
    a = 0.4e-6
    assert pfa.gradient_pfa_full(drude, R_TABLE, a, T) / (2.0 * math.pi * R_TABLE) == pytest.approx(
        lif.pp_pressure(drude, a, T), rel=1e-12)


def test_ideal_pfa_force():
    radius, a = 5e-6, 1e-6
    expected = -math.pi ** 3 * HBAR * C * radius / (360.0 * a ** 3)
    assert pfa.ideal_pfa_force(radius, a) == pytest.approx(expected, rel=1e-15)
    assert pfa.ideal_pfa_force(radius, a) == pytest.approx(2.0 * math.pi * radius * lif.ideal_pp_free_energy(a),
                                                           rel=1e-14)


def test_force_result_recombines(drude):
    radius, a = 5e-6, 0.5e-6
    result = pfa.force_approx(drude, radius, a, T)
    assert result.total == result.n0_exact + result.n_pos_pfa * result.de_correction_factor
    assert result.de_correction_factor == 1.0 - result.theta * a / radius
    assert result.theta == 0.520
    assert result.total < 0
    assert result.magnitude == -result.total
    assert 0.0 < result.n0_share < 1.0
    assert result.thermal_length_ratio == pytest.approx(lif.thermal_length(T) / a)
    assert result.n_max == 25


def test_correction_departs_from_pfa(drude):
    result = pfa.force_approx(drude, 5e-6, 1e-6, T)
    assert 0.0 < abs(result.pfa_deviation) < 0.15
    gradient = pfa.gradient_approx(drude, 5e-6, 1e-6, T)
    assert gradient.total > 0
    assert gradient.theta == 0.332


def test_energy_slope_is_uncorrected_force(drude):
    radius, a = 5e-6, 0.5e-6
    grid = lif.matsubara_grid(T, a=a)
    slope, _ = richardson_derivative(lambda gap: pfa.free_energy_approx(drude, radius, gap, T, grid, tol=1e-14),
                                     a, a * 1e-2)
    result = pfa.force_approx(drude, radius, a, T, grid=grid, tol=1e-14)
    assert -slope == pytest.approx(result.n0_exact + result.n_pos_pfa, rel=1e-6)


@pytest.mark.parametrize("index", range(len(TABLE_GAPS_UM)))
def test_gradient_table_tabulated(tabulated, index):
    a = TABLE_GAPS_UM[index] * 1e-6
    result = pfa.gradient_approx(tabulated, R_TABLE, a, T)
    assert gradient_to_mpa(result.total, R_TABLE) == pytest.approx(APPROX_MPA[index], rel=1e-2)
    assert gradient_to_mpa(result.pfa_total, R_TABLE) == pytest.approx(PFA_MPA[index], rel=1e-2)
    assert abs(result.pfa_deviation) < 2e-3


@pytest.mark.parametrize("index", range(len(TABLE_GAPS_UM)))
def test_gradient_table_drude(drude, index):
    a = TABLE_GAPS_UM[index] * 1e-6
    result = pfa.gradient_approx(drude, R_TABLE, a, T)
    assert gradient_to_mpa(result.total, R_TABLE) == pytest.approx(APPROX_MPA[index], rel=5e-2)
    assert abs(result.pfa_deviation) < 2e-3


def test_table_mismatch_is_logged(drude, caplog):
    pfa.force_approx(drude, 5e-6, 1e-6, 310.0)
    assert "tabulated at 300 K" in caplog.text


def test_figure_series_with_exact_column(drude):
    gaps = [0.5e-6, 1e-6]
    series = pfa.figure_series(drude, 5e-6, gaps, T,
                               oracle=lambda geom: pfa.ideal_pfa_force(geom.radius, geom.gap))
    assert [row["a_um"] for row in series] == pytest.approx([0.5, 1.0])
    assert all(row["exact"] == 1.0 for row in series)
    assert all(0.0 < row["approx"] < 1.0 and 0.0 < row["pfa"] < 1.0 for row in series)


def test_n0_channel_dominates_at_large_gap(drude):
    result = pfa.force_approx(drude, 5e-6, 2e-6, T)
    assert result.n0_share > 0.1


def test_plasma_has_no_exact_zero_mode(plasma):
    with pytest.raises(DomainError, match="plasma"):
        pfa.force_approx(plasma, 5e-6, 1e-6, T)
    with pytest.raises(DomainError):
        pfa.gradient_approx(plasma, 150e-6, 0.5e-6, T)
    with pytest.raises(DomainError):
        pfa.free_energy_approx(plasma, 5e-6, 1e-6, T)
    # the plate PFA alone is still defined
    assert pfa.force_pfa_full(plasma, 5e-6, 1e-6, T) < 0


def test_n_pos_share_is_small_at_five_microns(drude):
    radius = a = 5e-6
    n_pos = pfa.force_pfa_npos(drude, radius, a, T)
    total = force_n0(Geometry(radius=radius, gap=a), T) + n_pos
    assert n_pos < 0
    assert abs(n_pos) / abs(total) < 0.02


def test_n_pos_vanishes_at_millimetre_gap(drude):
    force = pfa.force_pfa_npos(drude, 5e-6, 1e-3, T)
    gradient = pfa.gradient_pfa_npos(drude, 5e-6, 1e-3, T)
    assert math.isfinite(force) and math.isfinite(gradient)
    assert abs(force) < 1e-30
    assert abs(gradient) < 1e-30


@pytest.mark.parametrize("a", [0.3e-6, 0.5e-6, 1e-6])
def test_free_energy_approx_at_default_grid(drude, a):
    energy = pfa.free_energy_approx(drude, 5e-6, a, T)
    assert math.isfinite(energy)
    assert energy < 0
