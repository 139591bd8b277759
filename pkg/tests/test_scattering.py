import math

import mpmath
import numpy as np
import pytest
from scipy.special import spherical_in, spherical_kn

from app.cache import redis_client
from app.models.geometry_schema import Geometry, MultipoleTruncation
from app.services import lifshitz_service, pfa_service
from app.services.zero_mode_service import free_energy_n0
from app.services import scattering_service as sc
from app.services.material_service import eps_at
from app.utils import special_functions as sf
from app.utils.errors import ConfigError, DomainError, NumericalError
from app.utils.units import C

T = 300.0
# effectively a perfect conductor
PC_EPS = 1e16


class FakeRedis:
    """In-memory stand-in for the Redis client used by the oracle cache"""

    def __init__(self):
        self.store = {}

    def get(self, key):
        return self.store.get(key)

    def setex(self, key, ttl, value):
        self.store[key] = value

    def keys(self, pattern):
        return [key for key in self.store if key.startswith(pattern.rstrip("*"))]

    def delete(self, *keys):
        for key in keys:
            self.store.pop(key, None)

    def info(self):
        return {}


def test_mie_vanishes_without_contrast():
    assert sc.mie_coefficients(1.0, 1e15, 1e-6, 3) == (0.0, 0.0)


def test_mie_signs_for_metals(drude):
    xi = 1e15
    te, tm = sc.mie_coefficients(float(eps_at(drude, xi)), xi, 1e-6, 1)
    assert te < 0 < tm


def test_mie_perfect_conductor_dipole():
    y = 1e-3
    te, tm = sc.mie_coefficients(PC_EPS, y * C, 1.0, 1)
    assert te == pytest.approx(-2.0 * y ** 3 / (3.0 * math.pi), rel=1e-3)
    assert tm == pytest.approx(4.0 * y ** 3 / (3.0 * math.pi), rel=1e-3)


def test_mie_small_size_scaling():
    y = 1e-3
    te1, tm1 = sc.mie_coefficients(PC_EPS, y * C, 1.0, 2)
    te2, tm2 = sc.mie_coefficients(PC_EPS, 2 * y * C, 1.0, 2)
    assert te2 / te1 == pytest.approx(2.0 ** 5, rel=1e-3)
    assert tm2 / tm1 == pytest.approx(2.0 ** 5, rel=1e-3)


def test_mie_rejects_bad_input():
    with pytest.raises(DomainError):
        sc.mie_coefficients(2.0, 0.0, 1e-6, 1)
    with pytest.raises(DomainError):
        sc.mie_coefficients(2.0, 1e15, 1e-6, 0)


@pytest.mark.parametrize("z", [0.05, 1.0, 7.5, 40.0])
def test_log_bessel_against_scipy(z):
    orders = np.arange(1.0, 9.0)
    zs = np.full(orders.shape, z)
    np.testing.assert_allclose(np.exp(sf._log_i(orders, zs)), spherical_in(orders.astype(int), z), rtol=1e-12)
    np.testing.assert_allclose(np.exp(sf._log_k(orders, zs)), spherical_kn(orders.astype(int), z), rtol=1e-12)


def test_log_bessel_beyond_floating_range():
    orders = np.array([150.0, 300.0])
    z = np.full(orders.shape, 1e-3)
    with mpmath.workdps(30):
        for order, log_i, log_k in zip(orders, sf._log_i(orders, z), sf._log_k(orders, z)):
            scale = mpmath.sqrt(mpmath.pi / (2 * mpmath.mpf("1e-3")))
            exact_i = mpmath.log(scale * mpmath.besseli(order + 0.5, mpmath.mpf("1e-3")))
            exact_k = mpmath.log(scale * mpmath.besselk(order + 0.5, mpmath.mpf("1e-3")))
            assert log_i == pytest.approx(float(exact_i), rel=1e-10)
            assert log_k == pytest.approx(float(exact_k), rel=1e-10)


@pytest.mark.parametrize("m", [0, 1, 3])
def test_hyperbolic_legendre_against_extended_precision(m):
    x = np.array([1.05, 1.5, 4.0])
    l_max = 25
    log_p, g = sf.hyperbolic_legendre(m, l_max, x)
    with mpmath.workdps(40):
        for j, xj in enumerate(x):
            xm = mpmath.mpf(xj)

            def legendre(t, l):
                return (t * t - 1) ** (mpmath.mpf(m) / 2) * mpmath.diff(lambda s: mpmath.legendre(l, s), t, m)

            for l in (m if m else 1, 7, l_max):
                value = legendre(xm, l)
                slope = mpmath.diff(lambda t: legendre(t, l), xm)
                assert log_p[l - m, j] == pytest.approx(float(mpmath.log(value)), rel=1e-11, abs=1e-12)
                assert g[l - m, j] == pytest.approx(float((xm * xm - 1) * slope / value), rel=1e-9)


def test_hyperbolic_legendre_low_orders():
    x = np.array([1.2, 3.0])
    log_p, g = sf.hyperbolic_legendre(0, 2, x)
    np.testing.assert_allclose(np.exp(log_p[1]), x, rtol=1e-14)
    np.testing.assert_allclose(np.exp(log_p[2]), (3 * x * x - 1) / 2, rtol=1e-14)
    np.testing.assert_allclose(g[1], (x * x - 1) / x, rtol=1e-14)
    log_p, _ = sf.hyperbolic_legendre(2, 2, x)
    np.testing.assert_allclose(np.exp(log_p[0]), 3 * (x * x - 1), rtol=1e-14)


def test_dipole_block_of_perfect_conductors():
    radius = gap = 1e-6
    xi = C / (2.0 * (radius + gap))  # s = 2κL = 1
    s = 1.0
    block = sc._assemble(PC_EPS, xi, radius, gap, 0, 1)
    te, tm = sc.mie_coefficients(PC_EPS, xi, radius, 1)
    u_nn = 0.75 * math.pi * math.exp(-s) * (2.0 / s ** 2 + 2.0 / s ** 3)
    assert block.shape == (2, 2)
    assert block[0, 1] == 0.0 and block[1, 0] == 0.0
    assert block[0, 0] == pytest.approx(-u_nn * te, rel=1e-6)
    assert block[1, 1] == pytest.approx(u_nn * tm, rel=1e-6)


def test_block_symmetry_in_m(drude):
    geom = Geometry(radius=2e-6, gap=0.5e-6)
    truncation = MultipoleTruncation(l_max=12, m_max=4, n_max=3)
    plus = sc.round_trip_block(drude, geom, T, 2, 3, truncation)
    minus = sc.round_trip_block(drude, geom, T, 2, -3, truncation)
    np.testing.assert_array_equal(plus.matrix, minus.matrix)
    assert plus.dimension == 2 * (12 - 3 + 1)
    assert plus.l_min == 3


@pytest.mark.parametrize("m", [0, 1, 4])
def test_blocks_are_contracting(drude, m):
    geom = Geometry(radius=2e-6, gap=0.4e-6)
    truncation = MultipoleTruncation.for_geometry(geom, T, l_max=30, n_max=2)
    block = sc.round_trip_block(drude, geom, T, 1, m, truncation)
    assert 0.0 < block.spectral_radius < 1.0
    assert sc.log_det_one_minus(block.matrix) < 0.0


def test_blocks_decouple_far_away(drude):
    geom = Geometry(radius=1e-6, gap=50e-6)
    truncation = MultipoleTruncation(l_max=4, m_max=2, n_max=1)
    block = sc.round_trip_block(drude, geom, T, 1, 0, truncation)
    assert block.spectral_radius < 1e-20
    assert abs(sc.log_det_one_minus(block.matrix)) < 1e-20


def test_block_index_checks(drude):
    geom = Geometry(radius=2e-6, gap=0.5e-6)
    truncation = MultipoleTruncation(l_max=8, m_max=2, n_max=3)
    with pytest.raises(DomainError):
        sc.round_trip_block(drude, geom, T, 4, 0, truncation)
    with pytest.raises(DomainError):
        sc.round_trip_block(drude, geom, T, 1, 3, truncation)


def test_log_det_against_numpy():
    rng = np.random.default_rng(7)
    matrix = rng.standard_normal((12, 12))
    matrix *= 0.5 / np.max(np.abs(np.linalg.eigvals(matrix)))
    sign, expected = np.linalg.slogdet(np.eye(12) - matrix)
    assert sign > 0
    assert sc.log_det_one_minus(matrix) == pytest.approx(expected, rel=1e-12)
    assert sc.log_det_one_minus(np.empty((0, 0))) == 0.0


def test_log_det_rejects_non_positive_determinant():
    with pytest.raises(NumericalError):
        sc.log_det_one_minus(np.array([[2.0]]))


def test_undersized_truncation_is_rejected(drude):
    geom = Geometry(radius=2.5e-6, gap=0.5e-6)
    small = MultipoleTruncation(l_max=3, m_max=2, n_max=2)
    with pytest.raises(ConfigError):
        sc.free_energy_npos_scattering(drude, geom, T, small)
    assert sc.free_energy_npos_scattering(drude, geom, T, small, allow_undersized=True) < 0.0


def test_large_aspect_ratio_warns(drude):
    geom = Geometry(radius=25e-6, gap=1e-6)
    truncation = MultipoleTruncation(l_max=30, m_max=0, n_max=1)
    with pytest.warns(RuntimeWarning, match="supported range"):
        sc.free_energy_npos_scattering(drude, geom, T, truncation)


def test_energy_converges_in_l_max(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    report = sc.convergence_scan(drude, geom, T, [4, 8, 16], target_delta=1e-2)
    assert report.l_max_values == [4, 8, 16]
    assert report.deltas[0] is None
    assert report.deltas[2] < report.deltas[1]
    assert all(value < 0.0 for value in report.values)
    assert report.converged_l_max in (8, 16)


def test_convergence_scan_adds_exact_zero_mode(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    total = sc.convergence_scan(drude, geom, T, [4, 8])
    n_pos = sc.convergence_scan(drude, geom, T, [4, 8], quantity="npos_energy")
    n0 = free_energy_n0(geom, T)
    assert total.values == pytest.approx([value + n0 for value in n_pos.values], rel=1e-14)
    assert total.deltas[1] < n_pos.deltas[1]


def test_convergence_scan_validates_schedule(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    with pytest.raises(ConfigError):
        sc.convergence_scan(drude, geom, T, [8, 4])
    with pytest.raises(ConfigError):
        sc.convergence_scan(drude, geom, T, [4, 8], quantity="pressure")


def test_oracle_force_breakdown(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    truncation = MultipoleTruncation.for_geometry(geom, T, l_max=12)
    result = sc.force_scattering(drude, geom, T, truncation)
    assert result.total == result.n0_exact + result.n_pos
    assert result.n_pos < 0.0 and result.n0_exact < 0.0
    assert result.derivative_error < 1e-4 * abs(result.n_pos)
    gradient = sc.gradient_scattering(drude, geom, T, truncation)
    assert gradient.total > 0.0


def test_oracle_is_close_to_pfa_for_n_pos(drude):
    # the n>0 channel is within the curvature correction of its PFA at R/a = 10
    radius, a = 5e-6, 0.5e-6
    geom = Geometry(radius=radius, gap=a)
    truncation = MultipoleTruncation.for_geometry(geom, T, n_max=8)
    oracle = sc.force_scattering(drude, geom, T, truncation).n_pos
    pfa = pfa_service.force_pfa_npos(drude, radius, a, T, grid=lifshitz_service.matsubara_grid(T, n_max=8))
    assert oracle == pytest.approx(pfa, rel=0.1)


def test_oracle_cache_round_trip(drude, monkeypatch):
    monkeypatch.setattr(redis_client, "redis_client", FakeRedis())
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    truncation = MultipoleTruncation(l_max=6, m_max=2, n_max=4)
    first = sc.free_energy_npos_scattering(drude, geom, T, truncation)

    def fail(*args, **kwargs):
        raise AssertionError("cache miss")

    monkeypatch.setattr(sc, "_assemble", fail)
    assert sc.free_energy_npos_scattering(drude, geom, T, truncation) == first
    with pytest.raises(AssertionError):
        sc.free_energy_npos_scattering(drude, geom, T, truncation, use_cache=False)


def test_thread_count_does_not_change_energy(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    truncation = MultipoleTruncation(l_max=8, m_max=3, n_max=6)
    one = sc.free_energy_npos_scattering(drude, geom, T, truncation, threads=1, use_cache=False)
    four = sc.free_energy_npos_scattering(drude, geom, T, truncation, threads=4, use_cache=False)
    assert one == four


@pytest.mark.slow
def test_oracle_agreement_at_ten_to_one(drude):
    radius, a = 5e-6, 0.5e-6
    geom = Geometry(radius=radius, gap=a)
    oracle = sc.force_scattering(drude, geom, T)
    approx = pfa_service.force_approx(drude, radius, a, T)
    assert abs(approx.total - oracle.total) / abs(oracle.total) < 3e-3
    assert abs(approx.pfa_total - oracle.total) > abs(approx.total - oracle.total)


@pytest.mark.slow
@pytest.mark.parametrize("radius, a, bound", [(5e-6, 0.3e-6, 1.5e-3), (5e-6, 1e-6, 3e-3), (8e-6, 1e-6, 1.2e-3)])
def test_oracle_agreement(drude, radius, a, bound):
    geom = Geometry(radius=radius, gap=a)
    truncation = MultipoleTruncation.for_geometry(geom, T, l_max=max(120, math.ceil(6 * radius / a)))
    oracle = sc.force_scattering(drude, geom, T, truncation)
    approx = pfa_service.force_approx(drude, radius, a, T)
    assert abs(approx.total - oracle.total) / abs(oracle.total) < bound


@pytest.mark.slow
def test_l_max_rule_at_five_to_one(drude):
    geom = Geometry(radius=5e-6, gap=1e-6)
    report = sc.convergence_scan(drude, geom, T, [30, 60])
    assert report.deltas[1] < 1e-4


def test_plasma_oracle_is_rejected(plasma):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    truncation = MultipoleTruncation(l_max=6, m_max=2, n_max=4)
    with pytest.raises(DomainError, match="plasma"):
        sc.force_scattering(plasma, geom, T, truncation)
    with pytest.raises(DomainError):
        sc.gradient_scattering(plasma, geom, T, truncation)
    with pytest.raises(DomainError):
        sc.convergence_scan(plasma, geom, T, [4, 8])
    assert sc.convergence_scan(plasma, geom, T, [4, 8], quantity="npos_energy").values[-1] < 0.0


def test_block_log_det_weakens_with_n_and_m(drude):
    geom = Geometry(radius=2e-6, gap=0.4e-6)
    truncation = MultipoleTruncation.for_geometry(geom, T, l_max=30, n_max=3)
    by_n = [abs(sc.log_det_one_minus(sc.round_trip_block(drude, geom, T, n, 0, truncation).matrix))
            for n in (1, 2, 3)]
    by_m = [abs(sc.log_det_one_minus(sc.round_trip_block(drude, geom, T, 1, m, truncation).matrix))
            for m in range(4)]
    assert np.all(np.diff(by_n) < 0)
    assert np.all(np.diff(by_m) < 0)


def test_energy_converges_in_m_max(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    default = MultipoleTruncation.for_geometry(geom, T, l_max=24, n_max=4)
    assert default.m_max == 9
    base = sc.free_energy_npos_scattering(drude, geom, T, default)
    doubled = sc.free_energy_npos_scattering(drude, geom, T, default.model_copy(update={"m_max": 18}))
    assert abs(doubled - base) < 1e-4 * abs(doubled)


def test_energy_converges_in_n_max(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    default = MultipoleTruncation.for_geometry(geom, T, l_max=12)
    assert default.n_max == 25
    base = sc.free_energy_npos_scattering(drude, geom, T, default)
    doubled = sc.free_energy_npos_scattering(drude, geom, T, default.model_copy(update={"n_max": 50}))
    assert abs(doubled - base) < 1e-4 * abs(doubled)


def test_block_is_contracting_at_twenty_to_one(drude):
    geom = Geometry(radius=10e-6, gap=0.5e-6)
    truncation = MultipoleTruncation.for_geometry(geom, T, l_max=120, n_max=1)
    block = sc.round_trip_block(drude, geom, T, 1, 0, truncation)
    assert block.matrix.shape == (240, 240)
    assert np.all(np.isfinite(block.matrix))
    assert 0.0 < block.spectral_radius < 1.0
    assert sc.log_det_one_minus(block.matrix) < 0.0


def test_gradient_is_stable_under_step_halving(drude):
    geom = Geometry(radius=1e-6, gap=0.5e-6)
    truncation = MultipoleTruncation.for_geometry(geom, T, l_max=12)
    coarse = sc.gradient_scattering(drude, geom, T, truncation)
    fine = sc.gradient_scattering(drude, geom, T, truncation, step=sc.GRADIENT_STEP / 2)
    assert fine.n_pos == pytest.approx(coarse.n_pos, rel=1e-5)
