import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypervlasov.errors import DomainError
from hypervlasov.geometry import (
    Region,
    SurfaceFamily,
    classify_region,
    g_minus,
    g_minus_inv,
    g_plus,
    g_plus_inv,
    g_plus_prime,
    hat,
    in_vacuum,
    one_plus_phat_xhat,
    p0_of,
    phi_initial_branch,
    psi_initial_branch,
    region_index,
)

finite_x = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
momentum = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


def test_g_plus_values():
    assert g_plus(1.0) == 0.0
    assert g_plus_inv(0.0) == 1.0
    # oracle: (4 - 1) / 4 and sqrt(1 + 0.5625) + 0.75 in 30-digit arithmetic
    assert g_plus(2.0) == pytest.approx(0.75, abs=1e-15)
    assert g_plus_inv(0.75) == pytest.approx(2.0, abs=1e-15)


def test_g_plus_rejects_non_positive():
    with pytest.raises(DomainError):
        g_plus(0.0)
    with pytest.raises(DomainError):
        g_plus(np.array([1.0, -2.0]))
    with pytest.raises(DomainError):
        g_plus_prime(0.0)


def test_regions_from_worked_points():
    assert classify_region(0.0, 0.0).label is Region.OMEGA1
    assert classify_region(0.5, 3.0).label is Region.OMEGA2
    assert classify_region(0.5, -3.0).label is Region.OMEGA4
    assert classify_region(3.0, 0.0).label is Region.OMEGA3
    assert classify_region(2.0, 3.0, R0=2.0).in_vacuum is True
    # oracle: g_plus_inv(3) = sqrt(10) + 3, g_minus_inv(3) = sqrt(10) - 3
    assert g_plus_inv(3.0) == pytest.approx(6.16227766016838, rel=1e-14)
    assert g_minus_inv(3.0) == pytest.approx(0.16227766016837933, rel=1e-13)


def test_region_rejects_negative_time():
    with pytest.raises(DomainError):
        region_index(-0.1, 0.0)


def test_p0_values():
    assert p0_of(0.0, np.array([0.0, 0.0])) == 1.0
    assert p0_of(0.0, np.array([3.0, 4.0])) == pytest.approx(5.0990195135927845, rel=1e-15)
    far = p0_of(1e8, np.array([-3.0, 0.0]))
    assert far > 0
    assert far == pytest.approx(0.16227766016837933, rel=1e-12)


def test_p0_three_components_matches_direct_formula():
    x = np.array([0.3, -0.2, 1.1])
    p = np.array([0.5, 0.1, -0.7])
    direct = np.sqrt(1 + p @ p) + p @ x / np.sqrt(1 + x @ x)
    assert p0_of(x, p) == pytest.approx(direct, rel=1e-14)


def test_p0_rejects_bad_shape():
    with pytest.raises(ValueError):
        p0_of(0.0, np.zeros(4))


def test_surface_family():
    s = SurfaceFamily(2, 1.0)
    assert s.hyperboloidal_time(0.0) == pytest.approx(3.0)
    assert s.cartesian_time(0.0) == pytest.approx(2.0)
    assert SurfaceFamily(0, 1.0).hyperboloidal_time(5.0) == 1.0
    with pytest.raises(DomainError):
        SurfaceFamily(3, 0.0)


@given(finite_x)
def test_g_plus_round_trip(x):
    z = g_plus_inv(x)
    assert z > 0
    assert g_plus(z) == pytest.approx(x, rel=1e-12, abs=1e-12)


@given(finite_x)
def test_null_coordinates_are_reciprocal(x):
    assert g_plus_inv(x) * g_minus_inv(x) == pytest.approx(1.0, rel=1e-12)
    z = g_plus_inv(x)
    assert g_minus(z) == pytest.approx(-x, rel=1e-12, abs=1e-12)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_g_plus_prime_is_measure_factor(z):
    # g_+'(z) (1 + hat(g_+(z))) = 1 turns (1 + x^) dx into dz
    assert g_plus_prime(z) * (1.0 + hat(g_plus(z))) == pytest.approx(1.0, rel=1e-10)


@settings(max_examples=300)
@given(finite_x, momentum, momentum)
def test_p0_positive_and_bounded(x, p1, p2):
    p = np.array([p1, p2])
    p0 = p0_of(x, p)
    gamma = np.sqrt(1 + p1 * p1 + p2 * p2)
    assert p0 > 0
    assert p0 <= 2 * gamma * (1 + 1e-15)
    assert 0 < one_plus_phat_xhat(x, p) < 2 + 1e-15


@given(st.floats(min_value=0, max_value=50), finite_x)
def test_regions_partition_and_branches(tau, x):
    idx = int(region_index(tau, x))
    assert idx in (1, 2, 3, 4)
    assert bool(phi_initial_branch(tau, x)) == (idx in (1, 2))
    assert bool(psi_initial_branch(tau, x)) == (idx in (1, 4))


@given(st.floats(min_value=0, max_value=50), finite_x, st.floats(min_value=1, max_value=10))
def test_vacuum_definition(tau, x, R0):
    assert bool(in_vacuum(tau, x, R0)) == (np.sqrt(1 + x * x) >= R0 + tau / 2)
