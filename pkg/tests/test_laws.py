import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from looptrees import laws
from looptrees.errors import DomainError

S3 = math.sqrt(3.0)
A_GRID = np.linspace(0.02, 0.98, 50)


def test_q_small_k():
    assert laws.q_k(1) == pytest.approx((0.5 - S3 / 4) / 12, rel=1e-13)
    assert laws.q_k(2) == pytest.approx((3 / 8) / (24 * S3), rel=1e-13)


def test_q_tail_constant():
    k = 10**6
    assert laws.q_k(k) * k**2.5 == pytest.approx(1 / (32 * math.sqrt(3 * math.pi)), rel=1e-5)


def test_q_sums_to_z_black():
    law = laws.mu_black_law()
    # construction checks the stored head plus analytic tail against 1
    total = math.fsum(law.masses) + law.tail_mass
    assert total == pytest.approx(1.0, abs=1e-12)
    head = math.fsum(laws.q_array(2000)[1:])
    assert head < laws.Z_BLACK < head + 1e-4


def test_mu_black():
    assert laws.mu_black(0) == pytest.approx(laws.q_k(1) / laws.Z_BLACK, rel=1e-14)
    assert laws.mu_black(0) == pytest.approx(0.31698, abs=1e-5)
    assert laws.mu_black_law().mean() == pytest.approx(1 / laws.GAMMA, rel=1e-10)
    assert laws.mu_black_law().tail_exponent == 1.5


def test_mu_white():
    assert laws.mu_white(0.5, 0) == pytest.approx(1 / S3, rel=1e-14)
    assert laws.mu_white_law(0.5).mean() == pytest.approx(laws.GAMMA, rel=1e-12)
    for a in (0.2, 0.5, 0.8):
        assert laws.mu_white_law(a).mean() * laws.mu_black_law().mean() == pytest.approx(1 / (2 * a), rel=1e-10)


def test_nu_half():
    assert laws.nu(0.5, 0) == pytest.approx(S3 / 3, rel=1e-14)
    assert laws.nu(0.5, 1) == pytest.approx(1 - S3 / 2, rel=1e-14)
    assert laws.nu(0.5, 2) == pytest.approx(S3 / 8, rel=1e-14)


def test_pgf_values():
    for a in (0.1, 0.5, 0.9):
        assert laws.pgf_F(a, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert laws.pgf_F_prime(a, 1.0) == pytest.approx(1 / (1 + 2 * (a - 0.5) / S3), rel=1e-14)
    for z in (0.0, 0.3, 0.9):
        assert laws.pgf_F(0.5, z) == pytest.approx(z + (1 - z) ** 1.5 / S3, rel=1e-14)


@pytest.mark.parametrize("a", A_GRID[::7])
def test_nu_normalised_and_pgf_matches_terms(a):
    law = laws.nu_law(float(a))
    assert math.fsum(law.masses) + law.tail_mass == pytest.approx(1.0, abs=1e-12)
    k = np.arange(law.masses.size)
    for z in np.arange(0.1, 1.0, 0.1):
        assert math.fsum(law.masses * z**k) == pytest.approx(laws.pgf_F(float(a), float(z)), abs=1e-10)


def test_critical_only_at_half():
    assert laws.pgf_F_prime(0.5, 1.0) == 1.0
    assert laws.nu_law(0.5).mean() == pytest.approx(1.0, abs=1e-12)
    for a in (0.3, 0.49, 0.51, 0.7):
        assert abs(laws.pgf_F_prime(a, 1.0) - 1.0) > 1e-3


def test_nu_tail():
    k = 10**6
    assert laws.nu(0.5, k) * k**2.5 == pytest.approx(S3 / (4 * math.sqrt(math.pi)), rel=0.01)
    assert laws.nu_bar(0.5, k) * k**2.5 == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=0.01)


def test_lambda_quarter():
    assert laws.lambda_tilt(0.25) == pytest.approx(0.87939, abs=1e-5)
    assert laws.lambda_tilt(0.25, "bisect") == pytest.approx(laws.lambda_tilt(0.25), abs=1e-10)


@pytest.mark.parametrize("a", A_GRID[A_GRID < 0.5])
def test_lambda_closed_form_vs_bisection(a):
    lam = laws.lambda_tilt(float(a))
    assert 0 < lam < 1
    assert abs(lam - laws.lambda_tilt(float(a), "bisect")) < 1e-10
    assert laws.tilt_residual(float(a), lam) < 1e-12


def test_lambda_near_half():
    a = 0.4999
    assert (1 - laws.lambda_tilt(a)) / (0.5 - a) ** 2 == pytest.approx(16 / 9, rel=0.01)


def test_tilted_law_is_critical():
    for a in (0.1, 0.3, 0.45):
        law = laws.nu_tilted_law(a)
        assert law.mean() == pytest.approx(1.0, abs=1e-9)
        t = laws.tilted_summary(a)
        assert law.pmf(0) == pytest.approx(laws.nu(a, 0) / t.F_lam, rel=1e-13)
        second = 3 / (4 * (2 * a - 1 + S3)) / math.sqrt(1 - t.lam)
        assert t.variance == pytest.approx(t.lam**2 * second / t.F_lam, rel=1e-12)
        k = np.arange(law.masses.size)
        assert math.fsum(law.masses * (k - 1.0) ** 2) == pytest.approx(t.variance, rel=1e-8)


def test_c_alpha_values():
    assert laws.c_alpha(0.75) == pytest.approx(0.5 / (S3 - 1 + 1.5), rel=1e-14)
    assert laws.c_alpha(0.5001) / 0.0001 == pytest.approx(2 / S3, rel=0.01)
    assert laws.c_alpha(0.4999) * 0.0001**0.5 == pytest.approx(3**0.75 / 8, rel=0.02)
    with pytest.raises(DomainError):
        laws.c_alpha(0.5)


def test_enumeration_constants():
    assert laws.C_p(1) == pytest.approx(1 / (6 * math.sqrt(2 * math.pi)), rel=1e-13)
    assert laws.phi(0) == pytest.approx(laws.C_p(1) / (12 * laws.q_k(1)), rel=1e-13)
    assert laws.phi(0) == pytest.approx(0.99261, abs=1e-4)
    for p in (2, 5, 30):
        assert laws.phi(p - 1) == pytest.approx(laws.C_p(p) / (12**p * laws.q_k(p)), rel=1e-11)
    k = 10**4
    assert laws.phi(k) / k**3 == pytest.approx(laws.PHI_ASYMPTOTIC, rel=0.01)


def test_type_two_law():
    assert laws.nu_bar(0.5, 0) == pytest.approx(2 / 3, rel=1e-14)
    assert laws.nu_bar(0.5, 1) == 0.0
    assert laws.nu_bar(0.5, 2) == pytest.approx(0.25, rel=1e-14)
    assert laws.nu_bar_law(0.5).mean() == pytest.approx(1.0, abs=1e-9)


def test_type_two_constants():
    assert laws.c_alpha_type2(0.5) == pytest.approx(1.5 ** (2 / 3), rel=1e-15)
    assert laws.c_alpha_type2(0.75) == pytest.approx(0.25, rel=1e-15)
    assert laws.c_alpha_type2(0.5001) / 0.0001 == pytest.approx(4 / 3, rel=1e-3)


@given(st.floats(0.01, 0.99))
def test_xi_in_unit_interval(a):
    x = laws.xi(a)
    assert 0 < x < 1
    assert laws.mu_white(a, 0) == pytest.approx(1 - x)


@pytest.mark.parametrize("a", [0.0, 1.0, -0.1, 1.5])
def test_parameter_domain(a):
    with pytest.raises(DomainError):
        laws.nu_law(a)
