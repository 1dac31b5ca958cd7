import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from looptrees import stable
from looptrees.errors import ConvergenceFailure, DomainError

P0 = 2 / (3 * math.gamma(1 / 3))


def test_density_at_zero():
    assert stable.p1_density(1.5, 0.0) == pytest.approx(P0, abs=1e-12)
    assert stable.density_at_zero(1.5) == pytest.approx(P0, rel=1e-14)
    assert stable.p1_density(1.5, 1e-6) == pytest.approx(P0, abs=1e-6)


def test_density_nonnegative_to_twenty():
    xs = np.linspace(0, 20, 41)
    vals = [stable.p1_density(1.5, float(x)) for x in xs]
    assert min(vals) >= 0.0
    assert vals[-1] < 1e-30


@pytest.mark.parametrize("x", [0.0, 0.7, 2.0, 5.0, 9.0])
def test_series_matches_fourier(x):
    assert stable.p1_density(1.5, x) == pytest.approx(stable.p1_density_fourier(1.5, -x), rel=1e-8, abs=1e-15)


@pytest.mark.parametrize("alpha", [1.5, 1.8])
def test_left_mass(alpha):
    m = stable.left_mass(alpha)
    assert 0 < m < 1
    assert m == pytest.approx(1 / alpha, abs=1e-9)


def test_moments_closed_form():
    assert stable.stable_moment(1.5, 0.5) == pytest.approx(math.sqrt(math.pi) / math.gamma(1 / 3), rel=1e-14)
    assert stable.stable_moment(1.5, 0.5) == pytest.approx(0.661625, abs=1e-6)
    assert stable.stable_moment(1.7, 1.7) == pytest.approx(math.gamma(1.7), rel=1e-14)


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.5, 2.0])
def test_moment_quadrature(beta):
    assert stable.moment_quadrature(1.5, beta) == pytest.approx(stable.stable_moment(1.5, beta), abs=1e-6)


def test_moment_quadrature_increases_with_range():
    vals = [stable.moment_quadrature(1.5, 1.0, upper=u) for u in (1, 2, 4, 8)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(stable.stable_moment(1.5, 1.0), abs=1e-6)


def test_gamma_recurrence():
    assert math.gamma(-2 / 3) == pytest.approx(-1.5 * math.gamma(1 / 3), rel=1e-12)


@settings(max_examples=40)
@given(st.floats(1.4, 1.95), st.floats(0.0, 5.0))
def test_density_positive(alpha, x):
    assert stable.p1_density(alpha, x) >= 0.0


def test_series_refuses_past_term_cap(monkeypatch):
    # the series needs about x^{alpha/(alpha-1)} terms before it settles
    monkeypatch.setattr(stable, "TERM_CAP", 1000)
    with pytest.raises(ConvergenceFailure):
        stable.p1_density(1.2, 3.5)


def test_parameter_domain():
    with pytest.raises(DomainError):
        stable.StableParams(2.0)
    with pytest.raises(DomainError):
        stable.p1_density(0.9, 1.0)


def test_interpolant_tracks_series():
    f = stable.p1_interpolant(1.5)
    for x in (0.0, 1.3, 4.4, 7.9):
        assert f(x) == pytest.approx(stable.p1_density(1.5, x), abs=1e-12)
