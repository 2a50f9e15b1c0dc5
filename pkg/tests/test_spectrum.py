import math
import os
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

sys.path.insert(0, os.path.dirname(__file__))
from corpus import free_eigenvalues  # noqa: E402

from slnorm import spectrum  # noqa: E402
from slnorm.errors import DomainError  # noqa: E402
from slnorm.potential import Potential  # noqa: E402

PI = math.pi
ZERO = Potential.zero()


def test_characteristic_closed_forms():
    assert spectrum.characteristic_phi(ZERO, 1.0, PI / 2, PI / 2) == pytest.approx(0.0, abs=1e-12)
    assert spectrum.characteristic_phi(ZERO, 0.25, PI / 2, PI / 2) == pytest.approx(-0.5, abs=1e-12)
    lam = 0.7
    want = math.sqrt(0.5) * (math.cos(lam * PI) - lam * math.sin(lam * PI))
    assert spectrum.characteristic_phi(ZERO, lam ** 2, PI / 2, PI / 4) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("pot,mu,a,b", [
    (ZERO, 2.0, PI / 3, PI / 5),
    (Potential.expression("sin(x)"), 0.7, PI / 2, PI / 2),
    (Potential.expression("x"), 55.5, 0.2, 2.9),
])
def test_psi_is_minus_phi(pot, mu, a, b):
    f = spectrum.characteristic_phi(pot, mu, a, b)
    g = spectrum.characteristic_psi(pot, mu, a, b)
    assert g == pytest.approx(-f, rel=1e-8, abs=1e-12)


def test_neumann_and_constant():
    sp = spectrum.find_eigenvalues(ZERO, PI / 2, PI / 2, 4)
    assert np.allclose(sp.mus, [0, 1, 4, 9], atol=1e-10)
    sp = spectrum.find_eigenvalues(Potential.constant(1.7), PI / 2, PI / 2, 3)
    assert np.allclose(sp.mus, [1.7, 2.7, 5.7], atol=1e-10)


def test_ground_state_robin_right():
    # tan(lambda pi) = 1/lambda
    lam0 = brentq(lambda l: math.tan(l * PI) - 1.0 / l, 0.1, 0.49, xtol=1e-15)
    sp = spectrum.find_eigenvalues(ZERO, PI / 2, PI / 4, 1)
    assert sp.mus[0] == pytest.approx(lam0 ** 2, abs=1e-10)
    assert sp.records[0].lam == pytest.approx(lam0, abs=1e-10)


@pytest.mark.parametrize("a,b", [(PI / 6, PI / 2), (0.2, 0.3), (2.9, 2.8), (PI / 2, 3 * PI / 4), (0.4, 2.9)])
def test_free_spectrum_against_closed_form(a, b):
    want = free_eigenvalues(a, b, 25)
    got = spectrum.find_eigenvalues(ZERO, a, b, 25).mus
    assert np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))) <= 1e-10


def test_negative_eigenvalues_flagged():
    sp = spectrum.find_eigenvalues(ZERO, 0.2, 2.9, 3)
    assert sp.records[0].imaginary and sp.mus[0] < 0
    assert not sp.records[2].imaginary


def test_records_invariants():
    sp = spectrum.find_eigenvalues(Potential.expression("exp(x/2)"), 1.0, 2.0, 60)
    assert [r.n for r in sp.records] == list(range(60))
    assert np.all(np.diff(sp.mus) > 0)
    resid = spectrum.root_residual(np.array([r.char_value for r in sp.records]), sp.phi_dots, sp.mus)
    assert np.all(resid <= spectrum.ROOT_TOL)
    assert np.all(sp.phi_dots != 0)
    # sign of Phi-dot alternates along the spectrum
    assert np.all(np.sign(sp.phi_dots[1:]) == -np.sign(sp.phi_dots[:-1]))


def test_head_matches_shorter_run():
    long = spectrum.find_eigenvalues(Potential.expression("sin(x)"), PI / 3, PI / 2, 30)
    short = spectrum.find_eigenvalues(Potential.expression("sin(x)"), PI / 3, PI / 2, 10)
    assert np.allclose(long.head(10).mus, short.mus, rtol=1e-13, atol=1e-13)
    with pytest.raises(ValueError):
        long.head(31)


def test_bad_arguments():
    with pytest.raises(ValueError):
        spectrum.find_eigenvalues(ZERO, PI / 2, PI / 2, 0)
    with pytest.raises(DomainError):
        spectrum.find_eigenvalues(ZERO, PI, PI / 2, 3)


@pytest.mark.parametrize("pot,a,b,n,tol", [
    (ZERO, PI / 2, PI / 2, 5, 1e-9),
    (Potential.expression("x"), PI / 3, PI / 4, 8, 1e-8),
    (Potential.constant(1.0), PI / 4, PI / 4, 8, 1e-8),
])
def test_reflection_examples(pot, a, b, n, tol):
    assert spectrum.verify_reflection_symmetry(pot, a, b, n) <= tol


@given(st.floats(-5.0, 5.0), st.floats(0.1, PI - 0.1), st.floats(0.1, PI - 0.1))
@settings(max_examples=10, deadline=None)
def test_shift_covariance(c, a, b):
    base = spectrum.find_eigenvalues(Potential.expression("cos(2*x)"), a, b, 12).mus
    moved = spectrum.find_eigenvalues(Potential.expression(f"cos(2*x) + {c!r}"), a, b, 12).mus
    assert np.max(np.abs(moved - base - c) / (1.0 + np.abs(base))) <= 1e-8


@given(st.floats(0.1, PI - 0.1), st.floats(0.1, PI - 0.1))
@settings(max_examples=10, deadline=None)
def test_reflection_property(a, b):
    assert spectrum.verify_reflection_symmetry(Potential.expression("x^2 - sin(3*x)"), a, b, 12) <= 1e-8


def test_drift_estimate():
    sp = spectrum.find_eigenvalues(Potential.constant(2.0), PI / 2, PI / 2, 40)
    assert sp.drift() == pytest.approx(2.0, abs=1e-9)


def test_deep_negative_ground_state():
    # Phi-dot ~ 1e8 at the root, so |Phi| is bounded below by the rounding of mu
    sp = spectrum.find_eigenvalues(ZERO, 0.125, 1.0, 4)
    exact = free_eigenvalues(0.125, 1.0, 4)
    assert sp.mus[0] < -60
    assert np.max(np.abs(sp.mus - exact) / np.maximum(1.0, np.abs(exact))) <= 1e-9


def test_search_bracket_refined_at_full_accuracy():
    # the coarse search bracket for n = 3 excludes the root by ~1e-5 here
    sp = spectrum.find_eigenvalues(Potential.expression("cos(2*x)"), 0.2, PI - 0.1, 12)
    resid = spectrum.root_residual(np.array([r.char_value for r in sp.records]), sp.phi_dots, sp.mus)
    assert np.all(resid <= spectrum.ROOT_TOL)
    assert sp.mus[3] == pytest.approx(4.7223268, abs=1e-6)
