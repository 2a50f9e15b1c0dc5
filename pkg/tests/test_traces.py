import math

import numpy as np
import pytest

from slnorm import norming, spectrum, traces
from slnorm.potential import Potential

PI = math.pi
ZERO = Potential.zero()


def _solve(pot, a, b, n):
    sp = spectrum.find_eigenvalues(pot, a, b, n)
    return sp, norming.compute_norming(sp)


def test_identity_case_is_zero():
    sp, nm = _solve(ZERO, PI / 2, PI / 2, 12)
    ra = traces.series_identity_a(sp, nm, PI / 2)
    rb = traces.series_identity_b(sp, nm, PI / 2)
    assert ra.residual <= 1e-9 and rb.residual <= 1e-9
    assert ra.passed and rb.passed


def test_series_terms():
    t = traces.series_terms([1.0 / PI, 2.0 / PI, 2.0 / PI + 0.1])
    assert t[0] == 0.0 and t[1] == 0.0 and t[2] == pytest.approx(0.1)


def test_richardson_on_synthetic_tail():
    # terms 1/n^2 sum to pi^2/6; first-order tail 1/N is removed by extrapolation
    n = np.arange(1, 401, dtype=float)
    rep = traces.extrapolate(1.0 / n ** 2, PI ** 2 / 6)
    assert rep.method == "richardson"
    assert rep.decay_exponent == pytest.approx(1.0, abs=0.05)
    assert rep.residual < 1e-4 < abs(rep.partial_sum - PI ** 2 / 6)


def test_non_monotone_disables_extrapolation():
    terms = np.zeros(40)
    terms[5], terms[30] = 1.0, 0.5
    rep = traces.extrapolate(terms, 0.0)
    assert rep.method == "raw" and rep.extrapolated_value == rep.partial_sum


def test_too_few_terms():
    with pytest.raises(ValueError):
        traces.extrapolate([1.0, 2.0, 3.0], 0.0)


def test_tolerance_policy():
    rep = traces.extrapolate(1.0 / np.arange(1, 101, dtype=float) ** 2, 0.0)
    assert rep.tolerance == max(5e-3, 3 * abs(rep.partial_sum - rep.half_sum))


def test_free_left_identity():
    sp, nm = _solve(ZERO, PI / 3, PI / 2, 400)
    rep = traces.series_identity_a(sp, nm, PI / 3)
    assert rep.extrapolated_value == pytest.approx(1 / math.sqrt(3), abs=5e-3)
    assert rep.passed
    assert traces.term_decay_exponent(traces.series_terms(1.0 / nm.a_tilde)) >= 1.0


def test_left_identity_independent_of_beta():
    reps = []
    for b in (PI / 3, 2 * PI / 3):
        sp, nm = _solve(ZERO, PI / 4, b, 200)
        reps.append(traces.series_identity_a(sp, nm, PI / 4))
    gap = abs(reps[0].extrapolated_value - reps[1].extrapolated_value)
    assert gap <= 2 * max(r.tolerance for r in reps)


def test_extrapolation_stable_under_doubling():
    sp, nm = _solve(Potential.expression("sin(x)"), PI / 3, PI / 2, 400)
    half = traces.series_identity_a(sp.head(200), nm.head(200), PI / 3)
    full = traces.series_identity_a(sp, nm, PI / 3)
    assert abs(full.extrapolated_value - half.extrapolated_value) <= half.residual + half.tolerance
    assert abs(full.partial_sum - full.half_sum) < abs(half.partial_sum - half.half_sum)


def test_alpha_sweep_monotone():
    vals = []
    for a in (PI / 6, PI / 4, PI / 3, PI / 2, 2 * PI / 3):
        sp, nm = _solve(ZERO, a, PI / 2, 100)
        vals.append(traces.series_identity_a(sp, nm, a).extrapolated_value)
    assert all(y < x for x, y in zip(vals, vals[1:]))
