import math

import numpy as np
import pytest

from slnorm import glk, norming, spectrum, traces
from slnorm.potential import Potential

PI = math.pi
ZERO = Potential.zero()


def _grid(pot, a, b, n_modes, M=None, count=None):
    sp = spectrum.find_eigenvalues(pot, a, b, count or n_modes)
    nm = norming.compute_norming(sp)
    return sp, nm, glk.solve_G(glk.build_F(sp, nm, M=M, n_modes=n_modes))


def test_identity_case_vanishes():
    _, _, g = _grid(ZERO, PI / 2, PI / 2, 40)
    assert np.max(np.abs(g.F)) <= 1e-10
    assert np.max(np.abs(g.G)) <= 1e-10
    assert glk.verify_diagonal(g, ZERO, PI / 2, include_corner=True) <= 1e-10
    assert glk.verify_transmutation(g, ZERO, PI / 2, 3.3) <= 1e-9


def test_corner_and_symmetry():
    sp, nm, g = _grid(Potential.expression("sin(x)"), PI / 3, PI / 2, 60, M=30)
    assert np.array_equal(g.F, g.F.T)
    assert g.G[0, 0] == -g.F[0, 0]
    assert g.F[0, 0] == math.fsum(traces.series_terms(1.0 / nm.a_tilde))
    assert abs(-g.G[0, 0] - traces.series_identity_a(sp, nm, PI / 3).partial_sum) <= 1e-12
    assert np.all(np.triu(g.G, 1) == 0)


def test_default_mesh_and_bounds():
    sp = spectrum.find_eigenvalues(ZERO, PI / 3, PI / 2, 20)
    nm = norming.compute_norming(sp)
    g = glk.build_F(sp, nm)
    assert g.M == 10 and g.n_modes == 20
    with pytest.raises(ValueError):
        glk.build_F(sp, nm, n_modes=21)
    with pytest.raises(ValueError):
        glk.verify_diagonal(g, ZERO, PI / 3)


def test_free_diagonal_flat_away_from_corner():
    _, _, g = _grid(ZERO, PI / 3, PI / 2, 400, M=200)
    err = glk.diagonal_error(g, ZERO, PI / 3)
    # away from x = pi the error is small and flat
    assert np.max(err[:190]) <= 1e-2
    assert glk.verify_transmutation(g, ZERO, PI / 3, 4.0) <= 2e-2


def test_transmutation_constant_potential_first_order():
    p = Potential.constant(1.0)
    sp = spectrum.find_eigenvalues(p, PI / 2, PI / 2, 400)
    nm = norming.compute_norming(sp)
    res = [glk.verify_transmutation(glk.solve_G(glk.build_F(sp.head(n), nm.head(n), M=100)), p, PI / 2, 1.0)
           for n in (200, 400)]
    assert 0.4 <= res[1] / res[0] <= 0.6


def test_truncation_ladder():
    sp = spectrum.find_eigenvalues(ZERO, PI / 4, PI / 2, 400)
    nm = norming.compute_norming(sp)
    res = []
    for n_modes in (100, 200, 400):
        g = glk.solve_G(glk.build_F(sp.head(n_modes), nm.head(n_modes), M=100))
        res.append(glk.verify_diagonal(g, ZERO, PI / 4))
    assert all(b <= 1.2 * a for a, b in zip(res, res[1:]))


def test_corner_is_a_jump():
    """At x = t = pi the series sits on its jump; the error there does not shrink."""
    sp = spectrum.find_eigenvalues(ZERO, PI / 3, PI / 2, 200)
    nm = norming.compute_norming(sp)
    c = [glk.diagonal_error(glk.solve_G(glk.build_F(sp.head(n), nm.head(n), M=50)), ZERO, PI / 3)[-1]
         for n in (100, 200)]
    assert c[1] > 0.5 * c[0] > 0.1


def test_dump(tmp_path):
    _, _, g = _grid(ZERO, PI / 3, PI / 2, 20, M=8)
    path = glk.dump_kernel(g, tmp_path / "g.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# M=8 N_modes=20")
    assert len(lines) == 10 and len(lines[-1].split(",")) == 9
    assert float(lines[1]) == g.G[0, 0]
    npz = np.load(glk.dump_kernel(g, tmp_path / "f.npz", which="F"))
    assert npz["lower"].size == 9 * 10 // 2
