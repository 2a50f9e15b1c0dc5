"""Shared test corpus, cached spectra and independent oracles."""

import functools
import math
import time

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from slnorm import norming, spectrum
from slnorm.potential import Potential

PI = math.pi

POTENTIALS = {
    "zero": {"kind": "zero"},
    "const1": {"kind": "constant", "value": 1.0},
    "sin": {"kind": "expression", "body": "sin(x)"},
    "parabola": {"kind": "polynomial", "coeffs": [0.0, PI, -1.0]},
}
ANGLES = {"pi/6": PI / 6, "pi/3": PI / 3, "pi/2": PI / 2, "3pi/4": 3 * PI / 4}

# criterion-2 corpus is computed once with enough eigenvalues for the
# doubled Gelfand-Levitan truncation (800) and the K = 800 products
WIDE = 802
NARROW = 400


def potential(name, reflected=False):
    p = Potential.from_config(POTENTIALS[name])
    return p.reflect() if reflected else p


@functools.lru_cache(maxsize=None)
def solved(name, alpha, beta, count, reflected=False):
    """(spectral, norms, seconds) for a corpus problem; cached for the session."""
    t0 = time.perf_counter()
    sp = spectrum.find_eigenvalues(potential(name, reflected), alpha, beta, count)
    nm = norming.compute_norming(sp)
    return sp, nm, time.perf_counter() - t0


def left_corpus():
    """q x alpha with beta = pi/2."""
    return [(q, a) for q in POTENTIALS for a in ANGLES]


# -- oracles ------------------------------------------------------------

def free_eigenvalues(alpha, beta, count):
    """Eigenvalues for q = 0 by bracketing the closed-form characteristic function.

    phi = sin(a) cos(lx) - cos(a) sin(lx)/l, and Phi = phi(pi) cos(b) + phi'(pi) sin(b).
    Negative mu are handled with the hyperbolic continuation.
    """
    sa, ca, sb, cb = math.sin(alpha), math.cos(alpha), math.sin(beta), math.cos(beta)

    def char(mu):
        if mu > 0:
            l = math.sqrt(mu)
            p = sa * math.cos(l * PI) - ca * math.sin(l * PI) / l
            dp = -sa * l * math.sin(l * PI) - ca * math.cos(l * PI)
        elif mu < 0:
            k = math.sqrt(-mu)
            p = sa * math.cosh(k * PI) - ca * math.sinh(k * PI) / k
            dp = sa * k * math.sinh(k * PI) - ca * math.cosh(k * PI)
        else:
            p = sa - ca * PI
            dp = -ca
        return p * cb + dp * sb

    # any negative eigenvalue lies above -(|cot a| + |cot b|)^2 - 1
    low = -(abs(ca / sa) + abs(cb / sb)) ** 2 - 1.0
    grid = np.concatenate((np.linspace(min(low, -30.0), 0.0, 3001)[:-1], np.linspace(0.0, (count + 2) ** 2, 40 * (count + 2) ** 2)))
    vals = np.array([char(m) for m in grid])
    roots = []
    for i in range(grid.size - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(char, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
        if len(roots) == count:
            break
    return np.array(roots)


def fd_eigenvalues(pot, alpha, beta, count, interior=1000):
    """Second-order finite differences with Robin ghost rows, symmetrised.

    Unknowns sit at x_0 = 0, ..., x_{m+1} = pi with m interior points; the
    boundary rows eliminate a ghost node through y' = -cot(.) y, and a
    diagonal similarity with weights 1/sqrt(2) at both ends makes the
    matrix symmetric so a tridiagonal eigensolver applies.
    """
    m = interior
    h = PI / (m + 1)
    x = np.linspace(0.0, PI, m + 2)
    q = np.asarray(pot(x), dtype=float) * np.ones_like(x)
    d = 2.0 / h ** 2 + q
    d[0] -= 2.0 / (h * math.tan(alpha))
    d[-1] += 2.0 / (h * math.tan(beta))
    e = np.full(m + 1, -1.0 / h ** 2)
    e[0] *= math.sqrt(2.0)
    e[-1] *= math.sqrt(2.0)
    return eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1), eigvals_only=True)


def rk4(f, y0, x0, x1, steps):
    """Classical fixed-step RK4, kept deliberately simple."""
    y = np.array(y0, dtype=float)
    h = (x1 - x0) / steps
    x = x0
    for _ in range(steps):
        k1 = f(x, y)
        k2 = f(x + h / 2, y + h / 2 * k1)
        k3 = f(x + h / 2, y + h / 2 * k2)
        k4 = f(x + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x = x0 + (_ + 1) * h
    return y
