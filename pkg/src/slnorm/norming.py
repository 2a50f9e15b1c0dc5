"""Norming constants a_n, b_n, the multiplier c_n and their normalised forms.

a_n and b_n are squared L2 norms of phi_n and psi_n. The quadrature is
carried as an extra integrator state (integral of y**2), so it inherits
the adaptive mesh and the error control of the shooting solve.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import ivp
from .errors import DegenerateSamplingError
from .ivp import NORM2, Y

PI = math.pi
INTERIOR = PI * np.arange(1, 10) / 10.0  # matches spectrum.SAMPLE_GRID[1:-1]
MIN_USABLE = 3
# samples this close to a node of psi (relative to max|psi|) are too noisy for a ratio
NODE_TOL = 1e-6


@dataclass(frozen=True)
class NormingSet:
    alpha: float
    beta: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c_residual: np.ndarray
    proportionality: np.ndarray

    @property
    def a_tilde(self):
        return self.a / math.sin(self.alpha) ** 2

    @property
    def b_tilde(self):
        return self.b / math.sin(self.beta) ** 2

    @property
    def count(self):
        return self.a.size

    def head(self, k):
        if not 1 <= k <= self.count:
            raise ValueError(f"cannot take {k} of {self.count} norming constants")
        return replace(self, a=self.a[:k], b=self.b[:k], c=self.c[:k], c_residual=self.c_residual[:k],
                       proportionality=self.proportionality[:k])

    def closure_residual(self):
        """|b~_n - a~_n sin^2(alpha) / (c_n^2 sin^2(beta))| / b~_n per index."""
        chain = self.a_tilde * math.sin(self.alpha) ** 2 / (self.c ** 2 * math.sin(self.beta) ** 2)
        return np.abs(self.b_tilde - chain) / self.b_tilde


def norming_a(potential, record, alpha, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL):
    """a_n = integral of phi_n**2 over [0, pi]."""
    ivp.check_angle("alpha", alpha)
    _, end = ivp.shoot_phi(potential, [record.mu], alpha, rtol=rtol, atol=atol)
    return float(end[0, NORM2])


def norming_b(potential, record, beta, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL):
    """b_n = integral of psi_n**2 over [0, pi]."""
    ivp.check_angle("beta", beta)
    _, norm2 = ivp.shoot_psi(potential, [record.mu], beta, rtol=rtol, atol=atol)
    return float(norm2[0])


def _ratio_residual(phi, psi, c):
    """Max relative deviation of phi/psi from c, skipping near-nodes of psi."""
    usable = np.abs(psi) >= NODE_TOL * np.max(np.abs(psi), axis=-1, keepdims=True)
    if np.any(usable.sum(axis=-1) < MIN_USABLE):
        raise DegenerateSamplingError("fewer than 3 sample points with psi away from zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.where(usable, np.abs(phi / psi - c[:, None]), 0.0)
    return np.max(dev, axis=-1) / np.abs(c)


def multiplier_c(potential, record, alpha, beta, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL):
    """c_n = phi(pi, mu_n) / sin(beta), from phi_n = c_n psi_n at x = pi."""
    ivp.check_angle("alpha", alpha)
    ivp.check_angle("beta", beta)
    _, end = ivp.shoot_phi(potential, [record.mu], alpha, rtol=rtol, atol=atol)
    return float(end[0, Y] / math.sin(beta))


def compute_norming(spectral, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL):
    """All norming data for a spectrum, in two batched solves."""
    alpha, beta = spectral.boundary.alpha, spectral.boundary.beta
    pot = spectral.potential
    mus = spectral.mus
    grid = np.concatenate(([0.0], INTERIOR, [PI]))
    if spectral.samples is not None and spectral.tolerances == (rtol, atol):
        # the eigenvalue search already sampled phi_n on this grid
        phi_s = spectral.samples
        phi_end = phi_s[:, -1, :]
    else:
        phi_s, phi_end = ivp.shoot_phi(pot, mus, alpha, grid, rtol=rtol, atol=atol)
    psi_s, b = ivp.shoot_psi(pot, mus, beta, grid, rtol=rtol, atol=atol)
    a = phi_end[:, NORM2]
    c = phi_end[:, Y] / math.sin(beta)
    phi_vals = phi_s[..., Y]
    psi_vals = psi_s[..., 0]
    resid = _ratio_residual(phi_vals[:, 1:-1], psi_vals[:, 1:-1], c)
    prop = np.max(np.abs(phi_vals - c[:, None] * psi_vals), axis=1) / np.max(np.abs(phi_vals), axis=1)
    return NormingSet(alpha, beta, a, b, c, resid, prop)


def verify_multiplier_identity(spectral, norms, count=None):
    """max_n |a_n + c_n Phi-dot(mu_n)| / a_n over the first ``count`` indices."""
    k = norms.count if count is None else min(count, norms.count)
    res = np.abs(norms.a[:k] + norms.c[:k] * spectral.phi_dots[:k]) / norms.a[:k]
    return float(np.max(res))
