"""Eigenvalues of L(q, alpha, beta) as zeros of the characteristic function.

The n-th eigenvalue is the unique mu with theta(pi; mu) = theta_beta + n*pi,
where theta is the (scaled) Pruefer angle and theta_beta the angle of the
right boundary direction. That condition is monotone in mu, so a
safeguarded Newton iteration on it cannot lose or duplicate an index.
The root is then polished with Newton steps on Phi itself.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import ivp
from .errors import SearchError
from .ivp import NORM2, THETA, Y, YMU, YP, YPMU, BoundaryParams
from .potential import Potential

PI = math.pi
ROOT_TOL = 1e-10
SEARCH_RTOL = 1e-8
MAX_ITER = 200
# phi is recorded here during the final solve so norming can reuse it
SAMPLE_GRID = PI * np.arange(11) / 10.0


@dataclass(frozen=True)
class EigenRecord:
    n: int
    mu: float
    phi_deriv_char: float
    char_value: float = 0.0

    @property
    def lam(self):
        """|sqrt(mu)|; the root is imaginary when :attr:`imaginary` is set."""
        return math.sqrt(abs(self.mu))

    @property
    def imaginary(self):
        return self.mu < 0.0


@dataclass(frozen=True)
class SpectralData:
    boundary: BoundaryParams
    potential: Potential
    records: tuple
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    tolerances: tuple = (ivp.DEFAULT_RTOL, ivp.DEFAULT_ATOL)

    @property
    def count(self):
        return len(self.records)

    @property
    def mus(self):
        return np.array([r.mu for r in self.records])

    @property
    def phi_dots(self):
        return np.array([r.phi_deriv_char for r in self.records])

    def head(self, k):
        """The first ``k`` eigenvalues as their own :class:`SpectralData`."""
        if not 1 <= k <= self.count:
            raise ValueError(f"cannot take {k} of {self.count} eigenvalues")
        smp = None if self.samples is None else self.samples[:k]
        return replace(self, records=self.records[:k], samples=smp)

    def drift(self, quantile=0.75):
        """Mean of mu_k - k**2 over the last quartile of computed indices."""
        k = np.arange(self.count)
        tail = k[int(quantile * self.count):]
        if tail.size == 0:
            tail = k[-1:]
        return float(np.mean(self.mus[tail] - tail.astype(float) ** 2))


def root_residual(phi, dphi, mu):
    """|Phi| / max(1, |mu|), read as the relative Newton step once |Phi-dot| > 1.

    For deep negative mu, Phi-dot reaches 1e8 and |Phi| at the best float mu
    is set by integration noise in the growing mode, not by the root position.
    """
    return np.abs(phi) / (np.maximum(1.0, np.abs(mu)) * np.maximum(1.0, np.abs(dphi)))


def characteristic_phi(potential, mu, alpha, beta, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL):
    """Phi(mu) = phi(pi) cos(beta) + phi'(pi) sin(beta)."""
    ivp.check_angle("beta", beta)
    ivp.check_angle("alpha", alpha)
    _, end = ivp.shoot_phi(potential, [mu], alpha, rtol=rtol, atol=atol)
    return float(end[0, Y] * math.cos(beta) + end[0, YP] * math.sin(beta))


def characteristic_psi(potential, mu, alpha, beta, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL):
    """Psi(mu) = psi(0) cos(alpha) + psi'(0) sin(alpha); equals -Phi(mu)."""
    ivp.check_angle("beta", beta)
    ivp.check_angle("alpha", alpha)
    values, _ = ivp.shoot_psi(potential, [mu], beta, [0.0], rtol=rtol, atol=atol)
    psi, dpsi = values[0, 0]
    return float(psi * math.cos(alpha) + dpsi * math.sin(alpha))


def _char(end, beta):
    cb, sb = math.cos(beta), math.sin(beta)
    return end[:, Y] * cb + end[:, YP] * sb, end[:, YMU] * cb + end[:, YPMU] * sb


def _search_window(potential, alpha, beta, count):
    sup = potential.sup_abs
    ceiling = (count + 2) ** 2 + sup
    cot_a, cot_b = 1.0 / math.tan(alpha), 1.0 / math.tan(beta)
    floor = -4.0 * (1.0 + abs(cot_a) + abs(cot_b)) ** 2 - sup - 1.0
    return floor, ceiling


def _bracket_newton(potential, bp, n, mu, floor, ceiling, rtol, atol):
    """Safeguarded Newton on m(mu) = theta(pi; mu) - theta_beta - n*pi for all n at once."""
    scales = ivp.default_scales(mu)
    target = np.arctan2(scales * math.sin(bp.beta), -math.cos(bp.beta)) + n * PI
    lo = np.full(n.size, -np.inf)
    hi = np.full(n.size, np.inf)
    reach = np.maximum(1.0, 2.0 * n + 1.0)
    active = np.ones(n.size, dtype=bool)
    mu = mu.copy()
    for _ in range(MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        _, end = ivp.shoot_phi(potential, mu[idx], bp.alpha, scales=scales[idx], rtol=rtol, atol=atol)
        m = end[:, THETA] - target[idx]
        s = scales[idx]
        dm = s * end[:, NORM2] / (s * s * end[:, Y] ** 2 + end[:, YP] ** 2)
        below = m < 0
        lo[idx[below]] = np.maximum(lo[idx[below]], mu[idx[below]])
        hi[idx[~below]] = np.minimum(hi[idx[~below]], mu[idx[~below]])

        cur = mu[idx]
        new = cur - m / dm
        l, h = lo[idx], hi[idx]
        both = np.isfinite(l) & np.isfinite(h)
        outside = both & ((new <= l) | (new >= h) | ~np.isfinite(new))
        new[outside] = 0.5 * (l[outside] + h[outside])
        # one-sided: cap the excursion, doubling the cap while still unbracketed
        one = ~both
        r = reach[idx]
        new[one] = np.clip(np.where(np.isfinite(new[one]), new[one], cur[one] - np.sign(m[one]) * r[one]),
                           cur[one] - r[one], cur[one] + r[one])
        reach[idx[one]] *= 2.0
        stuck_hi = one & (cur >= ceiling) & below
        stuck_lo = one & (cur <= floor) & ~below
        if np.any(stuck_hi | stuck_lo):
            bad = idx[stuck_hi | stuck_lo][0]
            raise SearchError(f"eigenvalue {bad} not bracketed inside [{floor:.4g}, {ceiling:.4g}]")
        new = np.clip(new, floor, ceiling)

        scale = np.maximum(1.0, np.abs(cur))
        done = (np.abs(new - cur) <= 1e-12 * scale) | (both & (h - l <= 1e-12 * scale))
        done |= np.abs(new - cur) <= 10 * rtol * scale
        mu[idx] = new
        active[idx[done]] = False
    else:
        raise SearchError("Pruefer iteration did not converge")
    return mu, lo, hi


def _polish(potential, alpha, beta, mu, lo, hi, rtol, atol):
    """Newton on Phi at full accuracy, in place on ``mu``.

    Stops per index once the step stops shrinking (integration noise floor);
    steps leaving the Pruefer bracket are refused.
    """
    count = mu.size
    samples, end = ivp.shoot_phi(potential, mu, alpha, SAMPLE_GRID, rtol=rtol, atol=atol)
    phi, dphi = _char(end, beta)
    moving = np.ones(count, dtype=bool)
    prev = np.full(count, np.inf)
    for _ in range(MAX_ITER):
        scale = np.maximum(1.0, np.abs(mu))
        step = phi / dphi
        trial = mu - step
        moving &= (np.abs(step) > 1e-14 * scale) & (np.abs(step) <= 1e-4 * scale)
        moving &= np.abs(step) < 0.5 * prev
        moving &= ~(np.isfinite(lo) & (trial < lo - 1e-6 * scale))
        moving &= ~(np.isfinite(hi) & (trial > hi + 1e-6 * scale))
        idx = np.flatnonzero(moving)
        if idx.size == 0:
            break
        # an accepted step is always followed by a fresh evaluation at the new mu
        mu[idx] = trial[idx]
        prev = np.abs(step)
        smp, e = ivp.shoot_phi(potential, mu[idx], alpha, SAMPLE_GRID, rtol=rtol, atol=atol)
        samples[idx] = smp
        end[idx] = e
        phi[idx], dphi[idx] = _char(e, beta)
    return samples, end, phi, dphi


def find_eigenvalues(potential, alpha, beta, count, rtol=ivp.DEFAULT_RTOL, atol=ivp.DEFAULT_ATOL,
                     root_tol=ROOT_TOL):
    """The first ``count`` eigenvalues with Phi-dot from the variational solve."""
    if count < 1:
        raise ValueError("count must be >= 1")
    bp = BoundaryParams(alpha, beta)
    n = np.arange(count)
    drift = (2.0 / PI) * (1.0 / math.tan(beta) - 1.0 / math.tan(alpha) + 0.5 * potential.integral_to(PI))
    guess = n.astype(float) ** 2 + drift
    floor, ceiling = _search_window(potential, alpha, beta, count)
    guess = np.clip(guess, floor, ceiling)

    mu, lo, hi = _bracket_newton(potential, bp, n, guess, floor, ceiling, max(rtol, SEARCH_RTOL), atol)

    samples, end, phi, dphi = _polish(potential, alpha, beta, mu, lo, hi, rtol, atol)
    bad = root_residual(phi, dphi, mu) > root_tol
    if np.any(bad):
        # the search-tolerance bracket can sit on the wrong side of the root by
        # more than the polish slack; redo those indices at full accuracy
        idx = np.flatnonzero(bad)
        mu[idx], lo[idx], hi[idx] = _bracket_newton(potential, bp, n[idx], mu[idx], floor, ceiling, rtol, atol)
        m, l, h = mu[idx], lo[idx], hi[idx]
        samples[idx], end[idx], phi[idx], dphi[idx] = _polish(potential, alpha, beta, m, l, h, rtol, atol)
        mu[idx] = m
    bad = root_residual(phi, dphi, mu) > root_tol
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise SearchError(f"eigenvalue {k}: |Phi| = {abs(phi[k]):.3e} above root tolerance")

    scales = ivp.default_scales(mu)
    theta_beta = np.arctan2(scales * math.sin(beta), -math.cos(beta))
    # end was computed with default scales at the final mu
    index = np.rint((end[:, THETA] - theta_beta) / PI).astype(int)
    # a tight Pruefer bracket around mu certifies the index even where theta(pi)
    # jumps by pi within one ulp of mu (eigenfunction below integration noise at pi)
    scale = np.maximum(1.0, np.abs(mu))
    certified = (np.isfinite(lo) & np.isfinite(hi) & (hi - lo <= 1e-6 * scale)
                 & (mu >= lo - 1e-6 * scale) & (mu <= hi + 1e-6 * scale))
    if np.any((index != n) & ~certified):
        k = int(np.flatnonzero((index != n) & ~certified)[0])
        raise SearchError(f"eigenvalue {k} landed on Pruefer index {index[k]}")
    if np.any(np.diff(mu) <= 0):
        raise SearchError("eigenvalues are not strictly increasing")
    flat = np.abs(dphi) < 1e-6 * np.maximum(1.0, np.abs(mu))
    if np.any(flat):
        k = int(np.flatnonzero(flat)[0])
        raise SearchError(f"eigenvalue {k}: Phi-dot = {dphi[k]:.3e} too small for a simple root")
    records = tuple(EigenRecord(int(k), float(m), float(d), float(f)) for k, m, d, f in zip(n, mu, dphi, phi))
    return SpectralData(bp, potential, records, samples, (rtol, atol))


def verify_reflection_symmetry(potential, alpha, beta, count, **kw):
    """max_n |mu_n(q*, pi - beta, pi - alpha) - mu_n(q, alpha, beta)| / (1 + |mu_n|)."""
    direct = find_eigenvalues(potential, alpha, beta, count, **kw).mus
    refl = BoundaryParams(alpha, beta).reflected()
    mirrored = find_eigenvalues(potential.reflect(), refl.alpha, refl.beta, count, **kw).mus
    return float(np.max(np.abs(mirrored - direct) / (1.0 + np.abs(direct))))
