"""Initial-value problems for -y'' + q y = mu y on [0, pi].

All integration goes through the compiled DOP853 kernel in
:mod:`slnorm._kernel`, which carries y, y', the mu-derivative pair, the
running integral of y**2 and a scaled Pruefer angle in one pass. The
solution psi fixed at x = pi is obtained by integrating the reflected
problem forward, since u(s) = psi(pi - s) solves the equation with
q(pi - s) and starts from (sin beta, cos beta).
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernel
from .errors import DomainError, IntegrationError

PI = math.pi
DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-14
MAX_STEPS = 2_000_000

Y, YP, YMU, YPMU, NORM2, THETA = range(6)


@dataclass(frozen=True)
class BoundaryParams:
    """Robin angles; both must lie strictly inside (0, pi)."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and 0.0 < val < PI):
                raise DomainError(f"{name} must lie in open interval (0, pi), got {val!r}")

    def reflected(self):
        """Angles of the reflected problem: (pi - beta, pi - alpha)."""
        return BoundaryParams(PI - self.beta, PI - self.alpha)


@dataclass(frozen=True)
class SolutionSample:
    x: float
    y: float
    yprime: float
    y_mu: Optional[float] = None
    yprime_mu: Optional[float] = None


def check_angle(name, value):
    if not 0.0 < value < PI:
        raise DomainError(f"{name} must lie in open interval (0, pi), got {value!r}")


def default_scales(mus):
    """Pruefer scale S = sqrt(max(|mu|, 1)); keeps theta' close to constant."""
    return np.sqrt(np.maximum(np.abs(np.asarray(mus, dtype=float)), 1.0))


def cos_lambda(t, mu):
    """cos(sqrt(mu) t), continued as cosh(sqrt(-mu) t) for mu < 0.

    This is the even entire function sum_k (-mu)^k t^(2k) / (2k)!.
    """
    t, mu = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(mu, dtype=float))
    arg = np.sqrt(np.abs(mu)) * t
    out = np.array(np.cos(arg))
    neg = mu < 0.0
    out[neg] = np.cosh(arg[neg])
    return out


def _output_grid(xs):
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size and (np.any(~np.isfinite(xs)) or xs.min() < 0.0 or xs.max() > PI):
        raise DomainError("output points must lie in [0, pi]")
    grid = np.unique(np.concatenate((xs, [PI])))
    return xs, grid


def integrate(potential, mus, y0, yp0, xs=(), scales=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Shoot from x = 0 for every value in ``mus``.

    ``y0``, ``yp0`` are initial values (scalars or one per mu). Returns an
    array of shape ``(len(mus), len(xs), 6)`` holding the full state at
    each requested point, in the order given, plus the state at pi as a
    second array of shape ``(len(mus), 6)``.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    if np.any(~np.isfinite(mus)):
        raise DomainError("mu must be finite")
    nb = mus.size
    scales = default_scales(mus) if scales is None else np.broadcast_to(np.asarray(scales, float), (nb,))
    if np.any(scales <= 0):
        raise DomainError("Pruefer scale must be positive")
    xs, grid = _output_grid(xs)
    state0 = np.zeros((nb, 6))
    state0[:, Y] = y0
    state0[:, YP] = yp0
    state0[:, THETA] = np.arctan2(scales * state0[:, Y], state0[:, YP])
    breaks, coef = potential.table
    out, status, x_fail, _ = _kernel.shoot_batch(
        mus, np.ascontiguousarray(scales, dtype=float), state0, grid, PI, breaks, coef,
        float(rtol), float(atol), MAX_STEPS,
        _kernel.A, _kernel.B, _kernel.C, _kernel.E3, _kernel.E5,
    )
    bad = np.flatnonzero(status)
    if bad.size:
        b = bad[0]
        reason = "step-size underflow" if status[b] == _kernel.STEP_UNDERFLOW else "step budget exhausted"
        raise IntegrationError(f"{reason} at x={x_fail[b]:.6g} for mu={mus[b]:.10g}", location=float(x_fail[b]))
    idx = np.searchsorted(grid, xs)
    return out[:, idx, :], out[:, -1, :]


def shoot_phi(potential, mus, alpha, xs=(), scales=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """phi(x, mu, alpha): phi(0) = sin(alpha), phi'(0) = -cos(alpha)."""
    return integrate(potential, mus, math.sin(alpha), -math.cos(alpha), xs, scales, rtol, atol)


def shoot_psi(potential, mus, beta, xs=(), rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """psi(x, mu, beta) through the reflected problem.

    Returns ``(values, norm2)``: ``values[b, j] = (psi, psi')`` at ``xs[j]``
    and ``norm2[b]`` the integral of psi**2 over [0, pi].
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if xs.size and (np.any(~np.isfinite(xs)) or xs.min() < 0.0 or xs.max() > PI):
        raise DomainError("output points must lie in [0, pi]")
    # clamp keeps pi - (pi - x) inside [0, pi] after rounding
    s = np.clip(PI - xs, 0.0, PI)
    samples, end = integrate(potential.reflect(), mus, math.sin(beta), math.cos(beta), s, None, rtol, atol)
    values = np.stack((samples[..., Y], -samples[..., YP]), axis=-1)
    return values, end[:, NORM2]


def _samples(xs, states, with_mu):
    rows = []
    for x, st in zip(xs, states):
        if with_mu:
            rows.append(SolutionSample(float(x), float(st[Y]), float(st[YP]), float(st[YMU]), float(st[YPMU])))
        else:
            rows.append(SolutionSample(float(x), float(st[Y]), float(st[YP])))
    return rows


def _check_increasing(xs):
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(np.diff(xs) < 0):
        raise DomainError("output grid must be increasing")
    return xs


def solve_phi(potential, mu, alpha, xs, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Samples of phi and phi' at the increasing grid ``xs``."""
    check_angle("alpha", alpha)
    xs = _check_increasing(xs)
    states, _ = shoot_phi(potential, [mu], alpha, xs, rtol=rtol, atol=atol)
    return _samples(xs, states[0], False)


def solve_phi_with_mu_derivative(potential, mu, alpha, xs, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Like :func:`solve_phi` with dphi/dmu and dphi'/dmu populated.

    v = dphi/dmu solves -v'' + q v = mu v + phi, v(0) = v'(0) = 0.
    """
    check_angle("alpha", alpha)
    xs = _check_increasing(xs)
    states, _ = shoot_phi(potential, [mu], alpha, xs, rtol=rtol, atol=atol)
    return _samples(xs, states[0], True)


def solve_psi(potential, mu, beta, xs, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Samples of psi, integrated backward from psi(pi) = sin(beta), psi'(pi) = -cos(beta)."""
    check_angle("beta", beta)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    values, _ = shoot_psi(potential, [mu], beta, xs, rtol=rtol, atol=atol)
    return [SolutionSample(float(x), float(v[0]), float(v[1])) for x, v in zip(xs, values[0])]


def prufer_angle(potential, mu, alpha, scale=1.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """theta(pi; mu) for theta' = S cos^2 + (mu - q)/S sin^2 started on (phi(0), phi'(0)).

    With the default ``scale`` S = 1 this is the classical Pruefer angle.
    Zeros of phi sit exactly at multiples of pi for every S > 0.
    """
    check_angle("alpha", alpha)
    _, end = shoot_phi(potential, [mu], alpha, scales=[scale], rtol=rtol, atol=atol)
    return float(end[0, THETA])


def boundary_angle(beta, scale=1.0):
    """Angle in (0, pi) of the direction (S sin(beta), -cos(beta)) satisfying the right condition."""
    return math.atan2(scale * math.sin(beta), -math.cos(beta))
