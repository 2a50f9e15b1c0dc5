"""Gelfand-Levitan kernels on a uniform triangular mesh.

The input kernel is the truncated spectral sum

    F(x, t) = sum_n [ C_n(x) C_n(t) / a~_n - cos(n x) cos(n t) / a0_n ]

with C_n(x) = cos(lambda_n x) (cosh for negative mu_n), a0_0 = pi and
a0_n = pi/2. For each mesh row x_i the equation

    G(x, t) + F(x, t) + int_0^x G(x, s) F(s, t) ds = 0,   0 <= t <= x

is discretised with trapezoid weights on [0, x_i] (Nystrom) and solved
as a dense linear system.
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import ivp, traces
from .ivp import Y

log = logging.getLogger(__name__)

PI = math.pi
COND_LIMIT = 1e12


@dataclass(frozen=True)
class KernelGrid:
    """F and G on the mesh; G is meaningful only on and below the diagonal."""

    mesh: np.ndarray
    F: np.ndarray
    n_modes: int
    alpha: float
    beta: float
    G: Optional[np.ndarray] = None
    row_cond: Optional[np.ndarray] = None
    ill_conditioned: tuple = ()

    @property
    def M(self):
        return self.mesh.size - 1

    @property
    def step(self):
        return PI / self.M


def uniform_mesh(M):
    if M < 1:
        raise ValueError("mesh needs at least one interval")
    return PI * np.arange(M + 1) / M


def reference_norms(n_modes):
    """a0_n of the q = 0 Neumann problem, as reciprocals."""
    inv = np.full(n_modes, 2.0 / PI)
    inv[0] = 1.0 / PI
    return inv


def build_F(spectral, norms, M=None, n_modes=None):
    """Truncated F on the mesh with ``M`` intervals (default ``n_modes // 2``)."""
    n_modes = spectral.count if n_modes is None else n_modes
    if n_modes > min(spectral.count, norms.count):
        raise ValueError(f"n_modes={n_modes} exceeds the {spectral.count} available eigenvalues")
    M = max(1, n_modes // 2) if M is None else M
    x = uniform_mesh(M)
    mus = spectral.mus[:n_modes]
    inv_tilde = 1.0 / norms.a_tilde[:n_modes]
    U = ivp.cos_lambda(x[:, None], mus[None, :])
    V = np.cos(x[:, None] * np.arange(n_modes)[None, :])
    F = (U * inv_tilde) @ U.T - (V * reference_norms(n_modes)) @ V.T
    F = 0.5 * (F + F.T)
    # corner uses the series module's compensated sum so both agree bit for bit
    F[0, 0] = math.fsum(traces.series_terms(inv_tilde))
    return KernelGrid(x, F, n_modes, spectral.boundary.alpha, spectral.boundary.beta)


def trapezoid_weights(i, h):
    w = np.full(i + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def solve_G(grid):
    """Nystrom solve of the integral equation row by row."""
    M = grid.M
    h = grid.step
    F = grid.F
    G = np.zeros_like(F)
    cond = np.ones(M + 1)
    G[0, 0] = -F[0, 0]
    bad = []
    for i in range(1, M + 1):
        w = trapezoid_weights(i, h)
        A = np.eye(i + 1) + F[: i + 1, : i + 1] * w[None, :]
        G[i, : i + 1] = np.linalg.solve(A, -F[i, : i + 1])
        cond[i] = np.linalg.cond(A)
        if cond[i] > COND_LIMIT:
            bad.append(i)
    if bad:
        log.warning("Gelfand-Levitan rows %s have condition above %.0e", bad, COND_LIMIT)
    return replace(grid, G=G, row_cond=cond, ill_conditioned=tuple(bad))


def diagonal_target(potential, alpha, mesh):
    """-cot(alpha) + (1/2) int_0^x q."""
    run = np.array([potential.integral_to(float(min(x, PI))) for x in mesh])
    return -1.0 / math.tan(alpha) + 0.5 * run


def diagonal_error(grid, potential, alpha):
    """|G(x_i, x_i) - (-cot(alpha) + (1/2) int_0^x_i q)| at every mesh point."""
    if grid.G is None:
        raise ValueError("solve_G has not been run on this grid")
    return np.abs(np.diag(grid.G) - diagonal_target(potential, alpha, grid.mesh))


def verify_diagonal(grid, potential, alpha, include_corner=False):
    """max_x |G(x, x) - (-cot(alpha) + (1/2) int_0^x q)| over mesh points x < pi.

    At x = t = pi the spectral series for F sits on its jump at x + t = 2 pi
    and converges to the midpoint, so the error there is O(1) and does not
    shrink with N_modes. ``include_corner=True`` keeps that point anyway.
    """
    err = diagonal_error(grid, potential, alpha)
    return float(np.max(err if include_corner else err[:-1]))


def verify_transmutation(grid, potential, alpha, mu_probe):
    """max_x |phi~(x) - cos(lambda x) - int_0^x G(x, t) cos(lambda t) dt| at one probe mu."""
    if grid.G is None:
        raise ValueError("solve_G has not been run on this grid")
    x = grid.mesh
    states, _ = ivp.shoot_phi(potential, [mu_probe], alpha, x)
    phi_tilde = states[0, :, Y] / math.sin(alpha)
    c = ivp.cos_lambda(x, mu_probe)
    h = grid.step
    rhs = c.copy()
    for i in range(1, grid.M + 1):
        rhs[i] += trapezoid_weights(i, h) @ (grid.G[i, : i + 1] * c[: i + 1])
    return float(np.max(np.abs(phi_tilde - rhs)))


def dump_kernel(grid, path, which="G"):
    """Write the lower triangle of F or G, row-major.

    ``.npz`` gives a binary dump; anything else is CSV with a ``#`` header.
    """
    mat = grid.G if which == "G" else grid.F
    if mat is None:
        raise ValueError(f"{which} is not available on this grid")
    path = Path(path)
    header = f"M={grid.M} N_modes={grid.n_modes} alpha={grid.alpha!r} beta={grid.beta!r} kernel={which}"
    tri = [mat[i, : i + 1] for i in range(grid.M + 1)]
    if path.suffix == ".npz":
        np.savez(path, header=header, lower=np.concatenate(tri), mesh=grid.mesh)
        return path
    with path.open("w") as fh:
        fh.write(f"# {header}\n")
        for row in tri:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return path
