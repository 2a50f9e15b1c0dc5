"""Phi-dot at eigenvalues from the spectrum alone, and recovery of b~_n.

For alpha, beta in (0, pi) the characteristic function factors as

    Phi(mu) = pi sin(alpha) sin(beta) (mu_0 - mu) prod_{k>=1} (mu_k - mu) / k^2

so Phi-dot(mu_n) is a product over the other eigenvalues. Combined with
a_n = -c_n Phi-dot(mu_n) this gives 1/b~_n from {mu_k} and a~_n only.

Products are accumulated as sums of logarithms with a separate sign. The
factors beyond the truncation K are modelled with mu_k = k^2 + d, d the
mean drift of the last quartile of computed eigenvalues, and their log is
summed in closed form through Hurwitz zeta values.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from . import traces

PI = math.pi


@dataclass(frozen=True)
class ProductReport:
    n: int
    K: int
    product_value: float
    corrected_value: float
    direct_value: float
    relative_error: float
    corrected_relative_error: float
    tail_factor_estimate: float


def _check(spectral, n, K):
    if K + 1 > spectral.count:
        raise ValueError(f"K={K} needs {K + 1} eigenvalues, only {spectral.count} available")
    if not 0 <= n < spectral.count:
        raise ValueError(f"index n={n} outside the computed spectrum")
    if K < 2 * n:
        raise ValueError(f"K={K} < 2n={2 * n}: truncation would drop the dominant factors")


def log_tail(c, K, tol=1e-18, max_terms=200):
    """log prod_{k>K} (1 - c/k^2) = -sum_j c^j zeta(2j, K+1) / j."""
    if abs(c) >= (K + 1) ** 2:
        raise ValueError("tail model needs |c| < (K+1)^2")
    total = 0.0
    for j in range(1, max_terms + 1):
        term = c ** j * zeta(2 * j, K + 1) / j
        total -= term
        if abs(term) <= tol * max(1.0, abs(total)):
            break
    return total


def log_product(mus, n, K):
    """(sign, log|.|) of prod_{k=1..K, k != n} (mu_k - mu_n) / k^2."""
    k = np.arange(1, K + 1)
    f = (mus[1:K + 1] - mus[n]) / k.astype(float) ** 2
    if 1 <= n <= K:
        f = np.delete(f, n - 1)
    sign = -1.0 if np.count_nonzero(f < 0) % 2 else 1.0
    return sign, math.fsum(np.log(np.abs(f)))


def _prefactor(mus, n, alpha, beta):
    base = -PI * math.sin(alpha) * math.sin(beta)
    if n == 0:
        return base
    return base * (mus[0] - mus[n]) / n ** 2


def product_phi_dot(spectral, alpha, beta, n, K):
    """Truncated product for Phi-dot(mu_n) against the variational value."""
    _check(spectral, n, K)
    mus = spectral.mus
    sign, logabs = log_product(mus, n, K)
    raw = _prefactor(mus, n, alpha, beta) * sign * math.exp(logabs)
    tail = math.exp(log_tail(mus[n] - spectral.drift(), K))
    corrected = raw * tail
    direct = spectral.records[n].phi_deriv_char
    return ProductReport(
        n=n,
        K=K,
        product_value=raw,
        corrected_value=corrected,
        direct_value=direct,
        relative_error=abs(raw - direct) / abs(direct),
        corrected_relative_error=abs(corrected - direct) / abs(direct),
        tail_factor_estimate=tail,
    )


def recover_b_tilde(spectral, norms, n, K, tail_correction=True):
    """1/b~_n from the eigenvalues and a~_n only.

    n = 0:  a~_0 / (pi^2 P_0^2)
    n >= 1: a~_n n^4 / (pi^2 (mu_0 - mu_n)^2 P_n^2)
    with P_n = prod_{k>=1, k != n} (mu_k - mu_n) / k^2.
    """
    _check(spectral, n, K)
    mus = spectral.mus
    _, logabs = log_product(mus, n, K)
    if tail_correction:
        logabs += log_tail(mus[n] - spectral.drift(), K)
    inv = norms.a_tilde[n] * math.exp(-2.0 * logabs) / PI ** 2
    if n:
        inv *= n ** 4 / (mus[0] - mus[n]) ** 2
    return float(inv)


def verify_remark_identity(spectral, norms, alpha, beta, N, K, tail_correction=True):
    """Right-endpoint series assembled from recovered 1/b~_n, n < N; target -cot(beta)."""
    inv = [recover_b_tilde(spectral, norms, n, K, tail_correction) for n in range(N)]
    return traces.extrapolate(traces.series_terms(inv), -1.0 / math.tan(beta))
