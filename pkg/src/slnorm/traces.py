"""Regularised series of inverse norming constants.

    1/a~_0 - 1/pi + sum_{n>=1} (1/a~_n - 2/pi) = cot(alpha)
    1/b~_0 - 1/pi + sum_{n>=1} (1/b~_n - 2/pi) = -cot(beta)

Only finitely many terms are available, so the tail is estimated from
the partial sums S_{N/4}, S_{N/2}, S_N assuming algebraic decay of the
differences (Richardson extrapolation with a fitted exponent).
"""

import math
from dataclasses import dataclass

import numpy as np

PI = math.pi
TOL_FLOOR = 5e-3


@dataclass(frozen=True)
class SeriesReport:
    n_terms: int
    partial_sum: float
    tail_estimate: float
    extrapolated_value: float
    target: float
    residual: float
    method: str
    decay_exponent: float
    half_sum: float
    quarter_sum: float

    @property
    def extrapolated(self):
        return self.method == "richardson"

    @property
    def tolerance(self):
        """max(5e-3, 3 |S_N - S_{N/2}|)."""
        return max(TOL_FLOOR, 3.0 * abs(self.partial_sum - self.half_sum))

    @property
    def passed(self):
        return self.residual <= self.tolerance


def series_terms(inverse_norms):
    """Regularised terms 1/x_0 - 1/pi, 1/x_n - 2/pi from the inverses 1/x_n."""
    inv = np.asarray(inverse_norms, dtype=float)
    t = inv - 2.0 / PI
    t[0] = inv[0] - 1.0 / PI
    return t


def extrapolate(terms, target):
    """Sum ``terms`` and estimate the tail; returns a :class:`SeriesReport`."""
    terms = np.asarray(terms, dtype=float)
    n = terms.size
    if n < 4:
        raise ValueError("need at least 4 terms to extrapolate")
    s_n = math.fsum(terms)
    s_half = math.fsum(terms[: n // 2])
    s_quarter = math.fsum(terms[: n // 4])
    d1 = s_half - s_quarter
    d2 = s_n - s_half
    noise = 1e-13 * (1.0 + math.fsum(np.abs(terms)))
    exponent = float("nan")
    if abs(d1) <= noise and abs(d2) <= noise:
        method, value = "converged", s_n
    elif d1 * d2 > 0 and abs(d2) < abs(d1):
        ratio = d1 / d2
        exponent = math.log2(ratio)
        method, value = "richardson", s_n + d2 / (ratio - 1.0)
    else:
        method, value = "raw", s_n
    return SeriesReport(
        n_terms=n,
        partial_sum=s_n,
        tail_estimate=value - s_n,
        extrapolated_value=value,
        target=target,
        residual=abs(value - target),
        method=method,
        decay_exponent=exponent,
        half_sum=s_half,
        quarter_sum=s_quarter,
    )


def series_identity_a(spectral, norms, alpha):
    """Left-endpoint identity, target cot(alpha)."""
    return extrapolate(series_terms(1.0 / norms.a_tilde), 1.0 / math.tan(alpha))


def series_identity_b(spectral, norms, beta):
    """Right-endpoint identity, target -cot(beta)."""
    return extrapolate(series_terms(1.0 / norms.b_tilde), -1.0 / math.tan(beta))


def term_decay_exponent(terms):
    """Slope p of log|t_n| ~ -p log n, fitted over n in [N/4, N)."""
    terms = np.asarray(terms, dtype=float)
    n = np.arange(terms.size)
    sel = (n >= max(1, terms.size // 4)) & (np.abs(terms) > 0)
    slope = np.polyfit(np.log(n[sel]), np.log(np.abs(terms[sel])), 1)[0]
    return float(-slope)
