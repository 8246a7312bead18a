"""VC-dimension estimate, Sauer growth bound and the complexity-dependent rate.

Everything is computed in the log domain so that sample sizes in the
millions and networks with tens of thousands of weights stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

LN2 = math.log(2.0)
LN4 = math.log(4.0)


@dataclass(frozen=True)
class CapacityParams:
    n_inputs: int
    n_outputs: int
    alpha: float = 1.0
    delta: float = 0.05
    n_examples: int = 1

    def __post_init__(self):
        if self.n_inputs < 1 or self.n_outputs < 1:
            raise ValueError("n_inputs and n_outputs must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.n_examples < 1:
            raise ValueError("n_examples must be >= 1")


@dataclass(frozen=True)
class CapacityReport:
    theta: int
    weight_count: int
    vc_dim: int
    log_growth_2N: float
    deviation: float
    lam: float


def weight_count(i: int, o: int, h: int) -> int:
    """Number of weights, biases included, of an ``i``-``h``-``o`` network."""
    if min(i, o, h) < 1:
        raise ValueError("layer sizes must be >= 1")
    return (i + 1) * h + (h + 1) * o


def vc_dimension(w: int) -> int:
    """``floor(w * log2(w))``, at least 1."""
    if w < 2:
        raise ValueError(f"weight count must be >= 2, got {w}")
    # exact for powers of two, where float log2 is exact
    return max(1, int(math.floor(w * math.log2(w))))


def log_growth(q: int, d: int) -> float:
    """Natural log of the Sauer bound ``sum_{i<=min(d,q)} C(q, i)`` on ``q`` points."""
    if q < 1 or d < 0:
        raise ValueError("need q >= 1 and d >= 0")
    if d >= q:
        return q * LN2
    if 2 * d < q:
        i = np.arange(d + 1, dtype=np.float64)
        return float(logsumexp(gammaln(q + 1.0) - gammaln(i + 1.0) - gammaln(q - i + 1.0)))
    # near full shattering: subtract the upper tail from 2**q so the result stays <= q ln 2
    i = np.arange(d + 1, q + 1, dtype=np.float64)
    log_tail = logsumexp(gammaln(q + 1.0) - gammaln(i + 1.0) - gammaln(q - i + 1.0))
    return float(q * LN2 + math.log1p(-math.exp(log_tail - q * LN2)))


def deviation_term(params: CapacityParams, theta: int) -> float:
    """``sqrt((8/N) * ln(4 * m(2N) / delta))`` for the width-``theta`` network."""
    return capacity_report(params, theta).deviation


def lambda_of_theta(params: CapacityParams, theta: int) -> float:
    return params.alpha * deviation_term(params, theta)


def capacity_report(params: CapacityParams, theta: int) -> CapacityReport:
    w = weight_count(params.n_inputs, params.n_outputs, int(theta))
    d = vc_dimension(w)
    N = params.n_examples
    L = log_growth(2 * N, d)
    dev = math.sqrt((8.0 / N) * (LN4 + L - math.log(params.delta)))
    return CapacityReport(int(theta), w, d, L, dev, params.alpha * dev)
