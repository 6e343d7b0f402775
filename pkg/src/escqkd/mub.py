"""Closed-form analytics for k mutually unbiased bases under intercept/resend.

Eve measures a fraction q of signals in one of the k bases chosen at random.
She learns Alice's letter exactly when her basis matches Alice's, and nothing
otherwise, so I(A:E) = (q/k) log d. Bob's sifted error rate is
q (k-1)(d-1)/(kd).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .protocol import AttackSummary
from .qcore import TripartiteDistribution, ValidationError


@dataclass(frozen=True)
class MubParams:
    d: int
    k: int

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError(f"dimension must be at least 2, got {self.d}")
        if not 2 <= self.k <= self.d + 1:
            raise ValidationError(f"basis count k must lie in [2, {self.d + 1}], got {self.k}")


@dataclass(frozen=True)
class MubSummary:
    i_ab: float
    i_ae: float
    sift: float
    r: float


@dataclass(frozen=True)
class MubThreshold:
    p_e_star: float
    r_star: float
    rate_max: float

    def as_dict(self) -> dict:
        return {"p_e_star": self.p_e_star, "r_star": self.r_star, "rate_max": self.rate_max}


def mub_full_intercept_error(p: MubParams) -> float:
    return (p.k - 1) * (p.d - 1) / (p.k * p.d)


def _xlog2x(x: float) -> float:
    return x * math.log2(x) if x > 0 else 0.0


def mub_mutual_information(d: int, p_e: float) -> float:
    """I(A:B) of a d-ary symmetric channel with total error p_e."""
    return math.log2(d) + _xlog2x(1 - p_e) + (p_e * math.log2(p_e / (d - 1)) if p_e > 0 else 0.0)


def mub_summary(p: MubParams, p_e: float) -> MubSummary:
    top = mub_full_intercept_error(p)
    if not 0 <= p_e <= top + 1e-15:
        raise ValidationError(f"error probability {p_e} outside [0, {top}] for d={p.d}, k={p.k}")
    d, k = p.d, p.k
    return MubSummary(
        i_ab=mub_mutual_information(d, p_e),
        i_ae=d * p_e * math.log2(d) / ((d - 1) * (k - 1)),
        sift=1.0 / k,
        r=p_e * d / (d - 1),
    )


def mub_threshold(p: MubParams, tol: float = 1e-12) -> MubThreshold:
    """Error rate where I(A:B) = I(A:E), found by bisection."""
    lo, hi = 0.0, mub_full_intercept_error(p)

    def gap(x):
        s = mub_summary(p, x)
        return s.i_ab - s.i_ae

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    p_e = 0.5 * (lo + hi)
    return MubThreshold(p_e_star=p_e, r_star=p_e * p.d / (p.d - 1), rate_max=math.log2(p.d) / p.k)


def mub_attack_summary(p: MubParams, q: float) -> AttackSummary:
    """Sift, agreement and Eve-agreement probabilities at interception fraction q."""
    if not 0 <= q <= 1:
        raise ValidationError(f"interception fraction q must lie in [0, 1], got {q}")
    k = p.k
    return AttackSummary(
        p_sift=1.0 / k,
        p_ab=1.0 - q * mub_full_intercept_error(p),
        p_ae=q / k,
        p_question=1.0 - q / k,
    )


def mub_joint_distribution(p: MubParams, q: float) -> TripartiteDistribution:
    """Post-sift p(a, b, e); Eve's letter is ``?`` unless she measured in Alice's basis."""
    d, k = p.d, p.k
    table = np.zeros((d, d, d + 1))
    idx = np.arange(d)
    table[idx, idx, d] += (1 - q) / d
    table[idx, idx, idx] += (q / k) / d
    table[:, :, d] += q * (k - 1) / k / (d * d)
    return TripartiteDistribution(table)
