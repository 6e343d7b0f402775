"""Equiangular-code key distribution under the intercept/resend attack.

Letters are labelled 0..n-1. After Bob announces m outcomes he did not get,
rounds where Alice's letter was announced are dropped and the surviving
letters are relabelled 0..n-m-1. Eve's alphabet gets one more symbol, ``?``
(stored last), used whenever she did not intercept or her outcome was among
the announced ones.

All joints are conditioned on a fixed announcement set (the top ``m``
labels); every announcement set gives the same relabelled joint because the
channel kernel only depends on whether two letters agree.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .qcore import (
    TripartiteDistribution,
    ValidationError,
    conditional_mutual_information,
    mutual_information,
)

BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class EscParams:
    """Protocol tuple (n, d, m, q).

    ``strict=False`` lifts the n <= d^2 existence bound so closed forms can be
    evaluated where no equiangular code exists.
    """

    n: int
    d: int
    m: int = 0
    q: float = 0.0
    strict: bool = True

    def __post_init__(self):
        n, d, m, q = self.n, self.d, self.m, self.q
        if d < 2:
            raise ValidationError(f"dimension must be at least 2, got {d}")
        if n < d + 1:
            raise ValidationError(f"need n >= d + 1, got n={n}, d={d}")
        if self.strict and n > d * d:
            raise ValidationError(f"no equiangular code with n > d^2 ({n} > {d * d})")
        if not 0 <= m <= n - 2:
            raise ValidationError(f"excluded-outcome count m must lie in [0, {n - 2}], got {m}")
        if not 0 <= q <= 1:
            raise ValidationError(f"interception fraction q must lie in [0, 1], got {q}")

    @property
    def s(self) -> int:
        return self.n * (self.n - 1) - self.m * (self.n - self.d)

    @property
    def t(self) -> float:
        n, d, m = self.n, self.d, self.m
        return self.s * (n - 1) - self.q * m * (n - d) * (d - 1)

    @property
    def key_size(self) -> int:
        """Letters surviving the sift, n - m."""
        return self.n - self.m

    def with_q(self, q: float) -> "EscParams":
        return EscParams(self.n, self.d, self.m, q, self.strict)


@dataclass(frozen=True)
class AttackSummary:
    p_sift: float
    p_ab: float
    p_ae: float
    p_question: float

    def as_dict(self) -> dict:
        return {
            "p_sift": self.p_sift,
            "p_ab": self.p_ab,
            "p_ae": self.p_ae,
            "p_question": self.p_question,
        }


@dataclass(frozen=True)
class RateBounds:
    """Key-rate bounds in bits per sifted signal; ``i_e`` may be negative."""

    i_ab: float
    i_ae: float
    i_be: float
    i_e: float
    i_ab_given_e: float

    def as_dict(self) -> dict:
        return {
            "i_ab": self.i_ab,
            "i_ae": self.i_ae,
            "i_be": self.i_be,
            "i_e": self.i_e,
            "i_ab_given_e": self.i_ab_given_e,
        }


@dataclass(frozen=True)
class ThresholdResult:
    q_star: float
    p_e_star: float
    r_star: float
    saturated: bool
    i_e_at_q_star: float

    def as_dict(self) -> dict:
        return {
            "q_star": self.q_star,
            "p_e_star": self.p_e_star,
            "r_star": self.r_star,
            "saturated": self.saturated,
            "i_e_at_q_star": self.i_e_at_q_star,
        }


def _require_noiseless(p: EscParams) -> None:
    if p.q != 0:
        raise ValidationError(f"noiseless quantity requested with q={p.q}")


def sift_rate_noiseless(p: EscParams) -> float:
    _require_noiseless(p)
    return p.s / (p.n * (p.n - 1))


def key_rate_noiseless(p: EscParams) -> float:
    """Mutual information per sifted letter on a noiseless channel."""
    _require_noiseless(p)
    n, d, m, s = p.n, p.d, p.m, p.s
    agree = d * (n - 1) / s
    return (
        math.log2(n - m)
        + agree * math.log2(d * (n - 1))
        + (1 - agree) * math.log2(n - d)
        - math.log2(s)
    )


def attack_summary(p: EscParams) -> AttackSummary:
    n, d, q, s, t = p.n, p.d, p.q, p.s, p.t
    return AttackSummary(
        p_sift=t / (n * (n - 1) ** 2),
        p_ab=(n - 1) * (d * (n - 1) - q * (n - d) * (d - 1)) / t,
        p_ae=q * d * (n - 1) * s / (n * t),
        p_question=1 - q * s * s / (n * t),
    )


def summary_from_joint(j: TripartiteDistribution, p_sift: float) -> AttackSummary:
    """Read the agreement probabilities off a relabelled post-sift joint."""
    pr = j.probs
    k = pr.shape[0]
    idx = np.arange(k)
    return AttackSummary(
        p_sift=float(p_sift),
        p_ab=float(pr[idx, idx, :].sum()),
        p_ae=float(pr[idx, :, idx].sum()),
        p_question=float(pr[:, :, -1].sum()),
    )


def equiangular_kernel(n: int, d: int) -> np.ndarray:
    """P(b|a) for measuring code state a with the code POVM."""
    off = (n - d) / (n * (n - 1))
    k = np.full((n, n), off)
    np.fill_diagonal(k, d / n)
    return k


def _closed_table(p: EscParams) -> np.ndarray:
    n, d, m, q = p.n, p.d, p.m, p.q
    size = n - m
    off = (n - d) / (n * (n - 1))
    kern = equiangular_kernel(n, d)[:size, :size]
    table = np.empty((size, size, size + 1))
    table[:, :, :size] = (q / n) * np.einsum("ae,eb->abe", kern, kern)
    table[:, :, size] = ((1 - q) * kern + q * m * off * off) / n
    return table


@lru_cache(maxsize=256)
def _enumerated_components(n: int, m: int, kernel_key: bytes) -> tuple[np.ndarray, np.ndarray]:
    """Sum over every announcement set of the relabelled sifted tables.

    Returns the no-interception and interception parts separately (the full
    table is linear in q), each unnormalized so that its total is the
    corresponding contribution to the sift probability.
    """
    kern = np.frombuffer(kernel_key).reshape(n, n)
    size = n - m
    weight = 1.0 / math.comb(n - 1, m)
    no_int = np.zeros((size, size, size + 1))
    inter = np.zeros((size, size, size + 1))
    # joint of (a, e, b) given interception, and (a, b) given none
    chain = np.einsum("ae,eb->aeb", kern, kern) / n
    direct = kern / n
    for announced in itertools.combinations(range(n), m):
        keep = [x for x in range(n) if x not in announced]
        ann = list(announced)
        # Bob's outcome b is never announced, so every kept b is consistent with this set
        no_int[:, :, size] += weight * direct[np.ix_(keep, keep)]
        sub = chain[np.ix_(keep, keep, keep)]
        inter[:, :, :size] += weight * np.transpose(sub, (0, 2, 1))
        if ann:
            inter[:, :, size] += weight * chain[np.ix_(keep, ann, keep)].sum(axis=1)
    return no_int, inter


def brute_force_table(p: EscParams, kernel: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Enumerate every (a, interception, e, b, announcement) event.

    Parameters
    ----------
    p : EscParams
    kernel : ndarray, optional
        Measurement kernel P(b|a); defaults to the equiangular one. Passing
        the kernel of an actual ensemble checks the model against real
        overlaps.

    Returns
    -------
    table : ndarray
        Post-sift relabelled joint, normalized.
    p_sift : float
        Probability that a round survives the sift.
    """
    if p.n > BRUTE_FORCE_MAX_N:
        raise ValidationError(f"brute-force enumeration is limited to n <= {BRUTE_FORCE_MAX_N}")
    kern = equiangular_kernel(p.n, p.d) if kernel is None else np.asarray(kernel, dtype=float)
    if kern.shape != (p.n, p.n):
        raise ValidationError(f"kernel shape {kern.shape} does not match n={p.n}")
    no_int, inter = _enumerated_components(p.n, p.m, np.ascontiguousarray(kern).tobytes())
    table = (1 - p.q) * no_int + p.q * inter
    total = float(table.sum())
    return table / total, total


def brute_force_summary(p: EscParams, kernel: np.ndarray | None = None) -> AttackSummary:
    table, p_sift = brute_force_table(p, kernel)
    return summary_from_joint(TripartiteDistribution(table), p_sift)


def joint_distribution(p: EscParams, method: str = "closed") -> TripartiteDistribution:
    """Post-sift joint over (Alice, Bob, Eve-or-?) with alphabets n-m, n-m, n-m+1.

    ``method="closed"`` builds entries from the symmetry classes of the fixed
    announcement set; ``method="brute"`` enumerates all announcement subsets
    (n <= 12).
    """
    if method == "closed":
        table = _closed_table(p)
        return TripartiteDistribution(table / table.sum())
    if method == "brute":
        return TripartiteDistribution(brute_force_table(p)[0])
    raise ValidationError(f"unknown joint-distribution method {method!r}")


def rate_bounds(j: TripartiteDistribution) -> RateBounds:
    i_ab = mutual_information(j.marginal("ab"))
    i_ae = mutual_information(j.marginal("ae"))
    i_be = mutual_information(j.marginal("be"))
    return RateBounds(
        i_ab=i_ab,
        i_ae=i_ae,
        i_be=i_be,
        i_e=i_ab - min(i_ae, i_be),
        i_ab_given_e=conditional_mutual_information(j),
    )


def one_way_rate(p: EscParams) -> float:
    """I_E at the interception fraction carried by ``p``."""
    return rate_bounds(joint_distribution(p)).i_e


def _error_rate_range(p: EscParams) -> tuple[float, float]:
    return error_from_depolarizing(p, 0.0), error_from_depolarizing(p, 1.0)


def error_from_depolarizing(p: EscParams, r: float) -> float:
    """Post-sift error probability after the channel rho -> (1-r) rho + r I/d.

    Computed by summing Bob's outcome probabilities over the letters left by
    the fixed announcement set.
    """
    if not 0 <= r <= 1:
        raise ValidationError(f"depolarizing rate must lie in [0, 1], got {r}")
    n, size = p.n, p.key_size
    kern = (1 - r) * equiangular_kernel(n, p.d) + r / n
    block = kern[:size, :size]
    return float(1.0 - np.trace(block) / block.sum())


def depolarizing_from_error(p: EscParams, p_e):
    """Depolarizing rate that produces post-sift error ``p_e``.

    For m >= 1 this is the closed form
    r = s/(m(d-1)) - n(n-1)(n-m-1) / (m(d-1)(n-1+m(p_e-1))),
    which cancels exactly at the noiseless error rate when given exact
    (e.g. ``Fraction``) input. For m = 0 the channel is inverted directly.
    """
    n, d, m, s = p.n, p.d, p.m, p.s
    lo, hi = _error_rate_range(p)
    slack = 1e-9
    if not lo - slack <= float(p_e) <= hi + slack:
        raise ValidationError(f"error probability {p_e} outside achievable range [{lo}, {hi}]")
    if m == 0:
        return (n * p_e - (n - d)) / (d - 1)
    num = n * (n - 1) * (n - m - 1)
    den = m * (d - 1)
    if isinstance(p_e, Fraction):
        return Fraction(s, den) - Fraction(num, den) / (n - 1 + m * (p_e - 1))
    return s / den - num / (den * (n - 1 + m * (p_e - 1)))


def noiseless_error_rate(p: EscParams) -> Fraction:
    """Exact post-sift error probability 1 - d(n-1)/s with no eavesdropping."""
    return Fraction(p.s - p.d * (p.n - 1), p.s)


def threshold(p: EscParams, q_tol: float = 1e-10, rate_tol: float = 1e-10) -> ThresholdResult:
    """Interception fraction at which the one-way rate I_E crosses zero.

    Bisection on q in [0, 1]; I_E is non-increasing in q. When I_E stays
    positive at q = 1 the result is flagged ``saturated`` with q_star = 1.
    """
    base = p.with_q(0.0)
    rate = lambda q: one_way_rate(base.with_q(q))  # noqa: E731
    top = rate(1.0)
    if top > 0:
        q_star, val = 1.0, top
        saturated = True
    else:
        lo, hi = 0.0, 1.0
        q_star, val = 1.0, top
        while hi - lo > q_tol:
            mid = 0.5 * (lo + hi)
            val = rate(mid)
            q_star = mid
            if abs(val) <= rate_tol:
                break
            if val > 0:
                lo = mid
            else:
                hi = mid
        saturated = False
    p_e = 1.0 - attack_summary(base.with_q(q_star)).p_ab
    r_star = float(depolarizing_from_error(base, p_e))
    return ThresholdResult(q_star, p_e, min(max(r_star, 0.0), 1.0), saturated, val)


def asymptotic_rate(d: float, alpha: float) -> float:
    """Large-d noiseless key rate for n = alpha d states and m = 0."""
    if not alpha > 1:
        raise ValidationError(f"alpha must exceed 1, got {alpha}")
    return math.log2(d) / alpha + (alpha - 1) / alpha * math.log2((alpha - 1) / alpha)
