"""Round-by-round Monte Carlo of the intercept/resend attack.

Rounds are processed in fixed-size chunks. Chunk ``i`` draws from a PCG64
stream seeded by ``SeedSequence(seed, spawn_key=(i,))``, so results depend
only on ``(seed, chunk_size)`` and not on how chunks are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .frames import Ensemble, povm_from_ensemble
from .mub import MubParams, mub_attack_summary, mub_joint_distribution
from .protocol import AttackSummary, EscParams, attack_summary, joint_distribution
from .qcore import TripartiteDistribution, ValidationError, projector

QUANTITIES = ("p_sift", "p_ab", "p_ae", "p_question")


@dataclass(frozen=True)
class SimConfig:
    """``params`` is an :class:`EscParams`, or a ``(MubParams, q)`` pair for MUB mode."""

    params: object
    rounds: int
    seed: int
    chunk_size: int = 1 << 16
    workers: int = 1
    trace_check: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise ValidationError(f"rounds must be positive, got {self.rounds}")
        if self.chunk_size < 1:
            raise ValidationError(f"chunk_size must be positive, got {self.chunk_size}")
        if not isinstance(self.params, EscParams):
            try:
                mp, q = self.params
            except (TypeError, ValueError):
                raise ValidationError("params must be EscParams or (MubParams, q)") from None
            if not isinstance(mp, MubParams) or not 0 <= q <= 1:
                raise ValidationError("MUB mode needs (MubParams, q) with q in [0, 1]")

    @property
    def mub_mode(self) -> bool:
        return not isinstance(self.params, EscParams)


@dataclass
class SimResult:
    rounds_total: int
    rounds_sifted: int
    counts: np.ndarray = field(repr=False)
    agree_ab: int = 0
    agree_ae: int = 0
    question: int = 0

    @property
    def p_sift(self) -> float:
        return self.rounds_sifted / self.rounds_total

    def _frac(self, k: int) -> float:
        return k / self.rounds_sifted if self.rounds_sifted else float("nan")

    @property
    def p_ab(self) -> float:
        return self._frac(self.agree_ab)

    @property
    def p_ae(self) -> float:
        return self._frac(self.agree_ae)

    @property
    def p_question(self) -> float:
        return self._frac(self.question)

    def estimates(self) -> dict:
        return {q: getattr(self, q) for q in QUANTITIES}

    def standard_errors(self) -> dict:
        out = {"p_sift": math.sqrt(self.p_sift * (1 - self.p_sift) / self.rounds_total)}
        for q in QUANTITIES[1:]:
            p = getattr(self, q)
            out[q] = math.sqrt(p * (1 - p) / self.rounds_sifted) if self.rounds_sifted else float("nan")
        return out


def _sample(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw per row: ``cum`` rows are cumulative distributions."""
    return np.minimum((u[:, None] > cum).sum(axis=1), cum.shape[1] - 1)


def _announce(rng, b: np.ndarray, n: int, m: int) -> np.ndarray:
    """Partial Fisher-Yates over the n-1 outcomes other than b; returns (rounds, m)."""
    size = b.size
    others = np.arange(n - 1)[None, :].repeat(size, axis=0)
    others = others + (others >= b[:, None])
    rows = np.arange(size)
    for i in range(m):
        j = i + (rng.random(size) * (n - 1 - i)).astype(np.int64)
        tmp = others[rows, i].copy()
        others[rows, i] = others[rows, j]
        others[rows, j] = tmp
    return others[:, :m]


def _trace_kernel(e: Ensemble) -> np.ndarray:
    """Outcome probabilities from tr(E_b rho_a) with explicit matrices.

    Self-check path: slower than the overlap formula and independent of it.
    """
    povm = povm_from_ensemble(e)
    return np.array([povm.probabilities(projector(v)) for v in e.vectors])


def _esc_chunk(p: EscParams, cum: np.ndarray, seed: int, index: int, rounds: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    n, m = p.n, p.m
    a = rng.integers(0, n, rounds)
    intercepted = rng.random(rounds) < p.q
    e = _sample(cum[a], rng.random(rounds))
    src = np.where(intercepted, e, a)
    b = _sample(cum[src], rng.random(rounds))
    announced = _announce(rng, b, n, m)
    a_out = (announced == a[:, None]).any(axis=1)
    e_out = (announced == e[:, None]).any(axis=1)
    kept = ~a_out
    # relabel survivors by removing announced labels below them
    shift_a = (announced < a[:, None]).sum(axis=1)
    shift_b = (announced < b[:, None]).sum(axis=1)
    shift_e = (announced < e[:, None]).sum(axis=1)
    size = n - m
    e_letter = np.where(intercepted & ~e_out, e - shift_e, size)
    a2, b2, e2 = (a - shift_a)[kept], (b - shift_b)[kept], e_letter[kept]
    counts = np.zeros((size, size, size + 1), dtype=np.int64)
    np.add.at(counts, (a2, b2, e2), 1)
    return counts


def _mub_chunk(p: MubParams, q: float, gram2: np.ndarray, seed: int, index: int, rounds: int):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    d, k = p.d, p.k
    basis_a = rng.integers(0, k, rounds)
    letter_a = rng.integers(0, d, rounds)
    state = basis_a * d + letter_a
    intercepted = rng.random(rounds) < q
    basis_e = rng.integers(0, k, rounds)
    # measuring basis B on state s: outcome j with probability |<B_j|s>|^2
    cum_cols = np.cumsum(gram2.reshape(k * d, k, d), axis=2)
    e_out = _sample(cum_cols[state, basis_e], rng.random(rounds))
    src = np.where(intercepted, basis_e * d + e_out, state)
    basis_b = rng.integers(0, k, rounds)
    b_out = _sample(cum_cols[src, basis_b], rng.random(rounds))
    kept = basis_b == basis_a
    e_letter = np.where(intercepted & (basis_e == basis_a), e_out, d)
    counts = np.zeros((d, d, d + 1), dtype=np.int64)
    np.add.at(counts, (letter_a[kept], b_out[kept], e_letter[kept]), 1)
    return counts


def simulate(cfg: SimConfig, e: Ensemble) -> SimResult:
    """Simulate ``cfg.rounds`` independent protocol rounds with ensemble ``e``.

    ESC mode: Alice picks a letter uniformly; with probability q Eve measures
    the ensemble POVM and resends her outcome's state; Bob measures the same
    POVM, announces m random outcomes other than his own, and the round
    survives when Alice's letter was not announced. Eve's letter is ``?`` if
    she did not intercept or her outcome was announced.

    MUB mode: ``e`` must be the basis-major ensemble from ``build_mub``; the
    sift keeps rounds where Bob's basis matches Alice's, and Eve's letter is
    ``?`` unless she intercepted in Alice's basis.
    """
    chunks = [
        (i, min(cfg.chunk_size, cfg.rounds - i * cfg.chunk_size))
        for i in range(math.ceil(cfg.rounds / cfg.chunk_size))
    ]
    if cfg.mub_mode:
        mp, q = cfg.params
        if e.n != mp.k * mp.d or e.d != mp.d:
            raise ValidationError(f"ensemble (n={e.n}, d={e.d}) does not match {mp.k} bases in d={mp.d}")
        gram2 = e.overlaps()
        blocks = gram2.reshape(mp.k, mp.d, mp.k, mp.d)
        expected = np.where(np.eye(mp.k, dtype=bool)[:, None, :, None], np.eye(mp.d)[None, :, None, :], 1 / mp.d)
        if np.max(np.abs(blocks - expected)) > 1e-9:
            raise ValidationError("ensemble is not a basis-major set of mutually unbiased bases")
        work = lambda c: _mub_chunk(mp, q, gram2, cfg.seed, *c)  # noqa: E731
    else:
        p = cfg.params
        if e.n != p.n or e.d != p.d:
            raise ValidationError(f"ensemble (n={e.n}, d={e.d}) does not match params (n={p.n}, d={p.d})")
        if cfg.trace_check:
            kernel = _trace_kernel(e)
        else:
            kernel = (e.d / e.n) * e.overlaps()
        cum = np.cumsum(kernel, axis=1)
        work = lambda c: _esc_chunk(p, cum, cfg.seed, *c)  # noqa: E731
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    counts = np.sum(parts, axis=0)
    size = counts.shape[0]
    idx = np.arange(size)
    return SimResult(
        rounds_total=cfg.rounds,
        rounds_sifted=int(counts.sum()),
        counts=counts,
        agree_ab=int(counts[idx, idx, :].sum()),
        agree_ae=int(counts[idx, :, idx].sum()),
        question=int(counts[:, :, -1].sum()),
    )


@dataclass
class ComparisonReport:
    z_scores: dict
    passed: dict
    chi_square: float
    chi_square_dof: int
    chi_square_pvalue: float

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())


def analytic_reference(cfg: SimConfig) -> tuple[AttackSummary, TripartiteDistribution]:
    if cfg.mub_mode:
        mp, q = cfg.params
        return mub_attack_summary(mp, q), mub_joint_distribution(mp, q)
    return attack_summary(cfg.params), joint_distribution(cfg.params)


def compare_to_analytic(
    res: SimResult,
    summary: AttackSummary,
    joint: TripartiteDistribution | None = None,
    z_limit: float = 3.0,
) -> ComparisonReport:
    """z-score of every empirical probability and a chi-square on the joint table.

    Standard errors use the analytic probability, so a quantity that is
    exactly 0 or 1 analytically scores 0 when matched and infinity otherwise.
    """
    if res.rounds_total < 1 or res.rounds_sifted < 1:
        raise ValidationError("cannot compare an empty sample")
    z = {}
    for name in QUANTITIES:
        p0 = getattr(summary, name)
        n = res.rounds_total if name == "p_sift" else res.rounds_sifted
        diff = getattr(res, name) - p0
        sigma = math.sqrt(max(p0 * (1 - p0), 0.0) / n)
        if sigma == 0:
            z[name] = 0.0 if abs(diff) < 1e-12 else math.inf
        else:
            z[name] = diff / sigma
    passed = {k: abs(v) <= z_limit for k, v in z.items()}
    chi2 = math.nan
    dof = 0
    pval = math.nan
    if joint is not None:
        if joint.probs.shape != res.counts.shape:
            raise ValidationError(f"joint shape {joint.probs.shape} differs from counts {res.counts.shape}")
        expected = joint.probs * res.rounds_sifted
        support = expected > 1e-12
        dof = int(support.sum()) - 1
        if np.any(res.counts[~support] > 0):
            chi2, pval = math.inf, 0.0
        else:
            obs = res.counts[support]
            exp = expected[support]
            chi2 = float(np.sum((obs - exp) ** 2 / exp))
            pval = float(stats.chi2.sf(chi2, dof)) if dof > 0 else 1.0
    return ComparisonReport(z, passed, chi2, dof, pval)
