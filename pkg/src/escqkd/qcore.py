"""Linear-algebra primitives and classical information measures.

Everything here works on dense numpy arrays. Logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Probabilities below this are treated as exactly zero in entropy sums.
PROB_FLOOR = 1e-15
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-10
IDENTITY_TOL = 1e-8
NORM_TOL = 1e-12
DIST_SUM_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def as_state(amplitudes, tol: float = NORM_TOL) -> np.ndarray:
    """Return `amplitudes` as a complex unit vector, rejecting non-unit input."""
    v = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if v.size == 0:
        raise ValidationError("state vector must have positive dimension")
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"state vector norm {norm!r} deviates from 1 by more than {tol}")
    return v


def projector(v: np.ndarray) -> np.ndarray:
    """|v><v| for a column-free 1-D vector."""
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def partial_trace(psi: np.ndarray, dims: tuple[int, int], keep: int = 0) -> np.ndarray:
    """Reduced density operator of a bipartite pure state.

    Parameters
    ----------
    psi : ndarray, shape (dA*dB,)
        Pure state, first factor is the slow index.
    dims : (dA, dB)
    keep : 0 or 1
        Which factor to keep.
    """
    m = np.asarray(psi, dtype=complex).reshape(dims)
    if keep == 0:
        return m @ m.conj().T
    return m.T @ m.conj()


@dataclass(frozen=True)
class Povm:
    """A list of positive operators on C^dim that resolve the identity.

    ``elements`` has shape (outcomes, dim, dim). Construction validates
    Hermiticity, positivity and completeness.
    """

    elements: np.ndarray
    herm_tol: float = HERMITIAN_TOL
    pos_tol: float = POSITIVITY_TOL
    id_tol: float = IDENTITY_TOL

    def __post_init__(self):
        els = np.asarray(self.elements, dtype=complex)
        if els.ndim != 3 or els.shape[1] != els.shape[2]:
            raise ValidationError(f"POVM elements must have shape (k, d, d), got {els.shape}")
        object.__setattr__(self, "elements", els)
        for i, e in enumerate(els):
            if not is_hermitian(e, self.herm_tol):
                raise ValidationError(f"POVM element {i} is not Hermitian")
            lo = np.linalg.eigvalsh((e + e.conj().T) / 2)[0]
            if lo < -self.pos_tol:
                raise ValidationError(f"POVM element {i} has negative eigenvalue {lo:.3e}")
        dev = self.completeness_deviation()
        if dev > self.id_tol:
            raise ValidationError(f"POVM elements sum to identity only within {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    def completeness_deviation(self) -> float:
        total = self.elements.sum(axis=0)
        return float(np.linalg.norm(total - np.eye(self.elements.shape[1]), "fro"))

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        """Outcome probabilities tr(E_b rho) for a density operator."""
        p = np.einsum("kij,ji->k", self.elements, rho).real
        return np.clip(p, 0.0, None)


def _check_distribution(p: np.ndarray, tol: float, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        raise ValidationError(f"{what} is empty")
    if np.any(p < 0):
        raise ValidationError(f"{what} has negative entries (min {p.min():.3e})")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"{what} sums to {total!r}, not 1 within {tol}")
    return p


def _h(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > PROB_FLOOR]
    return float(-np.sum(p * np.log2(p)))


def entropy(p) -> float:
    """Shannon entropy in bits with 0 log 0 = 0.

    >>> round(entropy([0.25, 0.75]), 4)
    0.8113
    """
    p = _check_distribution(p, 1e-9, "probability list")
    return max(_h(p), 0.0)


@dataclass(frozen=True)
class JointDistribution2:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2:
            raise ValidationError("bipartite joint must be a 2-D array")
        object.__setattr__(self, "probs", _check_distribution(p, DIST_SUM_TOL, "joint distribution"))

    @property
    def pa_size(self) -> int:
        return self.probs.shape[0]

    @property
    def pb_size(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class TripartiteDistribution:
    """Joint p(a, b, e). The last Eve index is the ``?`` symbol when present."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 3:
            raise ValidationError("tripartite joint must be a 3-D array")
        object.__setattr__(self, "probs", _check_distribution(p, DIST_SUM_TOL, "joint distribution"))

    @property
    def a_size(self) -> int:
        return self.probs.shape[0]

    @property
    def b_size(self) -> int:
        return self.probs.shape[1]

    @property
    def e_size(self) -> int:
        return self.probs.shape[2]

    def marginal(self, keep: str) -> np.ndarray:
        """Marginal over the named parties, e.g. ``"ab"`` or ``"ae"``."""
        axes = tuple(i for i, c in enumerate("abe") if c not in keep)
        return self.probs.sum(axis=axes)


def _as_joint2(j) -> np.ndarray:
    if isinstance(j, JointDistribution2):
        return j.probs
    return JointDistribution2(j).probs


def _as_joint3(j) -> np.ndarray:
    if isinstance(j, TripartiteDistribution):
        return j.probs
    return TripartiteDistribution(j).probs


def mutual_information(j) -> float:
    """I(A:B) = H(A) + H(B) - H(AB) in bits for a bipartite joint."""
    p = _as_joint2(j)
    val = _h(p.sum(axis=1)) + _h(p.sum(axis=0)) - _h(p)
    if val < -1e-12:
        raise ArithmeticError(f"mutual information came out negative: {val}")
    return max(val, 0.0)


def conditional_mutual_information(j) -> float:
    """I(A:B|E) from the entropy identity H(AE) + H(BE) - H(E) - H(ABE)."""
    p = _as_joint3(j)
    val = _h(p.sum(axis=1)) + _h(p.sum(axis=0)) - _h(p.sum(axis=(0, 1))) - _h(p)
    if val < -1e-12:
        raise ArithmeticError(f"conditional mutual information came out negative: {val}")
    return max(val, 0.0)


def conditional_mutual_information_grouped(j) -> float:
    """I(A:B|E) as sum_e p(e) I(A:B|E=e); a second summation order."""
    p = _as_joint3(j)
    total = 0.0
    for e in range(p.shape[2]):
        pe = p[:, :, e].sum()
        if pe <= PROB_FLOOR:
            continue
        cond = p[:, :, e] / pe
        total += pe * (_h(cond.sum(axis=1)) + _h(cond.sum(axis=0)) - _h(cond))
    return max(total, 0.0)
