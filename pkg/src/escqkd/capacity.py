"""Mutual information between a signal ensemble and a choice of decoder.

Alice sends each ensemble state with equal probability; Bob measures a
decoder POVM. No sift and no eavesdropper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .frames import (
    Ensemble,
    conjugate_ensemble,
    povm_from_ensemble,
    repudiation_povm,
)
from .qcore import Povm, ValidationError, mutual_information

DECODER_KINDS = ("same-ensemble", "conjugate", "unitary-rotated", "repudiation")


@dataclass(frozen=True)
class DecoderSpec:
    kind: str = "same-ensemble"
    unitary: np.ndarray | None = None
    b: int | None = None

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValidationError(f"unknown decoder kind {self.kind!r}; expected one of {DECODER_KINDS}")
        if (self.unitary is not None) != (self.kind == "unitary-rotated"):
            raise ValidationError("a unitary is required for, and only for, the unitary-rotated decoder")
        if (self.b is not None) != (self.kind == "repudiation"):
            raise ValidationError("a subset size b is required for, and only for, the repudiation decoder")
        if self.unitary is not None:
            u = np.asarray(self.unitary, dtype=complex)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise ValidationError("decoder unitary must be square")
            if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-10:
                raise ValidationError("decoder matrix is not unitary within 1e-10")
            object.__setattr__(self, "unitary", u)


def decoder_povm(e: Ensemble, dec: DecoderSpec) -> Povm:
    if dec.kind == "same-ensemble":
        return povm_from_ensemble(e)
    if dec.kind == "conjugate":
        return povm_from_ensemble(conjugate_ensemble(e))
    if dec.kind == "unitary-rotated":
        if dec.unitary.shape[0] != e.d:
            raise ValidationError(f"unitary is {dec.unitary.shape[0]}-dimensional, ensemble is {e.d}")
        return povm_from_ensemble(e.unitarily_rotated(dec.unitary))
    return repudiation_povm(e, dec.b).povm


def channel_matrix(e: Ensemble, povm: Povm) -> np.ndarray:
    """P(b|a) = <phi_a|E_b|phi_a>, shape (n, outcomes)."""
    if povm.dim != e.d:
        raise ValidationError(f"POVM acts on C^{povm.dim}, ensemble lives in C^{e.d}")
    v = e.vectors
    p = np.einsum("ai,bij,aj->ab", v.conj(), povm.elements, v).real
    return np.clip(p, 0.0, None)


def _mi_from_channel(chan: np.ndarray) -> float:
    joint = chan / chan.shape[0]
    return mutual_information(joint / joint.sum())


def channel_mutual_info(e: Ensemble, dec: DecoderSpec | None = None) -> float:
    return _mi_from_channel(channel_matrix(e, decoder_povm(e, dec or DecoderSpec())))


def repudiation_capacity(e: Ensemble, b: int) -> float:
    """I(A:B) against the repudiation POVM (failure outcome included if present)."""
    return channel_mutual_info(e, DecoderSpec("repudiation", b=b))


def bloch_vectors(e: Ensemble) -> np.ndarray:
    if e.d != 2:
        raise ValidationError("Bloch vectors are only defined for qubit ensembles")
    a, b = e.vectors[:, 0], e.vectors[:, 1]
    cross = a.conj() * b
    return np.stack([2 * cross.real, 2 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=1)


def bloch_inversion_decoder(e: Ensemble) -> DecoderSpec:
    """Decoder that sends each qubit signal's Bloch vector to its antipode.

    Coplanar Bloch vectors (e.g. the trine) are inverted by a unitary, a
    half-turn about the plane's normal. Otherwise the antipodal map is
    antiunitary and is realised as the b=1 repudiation measurement, whose
    elements (2/n)(I - |phi_k><phi_k|) are exactly the inverted projectors.
    """
    r = bloch_vectors(e)
    _, sv, vt = np.linalg.svd(r)
    if sv[-1] > 1e-9 * max(sv[0], 1.0):
        return DecoderSpec("repudiation", b=1)
    nx, ny, nz = vt[-1]
    pauli = np.array([[nz, nx - 1j * ny], [nx + 1j * ny, -nz]])
    return DecoderSpec("unitary-rotated", unitary=-1j * pauli)


def hermitian_from_params(x: np.ndarray, d: int) -> np.ndarray:
    """Hermitian matrix from d^2 reals: diagonal, then real and imaginary upper parts."""
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    k = iu[0].size
    h[np.diag_indices(d)] = x[:d]
    h[iu] = x[d : d + k] + 1j * x[d + k : d + 2 * k]
    h[(iu[1], iu[0])] = h[iu].conj()
    return h


def unitary_from_params(x: np.ndarray, d: int) -> np.ndarray:
    """exp(iH) computed through the eigendecomposition of H."""
    w, v = np.linalg.eigh(hermitian_from_params(np.asarray(x, dtype=float), d))
    return (v * np.exp(1j * w)) @ v.conj().T


@dataclass
class RotatedDecoderResult:
    unitary: np.ndarray
    capacity: float
    restart: int
    start_capacity: float
    restart_values: list[float]


def optimize_rotated_decoder(
    e: Ensemble,
    seed: int = 0,
    restarts: int = 32,
    iterations: int = 4000,
    spread: float = 1.5,
) -> RotatedDecoderResult:
    """Maximize I(A:B) over decoders U-rotated copies of the ensemble POVM.

    U = exp(iH) with H parameterized by d^2 reals. Each restart runs a
    Nelder-Mead search; restart 0 starts at U = I and restart ``r > 0`` draws
    its start from ``default_rng(seed + r)``. Ties go to the lowest restart
    index.
    """
    povm_from_ensemble(e)
    d = e.d
    base = e.vectors
    n = e.n

    def capacity(x):
        w = base @ unitary_from_params(x, d).T
        chan = (d / n) * np.abs(base.conj() @ w.T) ** 2
        return _mi_from_channel(np.clip(chan, 0.0, None))

    start_capacity = capacity(np.zeros(d * d))
    best = None
    values = []
    for r in range(restarts):
        if r == 0:
            x0 = np.zeros(d * d)
        else:
            x0 = spread * np.random.default_rng(seed + r).standard_normal(d * d)
        res = minimize(
            lambda x: -capacity(x),
            x0,
            method="Nelder-Mead",
            options={"maxiter": iterations, "xatol": 1e-9, "fatol": 1e-13, "adaptive": True},
        )
        val, x_best = -float(res.fun), res.x
        at_start = capacity(x0)
        if at_start > val:
            val, x_best = at_start, x0
        values.append(val)
        if best is None or val > best[0]:
            best = (val, r, x_best)
    val, r, x = best
    return RotatedDecoderResult(
        unitary=unitary_from_params(x, d),
        capacity=val,
        restart=r,
        start_capacity=start_capacity,
        restart_values=values,
    )
