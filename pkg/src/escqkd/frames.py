"""Equiangular spherical codes (Grassmann frames) and related ensembles.

An ensemble is stored as an ``(n, d)`` complex array, one unit vector per
row, amplitudes in the standard basis. The Gram matrix is
``G[j, k] = <phi_j|phi_k>`` and the frame operator is
``S = sum_k |phi_k><phi_k|``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .qcore import (
    NORM_TOL,
    Povm,
    ValidationError,
    partial_trace,
)

TIGHTNESS_TOL = 1e-6
REPUDIATION_TOL = 1e-8
MAX_REPUDIATION_SUBSETS = 20000


@dataclass(frozen=True)
class Ensemble:
    """``n >= d`` unit vectors in C^d, stored row-wise."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 2:
            raise ValidationError(f"ensemble must be a 2-D array (n, d), got shape {v.shape}")
        n, d = v.shape
        if d < 1 or n < d:
            raise ValidationError(f"ensemble needs n >= d >= 1, got n={n}, d={d}")
        norms = np.linalg.norm(v, axis=1)
        bad = np.max(np.abs(norms - 1.0))
        if bad > NORM_TOL:
            raise ValidationError(f"ensemble vector norm deviates from 1 by {bad:.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_unnormalized(cls, vectors) -> "Ensemble":
        v = np.asarray(vectors, dtype=complex)
        return cls(v / np.linalg.norm(v, axis=1, keepdims=True))

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        return self.vectors.conj() @ self.vectors.T

    def frame_operator(self) -> np.ndarray:
        return self.vectors.T @ self.vectors.conj()

    def overlaps(self) -> np.ndarray:
        """Squared overlaps |<phi_j|phi_k>|^2."""
        return np.abs(self.gram()) ** 2

    def tightness_deviation(self) -> float:
        return float(np.linalg.norm(self.frame_operator() - (self.n / self.d) * np.eye(self.d), "fro"))

    def unitarily_rotated(self, u: np.ndarray) -> "Ensemble":
        return Ensemble.from_unnormalized(self.vectors @ np.asarray(u).T)


@dataclass
class FrameReport:
    gram: np.ndarray
    gram_spectrum: np.ndarray
    v1: float
    v2: float
    target_overlap: float
    max_equiangular_deviation: float
    max_tightness_deviation: float
    d: int

    @property
    def n(self) -> int:
        return self.gram.shape[0]

    @property
    def v1_minimum(self) -> float:
        return self.n**2 / self.d

    def is_grassmann_frame(self, tol: float = TIGHTNESS_TOL) -> bool:
        return self.max_equiangular_deviation <= tol and self.max_tightness_deviation <= tol

    def summary(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "v1": self.v1,
            "v2": self.v2,
            "v1_minimum": self.v1_minimum,
            "v2_grassmann": grassmann_v2(self.n, self.d),
            "target_overlap": self.target_overlap,
            "max_equiangular_deviation": self.max_equiangular_deviation,
            "max_tightness_deviation": self.max_tightness_deviation,
        }


@dataclass(frozen=True)
class SolverConfig:
    seed: int = 0
    restarts: int = 8
    max_iterations: int = 20000
    success_tolerance: float = 1e-6
    penalty_weight: float = 1.0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValidationError("restarts and max_iterations must be positive")
        if not self.success_tolerance > 0 or not self.penalty_weight > 0:
            raise ValidationError("success_tolerance and penalty_weight must be positive")


@dataclass
class SolverFailure:
    """Returned (not raised) when no restart reached the success tolerance."""

    d: int
    n: int
    best_equiangular_deviation: float
    best_tightness_deviation: float
    best_objective: float
    best: Ensemble | None = None
    restarts: int = 0

    def __bool__(self) -> bool:
        return False


def equiangular_overlap(n: int, d: int) -> float:
    """Common squared overlap (n-d)/(d(n-1)) of a Grassmann frame."""
    return (n - d) / (d * (n - 1))


def grassmann_v2(n: int, d: int) -> float:
    """Minimal V2 attained by a Grassmann frame, n + n(n-1)c^2.

    Note that this carries a 1/d^2 relative to n^2(n-2d+d^2)/(n-1).
    """
    return n * n * (d * d + n - 2 * d) / (d * d * (n - 1))


def verify_frame(e: Ensemble) -> FrameReport:
    g = e.gram()
    lam = np.abs(g) ** 2
    n, d = e.n, e.d
    c = equiangular_overlap(n, d) if n > 1 else 0.0
    off = ~np.eye(n, dtype=bool)
    dev = float(np.max(np.abs(lam[off] - c))) if n > 1 else 0.0
    return FrameReport(
        gram=g,
        gram_spectrum=np.linalg.eigvalsh((g + g.conj().T) / 2),
        v1=float(lam.sum()),
        v2=float((lam**2).sum()),
        target_overlap=c,
        max_equiangular_deviation=dev,
        max_tightness_deviation=e.tightness_deviation(),
        d=d,
    )


def build_simplex(d: int) -> Ensemble:
    """The d+1 point regular simplex: the DFT of size d+1 with column 0 dropped."""
    if d < 2:
        raise ValidationError(f"simplex needs d >= 2, got {d}")
    n = d + 1
    k = np.arange(n)[:, None]
    j = np.arange(1, n)[None, :]
    return Ensemble(np.exp(2j * np.pi * k * j / n) / math.sqrt(d))


def build_icosahedral_code() -> Ensemble:
    """The six diagonals of the icosahedron: a real equiangular code with n=6, d=3.

    Six equiangular lines in C^3 come in a continuous family; this is its
    real member, and the one whose repudiation measurement has the largest
    mutual information.
    """
    phi = (1 + math.sqrt(5)) / 2
    rows = []
    for sign in (1, -1):
        rows += [(0, 1, sign * phi), (1, sign * phi, 0), (sign * phi, 0, 1)]
    return Ensemble.from_unnormalized(np.array(rows, dtype=float))


def _tangent(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    radial = np.real(np.sum(v.conj() * g, axis=1, keepdims=True))
    return g - radial * v


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def frame_objective(v: np.ndarray, d: int, beta: float = 1.0, with_grad: bool = True):
    """Tightness plus equiangularity penalty and its gradient.

    f = ||S - (n/d) I||_F^2 + beta * sum_{j != k} (|G_jk|^2 - c)^2

    The gradient is returned as dF/dRe + i dF/dIm for the rows of ``v``;
    no normalization is applied inside.
    """
    n = v.shape[0]
    c = equiangular_overlap(n, d)
    s = v.T @ v.conj()
    a = s - (n / d) * np.eye(d)
    g = v.conj() @ v.T
    lam = np.abs(g) ** 2
    w = 2.0 * (lam - c)
    np.fill_diagonal(w, 0.0)
    f = float(np.sum(np.abs(a) ** 2) + beta * 0.25 * np.sum(w**2))
    if not with_grad:
        return f
    grad = 4.0 * v @ a.T + 4.0 * beta * (w * g.T) @ v
    return f, grad


def _descend(v: np.ndarray, d: int, cfg: SolverConfig, history: list | None = None):
    """Projected gradient descent on the product of spheres.

    Trial steps use the Barzilai-Borwein length; a trial is accepted only if
    the renormalized point does not raise the objective, otherwise the step is
    halved until it does.
    """
    f, g = frame_objective(v, d, cfg.penalty_weight)
    g = _tangent(v, g)
    step = 0.05
    tol2 = (cfg.success_tolerance * 1e-2) ** 2
    for _ in range(cfg.max_iterations):
        if f <= tol2:
            break
        trial = step
        while True:
            cand = _normalize_rows(v - trial * g)
            fc, gc = frame_objective(cand, d, cfg.penalty_weight)
            if fc <= f:
                break
            trial *= 0.5
            if trial < 1e-16:
                return v, f
        gc = _tangent(cand, gc)
        sv = (cand - v).ravel()
        yv = (gc - g).ravel()
        sy = float(np.real(np.vdot(sv, yv)))
        step = float(np.real(np.vdot(sv, sv))) / sy if sy > 0 else 2.0 * trial
        step = min(max(step, 1e-8), 10.0)
        v, f, g = cand, fc, gc
        if history is not None:
            history.append(f)
    return v, f


def _equiangular_residuals(v: np.ndarray, c: float, with_jac: bool = True):
    """Residuals of a Grassmann frame and their Jacobian.

    Stacks |<x_j|x_k>|^2 - c for j < k, |x_j|^2 - 1, and the upper triangle
    (real and imaginary parts) of S - (n/d) I. Parameters are ``[Re v, Im v]``
    flattened row-major.
    """
    n, d = v.shape
    g = v.conj() @ v.T
    s = v.T @ v.conj() - (n / d) * np.eye(d)
    ju, ku = np.triu_indices(n, 1)
    au, bu = np.triu_indices(d)
    su = s[au, bu]
    r = np.concatenate(
        [np.abs(g[ju, ku]) ** 2 - c, np.sum(np.abs(v) ** 2, axis=1) - 1.0, su.real, su.imag]
    )
    if not with_jac:
        return r
    npair, ns = ju.size, au.size
    # each residual is Re(sum_ki coef[k, i] * dv[k, i]) for a complex coefficient array
    jac = np.zeros((npair + n, n, d), dtype=complex)
    rows = np.arange(npair)
    jac[rows, ku, :] = 2.0 * g[ju, ku].conj()[:, None] * v[ju].conj()
    jac[rows, ju, :] += 2.0 * g[ju, ku][:, None] * v[ku].conj()
    jac[npair + np.arange(n), np.arange(n), :] = 2.0 * v.conj()
    jac = jac.reshape(npair + n, n * d)
    # dS_ab = sum_k dv_ka conj(v_kb) + v_ka conj(dv_kb)
    ds_re = np.zeros((ns, n, d), dtype=complex)
    ds_im = np.zeros((ns, n, d), dtype=complex)
    idx = np.arange(ns)
    ds_re[idx, :, au] += v[:, bu].T.conj()
    ds_re[idx, :, bu] += v[:, au].T.conj()
    ds_im[idx, :, au] += -1j * v[:, bu].T.conj()
    ds_im[idx, :, bu] += 1j * v[:, au].T.conj()
    full = np.concatenate([jac, ds_re.reshape(ns, n * d), ds_im.reshape(ns, n * d)], axis=0)
    return r, np.concatenate([full.real, -full.imag], axis=1)


def _polish(v: np.ndarray, d: int, iterations: int = 200) -> np.ndarray:
    """Levenberg-Marquardt refinement of the equiangularity residuals."""
    n = v.shape[0]
    c = equiangular_overlap(n, d)
    x = np.concatenate([v.real.ravel(), v.imag.ravel()])

    def unpack(x):
        return (x[: n * d] + 1j * x[n * d :]).reshape(n, d)

    r, jac = _equiangular_residuals(unpack(x), c)
    cost = float(r @ r)
    mu = 1e-3
    for _ in range(iterations):
        if np.max(np.abs(r)) < 1e-15:
            break
        jtj = jac.T @ jac
        rhs = -jac.T @ r
        while True:
            delta = np.linalg.solve(jtj + mu * np.eye(jtj.shape[0]), rhs)
            xc = x + delta
            rc = _equiangular_residuals(unpack(xc), c, with_jac=False)
            cc = float(rc @ rc)
            if cc < cost:
                break
            mu *= 10.0
            if mu > 1e12:
                return _normalize_rows(unpack(x))
        x = xc
        r, jac = _equiangular_residuals(unpack(x), c)
        cost = float(r @ r)
        mu = max(mu / 10.0, 1e-12)
    return _normalize_rows(unpack(x))


def solve_grassmann_frame(d: int, n: int, cfg: SolverConfig | None = None, history: list | None = None):
    """Search for n equiangular unit vectors in C^d forming a tight frame.

    Each restart runs projected gradient descent from a random complex start,
    then a Levenberg-Marquardt polish on the pairwise-overlap residuals once
    the descent has entered a basin. Returns an :class:`Ensemble` on success, otherwise a falsy
    :class:`SolverFailure` carrying the best deviations found. Restart ``r``
    uses seed ``cfg.seed + r``; the lowest-objective converged restart wins.
    """
    cfg = cfg or SolverConfig()
    if d < 1:
        raise ValidationError("dimension must be positive")
    if n <= d:
        raise ValidationError(f"need n > d for a Grassmann frame, got n={n}, d={d}")
    if n > d * d:
        raise ValidationError(f"no equiangular code exists with n > d^2 ({n} > {d * d})")

    best = None
    for r in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + r)
        v0 = _normalize_rows(rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d)))
        hist = [] if history is not None else None
        v, f = _descend(v0, d, cfg, hist)
        if f < 1e-4:
            v = _polish(v, d)
            f = frame_objective(v, d, cfg.penalty_weight, with_grad=False)
        ens = Ensemble(_normalize_rows(v))
        rep = verify_frame(ens)
        ok = rep.is_grassmann_frame(cfg.success_tolerance)
        key = (not ok, f, r)
        if best is None or key < best[0]:
            best = (key, ens, rep, f, hist)
        if ok:
            break
    (_, ens, rep, f, hist) = best
    if history is not None and hist:
        history.extend(hist)
    if rep.is_grassmann_frame(cfg.success_tolerance):
        return ens
    return SolverFailure(
        d=d,
        n=n,
        best_equiangular_deviation=rep.max_equiangular_deviation,
        best_tightness_deviation=rep.max_tightness_deviation,
        best_objective=f,
        best=ens,
        restarts=cfg.restarts,
    )


def _require_tight(e: Ensemble, tol: float = TIGHTNESS_TOL) -> None:
    dev = e.tightness_deviation()
    if dev > tol:
        raise ValidationError(f"ensemble is not a tight frame: ||S - (n/d)I||_F = {dev:.3e} > {tol}")


def measure_prepare_fidelity(e: Ensemble) -> float:
    """Average fidelity d V2 / n^2 of measuring with the ensemble POVM and re-preparing."""
    _require_tight(e)
    return e.d * verify_frame(e).v2 / e.n**2


def povm_from_ensemble(e: Ensemble) -> Povm:
    _require_tight(e)
    els = (e.d / e.n) * np.einsum("ki,kj->kij", e.vectors, e.vectors.conj())
    return Povm(els)


def conjugate_ensemble(e: Ensemble) -> Ensemble:
    return Ensemble(e.vectors.conj())


def entangled_state(e: Ensemble) -> np.ndarray:
    """(sqrt(d)/n) sum_k |phi_k>|phi_k*>, a maximally entangled vector in C^d (x) C^d."""
    _require_tight(e)
    v = e.vectors
    psi = (math.sqrt(e.d) / e.n) * np.einsum("ki,kj->ij", v, v.conj()).reshape(-1)
    return psi / np.linalg.norm(psi)


def reduced_state_deviation(psi: np.ndarray, d: int) -> float:
    """Largest trace distance of either reduced state from I/d."""
    worst = 0.0
    for keep in (0, 1):
        rho = partial_trace(psi, (d, d), keep)
        eig = np.linalg.eigvalsh(rho - np.eye(d) / d)
        worst = max(worst, 0.5 * float(np.sum(np.abs(eig))))
    return worst


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(math.isqrt(p)) + 1))


def build_mub(d: int, k: int) -> Ensemble:
    """k mutually unbiased bases in prime dimension d, basis-major order.

    d = 2 gives the Z, X, Y eigenbases. Odd primes use the standard basis
    followed by the quadratic-phase bases omega^(a x^2 + b x)/sqrt(d).
    """
    if not is_prime(d):
        raise ValidationError(f"MUB construction needs a prime dimension, got {d}")
    if not 2 <= k <= d + 1:
        raise ValidationError(f"basis count k must lie in [2, {d + 1}], got {k}")
    if d == 2:
        s = 1 / math.sqrt(2)
        bases = [
            [[1, 0], [0, 1]],
            [[s, s], [s, -s]],
            [[s, 1j * s], [s, -1j * s]],
        ]
        vecs = np.array(bases[:k], dtype=complex).reshape(2 * k, 2)
        return Ensemble(vecs)
    x = np.arange(d)
    omega = np.exp(2j * np.pi / d)
    bases = [np.eye(d, dtype=complex)]
    for a in range(k - 1):
        b = np.arange(d)[:, None]
        bases.append(omega ** ((a * x * x + b * x) % d) / math.sqrt(d))
    return Ensemble(np.concatenate(bases, axis=0))


@dataclass
class RepudiationResult:
    """Outcome of the orthogonal-complement construction.

    ``povm`` includes the failure element as its last outcome when
    ``failure_needed`` is set.
    """

    povm: Povm
    subsets: list[tuple[int, ...]]
    scale: float
    residual_norm: float
    failure_needed: bool
    failure_element: np.ndarray | None = field(default=None, repr=False)


def repudiation_povm(e: Ensemble, b: int, tol: float = REPUDIATION_TOL) -> RepudiationResult:
    """One scaled projector onto the complement of span(S) for each b-subset S.

    A single scale is fitted by least squares so the elements sum as close to
    the identity as possible. If the residual exceeds ``tol`` the scale is
    reduced to the largest value keeping ``I - c * sum`` positive and that
    remainder is appended as an explicit failure outcome.
    """
    n, d = e.n, e.d
    if not 1 <= b <= d - 1:
        raise ValidationError(f"subset size b must lie in [1, {d - 1}], got {b}")
    if math.comb(n, b) > MAX_REPUDIATION_SUBSETS:
        raise ValidationError(f"C({n},{b}) subsets is too many to enumerate")
    subsets = list(itertools.combinations(range(n), b))
    eye = np.eye(d)
    projs = []
    for sub in subsets:
        u, sv, _ = np.linalg.svd(e.vectors[list(sub)].T, full_matrices=False)
        rank = int(np.sum(sv > 1e-10 * max(sv[0], 1.0)))
        if rank >= d:
            raise ValidationError(f"subset {sub} spans the full space; its complement projector vanishes")
        q = u[:, :rank]
        projs.append(eye - q @ q.conj().T)
    projs = np.array(projs)
    total = projs.sum(axis=0)
    scale = float(np.real(np.trace(total)) / np.sum(np.abs(total) ** 2))
    residual = eye - scale * total
    res_norm = float(np.linalg.norm(residual, "fro"))
    if res_norm <= tol:
        return RepudiationResult(Povm(scale * projs), subsets, scale, res_norm, False)
    top = float(np.linalg.eigvalsh((total + total.conj().T) / 2)[-1])
    scale = 1.0 / top
    failure = eye - scale * total
    failure = (failure + failure.conj().T) / 2
    els = np.concatenate([scale * projs, failure[None]], axis=0)
    return RepudiationResult(
        Povm(els), subsets, scale, float(np.linalg.norm(failure, "fro")), True, failure
    )


def frame_to_json(e: Ensemble) -> str:
    doc = {
        "d": e.d,
        "n": e.n,
        "vectors": [[[float(z.real), float(z.imag)] for z in row] for row in e.vectors],
    }
    # json writes floats with repr(), which round-trips (17 significant digits when needed)
    return json.dumps(doc, indent=1)


def frame_from_json(text: str) -> Ensemble:
    doc = json.loads(text)
    try:
        d, n, raw = int(doc["d"]), int(doc["n"]), doc["vectors"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed frame document: {exc}") from exc
    arr = np.array([[complex(re, im) for re, im in row] for row in raw], dtype=complex)
    if arr.shape != (n, d):
        raise ValidationError(f"frame document declares (n={n}, d={d}) but holds shape {arr.shape}")
    return Ensemble(arr)


def save_frame(e: Ensemble, path) -> None:
    Path(path).write_text(frame_to_json(e) + "\n", encoding="utf-8")


def load_frame(path) -> Ensemble:
    return frame_from_json(Path(path).read_text(encoding="utf-8"))
