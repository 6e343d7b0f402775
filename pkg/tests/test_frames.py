import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from escqkd import frames
from escqkd.qcore import ValidationError

from conftest import random_ensemble


def test_equiangular_overlap_values():
    assert frames.equiangular_overlap(4, 2) == pytest.approx(1 / 3)
    assert frames.equiangular_overlap(6, 3) == pytest.approx(0.2)
    assert frames.equiangular_overlap(9, 3) == pytest.approx(0.25)


def test_grassmann_v2_matches_direct_sum():
    # V2 of an exact frame: n diagonal ones plus n(n-1) off-diagonal c^2
    for n, d in [(3, 2), (4, 2), (6, 3), (9, 3), (5, 4)]:
        c = frames.equiangular_overlap(n, d)
        assert frames.grassmann_v2(n, d) == pytest.approx(n + n * (n - 1) * c * c, rel=1e-14)


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_simplex(d):
    rep = frames.verify_frame(frames.build_simplex(d))
    assert rep.is_grassmann_frame(1e-12)
    assert rep.v1 == pytest.approx((d + 1) ** 2 / d)


def test_icosahedral_code(icosahedral):
    rep = frames.verify_frame(icosahedral)
    assert rep.max_equiangular_deviation < 1e-14
    assert rep.max_tightness_deviation < 1e-14
    assert np.all(icosahedral.vectors.imag == 0)


def test_gram_by_definition(rng):
    e = random_ensemble(rng, 5, 3)
    v = e.vectors
    g = np.array([[np.vdot(v[j], v[k]) for k in range(5)] for j in range(5)])
    np.testing.assert_allclose(e.gram(), g, atol=1e-14)
    s = sum(np.outer(x, x.conj()) for x in v)
    np.testing.assert_allclose(e.frame_operator(), s, atol=1e-14)


def test_v1_lower_bound_random(rng):
    for _ in range(200):
        d = int(rng.integers(2, 6))
        n = int(rng.integers(d, d * d + 3))
        rep = frames.verify_frame(random_ensemble(rng, n, d))
        assert rep.v1 >= n * n / d - 1e-9
        assert rep.v2 >= frames.grassmann_v2(n, d) - 1e-9 or n > d * d


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        frames.Ensemble(np.array([[1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(ValidationError):
        frames.Ensemble(np.array([[1.0, 0.0, 0.0]]))
    e = frames.build_simplex(2)
    with pytest.raises(ValueError):
        e.vectors[0, 0] = 0


def test_objective_gradient_finite_difference(rng):
    v = random_ensemble(rng, 6, 3).vectors.copy()
    f, g = frames.frame_objective(v, 3)
    dv = rng.standard_normal(v.shape) + 1j * rng.standard_normal(v.shape)
    h = 1e-6
    fp = frames.frame_objective(v + h * dv, 3, with_grad=False)
    fm = frames.frame_objective(v - h * dv, 3, with_grad=False)
    fd = (fp - fm) / (2 * h)
    analytic = np.real(np.sum(g.conj() * dv))
    assert analytic == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("d,n", [(2, 3), (2, 4), (3, 4), (3, 6), (4, 5)])
def test_solver(d, n):
    e = frames.solve_grassmann_frame(d, n, frames.SolverConfig(seed=0))
    assert e, e
    rep = frames.verify_frame(e)
    assert rep.max_equiangular_deviation <= 1e-6
    assert rep.max_tightness_deviation <= 1e-6


def test_solver_deterministic():
    a = frames.solve_grassmann_frame(3, 6, frames.SolverConfig(seed=3))
    b = frames.solve_grassmann_frame(3, 6, frames.SolverConfig(seed=3))
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_solver_rejects_bad_sizes():
    with pytest.raises(ValidationError):
        frames.solve_grassmann_frame(3, 3)
    with pytest.raises(ValidationError):
        frames.solve_grassmann_frame(2, 5)


def test_solver_failure_is_reported():
    res = frames.solve_grassmann_frame(3, 6, frames.SolverConfig(seed=0, restarts=1, max_iterations=2))
    assert not res
    assert res.best is not None
    assert res.best_equiangular_deviation > 1e-6


def test_povm_and_fidelity(icosahedral):
    povm = frames.povm_from_ensemble(icosahedral)
    assert povm.completeness_deviation() < 1e-12
    # fidelity of measure-and-prepare: d V2 / n^2
    assert frames.measure_prepare_fidelity(icosahedral) == pytest.approx(3 * 7.2 / 36)


def test_povm_rejects_loose_frame(rng):
    with pytest.raises(ValidationError):
        frames.povm_from_ensemble(random_ensemble(rng, 6, 3))


@pytest.mark.parametrize("d,n", [(2, 3), (3, 6), (3, 9)])
def test_entangled_state_reduced_operator(d, n):
    e = frames.build_icosahedral_code() if (d, n) == (3, 6) else frames.solve_grassmann_frame(d, n)
    psi = frames.entangled_state(e)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)
    assert frames.reduced_state_deviation(psi, d) <= 1e-10


def test_entangled_state_is_maximally_entangled_directly():
    e = frames.build_simplex(2)
    psi = frames.entangled_state(e).reshape(2, 2)
    sv = np.linalg.svd(psi, compute_uv=False)
    np.testing.assert_allclose(sv, [1 / math.sqrt(2)] * 2, atol=1e-12)


@pytest.mark.parametrize("d,k", [(2, 2), (2, 3), (3, 2), (3, 4), (5, 6), (7, 3)])
def test_mub_unbiased(d, k):
    e = frames.build_mub(d, k)
    ov = e.overlaps()
    for a, b in itertools.combinations(range(k), 2):
        np.testing.assert_allclose(ov[a * d : (a + 1) * d, b * d : (b + 1) * d], 1 / d, atol=1e-12)
    for a in range(k):
        np.testing.assert_allclose(ov[a * d : (a + 1) * d, a * d : (a + 1) * d], np.eye(d), atol=1e-12)


def test_mub_rejects_composite():
    with pytest.raises(ValidationError):
        frames.build_mub(6, 2)
    with pytest.raises(ValidationError):
        frames.build_mub(3, 5)


def test_repudiation_povm(icosahedral):
    res = frames.repudiation_povm(icosahedral, 2)
    assert len(res.subsets) == 15
    assert not res.failure_needed
    assert res.povm.completeness_deviation() < 1e-10
    # each element annihilates its own subset
    for s, el in zip(res.subsets, res.povm.elements):
        for k in s:
            v = icosahedral.vectors[k]
            assert abs(np.vdot(v, el @ v)) < 1e-12


def test_repudiation_b1_qubit_is_inverted_projectors():
    e = frames.build_simplex(2)
    res = frames.repudiation_povm(e, 1)
    for k, el in enumerate(res.povm.elements):
        v = e.vectors[k]
        np.testing.assert_allclose(el, (2 / 3) * (np.eye(2) - np.outer(v, v.conj())), atol=1e-12)


def test_repudiation_failure_element_when_needed(rng):
    # complements weigh |1><1| twice and |0><0| once, so no single scale works
    v = np.array([[1, 0], [1, 0], [0, 1]], dtype=complex)
    e = frames.Ensemble(v)
    res = frames.repudiation_povm(e, 1)
    assert res.failure_needed
    assert res.povm.completeness_deviation() < 1e-10


def test_json_roundtrip(tmp_path, icosahedral):
    path = tmp_path / "f.json"
    frames.save_frame(icosahedral, path)
    back = frames.load_frame(path)
    np.testing.assert_array_equal(back.vectors, icosahedral.vectors)
    assert frames.frame_to_json(back) == frames.frame_to_json(icosahedral)


def test_json_rejects_mismatch():
    with pytest.raises(ValidationError):
        frames.frame_from_json('{"d": 2, "n": 3, "vectors": [[[1, 0], [0, 0]]]}')


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rotation_preserves_gram_moduli(seed):
    r = np.random.default_rng(seed)
    e = frames.build_icosahedral_code()
    q, _ = np.linalg.qr(r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3)))
    np.testing.assert_allclose(e.unitarily_rotated(q).overlaps(), e.overlaps(), atol=1e-12)
