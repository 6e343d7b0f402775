"""Acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line; the lines are printed in the
terminal summary (see conftest.py) and when this file is run as a script.
"""

import itertools
import math
import time

import numpy as np

from escqkd import capacity, frames, mcsim, protocol
from escqkd.figures import esc_best_rate, esc_best_threshold, figure1_data
from escqkd.mub import MubParams, mub_threshold
from escqkd.protocol import EscParams

RESULTS: dict = {}


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


def _grid(max_n=12):
    for d in range(2, max_n):
        for n in range(d + 1, min(d * d, max_n) + 1):
            for m in sorted({0, 1, n // 2, n - 2}):
                yield n, d, m


def test_criterion_01_qutrit_nominal_capacity():
    t0 = time.perf_counter()
    e = frames.build_icosahedral_code()
    val = capacity.channel_mutual_info(e)
    dt = time.perf_counter() - t0
    _report(1, abs(val - 0.424) <= 0.001 and dt < 1.0, f"same-ensemble capacity {val:.6f} (0.424 +- 0.001), {dt:.3f}s")


def test_criterion_02_rotated_decoder():
    t0 = time.perf_counter()
    res = capacity.optimize_rotated_decoder(frames.build_icosahedral_code(), seed=7, restarts=32)
    dt = time.perf_counter() - t0
    _report(2, res.capacity >= 0.628 and dt < 600, f"rotated-decoder optimum {res.capacity:.6f} (>= 0.628), {dt:.1f}s")


def test_criterion_03_repudiation_capacity():
    t0 = time.perf_counter()
    val = capacity.repudiation_capacity(frames.build_icosahedral_code(), 2)
    dt = time.perf_counter() - t0
    ok = abs(val - 0.734) <= 0.005 and val < math.log2(3) / 2 and dt < 10
    _report(3, ok, f"repudiation capacity {val:.6f} (0.734 +- 0.005, < {math.log2(3) / 2:.4f}), {dt:.3f}s")


def test_criterion_04_mub_comparison():
    rate_mub = mub_threshold(MubParams(25, 2)).rate_max
    rate_esc = protocol.key_rate_noiseless(EscParams(35, 25, 0))
    ok = abs(rate_mub - 2.3219) <= 5e-5 and rate_esc > 2.3219
    _report(4, ok, f"MUB(25,2) rate {rate_mub:.4f}; ESC(35,25,0) key rate {rate_esc:.3f} > 2.3219")


def test_criterion_05_formula_vs_enumeration():
    t0 = time.perf_counter()
    worst_summary = worst_joint = 0.0
    points = 0
    for n, d, m in _grid():
        for q in (0.0, 0.25, 0.5, 0.75, 1.0):
            p = EscParams(n, d, m, q)
            a = np.array(list(protocol.attack_summary(p).as_dict().values()))
            b = np.array(list(protocol.brute_force_summary(p).as_dict().values()))
            worst_summary = max(worst_summary, float(np.max(np.abs(a - b))))
            ja = protocol.joint_distribution(p, "closed").probs
            jb = protocol.joint_distribution(p, "brute").probs
            worst_joint = max(worst_joint, float(np.max(np.abs(ja - jb))))
            points += 1
    dt = time.perf_counter() - t0
    ok = worst_summary <= 1e-12 and worst_joint <= 1e-12 and dt < 60
    _report(5, ok, f"{points} points, max summary diff {worst_summary:.1e}, max joint diff {worst_joint:.1e}, {dt:.1f}s")


def test_criterion_06_monte_carlo():
    t0 = time.perf_counter()
    cfg = mcsim.SimConfig(EscParams(6, 3, 2, 0.5), 1_000_000, seed=2024)
    res = mcsim.simulate(cfg, frames.build_icosahedral_code())
    rep = mcsim.compare_to_analytic(res, *mcsim.analytic_reference(cfg))
    mcfg = mcsim.SimConfig((MubParams(2, 2), 1.0), 1_000_000, seed=2024)
    mres = mcsim.simulate(mcfg, frames.build_mub(2, 2))
    err = 1 - mres.p_ab
    z_err = (err - 0.25) / math.sqrt(0.25 * 0.75 / mres.rounds_sifted)
    dt = time.perf_counter() - t0
    zmax = max(abs(v) for v in rep.z_scores.values())
    ok = rep.all_passed and abs(z_err) <= 3 and dt < 30
    _report(6, ok, f"ESC max |z| {zmax:.2f}; MUB error {err:.4f} (z {z_err:.2f}); {dt:.1f}s")


def test_criterion_07_depolarizing_roundtrip():
    worst = 0.0
    exact_zero = True
    for n, d, m in _grid():
        if m < 1:
            continue
        p = EscParams(n, d, m)
        for r in np.linspace(0.0, 1.0, 11):
            back = float(protocol.depolarizing_from_error(p, protocol.error_from_depolarizing(p, float(r))))
            worst = max(worst, abs(back - r))
        exact_zero &= protocol.depolarizing_from_error(p, protocol.noiseless_error_rate(p)) == 0
    _report(7, worst <= 1e-10 and exact_zero, f"max round-trip error {worst:.1e}; noiseless p_e -> r = 0 exactly: {exact_zero}")


def test_criterion_08_figure1_property():
    t0 = time.perf_counter()
    rows = figure1_data(10, range(11, 111), strict=False)
    esc = {r.count: r.threshold_r for r in rows if r.ensemble_kind == "ESC" and r.policy == "m=n-2"}
    mubs = {r.count: r.threshold_r for r in rows if r.ensemble_kind == "MUB"}
    margins = [esc[10 * k] - mubs[10 * k] for k in range(2, 12)]
    dt = time.perf_counter() - t0
    ok = all(x > 0 for x in margins) and dt < 600
    _report(8, ok, f"ESC(m=n-2) minus MUB threshold over k=2..11: min {min(margins):.4f}; {dt:.1f}s")


def test_criterion_09_figure2_property():
    details = []
    ok = True
    for d in (2, 3, 5, 7, 10):
        r_esc, _ = esc_best_threshold(2 * d, d)
        rate_esc, _ = esc_best_rate(2 * d, d)
        r_mub = mub_threshold(MubParams(d, 2)).r_star
        ok &= r_esc > r_mub and rate_esc < math.log2(d) / 2
        details.append(f"d={d}: r {r_esc:.3f}>{r_mub:.3f}, rate {rate_esc:.3f}<{math.log2(d) / 2:.3f}")
    _report(9, ok, "; ".join(details))


def test_criterion_10_frame_invariants():
    pairs = [(2, 3), (2, 4), (3, 4), (3, 6), (3, 9), (4, 5), (5, 6)]
    worst_dev = worst_ent = 0.0
    solved = True
    for d, n in pairs:
        e = frames.solve_grassmann_frame(d, n, frames.SolverConfig(seed=0))
        if not e:
            solved = False
            continue
        worst_dev = max(worst_dev, frames.verify_frame(e).max_equiangular_deviation)
        worst_ent = max(worst_ent, frames.reduced_state_deviation(frames.entangled_state(e), d))
    rng = np.random.default_rng(10)
    v1_ok = True
    for _ in range(1000):
        d = int(rng.integers(2, 7))
        n = int(rng.integers(d, 3 * d * d))
        v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        rep = frames.verify_frame(frames.Ensemble.from_unnormalized(v))
        v1_ok &= rep.v1 >= n * n / d * (1 - 1e-12)
    ok = solved and worst_dev <= 1e-6 and worst_ent <= 1e-10 and v1_ok
    _report(10, ok, f"solver ok {solved}, max deviation {worst_dev:.1e}, reduced-state error {worst_ent:.1e}, V1 bound on 1000 ensembles {v1_ok}")


def test_criterion_11_bisection_integrity():
    worst_root = 0.0
    monotone = True
    count = 0
    for n, d, m in _grid():
        base = EscParams(n, d, m)
        res = protocol.threshold(base)
        if not res.saturated:
            worst_root = max(worst_root, abs(res.i_e_at_q_star), abs(protocol.one_way_rate(base.with_q(res.q_star))))
        vals = [protocol.one_way_rate(base.with_q(q)) for q in np.linspace(0, 1, 21)]
        monotone &= all(b <= a + 1e-12 for a, b in itertools.pairwise(vals))
        count += 1
    _report(11, worst_root <= 1e-9 and monotone, f"{count} thresholds, max |I_E(q*)| {worst_root:.1e}, I_E non-increasing: {monotone}")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
