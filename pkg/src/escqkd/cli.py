"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 numerical failure (solver did not
converge). With ``--json`` the only thing written to stdout is one JSON
document; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import figures, frames, mcsim, mub, protocol
from .qcore import ValidationError

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts: list[str] = field(default_factory=list)
    summary: str = ""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _round(obj):
    """Round floats to 12 significant digits for stable output."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def _emit(args, payload: dict, lines: list[str], out) -> None:
    if args.json:
        out.write(json.dumps(_round(payload), sort_keys=True) + "\n")
    else:
        for line in lines:
            out.write(line + "\n")


def _g(v) -> str:
    return f"{v:.12g}"


def _matrix_json(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


def _load_ensemble(args) -> frames.Ensemble:
    spec = getattr(args, "frame", None)
    if spec == "icosahedral":
        return frames.build_icosahedral_code()
    if spec == "simplex":
        if args.d is None:
            raise ValidationError("--frame simplex needs --d")
        return frames.build_simplex(args.d)
    if spec:
        return frames.load_frame(spec)
    if args.d is None or args.n is None or args.seed is None:
        raise ValidationError("give --frame, or --d, --n and --seed to construct a code")
    res = frames.solve_grassmann_frame(args.d, args.n, frames.SolverConfig(seed=args.seed))
    if not res:
        raise _NumericalFailure(_failure_text(res))
    return res


class _NumericalFailure(Exception):
    pass


def _failure_text(f: frames.SolverFailure) -> str:
    return (
        f"no Grassmann frame found for d={f.d}, n={f.n} after {f.restarts} restarts; "
        f"best equiangular deviation {f.best_equiangular_deviation:.3e}, "
        f"tightness deviation {f.best_tightness_deviation:.3e}"
    )


def _cmd_frame_gen(args, out) -> CommandOutcome:
    if args.seed is None:
        raise ValidationError("frame gen requires --seed")
    cfg = frames.SolverConfig(
        seed=args.seed,
        restarts=args.restarts or frames.SolverConfig.restarts,
        success_tolerance=args.tol or frames.SolverConfig.success_tolerance,
    )
    res = frames.solve_grassmann_frame(args.d, args.n, cfg)
    if not res:
        report = frames.verify_frame(res.best).summary()
        _emit(args, {"converged": False, **report}, [_failure_text(res)], out)
        return CommandOutcome(EXIT_NUMERICAL, [], _failure_text(res))
    report = frames.verify_frame(res).summary()
    artifacts = []
    if args.out:
        frames.save_frame(res, args.out)
        artifacts.append(args.out)
    lines = [
        f"d={args.d} n={args.n} seed={args.seed}",
        f"max equiangular deviation {_g(report['max_equiangular_deviation'])}",
        f"max tightness deviation {_g(report['max_tightness_deviation'])}",
    ] + ([f"wrote {args.out}"] if args.out else [])
    _emit(args, {"converged": True, "artifacts": artifacts, **report}, lines, out)
    return CommandOutcome(EXIT_OK, artifacts, lines[1])


def _cmd_frame_check(args, out) -> CommandOutcome:
    e = _load_ensemble(args)
    rep = frames.verify_frame(e)
    summary = rep.summary()
    ok = rep.is_grassmann_frame(args.tol or frames.TIGHTNESS_TOL)
    summary["is_grassmann_frame"] = ok
    lines = [f"{k} {_g(v) if isinstance(v, float) else v}" for k, v in summary.items()]
    _emit(args, summary, lines, out)
    return CommandOutcome(EXIT_OK if ok else EXIT_INVALID, [], f"grassmann frame: {ok}")


def _cmd_mub_gen(args, out) -> CommandOutcome:
    e = frames.build_mub(args.d, args.k)
    artifacts = []
    if args.out:
        frames.save_frame(e, args.out)
        artifacts.append(args.out)
    lines = [f"{args.k} unbiased bases in d={args.d}, {e.n} vectors"]
    _emit(args, {"d": args.d, "k": args.k, "n": e.n, "artifacts": artifacts}, lines, out)
    return CommandOutcome(EXIT_OK, artifacts, lines[0])


def _esc_params(args) -> protocol.EscParams:
    return protocol.EscParams(args.n, args.d, args.m, args.q)


def _cmd_analyze(args, out) -> CommandOutcome:
    p = _esc_params(args)
    s = protocol.attack_summary(p)
    rb = protocol.rate_bounds(protocol.joint_distribution(p))
    payload = {"params": {"n": p.n, "d": p.d, "m": p.m, "q": p.q}, "summary": s.as_dict(), "rates": rb.as_dict()}
    lines = [f"{k} {_g(v)}" for k, v in s.as_dict().items()] + [f"{k} {_g(v)}" for k, v in rb.as_dict().items()]
    _emit(args, payload, lines, out)
    return CommandOutcome(EXIT_OK, [], lines[0])


def _cmd_threshold(args, out) -> CommandOutcome:
    res = protocol.threshold(_esc_params(args).with_q(0.0))
    lines = [f"{k} {_g(v) if isinstance(v, float) else v}" for k, v in res.as_dict().items()]
    _emit(args, res.as_dict(), lines, out)
    return CommandOutcome(EXIT_OK, [], lines[2])


def _cmd_simulate(args, out) -> CommandOutcome:
    if args.seed is None:
        raise ValidationError("simulate requires --seed")
    if args.rounds is None:
        raise ValidationError("simulate requires --rounds")
    if args.k is not None:
        mp = mub.MubParams(args.d, args.k)
        cfg = mcsim.SimConfig((mp, args.q), args.rounds, args.seed)
        e = frames.build_mub(args.d, args.k)
    else:
        cfg = mcsim.SimConfig(_esc_params(args), args.rounds, args.seed)
        e = _load_ensemble(args)
    res = mcsim.simulate(cfg, e)
    summary, joint = mcsim.analytic_reference(cfg)
    rep = mcsim.compare_to_analytic(res, summary, joint)
    payload = {
        "rounds_total": res.rounds_total,
        "rounds_sifted": res.rounds_sifted,
        "empirical": res.estimates(),
        "standard_errors": res.standard_errors(),
        "analytic": summary.as_dict(),
        "z_scores": rep.z_scores,
        "chi_square": rep.chi_square,
        "chi_square_dof": rep.chi_square_dof,
        "chi_square_pvalue": rep.chi_square_pvalue,
        "all_within_3_sigma": rep.all_passed,
    }
    lines = [
        f"{k} empirical {_g(res.estimates()[k])} analytic {_g(getattr(summary, k))} z {_g(rep.z_scores[k])}"
        for k in mcsim.QUANTITIES
    ] + [f"chi2 {_g(rep.chi_square)} dof {rep.chi_square_dof} p {_g(rep.chi_square_pvalue)}"]
    _emit(args, payload, lines, out)
    return CommandOutcome(EXIT_OK, [], lines[-1])


def _cmd_capacity(args, out) -> CommandOutcome:
    e = _load_ensemble(args)
    kind = args.decoder
    payload = {"decoder": kind, "n": e.n, "d": e.d}
    if kind == "unitary-opt":
        if args.seed is None:
            raise ValidationError("capacity --decoder unitary-opt requires --seed")
        res = cap.optimize_rotated_decoder(e, seed=args.seed, restarts=args.restarts or 32)
        value = res.capacity
        payload.update(unitary=_matrix_json(res.unitary), restart=res.restart, start_capacity=res.start_capacity)
    elif kind == "bloch-inversion":
        value = cap.channel_mutual_info(e, cap.bloch_inversion_decoder(e))
    elif kind == "repudiation":
        if args.b is None:
            raise ValidationError("repudiation decoder needs --b")
        rep = frames.repudiation_povm(e, args.b)
        value = cap.channel_mutual_info(e, cap.DecoderSpec("repudiation", b=args.b))
        payload.update(b=args.b, failure_needed=rep.failure_needed, residual_norm=rep.residual_norm)
    else:
        value = cap.channel_mutual_info(e, cap.DecoderSpec(kind))
    payload["capacity"] = value
    lines = [f"capacity {_g(value)} bits ({kind})"]
    _emit(args, payload, lines, out)
    return CommandOutcome(EXIT_OK, [], lines[0])


def _cmd_sweep(args, out) -> CommandOutcome:
    if args.figure == "fig1":
        d = args.d or 10
        lo = args.n_min or d + 1
        hi = args.n_max or d * d
        rows = figures.figure1_data(d, range(lo, hi + 1), strict=not args.extrapolate)
        x, series = "count", (lambda r: f"{r.ensemble_kind} {r.policy if r.ensemble_kind == 'ESC' else ''}".strip())
        y = "threshold_r"
    else:
        dims = [int(v) for v in args.dims.split(",")] if args.dims else [2, 3, 5, 7, 10]
        rows = figures.figure2_data(dims)
        x, y, series = "rate_max", "threshold_r", "ensemble_kind"
    text = figures.rows_to_csv(rows)
    artifacts = []
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        artifacts.append(args.out)
    if args.svg:
        Path(args.svg).write_text(figures.rows_to_svg(rows, x, y, series), encoding="utf-8")
        artifacts.append(args.svg)
    if args.json:
        payload = {"rows": [r.__dict__ for r in rows], "artifacts": artifacts}
        _emit(args, payload, [], out)
    elif not args.out:
        out.write(text)
    else:
        out.write(f"wrote {len(rows)} rows to {args.out}\n")
    return CommandOutcome(EXIT_OK, artifacts, f"{len(rows)} rows")


def _cmd_entangle(args, out) -> CommandOutcome:
    e = _load_ensemble(args)
    psi = frames.entangled_state(e)
    dev = frames.reduced_state_deviation(psi, e.d)
    artifacts = []
    if args.out:
        doc = {"d": e.d, "amplitudes": [[float(z.real), float(z.imag)] for z in psi]}
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        artifacts.append(args.out)
    payload = {
        "d": e.d,
        "n": e.n,
        "norm": float(np.linalg.norm(psi)),
        "reduced_state_trace_distance": dev,
        "artifacts": artifacts,
    }
    lines = [f"norm {_g(payload['norm'])}", f"reduced state distance from I/d {dev:.3e}"]
    _emit(args, payload, lines, out)
    return CommandOutcome(EXIT_OK, artifacts, lines[1])


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    for flag in ("--d", "--n", "--m", "--k", "--b", "--seed", "--rounds", "--restarts"):
        common.add_argument(flag, type=int)
    common.add_argument("--q", type=float, default=0.0)
    common.add_argument("--tol", type=float)
    common.add_argument("--out")
    common.add_argument("--json", action="store_true")
    common.add_argument("--frame", help="frame JSON path, or 'icosahedral' / 'simplex'")

    parser = _Parser(prog="escqkd", description="Equiangular-code key distribution toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    frame = sub.add_parser("frame", help="construct or check Grassmann frames")
    fsub = frame.add_subparsers(dest="action", required=True, parser_class=_Parser)
    fsub.add_parser("gen", parents=[common]).set_defaults(func=_cmd_frame_gen)
    check = fsub.add_parser("check", parents=[common])
    check.add_argument("path", nargs="?")
    check.set_defaults(func=_cmd_frame_check)

    mubp = sub.add_parser("mub", help="mutually unbiased bases")
    msub = mubp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    msub.add_parser("gen", parents=[common]).set_defaults(func=_cmd_mub_gen)

    sub.add_parser("analyze", parents=[common]).set_defaults(func=_cmd_analyze)
    sub.add_parser("threshold", parents=[common]).set_defaults(func=_cmd_threshold)
    sub.add_parser("simulate", parents=[common]).set_defaults(func=_cmd_simulate)
    capp = sub.add_parser("capacity", parents=[common])
    capp.add_argument(
        "--decoder",
        default="same-ensemble",
        choices=["same-ensemble", "conjugate", "unitary-opt", "repudiation", "bloch-inversion"],
    )
    capp.set_defaults(func=_cmd_capacity)

    sweep = sub.add_parser("sweep", help="figure datasets as CSV")
    sweep.add_argument("figure", choices=["fig1", "fig2"])
    sweep.add_argument("--n-min", type=int)
    sweep.add_argument("--n-max", type=int)
    sweep.add_argument("--dims")
    sweep.add_argument("--svg")
    sweep.add_argument("--extrapolate", action="store_true", help="allow n > d^2 in fig1 (closed forms only)")
    for flag in ("--d", "--seed"):
        sweep.add_argument(flag, type=int)
    sweep.add_argument("--out")
    sweep.add_argument("--json", action="store_true")
    sweep.set_defaults(func=_cmd_sweep)

    sub.add_parser("entangle", parents=[common]).set_defaults(func=_cmd_entangle)
    return parser


_REQUIRED = {
    "_cmd_frame_gen": ("d", "n"),
    "_cmd_mub_gen": ("d", "k"),
    "_cmd_analyze": ("n", "d", "m"),
    "_cmd_threshold": ("n", "d", "m"),
}


def run(argv=None, out=None, err=None) -> CommandOutcome:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "path", None):
            args.frame = args.path
        for name in _REQUIRED.get(args.func.__name__, ()):
            if getattr(args, name) is None:
                raise ValidationError(f"--{name} is required for this command")
        outcome = args.func(args, out)
        if outcome.exit_code != EXIT_OK:
            err.write(f"failed: {outcome.summary}\n")
        return outcome
    except SystemExit as exc:
        # --help
        return CommandOutcome(int(exc.code or 0), [], "")
    except (_UsageError, ValidationError, FileNotFoundError) as exc:
        err.write(f"error: {exc}\n")
        return CommandOutcome(EXIT_INVALID, [], str(exc))
    except _NumericalFailure as exc:
        err.write(f"numerical failure: {exc}\n")
        return CommandOutcome(EXIT_NUMERICAL, [], str(exc))


def main(argv=None) -> int:
    return run(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
