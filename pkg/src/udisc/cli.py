"""Command-line front end.

Usage:
    udisc synthesize --fixture case1
    udisc synthesize --fixture case2 --scheme parallel --format json
    udisc compile --fixture case1
    udisc simulate --fixture case2 --trials 100000 --noise-sigma 0.2 --format csv
    udisc synthesize --fixture case1 --format json | udisc simulate --protocol -
    udisc compare --fixture case1
    udisc calibrate

Exit codes: 0 success, 1 input error, 2 not distinguishable, 3 calibration failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import qmat
from .arc import eigenphase_arc, min_runs
from .errors import CalibrationError, NonUnitary, NotDistinguishable, UdiscError
from .fixtures import FIXTURES, fixture_pair
from .parallel import build_parallel, compare_schemes
from .photonsim import NoiseModel, noise_sweep, reports_to_csv
from .sequential import PLACEMENTS, SequentialProtocol, build_sequential
from .waveplate import calibrate, compile_protocol, compile_unitary, default_convention, evaluate_stage

EXIT_OK, EXIT_INPUT, EXIT_NOT_DISTINGUISHABLE, EXIT_CALIBRATION = 0, 1, 2, 3


class InputError(Exception):
    pass


def fmt_complex(z) -> str:
    z = complex(z)
    re_, im = (0.0 if abs(x) < 5e-15 else x for x in (z.real, z.imag))
    return f"{re_:.6g}{im:+.6g}i"


def fmt_state(v) -> str:
    return "[" + ", ".join(fmt_complex(z) for z in v) + "]"


def fmt_matrix(m) -> str:
    return "[" + "; ".join(", ".join(fmt_complex(z) for z in row) for row in np.asarray(m)) + "]"


def fmt_angle(rad: float) -> str:
    return f"{rad:.9g} rad ({math.degrees(rad):.6g} deg)"


def _load_json_arg(text: str):
    path = Path(text)
    try:
        if path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse JSON from {text!r}: {exc}") from None


def _load_matrix(text: str, name: str) -> np.ndarray:
    try:
        m = qmat.as_mat2(qmat.mat_from_json(_load_json_arg(text)))
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from None
    if not qmat.unitary_check(m):
        raise InputError(f"{name} is not unitary")
    return m


def resolve_pair(args, need_v: bool = True):
    if args.fixture:
        return fixture_pair(args.fixture)
    if args.u is None or (need_v and args.v is None):
        raise InputError("give --fixture or both --u and --v")
    u = _load_matrix(args.u, "--u")
    v = _load_matrix(args.v, "--v") if args.v is not None else None
    return u, v


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("UDISC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"UDISC_SEED must be an integer, got {env!r}") from None


def _emit(args, doc: dict, table: str, csv_text: str | None = None):
    if args.format == "json":
        json.dump(doc, sys.stdout, indent=2, sort_keys=False)
        sys.stdout.write("\n")
    elif args.format == "csv":
        if csv_text is None:
            raise InputError(f"--format csv is not available for '{args.command}'")
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(table.rstrip("\n") + "\n")


# --- commands --------------------------------------------------------------


def cmd_synthesize(args) -> int:
    u, v = resolve_pair(args)
    arc = eigenphase_arc(u.conj().T @ v)
    plan = min_runs(arc, args.tol)
    if not plan.distinguishable:
        raise NotDistinguishable("operations differ at most by a global phase")
    head = {"theta_rad": arc.theta, "n_runs": plan.n_runs, "scheme": args.scheme,
            "u": qmat.mat_to_json(u), "v": qmat.mat_to_json(v)}
    lines = [f"Theta   {fmt_angle(arc.theta)}", f"N       {plan.n_runs}"]
    if args.scheme == "parallel":
        p = build_parallel(u, v)
        head["protocol"] = p.to_json()
        lines += [
            f"scheme  parallel ({p.n_runs}-qubit input)",
            "weights " + ", ".join(f"{w:.6g}" for w in p.weights),
            "input   " + " + ".join(
                f"({fmt_complex(a)})|{i:0{p.n_runs}b}>" for i, a in enumerate(p.input_state) if abs(a) > 1e-12),
            f"overlap {abs(np.vdot(p.output_u, p.output_v)):.3g}",
        ]
    else:
        p = build_sequential(u, v, placement=args.placement)
        head["protocol"] = p.to_json()
        lines += [
            f"scheme  sequential (placement: {p.placement})",
            f"alpha   {fmt_angle(p.alpha)}",
            f"X       {fmt_matrix(p.aux_w_frame)}",
        ]
        lines += [f"X_{i}     {fmt_matrix(x)}" for i, x in enumerate(p.aux_physical, start=1)]
        lines += [
            f"psi_i   {fmt_state(p.input_state)}",
            f"out_U   {fmt_state(p.output_u)}",
            f"out_V   {fmt_state(p.output_v)}",
            f"psi_b   {fmt_state(p.measurement_basis)}",
        ]
    _emit(args, head, "\n".join(lines))
    return EXIT_OK


def _stage_line(name, plates):
    return f"{name:<12}" + "  ".join(f"{p.label or p.kind}={p.angle_deg:.4f}" for p in plates)


def cmd_compile(args) -> int:
    conv = default_convention()
    if not args.fixture and args.v is None:
        if args.u is None:
            raise InputError("give --fixture, --u, or --u and --v")
        u = _load_matrix(args.u, "--u")
        plates = compile_unitary(u, conv)
        dist = qmat.phase_invariant_distance(evaluate_stage(plates, conv), u)
        doc = {"convention": conv.to_json(), "stage": [p.to_json() for p in plates], "distance": dist}
        table = _stage_line("stage", plates) + f"\ndistance    {dist:.3g}"
        _emit(args, doc, table)
        return EXIT_OK
    u, v = resolve_pair(args)
    p = build_sequential(u, v, placement=args.placement)
    train = compile_protocol(p, u, v, conv)
    doc = {"train": train.to_json(), "hidden_v": [pl.to_json() for pl in compile_unitary(v, conv)]}
    lines = [_stage_line("prep", train.prep)]
    for i, slot in enumerate(train.op_slots):
        role = "U(V)" if i in train.hidden_slots else "X"
        lines.append(_stage_line(f"slot{i + 1} {role}", slot))
    lines.append(_stage_line("measurement", train.measurement))
    lines.append(_stage_line("V in slots", compile_unitary(v, conv)))
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def _sigmas(args) -> list[float]:
    if args.sweep:
        try:
            return sorted(float(s) for s in args.sweep.split(","))
        except ValueError:
            raise InputError(f"bad --sweep list {args.sweep!r}") from None
    return [args.noise_sigma]


def cmd_simulate(args) -> int:
    if args.scheme == "parallel":
        raise InputError("simulate supports the sequential scheme only")
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    if args.protocol:
        text = sys.stdin.read() if args.protocol == "-" else Path(args.protocol).read_text(encoding="utf-8")
        try:
            doc = json.loads(text)
            u = qmat.as_mat2(qmat.mat_from_json(doc["u"]))
            v = qmat.as_mat2(qmat.mat_from_json(doc["v"]))
            protocol = SequentialProtocol.from_json(doc["protocol"])
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"bad protocol document: {exc}") from None
    else:
        u, v = resolve_pair(args)
        protocol = build_sequential(u, v, placement=args.placement)
    seed = _seed(args)
    train = compile_protocol(protocol, u, v, default_convention())
    base = NoiseModel(0.0, {}, args.efficiency, args.dark_count)
    points = noise_sweep(train, u, v, _sigmas(args), args.trials, seed, base)
    reports = [r for pt in points for r in (pt.report_u, pt.report_v)]
    doc = {"seed": seed, "trials": args.trials, "sweep": [pt.to_json() for pt in points]}
    lines = []
    for pt in points:
        lines.append(f"sigma = {pt.sigma_deg:g} deg   mean success {pt.mean_success:.6f}")
        for r in (pt.report_u, pt.report_v):
            lo, hi = r.wilson_ci_95
            lines.append(f"  hidden={r.hidden}  D1={r.d1_counts:>8}  D2={r.d2_counts:>8}  "
                         f"none={r.no_click:>6}  success={r.success_prob:.6f}  95% CI [{lo:.6f}, {hi:.6f}]")
    _emit(args, doc, "\n".join(lines), reports_to_csv(reports))
    return EXIT_OK


def cmd_compare(args) -> int:
    u, v = resolve_pair(args)
    seq, par = compare_schemes(u, v, args.tol)
    fields = list(seq.to_json())
    doc = {"sequential": seq.to_json(), "parallel": par.to_json()}
    rows = [f"{'':<28}{'sequential':>12}{'parallel':>12}"]
    for f in fields[1:]:
        a, b = getattr(seq, f), getattr(par, f)
        rows.append(f"{f:<28}{str(a):>12}{str(b):>12}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    writer.writerow(seq.to_json())
    writer.writerow(par.to_json())
    _emit(args, doc, "\n".join(rows), buf.getvalue())
    return EXIT_OK


def cmd_calibrate(args) -> int:
    report = calibrate()
    lines = [f"convention  {report.convention}"]
    for row, stages in report.residuals.items():
        vals = "  ".join(f"{k}={v:.2e}" for k, v in stages.items() if k != "measurement_port")
        lines.append(f"{row:<4} {vals}  port={stages['measurement_port']}")
    _emit(args, report.to_json(), "\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "synthesize": cmd_synthesize,
    "compile": cmd_compile,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--u", help="U as JSON (inline or file path)")
    common.add_argument("--v", help="V as JSON (inline or file path)")
    common.add_argument("--fixture", choices=sorted(FIXTURES))
    common.add_argument("--scheme", choices=("sequential", "parallel"), default="sequential")
    common.add_argument("--placement", choices=PLACEMENTS, default="auto")
    common.add_argument("--trials", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--noise-sigma", type=float, default=0.0, help="plate angle std-dev, degrees")
    common.add_argument("--sweep", help="comma-separated sigma list (degrees)")
    common.add_argument("--efficiency", type=float, default=1.0)
    common.add_argument("--dark-count", type=float, default=0.0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--format", choices=("json", "table", "csv"), default="table")
    common.add_argument("--protocol", help="synthesize JSON output (file, or '-' for stdin)")

    parser = argparse.ArgumentParser(prog="udisc", description="Perfect discrimination of qubit unitaries.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except NotDistinguishable as exc:
        print(f"not perfectly distinguishable: {exc}", file=sys.stderr)
        return EXIT_NOT_DISTINGUISHABLE
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (InputError, NonUnitary, ValueError, KeyError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UdiscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
