"""Command line entry point.

Exit codes: 0 pass, 1 inconsistency or verification failure, 2 input error,
3 numerical-budget warning promoted to an error by ``--strict``.  Errors are
written to stderr as a single JSON object ``{"error": code, "message": ...}``.
"""

import argparse
import csv
import io
import json
import sys
import warnings

from .scattering_core import (
    LINE,
    Diagram,
    InconsistencyError,
    diagram_svg,
    is_consistent,
    ks_complete,
    loop_product,
    standard_inputs,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
DEFAULT_HBARS = [0.2, 0.1, 0.05, 0.025]


class InputError(ValueError):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _read_diagram(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError("io_error", str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise InputError("invalid_json", f"{path}: {exc}") from exc
    try:
        return Diagram.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise InputError("schema_violation", f"{path}: {exc}") from exc


def _inputs(args):
    if args.input:
        d = _read_diagram(args.input)
        lines = [w for w in d.walls if w.support == LINE]
        if len(lines) != 2 or len(d.walls) != 2:
            raise InputError("schema_violation", "input diagram must consist of exactly two line walls")
        if args.order > d.order:
            raise InputError("invariant_violation", f"--order {args.order} exceeds the input order {d.order}")
        return tuple(w.with_order(args.order) for w in lines)
    return standard_inputs(args.preset, args.order)


def cmd_complete(args):
    w1, w2 = _inputs(args)
    d = ks_complete(w1, w2, args.order)
    _write(args.out, _dump(d.to_json()))
    if args.svg:
        _write(args.svg, diagram_svg(d))
    return EXIT_OK


def cmd_check(args):
    d = _read_diagram(args.diagram)
    ok = is_consistent(d)
    _write(args.out, _dump({"consistent": ok, "order": d.order, "walls": len(d.nontrivial())}))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_product(args):
    if args.diagram:
        d = _read_diagram(args.diagram)
    else:
        d = Diagram(args.order, [])
    g = loop_product(d, args.base_angle)
    _write(args.out, _dump({"log": g.log.to_json(), "identity": g.log.is_zero()}))
    return EXIT_OK


def cmd_trees(args):
    from .mc_solver import enumerate_trees

    inputs = _inputs(args)
    out = [
        {"tree": t.name, "leaves": t.leaves, "order": t.order,
         "automorphisms": t.automorphisms, "ribbon_count": t.ribbon_count}
        for t in enumerate_trees(inputs, args.order)
    ]
    _write(args.out, _dump({"order": args.order, "trees": out}))
    return EXIT_OK


def cmd_verify(args):
    from .mc_solver import verify_against_ks

    inputs = _inputs(args)
    report = verify_against_ks(inputs, args.order, args.tol, args.method, args.budget, args.seed)
    _write(args.out, _dump(report))
    if not report["ks_match"]:
        return EXIT_FAIL
    if report["flagged"]:
        warnings.warn(f"{len(report['flagged'])} coefficients did not snap to rationals")
        if args.strict:
            return EXIT_BUDGET
    elif not report["snapped_match"] and args.strict:
        return EXIT_FAIL
    return EXIT_OK


def cmd_asymptotics(args):
    from . import asymptotics_lab as lab
    from .lattice_algebra import TruncatedSeries, series_log
    from .tropical_vertex import LieElement, normal_of

    hbars = args.hbar or DEFAULT_HBARS
    if any(b >= a for a, b in zip(hbars, hbars[1:])):
        raise InputError("invariant_violation", "--hbar values must be strictly decreasing")
    if any(h <= 0 for h in hbars):
        raise InputError("invariant_violation", "--hbar values must be positive")
    m = (1, 1)
    f = TruncatedSeries(args.order, {((0, 0), 0): 1, (m, 1): 1})
    log_theta = LieElement.from_series(series_log(f), normal_of(m))
    try:
        rows = lab.single_wall_sweep(log_theta, hbars, args.order)
        two = [lab.two_wall_first_correction(h) for h in hbars]
    except ValueError as exc:
        raise InputError("invariant_violation", str(exc)) from exc
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["hbar", "region", "sup_error"])
    for h, up, down, _p in rows:
        wr.writerow([repr(h), "H+", f"{up:.12e}"])
        wr.writerow([repr(h), "H-", f"{down:.12e}"])
    for h, v in zip(hbars, two):
        wr.writerow([repr(h), "two_wall", f"{abs(v - 1.0):.12e}"])
    summary = {
        "hbar": hbars,
        "single_wall": {
            "sup_error": [r[1] for r in rows],
            "sup_H_minus": [r[2] for r in rows],
            "plateau": [r[3] for r in rows],
        },
        "two_wall": {"value": two, "deviation": [abs(v - 1.0) for v in two]},
    }
    if len(hbars) >= 3:
        summary["single_wall"]["slope"] = lab.convergence_rate([(r[0], r[1]) for r in rows])
        devs = [(h, abs(v - 1.0)) for h, v in zip(hbars, two)]
        if all(e > 0 for _, e in devs):
            summary["two_wall"]["slope"] = lab.convergence_rate(devs)
    if args.out and args.out != "-":
        _write(args.out, buf.getvalue())
        _write(args.out.rsplit(".", 1)[0] + ".summary.json", _dump(summary))
    else:
        _write(None, buf.getvalue())
        _write(None, _dump(summary))
    if args.svg:
        res = lab.single_wall_gauge(log_theta, hbars[-1], 1)
        _write(args.svg, lab.heatmap_svg(res.fields[(1, 1)], res.grid.inside()))
    return EXIT_OK


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="scatterlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, order=True, inputs=False):
        if order:
            sp.add_argument("--order", type=_positive_int, default=3)
        if inputs:
            sp.add_argument("--preset", choices=["simple", "doubled"], default="simple")
            sp.add_argument("--input", help="diagram JSON holding the two initial line walls")
        sp.add_argument("--out", default="-")
        sp.add_argument("--strict", action="store_true")

    sp = sub.add_parser("complete", help="consistent completion of two line walls")
    common(sp, inputs=True)
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_complete)

    sp = sub.add_parser("check", help="consistency check of a diagram JSON")
    sp.add_argument("diagram")
    common(sp, order=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("product", help="loop product of a diagram (identity if none given)")
    sp.add_argument("diagram", nargs="?")
    common(sp)
    sp.add_argument("--base-angle", type=float)
    sp.set_defaults(func=cmd_product)

    sp = sub.add_parser("trees", help="list the labelled trees up to the given order")
    common(sp, inputs=True)
    sp.set_defaults(func=cmd_trees)

    sp = sub.add_parser("verify", help="tree sum against the completion")
    common(sp, inputs=True)
    sp.add_argument("--method", choices=["quadrature", "montecarlo"], default="quadrature")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("asymptotics", help="single-wall and two-wall hbar sweeps")
    common(sp)
    sp.add_argument("--hbar", type=float, nargs="+")
    sp.add_argument("--svg")
    sp.set_defaults(func=cmd_asymptotics)
    return p


def _error(code, message):
    sys.stderr.write(json.dumps({"error": code, "message": message}, sort_keys=True) + "\n")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        _error(exc.code, str(exc))
        return EXIT_INPUT
    except InconsistencyError as exc:
        _error("inconsistency", str(exc))
        return EXIT_FAIL
    except (ValueError, TypeError) as exc:
        _error("invalid_input", str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
