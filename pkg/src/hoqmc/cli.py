"""Command-line experiment runner.

Subcommands
-----------
points       emit the nodes of a net as CSV
integrate    one estimate of a test integral
convergence  sweep over m
precision    plain QMC with nodes truncated to u digits, for several u
verify       dual-net strength report for a set of generating matrices
bounds       bound constants and worst-case error bounds

Exit codes: 0 success, 1 failed verification, 2 configuration error,
3 capacity guard.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from dataclasses import asdict

from . import __version__
from .bounds import VARIANTS, BoundParameters, constants_report, error_bound
from .constructions import interlaced_sobol, load_direction_numbers, parse_matrices
from .digital import DigitalNet, check_precision
from .dual import enumerate_dual, inferred_t, net_strength
from .errors import CapacityError, ConfigurationError, HoqmcError
from .experiments import (
    ALGORITHMS,
    ExperimentConfig,
    estimate_slope,
    precision_sweep,
    run_convergence,
    write_csv,
    write_json,
)
from .quadrature import algorithm1, algorithm2, evaluations, plain_qmc
from .testfunctions import PRECISIONS, TAGS, TestFunction, parse_gamma

DEFAULT_DIMS = {"f1": 1, "f2": 2, "f3": 100, "f4": 100}
# s = 100 sweeps stop at m = 16 to keep runtimes in minutes
DEFAULT_M_MAX = {"f1": 22, "f2": 22, "f3": 16, "f4": 16}


class UsageError(ConfigurationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_construction(p: argparse.ArgumentParser):
    p.add_argument("--base", type=int, default=2, help="prime base p (default 2)")
    p.add_argument("--alpha", type=int, default=2, help="interlacing factor / extrapolation order")
    p.add_argument("--direction-numbers", metavar="FILE", help="Joe-Kuo format direction-number file")


def _add_function(p: argparse.ArgumentParser):
    p.add_argument("--function", choices=TAGS, default="f1")
    p.add_argument("--dims", type=int, help="dimension s (default: 1 for f1, 2 for f2, 100 for f3/f4)")
    p.add_argument("--c1", type=float, default=1.3)
    p.add_argument("--c2", type=float, default=1.0)
    p.add_argument("--gamma", default="pow:2", help="coordinate weights, pow:<a> gives j^-a")
    p.add_argument("--precision", choices=PRECISIONS, help="integrand working precision")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hoqmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("points", help="emit net nodes as CSV")
    _add_construction(p)
    p.add_argument("--dims", type=int, default=1)
    p.add_argument("--m", type=int, help="p^m points (Sobol' construction only)")
    p.add_argument("--rows", type=int, help="precision n (default alpha*m)")
    p.add_argument("--truncate-u", type=int, help="truncate nodes to u digits")
    p.add_argument("--matrices", metavar="FILE", help="explicit generating matrices instead of Sobol'")
    p.add_argument("--format", choices=("rational", "decimal"), default="decimal")
    p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("integrate", help="single estimate")
    _add_construction(p)
    _add_function(p)
    p.add_argument("--algorithm", choices=ALGORITHMS, default="extrapolated-square")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--truncate-u", type=int)

    for name, help_ in (("convergence", "sweep over m"), ("precision", "sweep over truncation precision u")):
        p = sub.add_parser(name, help=help_)
        _add_construction(p)
        _add_function(p)
        p.add_argument("--m-min", type=int, default=3)
        p.add_argument("--m-max", type=int, help="default 22 for f1/f2, 16 for f3/f4")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--timing", action="store_true", help="fill the seconds column")
        p.add_argument("--slope", metavar="LO,HI", type=_int_list, help="print the fitted slope over m in [LO, HI] to stderr")
        if name == "convergence":
            p.add_argument("--algorithm", choices=ALGORITHMS, default="extrapolated-square")
            p.add_argument("--level", type=int, help="extrapolation level reported (default alpha)")
            p.add_argument("--truncate-u", type=int)
        else:
            p.add_argument("--u", type=_int_list, required=True, help="comma-separated precisions, e.g. 20,52")

    p = sub.add_parser("verify", help="dual-net strength report")
    _add_construction(p)
    p.add_argument("--dims", type=int, default=1)
    p.add_argument("--m", type=int, help="columns (Sobol' construction only)")
    p.add_argument("--rows", type=int, help="precision n (default alpha*m)")
    p.add_argument("--matrices", metavar="FILE", help="explicit generating matrices")
    p.add_argument("--expected-t", type=int, help="pass if the inferred t is at most this value")

    p = sub.add_parser("bounds", help="bound constants and error bounds")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--t", type=int, default=0, help="quality parameter of the order-alpha sequence")
    p.add_argument("--dims", type=int, default=1)
    p.add_argument("--gamma", default="pow:2")
    p.add_argument("--m", type=_int_list, help="also report bounds at these m")
    return parser


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _table(args):
    return load_direction_numbers(args.direction_numbers) if args.direction_numbers else None


def _check_base(args):
    if args.alpha < 1:
        raise ConfigurationError("alpha must be >= 1")
    if args.base != 2:
        raise ConfigurationError("the Sobol' construction is binary; other bases need --matrices")


def _test_function(args) -> TestFunction:
    dims = args.dims if args.dims is not None else DEFAULT_DIMS[args.function]
    gamma = parse_gamma(args.gamma, dims) if args.function in ("f3", "f4") else None
    return TestFunction(args.function, dims, c1=args.c1, c2=args.c2, gamma=gamma, precision=args.precision)


def _config(args, **kw) -> ExperimentConfig:
    m_max = args.m_max if args.m_max is not None else DEFAULT_M_MAX[args.function]
    return ExperimentConfig(
        function=_test_function(args),
        alpha=args.alpha,
        p=args.base,
        m_min=args.m_min,
        m_max=m_max,
        threads=args.threads,
        table=_table(args),
        timing=args.timing,
        **kw,
    )


def _emit(records, args):
    with _output(args.out) as fh:
        if args.format == "csv":
            write_csv(records, fh)
        else:
            write_json(records, fh)


def _report_slope(records, args):
    if args.slope:
        if len(args.slope) != 2:
            raise ConfigurationError("--slope takes LO,HI")
        print(f"slope m in [{args.slope[0]}, {args.slope[1]}]: {estimate_slope(records, tuple(args.slope)):.4f}", file=sys.stderr)


def _matrices(args):
    if args.alpha < 1:
        raise ConfigurationError("alpha must be >= 1")
    if args.matrices:
        with open(args.matrices) as fh:
            return parse_matrices(fh.read(), args.base)
    _check_base(args)
    if args.m is None:
        raise ConfigurationError("--m is required without --matrices")
    n = args.rows if args.rows is not None else args.alpha * args.m
    check_precision(n, args.base)
    return interlaced_sobol(args.dims, args.alpha, _table(args)).submatrices(n, args.m)


def cmd_points(args) -> int:
    net = DigitalNet(_matrices(args))
    pts = net.points()
    if args.truncate_u is not None:
        if args.truncate_u < 1:
            raise ConfigurationError("u must be positive")
        pts = pts.truncate(min(args.truncate_u, pts.n))
    with _output(args.out) as fh:
        fh.write(",".join(["h"] + [f"x{j + 1}" for j in range(pts.dims)]) + "\n")
        if args.format == "rational":
            q = pts.p**pts.n
            for h, row in enumerate(pts.numerators.tolist()):
                fh.write(",".join([str(h)] + [f"{v}/{q}" for v in row]) + "\n")
        else:
            for h, row in enumerate(pts.to_real().tolist()):
                fh.write(",".join([str(h)] + [repr(x) for x in row]) + "\n")
    return 0


def cmd_integrate(args) -> int:
    _check_base(args)
    tf = _test_function(args)
    f = tf.integrand()
    seq = interlaced_sobol(tf.dims, args.alpha, _table(args))
    if args.algorithm == "extrapolated-square":
        est = algorithm1(f, seq, args.m, args.alpha, args.threads)
    elif args.algorithm == "extrapolated-fixed-m":
        est = algorithm2(f, seq, args.m, args.alpha, args.threads)
    else:
        est = plain_qmc(f, seq, args.m, args.truncate_u, args.threads)
    record = {
        "function": tf.tag,
        "algorithm": args.algorithm,
        "alpha": args.alpha,
        "p": args.base,
        "dims": tf.dims,
        "m": args.m,
        "N": evaluations(args.algorithm, args.m, args.alpha, args.base),
        "estimate": est,
        "exact": f.exact,
        "abs_error": abs(est - f.exact),
        "evaluations": f.evaluations,
    }
    json.dump(record, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0


def cmd_convergence(args) -> int:
    _check_base(args)
    config = _config(args, algorithm=args.algorithm, level=args.level, truncate_u=args.truncate_u)
    records = run_convergence(config)
    _emit(records, args)
    _report_slope(records, args)
    return 0


def cmd_precision(args) -> int:
    _check_base(args)
    if any(not 1 <= u <= 63 for u in args.u):
        raise ConfigurationError("each u must lie in [1, 63]")
    sweep = precision_sweep(_config(args, algorithm="plain"), args.u)
    with _output(args.out) as fh:
        if args.format == "csv":
            for i, (u, recs) in enumerate(sweep.items()):
                write_csv(recs, fh, {"u": u}, header=i == 0)
        else:
            json.dump([{"u": u, **asdict(r)} for u, recs in sweep.items() for r in recs], fh, indent=1)
            fh.write("\n")
    for recs in sweep.values():
        _report_slope(recs, args)
    return 0


def cmd_verify(args) -> int:
    mats = _matrices(args)
    n, m, p = mats[0].n, mats[0].m, mats[0].p
    print(f"matrices: {len(mats)} x ({n} x {m}) over F_{p}")
    dual = enumerate_dual(mats, p**n)
    print(f"dual vectors below p^n (including 0): {len(dual)}")
    strength = net_strength(mats, args.alpha)
    t = inferred_t(strength, args.alpha, m)
    print(f"mu_{args.alpha} strength: {strength}")
    print(f"inferred t: {t}")
    if args.expected_t is None:
        return 0
    ok = t <= args.expected_t
    print(f"expected t <= {args.expected_t}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_bounds(args) -> int:
    report = {"alpha": args.alpha, "p": args.base, "t": args.t, "dims": args.dims}
    report.update(constants_report(args.alpha, args.base, args.t, args.dims))
    if args.m:
        params = BoundParameters(args.alpha, args.base, args.t, args.dims, gamma=list(parse_gamma(args.gamma, args.dims)))
        report["bounds"] = [
            {"variant": v, "m": m, "N": evaluations(v, m, args.alpha, args.base),
             "bound": error_bound(params, evaluations(v, m, args.alpha, args.base), v)}
            for m in args.m
            for v in VARIANTS
        ]
    json.dump(report, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return 0


COMMANDS = {
    "points": cmd_points,
    "integrate": cmd_integrate,
    "convergence": cmd_convergence,
    "precision": cmd_precision,
    "verify": cmd_verify,
    "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"hoqmc: error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"hoqmc: capacity: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, HoqmcError, ValueError, OSError) as exc:
        print(f"hoqmc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
