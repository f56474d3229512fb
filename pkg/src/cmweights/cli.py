"""Command line front end.

Exit codes: 0 success or property holds, 1 property fails, 2 parse error,
3 numerical failure, 4 undecidable.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import error_transfer as et
from . import families as fam
from . import kernels as kn
from . import lattice
from .errors import (DimensionError, NotMonotoneError, NotSummableError, NumericalError, ParseError,
                     UndecidableError, WeightError)
from .monotone_geometry import MINORANT_MAX_D, maximal_monotone_minorant, verify_maximal
from .points import make_points
from .transforms import (TransformParams, membership_A_d, summability, t_down, t_down_naive, t_up,
                         t_up_naive)
from .weight_core import WeightTable, check_completely_monotone
from .weightfile import format_table, format_value, parse_text, read_weight_file

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_NUMERIC, EXIT_UNDECIDABLE = 0, 1, 2, 3, 4
AUTO_FACTOR = 1.05


class Report:
    """Plain ``key: value`` lines in insertion order."""

    def __init__(self, command: str):
        self.lines = [f"command: {command}"]

    def add(self, key: str, value) -> None:
        self.lines.append(f"{key}: {value}")

    def text(self, prefix: str = "") -> str:
        return "".join(f"{prefix}{line}\n" for line in self.lines)


def verdict(ok) -> str:
    return {True: "PASS", False: "FAIL", None: "UNKNOWN"}[ok]


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _positive(text: str):
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a positive decimal, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive decimal, got {text!r}")
    return v


def _c_or_auto(text: str):
    return "auto" if text == "auto" else _positive(text)


def _table(wf, d, exact):
    t = wf.table(d)
    if exact and not t.exact:
        t = t.to_exact()
    return t


def _C(value, exact):
    return value if exact else float(value)


# ---------------------------------------------------------------------------
# commands


def cmd_transform(args, out) -> int:
    wf = read_weight_file(args.file)
    exact = args.exact or wf.exact
    gamma = _table(wf, args.d, exact)
    params = TransformParams(_C(args.C, exact))
    if args.direction == "up":
        res = (t_up_naive if args.naive else t_up)(gamma, params)
    else:
        cert = check_completely_monotone(gamma)
        if not cert.is_member:
            u, v = cert.witness
            raise NotMonotoneError(f"input is not completely monotone: "
                                   f"(Delta_{lattice.format_subset(v)} gamma)_{lattice.format_subset(u)} < 0")
        res = (t_down_naive if args.naive else t_down)(gamma, params)
        if not exact:
            res = res.as_weights()
    out.write(format_table(res, f"transform {args.direction} C={args.C}"))
    return EXIT_OK


def _check_monotone(wf, args, rep):
    spec = wf.weights
    if wf.is_dense or spec.is_finite_dim or args.d is not None:
        gamma = _table(wf, args.d, args.exact or wf.exact)
        cert = check_completely_monotone(gamma)
        rep.add("d", gamma.d)
        rep.add("min Moebius coefficient", format_value(cert.min_value))
        if cert.is_member is False:
            u, v = cert.witness
            rep.add("witness", f"u={lattice.format_subset(u)} v={lattice.format_subset(v)} "
                                f"Delta={format_value(_delta_value(gamma, u, v))}")
        return cert.is_member, cert.reason
    if isinstance(spec, fam.Product):
        ok = spec.all_at_most_one()
        return ok, "product weights lie in M_d iff every gamma_j <= 1"
    if isinstance(spec, fam.FinSupport):
        gamma = fam.truncate_to_table(spec, max(spec.support_dim(), 1))
        cert = check_completely_monotone(gamma)
        return cert.is_member, "finitely supported: " + cert.reason
    return None, "membership not decidable for this family in d = inf"


def _delta_value(gamma, u, v):
    from .weight_core import delta_at
    return delta_at(gamma, v, u)


def cmd_check(args, out) -> int:
    wf = read_weight_file(args.file)
    rep = Report(args.echo)
    rep.add("input", f"{args.file} sha256={_digest(args.file)}")
    rep.add("family", wf.family)
    rep.add("class", args.cls)
    spec = wf.weights
    if args.cls == "monotone":
        ok, reason = _check_monotone(wf, args, rep)
    elif args.cls == "summable":
        rep.add("C", args.C)
        if wf.is_dense:
            total = sum(float(args.C) ** (2 * lattice.popcount(u)) * float(v) for u, v in wf.weights.items())
            ok, reason = True, f"finite d, total {total!r}"
        else:
            sr = summability(spec, TransformParams(float(args.C)))
            ok, reason = sr.is_summable, sr.reason
            if sr.value is not None:
                rep.add("total enclosure", f"[{sr.value.lo!r}, {sr.value.hi!r}]")
    elif args.cls == "A_d":
        if wf.is_dense or spec.is_finite_dim:
            ok, reason = _check_monotone(wf, args, rep)
            reason = "finite d: A_d = M_d; " + str(reason)
        else:
            cert = membership_A_d(spec)
            ok, reason = cert.is_member, cert.reason
    else:
        res = fam.decay(spec) if not wf.is_dense else fam.DecayResult.of(fam.INF, "finite d")
        rep.add("decay", _fmt_decay(res))
        if not wf.is_dense:
            rep.add("decay after T-up", _fmt_decay(fam.decay_after_up(spec, TransformParams(float(args.C)))))
        ok = True if res.kind in ("value", "infinity", "zero") else None
        reason = res.reason
    rep.add("reason", reason)
    rep.add("tolerance", "1e-12 * max|gamma| (float), 0 (exact)")
    rep.add("verdict", verdict(ok))
    out.write(rep.text())
    return {True: EXIT_OK, False: EXIT_FAIL, None: EXIT_UNDECIDABLE}[ok]


def _fmt_decay(res) -> str:
    if res.kind == "value":
        return format_value(res.lo)
    if res.kind in ("infinity", "zero"):
        return res.kind
    if res.kind == "interval":
        return f"in [{res.lo!r}, {res.hi!r}]"
    return "unknown"


def cmd_minorant(args, out) -> int:
    wf = read_weight_file(args.file)
    if not wf.is_dense:
        raise ParseError("minorant needs a dense weight file")
    gamma = wf.weights
    if args.exact and not gamma.exact:
        gamma = gamma.to_exact()
    if gamma.d > MINORANT_MAX_D:
        raise DimensionError(f"minorant limited to d <= {MINORANT_MAX_D}")
    res = maximal_monotone_minorant(gamma)
    ok, headroom = verify_maximal(res.minorant, gamma)
    rep = Report(args.echo)
    rep.add("input", f"{args.file} sha256={_digest(args.file)}")
    rep.add("method", res.method)
    rep.add("objective", format_value(res.objective))
    rep.add("maximal", verdict(ok))
    rep.add("max headroom", format_value(headroom.max_abs()))
    out.write(format_table(res.minorant, "maximal monotone minorant"))
    out.write(rep.text("# "))
    return EXIT_OK if ok else EXIT_FAIL


def _weights_for(args, d):
    if args.file is None:
        return fam.Product(fam.PowerLaw(1.0, 2.0), d), "product powerlaw c=1 lambda=2 (default)"
    wf = read_weight_file(args.file)
    if wf.is_dense:
        if wf.weights.d != d:
            raise DimensionError(f"weight file has d={wf.weights.d}, --d is {d}")
        return wf.weights.to_float(), f"{args.file} sha256={_digest(args.file)}"
    return wf.weights, f"{args.file} sha256={_digest(args.file)}"


def _auto_C(k, l, rep, label):
    clb, n = kn.converged_norm_lower_bound(k, l)
    rep.add(f"{label} lower bound", f"{clb!r} ({n} points)")
    return AUTO_FACTOR * clb


def cmd_verify_embedding(args, out) -> int:
    k, l = kn.get_kernel(args.k), kn.get_kernel(args.l)
    rep = Report(args.echo)
    weights, desc = _weights_for(args, args.d)
    rep.add("weights", desc)
    rep.add("kernels", f"k={k.name} l={l.name}")
    clb, n = kn.converged_norm_lower_bound(k, l)
    rep.add("C_lb", f"{clb!r} ({n} points)")
    C = AUTO_FACTOR * clb if args.C == "auto" else float(args.C)
    rep.add("C", f"{C!r}" + (" (auto)" if args.C == "auto" else ""))
    Q = make_points(args.points, args.d, args.seed)
    rep.add("points", f"{Q.generator} n={Q.n} d={Q.d}")
    r = kn.verify_embedding(k, l, C, weights, Q.nodes, args.d, C_lb=clb)
    rep.add("min eigenvalue", f"{r.min_eig:.6e}")
    rep.add("max eigenvalue", f"{r.max_eig:.6e}")
    rep.add("tolerance", f"min >= -{r.tol_rel:g} * max")
    for note in r.notes:
        rep.add("note", note)
    rep.add("verdict", verdict(r.passed))
    out.write(rep.text())
    return EXIT_OK if r.passed else EXIT_FAIL


def cmd_wce(args, out) -> int:
    k = kn.get_kernel(args.k)
    weights, desc = _weights_for(args, args.d)
    Q = make_points(args.points, args.d, args.seed)
    K = kn.SuperpositionKernel(weights if isinstance(weights, WeightTable) else fam.truncate_to_table(weights, args.d), k)
    e2 = et.wce_squared(Q, K)
    e = et.wce_integration(Q, K)
    rep = Report(args.echo)
    rep.add("weights", desc)
    rep.add("kernel", k.name)
    rep.add("points", f"{Q.generator} n={Q.n} d={Q.d}")
    rep.add("wce^2", f"{e2:.15e} (~ {Fraction(e2).limit_denominator(10 ** 6)})")
    rep.add("wce", f"{e:.15e}")
    out.write(rep.text())
    return EXIT_OK


def cmd_transfer(args, out) -> int:
    k, l = kn.get_kernel(args.k), kn.get_kernel(args.l)
    rep = Report(args.echo)
    weights, desc = _weights_for(args, args.d)
    rep.add("weights", desc)
    rep.add("kernels", f"k={k.name} l={l.name}")
    C_up = _auto_C(k, l, rep, "C_up") if args.Cup == "auto" else float(args.Cup)
    C_down = _auto_C(l, k, rep, "C_down") if args.Cdown == "auto" else float(args.Cdown)
    Q = make_points(args.points, args.d, args.seed)
    rep.add("points", f"{Q.generator} n={Q.n} d={Q.d}")
    r = et.full_transfer(Q, weights, k, l, C_up, C_down)
    rep.add("C_up", repr(C_up))
    rep.add("C_down", repr(C_down))
    rep.add("minorant", r.minorant)
    rep.add("wce_down", f"{r.wce_down:.12e}")
    rep.add("wce_K", f"{r.wce_K:.12e}")
    rep.add("wce_up", f"{r.wce_up:.12e}")
    rep.add("upper ordering", verdict(r.upper_ok))
    rep.add("lower ordering", verdict(r.lower_ok))
    for note in r.notes:
        rep.add("note", note)
    rep.add("verdict", verdict(r.ordering_ok))
    out.write(rep.text())
    if args.show_weights:
        for name in ("gamma", "gamma_up", "gamma_star", "gamma_star_down"):
            out.write(format_table(getattr(r, name), name))
    return EXIT_OK if r.ordering_ok else EXIT_FAIL


POD_EXAMPLE = "format = 1\nd = 3\nfamily = pod\ngamma_seq = explicit 3,2,1\nGamma_seq = explicit 1,3,4,5\na = 1\nC_a = 3\n"
SQUARE_EXAMPLE = "format = 1\nd = 2\narithmetic = exact\n{} 5\n{1} 5\n{2} 3\n{1,2} 1\n"


def cmd_selftest(args, out) -> int:
    rep = Report(args.echo)
    results = []

    def record(name, ok):
        results.append(ok)
        rep.add(name, verdict(ok))

    pod = parse_text(POD_EXAMPLE).table().to_exact()
    up = t_up(pod, TransformParams(1))
    got = [up.values[lattice.mask_of(s)] for s in ({2}, {3}, {1, 2}, {1, 3})]
    record("pod transform entries 68 53 54 42", got == [68, 53, 54, 42])
    record("pod recognizer rejects transform", not fam.is_pod(up.to_float()))

    g = parse_text(SQUARE_EXAMPLE).weights
    down = t_down(g, TransformParams(1))
    record("T-down (5,5,3,1) = (-2,4,2,1)", list(down.values) == [-2, 4, 2, 1])
    cert = check_completely_monotone(g)
    record("(5,5,3,1) not monotone with witness", cert.is_member is False and cert.recheck(g))
    res = maximal_monotone_minorant(g)
    record("minorant objective 12", res.objective == 12)
    a = WeightTable(2, [5, 5, 1, 1], exact=True)
    b = WeightTable(2, [5, 3, 3, 1], exact=True)
    incomparable = any(x < y for x, y in zip(a.values, b.values)) and any(x > y for x, y in zip(a.values, b.values))
    record("(5,5,1,1) and (5,3,3,1) maximal and incomparable",
           verify_maximal(a, g)[0] and verify_maximal(b, g)[0] and incomparable)

    Q = make_points("explicit:0.5", 1)
    e = et.wce_integration(Q, kn.SuperpositionKernel(WeightTable(1, [0.0, 1.0]), kn.MIN_KERNEL))
    record("single-point wce = sqrt(1/12)", abs(e - np.sqrt(1 / 12)) <= 1e-12)
    rep.add("seed", args.seed)
    ok = all(results)
    rep.add("verdict", verdict(ok))
    out.write(rep.text())
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmweights", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None, help="reserved; tolerances are reported")
    common.add_argument("--echo", default=None, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common], help="apply T-up or T-down to a weight file")
    p.add_argument("direction", choices=("up", "down"))
    p.add_argument("file")
    p.add_argument("--C", type=_positive, default=Fraction(1))
    p.add_argument("--d", type=int, default=None, help="truncation for structured weights")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--naive", action="store_true", help="use the direct double-sum oracle")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("check", parents=[common], help="test a property of the weights")
    p.add_argument("file")
    p.add_argument("--class", dest="cls", required=True, choices=("monotone", "summable", "A_d", "decay"))
    p.add_argument("--C", type=_positive, default=Fraction(1))
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("minorant", parents=[common], help="maximal monotone minorant of a dense file")
    p.add_argument("file")
    p.add_argument("--exact", action="store_true")
    p.set_defaults(func=cmd_minorant)

    kernel_cmds = (
        ("verify-embedding", cmd_verify_embedding, "check the kernel embedding on a point set"),
        ("wce", cmd_wce, "worst-case error of an equal-weight rule"),
        ("transfer", cmd_transfer, "upper and lower error bounds across kernels"),
    )
    for name, func, text in kernel_cmds:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("file", nargs="?", default=None, help="weight file (default: product j^-2)")
        p.add_argument("--k", default="min", help="kernel name: " + ", ".join(sorted(kn.builtin_kernels())))
        p.add_argument("--d", type=int, default=3)
        p.add_argument("--points", default="lattice:64")
        if name == "verify-embedding":
            p.add_argument("--l", default="min")
            p.add_argument("--C", type=_c_or_auto, default="auto")
        if name == "transfer":
            p.add_argument("--l", default="min")
            p.add_argument("--Cup", type=_c_or_auto, default="auto")
            p.add_argument("--Cdown", type=_c_or_auto, default="auto")
            p.add_argument("--show-weights", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("selftest", parents=[common], help="reproduce the worked examples")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.echo is None:
        args.echo = " ".join(sys.argv[1:] if argv is None else argv)
    try:
        return args.func(args, out)
    except (ParseError, DimensionError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NotMonotoneError, NotSummableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except UndecidableError as exc:
        print(f"undecidable: {exc}", file=sys.stderr)
        return EXIT_UNDECIDABLE
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (WeightError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
