"""Text format for weights.

A file is a header of ``key = value`` lines followed by a body::

    # comments start with '#'
    format = 1
    d = 3
    family = dense
    arithmetic = exact
    {} 1
    {1} 9
    {1,2} 24

Dense and sparse bodies list ``{i,j,...} value`` lines (missing subsets are 0).
Structured families use parameter lines instead::

    family = pod
    gamma_seq = powerlaw c=1 lambda=2
    Gamma_seq = factorial c=1 b=1
    a = 1
    C_a = 1
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

from . import families as fam
from . import lattice
from .errors import DimensionError, ParseError
from .weight_core import SetFunction, WeightTable

FORMAT_VERSION = 1
FAMILIES = ("dense", "sparse", "product", "pod", "finite_order", "nested")
HEADER_KEYS = ("format", "d", "family", "arithmetic")
PARAM_KEYS = ("gamma_seq", "Gamma_seq", "a", "C_a", "order", "gamma_empty")

_ENTRY = re.compile(r"^\{([^}]*)\}\s+(\S+)$")


@dataclass
class WeightFile:
    d: Union[int, float]
    family: str
    exact: bool
    weights: object  # WeightTable / SetFunction for dense files, a WeightSpec otherwise
    params: dict = field(default_factory=dict)

    @property
    def is_dense(self) -> bool:
        return isinstance(self.weights, SetFunction)

    def table(self, d=None) -> SetFunction:
        """Dense table, truncating structured weights to ``d`` coordinates."""
        if self.is_dense:
            return self.weights
        if d is None:
            if self.d == fam.INF:
                raise DimensionError("give a finite d to tabulate weights with d = inf")
            d = self.d
        t = fam.truncate_to_table(self.weights, int(d))
        return t.to_exact() if self.exact else t


def parse_number(text: str, line=None, exact=False):
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        try:
            f = float(text)
        except ValueError:
            raise ParseError(f"not a number: {text!r}", line) from None
        if not math.isfinite(f):
            raise ParseError(f"not a finite number: {text!r}", line)
        v = Fraction(f)
    return v if exact else float(v)


def parse_subset(text: str, line=None) -> frozenset:
    text = text.strip()
    if not text:
        return frozenset()
    try:
        idx = [int(t) for t in text.split(",")]
    except ValueError:
        raise ParseError(f"bad subset {{{text}}}", line) from None
    if any(i < 1 for i in idx):
        raise ParseError("subset indices are 1-based", line)
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise ParseError(f"indices in {{{text}}} must be strictly increasing", line)
    return frozenset(idx)


def _kv(text: str, line) -> dict:
    out = {}
    for tok in text.split():
        k, sep, v = tok.partition("=")
        if not sep:
            raise ParseError(f"expected name=value, got {tok!r}", line)
        out[k] = parse_number(v, line)
    return out


def _explicit_list(text: str, line) -> list:
    return [parse_number(t, line) for t in text.replace(",", " ").split()]


def parse_sequence(text: str, line=None) -> fam.SequenceSpec:
    kind, _, rest = text.strip().partition(" ")
    try:
        if kind == "powerlaw":
            kv = _kv(rest, line)
            return fam.PowerLaw(kv.get("c", 1.0), kv["lambda"])
        if kind == "geometric":
            kv = _kv(rest, line)
            return fam.Geometric(kv.get("c", 1.0), kv["q"])
        if kind == "explicit":
            return fam.Explicit(_explicit_list(rest, line))
    except KeyError as exc:
        raise ParseError(f"missing parameter {exc.args[0]} in {kind}", line) from None
    except ValueError as exc:
        raise ParseError(str(exc), line) from None
    raise ParseError(f"unknown sequence kind {kind!r}", line)


def parse_order_sequence(text: str, line=None) -> fam.OrderSeq:
    kind, _, rest = text.strip().partition(" ")
    try:
        if kind == "explicit":
            return fam.OrderExplicit(_explicit_list(rest, line))
        if kind == "factorial":
            kv = _kv(rest, line)
            return fam.OrderFactorial(kv.get("c", 1.0), kv.get("b", 1.0))
        if kind == "constant":
            return fam.OrderConstant(_kv(rest, line).get("c", 1.0))
    except ValueError as exc:
        raise ParseError(str(exc), line) from None
    raise ParseError(f"unknown order sequence kind {kind!r}", line)


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_text(text: str) -> WeightFile:
    header, params, entries = {}, {}, {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        m = _ENTRY.match(line)
        if m:
            u = parse_subset(m.group(1), no)
            if u in entries:
                raise ParseError(f"duplicate subset {{{m.group(1).strip()}}}", no)
            entries[u] = (m.group(2), no)
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not value:
            raise ParseError(f"cannot parse {raw.strip()!r}", no)
        if key in HEADER_KEYS:
            target = header
        elif key in PARAM_KEYS:
            target = params
        else:
            raise ParseError(f"unknown key {key!r}", no)
        if key in target:
            raise ParseError(f"duplicate key {key!r}", no)
        target[key] = (value, no)
    return _build(header, params, entries)


def _build(header, params, entries) -> WeightFile:
    fmt = header.get("format", ("1", None))
    if fmt[0] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {fmt[0]}", fmt[1])
    if "d" not in header:
        raise ParseError("header needs d")
    d_text, d_line = header["d"]
    if d_text == "inf":
        d = fam.INF
    else:
        try:
            d = int(d_text)
        except ValueError:
            raise ParseError(f"bad dimension {d_text!r}", d_line) from None
        if d < 0:
            raise ParseError("dimension must be non-negative", d_line)
    mode, mode_line = header.get("arithmetic", ("float", None))
    if mode not in ("float", "exact"):
        raise ParseError(f"arithmetic must be float or exact, got {mode!r}", mode_line)
    exact = mode == "exact"
    family, fam_line = header.get("family", ("dense" if d != fam.INF else "sparse", None))
    if family not in FAMILIES:
        raise ParseError(f"unknown family {family!r}", fam_line)

    values = {}
    for u, (text, no) in entries.items():
        v = parse_number(text, no, exact)
        if v < 0:
            raise ParseError("weights must be non-negative", no)
        if d != fam.INF and u and max(u) > d:
            raise ParseError(f"subset uses index {max(u)} > d = {d}", no)
        values[u] = v
    if family in ("dense", "sparse", "nested") or (family == "finite_order" and "gamma_seq" not in params):
        if family != "finite_order":
            for key, (_, no) in params.items():
                raise ParseError(f"parameter {key!r} not allowed for family {family}", no)
    elif entries:
        raise ParseError(f"family {family} takes parameter lines, not entries", next(iter(entries.values()))[1])

    try:
        spec = _make(family, d, exact, values, params)
    except (ValueError, DimensionError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from None
    return WeightFile(d, family, exact, spec, {k: v for k, (v, _) in params.items()})


def _need(params, key, family):
    if key not in params:
        raise ParseError(f"family {family} needs {key}")
    return params[key]


def _make(family, d, exact, values, params):
    if family == "dense":
        if d == fam.INF:
            raise ParseError("dense files need a finite d")
        lattice.check_d(d)
        return WeightTable.from_entries(d, values, exact=exact)
    if family == "sparse":
        return fam.FinSupport({u: float(v) for u, v in values.items()}, d)
    if family == "nested":
        if d != fam.INF:
            raise ParseError("nested-block weights live in d = inf")
        return fam.NestedBlocks()
    seq = None
    if "gamma_seq" in params:
        text, no = params["gamma_seq"]
        seq = parse_sequence(text, no)
    if family == "product":
        if seq is None:
            raise ParseError("family product needs gamma_seq")
        return fam.Product(seq, d)
    if family == "pod":
        text, no = _need(params, "Gamma_seq", family)
        order = parse_order_sequence(text, no)
        if seq is None:
            raise ParseError("family pod needs gamma_seq")
        a = parse_number(*_need(params, "a", family))
        C_a = parse_number(*_need(params, "C_a", family))
        return fam.POD(seq, order, a, C_a, d)
    if family == "finite_order":
        text, no = _need(params, "order", family)
        try:
            order = int(text)
        except ValueError:
            raise ParseError(f"order must be an integer, got {text!r}", no) from None
        if seq is not None:
            g0 = parse_number(*params["gamma_empty"]) if "gamma_empty" in params else 1.0
            return fam.FiniteOrder(order, seq=seq, gamma_empty=g0, d=d)
        return fam.FiniteOrder(order, entries={u: float(v) for u, v in values.items()}, d=d)
    raise ParseError(f"unknown family {family!r}")


def read_weight_file(path) -> WeightFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return parse_text(text)


def format_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    v = float(v)
    if v == 0:
        return "0"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def format_table(gamma: SetFunction, comment: str = "") -> str:
    """Serialize a dense table; zero entries are omitted."""
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines += [f"format = {FORMAT_VERSION}", f"d = {gamma.d}", "family = dense",
              f"arithmetic = {'exact' if gamma.exact else 'float'}"]
    order = sorted(range(1 << gamma.d), key=lambda u: (lattice.popcount(u), lattice.members(u)))
    for u in order:
        v = gamma.values[u]
        if v != 0:
            lines.append(f"{lattice.format_subset(u)} {format_value(v)}")
    return "\n".join(lines) + "\n"
