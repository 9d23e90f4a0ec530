"""``ordcover`` command line: gen, tnum, order, verify, scan.

Exit codes: 0 success, 1 property failure, 2 usage or validation error,
3 I/O error or invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import circle, sl2
from .qm_core import CertificateConflict, jsonable, rng_streams
from .suites import GROUPS, SUITES, ConfigError, SuiteConfig, run_suite

EXIT_OK, EXIT_PROPERTY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

DEFAULT_PRECISION = {
    ("circle", "axioms"): 1 << 12, ("circle", "dominants"): 1 << 20, ("circle", "coincidence"): 1,
    ("circle", "defect"): 1 << 20, ("sl2", "axioms"): 1 << 12, ("sl2", "dominants"): 1 << 14,
    ("sl2", "coincidence"): 1, ("sl2", "trichotomy"): 1, ("sl2", "wedge"): 1, ("sl2", "defect"): 1 << 14,
}
CIRCLE_CLASSES = ("pl",)
SCAN_COLUMNS = ("param1", "param2", "winding", "mu_mid", "pos_flag", "neg_flag", "exp_flag")


class UsageError(Exception):
    """Bad input from the user; maps to exit code 2."""


# -- element I/O ------------------------------------------------------------------

def load_element(spec: str):
    """Parse an element from inline JSON or a file path; returns ``(group, element)``."""
    text = spec
    if not spec.lstrip().startswith("{"):
        text = Path(spec).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed element JSON: {exc}") from exc
    kind = obj.get("type") if isinstance(obj, dict) else None
    _check_shape(kind, obj)
    if kind == "sl2cover":
        return "sl2", sl2.from_json_obj(obj)
    if kind == "pl":
        return "circle", circle.from_json_obj(obj)
    raise UsageError(f"unknown element type {kind!r}; expected 'pl' or 'sl2cover'")


def _check_shape(kind, obj):
    """Structural validation; value-level invariants are left to the parsers."""
    def is_num(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    if kind == "sl2cover":
        mat, w = obj.get("mat"), obj.get("winding")
        if not (isinstance(mat, list) and len(mat) == 4 and all(is_num(v) for v in mat)):
            raise UsageError("sl2cover element needs 'mat': four numbers")
        if not isinstance(w, int) or isinstance(w, bool):
            raise UsageError("sl2cover element needs an integer 'winding'")
    elif kind == "pl":
        xs, vs = obj.get("breakpoints"), obj.get("values")
        if not (isinstance(xs, list) and isinstance(vs, list) and xs and len(xs) == len(vs)):
            raise UsageError("pl element needs equal-length 'breakpoints' and 'values' lists")
        for v in xs + vs:
            if not (is_num(v) or isinstance(v, str)):
                raise UsageError(f"pl entries must be numbers or 'p/q' strings, got {v!r}")


def dump_element(group: str, g) -> str:
    return sl2.to_json(g) if group == "sl2" else circle.to_json(g)


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def _format_enclosure(group, enc, fmt):
    exact = group == "circle"
    if fmt == "json":
        d = {"lo": float(enc.lo), "hi": float(enc.hi)}
        if exact:
            d.update(lo_exact=jsonable(enc.lo), hi_exact=jsonable(enc.hi))
        return json.dumps(d) + "\n"
    if fmt == "csv":
        row = [repr(float(enc.lo)), repr(float(enc.hi))]
        if exact:
            row += [jsonable(enc.lo), jsonable(enc.hi)]
        return ",".join(row) + "\n"
    out = f"{float(enc.lo)!r} {float(enc.hi)!r}\n"
    if exact:
        out += f"{jsonable(enc.lo)} {jsonable(enc.hi)}\n"
    return out


# -- verbs ------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    streams = rng_streams(args.seed, args.count)
    if args.group == "circle":
        cls = args.cls or "pl"
        if cls not in CIRCLE_CLASSES:
            raise UsageError(f"unknown circle class {cls!r}; expected one of {CIRCLE_CLASSES}")
        if args.k < 1:
            raise UsageError("--k must be >= 1")
        elems = [circle.random_pl(r, args.k, args.denominator_bound) for r in streams]
    else:
        cls = args.cls or "elliptic"
        if cls not in sl2.CLASSES:
            raise UsageError(f"unknown sl2 class {cls!r}; expected one of {sl2.CLASSES}")
        elems = [sl2.random_cover_element(r, cls, tuple(args.winding_range)) for r in streams]
    texts = [dump_element(args.group, g) for g in elems]
    if args.output is None or args.output == "-":
        sys.stdout.write("".join(t + "\n" for t in texts))
        return EXIT_OK
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(args.count - 1)))
    for i, t in enumerate(texts):
        (out / f"{args.group}_{cls}_{i:0{width}d}.json").write_text(t + "\n")
    return EXIT_OK


def cmd_tnum(args) -> int:
    group, g = load_element(args.element)
    precision = args.precision or 1000
    if precision < 1:
        raise UsageError("--precision must be >= 1")
    mod = sl2 if group == "sl2" else circle
    enc = mod.translation_number_enclosure(g, precision)
    _write_text(args.output, _format_enclosure(group, enc, args.format))
    return EXIT_OK


def order_relation(group: str, g, h, budget: int) -> str:
    """GEQ, LEQ, EQUAL, INCOMPARABLE or UNKNOWN from positivity of g h^-1 and h g^-1."""
    if group == "circle":
        if g == h:
            return "EQUAL"
        up = circle.geometric_positive(circle.compose(g, circle.invert(h)))
        down = circle.geometric_positive(circle.compose(h, circle.invert(g)))
    else:
        if sl2.cover_equal(g, h):
            return "EQUAL"
        up = sl2.geometric_positive(sl2.mul(g, sl2.inv(h)), False, budget)
        down = sl2.geometric_positive(sl2.mul(h, sl2.inv(g)), False, budget)
    if up.is_yes and down.is_yes:
        return "EQUAL"
    if up.is_yes and down.is_no:
        return "GEQ"
    if up.is_no and down.is_yes:
        return "LEQ"
    if up.is_no and down.is_no:
        return "INCOMPARABLE"
    return "UNKNOWN"


def cmd_order(args) -> int:
    gg, g = load_element(args.g)
    hg, h = load_element(args.h)
    if gg != hg:
        raise UsageError(f"elements belong to different groups ({gg} and {hg})")
    rel = order_relation(gg, g, h, args.budget)
    if args.format == "json":
        _write_text(args.output, json.dumps({"relation": rel}) + "\n")
    else:
        _write_text(args.output, rel + "\n")
    return EXIT_OK


def _suite_config(args) -> SuiteConfig:
    if args.config:
        text = Path(args.config).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed config JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        missing = {"group", "suite", "sample_count", "seed"} - raw.keys()
        if missing:
            raise UsageError(f"config is missing {sorted(missing)}")
        known = {"group", "suite", "sample_count", "seed", "precision", "budget", "unknown_ceiling"}
        extra = raw.keys() - known - {"output"}
        if extra:
            raise UsageError(f"unknown config keys {sorted(extra)}")
        if args.output is None:
            args.output = raw.get("output")
        fields = {k: raw[k] for k in known if k in raw}
    else:
        if args.group is None or args.suite is None:
            raise UsageError("verify needs --group and --suite (or --config)")
        fields = {"group": args.group, "suite": args.suite, "sample_count": args.samples, "seed": args.seed,
                  "budget": args.budget, "unknown_ceiling": args.unknown_ceiling}
        if args.precision is not None:
            fields["precision"] = args.precision
    for key in ("sample_count", "seed", "precision", "budget"):
        if key in fields and (not isinstance(fields[key], int) or isinstance(fields[key], bool)):
            raise UsageError(f"{key} must be an integer")
    fields.setdefault("precision", DEFAULT_PRECISION.get((fields["group"], fields["suite"]), 1 << 12))
    try:
        return SuiteConfig(**fields).validate()
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def cmd_verify(args) -> int:
    cfg = _suite_config(args)
    report = run_suite(cfg)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "status", "checked", "unknown", "failed"])
        for a in report.assertions:
            w.writerow([a.name, a.status, a.checked, a.unknown, a.failed])
        text = buf.getvalue()
    else:
        text = report.to_json() + "\n"
    _write_text(args.output, text)
    for line in report.summary_lines():
        print(line, file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_PROPERTY


def _parse_range(text: str, name: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"{name} must be 'lo,hi'") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise UsageError(f"{name} must satisfy lo <= hi")
    return lo, hi


def scan_element(theta: float, stretch: float, winding: int) -> sl2.CoverElement:
    """``R_theta diag(e^s, e^-s)`` with the given winding: rotation at ``s = 0``,
    hyperbolic at ``theta = 0``."""
    c, s = math.cos(theta), math.sin(theta)
    e = math.exp(stretch)
    return sl2.CoverElement(sl2.ProjectiveMatrix(c * e, -s / e, s * e, c / e), winding)


def scan_rows(theta_range, stretch_range, resolution, windings, budget, precision):
    rows = []
    for w in windings:
        for s in np.linspace(*stretch_range, resolution[1]):
            for t in np.linspace(*theta_range, resolution[0]):
                g = scan_element(float(t), float(s), w)
                c = sl2.hilgert_hofmann_classify(g, budget)
                mu = sl2.gw_mu(g, precision)
                rows.append((float(t), float(s), w, float(mu.mid), *(v.state.value for v in c.flags)))
    return rows


def positive_region_connected(rows, resolution):
    """One flag per (winding, stretch) scan line: are its positive rows contiguous?"""
    out = []
    n = resolution[0]
    for start in range(0, len(rows), n):
        idx = [i for i, r in enumerate(rows[start:start + n]) if r[4] == "yes"]
        out.append(not idx or idx[-1] - idx[0] + 1 == len(idx))
    return out


def cmd_scan(args) -> int:
    theta_range = _parse_range(args.theta_range, "--theta-range")
    stretch_range = _parse_range(args.stretch_range, "--stretch-range")
    try:
        res = [int(v) for v in args.resolution.split(",")]
        windings = [int(v) for v in args.windings.split(",")]
    except ValueError as exc:
        raise UsageError("--resolution and --windings take comma-separated integers") from exc
    if len(res) == 1:
        res = res * 2
    if len(res) != 2 or min(res) < 2:
        raise UsageError("--resolution must be >= 2 per axis")
    precision = args.precision or 1 << 12
    rows = scan_rows(theta_range, stretch_range, res, windings, args.budget, precision)
    if args.format == "json":
        text = json.dumps([dict(zip(SCAN_COLUMNS, r)) for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        w.writerows([[repr(r[0]), repr(r[1]), r[2], repr(r[3]), *r[4:]] for r in rows])
        text = buf.getvalue()
    _write_text(args.output, text)
    conn = positive_region_connected(rows, res)
    print(f"positive region contiguous on {sum(conn)}/{len(conn)} scan lines", file=sys.stderr)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

def _common(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d(0), help="sampling seed (default 0)")
    g.add_argument("--precision", type=int, default=d(None), help="iteration count n for enclosures")
    g.add_argument("--budget", type=int, default=d(sl2.DEFAULT_BUDGET), help="grid refinement cap")
    g.add_argument("--output", "-o", default=d(None), help="output file or directory ('-' for stdout)")
    g.add_argument("--format", choices=("json", "csv"), default=d(None), help="output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordcover", parents=[_common(False)],
                                     description="Quasimorphism orders on the circle group and the SL(2, R) cover.")
    sub = parser.add_subparsers(dest="verb", required=True)
    common = [_common(True)]

    p = sub.add_parser("gen", parents=common, help="generate random elements")
    p.add_argument("group", choices=GROUPS)
    p.add_argument("--class", dest="cls", help="circle: pl; sl2: " + ", ".join(sl2.CLASSES))
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--k", type=int, default=3, help="breakpoints per PL lift")
    p.add_argument("--denominator-bound", type=int, default=16)
    p.add_argument("--winding-range", type=int, nargs=2, default=(-2, 2), metavar=("LO", "HI"))
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("tnum", parents=common, help="translation number enclosure")
    p.add_argument("element", help="element file or inline JSON")
    p.set_defaults(func=cmd_tnum)

    p = sub.add_parser("order", parents=common, help="compare two elements")
    p.add_argument("g")
    p.add_argument("h")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("verify", parents=common, help="run a verification suite")
    p.add_argument("--config", help="JSON SuiteConfig file")
    p.add_argument("--group", choices=GROUPS)
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--unknown-ceiling", type=float, default=0.01)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan", parents=common, help="CSV scan of the trichotomy flags")
    p.add_argument("--theta-range", default="0,3.141592653589793", help="rotation angle 'lo,hi'")
    p.add_argument("--stretch-range", default="0,2", help="hyperbolic stretch 'lo,hi'")
    p.add_argument("--resolution", default="16", help="points per axis, 'n' or 'n_theta,n_stretch'")
    p.add_argument("--windings", default="0", help="comma-separated windings")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ordcover: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (circle.InvariantError, sl2.InvariantError, CertificateConflict, ArithmeticError) as exc:
        print(f"ordcover: invariant violation: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"ordcover: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
