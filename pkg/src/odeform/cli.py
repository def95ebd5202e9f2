"""Command-line interface.

Three subcommands sharing one equation grammar::

    odeform solve  --class linear --f "1" --g "0" --x0 0 --y0 1 --range 0:1
    odeform verify --class bernoulli --f "1" --g "1" --alpha 2 \\
                   --x0 0 --y0 0.5 --range 0:1 --format json
    odeform oracle --class second-order --b 0 --c 1 --x0 0 --y0 0 --yp0 1 \\
                   --range 0:3.1415926 --samples 2

solve emits a sample table of the closed form over range intersected with
validity, verify emits the verification report (exit status 3 when any
check fails), oracle emits the Runge-Kutta reference trajectory.

Output is CSV (default) or JSON via --format, written to stdout or --out.
Documents are built fully before a byte is written, numbers use repr-exact
formatting, and identical invocations produce identical bytes. Exit status:
0 success, 1 usage error, 2 domain or convergence failure, 3 verification
failure. Diagnostics are a single line on stderr.

For ranges starting with a negative number use the equals form,
``--range=-1:1``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .errors import ExprSyntaxError, OdeformError
from .expr import parse as parse_expr
from .quad import QuadratureConfig
from .solvers import EquationClass, EquationSpec, InitialCondition
from .verify import _construct, full_verify, rk_reference

__all__ = ["main", "run"]


class UsageError(OdeformError):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through UsageError so
    # run() can keep 2 reserved for domain/convergence failures.
    def error(self, message):
        raise UsageError(message)


def _parse_range(text: str) -> tuple[float, float]:
    lo_s, sep, hi_s = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(
            f"range must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"range bounds must be numbers, got {text!r}")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise argparse.ArgumentTypeError("range bounds must be finite")
    if not lo < hi:
        raise argparse.ArgumentTypeError("range needs lo < hi")
    return lo, hi


def _add_equation_args(p: _ArgumentParser):
    p.add_argument("--class", dest="klass", required=True,
                   choices=[k.value for k in EquationClass],
                   help="equation class")
    p.add_argument("--f", help="coefficient function f(x)")
    p.add_argument("--g", help="coefficient function g(x)")
    p.add_argument("--alpha", type=float, help="bernoulli exponent")
    p.add_argument("--beta", type=float, help="exponential-class rate")
    p.add_argument("--b", type=float, help="second-order y' coefficient")
    p.add_argument("--c", type=float, help="second-order y coefficient")
    p.add_argument("--x0", type=float, required=True, help="initial x")
    p.add_argument("--y0", type=float, required=True, help="initial y")
    p.add_argument("--yp0", type=float, help="initial y' (second order)")
    p.add_argument("--range", dest="xrange", type=_parse_range,
                   required=True, metavar="LO:HI",
                   help="working range (use --range=-1:1 for negatives)")
    p.add_argument("--samples", type=int, default=201,
                   help="sample/grid point count (default 201)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write the document here instead of stdout")
    p.add_argument("--abs-tol", type=float, default=1e-10,
                   help="quadrature absolute tolerance")
    p.add_argument("--rel-tol", type=float, default=1e-10,
                   help="quadrature relative tolerance")


def _build_parser() -> _ArgumentParser:
    root = _ArgumentParser(
        prog="odeform",
        description="closed-form ODE solutions with numerical verification")
    sub = root.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="emit closed-form samples")
    _add_equation_args(solve)

    verify = sub.add_parser("verify", help="emit a verification report")
    _add_equation_args(verify)
    verify.add_argument("--check-tol", type=float, default=1e-6,
                        help="oracle/residual tolerance (default 1e-6)")
    verify.add_argument("--oracle-tol", type=float, default=1e-9,
                        help="Runge-Kutta step tolerance (default 1e-9)")
    verify.add_argument("--perturb", type=float, default=0.0,
                        help="offset the solution by this amount first "
                             "(defect-sensitivity diagnostic)")

    oracle = sub.add_parser("oracle", help="emit the Runge-Kutta reference")
    _add_equation_args(oracle)
    oracle.add_argument("--oracle-tol", type=float, default=1e-9,
                        help="Runge-Kutta step tolerance (default 1e-9)")
    return root


_CLASS_NEEDS = {
    "linear": ("f", "g"),
    "bernoulli": ("f", "g", "alpha"),
    "exp": ("f", "g", "beta"),
    "second-order": ("b", "c", "yp0"),
}
_CLASS_REJECTS = {
    "linear": ("alpha", "beta", "b", "c", "yp0"),
    "bernoulli": ("beta", "b", "c", "yp0"),
    "exp": ("alpha", "b", "c", "yp0"),
    "second-order": ("f", "g", "alpha", "beta"),
}


def _make_spec(ns) -> tuple[EquationSpec, InitialCondition]:
    for name in _CLASS_NEEDS[ns.klass]:
        if getattr(ns, name) is None:
            raise UsageError(f"--class {ns.klass} requires --{name}")
    for name in _CLASS_REJECTS[ns.klass]:
        if getattr(ns, name) is not None:
            raise UsageError(f"--{name} does not apply to --class {ns.klass}")
    lo, hi = ns.xrange
    if not (lo <= ns.x0 <= hi):
        raise UsageError("--x0 must lie inside --range")
    if ns.samples < 2:
        raise UsageError("--samples must be at least 2")

    kind = EquationClass(ns.klass)
    if kind == EquationClass.SECOND_ORDER:
        spec = EquationSpec.second_order(ns.b, ns.c)
        ic = InitialCondition(ns.x0, ns.y0, ns.yp0)
    else:
        f = parse_expr(ns.f)
        g = parse_expr(ns.g)
        if kind == EquationClass.LINEAR:
            spec = EquationSpec.linear(f, g)
        elif kind == EquationClass.BERNOULLI:
            spec = EquationSpec.bernoulli(f, g, ns.alpha)
        else:
            spec = EquationSpec.exp_class(f, g, ns.beta)
        ic = InitialCondition(ns.x0, ns.y0)
    return spec, ic


def _make_cfg(ns) -> QuadratureConfig:
    lo, hi = ns.xrange
    return QuadratureConfig(abs_tol=ns.abs_tol, rel_tol=ns.rel_tol,
                            checkpoint_spacing=(hi - lo) / 256.0)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _parameters(ns) -> dict:
    params = {"class": ns.klass}
    for name in ("f", "g", "alpha", "beta", "b", "c"):
        v = getattr(ns, name)
        if v is not None:
            params[name] = v
    params["x0"] = ns.x0
    params["y0"] = ns.y0
    if ns.yp0 is not None:
        params["yp0"] = ns.yp0
    params["range"] = list(ns.xrange)
    params["samples"] = ns.samples
    return params


def _json_bound(v: float):
    return None if math.isinf(v) else v


def _meta_lines(klass: str, constants: dict, validity, provenance: str):
    consts = ",".join(f"{k}={_fmt(v)}" for k, v in constants.items())
    return [
        f"# class: {klass}",
        f"# constants: {consts}",
        f"# validity: {_fmt(validity[0])}:{_fmt(validity[1])}",
        f"# provenance: {provenance}",
    ]


def _document_solve(ns, sol, xs, ys) -> str:
    v = sol.validity
    if ns.format == "csv":
        lines = _meta_lines(ns.klass, sol.constants, (v.lo, v.hi),
                            sol.provenance)
        lines.append("x,y")
        lines.extend(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
        return "\n".join(lines) + "\n"
    doc = {
        "class": ns.klass,
        "parameters": _parameters(ns),
        "constants": sol.constants,
        "validity": {"lo": _json_bound(v.lo), "hi": _json_bound(v.hi)},
        "provenance": sol.provenance,
        "samples": [{"x": float(x), "y": float(y)} for x, y in zip(xs, ys)],
    }
    return json.dumps(doc, indent=2) + "\n"


def _document_verify(ns, report) -> str:
    if ns.format == "csv":
        lines = _meta_lines(ns.klass, report.constants, report.validity,
                            report.provenance)
        lines.append(f"# overall: {'pass' if report.passed else 'fail'}")
        if report.note:
            lines.append(f"# note: {report.note}")
        lines.append("name,max_deviation,tolerance,pass")
        lines.extend(
            f"{c.name},{_fmt(c.max_deviation)},{_fmt(c.tolerance)},"
            f"{'true' if c.passed else 'false'}" for c in report.checks)
        return "\n".join(lines) + "\n"
    doc = {
        "class": ns.klass,
        "parameters": _parameters(ns),
        "constants": report.constants,
        "validity": {"lo": _json_bound(report.validity[0]),
                     "hi": _json_bound(report.validity[1])},
        "provenance": report.provenance,
        "report": report.to_dict(),
    }
    if report.note:
        doc["note"] = report.note
    return json.dumps(doc, indent=2) + "\n"


def _document_oracle(ns, oracle) -> str:
    lo, hi = ns.xrange
    if ns.format == "csv":
        lines = [
            f"# class: {ns.klass}",
            f"# method: {oracle.method}",
            f"# steps: taken={oracle.steps_taken} "
            f"rejected={oracle.steps_rejected}",
        ]
        if oracle.truncated:
            lines.append(f"# truncated_at: {_fmt(oracle.truncated_at)}")
        lines.append("x,y")
        lines.extend(f"{_fmt(x)},{_fmt(y)}"
                     for x, y in zip(oracle.grid, oracle.values))
        return "\n".join(lines) + "\n"
    doc = {
        "class": ns.klass,
        "parameters": _parameters(ns),
        "method": oracle.method,
        "steps": {"taken": oracle.steps_taken,
                  "rejected": oracle.steps_rejected},
        "truncated_at": oracle.truncated_at,
        "validity": {"lo": lo, "hi": hi},
        "samples": [{"x": float(x), "y": float(y)}
                    for x, y in zip(oracle.grid, oracle.values)],
    }
    return json.dumps(doc, indent=2) + "\n"


def _execute(ns) -> tuple[str, int]:
    spec, ic = _make_spec(ns)
    lo, hi = ns.xrange
    if ns.command == "solve":
        cfg = _make_cfg(ns)
        sol = _construct(spec, ic, cfg)
        xs, ys = sol.sample(lo, hi, ns.samples)
        return _document_solve(ns, sol, xs, ys), 0
    if ns.command == "verify":
        cfg = _make_cfg(ns)
        report = full_verify(spec, ic, (lo, hi), cfg, grid_size=ns.samples,
                             oracle_tol=ns.oracle_tol,
                             check_tol=ns.check_tol, perturb=ns.perturb)
        return _document_verify(ns, report), 0 if report.passed else 3
    oracle = rk_reference(spec, ic, (lo, hi), ns.oracle_tol, ns.samples)
    return _document_oracle(ns, oracle), 0


def run(argv, out=None, err=None) -> int:
    """Parse argv, execute, and write the document; returns the exit code."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        ns = _build_parser().parse_args(argv)
        text, code = _execute(ns)
    except (UsageError, ExprSyntaxError) as e:
        print(f"error: {e}", file=err)
        return 1
    except OdeformError as e:
        print(f"error: {str(e).splitlines()[0]}", file=err)
        return 2
    except SystemExit as e:  # argparse --help
        return int(e.code or 0)
    if ns.out:
        with open(ns.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return code


def main() -> int:
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
