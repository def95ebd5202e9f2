"""Independent numerical verification of closed-form solutions.

Four checks, all deterministic:

* rk_reference / compare -- integrate the same initial-value problem with
  an embedded Dormand-Prince 5(4) pair (adaptive step, dense output at the
  requested grid) and compare pointwise with relative normalization
  |sol - oracle| / (1 + |oracle|).
* residual_check -- differentiate the closed form with centered finite
  differences (h = 1e-5 first order; 3-point second difference with
  h = 1e-4 for second order) and push it through the equation. The
  reported deviation is max |residual| / (1 + scale) where scale is the
  largest magnitude any single equation term reaches on the grid.
* riccati_check -- second order only: z = (log|y|)' must satisfy
  z' + z^2 + b z + c = 0. Points where |y| <= 1e-3 max|y| are excluded,
  and so are points where the numerical |z| is large enough that the
  finite-difference error budget alone exceeds the tolerance (near zeros
  of y, z grows like 1/distance and no double-precision stencil can meet
  the tolerance there).
* route equivalence -- bernoulli only: the direct power-transform solution
  and the solution through the linear substitution must agree.

full_verify runs every check that applies and aggregates a report whose
overall flag is the conjunction of the individual ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConvergenceError, EvalError, InconclusiveError,
                     NoOverlapError, OdeformError, ParameterError, StageError)
from .quad import QuadratureConfig, as_array_fn
from .solvers import (ClosedFormSolution, EquationClass, EquationSpec,
                      InitialCondition, signed_power_many, solve_bernoulli,
                      solve_bernoulli_via_linear, solve_exp, solve_linear_ivp,
                      solve_second_order_ivp)
from ._backend import EXP_MAX

__all__ = [
    "CheckResult",
    "OracleSolution",
    "VerificationReport",
    "rk_reference",
    "compare",
    "residual_check",
    "riccati_check",
    "full_verify",
]

_BLOWUP = 1e12           # |y| beyond this truncates the oracle
_H_FIRST = 1e-5          # centered-difference step, first derivatives
_H_SECOND = 1e-4         # step for the 3-point second difference
_H_RICCATI_OUTER = 5e-5  # outer step differencing z itself
_ORACLE_TOL = 1e-9
_CHECK_TOL = 1e-6
_RESIDUAL_TOL2 = 1e-5
_RICCATI_TOL = 1e-4
_ROUTE_TOL = 1e-8

# Dormand-Prince 5(4) tableau; the propagated solution is 5th order and the
# last stage is the derivative at the step end (reused as the next first
# stage).
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                   11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


@dataclass
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float
    passed: bool
    grid_size: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class OracleSolution:
    """Reference trajectory from the adaptive Runge-Kutta integrator."""

    grid: np.ndarray
    values: np.ndarray
    slopes: np.ndarray | None
    method: str
    steps_taken: int
    steps_rejected: int
    truncated: bool
    truncated_at: float | None = None


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    passed: bool = True
    validity: tuple[float, float] = (-math.inf, math.inf)
    note: str = ""
    constants: dict = field(default_factory=dict)
    provenance: str = ""

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }


def _scalar_fn(f):
    fn = as_array_fn(f)

    def call(x: float) -> float:
        return float(fn(np.array([x], dtype=np.float64))[0])

    return call


def _deriv_fn(spec: EquationSpec):
    if spec.kind == EquationClass.SECOND_ORDER:
        b, c = float(spec.b), float(spec.c)

        def deriv2(x: float, y: np.ndarray) -> np.ndarray:
            return np.array([y[1], -b * y[1] - c * y[0]])

        return deriv2

    f1 = _scalar_fn(spec.f)
    g1 = _scalar_fn(spec.g)

    if spec.kind == EquationClass.LINEAR:
        def deriv(x, y):
            return np.array([g1(x) - f1(x) * y[0]])
    elif spec.kind == EquationClass.BERNOULLI:
        alpha = float(spec.alpha)

        def deriv(x, y):
            ya = signed_power_many(np.array([y[0]]), alpha)[0]
            return np.array([g1(x) * ya - f1(x) * y[0]])
    else:
        beta = float(spec.beta)

        def deriv(x, y):
            z = beta * y[0]
            if z > EXP_MAX:
                raise OdeformError("exp(beta*y) overflow in the oracle")
            return np.array([g1(x) - f1(x) * math.exp(z)])

    return deriv


class _Truncated(Exception):
    def __init__(self, at: float):
        self.at = at


def _dp_step(deriv, x, y, h, k1):
    ks = [k1]
    for i in range(1, 7):
        yi = y.copy()
        for a, k in zip(_DP_A[i], ks):
            if a != 0.0:
                yi += (h * a) * k
        ks.append(deriv(x + _DP_C[i] * h, yi))
    y5 = y.copy()
    for w, k in zip(_DP_B5, ks):
        if w != 0.0:
            y5 += (h * w) * k
    err = np.zeros_like(y)
    for w, k in zip(_DP_E, ks):
        if w != 0.0:
            err += (h * w) * k
    return y5, err, ks[6]


def _march(deriv, x0, y0, targets, tol, counters):
    """Advance from (x0, y0) hitting each target in order; returns rows of
    state at targets reached. Raises _Truncated on blow-up or when stage
    evaluation keeps failing."""
    rows = []
    x = float(x0)
    y = np.asarray(y0, dtype=np.float64).copy()
    k1 = deriv(x, y)
    span = abs(targets[-1] - x0) or 1.0
    direction = 1.0 if targets[-1] >= x0 else -1.0
    h = direction * span / 100.0
    hmin = 1e-13 * max(1.0, span)
    for t in targets:
        while (t - x) * direction > 1e-14 * max(1.0, abs(t)):
            if abs(h) > abs(t - x):
                h = t - x
            try:
                y5, err, k7 = _dp_step(deriv, x, y, h, k1)
            except (EvalError, OdeformError):
                counters["rejected"] += 1
                h *= 0.5
                if abs(h) < hmin:
                    raise _Truncated(x)
                continue
            if not np.all(np.isfinite(y5)):
                counters["rejected"] += 1
                h *= 0.5
                if abs(h) < hmin:
                    raise _Truncated(x)
                continue
            wt = tol + tol * np.maximum(np.abs(y), np.abs(y5))
            enorm = math.sqrt(float(np.mean((err / wt) ** 2)))
            if enorm <= 1.0:
                x = x + h
                y = y5
                k1 = k7
                counters["taken"] += 1
                if np.max(np.abs(y)) > _BLOWUP:
                    raise _Truncated(x)
                fac = 5.0 if enorm == 0.0 else min(5.0, max(
                    0.2, 0.9 * enorm ** -0.2))
                h *= fac
            else:
                counters["rejected"] += 1
                h *= max(0.2, 0.9 * enorm ** -0.2)
                if abs(h) < hmin:
                    raise _Truncated(x)
        rows.append((t, y.copy()))
    return rows


def rk_reference(spec: EquationSpec, ic: InitialCondition,
                 xrange: tuple[float, float], tol: float = _ORACLE_TOL,
                 grid_size: int = 201) -> OracleSolution:
    """Integrate the initial-value problem over xrange with an adaptive
    embedded Runge-Kutta 5(4) pair, reporting values on a uniform grid.

    atol and rtol are both set to ``tol``. If |y| exceeds 1e12, or
    coefficient evaluation keeps failing while the step shrinks away, the
    trajectory is truncated there and flagged; failure at x0 itself raises.
    """
    lo, hi = float(xrange[0]), float(xrange[1])
    if not (lo < hi):
        raise ParameterError("need lo < hi")
    if not (lo <= ic.x0 <= hi):
        raise ParameterError("x0 must lie inside the range")
    if not (0 < tol < 1):
        raise ParameterError("tol must be in (0, 1)")
    second = spec.kind == EquationClass.SECOND_ORDER
    if second and ic.yp0 is None:
        raise ParameterError("second-order initial data needs yp0")
    deriv = _deriv_fn(spec)
    y0 = np.array([ic.y0, ic.yp0]) if second else np.array([ic.y0])
    deriv(ic.x0, y0)  # a failure at the anchor is a caller error: surface it

    grid = np.linspace(lo, hi, int(grid_size))
    up = [float(t) for t in grid if t > ic.x0]
    down = [float(t) for t in grid[::-1] if t < ic.x0]
    counters = {"taken": 0, "rejected": 0}
    rows = [(float(t), y0.copy()) for t in grid if t == ic.x0]
    truncated_at = None
    for targets in (down, up):
        if not targets:
            continue
        try:
            rows.extend(_march(deriv, ic.x0, y0, targets, tol, counters))
        except _Truncated as tr:
            truncated_at = tr.at

    rows.sort(key=lambda r: r[0])
    gx = np.array([r[0] for r in rows])
    gy = np.array([r[1][0] for r in rows])
    slopes = np.array([r[1][1] for r in rows]) if second else None
    return OracleSolution(
        grid=gx, values=gy, slopes=slopes, method="rk45",
        steps_taken=counters["taken"], steps_rejected=counters["rejected"],
        truncated=truncated_at is not None, truncated_at=truncated_at)


def compare(sol: ClosedFormSolution, oracle: OracleSolution,
            tol: float = _CHECK_TOL) -> CheckResult:
    """Max pointwise deviation |sol - oracle| / (1 + |oracle|) on the part
    of the oracle grid inside the solution's validity interval."""
    sol.ensure_validity(float(oracle.grid.min()), float(oracle.grid.max()))
    v = sol.validity
    inside = (oracle.grid > v.lo) & (oracle.grid < v.hi)
    note = ""
    if not inside.all():
        note = f"{int((~inside).sum())} oracle points outside validity"
    if not inside.any():
        raise NoOverlapError(
            "the oracle grid and the validity interval do not overlap")
    ys = sol.values(oracle.grid[inside])
    ref = oracle.values[inside]
    dev = float(np.max(np.abs(ys - ref) / (1.0 + np.abs(ref))))
    return CheckResult("oracle", dev, tol, dev <= tol,
                       int(inside.sum()), note)


def _interior_grid(sol: ClosedFormSolution, xrange, grid_size: int,
                   reach: float) -> np.ndarray:
    if xrange is None:
        v = sol.validity
        if not (math.isfinite(v.lo) and math.isfinite(v.hi)):
            raise ParameterError(
                "an explicit xrange is needed when validity is unbounded")
        lo, hi = v.lo, v.hi
    else:
        lo, hi = float(xrange[0]), float(xrange[1])
    sol.ensure_validity(lo, hi)
    v = sol.validity
    span = hi - lo
    margin = max(10.0 * reach, 1e-3 * span)
    glo = max(lo, v.lo + margin) if v.lo > -math.inf else lo
    ghi = min(hi, v.hi - margin) if v.hi < math.inf else hi
    if not (glo < ghi):
        raise NoOverlapError(
            "validity interval too small for a finite-difference grid")
    return np.linspace(glo, ghi, int(grid_size))


def residual_check(spec: EquationSpec, sol: ClosedFormSolution,
                   grid_size: int = 200, xrange=None,
                   tol: float | None = None) -> CheckResult:
    """Finite-difference residual of the equation on an interior grid.

    Deviation is max |residual| / (1 + scale); scale is the largest grid
    magnitude among the equation's individual terms, so steep solutions are
    judged relative to their own size. Default tolerance is 1e-6 for the
    first-order classes and 1e-5 for second order (the second difference
    amplifies rounding by 1/h^2).
    """
    second = spec.kind == EquationClass.SECOND_ORDER
    h = _H_SECOND if second else _H_FIRST
    if tol is None:
        tol = _RESIDUAL_TOL2 if second else _CHECK_TOL
    xs = _interior_grid(sol, xrange, grid_size, h)
    stacked = np.concatenate([xs - h, xs, xs + h])
    vals = sol.values(stacked)
    ym, y0, yp = vals[:len(xs)], vals[len(xs):2 * len(xs)], vals[2 * len(xs):]
    d1 = (yp - ym) / (2.0 * h)

    if second:
        d2 = (yp - 2.0 * y0 + ym) / (h * h)
        terms = (d2, spec.b * d1, spec.c * y0)
        residual = d2 + spec.b * d1 + spec.c * y0
    elif spec.kind == EquationClass.LINEAR:
        fv = as_array_fn(spec.f)(xs)
        gv = as_array_fn(spec.g)(xs)
        terms = (d1, fv * y0, gv)
        residual = d1 + fv * y0 - gv
    elif spec.kind == EquationClass.BERNOULLI:
        fv = as_array_fn(spec.f)(xs)
        gv = as_array_fn(spec.g)(xs)
        ya = signed_power_many(y0, float(spec.alpha))
        terms = (d1, fv * y0, gv * ya)
        residual = d1 + fv * y0 - gv * ya
    else:
        fv = as_array_fn(spec.f)(xs)
        gv = as_array_fn(spec.g)(xs)
        z = float(spec.beta) * y0
        if (z > EXP_MAX).any():
            raise OdeformError("exp(beta*y) overflow in the residual")
        ey = np.exp(z)
        terms = (d1, fv * ey, gv)
        residual = d1 + fv * ey - gv

    scale = max(float(np.max(np.abs(t))) for t in terms)
    dev = float(np.max(np.abs(residual))) / (1.0 + scale)
    return CheckResult("residual", dev, float(tol), dev <= tol, len(xs))


def riccati_check(b: float, c: float, sol: ClosedFormSolution,
                  grid_size: int = 200, xrange=None,
                  tol: float = _RICCATI_TOL) -> CheckResult:
    """Check z' + z^2 + b z + c = 0 for z = (log|y|)' on an interior grid.

    z comes from centered differences of log|y| (h = 1e-5) and z' from
    centered differences of z (outer step 5e-5). Excluded points: those
    with |y| <= 1e-3 max|y| on the grid, and those where |z| exceeds the
    conditioning cap (tol / (6 (h^2 + H^2)))^(1/4) -- beyond it the
    finite-difference truncation error alone would swamp the tolerance, as
    happens arbitrarily close to any zero of y. If more than 90% of the
    grid is excluded the check is inconclusive and raises.
    """
    if sol.kind != EquationClass.SECOND_ORDER:
        raise ParameterError("the invariant applies to second-order solutions")
    h = _H_FIRST
    H = _H_RICCATI_OUTER
    if xrange is None:
        xrange = (sol.x0, sol.x0 + 2.0)
    xs = _interior_grid(sol, xrange, grid_size, h + H)
    n = len(xs)
    offsets = (-H - h, -H + h, -h, h, H - h, H + h)
    stacked = np.concatenate([xs + o for o in offsets])
    vals = sol.values(stacked).reshape(len(offsets), n)
    y0 = sol.values(xs)
    ymax = float(np.max(np.abs(y0)))
    if ymax == 0.0:
        raise InconclusiveError("the solution vanishes on the whole grid")

    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(np.abs(vals))
        z_m = (L[1] - L[0]) / (2.0 * h)   # z at x - H
        z_0 = (L[3] - L[2]) / (2.0 * h)   # z at x
        z_p = (L[5] - L[4]) / (2.0 * h)   # z at x + H
        zp = (z_p - z_m) / (2.0 * H)
        residual = zp + z_0 * z_0 + b * z_0 + c

    zcap = (tol / (6.0 * (h * h + H * H))) ** 0.25
    keep = (np.abs(y0) > 1e-3 * ymax) & np.isfinite(residual) \
        & (np.abs(z_0) <= zcap)
    kept = int(keep.sum())
    if kept < max(1, n // 10):
        raise InconclusiveError(
            f"only {kept} of {n} grid points usable; the solution is too "
            "close to zero almost everywhere")
    dev = float(np.max(np.abs(residual[keep])))
    return CheckResult("riccati", dev, tol, dev <= tol, kept,
                       f"{n - kept} points excluded near zeros of y")


def _construct(spec: EquationSpec, ic: InitialCondition,
               cfg: QuadratureConfig | None) -> ClosedFormSolution:
    if spec.kind == EquationClass.LINEAR:
        return solve_linear_ivp(spec.f, spec.g, ic, cfg)
    if spec.kind == EquationClass.BERNOULLI:
        return solve_bernoulli(spec.f, spec.g, float(spec.alpha), ic, cfg)
    if spec.kind == EquationClass.EXP:
        return solve_exp(spec.f, spec.g, float(spec.beta), ic, cfg)
    return solve_second_order_ivp(float(spec.b), float(spec.c), ic)


def full_verify(spec: EquationSpec, ic: InitialCondition,
                xrange: tuple[float, float],
                cfg: QuadratureConfig | None = None, *,
                grid_size: int = 200, oracle_tol: float = _ORACLE_TOL,
                check_tol: float = _CHECK_TOL,
                perturb: float = 0.0) -> VerificationReport:
    """Construct the closed form and run every applicable check.

    The range is clipped to the discovered validity interval (noted in the
    report). ``perturb`` offsets the constructed solution by a constant
    before checking -- a diagnostic knob demonstrating that defects of that
    size are caught. Stage failures raise StageError naming the stage.
    """
    lo, hi = float(xrange[0]), float(xrange[1])
    if not (lo < hi):
        raise ParameterError("need lo < hi")
    if not (lo <= ic.x0 <= hi):
        raise ParameterError("x0 must lie inside the range")

    try:
        sol = _construct(spec, ic, cfg)
    except OdeformError as e:
        raise StageError("constructor", e)

    try:
        sol.ensure_validity(lo, hi)
    except OdeformError as e:
        raise StageError("validity probe", e)
    v = sol.validity
    span = hi - lo
    # Keep 1% of the span away from a validity boundary: solutions are
    # typically singular there and finite differences lose accuracy faster
    # than the term scale grows.
    clo = lo if v.lo <= lo else max(lo, v.lo + 1e-2 * span)
    chi = hi if v.hi >= hi else min(hi, v.hi - 1e-2 * span)
    note = ""
    if clo > lo or chi < hi:
        note = (f"range clipped to [{clo!r}, {chi!r}] inside validity "
                f"({v.lo!r}, {v.hi!r})")
    if not (clo < chi) or not (clo <= ic.x0 <= chi):
        raise StageError("validity probe", NoOverlapError(
            "the validity interval covers too little of the range"))

    checked = sol.perturbed(perturb) if perturb else sol
    second = spec.kind == EquationClass.SECOND_ORDER
    checks = []

    try:
        rtol = (10.0 * check_tol) if second else check_tol
        checks.append(residual_check(spec, checked, grid_size, (clo, chi),
                                     tol=rtol))
    except OdeformError as e:
        raise StageError("residual check", e)

    try:
        oracle = rk_reference(spec, ic, (clo, chi), oracle_tol, grid_size)
        if oracle.truncated:
            raise InconclusiveError(
                f"oracle truncated at x={oracle.truncated_at!r}")
        checks.append(compare(checked, oracle, check_tol))
    except OdeformError as e:
        raise StageError("oracle comparison", e)

    if second:
        try:
            checks.append(riccati_check(float(spec.b), float(spec.c),
                                        checked, grid_size, (clo, chi)))
        except OdeformError as e:
            raise StageError("riccati check", e)

    if spec.kind == EquationClass.BERNOULLI:
        if ic.y0 == 0.0:
            checks.append(CheckResult(
                "route_equivalence", 0.0, _ROUTE_TOL, True, 0,
                "skipped: the zero solution has no linear-substitution route"))
        else:
            try:
                via = solve_bernoulli_via_linear(
                    spec.f, spec.g, float(spec.alpha), ic, cfg)
                via.ensure_validity(clo, chi)
                vv = via.validity
                blo = max(clo, vv.lo + 1e-3 * span) if vv.lo > clo else clo
                bhi = min(chi, vv.hi - 1e-3 * span) if vv.hi < chi else chi
                if not (blo < bhi):
                    raise NoOverlapError(
                        "no shared interval between the two routes")
                xs = np.linspace(blo, bhi, grid_size)
                y1 = checked.values(xs)
                y2 = via.values(xs)
                dev = float(np.max(np.abs(y1 - y2) / (1.0 + np.abs(y1))))
                checks.append(CheckResult(
                    "route_equivalence", dev, _ROUTE_TOL, dev <= _ROUTE_TOL,
                    len(xs)))
            except OdeformError as e:
                raise StageError("route equivalence", e)

    return VerificationReport(
        checks=checks, passed=all(c.passed for c in checks),
        validity=(v.lo, v.hi), note=note, constants=dict(sol.constants),
        provenance=sol.provenance)
