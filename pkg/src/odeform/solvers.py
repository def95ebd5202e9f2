"""Closed-form solution constructors for four equation classes.

Supported forms (y is the unknown, f and g arbitrary evaluable coefficient
functions, anchored antiderivatives realized by the quad module):

* linear first order   y' + f(x) y = g(x)
* bernoulli            y' + f(x) y = g(x) y^alpha,  alpha not in {0, 1}
* exponential class    y' + f(x) e^(beta y) = g(x),  beta != 0
* constant-coefficient second order   y'' + b y' + c y = 0

Antiderivatives are anchored at the initial point, so the free constant of
each family maps directly onto the initial value: C = y0 for the linear
class, C = y0^(1-alpha) for bernoulli, C = e^(-beta y0) for the
exponential class.

A ClosedFormSolution evaluates lazily and tracks the maximal interval
around x0 on which its formula stays defined (power bases positive, log
arguments positive, exponentials within double range). Probing happens on
demand: querying or sampling a window walks a probe grid, and the first
failing probe brackets a boundary that bisection then locates to within
1e-10. Constructors perform no integration themselves and are cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
import threading

import numpy as np

from ._backend import EXP_MAX, INT_REL_TOL
from .errors import (ConvergenceError, EvalDomainError, EvalError,
                     EvalOverflowError, NoOverlapError, OutsideValidityError,
                     ParameterError)
from .quad import Antiderivative, QuadratureConfig, as_array_fn, \
    weighted_cumulative

__all__ = [
    "EquationClass",
    "EquationSpec",
    "InitialCondition",
    "Interval",
    "ClosedFormSolution",
    "signed_power",
    "solve_linear_ivp",
    "solve_linear_general",
    "solve_bernoulli",
    "solve_bernoulli_via_linear",
    "solve_exp",
    "solve_second_order",
    "solve_second_order_ivp",
]

_BOUNDARY_WIDTH = 1e-10   # bisection stops once the bracket is this narrow
_IC_RTOL = 1e-12          # initial-condition exactness target
_PROBES = 257             # validity probe points per freshly explored window


class EquationClass(str, Enum):
    LINEAR = "linear"
    BERNOULLI = "bernoulli"
    EXP = "exp"
    SECOND_ORDER = "second-order"


@dataclass(frozen=True)
class InitialCondition:
    """Initial data (x0, y0) and, for second-order equations, y'(x0)."""

    x0: float
    y0: float
    yp0: float | None = None

    def __post_init__(self):
        for name in ("x0", "y0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ParameterError(f"{name} must be a finite number")
        if self.yp0 is not None and not math.isfinite(self.yp0):
            raise ParameterError("yp0 must be finite when given")


@dataclass(frozen=True)
class EquationSpec:
    """One equation instance: class tag plus its coefficients."""

    kind: EquationClass
    f: object | None = None
    g: object | None = None
    alpha: float | None = None
    beta: float | None = None
    b: float | None = None
    c: float | None = None

    def __post_init__(self):
        if self.kind in (EquationClass.LINEAR, EquationClass.BERNOULLI,
                         EquationClass.EXP):
            if self.f is None or self.g is None:
                raise ParameterError(f"{self.kind.value} needs f and g")
        if self.kind == EquationClass.BERNOULLI:
            _check_alpha(self.alpha)
        if self.kind == EquationClass.EXP:
            _check_beta(self.beta)
        if self.kind == EquationClass.SECOND_ORDER:
            for name in ("b", "c"):
                v = getattr(self, name)
                if v is None or not math.isfinite(v):
                    raise ParameterError(
                        f"second-order needs finite coefficient {name}")

    @staticmethod
    def linear(f, g) -> "EquationSpec":
        return EquationSpec(EquationClass.LINEAR, f=f, g=g)

    @staticmethod
    def bernoulli(f, g, alpha: float) -> "EquationSpec":
        return EquationSpec(EquationClass.BERNOULLI, f=f, g=g, alpha=alpha)

    @staticmethod
    def exp_class(f, g, beta: float) -> "EquationSpec":
        return EquationSpec(EquationClass.EXP, f=f, g=g, beta=beta)

    @staticmethod
    def second_order(b: float, c: float) -> "EquationSpec":
        return EquationSpec(EquationClass.SECOND_ORDER, b=b, c=c)


def _check_alpha(alpha):
    if alpha is None or not math.isfinite(alpha):
        raise ParameterError("alpha must be a finite number")
    if alpha == 0.0 or alpha == 1.0:
        raise ParameterError(
            "alpha 0 and 1 are linear equations, not bernoulli ones")


def _check_beta(beta):
    if beta is None or not math.isfinite(beta) or beta == 0.0:
        raise ParameterError("beta must be finite and nonzero")


def is_integer_valued(v: float) -> bool:
    return abs(v - round(v)) <= INT_REL_TOL * max(1.0, abs(v))


def signed_power(base: float, expo: float) -> float:
    """Real-valued base**expo with the package-wide power semantics.

    Positive bases behave as usual, 0**positive is 0, and negative bases
    are only accepted for (numerically) integer exponents, with the sign
    following the exponent's parity.
    """
    if base > 0.0:
        return base ** expo
    if base == 0.0:
        if expo > 0.0:
            return 0.0
        if expo == 0.0:
            return 1.0
        raise EvalDomainError("zero base with a negative exponent", base)
    if not is_integer_valued(expo):
        raise EvalDomainError(
            "negative base with a non-integer exponent", base)
    r = (-base) ** expo
    return -r if math.fmod(abs(round(expo)), 2.0) == 1.0 else r


def signed_power_many(base: np.ndarray, expo: float) -> np.ndarray:
    """Vectorized signed_power; raises at the first invalid element."""
    base = np.asarray(base, dtype=np.float64)
    out = np.empty_like(base)
    pos = base > 0.0
    out[pos] = base[pos] ** expo
    zero = base == 0.0
    if zero.any():
        if expo > 0.0:
            out[zero] = 0.0
        elif expo == 0.0:
            out[zero] = 1.0
        else:
            raise EvalDomainError("zero base with a negative exponent", 0.0)
    neg = base < 0.0
    if neg.any():
        if not is_integer_valued(expo):
            raise EvalDomainError(
                "negative base with a non-integer exponent",
                float(base[np.argmax(neg)]))
        r = (-base[neg]) ** expo
        if math.fmod(abs(round(expo)), 2.0) == 1.0:
            r = -r
        out[neg] = r
    return out


def _checked_exp(z: np.ndarray, xs: np.ndarray) -> np.ndarray:
    over = z > EXP_MAX
    if over.any():
        raise EvalOverflowError(
            "exponential overflow in the closed form",
            float(xs[int(np.argmax(over))]))
    return np.exp(z)


def _finite_or_overflow(vals: np.ndarray, xs: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(vals)
    if bad.any():
        raise EvalOverflowError(
            "closed form overflowed double range",
            float(xs[int(np.argmax(bad))]))
    return vals


@dataclass
class Interval:
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo


class ClosedFormSolution:
    """An evaluable closed-form solution with a lazily refined validity
    interval around its anchor x0.

    ``constants`` holds the free constants of the family as named floats.
    ``provenance`` is a one-line description of the instantiated formula.
    ``non_unique`` marks solutions known to share initial data with others
    (the zero bernoulli solution for alpha in (0, 1)).
    """

    def __init__(self, kind: EquationClass, evaluate, x0: float,
                 constants: dict[str, float], provenance: str,
                 non_unique: bool = False):
        self.kind = kind
        self._evaluate = evaluate
        self.x0 = float(x0)
        self.constants = dict(constants)
        self.provenance = provenance
        self.non_unique = non_unique
        self._lo = -math.inf
        self._hi = math.inf
        self._probed_lo = self.x0
        self._probed_hi = self.x0
        self._limit_note: str | None = None
        self._lock = threading.RLock()

    @property
    def validity(self) -> Interval:
        return Interval(self._lo, self._hi)

    @property
    def limit_note(self) -> str | None:
        """What stopped the formula at the nearest located boundary."""
        return self._limit_note

    def _ok(self, x: float) -> bool:
        try:
            v = self._evaluate(np.array([x], dtype=np.float64))
        except (EvalError, ConvergenceError) as e:
            self._limit_note = str(e)
            return False
        return bool(np.isfinite(v[0]))

    def _bisect_boundary(self, good: float, bad: float) -> float:
        while abs(bad - good) > _BOUNDARY_WIDTH:
            mid = 0.5 * (good + bad)
            if mid == good or mid == bad:
                break
            if self._ok(mid):
                good = mid
            else:
                bad = mid
        return 0.5 * (good + bad)

    def _explore_up(self, hi: float):
        start = self._probed_hi
        pts = np.linspace(start, hi, _PROBES)
        try:
            vals = self._evaluate(pts)
            if np.all(np.isfinite(vals)):
                self._probed_hi = hi
                return
        except (EvalError, ConvergenceError):
            pass
        good = start
        for p in pts[1:]:
            if self._ok(float(p)):
                good = float(p)
            else:
                self._hi = self._bisect_boundary(good, float(p))
                self._probed_hi = self._hi
                return
        self._probed_hi = hi

    def _explore_down(self, lo: float):
        start = self._probed_lo
        pts = np.linspace(start, lo, _PROBES)
        try:
            vals = self._evaluate(pts)
            if np.all(np.isfinite(vals)):
                self._probed_lo = lo
                return
        except (EvalError, ConvergenceError):
            pass
        good = start
        for p in pts[1:]:
            if self._ok(float(p)):
                good = float(p)
            else:
                self._lo = self._bisect_boundary(good, float(p))
                self._probed_lo = self._lo
                return
        self._probed_lo = lo

    def ensure_validity(self, lo: float, hi: float):
        """Probe the window [lo, hi] and refine the validity interval.

        Failures between probe points narrower than the probe spacing can
        go unnoticed; boundaries that are found are located to 1e-10.
        """
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ParameterError("validity window must be finite")
        with self._lock:
            up = min(max(hi, self.x0), self._hi)
            if up > self._probed_hi:
                self._explore_up(up)
            down = max(min(lo, self.x0), self._lo)
            if down < self._probed_lo:
                self._explore_down(down)

    def values(self, xs) -> np.ndarray:
        """Evaluate at a 1-D array of points inside the validity interval."""
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        if xs.ndim != 1:
            raise ValueError("expected a 1-D array of points")
        if xs.size == 0:
            return np.empty(0)
        if not np.all(np.isfinite(xs)):
            raise ValueError("query points must be finite")
        self.ensure_validity(float(xs.min()), float(xs.max()))
        outside = (xs < self._lo) | (xs > self._hi)
        if outside.any():
            raise OutsideValidityError(
                float(xs[int(np.argmax(outside))]), (self._lo, self._hi))
        return self._evaluate(xs)

    def value(self, x: float) -> float:
        return float(self.values(np.array([x], dtype=np.float64))[0])

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self.value(float(x))
        return self.values(x)

    def sample(self, lo: float, hi: float,
               n: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniform samples over [lo, hi] clipped to the validity interval."""
        if not (isinstance(n, int) and n >= 2):
            raise ParameterError("need at least 2 sample points")
        if not (lo < hi):
            raise ParameterError("need lo < hi")
        self.ensure_validity(lo, hi)
        clo, chi = lo, hi
        if self._lo > lo:
            clo = self._lo + max(1e-9, 1e-9 * abs(self._lo))
        if self._hi < hi:
            chi = self._hi - max(1e-9, 1e-9 * abs(self._hi))
        if not (clo < chi):
            raise NoOverlapError(
                f"range [{lo!r}, {hi!r}] does not overlap the validity "
                f"interval ({self._lo!r}, {self._hi!r})")
        xs = np.linspace(clo, chi, n)
        return xs, self.values(xs)

    def perturbed(self, eps: float) -> "ClosedFormSolution":
        """Copy whose values are offset by eps.

        A deliberately wrong solution, used to demonstrate that the
        verification checks catch defects.
        """
        inner = self._evaluate
        twin = ClosedFormSolution(
            self.kind, lambda xs: inner(xs) + eps, self.x0,
            self.constants, self.provenance + f" (offset by {eps!r})",
            self.non_unique)
        twin._lo, twin._hi = self._lo, self._hi
        twin._probed_lo, twin._probed_hi = self._probed_lo, self._probed_hi
        return twin

    def __repr__(self):
        return (f"ClosedFormSolution(kind={self.kind.value!r}, "
                f"x0={self.x0!r}, constants={self.constants!r})")


def solve_linear_ivp(f, g, ic: InitialCondition,
                     cfg: QuadratureConfig | None = None) -> ClosedFormSolution:
    """Solve y' + f y = g with y(x0) = y0.

    The solution is exp(-F) * (W + y0) with F the antiderivative of f
    anchored at x0 and W the antiderivative of g * exp(F); anchoring makes
    the free constant equal to y0 and the initial value exact.
    """
    x0 = ic.x0
    F = Antiderivative(f, x0, cfg)
    W = weighted_cumulative(g, F, 1.0, x0, cfg)
    C = float(ic.y0)

    def evaluate(xs: np.ndarray) -> np.ndarray:
        damp = _checked_exp(-F.values(xs), xs)
        return _finite_or_overflow(damp * (W.values(xs) + C), xs)

    return ClosedFormSolution(
        EquationClass.LINEAR, evaluate, x0, {"C": C},
        "integrating-factor form exp(-F)*(W + C) with F, W anchored at x0")


def solve_linear_general(f, g, C: float, x0: float,
                         cfg: QuadratureConfig | None = None
                         ) -> ClosedFormSolution:
    """General solution of y' + f y = g with an explicit free constant."""
    if not math.isfinite(C):
        raise ParameterError("C must be finite")
    return solve_linear_ivp(f, g, InitialCondition(x0, C), cfg)


def solve_bernoulli(f, g, alpha: float, ic: InitialCondition,
                    cfg: QuadratureConfig | None = None) -> ClosedFormSolution:
    """Solve y' + f y = g y^alpha with y(x0) = y0, alpha not in {0, 1}.

    For y0 = 0 and alpha > 0 the zero function solves the equation; it is
    returned for any such alpha and flagged non-unique for alpha in (0, 1),
    where other solutions share the same initial data. For y0 != 0 the
    solution is sign(y0) * exp(-F) * |(1-alpha) W + C|^(1/(1-alpha)) with
    C = y0^(1-alpha) and W the antiderivative of g * exp((1-alpha) F);
    validity ends where the power base reaches zero. Negative y0 requires
    an integer 1-alpha, otherwise no real branch exists.
    """
    _check_alpha(alpha)
    x0, y0 = ic.x0, ic.y0
    om = 1.0 - alpha

    if y0 == 0.0:
        if alpha <= 0.0:
            raise ParameterError(
                "y0 = 0 requires alpha > 0 (g*y^alpha must vanish at 0)")
        return ClosedFormSolution(
            EquationClass.BERNOULLI,
            lambda xs: np.zeros(xs.shape), x0, {"C": 0.0},
            "zero particular solution of the bernoulli equation",
            non_unique=(0.0 < alpha < 1.0))

    if y0 < 0.0 and not is_integer_valued(om):
        raise ParameterError(
            "negative y0 needs an integer 1-alpha; no real branch otherwise")

    s_y = 1.0 if y0 > 0.0 else -1.0
    C = signed_power(y0, om)
    s_b = 1.0 if C > 0.0 else -1.0
    expo = 1.0 / om
    F = Antiderivative(f, x0, cfg)
    W = weighted_cumulative(g, F, om, x0, cfg)

    def evaluate(xs: np.ndarray) -> np.ndarray:
        base = s_b * (om * W.values(xs) + C)
        if (base <= 0.0).any():
            raise EvalDomainError(
                "power base reached zero",
                float(xs[int(np.argmax(base <= 0.0))]))
        damp = _checked_exp(-F.values(xs), xs)
        return _finite_or_overflow(s_y * damp * base ** expo, xs)

    return ClosedFormSolution(
        EquationClass.BERNOULLI, evaluate, x0, {"C": C},
        "power-transform form exp(-F)*((1-alpha)*W + C)^(1/(1-alpha)) "
        "anchored at x0")


def solve_bernoulli_via_linear(f, g, alpha: float, ic: InitialCondition,
                               cfg: QuadratureConfig | None = None
                               ) -> ClosedFormSolution:
    """Solve the bernoulli equation through its linear substitute.

    u = y^(1-alpha) satisfies u' + (1-alpha) f u = (1-alpha) g; this
    constructs that linear solution independently and maps it back with
    y = sign(y0) * |u|^(1/(1-alpha)). Requires y0 != 0. Serves as the
    second route for the equivalence check in verification.
    """
    _check_alpha(alpha)
    if ic.y0 == 0.0:
        raise ParameterError("the linear substitution needs y0 != 0")
    om = 1.0 - alpha
    if ic.y0 < 0.0 and not is_integer_valued(om):
        raise ParameterError(
            "negative y0 needs an integer 1-alpha; no real branch otherwise")
    u0 = signed_power(ic.y0, om)
    s_y = 1.0 if ic.y0 > 0.0 else -1.0
    s_u = 1.0 if u0 > 0.0 else -1.0
    expo = 1.0 / om
    ffn = as_array_fn(f)
    gfn = as_array_fn(g)
    u_sol = solve_linear_ivp(lambda t: om * ffn(t), lambda t: om * gfn(t),
                             InitialCondition(ic.x0, u0), cfg)
    u_eval = u_sol._evaluate

    def evaluate(xs: np.ndarray) -> np.ndarray:
        u = s_u * u_eval(xs)
        if (u <= 0.0).any():
            raise EvalDomainError(
                "transformed solution u reached zero",
                float(xs[int(np.argmax(u <= 0.0))]))
        return _finite_or_overflow(s_y * u ** expo, xs)

    return ClosedFormSolution(
        EquationClass.BERNOULLI, evaluate, ic.x0, {"C": u0},
        "bernoulli solved through the linear substitution u = y^(1-alpha)")


def solve_exp(f, g, beta: float, ic: InitialCondition,
              cfg: QuadratureConfig | None = None) -> ClosedFormSolution:
    """Solve y' + f e^(beta y) = g with y(x0) = y0, beta != 0.

    The solution is G - log(beta * Wf + C) / beta with G the antiderivative
    of g anchored at x0, Wf the antiderivative of f * exp(beta G), and
    C = exp(-beta y0). Validity ends where the log argument reaches zero.
    """
    _check_beta(beta)
    x0, y0 = ic.x0, ic.y0
    z0 = -beta * y0
    if z0 > EXP_MAX:
        raise ParameterError(
            "exp(-beta*y0) overflows; the initial condition is out of range")
    C = math.exp(z0)
    G = Antiderivative(g, x0, cfg)
    Wf = weighted_cumulative(f, G, beta, x0, cfg)

    def evaluate(xs: np.ndarray) -> np.ndarray:
        la = beta * Wf.values(xs) + C
        if (la <= 0.0).any():
            raise EvalDomainError(
                "log argument reached zero",
                float(xs[int(np.argmax(la <= 0.0))]))
        return _finite_or_overflow(G.values(xs) - np.log(la) / beta, xs)

    return ClosedFormSolution(
        EquationClass.EXP, evaluate, x0, {"C": C},
        "exponential-class form G - log(beta*Wf + C)/beta anchored at x0")


def _classify_roots(b: float, c: float):
    """Case split on the discriminant b^2 - 4c with a scaled threshold."""
    disc = b * b - 4.0 * c
    thresh = 1e-12 * max(1.0, b * b, abs(4.0 * c))
    r = -0.5 * b + 0.0  # normalize -0.0
    if abs(disc) <= thresh:
        return "repeated", r, None
    if disc > 0.0:
        s = 0.5 * math.sqrt(disc)
        return "real", r - s, r + s
    w = 0.5 * math.sqrt(-disc)
    return "complex", r, w


def solve_second_order(b: float, c: float, C1: float, C2: float,
                       x0: float = 0.0) -> ClosedFormSolution:
    """General solution of y'' + b y' + c y = 0 with explicit constants.

    Three cases on the discriminant b^2 - 4c (threshold 1e-12 scaled by
    max(1, b^2, |4c|)):

    * positive: C1 e^(r1 x) + C2 e^(r2 x), r1 < r2 the two real roots
      (C1 belongs to the smaller root -b/2 - sqrt(disc)/2);
    * zero: (C1 + C2 x) e^(-b x / 2);
    * negative: e^(-b x / 2) (C1 cos(w x) + C2 sin(w x)),
      w = sqrt(4c - b^2)/2.
    """
    for name, v in (("b", b), ("c", c), ("C1", C1), ("C2", C2)):
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            raise ParameterError(f"{name} must be a finite number")
    case, r1, r2 = _classify_roots(b, c)

    def exp_term(coef: float, rate: float, xs: np.ndarray) -> np.ndarray:
        if coef == 0.0:
            return np.zeros(xs.shape)
        return coef * _checked_exp(rate * xs, xs)

    if case == "real":
        def evaluate(xs: np.ndarray) -> np.ndarray:
            return _finite_or_overflow(
                exp_term(C1, r1, xs) + exp_term(C2, r2, xs), xs)
        note = (f"two distinct real rates {r1!r} and {r2!r}; C1 multiplies "
                "the smaller rate")
    elif case == "repeated":
        def evaluate(xs: np.ndarray) -> np.ndarray:
            return _finite_or_overflow(
                (C1 + C2 * xs) * _checked_exp(r1 * xs, xs), xs)
        note = f"repeated real rate {r1!r} with a linear-in-x factor"
    else:
        def evaluate(xs: np.ndarray) -> np.ndarray:
            osc = C1 * np.cos(r2 * xs) + C2 * np.sin(r2 * xs)
            return _finite_or_overflow(_checked_exp(r1 * xs, xs) * osc, xs)
        note = f"damped oscillation, rate {r1!r}, angular frequency {r2!r}"

    sol = ClosedFormSolution(
        EquationClass.SECOND_ORDER, evaluate, x0,
        {"C1": float(C1), "C2": float(C2)},
        f"constant-coefficient second-order basis: {note}")
    sol.case = case
    return sol


def solve_second_order_ivp(b: float, c: float,
                           ic: InitialCondition) -> ClosedFormSolution:
    """Solve y'' + b y' + c y = 0 with y(x0) = y0 and y'(x0) = yp0.

    Solves the 2x2 system for (C1, C2) against the case basis at x0; the
    basis Wronskian never vanishes, so the system is always solvable.
    """
    if ic.yp0 is None:
        raise ParameterError("second-order initial data needs yp0")
    case, r1, r2 = _classify_roots(b, c)
    x0, y0, yp0 = ic.x0, ic.y0, ic.yp0

    if case == "real":
        e1 = math.exp(r1 * x0)
        e2 = math.exp(r2 * x0)
        a11, a12, a21, a22 = e1, e2, r1 * e1, r2 * e2
    elif case == "repeated":
        e = math.exp(r1 * x0)
        a11, a12, a21, a22 = e, x0 * e, r1 * e, e * (1.0 + r1 * x0)
    else:
        e = math.exp(r1 * x0)
        cw = math.cos(r2 * x0)
        sw = math.sin(r2 * x0)
        a11, a12 = e * cw, e * sw
        a21 = e * (r1 * cw - r2 * sw)
        a22 = e * (r1 * sw + r2 * cw)

    det = a11 * a22 - a12 * a21
    C1 = (y0 * a22 - yp0 * a12) / det
    C2 = (a11 * yp0 - a21 * y0) / det
    return solve_second_order(b, c, C1, C2, x0=x0)
