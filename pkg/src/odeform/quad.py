"""Definite integrals and anchored antiderivatives.

All integration uses the 15-point Kronrod rule with the embedded 7-point
Gauss rule for error estimation, refined by adaptive bisection. The engine
is batch-oriented: integrate_many() advances every pending panel of every
requested interval in one integrand call per refinement generation, so
nested constructions (an antiderivative whose integrand queries another
antiderivative) stay close to linear cost.

Antiderivative realizes F(x) = integral of phi from x0 to x with F(x0) = 0
exactly. It keeps a table of checkpoint values at fixed spacing and adds an
adaptive tail from the nearest checkpoint below x, so the value at x is a
pure function of x: query order and query history cannot change results.
Cache extension happens under an internal lock; concurrent queries from
multiple threads are safe.

Integrands only need to be Riemann integrable on bounded intervals; strict
accuracy claims hold for piecewise-smooth ones. Panels that shrink to the
floating-point limit are accepted as is, and if tolerance still cannot be
met within max_depth a ConvergenceError carrying the last estimate is
raised.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, EvalOverflowError, ParameterError
from .expr import Expression
from ._backend import EXP_MAX

__all__ = [
    "QuadratureConfig",
    "integrate",
    "integrate_many",
    "Antiderivative",
    "antiderivative",
    "weighted_cumulative",
    "as_array_fn",
]

# 15-point Kronrod abscissae (positive half, descending) and weights, with
# the embedded 7-point Gauss weights. Values carry more digits than double
# precision keeps.
_XGK_HALF = np.array([
    0.9914553711208126392068546975263285,
    0.9491079123427585245261896840478513,
    0.8648644233597690727897127886409262,
    0.7415311855993944398638647732807884,
    0.5860872354676911302941448382587296,
    0.4058451513773971669066064120769615,
    0.2077849550078984676006894037732449,
    0.0,
])
_WGK_HALF = np.array([
    0.0229353220105292249637320080589695,
    0.0630920926299785532907006631892042,
    0.1047900103222501838398763225415180,
    0.1406532597155259187451895905102379,
    0.1690047266392679028265834265985503,
    0.1903505780647854099132564024210137,
    0.2044329400752988924141619992346491,
    0.2094821410847278280129991748917143,
])
_WG_HALF = np.array([
    0.1294849661688696932706114326790820,
    0.2797053914892766679014677714237796,
    0.3818300505051189449503697754889751,
    0.4179591836734693877551020408163265,
])

_NODES = np.empty(15)
_WK = np.empty(15)
_WG15 = np.zeros(15)
for _j in range(7):
    _NODES[_j] = -_XGK_HALF[_j]
    _NODES[14 - _j] = _XGK_HALF[_j]
    _WK[_j] = _WK[14 - _j] = _WGK_HALF[_j]
_NODES[7] = 0.0
_WK[7] = _WGK_HALF[7]
# Gauss nodes sit at every other Kronrod node: indices 1, 3, 5, 7, 9, 11, 13.
for _j, _w in zip((1, 3, 5), _WG_HALF[:3]):
    _WG15[_j] = _WG15[14 - _j] = _w
_WG15[7] = _WG_HALF[3]

_EPS = np.finfo(np.float64).eps
_DEFAULT_SPACING = 1.0 / 128.0
_MAX_SEGMENTS = 1 << 21  # guard against runaway checkpoint tables
_PANEL_BUDGET = 20_000   # per-interval cap on total panels ever examined


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and limits shared by the integration routines.

    checkpoint_spacing of None means the default spacing (1/128, i.e. the
    working-range heuristic span/256 for a span of 2); the CLI passes
    (hi - lo)/256 explicitly.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 50
    checkpoint_spacing: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.abs_tol) and self.abs_tol > 0):
            raise ParameterError("abs_tol must be a positive finite number")
        if not (np.isfinite(self.rel_tol) and self.rel_tol > 0):
            raise ParameterError("rel_tol must be a positive finite number")
        if not (isinstance(self.max_depth, int) and self.max_depth >= 1):
            raise ParameterError("max_depth must be an integer >= 1")
        if self.checkpoint_spacing is not None:
            if not (np.isfinite(self.checkpoint_spacing)
                    and self.checkpoint_spacing > 0):
                raise ParameterError(
                    "checkpoint_spacing must be positive when given")


_DEFAULT_CFG = QuadratureConfig()


def as_array_fn(f):
    """Adapt an Expression or plain callable to a vectorized float64 map.

    Plain callables are tried on whole arrays first; scalar-only callables
    (TypeError/ValueError on array input, or wrong result shape) fall back
    to an elementwise loop.
    """
    if isinstance(f, Expression):
        return f.eval_many
    if not callable(f):
        raise TypeError(f"expected an Expression or callable, got {f!r}")

    def wrapped(xs: np.ndarray) -> np.ndarray:
        try:
            out = np.asarray(f(xs), dtype=np.float64)
        except (TypeError, ValueError):
            out = None
        if out is not None:
            if out.shape == xs.shape:
                return out
            if out.ndim == 0:
                return np.full(xs.shape, float(out))
        return np.fromiter((float(f(float(t))) for t in xs), np.float64,
                           count=xs.size)

    return wrapped


def _gk_panels(fn, pa, pb):
    """Apply the Kronrod rule on every [pa[i], pb[i]]; returns (val, err)."""
    half = 0.5 * (pb - pa)
    mid = 0.5 * (pa + pb)
    pts = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = fn(pts.ravel()).reshape(pts.shape)
    resk_u = vals @ _WK
    resg_u = vals @ _WG15
    resabs = (np.abs(vals) @ _WK) * np.abs(half)
    reskh = 0.5 * resk_u
    resasc = (np.abs(vals - reskh[:, None]) @ _WK) * np.abs(half)
    err = np.abs(resk_u - resg_u) * np.abs(half)
    # Standard inflation of the raw |K - G| difference, which by itself can
    # be an optimistic estimate on panels the rule only just resolves.
    mask = (resasc > 0.0) & (err > 0.0)
    scaled = np.minimum(1.0, (200.0 * err[mask] / resasc[mask]) ** 1.5)
    err[mask] = resasc[mask] * scaled
    # Round-off floor: once the estimate is dominated by 50*eps*int(|f|),
    # subdividing cannot improve it, so such panels are reported saturated
    # and the driver stops splitting them.
    floor = 50.0 * _EPS * resabs
    saturated = err <= floor
    err = np.maximum(err, floor)
    return resk_u * half, err, saturated


def integrate_many(fn, a, b, cfg: QuadratureConfig | None = None, *,
                   abs_tol: float | None = None,
                   rel_tol: float | None = None) -> np.ndarray:
    """Integrate ``fn`` over each interval [a[i], b[i]] adaptively.

    Reversed intervals integrate the ordered interval and negate, so the
    result is exactly antisymmetric under swapping bounds. Zero-width
    intervals contribute exactly 0.0 without evaluating the integrand.
    """
    cfg = cfg or _DEFAULT_CFG
    atol = cfg.abs_tol if abs_tol is None else abs_tol
    rtol = cfg.rel_tol if rel_tol is None else rel_tol
    fn = as_array_fn(fn)
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape or a.ndim != 1:
        raise ParameterError("bounds must be 1-D arrays of equal length")
    if a.size and not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ParameterError("integration bounds must be finite")

    n = a.size
    sign = np.where(b >= a, 1.0, -1.0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    width = hi - lo

    total = np.zeros(n)
    etotal = np.zeros(n)
    live = width > 0.0
    iv = np.nonzero(live)[0]
    pa = lo[iv]
    pb = hi[iv]

    depth = 0
    panels_seen = 0
    budget = _PANEL_BUDGET * n
    while iv.size:
        val, err, saturated = _gk_panels(fn, pa, pb)
        panels_seen += iv.size
        est = total + np.bincount(iv, weights=val, minlength=n)
        tol_iv = np.maximum(atol, rtol * np.abs(est))[iv]
        share = tol_iv * (pb - pa) / width[iv]
        tiny = (pb - pa) <= 100.0 * _EPS * np.maximum(
            1.0, np.maximum(np.abs(pa), np.abs(pb)))
        done = (err <= share) | tiny | saturated
        if depth >= cfg.max_depth or panels_seen > budget:
            done = np.ones_like(done)
        if done.any():
            d = np.nonzero(done)[0]
            total += np.bincount(iv[d], weights=val[d], minlength=n)
            etotal += np.bincount(iv[d], weights=err[d], minlength=n)
        keep = ~done
        if not keep.any():
            break
        iv = np.repeat(iv[keep], 2)
        mids = 0.5 * (pa[keep] + pb[keep])
        pa = np.stack([pa[keep], mids], axis=1).ravel()
        pb = np.stack([mids, pb[keep]], axis=1).ravel()
        depth += 1

    tol_final = np.maximum(atol, rtol * np.abs(total))
    bad = etotal > tol_final
    if bad.any():
        i = int(np.argmax(bad))
        raise ConvergenceError(
            f"quadrature did not converge within max_depth={cfg.max_depth}",
            estimate=float(sign[i] * total[i]),
            error_estimate=float(etotal[i]),
            interval=(float(a[i]), float(b[i])))
    return sign * total


def integrate(fn, a: float, b: float,
              cfg: QuadratureConfig | None = None) -> float:
    """Definite integral of ``fn`` over [a, b] to the configured tolerance."""
    return float(integrate_many(fn, np.array([a]), np.array([b]), cfg)[0])


class Antiderivative:
    """F(x) = integral of phi from x0 to x, with F(x0) = 0.0 exactly.

    Checkpoint values accumulate at x0 + k*spacing for whatever k range the
    queries touch; each query is the nearest checkpoint at or below x plus
    an adaptive tail shorter than one spacing. Checkpoint segments run at a
    small fraction of the configured tolerance so chains of them do not
    erode the overall budget.

    ``eval_count`` counts integrand evaluations, which makes cost claims
    testable: covering a fresh span costs one pass of checkpoint segments
    plus one bounded tail per query point.
    """

    def __init__(self, fn, x0: float, cfg: QuadratureConfig | None = None):
        self._fn_raw = as_array_fn(fn)
        self._cfg = cfg or _DEFAULT_CFG
        self._h = self._cfg.checkpoint_spacing or _DEFAULT_SPACING
        if not np.isfinite(x0):
            raise ParameterError("anchor x0 must be finite")
        self._x0 = float(x0)
        self._pos = [0.0]   # F at x0 + k*h, k = 0 .. len-1
        self._neg = [0.0]   # F at x0 - k*h
        self._lock = threading.RLock()
        self.eval_count = 0

        def counted(xs: np.ndarray) -> np.ndarray:
            self.eval_count += xs.size
            return self._fn_raw(xs)

        self._fn = counted

    @property
    def x0(self) -> float:
        return self._x0

    @property
    def spacing(self) -> float:
        return self._h

    def checkpoints(self) -> list[tuple[float, float]]:
        """Materialized (x, F(x)) pairs, strictly increasing in x."""
        with self._lock:
            left = [(self._x0 - k * self._h, v)
                    for k, v in enumerate(self._neg)]
            right = [(self._x0 + k * self._h, v)
                     for k, v in enumerate(self._pos)]
        return left[:0:-1] + right

    def _extend(self, kmin: int, kmax: int):
        # requires self._lock held
        if kmax - kmin > _MAX_SEGMENTS:
            raise ParameterError(
                "query span requires more checkpoint segments than allowed")
        if kmax >= len(self._pos):
            first = len(self._pos) - 1
            ks = np.arange(first, kmax)
            lo = self._x0 + ks * self._h
            segs = integrate_many(self._fn, lo, lo + self._h, self._cfg,
                                  abs_tol=self._cfg.abs_tol / 256.0)
            acc = self._pos[-1]
            for s in segs:
                acc += s
                self._pos.append(acc)
        if -kmin >= len(self._neg):
            first = len(self._neg) - 1
            ks = np.arange(first, -kmin)
            hi = self._x0 - ks * self._h
            segs = integrate_many(self._fn, hi - self._h, hi, self._cfg,
                                  abs_tol=self._cfg.abs_tol / 256.0)
            acc = self._neg[-1]
            for s in segs:
                acc -= s
                self._neg.append(acc)

    def values(self, xs) -> np.ndarray:
        """F at a 1-D array of points, any order."""
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        if xs.ndim != 1:
            raise ValueError("expected a 1-D array of points")
        if xs.size == 0:
            return np.empty(0)
        if not np.all(np.isfinite(xs)):
            raise ValueError("query points must be finite")
        with self._lock:
            ks_f = np.floor((xs - self._x0) / self._h)
            if np.max(np.abs(ks_f)) >= _MAX_SEGMENTS:
                raise ParameterError(
                    "query span requires more checkpoint segments than "
                    "allowed; use a larger checkpoint_spacing")
            ks = ks_f.astype(np.int64)
            self._extend(int(ks.min()), int(ks.max()))
            pos = np.asarray(self._pos)
            neg = np.asarray(self._neg)
            base = np.where(ks >= 0,
                            pos[np.maximum(ks, 0)],
                            neg[np.maximum(-ks, 0)])
            ck = self._x0 + ks * self._h
            tails = integrate_many(self._fn, ck, xs, self._cfg,
                                   abs_tol=self._cfg.abs_tol / 4.0)
        return base + tails

    def value(self, x: float) -> float:
        return float(self.values(np.array([x], dtype=np.float64))[0])

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self.value(float(x))
        return self.values(x)


def antiderivative(fn, x0: float,
                   cfg: QuadratureConfig | None = None) -> Antiderivative:
    """Anchored antiderivative of ``fn`` starting at ``x0``."""
    return Antiderivative(fn, x0, cfg)


def weighted_cumulative(g, F: Antiderivative, scale: float, x0: float,
                        cfg: QuadratureConfig | None = None) -> Antiderivative:
    """Antiderivative of t -> g(t) * exp(scale * F(t)) anchored at x0.

    F must be anchored at the same x0. If the exponent scale*F(t) exceeds
    the double-precision limit at some quadrature node, evaluation raises
    EvalOverflowError naming that t.
    """
    if not isinstance(F, Antiderivative):
        raise ParameterError("F must be an Antiderivative")
    if F.x0 != float(x0):
        raise ParameterError(
            f"F is anchored at {F.x0!r}, expected anchor {x0!r}")
    gfn = as_array_fn(g)
    scale = float(scale)

    def integrand(ts: np.ndarray) -> np.ndarray:
        z = scale * F.values(ts)
        over = z > EXP_MAX
        if over.any():
            t = float(ts[int(np.argmax(over))])
            raise EvalOverflowError(
                "exp(scale * F) overflows inside the weighted integrand", t)
        return gfn(ts) * np.exp(z)

    return Antiderivative(integrand, x0, cfg)
