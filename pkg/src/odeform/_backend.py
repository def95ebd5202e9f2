"""Kernel backend selection: a numba-jitted tape interpreter with a pure
numpy fallback.

Expressions compile to a postfix tape (opcode array plus aligned constant
array) that the kernels interpret over arrays of evaluation points. Two
interchangeable implementations exist:

* ``numba`` -- an @njit scalar loop over the points (default when numba
  imports cleanly);
* ``numpy`` -- a vectorized interpreter that walks the tape once and applies
  each opcode to whole arrays.

The ODEFORM_NUMBA environment variable picks the backend at import time:
unset or "auto" prefers numba, "0"/"off"/"false"/"numpy" forces the fallback,
"1"/"on"/"require" fails loudly if numba is missing. set_backend() switches
at runtime; the benchmark and the parity tests use it.

Both implementations follow identical semantics: same status codes, same
power special cases, same overflow threshold. Every evaluated point gets a
status; callers turn nonzero statuses into exceptions so NaN never leaks.
"""

from __future__ import annotations

import os

import numpy as np

# Tape opcodes. OP_CONST and OP_X push, OP_NEG and the functions rewrite the
# top of the stack, the arithmetic ops pop two and push one.
OP_CONST = 0
OP_X = 1
OP_NEG = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_POW = 7
OP_SIN = 8
OP_COS = 9
OP_TAN = 10
OP_EXP = 11
OP_LOG = 12
OP_SQRT = 13
OP_ABS = 14
OP_ATAN = 15

# Per-point evaluation status.
OK = 0
ERR_DIV_ZERO = 1
ERR_LOG_DOMAIN = 2
ERR_SQRT_DOMAIN = 3
ERR_POW_DOMAIN = 4
ERR_OVERFLOW = 5

EXP_MAX = 709.782712893384  # log of the largest finite double
INT_REL_TOL = 2.0 ** -52    # exponents this close to an integer count as one

_ENV_VAR = "ODEFORM_NUMBA"


def _tape_eval_core(code, cval, need, xs):
    # Scalar interpreter; this exact function body is also jitted by numba.
    n = xs.shape[0]
    m = code.shape[0]
    out = np.empty(n)
    status = np.zeros(n, np.int8)
    stack = np.empty(need)
    for i in range(n):
        x = xs[i]
        sp = 0
        st = 0
        for k in range(m):
            op = code[k]
            if op == OP_CONST:
                stack[sp] = cval[k]
                sp += 1
            elif op == OP_X:
                stack[sp] = x
                sp += 1
            elif op == OP_NEG:
                stack[sp - 1] = -stack[sp - 1]
            elif op <= OP_POW:
                b = stack[sp - 1]
                a = stack[sp - 2]
                sp -= 1
                r = 0.0
                if op == OP_ADD:
                    r = a + b
                elif op == OP_SUB:
                    r = a - b
                elif op == OP_MUL:
                    r = a * b
                elif op == OP_DIV:
                    if b == 0.0:
                        st = ERR_DIV_ZERO
                        break
                    r = a / b
                else:
                    if a > 0.0:
                        r = a ** b
                    elif a == 0.0:
                        if b > 0.0:
                            r = 0.0
                        elif b == 0.0:
                            r = 1.0
                        else:
                            st = ERR_POW_DOMAIN
                            break
                    else:
                        ab = abs(b)
                        tol = INT_REL_TOL * (ab if ab > 1.0 else 1.0)
                        nb = np.rint(b)
                        if abs(b - nb) > tol:
                            st = ERR_POW_DOMAIN
                            break
                        r = (-a) ** b
                        if np.fmod(abs(nb), 2.0) == 1.0:
                            r = -r
                stack[sp - 1] = r
                if not np.isfinite(r):
                    st = ERR_OVERFLOW
                    break
            else:
                a = stack[sp - 1]
                r = 0.0
                if op == OP_SIN:
                    r = np.sin(a)
                elif op == OP_COS:
                    r = np.cos(a)
                elif op == OP_TAN:
                    r = np.tan(a)
                elif op == OP_EXP:
                    if a > EXP_MAX:
                        st = ERR_OVERFLOW
                        break
                    r = np.exp(a)
                elif op == OP_LOG:
                    if a <= 0.0:
                        st = ERR_LOG_DOMAIN
                        break
                    r = np.log(a)
                elif op == OP_SQRT:
                    if a < 0.0:
                        st = ERR_SQRT_DOMAIN
                        break
                    r = np.sqrt(a)
                elif op == OP_ABS:
                    r = abs(a)
                else:
                    r = np.arctan(a)
                stack[sp - 1] = r
                if not np.isfinite(r):
                    st = ERR_OVERFLOW
                    break
        if st == OK:
            out[i] = stack[0]
        else:
            out[i] = np.nan
            status[i] = st
    return out, status


def _tape_eval_numpy(code, cval, need, xs):
    # Vectorized interpreter. Status is sticky: once a lane errors, later ops
    # may compute garbage there but never change its status, and the output
    # lane is forced to NaN at the end. That matches the scalar kernel, which
    # breaks out at the first error.
    n = xs.shape[0]
    status = np.zeros(n, np.int8)
    stack = np.empty((need, n))
    sp = 0
    with np.errstate(all="ignore"):
        for k in range(code.shape[0]):
            op = int(code[k])
            if op == OP_CONST:
                stack[sp, :] = cval[k]
                sp += 1
                continue
            if op == OP_X:
                stack[sp, :] = xs
                sp += 1
                continue
            if op == OP_NEG:
                np.negative(stack[sp - 1], out=stack[sp - 1])
                continue
            ok = status == OK
            if op <= OP_POW:
                b = stack[sp - 1]
                a = stack[sp - 2]
                sp -= 1
                if op == OP_ADD:
                    r = a + b
                elif op == OP_SUB:
                    r = a - b
                elif op == OP_MUL:
                    r = a * b
                elif op == OP_DIV:
                    status[(b == 0.0) & ok] = ERR_DIV_ZERO
                    r = a / b
                else:
                    neg = a < 0.0
                    nb = np.rint(b)
                    isint = np.abs(b - nb) <= INT_REL_TOL * np.maximum(np.abs(b), 1.0)
                    bad = ((neg & ~isint) | ((a == 0.0) & (b < 0.0))) & ok
                    status[bad] = ERR_POW_DOMAIN
                    r = np.abs(a) ** b
                    odd = np.fmod(np.abs(nb), 2.0) == 1.0
                    r = np.where(neg & odd, -r, r)
                stack[sp - 1] = r
            else:
                a = stack[sp - 1]
                if op == OP_SIN:
                    r = np.sin(a)
                elif op == OP_COS:
                    r = np.cos(a)
                elif op == OP_TAN:
                    r = np.tan(a)
                elif op == OP_EXP:
                    status[(a > EXP_MAX) & ok] = ERR_OVERFLOW
                    r = np.exp(a)
                elif op == OP_LOG:
                    status[(a <= 0.0) & ok] = ERR_LOG_DOMAIN
                    r = np.log(a)
                elif op == OP_SQRT:
                    status[(a < 0.0) & ok] = ERR_SQRT_DOMAIN
                    r = np.sqrt(a)
                elif op == OP_ABS:
                    r = np.abs(a)
                else:
                    r = np.arctan(a)
                stack[sp - 1] = r
            status[~np.isfinite(stack[sp - 1]) & (status == OK)] = ERR_OVERFLOW
    out = stack[0].copy()
    out[status != OK] = np.nan
    return out, status


_IMPLS = {"numpy": _tape_eval_numpy}

try:
    from numba import njit

    _tape_eval_numba = njit(cache=True)(_tape_eval_core)
    _IMPLS["numba"] = _tape_eval_numba
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _initial_backend() -> str:
    v = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if v in ("0", "off", "false", "no", "numpy"):
        return "numpy"
    if v in ("1", "on", "true", "yes", "require", "numba"):
        if "numba" not in _IMPLS:
            raise ImportError(
                f"{_ENV_VAR}={v!r} requires numba, which is not importable")
        return "numba"
    return "numba" if "numba" in _IMPLS else "numpy"


_active = _initial_backend()


def get_backend() -> str:
    """Name of the active kernel implementation, "numba" or "numpy"."""
    return _active


def set_backend(name: str) -> None:
    """Switch the kernel implementation at runtime."""
    global _active
    if name not in _IMPLS:
        raise ValueError(
            f"unknown backend {name!r}; available: {sorted(_IMPLS)}")
    _active = name


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def tape_eval(code, cval, need, xs):
    """Run the compiled tape over ``xs``; returns (values, statuses)."""
    return _IMPLS[_active](code, cval, need, xs)
