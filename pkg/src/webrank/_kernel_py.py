"""Pure-Python/numpy fallback for the evaluation kernel.

Same contract as the Cython module `_kernel`; selected at import time by
`program` when the compiled extension is unavailable (or WEBRANK_PURE=1).
"""

from __future__ import annotations

import numpy as np

_CONST, _VAR, _ADD, _SUB, _MUL, _DIV, _NEG = 0, 1, 2, 3, 4, 5, 6
_POWI, _POWG, _EXP, _LOG, _SQRT, _SIN, _COS = 7, 8, 9, 10, 11, 12, 13


def eval_values(ops, a, b, iaux, faux, x, y, out):
    """Evaluate every instruction at one point; fill `out`.

    Returns -1 on success or the index of the first failing instruction.
    """
    n = len(ops)
    point = (x, y)
    with np.errstate(all="ignore"):
        for i in range(n):
            op = ops[i]
            if op == _CONST:
                v = faux[i]
            elif op == _VAR:
                v = point[iaux[i]]
            elif op == _ADD:
                v = out[a[i]] + out[b[i]]
            elif op == _SUB:
                v = out[a[i]] - out[b[i]]
            elif op == _MUL:
                v = out[a[i]] * out[b[i]]
            elif op == _DIV:
                den = out[b[i]]
                if den == 0.0:
                    return i
                v = out[a[i]] / den
            elif op == _NEG:
                v = -out[a[i]]
            elif op == _POWI:
                base = out[a[i]]
                k = iaux[i]
                if base == 0.0 and k < 0:
                    return i
                v = base ** float(k)
            elif op == _POWG:
                base = out[a[i]]
                if base <= 0.0:
                    return i
                v = base ** out[b[i]]
            elif op == _EXP:
                v = np.exp(out[a[i]])
            elif op == _LOG:
                arg = out[a[i]]
                if arg <= 0.0:
                    return i
                v = np.log(arg)
            elif op == _SQRT:
                arg = out[a[i]]
                if arg < 0.0:
                    return i
                v = np.sqrt(arg)
            elif op == _SIN:
                v = np.sin(out[a[i]])
            else:
                v = np.cos(out[a[i]])
            if not np.isfinite(v):
                return i
            out[i] = v
    return -1


def eval_roots(ops, a, b, iaux, faux, xs, ys, roots, status):
    """Root value at many points; per-point status as in eval_values."""
    scratch = np.empty(len(ops), dtype=np.float64)
    for p in range(len(xs)):
        st = eval_values(ops, a, b, iaux, faux, xs[p], ys[p], scratch)
        status[p] = st
        roots[p] = scratch[-1] if st < 0 else np.nan


def eval_values_long(ops, a, b, iaux, faux_l, x, y, out):
    """Extended-precision twin of eval_values (numpy longdouble)."""
    return eval_values(ops, a, b, iaux, faux_l, np.longdouble(x),
                       np.longdouble(y), out)
