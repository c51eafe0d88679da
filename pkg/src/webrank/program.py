"""Flat instruction programs for fast numeric evaluation of expression DAGs.

An expression compiles to one instruction per distinct DAG node, in
dependency order, so evaluation is linear in the size of the shared graph.
The instruction stream is executed by the compiled Cython kernel when it is
installed, with a numpy fallback otherwise; both expose the same interface
and are exercised against each other in the tests and the benchmark.

Failure semantics: an instruction whose result is undefined (log of a
non-positive value, division by zero, sqrt of a negative, non-integer power
of a non-positive base) or non-finite marks the point as outside the domain;
`run_*` report the index of the first failing instruction.
"""

from __future__ import annotations

import os
from collections import OrderedDict

import numpy as np

from . import expr as ex
from .errors import DomainEvalError, ExpressionTooLargeError

# opcodes shared with the kernels
OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POWI = 7   # integer exponent in iaux
OP_POWG = 8   # general power, base must stay positive
OP_EXP = 9
OP_LOG = 10
OP_SQRT = 11
OP_SIN = 12
OP_COS = 13

_BINOP = {ex.ADD: OP_ADD, ex.SUB: OP_SUB, ex.MUL: OP_MUL, ex.DIV: OP_DIV}
_UNOP = {ex.NEG: OP_NEG, ex.EXP: OP_EXP, ex.LOG: OP_LOG,
         ex.SQRT: OP_SQRT, ex.SIN: OP_SIN, ex.COS: OP_COS}

_POWI_LIMIT = 2 ** 30


class Program:
    __slots__ = ("ops", "a", "b", "iaux", "faux", "faux_l", "nodes",
                 "scale_index", "n")

    def __init__(self, ops, a, b, iaux, faux, faux_l, nodes, scale_index):
        self.ops = ops
        self.a = a
        self.b = b
        self.iaux = iaux
        self.faux = faux
        self.faux_l = faux_l
        self.nodes = nodes
        self.scale_index = scale_index
        self.n = len(ops)


def compile_program(e, variables=("x", "y"), node_cap: int | None = None) -> Program:
    """Lower an expression DAG to an instruction program.

    Raises ExpressionTooLargeError when the number of distinct nodes exceeds
    the cap (default DEFAULT_NODE_CAP).
    """
    cap = ex.DEFAULT_NODE_CAP if node_cap is None else node_cap
    order = ex._postorder(e)
    if len(order) > cap:
        raise ExpressionTooLargeError(
            f"expression has {len(order)} distinct nodes (cap {cap})")
    index = {}
    n = len(order)
    ops = np.zeros(n, dtype=np.int32)
    a = np.zeros(n, dtype=np.int32)
    b = np.zeros(n, dtype=np.int32)
    iaux = np.zeros(n, dtype=np.int64)
    faux = np.zeros(n, dtype=np.float64)
    faux_l = np.zeros(n, dtype=np.longdouble)
    scale = []
    var_slot = {name: k for k, name in enumerate(variables)}
    for i, node in enumerate(order):
        index[node] = i
        op = node.op
        if op == ex.RAT:
            ops[i] = OP_CONST
            faux[i] = float(node.payload)
            faux_l[i] = _long_fraction(node.payload)
        elif op == ex.E:
            ops[i] = OP_CONST
            faux[i] = float(np.e)
            faux_l[i] = np.exp(np.longdouble(1))
        elif op == ex.VAR:
            ops[i] = OP_VAR
            if node.payload not in var_slot:
                raise DomainEvalError(
                    f"free variable {node.payload!r} has no value", node.payload, ())
            iaux[i] = var_slot[node.payload]
        elif op == ex.POW:
            base, expo = node.args
            a[i] = index[base]
            if expo.op == ex.RAT and expo.payload.denominator == 1 \
                    and abs(expo.payload.numerator) < _POWI_LIMIT:
                ops[i] = OP_POWI
                iaux[i] = expo.payload.numerator
            else:
                ops[i] = OP_POWG
                b[i] = index[expo]
        elif op in _BINOP:
            ops[i] = _BINOP[op]
            a[i] = index[node.args[0]]
            b[i] = index[node.args[1]]
        else:
            ops[i] = _UNOP[op]
            a[i] = index[node.args[0]]
        if node.varset and i != n - 1:
            scale.append(i)
    return Program(ops, a, b, iaux, faux, faux_l, order,
                   np.asarray(scale, dtype=np.int64))


def _long_fraction(q) -> "np.longdouble":
    try:
        return np.longdouble(q.numerator) / np.longdouble(q.denominator)
    except OverflowError:
        return np.longdouble(float(q))


# ---------------------------------------------------------------------------
# kernel selection

def _load_backend():
    if not os.environ.get("WEBRANK_PURE"):
        try:
            from . import _kernel
            return _kernel, "compiled"
        except ImportError:
            pass
    from . import _kernel_py
    return _kernel_py, "pure"


_impl, BACKEND = _load_backend()


def use_backend(name: str):
    """Force 'compiled' or 'pure' execution (used by tests and the benchmark)."""
    global _impl, BACKEND
    if name == "compiled":
        from . import _kernel
        _impl, BACKEND = _kernel, "compiled"
    elif name == "pure":
        from . import _kernel_py
        _impl, BACKEND = _kernel_py, "pure"
    else:
        raise ValueError(f"unknown backend {name!r}")


def run_values(prog: Program, x: float, y: float):
    """All instruction values at one point.  Returns (values, status);
    status is -1 on success, else the first failing instruction index."""
    values = np.empty(prog.n, dtype=np.float64)
    status = _impl.eval_values(prog.ops, prog.a, prog.b, prog.iaux, prog.faux,
                               float(x), float(y), values)
    return values, status


def run_values_extended(prog: Program, x: float, y: float):
    """Like run_values but in extended (long double) precision.

    The sampled identity tests run here: the invariant expressions are deep
    unsimplified DAGs whose evaluation cancels catastrophically, and the
    extra mantissa bits keep genuinely-zero residuals well under tolerance.
    """
    values = np.empty(prog.n, dtype=np.longdouble)
    status = _impl.eval_values_long(prog.ops, prog.a, prog.b, prog.iaux,
                                    prog.faux_l, np.longdouble(x),
                                    np.longdouble(y), values)
    return values, status


def run_roots(prog: Program, xs, ys):
    """Root value at many points.  Returns (roots, status) arrays."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    roots = np.empty(len(xs), dtype=np.float64)
    status = np.empty(len(xs), dtype=np.int64)
    _impl.eval_roots(prog.ops, prog.a, prog.b, prog.iaux, prog.faux,
                     xs, ys, roots, status)
    return roots, status


def domain_error(prog: Program, instr: int, point) -> DomainEvalError:
    node = prog.nodes[instr]
    reason = {
        OP_DIV: "division by zero",
        OP_LOG: "log of a non-positive value",
        OP_SQRT: "sqrt of a negative value",
        OP_POWG: "power of a non-positive base",
        OP_POWI: "zero base with negative exponent",
    }.get(int(prog.ops[instr]), "non-finite value")
    return DomainEvalError(reason, ex.to_text(node, max_nodes=40),
                           (float(point[0]), float(point[1])))


# ---------------------------------------------------------------------------
# per-expression program cache (keyed by node identity)

_CACHE: "OrderedDict[int, tuple]" = OrderedDict()
_CACHE_SIZE = 512


def compile_cached(e) -> Program:
    key = id(e)
    hit = _CACHE.get(key)
    if hit is not None and hit[0] is e:
        _CACHE.move_to_end(key)
        return hit[1]
    prog = compile_program(e)
    _CACHE[key] = (e, prog)
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return prog
