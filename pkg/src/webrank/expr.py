"""Symbolic expressions in plane variables: parse, print, differentiate, sample.

Expressions are immutable trees over exact rational constants, the named
constant e, named variables, the binary operations + - * / ^, and the unary
functions exp, log, sqrt, sin, cos, neg.  Construction goes through the
smart constructors in this module, which apply *local* rewrites only:
constant folding, 0/1 identities and collapsing of nested negations.  There
is deliberately no general simplifier; identity questions are answered by
probabilistic sampling (`is_identically_zero`), which is the engine behind
every vanishing criterion in the geometric modules.

Structurally equal trees are shared: the constructors intern nodes, so
equality of expressions is object identity and common subtrees cost nothing.
Repeated differentiation therefore produces compact DAGs even though the
unfolded trees would blow up combinatorially.

Numeric evaluation compiles an expression into a flat instruction program
(module `program`) executed by a compiled kernel when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping
from weakref import WeakValueDictionary

from .errors import (
    ExprSyntaxError,
    InsufficientDomainError,
    UnknownIdentifierError,
    WebrankError,
)

__all__ = [
    "Expression", "Box", "SampleConfig",
    "const", "var", "EULER", "ZERO", "ONE",
    "add", "sub", "mul", "div", "pow_", "neg",
    "exp_", "log_", "sqrt_", "sin_", "cos_",
    "add_many", "mul_many",
    "parse", "to_text", "differentiate", "substitute", "node_count",
    "evaluate", "is_identically_zero", "zero_report", "sample_points",
    "DEFAULT_SEED", "DEFAULT_NODE_CAP",
]

DEFAULT_SEED = 20240
DEFAULT_NODE_CAP = 2_000_000

# node kinds
RAT = "rat"
E = "e"
VAR = "var"
ADD, SUB, MUL, DIV, POW, NEG = "+", "-", "*", "/", "^", "neg"
EXP, LOG, SQRT, SIN, COS = "exp", "log", "sqrt", "sin", "cos"

FUNCTIONS = {EXP: None, LOG: None, SQRT: None, SIN: None, COS: None}

_EMPTY: frozenset = frozenset()
_VARSETS: dict = {}


def _varset(names: frozenset) -> frozenset:
    return _VARSETS.setdefault(names, names)


class Expression:
    """One node of an immutable, structurally shared expression DAG.

    Never instantiated directly; use the module constructors or `parse`.
    Because construction interns nodes, structurally equal expressions are
    the same object and `==` is identity.
    """

    __slots__ = ("op", "args", "payload", "varset", "_h", "__weakref__")

    op: str
    args: tuple
    payload: object
    varset: frozenset

    def __hash__(self):
        return self._h

    def __repr__(self):
        return f"<expr {to_text(self, max_nodes=48)}>"

    @property
    def is_rational(self) -> bool:
        return self.op == RAT

    @property
    def is_constant(self) -> bool:
        return not self.varset


_TABLE: "WeakValueDictionary[tuple, Expression]" = WeakValueDictionary()


def _make(op: str, payload, args: tuple) -> Expression:
    key = (op, payload, args)
    hit = _TABLE.get(key)
    if hit is not None:
        return hit
    node = Expression.__new__(Expression)
    node.op = op
    node.args = args
    node.payload = payload
    if op == VAR:
        node.varset = _varset(frozenset((payload,)))
    elif args:
        names = frozenset().union(*(a.varset for a in args))
        node.varset = _varset(names)
    else:
        node.varset = _EMPTY
    node._h = hash((op, payload, *[a._h for a in args]))
    _TABLE[key] = node
    return node


# ---------------------------------------------------------------------------
# constructors with local folding

def const(value) -> Expression:
    """Exact rational constant (int, Fraction, or numeric string)."""
    if not isinstance(value, Fraction):
        value = Fraction(value)
    return _make(RAT, value, ())


ZERO = const(0)
ONE = const(1)
MINUS_ONE = const(-1)
EULER = _make(E, None, ())


def var(name: str) -> Expression:
    if not name.isidentifier():
        raise WebrankError(f"invalid variable name {name!r}")
    return _make(VAR, name, ())


def add(a: Expression, b: Expression) -> Expression:
    if a.op == RAT and b.op == RAT:
        return const(a.payload + b.payload)
    if a is ZERO:
        return b
    if b is ZERO:
        return a
    return _make(ADD, None, (a, b))


def sub(a: Expression, b: Expression) -> Expression:
    if a.op == RAT and b.op == RAT:
        return const(a.payload - b.payload)
    if b is ZERO:
        return a
    if a is ZERO:
        return neg(b)
    return _make(SUB, None, (a, b))


def neg(a: Expression) -> Expression:
    if a.op == RAT:
        return const(-a.payload)
    if a.op == NEG:
        return a.args[0]
    return _make(NEG, None, (a,))


def mul(a: Expression, b: Expression) -> Expression:
    if a.op == RAT and b.op == RAT:
        return const(a.payload * b.payload)
    if a is ZERO or b is ZERO:
        return ZERO
    if a is ONE:
        return b
    if b is ONE:
        return a
    return _make(MUL, None, (a, b))


def div(a: Expression, b: Expression) -> Expression:
    if b is ONE:
        return a
    if b is MINUS_ONE:
        return neg(a)
    if a is ZERO:
        return ZERO
    if a.op == RAT and b.op == RAT and b.payload != 0:
        return const(a.payload / b.payload)
    return _make(DIV, None, (a, b))


_FOLD_POW_MAX_EXP = 64
_FOLD_POW_MAX_BITS = 512


def pow_(a: Expression, b: Expression) -> Expression:
    """Power node.  Integer exponents keep integer-power semantics (negative
    bases allowed); anything else evaluates as exp(b*log a)."""
    if b.op == RAT:
        q: Fraction = b.payload
        if q == 0:
            return ONE
        if q == 1:
            return a
        if (a.op == RAT and q.denominator == 1 and abs(q.numerator) <= _FOLD_POW_MAX_EXP
                and a.payload.numerator.bit_length() <= _FOLD_POW_MAX_BITS
                and a.payload.denominator.bit_length() <= _FOLD_POW_MAX_BITS
                and not (a.payload == 0 and q < 0)):
            return const(a.payload ** q.numerator)
    return _make(POW, None, (a, b))


def _unary(op: str):
    def build(a: Expression) -> Expression:
        if op == EXP and a is ZERO:
            return ONE
        if op == LOG and a is ONE:
            return ZERO
        if op == SQRT and (a is ZERO or a is ONE):
            return a
        if op == SIN and a is ZERO:
            return ZERO
        if op == COS and a is ZERO:
            return ONE
        return _make(op, None, (a,))
    build.__name__ = op
    return build


exp_ = _unary(EXP)
log_ = _unary(LOG)
sqrt_ = _unary(SQRT)
sin_ = _unary(SIN)
cos_ = _unary(COS)


def add_many(terms: Iterable[Expression]) -> Expression:
    acc = ZERO
    for t in terms:
        acc = add(acc, t)
    return acc


def mul_many(factors: Iterable[Expression]) -> Expression:
    acc = ONE
    for f in factors:
        acc = mul(acc, f)
    return acc


# ---------------------------------------------------------------------------
# parsing

_DEFAULT_VARS = ("x", "y")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tok = None
        self.tok_pos = 0
        self.advance()

    def advance(self):
        text, n = self.text, len(self.text)
        i = self.pos
        while i < n and text[i].isspace():
            i += 1
        self.tok_pos = i
        if i >= n:
            self.tok = ("end", "")
            self.pos = i
            return
        c = text[i]
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            # scientific suffix like 1e-9 / 2.5E3
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            self.tok = ("num", text[i:j])
            self.pos = j
            return
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            self.tok = ("name", text[i:j])
            self.pos = j
            return
        if c in "+-*/^()":
            self.tok = (c, c)
            self.pos = i + 1
            return
        raise ExprSyntaxError(f"unexpected character {c!r}", i)

    def expect(self, kind: str):
        if self.tok[0] != kind:
            raise ExprSyntaxError(f"expected {kind!r}, found {self.tok[1]!r}", self.tok_pos)
        self.advance()


def parse(text: str, variables: Iterable[str] = _DEFAULT_VARS) -> Expression:
    """Parse infix expression text over the given variables (default x, y).

    Grammar (left-assoc + - * /, right-assoc ^, unary minus binds between
    addition and multiplication):

        expr   := unary (("+"|"-") unary)*
        unary  := "-" unary | term
        term   := factor (("*"|"/") factor)*
        factor := atom ("^" factor)?
        atom   := NUMBER | "e" | VARIABLE | FUNC "(" expr ")" | "(" expr ")"

    Raises ExprSyntaxError (with position) on malformed input and
    UnknownIdentifierError for identifiers outside the variable set.
    """
    allowed = tuple(variables)
    lx = _Lexer(text)
    e = _parse_expr(lx, allowed)
    if lx.tok[0] != "end":
        raise ExprSyntaxError(f"trailing input {lx.tok[1]!r}", lx.tok_pos)
    return e


def _parse_expr(lx: _Lexer, allowed) -> Expression:
    e = _parse_unary(lx, allowed)
    while lx.tok[0] in ("+", "-"):
        op = lx.tok[0]
        lx.advance()
        rhs = _parse_unary(lx, allowed)
        e = add(e, rhs) if op == "+" else sub(e, rhs)
    return e


def _parse_unary(lx: _Lexer, allowed) -> Expression:
    if lx.tok[0] == "-":
        lx.advance()
        return neg(_parse_unary(lx, allowed))
    return _parse_term(lx, allowed)


def _parse_term(lx: _Lexer, allowed) -> Expression:
    e = _parse_factor(lx, allowed)
    while lx.tok[0] in ("*", "/"):
        op = lx.tok[0]
        lx.advance()
        rhs = _parse_factor(lx, allowed)
        e = mul(e, rhs) if op == "*" else div(e, rhs)
    return e


def _parse_factor(lx: _Lexer, allowed) -> Expression:
    base = _parse_atom(lx, allowed)
    if lx.tok[0] == "^":
        lx.advance()
        return pow_(base, _parse_factor(lx, allowed))
    return base


def _parse_atom(lx: _Lexer, allowed) -> Expression:
    kind, text = lx.tok
    pos = lx.tok_pos
    if kind == "num":
        lx.advance()
        return const(Fraction(text))
    if kind == "(":
        lx.advance()
        e = _parse_expr(lx, allowed)
        lx.expect(")")
        return e
    if kind == "name":
        lx.advance()
        if lx.tok[0] == "(":
            if text not in FUNCTIONS:
                raise UnknownIdentifierError(text, pos)
            lx.advance()
            arg = _parse_expr(lx, allowed)
            lx.expect(")")
            return {EXP: exp_, LOG: log_, SQRT: sqrt_, SIN: sin_, COS: cos_}[text](arg)
        if text == "e":
            return EULER
        if text in allowed:
            return var(text)
        raise UnknownIdentifierError(text, pos)
    raise ExprSyntaxError(f"expected a value, found {text!r}", pos)


# ---------------------------------------------------------------------------
# printing

# precedence levels used by both the parser above and the printer
_PREC_ADD, _PREC_NEG, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 9


def _prec(e: Expression) -> int:
    op = e.op
    if op == RAT:
        q: Fraction = e.payload
        if q < 0:
            return _PREC_NEG
        return _PREC_ATOM if q.denominator == 1 else _PREC_MUL
    if op in (ADD, SUB):
        return _PREC_ADD
    if op == NEG:
        return _PREC_NEG
    if op in (MUL, DIV):
        return _PREC_MUL
    if op == POW:
        return _PREC_POW
    return _PREC_ATOM


def to_text(e: Expression, max_nodes: int | None = None) -> str:
    """Render an expression in the grammar accepted by `parse`.

    Printing then re-parsing yields a structurally identical expression.
    `max_nodes` truncates the output (with "...") for error messages; a
    truncated rendering is not re-parseable.
    """
    out: list[str] = []
    budget = [max_nodes if max_nodes is not None else -1]

    def spend() -> bool:
        if budget[0] < 0:
            return True
        if budget[0] == 0:
            return False
        budget[0] -= 1
        return True

    # explicit stack: ("node", e, min_prec) renders e, ("text", s) emits s
    stack: list = [("node", e, 0)]
    while stack:
        item = stack.pop()
        if item[0] == "text":
            out.append(item[1])
            continue
        _, node, min_prec = item
        if not spend():
            out.append("...")
            continue
        p = _prec(node)
        wrap = p < min_prec
        if wrap:
            out.append("(")
            stack.append(("text", ")"))
        op = node.op
        if op == RAT:
            q: Fraction = node.payload
            out.append(str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}")
        elif op == E:
            out.append("e")
        elif op == VAR:
            out.append(node.payload)
        elif op == NEG:
            out.append("-")
            stack.append(("node", node.args[0], _PREC_NEG))
        elif op in (ADD, SUB):
            a, b = node.args
            stack.append(("node", b, _PREC_MUL))
            stack.append(("text", op))
            stack.append(("node", a, _PREC_ADD))
        elif op in (MUL, DIV):
            a, b = node.args
            stack.append(("node", b, _PREC_POW))
            stack.append(("text", op))
            stack.append(("node", a, _PREC_MUL))
        elif op == POW:
            a, b = node.args
            stack.append(("node", b, _PREC_POW))
            stack.append(("text", "^"))
            stack.append(("node", a, _PREC_ATOM))
        else:  # unary function
            out.append(op)
            out.append("(")
            stack.append(("text", ")"))
            stack.append(("node", node.args[0], 0))
    return "".join(out)


# ---------------------------------------------------------------------------
# structural operations

def _postorder(e: Expression):
    """Unique nodes of the DAG, children before parents."""
    seen = set()
    order = []
    stack = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if node in seen:
            continue
        if expanded:
            seen.add(node)
            order.append(node)
            continue
        stack.append((node, True))
        for a in node.args:
            if a not in seen:
                stack.append((a, False))
    return order


def node_count(e: Expression) -> int:
    """Number of distinct nodes in the expression's DAG."""
    return len(_postorder(e))


def differentiate(e: Expression, variable: str) -> Expression:
    """Exact symbolic partial derivative with respect to a variable name."""
    memo: dict[Expression, Expression] = {}
    for node in _postorder(e):
        memo[node] = _diff_node(node, variable, memo)
    return memo[e]


def _diff_node(n: Expression, v: str, memo) -> Expression:
    op = n.op
    if op in (RAT, E):
        return ZERO
    if op == VAR:
        return ONE if n.payload == v else ZERO
    if v not in n.varset:
        return ZERO
    if op == ADD:
        return add(memo[n.args[0]], memo[n.args[1]])
    if op == SUB:
        return sub(memo[n.args[0]], memo[n.args[1]])
    if op == NEG:
        return neg(memo[n.args[0]])
    a, da = n.args[0], memo[n.args[0]]
    if op == MUL:
        b, db = n.args[1], memo[n.args[1]]
        return add(mul(da, b), mul(a, db))
    if op == DIV:
        b, db = n.args[1], memo[n.args[1]]
        return div(sub(mul(da, b), mul(a, db)), mul(b, b))
    if op == POW:
        b = n.args[1]
        if b.op == RAT:
            return mul(mul(b, pow_(a, const(b.payload - 1))), da)
        db = memo[b]
        return mul(n, add(mul(db, log_(a)), div(mul(b, da), a)))
    if op == EXP:
        return mul(n, da)
    if op == LOG:
        return div(da, a)
    if op == SQRT:
        return div(da, mul(const(2), n))
    if op == SIN:
        return mul(cos_(a), da)
    if op == COS:
        return neg(mul(sin_(a), da))
    raise WebrankError(f"cannot differentiate node {op!r}")


def substitute(e: Expression, bindings: Mapping[str, Expression]) -> Expression:
    """Replace variables by expressions, rebuilding through the constructors."""
    touched = frozenset(bindings)
    memo: dict[Expression, Expression] = {}
    for node in _postorder(e):
        if not (node.varset & touched):
            memo[node] = node
        elif node.op == VAR:
            memo[node] = bindings[node.payload]
        else:
            memo[node] = _rebuild(node, tuple(memo[a] for a in node.args))
    return memo[e]


def _rebuild(node: Expression, args: tuple) -> Expression:
    op = node.op
    if op == ADD:
        return add(*args)
    if op == SUB:
        return sub(*args)
    if op == MUL:
        return mul(*args)
    if op == DIV:
        return div(*args)
    if op == POW:
        return pow_(*args)
    if op == NEG:
        return neg(*args)
    return {EXP: exp_, LOG: log_, SQRT: sqrt_, SIN: sin_, COS: cos_}[op](*args)


# ---------------------------------------------------------------------------
# sampling configuration and probabilistic identity testing

@dataclass(frozen=True)
class Box:
    """Axis-aligned sample rectangle in the plane."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise WebrankError(f"box {self} has no area")

    def as_tuple(self):
        return (self.xmin, self.xmax, self.ymin, self.ymax)


@dataclass(frozen=True)
class SampleConfig:
    """Shared knobs of the sampling-based identity tests.

    `tol` is applied to values normalized by 1 + scale, where scale is the
    median magnitude of the expression's non-constant subterms at the point;
    the verdicts are probabilistic by design.
    """

    box: Box
    samples: int = 24
    tol: float = 1e-9
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.samples < 8:
            raise WebrankError("sample count must be at least 8")
        if not self.tol > 0:
            raise WebrankError("tolerance must be positive")

    def with_(self, **kw) -> "SampleConfig":
        data = {"box": self.box, "samples": self.samples, "tol": self.tol, "seed": self.seed}
        data.update(kw)
        return SampleConfig(**data)


_MAX_SAMPLE_BATCHES = 50


def sample_points(e: Expression, cfg: SampleConfig, seed_offset: int = 0):
    """Draw cfg.samples points of the box where e evaluates; resample failures.

    Returns (points, values) numpy arrays.  Raises InsufficientDomainError if
    the retry budget runs out first.
    """
    import numpy as np

    from . import program

    prog = program.compile_cached(e)
    rng = np.random.default_rng(cfg.seed + seed_offset)
    want = cfg.samples
    pts, vals = [], []
    for _ in range(_MAX_SAMPLE_BATCHES):
        xs = rng.uniform(cfg.box.xmin, cfg.box.xmax, want)
        ys = rng.uniform(cfg.box.ymin, cfg.box.ymax, want)
        roots, status = program.run_roots(prog, xs, ys)
        for i in range(want):
            if status[i] < 0:
                pts.append((xs[i], ys[i]))
                vals.append(roots[i])
        if len(pts) >= cfg.samples:
            return np.array(pts[: cfg.samples]), np.array(vals[: cfg.samples])
    raise InsufficientDomainError(
        f"found only {len(pts)} of {cfg.samples} valid sample points")


def zero_report(e: Expression, cfg: SampleConfig, seed_offset: int = 0):
    """Sampled zero test with evidence.

    Returns (verdict, worst) where worst is the largest |e(p)| / (1 + scale)
    over the accepted sample points and scale is the median magnitude of the
    non-constant subterms of e at p.
    """
    import numpy as np

    from . import program

    if e.op == RAT:
        return (e.payload == 0, float(abs(e.payload)))
    prog = program.compile_cached(e)
    rng = np.random.default_rng(cfg.seed + seed_offset)
    accepted = 0
    worst = 0.0
    for _ in range(_MAX_SAMPLE_BATCHES):
        n = cfg.samples
        xs = rng.uniform(cfg.box.xmin, cfg.box.xmax, n)
        ys = rng.uniform(cfg.box.ymin, cfg.box.ymax, n)
        for i in range(n):
            values, status = program.run_values_extended(prog, xs[i], ys[i])
            if status >= 0:
                continue
            scale_vals = np.abs(values[prog.scale_index])
            scale = float(np.median(scale_vals)) if scale_vals.size else 0.0
            ratio = abs(float(values[-1])) / (1.0 + scale)
            worst = max(worst, ratio)
            accepted += 1
            if accepted >= cfg.samples:
                return (worst <= cfg.tol, worst)
    raise InsufficientDomainError(
        f"found only {accepted} of {cfg.samples} valid sample points")


def is_identically_zero(e: Expression, cfg: SampleConfig) -> bool:
    """Probabilistic: true iff e vanishes at all cfg.samples sampled points
    to the scaled tolerance.  Same seed, same verdict."""
    return zero_report(e, cfg)[0]


def evaluate(e: Expression, point) -> float:
    """Evaluate at (x, y) in double precision.

    Raises DomainEvalError naming the offending subterm when the point is
    outside the domain of definition.
    """
    from . import program

    prog = program.compile_cached(e)
    values, status = program.run_values(prog, float(point[0]), float(point[1]))
    if status >= 0:
        raise program.domain_error(prog, status, point)
    return float(values[-1])
