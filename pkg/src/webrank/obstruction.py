"""Operator-algebra engine for the compatibility obstruction of 4- and 5-webs.

The unknowns of the first-order system satisfied by a web's closed-form
densities are weight-one scalars (u, v for a 4-web; w, u, v for a 5-web).
Jet coordinates s_{k,l} stand for delta_1^k delta_2^l applied to the unknown
s, in the canonical order of module `covariant` (all delta_2 first).  A
`JetPolynomial` is a finite linear combination of jet coordinates with
weighted expression coefficients.

Applying delta_2 to a jet with k >= 1 is normal-ordered through the
commutation identity (delta_2 delta_1 - delta_1 delta_2 = s K on weight-s
scalars), so every operator application lands back in canonical coordinates.

The obstruction kappa is built mechanically from its operator definition
(compositions of delta_1 and Delta_i = delta_1 - delta_2 o a_i) and then
reduced modulo the system's relations and their prolongations by symbolic
Gaussian elimination, eliminating the highest-order jets first; pivots are
chosen by sampled non-vanishing.  What survives lies in the span of the
system's free jet coordinates, and the surviving coefficients are the
invariants whose vanishing characterizes maximum rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import expr as ex
from .covariant import WeightedField, covariant_derivative
from .errors import PreconditionError, ReductionIncompleteError, WebrankError
from .expr import const, div, is_identically_zero, mul, node_count, sub
from .web import ChartedWeb, WebSpec, basic_invariants

__all__ = ["JetPolynomial", "OperatorWord", "apply_word",
           "kappa_reduce_4web", "kappa_reduce_5web"]


class JetPolynomial:
    """Linear combination of jet coordinates with WeightedField coefficients.

    Keys are (symbol, k, l); a jet coordinate has weight 1 + k + l, and all
    terms of one polynomial carry the same total weight.  Structurally zero
    coefficients are pruned on construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = {c: w for c, w in terms.items() if w.value is not ex.ZERO}
        weights = {w.weight + 1 + c[1] + c[2] for c, w in self.terms.items()}
        if len(weights) > 1:
            raise WebrankError(f"inhomogeneous jet polynomial: weights {weights}")

    @classmethod
    def unknown(cls, symbol: str) -> "JetPolynomial":
        return cls({(symbol, 0, 0): WeightedField(ex.ONE, 0)})

    def __add__(self, other: "JetPolynomial") -> "JetPolynomial":
        out = dict(self.terms)
        for c, w in other.terms.items():
            got = out.get(c)
            if got is None:
                out[c] = w
            else:
                if got.weight != w.weight:
                    raise WebrankError("weight mismatch in jet polynomial sum")
                out[c] = WeightedField(ex.add(got.value, w.value), w.weight)
        return JetPolynomial(out)

    def __sub__(self, other: "JetPolynomial") -> "JetPolynomial":
        return self + other.scale(WeightedField(ex.MINUS_ONE, 0))

    def scale(self, factor: WeightedField) -> "JetPolynomial":
        return JetPolynomial({c: factor * w for c, w in self.terms.items()})

    def coefficient(self, coord) -> ex.Expression:
        got = self.terms.get(coord)
        return got.value if got is not None else ex.ZERO

    def order(self) -> int:
        return max((k + l for (_, k, l) in self.terms), default=0)

    def coords(self):
        return set(self.terms)

    def __repr__(self):
        bits = [f"{ex.to_text(w.value, max_nodes=12)}*{s}[{k},{l}]"
                for (s, k, l), w in sorted(self.terms.items())]
        return "JetPolynomial(" + " + ".join(bits) + ")"


@dataclass(frozen=True)
class OperatorWord:
    """Composition of atoms applied right to left.

    Atoms: "d1", "d2", or ("mul", WeightedField) for multiplication by an
    invariant.  Delta_i = delta_1 - delta_2 o a_i is the difference of the
    words ("d1",) and ("d2", ("mul", a_i)).
    """

    atoms: tuple


class _Calc:
    """Jet-polynomial calculus bound to one charted web."""

    def __init__(self, web: ChartedWeb):
        self.web = web
        self.K = WeightedField(web.K, 2)
        self._d2_jet_memo: dict = {}

    def delta_coefficient(self, w: WeightedField, i: int) -> WeightedField:
        return covariant_derivative(w, i, self.web)

    def d1(self, p: JetPolynomial) -> JetPolynomial:
        out: dict = {}
        for (s, k, l), c in p.terms.items():
            _accumulate(out, (s, k + 1, l), c)
            dc = self.delta_coefficient(c, 1)
            if dc.value is not ex.ZERO:
                _accumulate(out, (s, k, l), dc)
        return JetPolynomial(out)

    def d2(self, p: JetPolynomial) -> JetPolynomial:
        out: dict = {}
        for (s, k, l), c in p.terms.items():
            dc = self.delta_coefficient(c, 2)
            if dc.value is not ex.ZERO:
                _accumulate(out, (s, k, l), dc)
            for coord, w in self._d2_jet(s, k, l).terms.items():
                _accumulate(out, coord, c * w)
        return JetPolynomial(out)

    def _d2_jet(self, s: str, k: int, l: int) -> JetPolynomial:
        """delta_2 s_{k,l} in canonical coordinates (normal ordering)."""
        key = (s, k, l)
        got = self._d2_jet_memo.get(key)
        if got is not None:
            return got
        if k == 0:
            res = JetPolynomial({(s, 0, l + 1): WeightedField(ex.ONE, 0)})
        else:
            # delta_2 delta_1 = delta_1 delta_2 + (weight) K on s_{k-1,l}
            inner = self._d2_jet(s, k - 1, l)
            res = self.d1(inner) + JetPolynomial(
                {(s, k - 1, l): WeightedField(mul(const(k + l), self.K.value), 2)})
        self._d2_jet_memo[key] = res
        return res

    def delta_op(self, a: WeightedField):
        """Delta = delta_1 - delta_2 o (multiplication by a)."""
        def apply(p: JetPolynomial) -> JetPolynomial:
            return self.d1(p) - self.d2(p.scale(a))
        return apply


def _accumulate(out: dict, coord, w: WeightedField):
    got = out.get(coord)
    if got is None:
        out[coord] = w
    else:
        if got.weight != w.weight:
            raise WebrankError("weight mismatch while accumulating jet terms")
        out[coord] = WeightedField(ex.add(got.value, w.value), w.weight)


def apply_word(word: OperatorWord, p: JetPolynomial, web: ChartedWeb | WebSpec) -> JetPolynomial:
    """Apply an operator word (rightmost atom first) to a jet polynomial."""
    calc = web if isinstance(web, _Calc) else _Calc(_charted(web))
    for atom in reversed(word.atoms):
        if atom == "d1":
            p = calc.d1(p)
        elif atom == "d2":
            p = calc.d2(p)
        elif isinstance(atom, tuple) and atom[0] == "mul":
            p = p.scale(atom[1])
        else:
            raise PreconditionError(f"unknown operator atom {atom!r}")
    return p


def _charted(web) -> ChartedWeb:
    return web if isinstance(web, ChartedWeb) else ChartedWeb(web)


# ---------------------------------------------------------------------------
# reduction modulo the prolonged system

def _pivot_quality(coef: ex.Expression) -> tuple:
    return (0 if coef.is_rational else 1, node_count(coef))


def _prune_poly(p: JetPolynomial, cfg) -> JetPolynomial:
    kept = {}
    for coord, w in p.terms.items():
        if w.value.is_rational or not is_identically_zero(w.value, cfg):
            kept[coord] = w
    return JetPolynomial(kept)


def _stratum_rows(calc: _Calc, relations, words: int):
    """Canonical prolongations of length `words`: delta_2^j then delta_1^i,
    i + j = words, applied to each base relation."""
    rows = []
    for rel in relations:
        for j in range(words + 1):
            p = rel
            for _ in range(j):
                p = calc.d2(p)
            for _ in range(words - j):
                p = calc.d1(p)
            rows.append(p)
    return rows


def _drop_coord(p: JetPolynomial, coord) -> JetPolynomial:
    return JetPolynomial({c: w for c, w in p.terms.items() if c != coord})


def _reduce(calc: _Calc, kappa: JetPolynomial, relations, basis, sym_rank, cfg):
    """Rewrite kappa into the span of the basis jet coordinates.

    Works stratum by stratum, from kappa's top jet order down:  order-m
    coordinates are eliminated using only the canonical order-(m-1)
    prolongations of the base relations, which form a square, generically
    uniquely solvable system for the order-m jets on the equation manifold.
    Mixing strata would contaminate the result with multiples of the
    obstruction itself, so lower-order tails introduced by a substitution
    wait for their own stratum.  Pivots are chosen by sampled non-vanishing.
    """
    basis = set(basis)
    key = lambda c: (c[1] + c[2], c[1], sym_rank[c[0]])
    kappa = _prune_poly(kappa, cfg)
    while True:
        pending = [c for c in kappa.coords() if c not in basis]
        if not pending:
            break
        m = max(c[1] + c[2] for c in pending)
        if m == 0:
            raise ReductionIncompleteError(
                f"order-0 coordinates {sorted(pending)} outside the basis")
        active = _stratum_rows(calc, relations, m - 1)
        stratum_coords = {c for r in active for c in r.coords()
                          if c[1] + c[2] == m and c not in basis}
        stratum_coords |= {c for c in pending if c[1] + c[2] == m}
        pivots = {}
        for coord in sorted(stratum_coords, key=key, reverse=True):
            candidates = [r for r in active if coord in r.terms]
            candidates.sort(key=lambda r: _pivot_quality(r.terms[coord].value))
            pivot = None
            for r in candidates:
                coef = r.terms[coord].value
                if coef.is_rational or not is_identically_zero(coef, cfg):
                    pivot = r
                    break
            if pivot is None:
                continue
            active.remove(pivot)
            pc = pivot.terms[coord]
            reduced = []
            for r in active:
                if coord in r.terms:
                    rc = r.terms[coord]
                    factor = WeightedField(div(rc.value, pc.value),
                                           rc.weight - pc.weight)
                    r = r - pivot.scale(factor)
                reduced.append(r)
            active = reduced
            pivots[coord] = pivot
        for coord in sorted(stratum_coords, key=key, reverse=True):
            if coord not in kappa.terms:
                continue
            rc = kappa.terms[coord]
            pivot = pivots.get(coord)
            if pivot is None:
                if is_identically_zero(rc.value, cfg):
                    kappa = _drop_coord(kappa, coord)
                    continue
                raise ReductionIncompleteError(
                    f"no relation solves jet coordinate {coord}")
            pc = pivot.terms[coord]
            factor = WeightedField(div(rc.value, pc.value), rc.weight - pc.weight)
            kappa = kappa - pivot.scale(factor)
        kappa = _prune_poly(kappa, cfg)
    return kappa


# The reduced obstruction is a relative object: rescaling it by a nonzero
# function leaves its vanishing locus unchanged.  The gauges below divide
# out the pivot factors the reduction introduces, picked so that the leading
# coefficient equals the mean of the subweb curvatures (cross-checked by the
# tests, never computed from it).
def _gauge_factor_4(a: ex.Expression) -> ex.Expression:
    return mul(const(4), mul(a, sub(ex.ONE, a)))


def _gauge_factor_5(a: ex.Expression, b: ex.Expression) -> ex.Expression:
    return mul(const(-10), mul(sub(ex.ONE, a), sub(ex.ONE, b)))


def kappa_reduce_4web(web: WebSpec | ChartedWeb):
    """Reduced obstruction coefficients (c0, c2, c2) of a 4-web.

    kappa = (Delta1 Delta2 delta1 - delta1 Delta1 Delta2) u
          + (Delta1 Delta2 delta1 - Delta1 delta1 Delta2) v
    reduced modulo the system u1 - u2 = 0, v1 - a v2 - a2 v = 0,
    u1 + v1 = 0 and its prolongations, to the basis {v2, v, u}.
    """
    cw = _charted(web)
    if cw.web.d != 4:
        raise PreconditionError("kappa_reduce_4web needs a 4-web")
    cfg = cw.cfg
    calc = _Calc(cw)
    one = WeightedField(ex.ONE, 0)
    a = WeightedField(basic_invariants(cw)[1], 0)
    D1, D2 = calc.d1, calc.d2
    Delta1, Delta2 = calc.delta_op(one), calc.delta_op(a)
    u = JetPolynomial.unknown("u")
    v = JetPolynomial.unknown("v")
    # u-part subtracted word ends in Delta1 so it acts through u's own
    # relation (the same pattern as every other unknown's word)
    kappa = (Delta1(Delta2(D1(u))) - D1(Delta2(Delta1(u)))) \
        + (Delta1(Delta2(D1(v))) - Delta1(D1(Delta2(v))))
    relations = [
        D1(u) - D2(u),
        D1(v) - D2(v.scale(a)),
        D1(u) + D1(v),
    ]
    basis = (("v", 0, 1), ("v", 0, 0), ("u", 0, 0))
    reduced = _reduce(calc, kappa, relations, basis, {"u": 1, "v": 0}, cfg)
    gauge = _gauge_factor_4(a.value)
    return tuple(div(reduced.coefficient(c), gauge) for c in basis)


def kappa_reduce_5web(web: WebSpec | ChartedWeb):
    """Reduced obstruction coefficients (c0..c5) of a 5-web.

    kappa = (Delta1 Delta2 Delta3 delta1 - delta1 Delta2 Delta3 Delta1) w
          + (Delta1 Delta2 Delta3 delta1 - Delta1 delta1 Delta3 Delta2) u
          + (Delta1 Delta2 Delta3 delta1 - Delta1 Delta2 delta1 Delta3) v
    reduced modulo u1 + v1 + w1 = 0, v1 - b v2 - b2 v = 0,
    u1 - a u2 - a2 u = 0, w1 - w2 = 0 and prolongations, to the basis
    {w22, w2, v2, w, u, v}.
    """
    cw = _charted(web)
    if cw.web.d != 5:
        raise PreconditionError("kappa_reduce_5web needs a 5-web")
    cfg = cw.cfg
    calc = _Calc(cw)
    one = WeightedField(ex.ONE, 0)
    inv = basic_invariants(cw)
    a = WeightedField(inv[1], 0)
    b = WeightedField(inv[2], 0)
    D1, D2 = calc.d1, calc.d2
    Delta1, Delta2, Delta3 = calc.delta_op(one), calc.delta_op(a), calc.delta_op(b)
    w = JetPolynomial.unknown("w")
    u = JetPolynomial.unknown("u")
    v = JetPolynomial.unknown("v")
    full = lambda p: Delta1(Delta2(Delta3(D1(p))))
    kappa = (full(w) - D1(Delta2(Delta3(Delta1(w))))) \
        + (full(u) - Delta1(D1(Delta3(Delta2(u))))) \
        + (full(v) - Delta1(Delta2(D1(Delta3(v)))))
    relations = [
        D1(u) + D1(v) + D1(w),
        D1(v) - D2(v.scale(b)),
        D1(u) - D2(u.scale(a)),
        D1(w) - D2(w),
    ]
    basis = (("w", 0, 2), ("w", 0, 1), ("v", 0, 1),
             ("w", 0, 0), ("u", 0, 0), ("v", 0, 0))
    reduced = _reduce(calc, kappa, relations, basis, {"u": 2, "v": 1, "w": 0}, cfg)
    gauge = _gauge_factor_5(a.value, b.value)
    return tuple(div(reduced.coefficient(c), gauge) for c in basis)
