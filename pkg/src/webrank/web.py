"""Planar d-webs from web functions: charts, curvature, basic invariants.

Conventions.  The first two web functions serve as the chart coordinates and
the third plays the role of the closed-form function: writing (x', y') =
(f1, f2) and f = f3(x', y'), the normalized coframe is

    w1 = -f_x' dx',   w2 = -f_y' dy',   w3 = df,      w1 + w2 + w3 = 0,

the connection form is gamma = -H w3 with H = f_x'y' / (f_x' f_y'), and the
curvature of the 3-subweb (f1, f2, f3) is

    K = -(1/(f_x' f_y')) (log(f_x'/f_y'))_{x'y'}.

Chart derivatives are realized as first-order derivations on expressions in
the original variables (inverse-Jacobian chain rule), so no symbolic chart
inversion is ever needed and every result stays a closed-form expression in
x, y.

Curvatures of the other 3-subwebs are computed in the *ambient* gauge: the
curvature 2-form of a 3-subweb is gauge invariant, and dividing it by the
fixed area form w1 ^ w2 of the whole web puts all C(d,3) subweb curvatures
on a common scale.  Only in that common scale is their arithmetic mean (the
curvature function of a 4- or 5-web) meaningful; for the subweb (f1, f2, f3)
it coincides with K above.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from . import expr as ex
from .errors import (
    ChartDegeneracyError,
    DegeneratePairError,
    GaugeError,
    InvariantDegeneracyError,
    PreconditionError,
    WebrankError,
)
from .expr import (
    Box,
    Expression,
    SampleConfig,
    add,
    add_many,
    const,
    differentiate,
    div,
    is_identically_zero,
    log_,
    mul,
    neg,
    parse,
    sub,
    substitute,
    var,
)

__all__ = [
    "WebSpec", "ChartedWeb", "WebEquation",
    "make_web", "chart", "curvature_K", "curvature_from_web_equation",
    "subweb_curvature", "basic_invariants", "curvature_function",
    "is_parallelizable", "max_rank_bound",
]

X = var("x")
Y = var("y")


def _as_expression(f) -> Expression:
    return f if isinstance(f, Expression) else parse(f)


@dataclass(frozen=True)
class WebSpec:
    """An ordered planar d-web with its sample box and sampling config.

    Build through `make_web`, which records the general-position certificates
    (no pair of functions has an identically vanishing Jacobian on the box).
    """

    functions: tuple
    box: Box
    cfg: SampleConfig

    @property
    def d(self) -> int:
        return len(self.functions)

    def reordered(self, order) -> "WebSpec":
        """Same web with the function list permuted (0-based indices)."""
        funcs = tuple(self.functions[i] for i in order)
        return WebSpec(funcs, self.box, self.cfg)


def make_web(functions, box, cfg: SampleConfig | None = None) -> WebSpec:
    """Validate web functions on a box and return the WebSpec.

    Raises DegeneratePairError naming the offending 1-based pair when two
    functions define the same foliation, and propagates domain errors when a
    function cannot be sampled on the box.
    """
    funcs = tuple(_as_expression(f) for f in functions)
    if len(funcs) < 3:
        raise PreconditionError("a web needs at least three functions")
    if not isinstance(box, Box):
        box = Box(*box)
    if cfg is None:
        cfg = SampleConfig(box=box)
    elif cfg.box != box:
        cfg = cfg.with_(box=box)
    for f in funcs:
        ex.sample_points(f, cfg)  # evaluability certificate
    grads = [(differentiate(f, "x"), differentiate(f, "y")) for f in funcs]
    for i, j in combinations(range(len(funcs)), 2):
        jac = sub(mul(grads[i][0], grads[j][1]), mul(grads[i][1], grads[j][0]))
        if is_identically_zero(jac, cfg):
            raise DegeneratePairError(i + 1, j + 1)
    return WebSpec(funcs, box, cfg)


class ChartedWeb:
    """A WebSpec together with the derivations of its canonical chart.

    `dx` and `dy` differentiate an expression with respect to the chart
    coordinates (f1, f2); `d1` and `d2` are the dual-frame derivations
    -f_x'^{-1} dx and -f_y'^{-1} dy.  All results are expressions in the
    original variables, cached per chart.
    """

    def __init__(self, web: WebSpec):
        self.web = web
        f1, f2 = web.functions[0], web.functions[1]
        self.f = web.functions[2]
        self._identity = f1 is X and f2 is Y
        if not self._identity:
            g1x, g1y = differentiate(f1, "x"), differentiate(f1, "y")
            g2x, g2y = differentiate(f2, "x"), differentiate(f2, "y")
            self._jac = sub(mul(g1x, g2y), mul(g1y, g2x))
            self._chain = (g1x, g1y, g2x, g2y)
            if is_identically_zero(self._jac, web.cfg):
                raise ChartDegeneracyError("chart Jacobian vanishes on the box")
        self._dx_cache: dict = {}
        self._dy_cache: dict = {}
        self.fx = self.dx(self.f)
        self.fy = self.dy(self.f)
        for name, e in (("f_x'", self.fx), ("f_y'", self.fy)):
            if is_identically_zero(e, web.cfg):
                raise ChartDegeneracyError(
                    f"{name} vanishes identically: function 3 is functionally "
                    f"dependent on a chart coordinate")
        self.fxy = self.dy(self.fx)
        self.H = div(self.fxy, mul(self.fx, self.fy))
        self.K = neg(div(self.dy(self.dx(log_(div(self.fx, self.fy)))),
                         mul(self.fx, self.fy)))

    @property
    def cfg(self) -> SampleConfig:
        return self.web.cfg

    def dx(self, e: Expression) -> Expression:
        got = self._dx_cache.get(e)
        if got is None:
            if self._identity:
                got = differentiate(e, "x")
            else:
                hx, hy = differentiate(e, "x"), differentiate(e, "y")
                g1x, g1y, g2x, g2y = self._chain
                got = div(sub(mul(hx, g2y), mul(hy, g2x)), self._jac)
            self._dx_cache[e] = got
        return got

    def dy(self, e: Expression) -> Expression:
        got = self._dy_cache.get(e)
        if got is None:
            if self._identity:
                got = differentiate(e, "y")
            else:
                hx, hy = differentiate(e, "x"), differentiate(e, "y")
                g1x, g1y, g2x, g2y = self._chain
                got = div(sub(mul(hy, g1x), mul(hx, g1y)), self._jac)
            self._dy_cache[e] = got
        return got

    def d1(self, e: Expression) -> Expression:
        """Dual-frame derivation along the first foliation's transversal."""
        return neg(div(self.dx(e), self.fx))

    def d2(self, e: Expression) -> Expression:
        return neg(div(self.dy(e), self.fy))


def chart(web: WebSpec) -> ChartedWeb:
    return ChartedWeb(web)


def curvature_K(web: ChartedWeb | WebSpec) -> Expression:
    """Curvature of the 3-subweb (f1, f2, f3) in the canonical chart."""
    if isinstance(web, WebSpec):
        web = ChartedWeb(web)
    return web.K


def basic_invariants(web: ChartedWeb | WebSpec):
    """Invariants [1, a_2, ..., a_{d-2}] of the foliations beyond the third.

    a_i = f_y' g_x' / (f_x' g_y') for g the (i+2)-nd web function; each a_i
    with i >= 2 is checked to be neither identically 0 nor identically 1.
    """
    if isinstance(web, WebSpec):
        web = ChartedWeb(web)
    if web.web.d < 4:
        raise PreconditionError("basic invariants need d >= 4")
    out = [ex.ONE]
    for pos in range(3, web.web.d):
        g = web.web.functions[pos]
        a = div(mul(web.fy, web.dx(g)), mul(web.fx, web.dy(g)))
        if is_identically_zero(a, web.cfg):
            raise InvariantDegeneracyError(f"basic invariant of function {pos + 1} is 0")
        if is_identically_zero(sub(a, ex.ONE), web.cfg):
            raise InvariantDegeneracyError(f"basic invariant of function {pos + 1} is 1")
        out.append(a)
    return out


def _coframe(web: ChartedWeb):
    """(x, y)-components of w1 and w2 in the original coordinates."""
    f1, f2 = web.web.functions[0], web.web.functions[1]
    if web._identity:
        w1 = (neg(web.fx), ex.ZERO)
        w2 = (ex.ZERO, neg(web.fy))
    else:
        w1 = (neg(mul(web.fx, differentiate(f1, "x"))),
              neg(mul(web.fx, differentiate(f1, "y"))))
        w2 = (neg(mul(web.fy, differentiate(f2, "x"))),
              neg(mul(web.fy, differentiate(f2, "y"))))
    return w1, w2


def _normalized_components(web: ChartedWeb):
    """Coefficients (p_m, q_m) with w_m = p_m w1 + q_m w2 for every m."""
    d = web.web.d
    comps = [(ex.ONE, ex.ZERO), (ex.ZERO, ex.ONE), (ex.MINUS_ONE, ex.MINUS_ONE)]
    if d >= 4:
        inv = basic_invariants(web)
        for i in range(2, d - 1):
            comps.append((neg(inv[i - 1]), ex.MINUS_ONE))
    return comps


def subweb_curvature(web: WebSpec, indices) -> Expression:
    """Ambient-gauge curvature of the 3-subweb given by 1-based indices.

    The subweb's three coframe forms are renormalized to sum to zero inside
    the span of (w1, w2); the resulting connection form's exterior derivative
    is divided by the fixed area form w1 ^ w2.  For (1, 2, 3) this equals
    `curvature_K`, and the value is independent of the order of the triple.
    """
    idx = tuple(sorted(indices))
    if len(idx) != 3 or idx[0] < 1 or idx[-1] > web.d:
        raise PreconditionError(f"invalid subweb triple {indices}")
    cw = ChartedWeb(web)
    comps = _normalized_components(cw)
    w1, w2 = _coframe(cw)

    def form(m):  # (x, y)-components of w_m
        p, q = comps[m - 1]
        return (add(mul(p, w1[0]), mul(q, w2[0])),
                add(mul(p, w1[1]), mul(q, w2[1])))

    i, j, k = idx
    (pi, qi), (pj, qj), (pk, qk) = comps[i - 1], comps[j - 1], comps[k - 1]
    # cross-product normalization: mu_i w_i + mu_j w_j + mu_k w_k = 0
    mu_i = sub(mul(pj, qk), mul(pk, qj))
    mu_j = sub(mul(pk, qi), mul(pi, qk))
    wi, wj = form(i), form(j)
    A, B = mul(mu_i, wi[0]), mul(mu_i, wi[1])
    C, D = mul(mu_j, wj[0]), mul(mu_j, wj[1])
    area = sub(mul(A, D), mul(B, C))
    if is_identically_zero(area, web.cfg):
        raise ChartDegeneracyError(f"subweb {idx} has a degenerate normalization")
    dxp = lambda e: differentiate(e, "x")
    dyp = lambda e: differentiate(e, "y")
    g2 = div(sub(dxp(B), dyp(A)), area)
    g1 = neg(div(sub(dxp(D), dyp(C)), area))
    coef_dx = add(mul(g1, A), mul(g2, C))
    coef_dy = add(mul(g1, B), mul(g2, D))
    dgamma = sub(dxp(coef_dy), dyp(coef_dx))
    ambient_area = sub(mul(w1[0], w2[1]), mul(w1[1], w2[0]))
    return div(dgamma, ambient_area)


def curvature_function(web: WebSpec) -> Expression:
    """Arithmetic mean of all C(d,3) ambient-gauge subweb curvatures."""
    if web.d not in (4, 5):
        raise PreconditionError("curvature function is defined for d in {4, 5}")
    triples = list(combinations(range(1, web.d + 1), 3))
    total = add_many(subweb_curvature(web, t) for t in triples)
    return div(total, const(len(triples)))


def is_parallelizable(web: WebSpec) -> bool:
    """K of the (1,2,3)-subweb vanishes and all basic invariants are constant."""
    cw = ChartedWeb(web)
    if not is_identically_zero(cw.K, web.cfg):
        return False
    if web.d >= 4:
        for a in basic_invariants(cw)[1:]:
            if not (is_identically_zero(differentiate(a, "x"), web.cfg)
                    and is_identically_zero(differentiate(a, "y"), web.cfg)):
                return False
    return True


def max_rank_bound(d: int) -> int:
    """Upper bound (d-1)(d-2)/2 for the rank of a planar d-web."""
    if d < 3:
        raise PreconditionError("webs need d >= 3")
    return (d - 1) * (d - 2) // 2


# ---------------------------------------------------------------------------
# webs given by a single equation among three functions

U1, U2, U3 = var("u1"), var("u2"), var("u3")

# The two classical curvature normal forms differ by the orientation
# conventions of the coframe; this constant pins the equation route to the
# chart route (cross-checked in the tests on solved-form equations).
_EQUATION_ORIENTATION = -1


@dataclass(frozen=True)
class WebEquation:
    """A 3-web presented by one relation W(u1, u2, u3) = 0 plus the three
    parametrizing functions u_i(x, y) that satisfy it on the box."""

    W: Expression
    params: tuple
    box: Box
    cfg: SampleConfig

    def __post_init__(self):
        if len(self.params) != 3:
            raise PreconditionError("a web equation needs three parametrizing functions")
        composed = substitute(self.W, {"u1": self.params[0],
                                       "u2": self.params[1],
                                       "u3": self.params[2]})
        if not is_identically_zero(composed, self.cfg):
            raise PreconditionError("W(u1(x,y), u2(x,y), u3(x,y)) does not vanish on the box")


def make_web_equation(w_text, params, box, cfg: SampleConfig | None = None) -> WebEquation:
    W = w_text if isinstance(w_text, Expression) else parse(w_text, ("u1", "u2", "u3"))
    ps = tuple(_as_expression(p) for p in params)
    if not isinstance(box, Box):
        box = Box(*box)
    if cfg is None:
        cfg = SampleConfig(box=box)
    return WebEquation(W, ps, box, cfg)


def curvature_from_web_equation(weq: WebEquation) -> Expression:
    """Curvature of the web surface W = 0 through its ambient derivatives.

    K = sum of A_rs over (1,2), (2,3), (3,1), where A_rs is the mixed second
    log-derivative of W_r/W_s scaled by 1/(W_r W_s); derivatives are taken in
    the ambient variables and the result is composed with the parametrization
    (orientation pinned to `curvature_K`, see `_EQUATION_ORIENTATION`).
    """
    names = ("u1", "u2", "u3")
    grads = [differentiate(weq.W, n) for n in names]
    binding = dict(zip(names, weq.params))
    for r, g in enumerate(grads):
        if is_identically_zero(substitute(g, binding), weq.cfg):
            raise GaugeError(f"W_{r + 1} vanishes on the box")
    terms = []
    for r, s in ((0, 1), (1, 2), (2, 0)):
        ratio = log_(div(grads[r], grads[s]))
        mixed = differentiate(differentiate(ratio, names[r]), names[s])
        terms.append(div(mixed, mul(grads[r], grads[s])))
    total = add_many(terms)
    return mul(const(_EQUATION_ORIENTATION), substitute(total, binding))
