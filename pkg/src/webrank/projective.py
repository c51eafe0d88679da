"""Canonical projective structure of a 4-web, geodesicity, linearizability.

A 4-web determines a unique projective structure for which all four
foliations are geodesic.  Writing z = (a1 - a a2)/(a(1-a)) with a the basic
invariant and a1, a2 its frame derivatives, the representative torsion-free
connection satisfies

    sym-d(w1) = (z/2) w3 . w1,     sym-d(w2) = -(z/2) w3 . w2,

which decouples into three 2x2 linear solves for the six Christoffel
coefficients in the plane coordinates.  A d-web (d >= 5) is geodesic when
every further foliation induces the same z invariant.

Flatness of the structure is measured by a third-order tensor with two
independent components; they are computed twice, from the closed-form
expressions in w = f_y/f_x, alpha and kappa = (log w)_xy (plain chart
derivatives throughout, not covariant ones), and independently from the
Ricci tensor of the representative connection.  A web is linearizable iff
it is geodesic and the tensor of a 4-subweb vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as ex
from .errors import IndeterminateError, PreconditionError
from .expr import (
    Expression,
    add,
    add_many,
    const,
    differentiate,
    div,
    log_,
    mul,
    neg,
    pow_,
    sub,
    zero_report,
)
from .web import ChartedWeb, WebSpec, basic_invariants, is_parallelizable

__all__ = ["ProjectiveRep", "LiouvilleData", "projective_rep", "geodesic_test",
           "liouville", "liouville_via_ricci", "linearizability_verdict",
           "z_invariant"]

_STABILITY_SEEDS = 3


def _stable_zero(e: Expression, cfg, name: str) -> bool:
    verdicts = []
    for k in range(_STABILITY_SEEDS):
        verdicts.append(zero_report(e, cfg, seed_offset=1000003 * k)[0])
    if len(set(verdicts)) > 1:
        raise IndeterminateError(f"vanishing of {name} is unstable across seeds")
    return verdicts[0]


def z_invariant(cw: ChartedWeb, a: Expression) -> Expression:
    """z = (a1 - a a2) / (a (1 - a)) for a weight-zero invariant a."""
    a1, a2 = cw.d1(a), cw.d2(a)
    return div(sub(a1, mul(a, a2)), mul(a, sub(ex.ONE, a)))


@dataclass(frozen=True)
class ProjectiveRep:
    """Representative connection of the canonical projective structure.

    theta holds the four 1-forms as (A_i, B_i) coefficient pairs in the
    (w1, w2) coframe; gamma maps ("x"|"y", "xx"|"xy"|"yy") to the
    Christoffel coefficient in the plane coordinates.
    """

    z: Expression
    theta: tuple
    gamma: dict
    coframe: tuple  # ((P1, Q1), (P2, Q2), (P3, Q3), (P4, Q4)) in dx, dy


def _coframe4(cw: ChartedWeb, a: Expression):
    f1, f2, f3 = cw.web.functions[0], cw.web.functions[1], cw.web.functions[2]
    w1 = (neg(mul(cw.fx, differentiate(f1, "x"))),
          neg(mul(cw.fx, differentiate(f1, "y"))))
    w2 = (neg(mul(cw.fy, differentiate(f2, "x"))),
          neg(mul(cw.fy, differentiate(f2, "y"))))
    w3 = (differentiate(f3, "x"), differentiate(f3, "y"))
    w4 = (sub(neg(mul(a, w1[0])), w2[0]), sub(neg(mul(a, w1[1])), w2[1]))
    return w1, w2, w3, w4


def projective_rep(web: WebSpec | ChartedWeb) -> ProjectiveRep:
    """Solve for the representative connection of a 4-web.

    The two symmetric-differential equations give, slot by slot over the
    symmetric index pairs xx, xy, yy, a 2x2 linear system whose determinant
    is the area form of (w1, w2); Cramer's rule yields the Christoffels as
    closed forms.
    """
    cw = web if isinstance(web, ChartedWeb) else ChartedWeb(web)
    if cw.web.d != 4:
        raise PreconditionError("projective_rep needs a 4-web")
    a = basic_invariants(cw)[1]
    z = z_invariant(cw, a)
    w1, w2, w3, w4 = _coframe4(cw, a)
    half_z = div(z, const(2))
    a1 = cw.d1(a)
    # theta_1 = (z/2) w3; the rest follow from the normalization relations
    A1, B1 = neg(half_z), neg(half_z)
    theta = (
        (A1, B1),
        (add(A1, z), add(B1, z)),
        (A1, add(B1, z)),
        (add(A1, div(a1, a)), add(B1, z)),
    )
    rhs1 = _sym_product((mul(half_z, w3[0]), mul(half_z, w3[1])), w1)
    rhs2 = _sym_product((neg(mul(half_z, w3[0])), neg(mul(half_z, w3[1]))), w2)
    det = sub(mul(w1[0], w2[1]), mul(w1[1], w2[0]))
    gamma = {}
    for slot, (i, j) in (("xx", ("x", "x")), ("xy", ("x", "y")), ("yy", ("y", "y"))):
        e1 = sub(_sym_deriv(w1, i, j), rhs1[slot])
        e2 = sub(_sym_deriv(w2, i, j), rhs2[slot])
        gamma[("x", slot)] = div(sub(mul(e1, w2[1]), mul(e2, w1[1])), det)
        gamma[("y", slot)] = div(sub(mul(w1[0], e2), mul(w2[0], e1)), det)
    return ProjectiveRep(z=z, theta=theta, gamma=gamma, coframe=(w1, w2, w3, w4))


def _sym_product(alpha, beta):
    """Symmetric product of two 1-forms, (a.b)_ij = (a_i b_j + a_j b_i)/2."""
    half = const(ex.Fraction(1, 2))
    return {
        "xx": mul(alpha[0], beta[0]),
        "xy": mul(half, add(mul(alpha[0], beta[1]), mul(alpha[1], beta[0]))),
        "yy": mul(alpha[1], beta[1]),
    }


def _sym_deriv(w, i, j):
    """Symmetrized coordinate derivative of a 1-form, (d w)^s_ij."""
    comp = {"x": w[0], "y": w[1]}
    return mul(const(ex.Fraction(1, 2)),
               add(differentiate(comp[j], i), differentiate(comp[i], j)))


def connection_residuals(rep: ProjectiveRep) -> list:
    """sym-d(w_i) - theta_i . w_i for all four forms; identically zero."""
    out = []
    for (A, B), w in zip(rep.theta, rep.coframe):
        w1, w2 = rep.coframe[0], rep.coframe[1]
        th = (add(mul(A, w1[0]), mul(B, w2[0])), add(mul(A, w1[1]), mul(B, w2[1])))
        rhs = _sym_product(th, w)
        for slot, (i, j) in (("xx", ("x", "x")), ("xy", ("x", "y")), ("yy", ("y", "y"))):
            lhs = sub(_sym_deriv(w, i, j),
                      add(mul(rep.gamma[("x", slot)], w[0]),
                          mul(rep.gamma[("y", slot)], w[1])))
            out.append(sub(lhs, rhs[slot]))
    return out


# ---------------------------------------------------------------------------
# flatness tensor

@dataclass(frozen=True)
class LiouvilleData:
    """Closed-form flatness data of a 4-web (plain chart derivatives)."""

    w: Expression
    alpha: Expression
    k: Expression
    L1: Expression
    L2: Expression


def liouville(web: WebSpec | ChartedWeb) -> LiouvilleData:
    """Third-order flatness invariants L1, L2 from their explicit formulas."""
    cw = web if isinstance(web, ChartedWeb) else ChartedWeb(web)
    if cw.web.d != 4:
        raise PreconditionError("liouville needs a 4-web")
    a = basic_invariants(cw)[1]
    dx, dy = cw.dx, cw.dy
    w = div(cw.fy, cw.fx)
    ax, ay = dx(a), dy(a)
    alpha = div(sub(mul(a, ay), mul(w, ax)),
                mul(w, mul(a, sub(ex.ONE, a))))
    k = dy(dx(log_(w)))
    wx, wy = dx(w), dy(w)
    wxx, wxy = dx(wx), dy(wx)
    alx, aly = dx(alpha), dy(alpha)
    alxx, alxy, alyy = dx(alx), dy(alx), dy(aly)
    three_L1 = add_many([
        mul(w, add_many([neg(dx(mul(k, w))), alxx, mul(alpha, alx)])),
        add_many([
            mul(alpha, wxx),
            mul(add(mul(alpha, alpha), mul(const(3), alx)), wx),
            neg(mul(const(2), alxy)),
            neg(mul(const(2), mul(alpha, aly))),
        ]),
        div(add_many([
            neg(mul(alpha, wxy)),
            neg(mul(const(2), mul(aly, wx))),
            mul(alpha, mul(wx, wx)),
        ]), w),
        div(mul(alpha, mul(wx, wy)), mul(w, w)),
    ])
    three_L2 = add_many([
        mul(mul(w, w), add(neg(dy(div(k, w))), mul(const(2), mul(alpha, alx)))),
        mul(w, add_many([
            mul(const(2), mul(mul(alpha, alpha), wx)),
            neg(mul(const(2), alxy)),
            neg(mul(alpha, aly)),
        ])),
        add_many([neg(mul(alpha, wxy)), neg(mul(const(2), mul(aly, wx))), alyy]),
        div(sub(mul(alpha, mul(wx, wy)), mul(aly, wy)), w),
    ])
    third = const(ex.Fraction(1, 3))
    return LiouvilleData(w=w, alpha=alpha, k=k,
                         L1=mul(third, three_L1), L2=mul(third, three_L2))


def liouville_via_ricci(web: WebSpec | ChartedWeb, rep: ProjectiveRep | None = None):
    """Flatness tensor components from the representative connection.

    Builds the curvature of the Christoffels, the Ricci tensor, the weighted
    symmetrization P = (2/3) Ric + (1/3) Ric^T and the alternated covariant
    derivative L_k = (nabla_x P)_{yk} - (nabla_y P)_{xk}; returns (L_x, L_y).
    """
    cw = web if isinstance(web, ChartedWeb) else ChartedWeb(web)
    if rep is None:
        rep = projective_rep(cw)
    idx = ("x", "y")
    G = {(u, i, j): rep.gamma[(u, "".join(sorted(i + j)))]
         for u in idx for i in idx for j in idx}

    def d(e, i):
        return differentiate(e, i)

    # Ric_{jk} = sum_i [ d_i G^i_{jk} - d_j G^i_{ik}
    #                    + G^i_{im} G^m_{jk} - G^i_{jm} G^m_{ik} ]
    ric = {}
    for jj in idx:
        for kk in idx:
            parts = []
            for ii in idx:
                parts.append(d(G[(ii, jj, kk)], ii))
                parts.append(neg(d(G[(ii, ii, kk)], jj)))
                for mm in idx:
                    parts.append(mul(G[(ii, ii, mm)], G[(mm, jj, kk)]))
                    parts.append(neg(mul(G[(ii, jj, mm)], G[(mm, ii, kk)])))
            ric[(jj, kk)] = add_many(parts)
    two_thirds = const(ex.Fraction(2, 3))
    one_third = const(ex.Fraction(1, 3))
    P = {(j, k): add(mul(two_thirds, ric[(j, k)]), mul(one_third, ric[(k, j)]))
         for j in idx for k in idx}

    def nabla(i, j, k):
        parts = [d(P[(j, k)], i)]
        for m in idx:
            parts.append(neg(mul(G[(m, i, j)], P[(m, k)])))
            parts.append(neg(mul(G[(m, i, k)], P[(j, m)])))
        return add_many(parts)

    return tuple(sub(nabla("x", "y", k), nabla("y", "x", k)) for k in idx)


def formula_tensor_components(web: WebSpec | ChartedWeb, lio: LiouvilleData | None = None):
    """(dx, dy) components of the closed-form tensor
    (L1 w1 + (L2/w) w2) (x) (w1 ^ w2), for cross-checking the Ricci route."""
    cw = web if isinstance(web, ChartedWeb) else ChartedWeb(web)
    if lio is None:
        lio = liouville(cw)
    a = basic_invariants(cw)[1]
    w1, w2, _, _ = _coframe4(cw, a)
    area = sub(mul(w1[0], w2[1]), mul(w1[1], w2[0]))
    comp = lambda c: mul(add(mul(lio.L1, w1[c]), mul(div(lio.L2, lio.w), w2[c])), area)
    return comp(0), comp(1)


# ---------------------------------------------------------------------------
# geodesic webs and the linearizability verdict

def geodesic_test(web: WebSpec) -> bool:
    """d >= 5: all foliations beyond the fourth share the projective
    structure, i.e. every basic invariant induces the same z."""
    if web.d < 5:
        raise PreconditionError("geodesic_test needs d >= 5; a 4-web is "
                                "geodesic for its own canonical structure")
    cw = ChartedWeb(web)
    inv = basic_invariants(cw)[1:]
    zs = [z_invariant(cw, a) for a in inv]
    for i in range(1, len(zs)):
        if not _stable_zero(sub(zs[i], zs[0]), web.cfg, f"z{i + 1}-z1"):
            return False
    return True


def linearizability_verdict(web: WebSpec) -> str:
    """"linearizable" | "not linearizable" (or IndeterminateError).

    d = 4: both closed-form tensor components vanish.  d >= 5: the web is
    geodesic and the tensor of the (1,2,3,4)-subweb vanishes.
    """
    if web.d < 4:
        raise PreconditionError("linearizability needs d >= 4")
    if web.d >= 5:
        if not geodesic_test(web):
            return "not linearizable"
        sub4 = WebSpec(web.functions[:4], web.box, web.cfg)
        return linearizability_verdict(sub4)
    lio = liouville(web)
    flat = (_stable_zero(lio.L1, web.cfg, "L1")
            and _stable_zero(lio.L2, web.cfg, "L2"))
    return "linearizable" if flat else "not linearizable"
