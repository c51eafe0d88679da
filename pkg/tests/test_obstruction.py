import numpy as np
import pytest

from webrank.covariant import WeightedField, covariant_derivative
from webrank.errors import PreconditionError
from webrank.expr import (
    ONE,
    add,
    div,
    differentiate,
    evaluate,
    is_identically_zero,
    mul,
    neg,
    parse,
    sub,
    zero_report,
)
from webrank.obstruction import (
    JetPolynomial,
    OperatorWord,
    apply_word,
    kappa_reduce_4web,
    kappa_reduce_5web,
)
from webrank.rank import c_explicit
from webrank.web import ChartedWeb, basic_invariants, curvature_function, make_web

from conftest import random_rational_4web


@pytest.fixture(scope="module")
def cw(webs):
    return ChartedWeb(webs["rank3-4web"])


def test_apply_word_d1(cw):
    u = JetPolynomial.unknown("u")
    out = apply_word(OperatorWord(("d1",)), u, cw)
    assert set(out.terms) == {("u", 1, 0)}


def test_apply_word_delta_on_v(cw):
    # (d1 - d2 o a) v = v{1,0} - a v{0,1} - a2 v{0,0}
    a_expr = basic_invariants(cw)[1]
    a = WeightedField(a_expr, 0)
    v = JetPolynomial.unknown("v")
    d1 = apply_word(OperatorWord(("d1",)), v, cw)
    d2av = apply_word(OperatorWord(("d2", ("mul", a))), v, cw)
    out = d1 - d2av
    assert set(out.terms) == {("v", 1, 0), ("v", 0, 1), ("v", 0, 0)}
    assert out.terms[("v", 1, 0)].value is ONE
    a2 = covariant_derivative(a, 2, cw).value
    pt = (2.3, 4.2)
    assert evaluate(out.terms[("v", 0, 1)].value, pt) == pytest.approx(
        -evaluate(a_expr, pt))
    assert evaluate(out.terms[("v", 0, 0)].value, pt) == pytest.approx(
        -evaluate(a2, pt))


def test_normal_ordering_curvature_term(cw):
    # d2 applied to u{1,0} = u{1,1} + K u{0,0} for the weight-one unknown
    p = JetPolynomial({("u", 1, 0): WeightedField(ONE, 0)})
    out = apply_word(OperatorWord(("d2",)), p, cw)
    assert set(out.terms) == {("u", 1, 1), ("u", 0, 0)}
    pt = (2.7, 4.4)
    assert evaluate(out.terms[("u", 0, 0)].value, pt) == pytest.approx(
        evaluate(cw.K, pt))


def test_word_application_is_right_to_left(cw):
    u = JetPolynomial.unknown("u")
    one_atom = OperatorWord(("d1", "d2"))
    out = apply_word(one_atom, u, cw)  # d2 first, then d1
    assert ("u", 1, 1) in out.terms


def test_homogeneous_weights_enforced():
    with pytest.raises(Exception):
        JetPolynomial({("u", 0, 0): WeightedField(ONE, 0),
                       ("u", 1, 0): WeightedField(ONE, 5)})


# ---------------------------------------------------------------------------
# 4-web reduction

def test_kappa4_max_rank_webs_vanish(webs):
    for name in ("rank3-4web", "parallel-4web"):
        web = webs[name]
        for c in kappa_reduce_4web(web):
            assert is_identically_zero(c, web.cfg), name


def test_kappa4_rank2_web_leading_nonzero(webs):
    web = webs["rank2-4web"]
    c0, c1, c2 = kappa_reduce_4web(web)
    assert not is_identically_zero(c0, web.cfg)


def test_kappa4_needs_4web(webs):
    with pytest.raises(PreconditionError):
        kappa_reduce_4web(webs["bol-5web"])


def test_kappa4_matches_explicit_formulas_random_webs(webs):
    rng = np.random.default_rng(2024)
    for k in range(10):
        web = random_rational_4web(rng)
        derived = kappa_reduce_4web(web)
        explicit = c_explicit(web)
        for _ in range(24):
            pt = (rng.uniform(web.box.xmin, web.box.xmax),
                  rng.uniform(web.box.ymin, web.box.ymax))
            for d, e in zip(derived, explicit):
                dv, ev = evaluate(d, pt), evaluate(e, pt)
                assert dv == pytest.approx(ev, rel=1e-7, abs=1e-10)


def test_kappa4_c0_equals_curvature_function(webs):
    rng = np.random.default_rng(88)
    pool = [webs["rank2-4web"], webs["rank0-4web"], random_rational_4web(rng)]
    for web in pool:
        c0 = kappa_reduce_4web(web)[0]
        cf = curvature_function(web)
        for _ in range(12):
            pt = (rng.uniform(web.box.xmin, web.box.xmax),
                  rng.uniform(web.box.ymin, web.box.ymax))
            assert evaluate(c0, pt) == pytest.approx(evaluate(cf, pt),
                                                     rel=1e-8, abs=1e-12)


def test_reduction_stable_under_relation_order(webs):
    # scrambling the relation list (hence pivot candidates) leaves the
    # reduced coefficients unchanged at sample points
    from webrank.obstruction import _Calc, _reduce
    import webrank.expr as ex

    web = webs["rank2-4web"]
    cw = ChartedWeb(web)
    calc = _Calc(cw)
    one = WeightedField(ex.ONE, 0)
    a = WeightedField(basic_invariants(cw)[1], 0)
    D1, D2 = calc.d1, calc.d2
    A1, A2 = calc.delta_op(one), calc.delta_op(a)
    u, v = JetPolynomial.unknown("u"), JetPolynomial.unknown("v")
    kappa = (A1(A2(D1(u))) - D1(A2(A1(u)))) + (A1(A2(D1(v))) - A1(D1(A2(v))))
    rel = [D1(u) - D2(u), D1(v) - D2(v.scale(a)), D1(u) + D1(v)]
    basis = (("v", 0, 1), ("v", 0, 0), ("u", 0, 0))
    red1 = _reduce(calc, kappa, rel, basis, {"u": 1, "v": 0}, web.cfg)
    red2 = _reduce(calc, kappa, rel[::-1], basis, {"u": 1, "v": 0}, web.cfg)
    for coord in basis:
        e1, e2 = red1.coefficient(coord), red2.coefficient(coord)
        for pt in [(2.2, 4.7), (2.9, 4.1)]:
            assert evaluate(e1, pt) == pytest.approx(evaluate(e2, pt),
                                                     rel=1e-9, abs=1e-12)


def test_reduced_kappa_annihilates_known_solution(webs):
    # the single relation log x - log y + log f3 - log f4 = 0 of the rank-1
    # web gives closed-form unknowns; the reduced obstruction must kill them
    web = webs["rank1-4web"]
    cw = ChartedWeb(web)
    f3, f4 = web.functions[2], web.functions[3]
    u_expr = div(ONE, f3)
    v_expr = neg(mul(div(ONE, f4), div(differentiate(f4, "y"),
                                       differentiate(f3, "y"))))
    v2_expr = covariant_derivative(WeightedField(v_expr, 1), 2, cw).value
    c0, c1, c2 = kappa_reduce_4web(web)
    for pt in [(2.3, 0.8), (2.8, 0.62), (2.55, 0.93)]:
        total = (evaluate(c0, pt) * evaluate(v2_expr, pt)
                 + evaluate(c1, pt) * evaluate(v_expr, pt)
                 + evaluate(c2, pt) * evaluate(u_expr, pt))
        scale = max(abs(evaluate(c0, pt) * evaluate(v2_expr, pt)),
                    abs(evaluate(c1, pt) * evaluate(v_expr, pt)), 1e-30)
        assert abs(total) / scale < 1e-10


def test_commonly_reprinted_c1_variant_fails_solutions(webs):
    # same setup as above, with the c1 curvature term replaced by the
    # widely reprinted variant ((a-4) a1 + (11-20a+12a^2) a2) / (12 (1-a)^2 a):
    # it does not annihilate the actual solution, which pins our version
    from webrank.covariant import jet_table

    web = webs["rank1-4web"]
    cw = ChartedWeb(web)
    jt = jet_table(cw)
    K = jt["K"].value
    a, a1, a2 = jt["a"].value, jt["a1"].value, jt["a2"].value
    c0, c1, c2 = c_explicit(cw)
    # difference between the two candidate curvature terms
    one_m_a = sub(parse("1"), a)
    delta = div(mul(K, add(mul(add(a, parse("-4")), a1),
                           sub(mul(add(parse("11"),
                                       add(mul(parse("-20"), a),
                                           mul(parse("12"), mul(a, a)))), a2),
                               add(mul(parse("-3"), a1),
                                   mul(add(parse("9"),
                                           add(mul(parse("-18"), a),
                                               mul(parse("12"), mul(a, a)))), a2))))),
                mul(parse("12"), mul(mul(one_m_a, one_m_a), a)))
    c1_variant = add(c1, delta)
    f3, f4 = web.functions[2], web.functions[3]
    u_expr = div(ONE, f3)
    v_expr = neg(mul(div(ONE, f4), div(differentiate(f4, "y"),
                                       differentiate(f3, "y"))))
    v2_expr = covariant_derivative(WeightedField(v_expr, 1), 2, cw).value
    bad = 0
    for pt in [(2.3, 0.8), (2.8, 0.62), (2.55, 0.93)]:
        total = (evaluate(c0, pt) * evaluate(v2_expr, pt)
                 + evaluate(c1_variant, pt) * evaluate(v_expr, pt)
                 + evaluate(c2, pt) * evaluate(u_expr, pt))
        scale = max(abs(evaluate(c1_variant, pt) * evaluate(v_expr, pt)), 1e-30)
        if abs(total) / scale > 1e-6:
            bad += 1
    assert bad == 3


# ---------------------------------------------------------------------------
# 5-web reduction

def test_kappa5_bol_all_vanish(webs):
    web = webs["bol-5web"]
    cs = kappa_reduce_5web(web)
    assert len(cs) == 6
    for c in cs:
        assert is_identically_zero(c, web.cfg)


def test_kappa5_parallel_all_vanish():
    web = make_web(["x", "y", "x+y", "x+2*y", "x+3*y"], (1, 2, 1, 2))
    for c in kappa_reduce_5web(web):
        assert is_identically_zero(c, web.cfg)


def test_kappa5_c0_equals_curvature_function():
    rng = np.random.default_rng(10)
    for funcs in (["x", "y", "x+y", "x*y", "x^2+y^2"],
                  ["x", "y", "x+y", "x+2*y", "x+y^2"]):
        web = make_web(funcs, (2, 3, 4, 5))
        c0 = kappa_reduce_5web(web)[0]
        cf = curvature_function(web)
        for _ in range(12):
            pt = (rng.uniform(2, 3), rng.uniform(4, 5))
            assert evaluate(c0, pt) == pytest.approx(evaluate(cf, pt),
                                                     rel=1e-8, abs=1e-12)


def test_kappa5_nonmax_web_detected():
    web = make_web(["x", "y", "x+y", "x+2*y", "x+y^2"], (1, 2, 1, 2))
    cs = kappa_reduce_5web(web)
    assert not is_identically_zero(cs[0], web.cfg)
