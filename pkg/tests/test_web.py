import numpy as np
import pytest

from webrank.errors import (
    ChartDegeneracyError,
    DegeneratePairError,
    GaugeError,
    PreconditionError,
)
from webrank.expr import Box, SampleConfig, evaluate, is_identically_zero, parse
from webrank.rank import c_explicit
from webrank.web import (
    ChartedWeb,
    basic_invariants,
    curvature_K,
    curvature_from_web_equation,
    curvature_function,
    is_parallelizable,
    make_web,
    make_web_equation,
    max_rank_bound,
    subweb_curvature,
)


def test_make_web_valid(webs):
    assert webs["parallel-3web"].d == 3
    assert webs["rank3-4web"].d == 4


def test_make_web_degenerate_pair():
    with pytest.raises(DegeneratePairError) as err:
        make_web(["x", "y", "2*x"], (1, 2, 1, 2))
    assert err.value.pair == (1, 3)


def test_make_web_needs_three():
    with pytest.raises(PreconditionError):
        make_web(["x", "y"], (1, 2, 1, 2))


def test_chart_degeneracy():
    # f3 functionally dependent on a chart coordinate (bypassing make_web)
    from webrank.web import WebSpec
    box = Box(1, 2, 1, 2)
    raw = WebSpec((parse("x"), parse("y"), parse("2*y")), box, SampleConfig(box=box))
    with pytest.raises(ChartDegeneracyError):
        ChartedWeb(raw)


# ---------------------------------------------------------------------------
# curvature

def test_curvature_parallel_zero(webs):
    web = webs["parallel-3web"]
    assert is_identically_zero(curvature_K(web), web.cfg)


def test_curvature_closed_form_value():
    web = make_web(["x", "y", "x^2+x*y"], (1, 2, 1, 2))
    K = curvature_K(web)
    for x, y in [(1.0, 1.0), (1.5, 1.25)]:
        assert evaluate(K, (x, y)) == pytest.approx(2 / (x * (2 * x + y) ** 3), rel=1e-10)
    assert evaluate(K, (1, 1)) == pytest.approx(2 / 27)


def _fd2(fun, pt, h=1e-5):
    x, y = pt
    return (fun(x + h, y + h) - fun(x + h, y - h)
            - fun(x - h, y + h) + fun(x - h, y - h)) / (4 * h * h)


def test_curvature_matches_finite_difference_oracle():
    # K = -(1/(f_x f_y)) (log(f_x/f_y))_xy computed by central differences
    web = make_web(["x", "y", "x^2+x*y"], (1, 2, 1, 2))
    K = curvature_K(web)
    f = web.functions[2]
    fx = parse("2*x+y")
    fy = parse("x")

    def logratio(x, y):
        return np.log(evaluate(fx, (x, y)) / evaluate(fy, (x, y)))

    for pt in [(1.2, 1.4), (1.7, 1.1)]:
        ref = -_fd2(logratio, pt) / (evaluate(fx, pt) * evaluate(fy, pt))
        assert evaluate(K, pt) == pytest.approx(ref, rel=1e-5)


def test_bol_subweb_curvature_zero(webs):
    web = webs["bol-5web"]
    assert is_identically_zero(subweb_curvature(web, (1, 2, 3)), web.cfg)


def test_rank3_subweb_curvatures(webs):
    web = webs["rank3-4web"]
    assert is_identically_zero(subweb_curvature(web, (1, 2, 4)), web.cfg)
    s134 = subweb_curvature(web, (1, 3, 4))
    # ambient-gauge value derived by hand: -2/(y-x)^2
    assert evaluate(s134, (2.5, 4.5)) == pytest.approx(-2 / 4.0)


def test_linear_webs_have_flat_subwebs(webs):
    web = webs["parallel-4web"]
    from itertools import combinations
    for t in combinations((1, 2, 3, 4), 3):
        assert is_identically_zero(subweb_curvature(web, t), web.cfg)


def test_subweb_zero_set_permutation_invariant(webs):
    web = webs["rank3-4web"]
    # the same triple of foliations, looked up from two orderings of the web
    for triple, perm, mapped in [((1, 3, 4), [2, 0, 3, 1], (1, 2, 3)),
                                 ((1, 2, 4), [3, 1, 0, 2], (1, 2, 3))]:
        base = subweb_curvature(web, triple)
        other = subweb_curvature(web.reordered(perm), mapped)
        assert (is_identically_zero(base, web.cfg)
                == is_identically_zero(other, web.cfg))


def test_curvature_function_fixtures(webs):
    for name, zero in [("parallel-4web", True), ("rank3-4web", True),
                       ("bol-5web", True), ("rank2-4web", False)]:
        web = webs[name]
        assert is_identically_zero(curvature_function(web), web.cfg) == zero


def test_curvature_function_equals_leading_coefficient(webs):
    for name in ["rank2-4web", "rank0-4web", "rank2-nonlinearizable-4web"]:
        web = webs[name]
        cf = curvature_function(web)
        c0 = c_explicit(web)[0]
        rng = np.random.default_rng(3)
        for _ in range(24):
            pt = (rng.uniform(web.box.xmin, web.box.xmax),
                  rng.uniform(web.box.ymin, web.box.ymax))
            assert evaluate(cf, pt) == pytest.approx(evaluate(c0, pt), rel=1e-8, abs=1e-12)


# ---------------------------------------------------------------------------
# basic invariants

def test_basic_invariants_values(webs):
    web = webs["rank3-4web"]
    inv = basic_invariants(web)
    assert evaluate(inv[1], (2, 3)) == pytest.approx(1.5)
    bol = basic_invariants(webs["bol-5web"])
    assert evaluate(bol[1], (2, 3)) == pytest.approx(4 / 3, rel=1e-12)
    assert evaluate(bol[2], (2, 3)) == pytest.approx(2.0, rel=1e-12)


def test_basic_invariants_constant_for_parallel(webs):
    inv = basic_invariants(webs["parallel-4web"])
    assert evaluate(inv[1], (1.3, 1.7)) == pytest.approx(0.5)


def test_basic_invariants_need_d4(webs):
    with pytest.raises(PreconditionError):
        basic_invariants(webs["parallel-3web"])


# ---------------------------------------------------------------------------
# parallelizability and the rank bound

def test_parallelizable(webs):
    assert is_parallelizable(webs["parallel-3web"])
    assert is_parallelizable(webs["parallel-4web"])
    assert not is_parallelizable(webs["rank2-nonlinearizable-4web"])


def test_max_rank_bound():
    assert max_rank_bound(3) == 1
    assert max_rank_bound(4) == 3
    assert max_rank_bound(5) == 6
    with pytest.raises(PreconditionError):
        max_rank_bound(2)


# ---------------------------------------------------------------------------
# webs given by one equation

def test_web_equation_linear():
    weq = make_web_equation("u1+u2-u3", ["x", "y", "x+y"], (1, 2, 1, 2))
    K = curvature_from_web_equation(weq)
    assert is_identically_zero(K, weq.cfg)


def test_web_equation_product():
    weq = make_web_equation("u1*u2-u3", ["x", "y", "x*y"], (1, 2, 1, 2))
    assert is_identically_zero(curvature_from_web_equation(weq), weq.cfg)


def test_web_equation_cross_oracle():
    weq = make_web_equation("u3-u1^2-u1*u2", ["x", "y", "x^2+x*y"], (1, 2, 1, 2))
    K_eq = curvature_from_web_equation(weq)
    assert evaluate(K_eq, (1, 1)) == pytest.approx(2 / 27, rel=1e-10)
    K_chart = curvature_K(make_web(["x", "y", "x^2+x*y"], (1, 2, 1, 2)))
    rng = np.random.default_rng(11)
    for _ in range(12):
        pt = (rng.uniform(1, 2), rng.uniform(1, 2))
        assert evaluate(K_eq, pt) == pytest.approx(evaluate(K_chart, pt), rel=1e-8)


def test_web_equation_must_vanish():
    with pytest.raises(PreconditionError):
        make_web_equation("u1+u2-u3", ["x", "y", "x*y"], (1, 2, 1, 2))


def test_web_equation_gauge_error():
    # W independent of u3 on the surface: W_3 vanishes identically
    with pytest.raises(GaugeError):
        curvature_from_web_equation(
            make_web_equation("u1-u1+0*u3+u2-u2", ["x", "y", "x+y"], (1, 2, 1, 2)))
