import numpy as np
import pytest

from webrank import program
from webrank.errors import ExpressionTooLargeError
from webrank.expr import add, const, mul, parse, var

from test_expr import _random_tree


def _has_compiled():
    try:
        from webrank import _kernel  # noqa: F401
        return True
    except ImportError:
        return False


needs_compiled = pytest.mark.skipif(not _has_compiled(),
                                    reason="compiled kernel not built")


@needs_compiled
def test_backends_agree_on_random_programs():
    rng = np.random.default_rng(42)
    xs = rng.uniform(0.5, 2.5, 16)
    ys = rng.uniform(0.5, 2.5, 16)
    exprs = [_random_tree(rng, 5) for _ in range(60)]
    try:
        for e in exprs:
            prog = program.compile_program(e)
            program.use_backend("compiled")
            rc, sc = program.run_roots(prog, xs, ys)
            vc, stc = program.run_values(prog, xs[0], ys[0])
            lc, lsc = program.run_values_extended(prog, xs[0], ys[0])
            program.use_backend("pure")
            rp, sp = program.run_roots(prog, xs, ys)
            vp, stp = program.run_values(prog, xs[0], ys[0])
            lp, lsp = program.run_values_extended(prog, xs[0], ys[0])
            assert np.array_equal(sc, sp)
            ok = sc < 0
            assert np.allclose(rc[ok], rp[ok], rtol=1e-13, atol=1e-300)
            assert stc == stp
            assert lsc == lsp
            if stc < 0:
                assert np.allclose(vc, vp, rtol=1e-13)
                assert np.allclose(np.asarray(lc, dtype=float),
                                   np.asarray(lp, dtype=float), rtol=1e-13)
    finally:
        program.use_backend("compiled")


@needs_compiled
def test_extended_precision_beats_double():
    # (1 + 1e-12)^2 - 1 - 2e-12 cancels at the edge of double precision
    tiny = const("1e-12")
    x = var("x")
    e = parse("(x+1e-12)^2 - x^2 - 2*x*1e-12 - 1e-24")
    prog = program.compile_program(e)
    vd, _ = program.run_values(prog, 1.0, 1.0)
    vl, _ = program.run_values_extended(prog, 1.0, 1.0)
    assert abs(float(vl[-1])) <= abs(float(vd[-1])) + 1e-30


def test_node_cap():
    e = var("x")
    for _ in range(6):
        e = mul(add(e, const(1)), add(e, const(2)))
    with pytest.raises(ExpressionTooLargeError):
        program.compile_program(e, node_cap=10)
    program.compile_program(e)  # default cap is generous


def test_backend_name_reported():
    assert program.BACKEND in ("compiled", "pure")
