import pytest

from webrank import fixtures as FX


@pytest.fixture(scope="session")
def webs():
    """All named fixture webs, loaded once (tol 1e-8, 24 points)."""
    return {name: FX.load(name) for name in FX.ALL}


def random_rational_4web(rng, box=(2, 3, 4, 5)):
    """Seeded generator of valid rational 4-webs with coordinates first."""
    from fractions import Fraction

    from webrank.errors import WebrankError
    from webrank.web import basic_invariants, make_web

    coeffs = [Fraction(1, 2), Fraction(-1, 2), Fraction(1, 3), Fraction(-1, 3),
              Fraction(1, 4), Fraction(2, 3), Fraction(1), Fraction(-1, 4)]
    g3 = ["x+y+{q}*x*y", "x+y+{q}*x^2", "x*y+{q}*y^2", "x+{q}*y^2", "x^2+{q}*y^2"]
    g4 = ["x*y+{q}*x^2", "x*y*({q}+x)", "x^2+{q}*x*y", "y+{q}*x^2+x", "x*y+{q}*y"]
    while True:
        q3 = coeffs[rng.integers(0, len(coeffs))]
        q4 = coeffs[rng.integers(0, len(coeffs))]
        f3 = g3[rng.integers(0, len(g3))].format(q=f"({q3})")
        f4 = g4[rng.integers(0, len(g4))].format(q=f"({q4})")
        try:
            web = make_web(["x", "y", f3, f4], box)
            basic_invariants(web)
            return web
        except WebrankError:
            continue
