"""Reference webs used throughout the tests and shipped as spec files.

Each entry is (function texts, box) with a box free of singularities; the
webs cover every rank class the package can detect, plus the classical
maximum-rank Bol 5-web.
"""

from .expr import Box, SampleConfig
from .web import WebSpec, make_web

PARALLEL_3WEB = (("x", "y", "x+y"), (1, 2, 1, 2))
PARALLEL_4WEB = (("x", "y", "x+y", "x+2*y"), (1, 2, 1, 2))
RANK3_4WEB = (("x", "y", "x+y", "x*y"), (2, 3, 4, 5))
RANK2_4WEB = (("x", "y", "x+y", "x^2+y^2"), (2, 3, 4, 5))
RANK1_4WEB = (("x", "y", "(x-y)^2/x", "(x-y)^2/y"), (2, 3, 0.5, 1))
RANK0_4WEB = (("x", "y", "(x+y)*exp(x)", "x*y"), (1, 2, 1, 2))
RANK2_NONLIN_4WEB = (("x", "y", "x/y", "x*y*(x+y)"), (2, 3, 4, 5))
RANK1_NONLIN_4WEB = (("x", "y", "x*y^2/(x-y)^2", "x^2*y/(x-y)^2"), (2, 3, 0.5, 1))
BOL_5WEB = (("x", "y", "x/y", "(1-y)/(1-x)", "(x-x*y)/(y-x*y)"), (2, 3, 4, 5))

# constant basic invariant (a = 2) with nonvanishing curvature: not
# parallelizable, hence not linearizable either
CONSTANT_A_NONPAR_4WEB = (("x", "y", "(x+y-1)*exp(y)", "(x+y-2)*exp(y/2)"),
                          (1, 2, 1, 2))

ALL = {
    "parallel-3web": PARALLEL_3WEB,
    "parallel-4web": PARALLEL_4WEB,
    "rank3-4web": RANK3_4WEB,
    "rank2-4web": RANK2_4WEB,
    "rank1-4web": RANK1_4WEB,
    "rank0-4web": RANK0_4WEB,
    "rank2-nonlinearizable-4web": RANK2_NONLIN_4WEB,
    "rank1-nonlinearizable-4web": RANK1_NONLIN_4WEB,
    "bol-5web": BOL_5WEB,
    "constant-a-nonparallelizable-4web": CONSTANT_A_NONPAR_4WEB,
}


def load(name: str, samples: int = 24, tol: float = 1e-8, seed: int | None = None) -> WebSpec:
    funcs, box = ALL[name]
    box = Box(*box)
    cfg = SampleConfig(box=box, samples=samples, tol=tol,
                       **({} if seed is None else {"seed": seed}))
    return make_web(funcs, box, cfg)
