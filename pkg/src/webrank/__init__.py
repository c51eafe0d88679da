"""webrank: differential invariants and rank analysis of planar d-webs.

A planar d-web (d = 3, 4, 5) is given here by d closed-form web functions on
a sample box.  The package computes the web's curvature and basic invariants,
classifies the rank of 4-webs, tests maximum rank of 5-webs, mechanizes
Abel's elimination method, constructs the canonical projective structure of
a 4-web and decides geodesicity and linearizability via the Liouville
tensor.  All vanishing conditions are sampled probabilistic identity tests
over exact symbolic expressions.
"""

from .errors import WebrankError
from .expr import (
    Box,
    Expression,
    SampleConfig,
    differentiate,
    evaluate,
    is_identically_zero,
    parse,
    substitute,
    to_text,
)
from .web import (
    ChartedWeb,
    WebEquation,
    WebSpec,
    basic_invariants,
    curvature_K,
    curvature_from_web_equation,
    curvature_function,
    is_parallelizable,
    make_web,
    max_rank_bound,
    subweb_curvature,
)
from .covariant import WeightedField, commutation_defect, covariant_derivative, jet_table
from .obstruction import kappa_reduce_4web, kappa_reduce_5web
from .rank import RankReport, c_explicit, classify_rank4, g_matrix, j_invariants, max_rank_5web
from .abel import AbelEquation, AbelTrace, abel_trace, eliminate_step, verify_relation
from .projective import (
    LiouvilleData,
    ProjectiveRep,
    geodesic_test,
    linearizability_verdict,
    liouville,
    liouville_via_ricci,
    projective_rep,
)

__version__ = "0.1.0"
