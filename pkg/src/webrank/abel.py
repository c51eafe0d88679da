"""Mechanized elimination of unknown functions from an additive relation.

A candidate relation  F_1(f_1) + ... + F_d(f_d) = const  is represented by
linear equations in the formal derivatives F_i^(k) with closed-form
coefficients.  Four rewriting rules drive the elimination:

  * differentiate       scalar equation -> 1-form equation,
  * wedge with df_j     1-form -> scalar (divides out dx ^ dy), kills every
                        term that carried a df_j factor,
  * divide by leading   normalizes a chosen coefficient to 1,
  * substitute          eliminates one derivative using another equation.

`abel_trace` runs the ladder divide / differentiate / wedge(df_j) until each
of the first d-1 unknowns is gone, leaving one linear ODE for the last
function; each pass removes the top derivative of the current unknown, so
the ladder terminates.  Division steps are guarded by sampled
non-vanishing; a vanishing leading coefficient stops the trace with a
recorded diagnostic instead of crashing.

The terminal equation holds identically on the plane while its unknown
depends only on f_d.  When the coefficient ratios fail to be functions of
f_d alone (recorded as the separability verdict), differentiating along the
leaves of f_d yields further equations; `split_terminal` builds that system
when the caller supplies the basis of transcendentals that certifies it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as ex
from .errors import (
    InapplicableRuleError,
    LeadingCoefficientError,
    PreconditionError,
)
from .expr import (
    Expression,
    add,
    differentiate,
    div,
    is_identically_zero,
    mul,
    neg,
    parse,
    sub,
    substitute,
    to_text,
)
from .web import WebSpec

__all__ = ["AbelEquation", "AbelTrace", "eliminate_step", "abel_trace",
           "verify_relation", "split_terminal", "render_equation",
           "annihilation_defect"]


@dataclass(frozen=True)
class AbelEquation:
    """Linear combination of formal derivatives F_i^(k), i 0-based.

    Scalar equations map (i, k) to a coefficient expression; 1-form
    equations map (i, k) to the (dx, dy) component pair.  At most one
    differential factor per term, by construction.
    """

    terms: dict
    kind: str  # "scalar" | "form"

    def orders(self, i: int):
        return sorted(k for (j, k) in self.terms if j == i)

    def functions(self):
        return sorted({j for (j, _) in self.terms})

    def is_empty(self) -> bool:
        return not self.terms


def _prune(terms: dict, cfg) -> dict:
    out = {}
    for key, val in terms.items():
        if isinstance(val, tuple):
            if all(v is ex.ZERO or is_identically_zero(v, cfg) for v in val):
                continue
        else:
            if val is ex.ZERO or is_identically_zero(val, cfg):
                continue
        out[key] = val
    return out


def seed_equation(web: WebSpec) -> AbelEquation:
    return AbelEquation({(i, 0): ex.ONE for i in range(web.d)}, "scalar")


def _differentiate_eq(eq: AbelEquation, web: WebSpec) -> AbelEquation:
    if eq.kind != "scalar":
        raise InapplicableRuleError("differentiate needs a scalar equation")
    grads = [(differentiate(f, "x"), differentiate(f, "y")) for f in web.functions]
    out: dict = {}

    def bump(key, pair):
        got = out.get(key, (ex.ZERO, ex.ZERO))
        out[key] = (add(got[0], pair[0]), add(got[1], pair[1]))

    for (i, k), c in eq.terms.items():
        bump((i, k), (differentiate(c, "x"), differentiate(c, "y")))
        bump((i, k + 1), (mul(c, grads[i][0]), mul(c, grads[i][1])))
    return AbelEquation(_prune(out, web.cfg), "form")


def _wedge_eq(eq: AbelEquation, j: int, web: WebSpec) -> AbelEquation:
    if eq.kind != "form":
        raise InapplicableRuleError("wedge needs a 1-form equation")
    fj = web.functions[j]
    A, B = differentiate(fj, "x"), differentiate(fj, "y")
    out = {}
    for key, (P, Q) in eq.terms.items():
        out[key] = sub(mul(P, B), mul(Q, A))
    return AbelEquation(_prune(out, web.cfg), "scalar")


def _divide_eq(eq: AbelEquation, coord, web: WebSpec) -> AbelEquation:
    if eq.kind != "scalar":
        raise InapplicableRuleError("divide needs a scalar equation")
    lead = eq.terms.get(coord)
    if lead is None:
        raise InapplicableRuleError(f"no term {coord} to divide by")
    if is_identically_zero(lead, web.cfg):
        raise LeadingCoefficientError(
            f"leading coefficient of F{coord[0] + 1}^({coord[1]}) vanishes: "
            f"{to_text(lead, max_nodes=60)}")
    out = {key: (ex.ONE if key == coord else div(c, lead))
           for key, c in eq.terms.items()}
    return AbelEquation(out, "scalar")


def _substitute_eq(eq: AbelEquation, source: AbelEquation, coord, web: WebSpec) -> AbelEquation:
    if eq.kind != "scalar" or source.kind != "scalar":
        raise InapplicableRuleError("substitute needs scalar equations")
    if coord not in eq.terms or coord not in source.terms:
        raise InapplicableRuleError(f"both equations must contain {coord}")
    if is_identically_zero(source.terms[coord], web.cfg):
        raise LeadingCoefficientError(f"cannot solve the source for {coord}")
    factor = div(eq.terms[coord], source.terms[coord])
    out = dict(eq.terms)
    for key, c in source.terms.items():
        got = out.get(key, ex.ZERO)
        out[key] = sub(got, mul(factor, c))
    return AbelEquation(_prune(out, web.cfg), "scalar")


def eliminate_step(eq: AbelEquation, rule: str, web: WebSpec, *,
                   j: int | None = None, coord=None,
                   source: AbelEquation | None = None) -> AbelEquation:
    """Apply one elimination rule.

    rule = "differentiate" | "wedge" (needs j) | "divide" (needs coord)
         | "substitute" (needs source and coord).  Indices are 0-based.
    """
    if rule == "differentiate":
        return _differentiate_eq(eq, web)
    if rule == "wedge":
        if j is None:
            raise InapplicableRuleError("wedge needs the function index j")
        return _wedge_eq(eq, j, web)
    if rule == "divide":
        if coord is None:
            raise InapplicableRuleError("divide needs the target (i, k)")
        return _divide_eq(eq, coord, web)
    if rule == "substitute":
        if source is None or coord is None:
            raise InapplicableRuleError("substitute needs source and (i, k)")
        return _substitute_eq(eq, source, coord, web)
    raise InapplicableRuleError(f"unknown rule {rule!r}")


@dataclass
class AbelTrace:
    """Full record of one elimination run."""

    steps: list = field(default_factory=list)   # (label, AbelEquation)
    terminal: AbelEquation | None = None
    terminal_index: int | None = None           # 0-based function index
    order: int | None = None
    separable: bool | None = None
    diagnostic: str | None = None

    def render(self) -> str:
        lines = [f"{label}: {render_equation(eq)}" for label, eq in self.steps]
        if self.diagnostic:
            lines.append(f"stopped: {self.diagnostic}")
        else:
            lines.append(f"terminal order: {self.order}")
            lines.append(f"separable: {self.separable}")
        return "\n".join(lines)


_MAX_PASSES = 9


def abel_trace(web: WebSpec, order=None) -> AbelTrace:
    """Eliminate the first d-1 unknown functions (in the given 0-based
    order; default input order) and return the trace with the terminal
    single-function equation."""
    d = web.d
    seq = list(order) if order is not None else list(range(d))
    if sorted(seq) != list(range(d)):
        raise PreconditionError(f"order must be a permutation of 0..{d - 1}")
    trace = AbelTrace()
    eq = seed_equation(web)
    trace.steps.append(("seed", eq))
    for j in seq[:-1]:
        passes = 0
        while any(i == j for (i, _) in eq.terms):
            if passes >= _MAX_PASSES:
                trace.diagnostic = f"elimination of F{j + 1} did not terminate"
                return trace
            passes += 1
            m = max(k for (i, k) in eq.terms if i == j)
            if eq.terms[(j, m)] is not ex.ONE:
                try:
                    eq = _divide_eq(eq, (j, m), web)
                except LeadingCoefficientError as err:
                    trace.diagnostic = str(err)
                    return trace
                trace.steps.append((f"divide by the F{j + 1}^({m}) coefficient", eq))
            form = _differentiate_eq(eq, web)
            trace.steps.append(("differentiate", form))
            eq = _wedge_eq(form, j, web)
            trace.steps.append((f"wedge with df{j + 1}", eq))
    last = seq[-1]
    stray = [i for (i, _) in eq.terms if i != last]
    if stray:
        trace.diagnostic = f"functions {sorted(set(stray))} survived elimination"
        return trace
    if eq.is_empty():
        trace.diagnostic = "terminal equation collapsed to 0 = 0"
        return trace
    trace.terminal = eq
    trace.terminal_index = last
    trace.order = max(k for (_, k) in eq.terms)
    trace.separable = _separable(eq, last, web)
    return trace


def _separable(eq: AbelEquation, j: int, web: WebSpec) -> bool:
    """True when every coefficient ratio is a function of f_j alone."""
    fj = web.functions[j]
    fx, fy = differentiate(fj, "x"), differentiate(fj, "y")
    m = max(k for (_, k) in eq.terms)
    lead = eq.terms[(j, m)]
    for (_, k), c in eq.terms.items():
        if k == m:
            continue
        r = div(c, lead)
        wedge = sub(mul(differentiate(r, "x"), fy), mul(differentiate(r, "y"), fx))
        if not is_identically_zero(wedge, web.cfg):
            return False
    return True


def split_terminal(trace: AbelTrace, web: WebSpec, basis) -> list:
    """Split a non-separable terminal equation into a system by leaf
    differentiation.

    `basis` is the caller-supplied list of transcendentals (expressions)
    certifying the split; it bounds the number of leaf derivatives taken.
    Each returned equation is reduced against the later, lower-order ones.
    """
    if trace.terminal is None:
        raise PreconditionError("trace has no terminal equation")
    if not basis:
        raise PreconditionError(
            "splitting needs an explicit transcendental basis")
    j = trace.terminal_index
    fj = web.functions[j]
    fx, fy = differentiate(fj, "x"), differentiate(fj, "y")

    def leaf(e: Expression) -> Expression:
        # derivative along the leaves of f_j (annihilates any gamma(f_j))
        return sub(mul(fy, differentiate(e, "x")), mul(fx, differentiate(e, "y")))

    system = []
    eq = trace.terminal
    for _ in range(len(basis) + 1):
        m = max(k for (_, k) in eq.terms)
        eq = _divide_eq(eq, (j, m), web)
        system.append(eq)
        nxt = _prune({key: leaf(c) for key, c in eq.terms.items()}, web.cfg)
        if not nxt:
            break
        eq = AbelEquation(nxt, "scalar")
    # back-substitute: kill each equation's trace of the later leading terms
    for hi in range(len(system)):
        for lo in range(hi + 1, len(system)):
            lead = max(k for (_, k) in system[lo].terms)
            if (j, lead) in system[hi].terms:
                system[hi] = _substitute_eq(system[hi], system[lo], (j, lead), web)
    return system


# ---------------------------------------------------------------------------
# numeric verification of candidate relations

def verify_relation(web: WebSpec, relation) -> bool:
    """Check F_1(f_1) + ... + F_d(f_d) = const numerically.

    `relation` lists d expressions in the single variable t (strings are
    parsed).  True iff the sampled standard deviation of the sum is at most
    tol * (1 + |mean|) and both partial derivatives of the sum vanish in the
    sampled sense.
    """
    import numpy as np

    if len(relation) != web.d:
        raise PreconditionError(f"need {web.d} component functions")
    comps = [f if isinstance(f, Expression) else parse(f, ("t",)) for f in relation]
    total = ex.add_many(substitute(F, {"t": f})
                        for F, f in zip(comps, web.functions))
    if total is ex.ZERO or total.is_constant:
        pass  # still run the sampled test below for domain checking
    _, values = ex.sample_points(total, web.cfg)
    mean = float(np.mean(values))
    std = float(np.std(values))
    if std > web.cfg.tol * (1.0 + abs(mean)):
        return False
    return (is_identically_zero(differentiate(total, "x"), web.cfg)
            and is_identically_zero(differentiate(total, "y"), web.cfg))


def annihilation_defect(eq: AbelEquation, web: WebSpec, candidate) -> Expression:
    """Plug a candidate F(t) into a single-function equation.

    Returns sum_k c_k * F^(k)(f_j); the candidate solves the equation iff
    this expression is identically zero (sampled).
    """
    funcs = eq.functions()
    if len(funcs) != 1:
        raise PreconditionError("annihilation test needs a single-function equation")
    j = funcs[0]
    F = candidate if isinstance(candidate, Expression) else parse(candidate, ("t",))
    fj = web.functions[j]
    derivs = {0: F}
    m = max(k for (_, k) in eq.terms)
    for k in range(1, m + 1):
        derivs[k] = differentiate(derivs[k - 1], "t")
    return ex.add_many(mul(c, substitute(derivs[k], {"t": fj}))
                       for (_, k), c in sorted(eq.terms.items()))


# ---------------------------------------------------------------------------
# rendering (used by the CLI trace output and the golden tests)

def _fname(i: int, k: int) -> str:
    primes = "'" * k if k <= 3 else f"^({k})"
    return f"F{i + 1}{primes}"


def render_equation(eq: AbelEquation) -> str:
    bits = []
    for (i, k) in sorted(eq.terms):
        val = eq.terms[(i, k)]
        if eq.kind == "scalar":
            coef = to_text(val)
            bits.append(f"({coef})*{_fname(i, k)}" if coef != "1" else _fname(i, k))
        else:
            P, Q = val
            bits.append(f"[({to_text(P)})dx+({to_text(Q)})dy]*{_fname(i, k)}")
    return " + ".join(bits) + " = 0" if bits else "0 = 0"
