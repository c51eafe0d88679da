"""File-driven front end: load web spec files, run analyses, emit reports.

Spec file grammar (line oriented, # comments):

    name: rank3 demo            # optional title
    function: x                 # one line per web function, in order
    function: y
    function: x+y
    function: x*y
    box: 2 3 4 5                # xmin xmax ymin ymax
    seed: 7                     # optional SampleConfig overrides
    samples: 24
    tol: 1e-8
    relation: t; t; -t; 0       # optional candidate relation, d expressions
                                # in the variable t separated by ';'

Reports are JSON with sorted keys, so byte-identical runs are reproducible
for a fixed (input, seed, version).  Exit status: 0 definitive, 1 input or
usage error, 2 indeterminate (sampling inconsistency).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from . import expr as ex
from .abel import abel_trace, render_equation, verify_relation
from .errors import IndeterminateError, SpecFileError, WebrankError
from .expr import Box, SampleConfig, evaluate, parse, to_text, zero_report
from .projective import geodesic_test, linearizability_verdict
from .rank import classify_rank4, max_rank_5web
from .web import (
    ChartedWeb,
    WebSpec,
    basic_invariants,
    curvature_K,
    curvature_function,
    is_parallelizable,
    make_web,
    max_rank_bound,
)

COMMANDS = ("analyze", "curvature", "invariants", "rank", "abel",
            "geodesic", "linearizable", "verify-relation")


def load_webspec(path: str, seed=None, samples=None, tol=None):
    """Parse and validate a web spec file.

    Returns (WebSpec, name, relations); command-line overrides win over the
    file's own SampleConfig fields.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise SpecFileError(f"cannot read {path}: {err}")
    name = os.path.basename(path)
    functions: list = []
    relations: list = []
    box = None
    overrides = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line:
            key, _, value = line.partition(":")
        else:
            key, _, value = line.partition(" ")
        key, value = key.strip(), value.strip()
        if not value:
            raise SpecFileError(f"missing value for {key!r}", lineno)
        try:
            if key == "name":
                name = value
            elif key == "function":
                functions.append(parse(value))
            elif key == "box":
                parts = [float(p) for p in value.replace(",", " ").split()]
                if len(parts) != 4:
                    raise SpecFileError("box needs 4 numbers", lineno)
                box = Box(*parts)
            elif key == "seed":
                overrides["seed"] = int(value)
            elif key == "samples":
                overrides["samples"] = int(value)
            elif key == "tol":
                overrides["tol"] = float(value)
            elif key == "relation":
                comps = [p.strip() for p in value.split(";")]
                relations.append([parse(c, ("t",)) for c in comps])
            else:
                raise SpecFileError(f"unknown key {key!r}", lineno)
        except WebrankError:
            raise
        except ValueError as err:
            raise SpecFileError(str(err), lineno)
    if box is None:
        raise SpecFileError("spec file has no box")
    if not 3 <= len(functions) <= 5:
        raise SpecFileError(f"need 3 to 5 functions, found {len(functions)}")
    if seed is not None:
        overrides["seed"] = seed
    elif "seed" not in overrides and os.environ.get("WEBRANK_SEED"):
        overrides["seed"] = int(os.environ["WEBRANK_SEED"])
    if samples is not None:
        overrides["samples"] = samples
    if tol is not None:
        overrides["tol"] = tol
    cfg = SampleConfig(box=box, **overrides)
    web = make_web(functions, box, cfg)
    for rel in relations:
        if len(rel) != web.d:
            raise SpecFileError(
                f"relation needs {web.d} components, found {len(rel)}")
    return web, name, relations


def _center(web: WebSpec):
    b = web.box
    return ((b.xmin + b.xmax) / 2.0, (b.ymin + b.ymax) / 2.0)


def _zero_block(e, cfg):
    verdict, worst = zero_report(e, cfg)
    return {"identically_zero": verdict, "max_scaled_residual": worst}


def _analysis_curvature(web: WebSpec):
    K = curvature_K(web)
    out = {"K_subweb_123": _zero_block(K, web.cfg)}
    out["K_subweb_123"]["value_at_center"] = evaluate(K, _center(web))
    if web.d in (4, 5):
        cf = curvature_function(web)
        out["curvature_function"] = _zero_block(cf, web.cfg)
        out["curvature_function"]["value_at_center"] = evaluate(cf, _center(web))
    return out


def _analysis_invariants(web: WebSpec):
    cw = ChartedWeb(web)
    inv = basic_invariants(cw)
    out = {"parallelizable": is_parallelizable(web), "basic_invariants": []}
    for i, a in enumerate(inv):
        out["basic_invariants"].append({
            "index": i + 1,
            "value_at_center": evaluate(a, _center(web)),
            "constant": bool(ex.is_identically_zero(ex.differentiate(a, "x"), web.cfg)
                             and ex.is_identically_zero(ex.differentiate(a, "y"), web.cfg)),
        })
    return out


def _analysis_rank(web: WebSpec):
    if web.d == 3:
        flat = ex.is_identically_zero(curvature_K(web), web.cfg)
        return {"verdict": 1 if flat else 0,
                "criterion": "3-web: rank 1 iff the curvature vanishes",
                "bound": max_rank_bound(3)}
    if web.d == 4:
        rep = classify_rank4(web)
    else:
        rep = max_rank_5web(web)
    out = rep.as_dict()
    out["bound"] = max_rank_bound(web.d)
    return out


def _analysis_abel(web: WebSpec, order=None):
    trace = abel_trace(web, order=order)
    out = {
        "steps": [f"{label}: {render_equation(eq)}" for label, eq in trace.steps],
        "diagnostic": trace.diagnostic,
    }
    if trace.terminal is not None:
        out["terminal"] = render_equation(trace.terminal)
        out["terminal_function"] = trace.terminal_index + 1
        out["order"] = trace.order
        out["separable"] = trace.separable
    return out


def _analysis_geodesic(web: WebSpec):
    if web.d == 4:
        return {"geodesic": True,
                "note": "every 4-web is geodesic for its canonical projective structure"}
    return {"geodesic": geodesic_test(web)}


def _analysis_linearizable(web: WebSpec):
    return {"verdict": linearizability_verdict(web)}


def _analysis_verify_relation(web: WebSpec, relations):
    out = []
    for rel in relations:
        out.append({
            "components": [to_text(F) for F in rel],
            "verified": verify_relation(web, rel),
        })
    return {"relations": out}


def run(command: str, web: WebSpec, name: str, relations, order=None) -> dict:
    """Dispatch one command; `analyze` runs everything applicable to d."""
    analyses: dict = {}
    status = 0

    def attempt(key, func, *args, **kw):
        nonlocal status
        try:
            analyses[key] = func(*args, **kw)
        except IndeterminateError as err:
            analyses[key] = {"error": str(err), "indeterminate": True}
            status = max(status, 2)
        except WebrankError as err:
            analyses[key] = {"error": str(err)}
            status = max(status, 1)

    if command in ("curvature", "analyze"):
        attempt("curvature", _analysis_curvature, web)
    if command in ("invariants", "analyze") and (web.d >= 4 or command == "invariants"):
        attempt("invariants", _analysis_invariants, web)
    if command in ("rank", "analyze"):
        attempt("rank", _analysis_rank, web)
    if command in ("abel", "analyze"):
        attempt("abel", _analysis_abel, web, order)
    if command in ("geodesic", "analyze") and (web.d >= 5 or command == "geodesic"):
        attempt("geodesic", _analysis_geodesic, web)
    if command in ("linearizable", "analyze") and (web.d >= 4 or command == "linearizable"):
        attempt("linearizable", _analysis_linearizable, web)
    if command == "verify-relation" or (command == "analyze" and relations):
        attempt("verify_relation", _analysis_verify_relation, web, relations)
    return analyses, status


def build_report(path, web, name, analyses) -> dict:
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return {
        "tool": {"name": "webrank", "version": __version__},
        "input": {
            "path": os.path.basename(path),
            "sha256": digest,
            "name": name,
            "functions": [to_text(f) for f in web.functions],
        },
        "config": {
            "box": list(web.box.as_tuple()),
            "samples": web.cfg.samples,
            "tol": web.cfg.tol,
            "seed": web.cfg.seed,
        },
        "analyses": analyses,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="webrank",
        description="differential invariants and rank analysis of planar webs")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("specfile")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--samples", type=int, default=None)
    ap.add_argument("--tol", type=float, default=None)
    ap.add_argument("--order", default=None,
                    help="comma-separated 1-based elimination order for abel")
    ap.add_argument("--out", default=None, help="write the JSON report here")
    args = ap.parse_args(argv)

    try:
        web, name, relations = load_webspec(
            args.specfile, seed=args.seed, samples=args.samples, tol=args.tol)
        order = None
        if args.order is not None:
            order = tuple(int(p) - 1 for p in args.order.split(","))
        if args.command == "verify-relation" and not relations:
            print("error: the spec file has no candidate relations", file=sys.stderr)
            return 1
        analyses, status = run(args.command, web, name, relations, order=order)
    except WebrankError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    report = build_report(args.specfile, web, name, analyses)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
