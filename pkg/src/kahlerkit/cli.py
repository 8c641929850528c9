"""Command-line front end.

Every subcommand is translated into a scenario document, validated against
:data:`SCENARIO_SCHEMA` and executed by :func:`execute`; ``run FILE`` executes
a scenario document directly.  Reports are JSON with sorted keys.

Exit codes: 0 success, 2 precondition violation, 3 verdict failure
(``--expect-einstein``), 4 schema violation, 5 non-finite float output.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .jsonio import SCHEMA_VERSION, dumps, render_number
from .kahler import (
    CONVENTIONS,
    bochner_normalize,
    classify_terms,
    diastasis_from_potential,
    einstein_check,
    is_bochner_form,
    is_diastasis,
    pullback_potential,
    volume_factor_check,
)
from .models import MODEL_NAMES, get_model
from .obstruction import (
    BUILTIN_EMBEDDINGS,
    ObstructionError,
    builtin_embedding,
    embed_submanifold,
    torus_b2_witness,
    verify_eqforms,
    volume_probe,
)
from .polarization import (
    bergman_diastasis,
    check_condition_C,
    condition_D_report,
    gram_matrix,
    kodaira_map,
    monomial_basis,
    product_basis,
)
from .series import BiSeries, HoloMap

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PRECONDITION, EXIT_VERDICT, EXIT_SCHEMA, EXIT_NONFINITE = 0, 2, 3, 4, 5

OPS = (
    "expand",
    "diastasis",
    "bochner",
    "einstein",
    "factor-check",
    "pullback",
    "model",
    "bergman",
    "conditions",
    "probe",
    "torus",
)

_series_or_path = {"oneOf": [{"type": "string"}, {"type": "object"}]}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["op"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "op": {"enum": list(OPS)},
        "model": {"enum": list(MODEL_NAMES)},
        "dim": {"type": "integer", "minimum": 1},
        "r": {"type": "integer", "minimum": 1},
        "s": {"type": "integer", "minimum": 1},
        "series": _series_or_path,
        "embedding": _series_or_path,
        "function": {"enum": ["none", "log1p", "exp"]},
        "order": {"type": "integer", "minimum": 1, "maximum": 40},
        "mode": {"enum": ["exact", "float"]},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "lambda": {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]},
        "n": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "kmax": {"type": "integer", "minimum": 1},
        "factors": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "samples": {"type": "integer", "minimum": 4},
        "seed": {"type": "integer", "minimum": 0},
        "projection": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "expect_einstein": {"type": "boolean"},
        "lattice": {"type": "array", "items": {"type": "array", "items": {"type": ["integer", "string"]}}},
    },
}


class PreconditionError(Exception):
    pass


class VerdictFailure(Exception):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# ---- input resolution ------------------------------------------------------

def _load_doc(value, base: Path | None):
    if isinstance(value, dict):
        return value
    path = Path(value)
    if base is not None and not path.is_absolute():
        path = base / path
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"cannot read {path}: {exc}") from exc


def _mode_convert(s: BiSeries, sc: dict) -> BiSeries:
    if sc.get("mode", "exact") == "float":
        return s.to_float(sc.get("tol"))
    return s


def _model(sc: dict):
    if "model" not in sc:
        raise PreconditionError("this operation needs 'model' or 'series'")
    return get_model(sc["model"], sc.get("dim"), sc.get("order", 8), sc.get("r"), sc.get("s"))


def _unwrap(doc: dict, key: str) -> dict:
    # accept a report of a previous run in place of the bare document
    if "result" in doc and isinstance(doc["result"], dict) and key in doc["result"]:
        return doc["result"][key]
    return doc


def _series(sc: dict, base) -> BiSeries:
    if "series" in sc:
        doc = _unwrap(_load_doc(sc["series"], base), "series")
        try:
            s = BiSeries.from_dict(doc)
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed series document: missing {exc}") from exc
        if "order" in sc:
            s = s.with_order(sc["order"])
    else:
        s = _model(sc).series(sc.get("order", 8))
    return _mode_convert(s, sc)


def _embedding(sc: dict, base, dim_out: int) -> HoloMap:
    emb = sc.get("embedding")
    if emb is None:
        raise PreconditionError("this operation needs 'embedding'")
    order = sc.get("order", 8)
    if isinstance(emb, str) and emb in BUILTIN_EMBEDDINGS:
        m = builtin_embedding(emb, dim_out, order)
    else:
        try:
            m = HoloMap.from_dict(_load_doc(emb, base))
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"malformed embedding document: missing {exc}") from exc
    return m.to_float() if sc.get("mode") == "float" else m


def _lambda(sc: dict):
    v = sc.get("lambda")
    if v is None:
        return None
    return Fraction(v) if isinstance(v, str) or float(v).is_integer() else float(v)


# ---- operations ----------------------------------------------------------

def _op_expand(sc, base):
    s = _series(sc, base)
    fn = sc.get("function", "none")
    if fn == "log1p":
        s = s.log1p()
    elif fn == "exp":
        s = s.exp()
    return {"function": fn, "series": s.to_dict()}


def _op_diastasis(sc, base):
    s = _series(sc, base)
    d = diastasis_from_potential(s)
    return {"input_is_diastasis": is_diastasis(s), "diastasis": d.to_dict()}


def _op_bochner(sc, base):
    s = _series(sc, base)
    if not is_diastasis(s):
        s = diastasis_from_potential(s)
        log.info("input was not a diastasis; pure terms removed first")
    res = bochner_normalize(s)
    return {
        "normal_form": res.normal_form.to_dict(),
        "is_bochner_form": is_bochner_form(res.normal_form),
        "change": res.change.to_dict(),
        "inverse": res.inverse.to_dict(),
        "unitary_residual_flag": res.unitary_residual_flag,
        "note": "Bochner coordinates are unique up to a unitary linear change",
    }


def _op_einstein(sc, base):
    s = _series(sc, base)
    rep = einstein_check(s)
    out = {"einstein": rep.to_dict()}
    if sc.get("expect_einstein") and not rep.is_einstein_to_order:
        raise VerdictFailure("metric is not Kahler-Einstein to the checked order", out)
    return out


def _op_factor_check(sc, base):
    s = _series(sc, base)
    lam = _lambda(sc)
    if lam is None:
        rep = einstein_check(s)
        if not rep.is_einstein_to_order:
            raise PreconditionError("metric is not Kahler-Einstein; pass 'lambda' to force a value")
        lam = rep.lam
    resid = volume_factor_check(s, lam)
    return {
        "lambda": render_number(lam),
        "input_in_bochner_form": is_bochner_form(s),
        "residual_is_zero": resid.is_zero(),
        "residual_max_abs": resid.max_abs(),
        "residual_terms": classify_terms(resid),
        "residual": resid.to_dict(),
    }


def _op_pullback(sc, base):
    if "model" in sc:
        model = _model(sc)
        emb = _embedding(sc, base, model.dim)
        sub = embed_submanifold(model, emb, sc.get("order"))
        out = sub.to_dict()
        out["induced"] = _mode_convert(sub.induced, sc).to_dict()
        if sc.get("expect_einstein") and sub.lam is None:
            raise VerdictFailure("induced metric is not Kahler-Einstein to the checked order", out)
        return out
    s = _series(sc, base)
    emb = _embedding(sc, base, s.dim)
    d = pullback_potential(s, emb)
    return {"induced_is_diastasis": is_diastasis(d), "induced": d.to_dict()}


def _op_model(sc, base):
    model = _model(sc)
    return {"model": model.to_dict(), "series": _mode_convert(model.series(sc.get("order", 8)), sc).to_dict()}


def _basis(sc):
    k = sc.get("k", 1)
    if "factors" in sc:
        return product_basis(sc["factors"], k)
    return monomial_basis(sc.get("n", 1), k)


def _op_bergman(sc, base):
    basis = _basis(sc)
    order = sc.get("order", 6)
    dk = bergman_diastasis(kodaira_map(basis), order)
    fd = basis.factor_dims
    target = BiSeries.zero(basis.n, order)
    off = 0
    for d in fd:
        target = target + BiSeries.norm_squared(basis.n, order, indices=range(off, off + d)).log1p()
        off += d
    resid = dk - target.scale(basis.k)
    return {
        "factor_dims": list(fd),
        "k": basis.k,
        "d_k": basis.d_k,
        "bergman_diastasis": dk.to_dict(),
        "equals_k_times_diastasis": resid.is_zero(),
        "residual_max_abs": resid.max_abs(),
    }


def _op_conditions(sc, base):
    kmax = sc.get("kmax", 4)
    n = sc.get("n", 1)
    per_k = {}
    for k in range(1, kmax + 1):
        basis = product_basis(sc["factors"], k) if "factors" in sc else monomial_basis(n, k)
        g = gram_matrix(basis, method="quadrature")
        per_k[str(k)] = {
            "d_k": basis.d_k,
            "condition_C": check_condition_C(basis),
            "gram_residual": float(np.max(np.abs(g - np.eye(len(g))))),
        }
    d_rep = condition_D_report(_basis(sc), kmax)
    return {
        "per_k": per_k,
        "condition_D": {str(k): v for k, v in d_rep["per_k"].items()},
        "condition_D_first_violation": {str(k): v for k, v in d_rep["first_violation"].items()},
    }


def _op_probe(sc, base):
    model = _model(sc)
    emb = _embedding(sc, base, model.dim)
    sub = embed_submanifold(model, emb, sc.get("order"))
    kwargs = {}
    if "radii" in sc:
        kwargs["radii"] = sc["radii"]
    rep = volume_probe(
        sub,
        projection_coords=sc.get("projection"),
        samples=sc.get("samples", 100_000),
        seed=sc.get("seed", 0),
        weight_lambda=_lambda(sc),
        **kwargs,
    )
    out = {"submanifold": sub.to_dict(), "probe": rep.to_dict()}
    if sub.lam is not None:
        rng = np.random.default_rng(sc.get("seed", 0))
        pts = (rng.uniform(-1, 1, (20, sub.m)) + 1j * rng.uniform(-1, 1, (20, sub.m))) * 0.5
        try:
            out["eqforms_residual"] = verify_eqforms(sub, pts, sc.get("projection"))
        except ObstructionError as exc:
            out["eqforms_residual"] = None
            out["eqforms_note"] = str(exc)
    return out


def _op_torus(sc, base):
    lattice = sc.get("lattice")
    return {"torus": torus_b2_witness(sc.get("dim", 1), lattice)}


_DISPATCH = {
    "expand": _op_expand,
    "diastasis": _op_diastasis,
    "bochner": _op_bochner,
    "einstein": _op_einstein,
    "factor-check": _op_factor_check,
    "pullback": _op_pullback,
    "model": _op_model,
    "bergman": _op_bergman,
    "conditions": _op_conditions,
    "probe": _op_probe,
    "torus": _op_torus,
}


# ---- report assembly -------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return render_number(x)


def _nonfinite(x) -> bool:
    if isinstance(x, dict):
        if set(x) >= {"re", "im"} and all(isinstance(x[c], str) for c in ("re", "im")):
            return not all(math.isfinite(float(x[c])) for c in ("re", "im"))
        return any(_nonfinite(v) for v in x.values())
    if isinstance(x, list):
        return any(_nonfinite(v) for v in x)
    return isinstance(x, float) and not math.isfinite(x)


def build_report(sc: dict, result: dict, timestamp: bool) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "op": sc["op"],
        "scenario": sc,
        "settings": {"mode": sc.get("mode", "exact"), "tol": sc.get("tol", 1e-12)},
        "conventions": dict(CONVENTIONS),
        "result": _jsonable(result),
    }
    if timestamp:
        doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    return doc


def execute(sc: dict, base: Path | None = None, timestamp: bool = False) -> tuple[dict | None, int, str]:
    """Validate and run a scenario; return ``(report, exit_code, message)``."""
    try:
        jsonschema.validate(sc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        return None, EXIT_SCHEMA, f"schema violation: {exc.message}"
    code, msg = EXIT_OK, ""
    try:
        result = _DISPATCH[sc["op"]](sc, base)
    except VerdictFailure as exc:
        result, code, msg = exc.report, EXIT_VERDICT, str(exc)
    except (PreconditionError, ValueError, ZeroDivisionError) as exc:
        return None, EXIT_PRECONDITION, f"precondition violated: {exc}"
    doc = build_report(sc, result, timestamp)
    if _nonfinite(doc["result"]):
        return None, EXIT_NONFINITE, "non-finite value in float output"
    return doc, code, msg


# ---- argument parsing ------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--order", type=int)
    p.add_argument("--mode", choices=["exact", "float"])
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--expect-einstein", action="store_true", help="exit 3 if the Einstein check fails")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-identical reports")
    p.add_argument("-v", "--verbose", action="store_true")


def _source(p):
    p.add_argument("--model", choices=MODEL_NAMES)
    p.add_argument("--dim", type=int)
    p.add_argument("-r", type=int)
    p.add_argument("-s", type=int)
    p.add_argument("--series", help="BiSeries JSON file")


def _radii(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kahlerkit", description="Diastasis and Kahler-Einstein computations")
    parser.add_argument("--version", action="version", version=f"kahlerkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expand", help="truncated expansion of a series, optionally through log1p or exp")
    _source(p)
    p.add_argument("--function", choices=["none", "log1p", "exp"])
    for name, help_ in [
        ("diastasis", "remove pure terms from a potential"),
        ("bochner", "Bochner coordinates of a diastasis"),
        ("einstein", "Kahler-Einstein check and Einstein constant"),
    ]:
        p = sub.add_parser(name, help=help_)
        _source(p)
    p = sub.add_parser("factor-check", help="residual log det g + (lambda/2) D")
    _source(p)
    p.add_argument("--lambda", dest="lam")
    p = sub.add_parser("pullback", help="pull back a diastasis along an embedding")
    _source(p)
    p.add_argument("--embedding", required=True, help=f"file or one of {', '.join(BUILTIN_EMBEDDINGS)}")
    p = sub.add_parser("model", help="model catalog entry and its diastasis")
    p.add_argument("name", choices=MODEL_NAMES)
    p.add_argument("--dim", type=int)
    p.add_argument("-r", type=int)
    p.add_argument("-s", type=int)
    p = sub.add_parser("bergman", help="Bergman diastasis of the Kodaira map")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--factors", help="comma-separated factor dimensions for a product of projective spaces")
    p = sub.add_parser("conditions", help="conditions (C) and (D) with quadrature Gram residuals")
    p.add_argument("--n", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--factors")
    p = sub.add_parser("probe", help="volume comparison over a radius ladder")
    p.add_argument("--model", choices=MODEL_NAMES, required=True)
    p.add_argument("--dim", type=int)
    p.add_argument("-r", type=int)
    p.add_argument("-s", type=int)
    p.add_argument("--embedding", "--embedding-file", dest="embedding", required=True)
    p.add_argument("--radii", type=_radii, help="comma-separated radii")
    p.add_argument("--samples", type=int)
    p.add_argument("--projection", help="comma-separated ambient coordinate indices")
    p.add_argument("--lambda", dest="lam", help="override the weight constant")
    p.add_argument("--csv", help="also write the per-radius rows as CSV")
    p = sub.add_parser("torus", help="flat torus witness for the infinite-volume hypothesis")
    p.add_argument("--dim", type=int)
    p = sub.add_parser("run", help="execute a scenario JSON file")
    p.add_argument("scenario")
    for p in sub.choices.values():
        _common(p)
    return parser


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def scenario_from_args(args) -> dict:
    sc = {"op": args.command}
    simple = {
        "model": "model",
        "dim": "dim",
        "r": "r",
        "s": "s",
        "series": "series",
        "embedding": "embedding",
        "function": "function",
        "order": "order",
        "mode": "mode",
        "tol": "tol",
        "n": "n",
        "k": "k",
        "kmax": "kmax",
        "radii": "radii",
        "samples": "samples",
        "seed": "seed",
        "lam": "lambda",
    }
    for attr, key in simple.items():
        v = getattr(args, attr, None)
        if v is not None:
            sc[key] = v
    if args.command == "model":
        sc["model"] = args.name
    if getattr(args, "factors", None):
        sc["factors"] = _ints(args.factors)
    if getattr(args, "projection", None):
        sc["projection"] = _ints(args.projection)
    if isinstance(sc.get("lambda"), str):
        try:
            sc["lambda"] = int(sc["lambda"])
        except ValueError:
            if "/" not in sc["lambda"]:
                sc["lambda"] = float(sc["lambda"])
    if args.expect_einstein:
        sc["expect_einstein"] = True
    return sc


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    base = None
    if args.command == "run":
        path = Path(args.scenario)
        try:
            sc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read scenario: {exc}", file=sys.stderr)
            return EXIT_SCHEMA
        if not isinstance(sc, dict):
            print("schema violation: scenario must be an object", file=sys.stderr)
            return EXIT_SCHEMA
        base = path.parent
        # command-line flags override the file
        for key, attr in [("order", "order"), ("mode", "mode"), ("tol", "tol"), ("seed", "seed")]:
            if getattr(args, attr) is not None:
                sc[key] = getattr(args, attr)
        if args.expect_einstein:
            sc["expect_einstein"] = True
    else:
        sc = scenario_from_args(args)
    doc, code, msg = execute(sc, base, timestamp=not args.no_timestamp)
    if msg:
        print(msg, file=sys.stderr)
    if doc is None:
        return code
    text = dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    csv_path = getattr(args, "csv", None)
    if csv_path and "probe" in doc["result"]:
        Path(csv_path).write_text(_rows_csv(doc["result"]["probe"]["rows"]))
    return code


def _rows_csv(rows) -> str:
    cols = list(rows[0])
    lines = [",".join(cols)] + [",".join("" if r[c] is None else str(r[c]) for c in cols) for r in rows]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.exit(main())
