"""Canonical JSON artifacts: schemas, deterministic writing, round-trips.

Every file format here follows two conventions: complex numbers are
always two-element [re, im] arrays, and floats are rendered with 17
significant digits, so rewriting the same data is byte-identical.
Non-finite floats (the NaN route-discrepancy entries at stencil-less
grid points, an out-of-range decay order) serialize as null.

Validation reports are itemized: every complaint carries the JSON
pointer of the offending element, so a batch caller can surface all
problems in one pass instead of fixing them one at a time.
"""

from __future__ import annotations

import json
import math

import numpy as np
from jsonschema import Draft202012Validator

from .contour import Contour, build_contour
from .errors import ProblemValidationError
from .problem import SingularProblem

_COMPLEX = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}
_COMPLEX_LIST = {"type": "array", "items": _COMPLEX}
_NUMBER_OR_NULL = {"type": ["number", "null"]}

PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["a", "nu", "A", "T", "q"],
    "additionalProperties": False,
    "properties": {
        "a": {"type": "number", "exclusiveMinimum": 0},
        "nu": _COMPLEX,
        "A": {"type": "array", "items": _COMPLEX, "minItems": 4,
              "maxItems": 4},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "q": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["type"],
                    "additionalProperties": False,
                    "properties": {"type": {"const": "zero"}},
                },
                {
                    "type": "object",
                    "required": ["type", "center", "width",
                                 "amplitude_re", "amplitude_im"],
                    "additionalProperties": False,
                    "properties": {
                        "type": {"const": "gaussian_bump"},
                        "center": {"type": "number"},
                        "width": {"type": "number", "exclusiveMinimum": 0},
                        "amplitude_re": {"type": "number"},
                        "amplitude_im": {"type": "number"},
                    },
                },
                {
                    "type": "object",
                    "required": ["type", "x", "re", "im"],
                    "additionalProperties": False,
                    "properties": {
                        "type": {"const": "grid"},
                        "x": {"type": "array", "minItems": 2,
                              "items": {"type": "number"}},
                        "re": {"type": "array",
                               "items": {"type": "number"}},
                        "im": {"type": "array",
                               "items": {"type": "number"}},
                    },
                },
            ],
        },
    },
}

WEYL_SCHEMA = {
    "type": "object",
    "required": ["contour", "nodes_lambda", "weights", "M", "model"],
    "additionalProperties": False,
    "properties": {
        "contour": {
            "type": "object",
            "required": ["h", "s_max", "N"],
            "additionalProperties": False,
            "properties": {
                "h": {"type": "number", "exclusiveMinimum": 0},
                "s_max": {"type": "number", "exclusiveMinimum": 0},
                "N": {"type": "integer", "minimum": 8},
            },
        },
        "nodes_lambda": _COMPLEX_LIST,
        "weights": _COMPLEX_LIST,
        "M": _COMPLEX_LIST,
        "model": {"oneOf": [{"type": "null"}, PROBLEM_SCHEMA]},
    },
}

RECOVERED_SCHEMA = {
    "type": "object",
    "required": ["x", "q_hat", "epsilon0", "route_discrepancy",
                 "s_condition_min", "mhat_decay_order"],
    "additionalProperties": False,
    "properties": {
        "x": {"type": "array", "items": {"type": "number"}},
        "q_hat": _COMPLEX_LIST,
        "epsilon0": _COMPLEX_LIST,
        "route_discrepancy": {"type": "array", "items": _NUMBER_OR_NULL},
        "s_condition_min": {"type": "number"},
        "mhat_decay_order": _NUMBER_OR_NULL,
    },
}

SPECTRUM_SCHEMA = {
    "type": "object",
    "required": ["theta_plus", "theta_minus", "eigenvalues", "real_zeros"],
    "additionalProperties": False,
    "properties": {
        "theta_plus": _COMPLEX,
        "theta_minus": _COMPLEX,
        "eigenvalues": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["k", "rho", "lambda", "beta", "residual"],
                "additionalProperties": False,
                "properties": {
                    "k": {"type": "integer"},
                    "rho": _COMPLEX,
                    "lambda": _COMPLEX,
                    "beta": _COMPLEX,
                    "residual": {"type": "number"},
                },
            },
        },
        "real_zeros": _COMPLEX_LIST,
    },
}


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------


def pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    # 17 significant digits round-trips every double exactly
    return f"{float(x):.17g}"


def _serialize(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _serialize(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _serialize(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic single-line JSON; key order is the dict's own."""
    out: list = []
    _serialize(obj, out)
    out.append("\n")
    return "".join(out)


def dump_json(obj, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(canonical_json(obj))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def schema_errors(data, schema) -> list[str]:
    """All schema violations as 'pointer: message' lines."""
    validator = Draft202012Validator(schema)
    items = []
    for err in sorted(validator.iter_errors(data),
                      key=lambda e: list(map(str, e.absolute_path))):
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        items.append(f"{pointer}: {err.message}")
    return items


def _require_valid(data, schema, label: str, extra=()):
    items = list(extra) + schema_errors(data, schema)
    if items:
        raise ProblemValidationError(
            f"{label} failed validation:\n  " + "\n  ".join(items))


def _grid_length_errors(data) -> list[str]:
    q = data.get("q")
    if not isinstance(q, dict) or q.get("type") != "grid":
        return []
    items = []
    nx = len(q.get("x", []))
    for fieldname in ("re", "im"):
        nf = len(q.get(fieldname, []))
        if nf != nx:
            items.append(f"/q/{fieldname}: length {nf} does not match "
                         f"/q/x length {nx}")
    return items


def problem_from_data(data, label="problem") -> SingularProblem:
    _require_valid(data, PROBLEM_SCHEMA, label,
                   extra=_grid_length_errors(data))
    return SingularProblem.from_dict(data)


def load_problem(path) -> SingularProblem:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemValidationError(f"{path}: not valid JSON: {exc}") \
                from None
    return problem_from_data(data, label=str(path))


# ---------------------------------------------------------------------------
# Weyl sample files
# ---------------------------------------------------------------------------


def weyl_data(contour: Contour, m, model: SingularProblem | None) -> dict:
    return {
        "contour": {"h": contour.h, "s_max": contour.s_max,
                    "N": int(contour.n)},
        "nodes_lambda": [pair(z) for z in contour.lam],
        "weights": [pair(z) for z in contour.weights],
        "M": [pair(z) for z in np.asarray(m, dtype=complex)],
        "model": model.to_dict() if model is not None else None,
    }


def save_weyl(path, contour: Contour, m,
              model: SingularProblem | None = None) -> None:
    dump_json(weyl_data(contour, m, model), path)


def _as_complex_array(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return np.zeros(0, dtype=complex)
    return arr[:, 0] + 1j * arr[:, 1]


def load_weyl(path):
    """(contour, M, model problem or None) from a Weyl sample file.

    The contour is rebuilt from (h, s_max, N) and must reproduce the
    stored nodes and weights; a file whose arrays disagree with its own
    contour header was edited inconsistently and is rejected.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemValidationError(f"{path}: not valid JSON: {exc}") \
                from None
    _require_valid(data, WEYL_SCHEMA, str(path))
    spec = data["contour"]
    try:
        contour = build_contour(spec["h"], spec["s_max"], spec["N"])
    except ValueError as exc:
        raise ProblemValidationError(
            f"{path} failed validation:\n  /contour: {exc}") from None
    items = []
    for key, want in (("nodes_lambda", contour.lam),
                      ("weights", contour.weights)):
        got = _as_complex_array(data[key])
        if got.size != want.size:
            items.append(f"/{key}: length {got.size} does not match "
                         f"contour N = {want.size}")
        elif np.max(np.abs(got - want)) > 1e-12 * max(1.0,
                                                      np.max(np.abs(want))):
            items.append(f"/{key}: does not match the contour rebuilt "
                         "from /contour")
    m = _as_complex_array(data["M"])
    if m.size != len(contour):
        items.append(f"/M: length {m.size} does not match contour "
                     f"N = {len(contour)}")
    if items:
        raise ProblemValidationError(
            f"{path} failed validation:\n  " + "\n  ".join(items))
    model = None
    if data["model"] is not None:
        model = problem_from_data(data["model"], label=f"{path}#/model")
    return contour, m, model


# ---------------------------------------------------------------------------
# recovery output
# ---------------------------------------------------------------------------


def recovered_data(rec, decay_order: float) -> dict:
    disc = [None if not math.isfinite(d) else float(d)
            for d in np.asarray(rec.route_discrepancy, dtype=float)]
    order = float(decay_order) if math.isfinite(decay_order) else None
    return {
        "x": [float(v) for v in rec.x],
        "q_hat": [pair(z) for z in rec.q_hat],
        "epsilon0": [pair(z) for z in rec.epsilon0],
        "route_discrepancy": disc,
        "s_condition_min": float(rec.s_condition_min),
        "mhat_decay_order": order,
    }


def save_recovered(path, rec, decay_order: float) -> None:
    dump_json(recovered_data(rec, decay_order), path)


def load_recovered(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    _require_valid(data, RECOVERED_SCHEMA, str(path))
    return {
        "x": np.asarray(data["x"], dtype=float),
        "q_hat": _as_complex_array(data["q_hat"]),
        "epsilon0": _as_complex_array(data["epsilon0"]),
        "route_discrepancy": np.asarray(
            [np.nan if d is None else d for d in data["route_discrepancy"]],
            dtype=float),
        "s_condition_min": float(data["s_condition_min"]),
        "mhat_decay_order": (np.inf if data["mhat_decay_order"] is None
                             else float(data["mhat_decay_order"])),
    }


# ---------------------------------------------------------------------------
# spectrum output
# ---------------------------------------------------------------------------


def spectrum_data(estimate) -> dict:
    return {
        "theta_plus": pair(estimate.theta_plus),
        "theta_minus": pair(estimate.theta_minus),
        "eigenvalues": [
            {"k": int(r.k), "rho": pair(r.rho), "lambda": pair(r.lam),
             "beta": pair(r.beta), "residual": float(r.residual)}
            for r in estimate.eigenvalues
        ],
        "real_zeros": [pair(z) for z in estimate.real_zeros],
    }


def save_spectrum(path, estimate) -> None:
    dump_json(spectrum_data(estimate), path)


# ---------------------------------------------------------------------------
# delimited output for plotting
# ---------------------------------------------------------------------------


def write_csv(path, x, q_hat, epsilon0) -> None:
    """x, Re q_hat, Im q_hat, Re eps0, Im eps0 with canonical formatting."""
    cols = ("x", "re_q_hat", "im_q_hat", "re_epsilon0", "im_epsilon0")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for xi, qi, ei in zip(x, q_hat, epsilon0):
            row = (float(xi), qi.real, qi.imag, ei.real, ei.imag)
            fh.write(",".join(_format_float(v) for v in row) + "\n")
