"""File formats: JSON problem files, Kraus and Hamiltonian files, and CSV output.

Complex matrices are stored as a pair ``[re, im]`` of equally shaped nested
lists, so ``[[[1, 0], [0, -1]], [[0, 0], [0, 0]]]`` is σ3.

Problem file, version 1::

    {
      "schema_version": 1,
      "blocks": [{"id": "x", "side": "X", "dim": 1}, ...],
      "objective": {"Q": M, "A": M, "B": M},          # each optional
      "constraints": {
        "scalar": [{"coefficients": {"x": M}, "relation": "<=", "rhs": 1.0}],
        "psd": [{"coefficients": {"x": 1.0}, "constant": M}]
      }
    }

A scalar constraint reads ``Σ_b tr(C_b V_b) (relation) rhs`` and a PSD
constraint ``Σ_b γ_b V_b + K ⪰ 0``; every block in a PSD constraint must have
the dimension of ``K``.

CSV files carry a header row and write floats with 9 significant digits.
Files are written to a temporary sibling and renamed into place, so a failed
run never leaves a partial file behind.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .bnb import BilinearProblem, VariableBlock
from .errors import DimensionError, HermitianError, InvalidInputError
from .sdp import PsdConstraint, ScalarConstraint

SCHEMA_VERSION = 1
CURVE_COLUMNS = ("delta", "value", "half_width", "nodes", "seconds")
HERMITIAN_TOL = 1e-10

_MATRIX = {
    "type": "array",
    "minItems": 2,
    "maxItems": 2,
    "items": {
        "type": "array",
        "minItems": 1,
        "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
    },
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "blocks"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "blocks": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["id", "side", "dim"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "side": {"enum": ["X", "Y"]},
                    "dim": {"type": "integer", "minimum": 1},
                },
            },
        },
        "objective": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"Q": _MATRIX, "A": _MATRIX, "B": _MATRIX},
        },
        "constraints": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scalar": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["coefficients", "relation", "rhs"],
                        "additionalProperties": False,
                        "properties": {
                            "coefficients": {"type": "object", "additionalProperties": _MATRIX},
                            "relation": {"enum": ["=", "<=", ">="]},
                            "rhs": {"type": "number"},
                            "label": {"type": "string"},
                        },
                    },
                },
                "psd": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["coefficients"],
                        "additionalProperties": False,
                        "properties": {
                            "coefficients": {"type": "object", "additionalProperties": {"type": "number"}},
                            "constant": _MATRIX,
                            "label": {"type": "string"},
                        },
                    },
                },
            },
        },
    },
}

KRAUS_SCHEMA = {"type": "array", "minItems": 1, "items": _MATRIX}


def decode_matrix(pair, where: str = "matrix") -> np.ndarray:
    """``[re, im]`` nested lists to a complex square array."""
    try:
        re, im = (np.asarray(part, dtype=float) for part in pair)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{where}: ragged or non-numeric matrix ({exc})") from None
    if re.shape != im.shape or re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise DimensionError(f"{where}: real and imaginary parts must be equal square arrays, got {re.shape} and {im.shape}")
    return re + 1j * im


def encode_matrix(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [m.real.tolist(), m.imag.tolist()]


def _hermitian(pair, block: str, where: str) -> np.ndarray:
    m = decode_matrix(pair, where)
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > HERMITIAN_TOL:
        raise HermitianError(f"hermitian violation at block {block} ({where}): max |M - M^dagger| = {dev:.3g}")
    return (m + m.conj().T) / 2


def _load_json(path, schema, what: str):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {what} {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInputError(f"{path}: schema violation at {loc}: {exc.message}") from None
    return doc


def problem_from_dict(doc: dict) -> BilinearProblem:
    """Build a :class:`BilinearProblem` from an already schema-valid document."""
    blocks = [VariableBlock(b["id"], b["side"], b["dim"]) for b in doc["blocks"]]
    dims = {b.name: b.dim for b in blocks}
    obj = doc.get("objective", {})
    mats = {k: _hermitian(obj[k], k, f"objective.{k}") for k in ("Q", "A", "B") if k in obj}

    def resolve(name, where):
        if name not in dims:
            raise InvalidInputError(f"{where}: unknown block {name!r}")
        return dims[name]

    cons = doc.get("constraints", {})
    scalar = []
    for i, c in enumerate(cons.get("scalar", [])):
        where = f"constraints.scalar[{i}]"
        coeffs = {}
        for name, pair in c["coefficients"].items():
            d = resolve(name, where)
            m = _hermitian(pair, name, where)
            if m.shape != (d, d):
                raise DimensionError(f"{where}: coefficient for block {name!r} has shape {m.shape}, expected {(d, d)}")
            coeffs[name] = m
        scalar.append(ScalarConstraint(coeffs, c["relation"], float(c["rhs"]), c.get("label", where)))
    psd = []
    for i, c in enumerate(cons.get("psd", [])):
        where = f"constraints.psd[{i}]"
        sizes = {resolve(name, where) for name in c["coefficients"]}
        const = _hermitian(c["constant"], "constant", where) if "constant" in c else None
        if const is not None:
            sizes.add(const.shape[0])
        if len(sizes) > 1:
            raise DimensionError(f"{where}: blocks and constant have mismatched dimensions {sorted(sizes)}")
        psd.append(PsdConstraint(dict(c["coefficients"]), const, c.get("label", where)))
    return BilinearProblem(blocks, mats.get("Q"), mats.get("A"), mats.get("B"), scalar, psd, {"name": doc.get("name", "")})


def load_problem(path) -> BilinearProblem:
    """Read, validate and build a problem file.

    Raises:
        InvalidInputError: unreadable file, bad JSON (with line and column),
            schema violation (with the JSON path) or unknown block reference.
        HermitianError: a matrix deviates from Hermitian by more than 1e-10.
    """
    return problem_from_dict(_load_json(path, PROBLEM_SCHEMA, "problem file"))


def load_kraus(path) -> list[np.ndarray]:
    doc = _load_json(path, KRAUS_SCHEMA, "Kraus file")
    return [decode_matrix(m, f"Kraus operator {i}") for i, m in enumerate(doc)]


def load_hamiltonian(path) -> np.ndarray:
    doc = _load_json(path, _MATRIX, "Hamiltonian file")
    return _hermitian(doc, "hamiltonian", str(path))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".9g")


def write_csv_atomic(path, header, rows) -> None:
    """Write a CSV with ``header`` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_curve_csv(path, points) -> None:
    write_csv_atomic(path, CURVE_COLUMNS, ((p.delta, p.value, p.half_width, p.nodes, p.seconds) for p in points))


def read_curve_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != CURVE_COLUMNS:
            raise InvalidInputError(f"unexpected curve columns {rd.fieldnames}")
        return [
            {"delta": float(r["delta"]), "value": float(r["value"]), "half_width": float(r["half_width"]),
             "nodes": int(r["nodes"]), "seconds": float(r["seconds"])}
            for r in rd
        ]
