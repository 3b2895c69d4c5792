"""JSON matrix files: labelled dims plus dense real and imaginary parts.

::

    {"dims": [{"name": "AI", "dim": 2}, ...],
     "re": [[...], ...],
     "im": [[...], ...]}

:func:`dumps` is the canonical formatting; reading and re-writing a
canonical file reproduces it byte for byte.
"""
from __future__ import annotations

import json
from math import prod
from pathlib import Path

import numpy as np

from .tensor_core import HermitianOperator, LabelledOperator, SystemLabel

HERMITIAN_TOL = 1e-9


class MatrixFileError(ValueError):
    """Malformed or non-Hermitian matrix file."""


def to_document(op: LabelledOperator) -> dict:
    data = np.asarray(op.data, dtype=complex)
    return {
        "dims": [{"name": l.name, "dim": l.dim} for l in op.labels],
        "re": data.real.tolist(),
        "im": data.imag.tolist(),
    }


def dumps(op: LabelledOperator) -> str:
    doc = to_document(op)
    lines = ["{", f'  "dims": {json.dumps(doc["dims"])},']
    for key, tail in (("re", ","), ("im", "")):
        rows = ",\n    ".join(json.dumps(r) for r in doc[key])
        lines.append(f'  "{key}": [\n    {rows}\n  ]{tail}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def from_document(doc, tol: float = HERMITIAN_TOL) -> HermitianOperator:
    try:
        labels = tuple(SystemLabel(str(d["name"]), int(d["dim"])) for d in doc["dims"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFileError(f"malformed matrix document: {exc}") from exc
    side = prod(l.dim for l in labels)
    if re.shape != (side, side) or im.shape != (side, side):
        raise MatrixFileError(f"expected {side} x {side} arrays for dims {[l.dim for l in labels]}, "
                              f"got {re.shape} and {im.shape}")
    data = re + 1j * im
    if np.max(np.abs(data - data.conj().T), initial=0.0) > tol:
        raise MatrixFileError("matrix is not Hermitian")
    return HermitianOperator(labels, data, tol=tol)


def loads(text: str, tol: float = HERMITIAN_TOL) -> HermitianOperator:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFileError(f"invalid JSON: {exc}") from exc
    return from_document(doc, tol)


def read_matrix(path, tol: float = HERMITIAN_TOL) -> HermitianOperator:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MatrixFileError(f"cannot read {path}: {exc}") from exc
    return loads(text, tol)


def write_matrix(path, op: LabelledOperator) -> None:
    Path(path).write_text(dumps(op))
