"""Reading and writing model, state and cylinder documents.

Documents are YAML (JSON is accepted as a subset). Complex matrix entries are
``[re, im]`` pairs or plain real numbers; a bare number stands for a 1x1
matrix. Example model::

    kind: lattice1d
    hdim: 2
    window: 10
    offsets:
      - offset: -1
        matrix: [[0, 0], [0.7071067811865476, 0.7071067811865476]]
      - offset: 1
        matrix: [[0, 0], [-0.7071067811865476, 0.7071067811865476]]
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import yaml

from .evolution import BlockState
from .exceptions import DimensionMismatch, ParseError, SchemaError
from .model import OqrwModel, classical_embed, explicit_model, lattice_model
from .qmc import BlockObservable, CylinderObservable


def _parse_text(text: str):
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        loc = (mark.line + 1, mark.column + 1) if mark is not None else None
        raise ParseError(str(exc.problem or exc), location=loc) from exc
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from exc
    if not isinstance(doc, dict):
        raise SchemaError("document must be a mapping at top level")
    return doc


def _read(source) -> str:
    if isinstance(source, Path):
        return source.read_text()
    return source


def _require(doc: dict, *keys: str, where: str = "document") -> None:
    if not isinstance(doc, dict):
        raise SchemaError(f"{where} must be a mapping")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise SchemaError(f"{where} is incomplete", missing=missing)


def _entry(v) -> complex:
    if isinstance(v, bool):
        raise SchemaError(f"matrix entry {v!r} is not a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise SchemaError(f"matrix entry {v!r} is neither a number nor an [re, im] pair")


def decode_matrix(obj) -> np.ndarray:
    """Matrix from nested lists of ``[re, im]`` pairs or reals."""
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return np.array([[complex(obj)]])
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise SchemaError("matrix must be a non-empty list of rows")
    rows = [[_entry(v) for v in row] for row in obj]
    if len({len(r) for r in rows}) != 1:
        raise SchemaError("matrix rows have different lengths")
    return np.array(rows, dtype=complex)


def encode_matrix(a) -> list:
    """Nested ``[re, im]`` lists, the inverse of :func:`decode_matrix`."""
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _check_dim(a: np.ndarray, hdim, what: str) -> np.ndarray:
    if hdim is not None and a.shape != (hdim, hdim):
        raise DimensionMismatch(f"{what} has shape {a.shape}, expected ({hdim}, {hdim})")
    return a


def model_from_dict(doc: dict) -> OqrwModel:
    _require(doc, "kind")
    kind = doc["kind"]
    hdim = doc.get("hdim")
    if kind == "classical":
        _require(doc, "P", where="classical model")
        return classical_embed(np.asarray(doc["P"], dtype=float))
    if kind == "lattice1d":
        _require(doc, "offsets", where="lattice1d model")
        if not doc["offsets"]:
            raise SchemaError("offsets list is empty", missing=["offsets"])
        rule = {}
        for k, item in enumerate(doc["offsets"]):
            _require(item, "offset", "matrix", where=f"offsets[{k}]")
            rule[int(item["offset"])] = _check_dim(decode_matrix(item["matrix"]), hdim,
                                                   f"offsets[{k}].matrix")
        return lattice_model(rule, int(doc.get("window", 0)))
    if kind == "explicit":
        _require(doc, "ops", where="explicit model")
        if not doc["ops"]:
            raise SchemaError("ops list is empty", missing=["ops"])
        ops = {}
        for k, item in enumerate(doc["ops"]):
            _require(item, "from", "to", "matrix", where=f"ops[{k}]")
            ops[(int(item["from"]), int(item["to"]))] = _check_dim(
                decode_matrix(item["matrix"]), hdim, f"ops[{k}].matrix")
        return explicit_model(ops, doc.get("sites"))
    raise SchemaError(f"unknown model kind {kind!r}")


def load_model(source) -> OqrwModel:
    """Model from document text or a :class:`pathlib.Path`.

    Raises
    ------
    ParseError
        On malformed text, with ``(line, column)`` when known.
    SchemaError
        When required fields are missing or have the wrong shape.
    """
    return model_from_dict(_parse_text(_read(source)))


def model_to_dict(m: OqrwModel) -> dict:
    if m.kind == "classical":
        return {"kind": "classical", "P": np.asarray(m.stochastic).tolist()}
    if m.is_lattice:
        return {"kind": "lattice1d", "hdim": m.hdim, "window": m.window,
                "offsets": [{"offset": k, "matrix": encode_matrix(b)}
                            for k, b in sorted(m.lattice_rule.items())]}
    return {"kind": "explicit", "hdim": m.hdim, "sites": list(m.sites),
            "ops": [{"from": j, "to": i, "matrix": encode_matrix(b)}
                    for (j, i), b in sorted(m.ops.items())]}


def _blocks(items, where: str) -> dict:
    if not isinstance(items, list):
        raise SchemaError(f"{where} must be a list of {{site, matrix}} entries")
    out = {}
    for k, item in enumerate(items):
        if not isinstance(item, dict):
            raise SchemaError(f"{where}[{k}] must be a mapping")
        _require(item, "site", "matrix", where=f"{where}[{k}]")
        out[int(item["site"])] = decode_matrix(item["matrix"])
    return out


def load_state(source) -> BlockState:
    doc = _parse_text(_read(source))
    _require(doc, "blocks", where="state document")
    return BlockState(_blocks(doc["blocks"], "blocks"))


def state_to_dict(s: BlockState) -> dict:
    return {"blocks": [{"site": j, "matrix": encode_matrix(b)} for j, b in s.blocks.items()]}


def load_cylinder(source) -> CylinderObservable:
    """Cylinder ``a_0 (x) ... (x) a_n (x) I (x) ...``.

    Each factor is either a list of ``{site, matrix}`` blocks (zero on the
    other sites), the string ``identity``, or a mapping
    ``{blocks: [...], identity_tail: bool}``.
    """
    doc = _parse_text(_read(source))
    _require(doc, "factors", where="cylinder document")
    factors = doc["factors"]
    if not isinstance(factors, list) or not factors:
        raise SchemaError("factors must be a non-empty list")
    out = []
    for k, f in enumerate(factors):
        if f == "identity":
            out.append(BlockObservable.identity())
        elif isinstance(f, list):
            out.append(BlockObservable(_blocks(f, f"factors[{k}]"), identity_tail=False))
        elif isinstance(f, dict):
            _require(f, "blocks", where=f"factors[{k}]")
            out.append(BlockObservable(_blocks(f["blocks"], f"factors[{k}].blocks"),
                                       identity_tail=bool(f.get("identity_tail", False))))
        else:
            raise SchemaError(f"factors[{k}] has unsupported form")
    return CylinderObservable(tuple(out))


def dumps(doc) -> str:
    """Deterministic JSON text (sorted keys, fixed float repr)."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def dump_yaml(doc) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
