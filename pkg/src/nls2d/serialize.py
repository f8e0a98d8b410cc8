"""Deterministic JSON/CSV emission and schema validation.

All floats are written with 17 significant digits so that identical
configs and seeds produce byte-identical artifacts; CSV output is
locale-independent.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

import jsonschema


def _fmt_float(x: float) -> str:
    if x != x:
        raise ValueError("NaN is not serializable")
    if x in (float("inf"), float("-inf")):
        raise ValueError("Inf is not serializable")
    s = format(float(x), ".17g")
    # ensure the token stays a JSON number with a decimal point or exponent
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int) -> str:
    pad = "  " * indent
    pad_in = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(pad_in + _encode(v, indent + 1) for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            pad_in + json.dumps(str(k)) + ": " + _encode(obj[k], indent + 1)
            for k in sorted(obj)
        )
        return "{\n" + items + "\n" + pad + "}"
    # numpy scalars and arrays
    try:
        import numpy as np

        if isinstance(obj, np.integer):
            return str(int(obj))
        if isinstance(obj, np.floating):
            return _fmt_float(float(obj))
        if isinstance(obj, np.ndarray):
            return _encode(obj.tolist(), indent)
    except ImportError:  # pragma: no cover
        pass
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dumps(obj) -> str:
    return _encode(obj, 0) + "\n"


_SCHEMA = None


def record_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        text = resources.files("nls2d").joinpath("schemas/records.schema.json").read_text()
        _SCHEMA = json.loads(text)
    return _SCHEMA


def validate_record(record: dict, kind: str) -> None:
    """Validate one result record against the shipped schema."""
    schema = record_schema()
    if kind not in schema["$defs"]:
        raise KeyError(f"no schema for record kind {kind!r}")
    jsonschema.validate(
        record, {"$ref": f"#/$defs/{kind}", "$defs": schema["$defs"]}
    )


def write_json(path, record: dict, kind: str | None = None) -> None:
    if kind is not None:
        validate_record(record, kind)
    with open(path, "w") as fh:
        fh.write(dumps(record))


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for v in row:
                if isinstance(v, float):
                    cells.append(format(v, ".17g"))
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
