"""JSON and CSV formats for channels, codes, regions and run reports.

Every JSON file carries ``"schema": 1``; other versions are rejected.
Matrices are nested rows of ``[re, im]`` pairs.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .channels import CCQChannel
from .coding import FAILURE, IDCode, SimultaneousStructure, TransmissionCode
from .dist import Distribution
from .linalg import POVM, matrix_from_json, matrix_to_json

SCHEMA = 1


class ParseError(ValueError):
    """A file could not be read as the expected format."""


def _label_to_json(lab):
    if isinstance(lab, tuple):
        return [_label_to_json(v) for v in lab]
    return lab


def _label_from_json(lab):
    if isinstance(lab, list):
        return tuple(_label_from_json(v) for v in lab)
    return lab


def dumps(obj) -> str:
    """Deterministic JSON text (fixed key order, trailing newline)."""
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_json(path, kind: str | None = None) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: cannot read ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    if data.get("schema") != SCHEMA:
        raise ParseError(f"{path}: unsupported schema {data.get('schema')!r} (expected {SCHEMA})")
    if kind is not None and data.get("kind") != kind:
        raise ParseError(f"{path}: expected kind {kind!r}, found {data.get('kind')!r}")
    return data


# -- channels -------------------------------------------------------------------------


def channel_to_json(w: CCQChannel) -> dict:
    """Single-letter description; ``outputs`` maps ``"x,y"`` symbol pairs to matrices."""
    if any("," in s for s in w.x_alphabet + w.y_alphabet):
        raise ValueError("alphabet symbols must not contain commas in the file format")
    outs = {f"{xs},{ys}": matrix_to_json(w.base[x, y])
            for x, xs in enumerate(w.x_alphabet) for y, ys in enumerate(w.y_alphabet)}
    return {"schema": SCHEMA, "kind": "channel", "x_alphabet": list(w.x_alphabet),
            "y_alphabet": list(w.y_alphabet), "dim": w.base_dim, "outputs": outs}


def channel_from_json(data: dict, validate: bool = True) -> CCQChannel:
    try:
        xa, ya = [str(s) for s in data["x_alphabet"]], [str(s) for s in data["y_alphabet"]]
        d = int(data["dim"])
        outs = np.full((len(xa), len(ya), d, d), np.nan, dtype=complex)
        for key, entry in data["outputs"].items():
            xs, sep, ys = key.partition(",")
            if not sep or xs not in xa or ys not in ya:
                raise ParseError(f"output key {key!r} is not an 'x,y' pair of alphabet symbols")
            m = matrix_from_json(entry)
            if m.shape != (d, d):
                raise ParseError(f"output {key!r} has shape {m.shape}, expected ({d}, {d})")
            outs[xa.index(xs), ya.index(ys)] = m
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"malformed channel description ({exc!r})") from exc
    if np.isnan(outs.real).any():
        raise ParseError("channel description misses some input pairs")
    return CCQChannel(xa, ya, outs, validate=validate)


def load_channel(path, validate: bool = True) -> CCQChannel:
    return channel_from_json(read_json(path, "channel"), validate=validate)


# -- codes ----------------------------------------------------------------------------


def _povm_entries(ops, labels) -> list:
    return [{"label": _label_to_json(l), "matrix": matrix_to_json(m)} for l, m in zip(labels, ops)]


def transmission_code_to_json(c: TransmissionCode) -> dict:
    labels = [(m, n) for m in range(c.M) for n in range(c.N)]
    ops = list(c.decoders.reshape(-1, c.dim, c.dim))
    if c.failure is not None:
        labels.append(FAILURE)
        ops.append(c.failure)
    return {"schema": SCHEMA, "kind": "transmission", "k": c.k,
            "codewords_x": [list(w) for w in c.codewords_x], "codewords_y": [list(w) for w in c.codewords_y],
            "decoders": _povm_entries(ops, labels)}


def transmission_code_from_json(data: dict, validate: bool = True) -> TransmissionCode:
    try:
        k = int(data["k"])
        xs, ys = [tuple(w) for w in data["codewords_x"]], [tuple(w) for w in data["codewords_y"]]
        M, N = len(xs), len(ys)
        dec, failure = None, None
        for entry in data["decoders"]:
            m = matrix_from_json(entry["matrix"])
            if dec is None:
                dec = np.full((M, N) + m.shape, np.nan, dtype=complex)
            if entry["label"] == FAILURE:
                failure = m
            else:
                a, b = entry["label"]
                dec[int(a), int(b)] = m
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed transmission code ({exc!r})") from exc
    if dec is None or np.isnan(dec.real).any():
        raise ParseError("transmission code misses decoders for some message pairs")
    return TransmissionCode(k, xs, ys, dec, failure, validate=validate)


def structure_to_json(s: SimultaneousStructure) -> dict:
    return {"refinement": _povm_entries(s.refinement.elements, s.refinement.labels),
            "subsets_a": [sorted(a) for a in s.subsets_a], "subsets_b": [sorted(b) for b in s.subsets_b]}


def structure_from_json(data: dict) -> SimultaneousStructure:
    try:
        els = np.array([matrix_from_json(e["matrix"]) for e in data["refinement"]])
        labels = tuple(_label_from_json(e["label"]) for e in data["refinement"])
        return SimultaneousStructure(POVM(els, labels), [set(a) for a in data["subsets_a"]],
                                     [set(b) for b in data["subsets_b"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed simultaneous structure ({exc!r})") from exc


def id_code_to_json(c: IDCode) -> dict:
    labels = [(m, n) for m in range(c.M) for n in range(c.N)]
    return {"schema": SCHEMA, "kind": "id", "k": c.k,
            "dists_x": [p.to_json() for p in c.dists_x], "dists_y": [q.to_json() for q in c.dists_y],
            "identifiers": _povm_entries(c.identifiers.reshape(-1, c.dim, c.dim), labels),
            "structure": None if c.structure is None else structure_to_json(c.structure)}


def id_code_from_json(data: dict, validate: bool = True) -> IDCode:
    try:
        k = int(data["k"])
        px = [Distribution.from_json(p) for p in data["dists_x"]]
        py = [Distribution.from_json(q) for q in data["dists_y"]]
        ids = None
        for entry in data["identifiers"]:
            m = matrix_from_json(entry["matrix"])
            if ids is None:
                ids = np.full((len(px), len(py)) + m.shape, np.nan, dtype=complex)
            a, b = entry["label"]
            ids[int(a), int(b)] = m
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"malformed ID code ({exc!r})") from exc
    if ids is None or np.isnan(ids.real).any():
        raise ParseError("ID code misses identifiers for some message pairs")
    structure = structure_from_json(data["structure"]) if data.get("structure") else None
    return IDCode(k, px, py, ids, structure, validate=validate)


def load_code(path, validate: bool = True):
    data = read_json(path)
    kind = data.get("kind")
    if kind == "transmission":
        return transmission_code_from_json(data, validate)
    if kind == "id":
        return id_code_from_json(data, validate)
    raise ParseError(f"{path}: unknown code kind {kind!r}")


def save_code(path, c) -> None:
    write_json(path, id_code_to_json(c) if isinstance(c, IDCode) else transmission_code_to_json(c))


# -- regions --------------------------------------------------------------------------


def _weights(p) -> str:
    return " ".join(repr(float(v)) for v in p)


def write_region_csv(path, region) -> None:
    front = set(region.frontier_index)
    names = ["b1", "b2"] if region.kind == "Ck" else ["b1", "b2", "b3"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["kind", "k", "p1", "p2", *names, "frontier"])
        for i, (p1, p2, vals) in enumerate(region.support_points):
            out.writerow([region.kind, region.k, _weights(p1), _weights(p2),
                          *(repr(float(v)) for v in vals), int(i in front)])


def region_to_json(region) -> dict:
    return {"schema": SCHEMA, "kind": "region", "region_kind": region.kind, "k": region.k,
            "resolution": region.resolution, "grid_points": region.grid_points,
            "refinement_steps": region.refinement_steps,
            "frontier": [{"bounds": [float(v) for v in f], "p1": [float(v) for v in p1], "p2": [float(v) for v in p2]}
                         for f, (p1, p2) in zip(region.frontier, region.frontier_inputs)]}
