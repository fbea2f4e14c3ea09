"""JSON and CSV formats for systems, pairs, connections and samples."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .digraph import DirectedPair, isometry_matrix
from .system import AdmissibleSystem
from .twosys import ConnectionMatrix, LandmarkSet

__all__ = [
    "ParseError",
    "encode_array",
    "decode_array",
    "system_to_json",
    "system_from_json",
    "pair_to_json",
    "pair_from_json",
    "save_json",
    "load_json",
    "load_system_or_pair",
    "read_points_csv",
    "read_matrix_csv",
    "read_edge_list_csv",
    "read_landmarks_csv",
    "read_function_csv",
    "write_samples_csv",
    "write_pyramid_csv",
]


class ParseError(ValueError):
    """Malformed input file."""


def encode_array(a):
    """Nested lists; complex entries become [re, im] pairs."""
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def decode_array(x, complex_trailing: bool | None = None) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if complex_trailing:
        if a.shape[-1] != 2:
            raise ParseError("complex array entries must be [re, im] pairs")
        return a[..., 0] + 1j * a[..., 1]
    return a


def system_to_json(system: AdmissibleSystem) -> dict:
    phi = system.eigenfunctions
    if isinstance(system.metric, str):
        metric = system.metric
    else:
        metric = system.distances.tolist()
    return {
        "kind": "system",
        "name": system.name,
        "points": None if system.points is None else system.points.tolist(),
        "weights": system.weights.tolist(),
        "eigenvalues": system.eigenvalues.tolist(),
        "eigenfunctions": encode_array(phi),
        "complex": bool(np.iscomplexobj(phi)),
        "metric": metric,
        "provenance": system.provenance,
        "orthonormal": system.orthonormal,
        "metadata": _plain(system.metadata),
    }


def _plain(d):
    # metadata is informational; keep only JSON-friendly values
    out = {}
    for k, v in (d or {}).items():
        if isinstance(v, (str, int, float, bool)) or v is None:
            out[k] = v
        elif isinstance(v, (np.floating, np.integer)):
            out[k] = v.item()
    return out


def system_from_json(doc: dict) -> AdmissibleSystem:
    try:
        cplx = doc.get("complex")
        phi = decode_array(doc["eigenfunctions"], cplx)
        if cplx is None and phi.ndim == 3:
            phi = decode_array(doc["eigenfunctions"], True)
        metric = doc.get("metric", "euclidean")
        if not isinstance(metric, str):
            metric = np.asarray(metric, dtype=float)
        pts = doc.get("points")
        return AdmissibleSystem(
            points=None if pts is None else np.asarray(pts, dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
            eigenfunctions=phi,
            metric=metric,
            provenance=doc.get("provenance", "laplacian"),
            orthonormal=bool(doc.get("orthonormal", True)),
            name=doc.get("name", ""),
            metadata=dict(doc.get("metadata") or {}),
        )
    except KeyError as exc:
        raise ParseError(f"system document missing field {exc}") from None


def pair_to_json(pair: DirectedPair) -> dict:
    U = isometry_matrix(pair)
    return {
        "kind": "directed-pair",
        "base": system_to_json(pair.base),
        "dual": system_to_json(pair.dual),
        "isometry": encode_array(U),
        "isometry_complex": bool(np.iscomplexobj(U)),
        "non_unique_isometry": pair.non_unique_isometry,
        "undirected": pair.undirected,
    }


def pair_from_json(doc: dict) -> DirectedPair:
    try:
        return DirectedPair(
            system_from_json(doc["base"]),
            system_from_json(doc["dual"]),
            decode_array(doc["isometry"], doc.get("isometry_complex", False)),
            bool(doc.get("non_unique_isometry", False)),
            bool(doc.get("undirected", False)),
        )
    except KeyError as exc:
        raise ParseError(f"pair document missing field {exc}") from None


def save_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1))


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None


def load_system_or_pair(path):
    doc = load_json(path)
    if doc.get("kind") == "directed-pair":
        return pair_from_json(doc)
    return system_from_json(doc)


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row) or row[0].lstrip().startswith("#"):
                continue
            yield lineno, [c.strip() for c in row]


def _is_header(row) -> bool:
    try:
        [float(c) for c in row]
        return False
    except ValueError:
        return True


def _floats(lineno, row, path):
    try:
        return [float(c) for c in row]
    except ValueError:
        raise ParseError(f"{path}:{lineno}: non-numeric value in {row}") from None


def read_points_csv(path):
    """Coordinates per row; an optional header may name a ``weight`` column.

    Returns (points, weights or None).
    """
    header, data = None, []
    for lineno, row in _rows(path):
        if header is None and not data and _is_header(row):
            header = [c.lower() for c in row]
            continue
        data.append((lineno, _floats(lineno, row, path)))
    if not data:
        raise ParseError(f"{path}: no data rows")
    width = len(data[0][1])
    for lineno, r in data:
        if len(r) != width:
            raise ParseError(f"{path}:{lineno}: expected {width} columns, got {len(r)}")
    arr = np.array([r for _, r in data])
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: non-finite coordinates")
    if header is not None and "weight" in header:
        wi = header.index("weight")
        weights = arr[:, wi]
        pts = np.delete(arr, wi, axis=1)
        return pts, weights
    return arr, None


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    for lineno, row in _rows(path):
        rows.append((lineno, _floats(lineno, row, path)))
    if not rows:
        raise ParseError(f"{path}: empty matrix")
    n = len(rows[0][1])
    for lineno, r in rows:
        if len(r) != n:
            raise ParseError(f"{path}:{lineno}: ragged row ({len(r)} entries, expected {n})")
    return np.array([r for _, r in rows])


def read_edge_list_csv(path, n: int | None = None) -> np.ndarray:
    """Rows (src, dst, weight) densified to an N x N matrix; repeated edges add."""
    edges = []
    first = True
    for lineno, row in _rows(path):
        if first and _is_header(row[:2]):
            first = False
            if len(row) < 3:
                raise ParseError(f"{path}:{lineno}: edge list needs src, dst, weight columns")
            continue
        first = False
        if len(row) < 3 or row[2] == "":
            raise ParseError(f"{path}:{lineno}: missing weight column")
        try:
            s, d = int(row[0]), int(row[1])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: node ids must be integers") from None
        w = _floats(lineno, row[2:3], path)[0]
        if s < 0 or d < 0:
            raise ParseError(f"{path}:{lineno}: negative node id")
        edges.append((s, d, w))
    if not edges:
        raise ParseError(f"{path}: no edges")
    size = max(max(s, d) for s, d, _ in edges) + 1
    if n is not None:
        if n < size:
            raise ParseError(f"{path}: node id {size - 1} exceeds N = {n}")
        size = n
    W = np.zeros((size, size))
    for s, d, w in edges:
        W[s, d] += w
    return W


def read_landmarks_csv(path) -> LandmarkSet:
    """Columns index_in_1, index_in_2, nu_weight."""
    i1, i2, nu = [], [], []
    first = True
    for lineno, row in _rows(path):
        if first and _is_header(row):
            first = False
            continue
        first = False
        if len(row) < 3:
            raise ParseError(f"{path}:{lineno}: expected index_in_1, index_in_2, nu_weight")
        try:
            i1.append(int(row[0])); i2.append(int(row[1]))
        except ValueError:
            raise ParseError(f"{path}:{lineno}: landmark indices must be integers") from None
        nu.append(_floats(lineno, row[2:3], path)[0])
    if not nu:
        raise ParseError(f"{path}: empty landmark set")
    return LandmarkSet(i1, i2, nu)


def read_function_csv(path) -> np.ndarray:
    """One value per row: ``re`` or ``re, im``."""
    vals = []
    first = True
    for lineno, row in _rows(path):
        if first and _is_header(row):
            first = False
            continue
        first = False
        r = _floats(lineno, row, path)
        vals.append(complex(r[0], r[1] if len(r) > 1 else 0.0))
    if not vals:
        raise ParseError(f"{path}: no samples")
    v = np.array(vals)
    return v.real if not np.any(v.imag) else v


def write_samples_csv(path, values) -> None:
    v = np.asarray(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, x in enumerate(v):
            w.writerow([i, repr(float(np.real(x))), repr(float(np.imag(x)))])


def write_pyramid_csv(path, taus) -> None:
    """Columns level, point index, re, im."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "index", "re", "im"])
        for j, t in enumerate(taus):
            for i, x in enumerate(np.asarray(t)):
                w.writerow([j, i, repr(float(np.real(x))), repr(float(np.imag(x)))])
