"""File formats: tree text files, measure CSV + sidecar JSON, and float-exact JSON output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigInvalid, Disconnected, TreeError
from .measures import DiscreteMeasure
from .trees import EmbeddingCertificate, Tree, validate_tree


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return fmt_float(x)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in seq) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; key order preserved."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


# --- trees ------------------------------------------------------------------


def parse_tree_text(text: str, source: str = "<tree>") -> Tree:
    """Parse ``vertices N`` followed by ``i j`` edge lines; '#' starts a comment."""
    n = None
    edges: list[tuple[int, int]] = []
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "vertices":
                raise ConfigInvalid(f"{source}:{lineno}", "expected 'vertices N' header")
            try:
                n = int(parts[1])
            except ValueError:
                raise ConfigInvalid(f"{source}:{lineno}", f"bad vertex count {parts[1]!r}") from None
            if n < 1:
                raise ConfigInvalid(f"{source}:{lineno}", "vertex count must be >= 1")
            continue
        if len(parts) != 2:
            raise ConfigInvalid(f"{source}:{lineno}", f"expected 'i j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigInvalid(f"{source}:{lineno}", f"non-integer edge {line!r}") from None
        edges.append((i, j))
        lines.append(lineno)
    if n is None:
        raise ConfigInvalid(source, "missing 'vertices N' header")
    try:
        return validate_tree(n, edges)
    except TreeError as exc:
        # locate the first edge line at which the defect appears
        for cut in range(1, len(edges) + 1):
            try:
                _prefix_check(n, edges[:cut])
            except TreeError:
                raise ConfigInvalid(f"{source}:{lines[cut - 1]}", str(exc)) from exc
        raise ConfigInvalid(source, str(exc)) from exc


def _prefix_check(n, edges):
    try:
        validate_tree(n, edges)
    except Disconnected:
        pass


def read_tree(path) -> Tree:
    path = Path(path)
    return parse_tree_text(path.read_text(), str(path))


def format_tree(tree: Tree) -> str:
    out = [f"vertices {tree.vertex_count}"]
    out += [f"{i} {j}" for i, j in tree.edges]
    return "\n".join(out) + "\n"


def write_tree(path, tree: Tree) -> None:
    Path(path).write_text(format_tree(tree))


def certificate_to_dict(cert: EmbeddingCertificate) -> dict:
    return {
        "vertex_map": list(cert.vertex_map),
        "edge_map": [[i, j, a, b] for (i, j), (a, b) in sorted(cert.edge_map.items())],
    }


def certificate_from_dict(data: dict) -> EmbeddingCertificate:
    edge_map = {(i, j): (a, b) for i, j, a, b in data["edge_map"]}
    return EmbeddingCertificate(tuple(data["vertex_map"]), edge_map)


# --- measures ---------------------------------------------------------------


def meta_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def write_measure(path, m: DiscreteMeasure) -> None:
    path = Path(path)
    header = [f"x{c + 1}" for c in range(m.d)] + ["w"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for p, w in zip(m.points, m.weights):
            writer.writerow([fmt_float(v) for v in p] + [fmt_float(w)])
    write_json(meta_path(path), m.meta)


def read_measure(path) -> DiscreteMeasure:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigInvalid(str(path), "empty measure file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    if d < 1 or header != [f"x{c + 1}" for c in range(d)] + ["w"]:
        raise ConfigInvalid(f"{path}:1", f"header must be x1,...,xd,w; got {','.join(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 1:
            raise ConfigInvalid(f"{path}:{lineno}", f"expected {d + 1} columns, got {len(row)}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise ConfigInvalid(f"{path}:{lineno}", "non-numeric entry") from None
    if not data:
        raise ConfigInvalid(str(path), "no atoms")
    arr = np.asarray(data)
    mp = meta_path(path)
    meta = json.loads(mp.read_text()) if mp.exists() else {"family": "file", "s": None, "c": None}
    return DiscreteMeasure(arr[:, :d], arr[:, d], meta)


def write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
