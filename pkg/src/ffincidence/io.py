"""Point-set and function files.

Format::

    p <prime> dim <2|3>
    x y [re im]
    ...

Blank lines and ``#`` comments are ignored.  Two trailing float columns,
when present, carry a complex value per point.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ff_core import as_modulus
from .incidence import DuplicatePointError, PointSet2
from .paraboloid import ParaboloidSet, SpaceFunction, SurfaceFunction, on_paraboloid


class MalformedInputError(ValueError):
    pass


def read_point_file(path) -> tuple[int, int, np.ndarray, np.ndarray | None]:
    """(p, dim, coords, values-or-None)."""
    lines = Path(path).read_text().splitlines()
    body = [(i + 1, ln.split("#", 1)[0].split()) for i, ln in enumerate(lines)]
    body = [(i, toks) for i, toks in body if toks]
    if not body:
        raise MalformedInputError(f"{path}: empty file")
    lineno, head = body[0]
    if len(head) != 4 or head[0] != "p" or head[2] != "dim":
        raise MalformedInputError(f"{path}:{lineno}: header must read 'p <prime> dim <2|3>'")
    try:
        p = as_modulus(int(head[1])).p
        dim = int(head[3])
    except ValueError as exc:
        raise MalformedInputError(f"{path}:{lineno}: {exc}") from None
    if dim not in (2, 3):
        raise MalformedInputError(f"{path}:{lineno}: dim must be 2 or 3")

    coords, values, seen = [], [], {}
    for lineno, toks in body[1:]:
        if len(toks) not in (dim, dim + 2):
            raise MalformedInputError(f"{path}:{lineno}: expected {dim} or {dim + 2} columns")
        try:
            pt = tuple(int(t) % p for t in toks[:dim])
            val = complex(float(toks[dim]), float(toks[dim + 1])) if len(toks) == dim + 2 else None
        except ValueError as exc:
            raise MalformedInputError(f"{path}:{lineno}: {exc}") from None
        if pt in seen:
            raise DuplicatePointError(f"{path}:{lineno}: duplicate point {pt} (first on line {seen[pt]})")
        seen[pt] = lineno
        coords.append(pt)
        values.append(val)
    arr = np.asarray(coords, dtype=np.int64).reshape(-1, dim)
    has_vals = [v is not None for v in values]
    if any(has_vals) and not all(has_vals):
        raise MalformedInputError(f"{path}: value columns must be present on every line or none")
    vals = np.asarray(values, dtype=complex) if values and all(has_vals) else None
    return p, dim, arr, vals


def write_point_file(path, p: int, coords, values=None) -> None:
    coords = np.asarray(coords, dtype=np.int64)
    dim = coords.shape[1] if coords.ndim == 2 else 2
    out = [f"p {int(p)} dim {dim}"]
    for i, row in enumerate(coords.reshape(-1, dim)):
        line = " ".join(str(int(c)) for c in row)
        if values is not None:
            v = complex(values[i])
            line += f" {v.real!r} {v.imag!r}"
        out.append(line)
    Path(path).write_text("\n".join(out) + "\n")


def load_pointset(path) -> PointSet2:
    p, dim, coords, _ = read_point_file(path)
    if dim != 2:
        raise MalformedInputError(f"{path}: expected a planar set (dim 2)")
    return PointSet2(p, coords)


def load_paraboloid_set(path) -> ParaboloidSet:
    p, dim, coords, _ = read_point_file(path)
    if dim == 2:
        return ParaboloidSet(PointSet2(p, coords))
    if not on_paraboloid(coords, p).all():
        raise MalformedInputError(f"{path}: points off the paraboloid")
    return ParaboloidSet(PointSet2(p, coords[:, :2]))


def load_surface_function(path) -> SurfaceFunction:
    S = load_paraboloid_set(path)
    _, _, _, vals = read_point_file(path)
    v = np.zeros((S.p, S.p), dtype=complex)
    v[S.base.coords[:, 0], S.base.coords[:, 1]] = 1.0 if vals is None else vals
    return SurfaceFunction(S.p, v)


def save_surface_function(path, f: SurfaceFunction) -> None:
    pts, vals = f.support_coords()
    write_point_file(path, f.p, pts, vals)


def load_space_function(path) -> SpaceFunction:
    p, dim, coords, vals = read_point_file(path)
    if dim != 3:
        raise MalformedInputError(f"{path}: expected points of F^3 (dim 3)")
    return SpaceFunction.from_sparse(p, coords, vals)


def save_space_function(path, g: SpaceFunction) -> None:
    coords, vals = g.to_sparse()
    write_point_file(path, g.p, coords, vals)


def write_report(path, report: dict, fmt: str = "json") -> None:
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report, indent=1, default=_jsonable) + "\n")
        return
    rows = report.get("instances") or [_flatten(report)]
    keys = list(dict.fromkeys(k for r in rows for k in _flatten(r)))
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow(_flatten(r))


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v, default=_jsonable)
        else:
            out[key] = v
    return out


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")
