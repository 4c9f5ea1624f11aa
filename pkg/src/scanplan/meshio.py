"""Mesh and annotation file ingestion.

Supports Wavefront OBJ (``v``/``f`` records, normals and texcoords ignored)
and PLY in both ASCII and binary flavors. Polygon faces are fan-triangulated.
File-supplied normals are always discarded; normals are recomputed from
winding so behavior does not depend on exporter quirks.

Vertex coordinates are written back with shortest round-trip float
formatting, so ``load(save(mesh))`` reproduces the arrays bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MeshParseError
from .mesh import Annotation, AnnotationSet, TriangleMesh

_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def load_mesh(path, fmt="auto", unit_scale=1.0):
    """Load a triangle mesh from an OBJ or PLY file.

    Parameters
    ----------
    path : str or Path
    fmt : {"auto", "obj", "ply"}
      "auto" picks by file extension.
    unit_scale : float
      Multiplier applied to every coordinate (exports disagree on units).

    Returns
    -------
    TriangleMesh
    """
    path = Path(path)
    if fmt == "auto":
        suffix = path.suffix.lower()
        if suffix == ".obj":
            fmt = "obj"
        elif suffix == ".ply":
            fmt = "ply"
        else:
            raise MeshParseError(f"cannot infer format from suffix {suffix!r}", path=path)
    if fmt == "obj":
        mesh = _load_obj(path)
    elif fmt == "ply":
        mesh = _load_ply(path)
    else:
        raise MeshParseError(f"unknown format {fmt!r}", path=path)
    if unit_scale != 1.0:
        mesh = TriangleMesh(mesh.vertices * float(unit_scale), mesh.faces, mesh.provenance)
    return mesh


def save_obj(mesh, path, header_comment=None):
    """Write a mesh as OBJ with full-precision (round-trip) coordinates."""
    path = Path(path)
    lines = []
    if header_comment:
        for row in str(header_comment).splitlines():
            lines.append(f"# {row}")
    for x, y, z in mesh.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for a, b, c in mesh.faces + 1:
        lines.append(f"f {a} {b} {c}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _fan_triangulate(indices):
    return [(indices[0], indices[i], indices[i + 1]) for i in range(1, len(indices) - 1)]


def _load_obj(path):
    vertices = []
    faces = []
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise MeshParseError(f"unreadable file: {exc}", path=path) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshParseError("vertex record needs 3 coordinates", path=path, line=lineno)
            try:
                vertices.append((float(parts[1]), float(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise MeshParseError(f"bad vertex coordinate: {exc}", path=path, line=lineno) from exc
        elif tag == "f":
            if len(parts) < 4:
                raise MeshParseError("face record needs at least 3 indices", path=path, line=lineno)
            idx = []
            for token in parts[1:]:
                head = token.split("/", 1)[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise MeshParseError(f"bad face index {token!r}", path=path, line=lineno) from exc
                if i == 0:
                    raise MeshParseError("OBJ indices are 1-based; 0 is invalid", path=path, line=lineno)
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            for tri in _fan_triangulate(idx):
                if any(i < 0 or i >= len(vertices) for i in tri):
                    raise MeshParseError("face index out of range", path=path, line=lineno)
                faces.append(tri)
        # vn, vt, o, g, s, usemtl, mtllib: ignored
    return TriangleMesh(
        np.array(vertices, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        provenance=f"obj:{path.name}",
    )


def _load_ply(path):
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise MeshParseError(f"unreadable file: {exc}", path=path) from exc
    if not blob.startswith(b"ply"):
        raise MeshParseError("missing 'ply' magic", path=path, line=1)

    # header is always ASCII lines terminated by end_header
    lines = []
    offset = 0
    while True:
        eol = blob.find(b"\n", offset)
        if eol < 0:
            raise MeshParseError("header never ends", path=path)
        lines.append(blob[offset:eol].decode("ascii", errors="replace").strip())
        offset = eol + 1
        if lines[-1] == "end_header":
            break

    fmt = None
    elements = []  # (name, count, [(prop_name, dtype or ("list", count_t, item_t))])
    for lineno, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts or parts[0] in ("ply", "comment", "obj_info", "end_header"):
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise MeshParseError("property before element", path=path, line=lineno)
            if parts[1] == "list":
                elements[-1][2].append((parts[4], ("list", parts[2], parts[3])))
            else:
                elements[-1][2].append((parts[2], parts[1]))
    if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
        raise MeshParseError(f"unsupported ply format {fmt!r}", path=path)

    if fmt == "ascii":
        vertices, faces = _parse_ply_ascii(blob[offset:], elements, path)
    else:
        endian = "<" if fmt == "binary_little_endian" else ">"
        vertices, faces = _parse_ply_binary(blob[offset:], elements, endian, path)
    return TriangleMesh(vertices, faces, provenance=f"ply:{path.name}")


def _finish_ply(vertices, faces, path):
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    tri = []
    for face in faces:
        if len(face) < 3:
            raise MeshParseError("face with fewer than 3 indices", path=path)
        tri.extend(_fan_triangulate(list(face)))
    faces = np.array(tri, dtype=np.int64).reshape(-1, 3)
    if len(faces) and (faces.min() < 0 or faces.max() >= len(vertices)):
        raise MeshParseError("face index out of range", path=path)
    return vertices, faces


def _parse_ply_ascii(body, elements, path):
    rows = body.decode("ascii", errors="replace").split("\n")
    cursor = 0
    vertices = []
    faces = []
    for name, count, props in elements:
        for _ in range(count):
            while cursor < len(rows) and not rows[cursor].strip():
                cursor += 1
            if cursor >= len(rows):
                raise MeshParseError(f"truncated element {name!r}", path=path)
            tokens = rows[cursor].split()
            cursor += 1
            if name == "vertex":
                values = {}
                ti = 0
                for pname, ptype in props:
                    if isinstance(ptype, tuple):
                        n = int(tokens[ti])
                        ti += 1 + n
                    else:
                        values[pname] = float(tokens[ti])
                        ti += 1
                try:
                    vertices.append((values["x"], values["y"], values["z"]))
                except KeyError as exc:
                    raise MeshParseError("vertex element lacks x/y/z", path=path) from exc
            elif name == "face":
                ti = 0
                got = None
                for pname, ptype in props:
                    if isinstance(ptype, tuple):
                        n = int(tokens[ti])
                        items = [int(t) for t in tokens[ti + 1 : ti + 1 + n]]
                        ti += 1 + n
                        if pname in ("vertex_indices", "vertex_index"):
                            got = items
                    else:
                        ti += 1
                if got is not None:
                    faces.append(got)
    return _finish_ply(vertices, faces, path)


def _parse_ply_binary(body, elements, endian, path):
    vertices = []
    faces = []
    offset = 0
    for name, count, props in elements:
        fixed = all(not isinstance(ptype, tuple) for _, ptype in props)
        if fixed:
            dtype = np.dtype([(pname, endian + _PLY_SCALARS[ptype]) for pname, ptype in props])
            end = offset + dtype.itemsize * count
            if end > len(body):
                raise MeshParseError(f"truncated element {name!r}", path=path)
            table = np.frombuffer(body[offset:end], dtype=dtype)
            offset = end
            if name == "vertex":
                try:
                    vertices = np.column_stack(
                        [table["x"], table["y"], table["z"]]
                    ).astype(np.float64)
                except KeyError as exc:
                    raise MeshParseError("vertex element lacks x/y/z", path=path) from exc
        else:
            for _ in range(count):
                row_lists = {}
                for pname, ptype in props:
                    if isinstance(ptype, tuple):
                        _, count_t, item_t = ptype
                        cdt = np.dtype(endian + _PLY_SCALARS[count_t])
                        n = int(np.frombuffer(body, dtype=cdt, count=1, offset=offset)[0])
                        offset += cdt.itemsize
                        idt = np.dtype(endian + _PLY_SCALARS[item_t])
                        items = np.frombuffer(body, dtype=idt, count=n, offset=offset)
                        offset += idt.itemsize * n
                        row_lists[pname] = [int(i) for i in items]
                    else:
                        sdt = np.dtype(endian + _PLY_SCALARS[ptype])
                        offset += sdt.itemsize
                if name == "face":
                    got = row_lists.get("vertex_indices", row_lists.get("vertex_index"))
                    if got is not None:
                        faces.append(got)
    return _finish_ply(vertices, faces, path)


def load_annotations(path) -> AnnotationSet:
    """Read the JSON annotation sidecar.

    Format: a JSON array of objects with keys label, kind,
    position ``[x, y, z]`` and facing ``[x, y, z]``.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MeshParseError(f"bad annotation sidecar: {exc}", path=path) from exc
    if not isinstance(data, list):
        raise MeshParseError("annotation sidecar must be a JSON array", path=path)
    items = []
    for i, entry in enumerate(data):
        try:
            items.append(
                Annotation(
                    label=str(entry["label"]),
                    position=np.array(entry["position"], dtype=np.float64),
                    facing=np.array(entry["facing"], dtype=np.float64),
                    kind=entry.get("kind", "other"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MeshParseError(f"bad annotation entry {i}: {exc}", path=path) from exc
    return AnnotationSet(items)


def save_annotations(annotations, path):
    payload = [
        {
            "label": a.label,
            "kind": a.kind,
            "position": [float(x) for x in a.position],
            "facing": [float(x) for x in a.facing],
        }
        for a in annotations
    ]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
