"""Slice an oriented mesh into layers and draw them as an SVG floor plan.

A pen-and-ink plan superimposes many slices of the full mesh with partial
stroke opacity, so detail that repeats across altitudes reads darker. A
drafting plan slices the flat-wall replacement mesh, by default at a
single mid-story altitude. 3D (x, y, z) maps to the page as x right and
z up-the-page (flipped, since SVG y grows downward).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .mesh import TriangleMesh

OPACITY_DEFAULT = 0.5
SLICE_COUNT_DEFAULT = 100
SCALE_DEFAULT = 50.0        # px per meter
STROKE_WIDTH_DEFAULT = 0.5  # px
MERGE_TOL = 1e-7

_MARKER_COLOR = "#cc0000"


@dataclass(frozen=True)
class SlicePlan:
    """Evenly spaced slice altitudes from floor to ceiling inclusive."""

    y_floor: float
    y_ceiling: float
    n: int
    altitudes: tuple

    def __len__(self):
        return len(self.altitudes)


@dataclass(frozen=True)
class SliceLayer:
    """Line segments cut from the mesh by one horizontal plane."""

    altitude: float
    segments: np.ndarray     # (k, 2, 2) of (x, z) endpoints
    face_indices: np.ndarray  # (k,) source face per segment


@dataclass(frozen=True)
class Marker:
    label: str
    x: float
    z: float
    kind: str


@dataclass(frozen=True)
class FloorPlan:
    layers: tuple
    style: str                 # "pen_and_ink" or "drafting"
    opacity: float
    markers: tuple = ()
    bounds: tuple = None       # ((xmin, zmin), (xmax, zmax))

    def __post_init__(self):
        if self.style not in ("pen_and_ink", "drafting"):
            raise ValueError(f"unknown plan style {self.style!r}")
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError("opacity must be within [0, 1]")
        if self.bounds is None:
            object.__setattr__(self, "bounds", _bounds(self.layers, self.markers))


def make_slice_plan(y_floor, y_ceiling, n) -> SlicePlan:
    """Slice altitudes ``y_floor + (y_ceiling - y_floor) * (i / n)``, 0 <= i <= n."""
    if n < 1:
        raise ValueError("slice count must be at least 1")
    if not y_ceiling > y_floor:
        raise ValueError("ceiling must lie above floor")
    altitudes = tuple(y_floor + (y_ceiling - y_floor) * (i / n) for i in range(n + 1))
    return SlicePlan(float(y_floor), float(y_ceiling), int(n), altitudes)


def slice_mesh(mesh: TriangleMesh, altitude, include_coplanar=False) -> SliceLayer:
    """Intersect the mesh with the plane y = altitude.

    Each triangle straddling the plane contributes the segment between
    its two edge crossings, projected to (x, z). Triangles that touch the
    plane at a single vertex contribute nothing. A triangle edge lying in
    the plane is emitted once (by the triangle whose third vertex is
    above, so shared edges are not doubled). Triangles entirely in the
    plane are skipped unless `include_coplanar` is set; they are floor or
    ceiling slabs and are normally removed before slicing.
    """
    tri = mesh.triangles()
    ys = tri[:, :, 1]
    return _slice_triangles(
        tri, ys.min(axis=1), ys.max(axis=1), altitude, include_coplanar
    )


def _slice_triangles(all_tri, y_min, y_max, altitude, include_coplanar):
    if len(all_tri) == 0:
        return SliceLayer(float(altitude), np.zeros((0, 2, 2)), np.zeros(0, dtype=np.int64))
    near = (y_min <= altitude) & (y_max >= altitude)
    candidates = np.flatnonzero(near)
    if len(candidates) == 0:
        return SliceLayer(float(altitude), np.zeros((0, 2, 2)), np.zeros(0, dtype=np.int64))
    tri = all_tri[candidates]
    dy = tri[:, :, 1] - altitude
    pos = dy > 0
    neg = dy < 0
    zero = ~pos & ~neg
    n_pos = pos.sum(axis=1)
    n_neg = neg.sum(axis=1)
    n_zero = zero.sum(axis=1)

    chunks = []  # (local face indices, (k, 2, 2) segments)

    # basic case: vertices on both sides, no vertex on the plane
    basic = np.flatnonzero((n_zero == 0) & (n_pos > 0) & (n_neg > 0))
    if len(basic):
        lone = np.where(n_pos[basic] == 1, np.argmax(pos[basic], axis=1),
                        np.argmax(neg[basic], axis=1))
        others = np.stack([(lone + 1) % 3, (lone + 2) % 3], axis=1)
        rows = np.arange(len(basic))
        a = tri[basic, lone]
        ends = []
        for col in range(2):
            b = tri[basic, others[rows, col]]
            t = (altitude - a[:, 1]) / (b[:, 1] - a[:, 1])
            p = a + t[:, None] * (b - a)
            ends.append(p[:, [0, 2]])
        chunks.append((basic, np.stack(ends, axis=1)))

    # one vertex exactly on the plane, the other two on opposite sides
    vertex_case = np.flatnonzero((n_zero == 1) & (n_pos == 1) & (n_neg == 1))
    if len(vertex_case):
        onplane = np.argmax(zero[vertex_case], axis=1)
        rows = np.arange(len(vertex_case))
        i1 = (onplane + 1) % 3
        i2 = (onplane + 2) % 3
        p = tri[vertex_case, onplane][:, [0, 2]]
        a = tri[vertex_case, i1]
        b = tri[vertex_case, i2]
        t = (altitude - a[:, 1]) / (b[:, 1] - a[:, 1])
        q = (a + t[:, None] * (b - a))[:, [0, 2]]
        chunks.append((vertex_case, np.stack([p, q], axis=1)))

    # one edge in the plane: emit only when the remaining vertex is above,
    # so the edge shared with the neighboring triangle is not drawn twice
    edge_case = np.flatnonzero((n_zero == 2) & (n_pos == 1))
    if len(edge_case):
        first = np.argmax(zero[edge_case], axis=1)
        flipped = zero[edge_case].copy()
        flipped[np.arange(len(edge_case)), first] = False
        second = np.argmax(flipped, axis=1)
        p = tri[edge_case, first][:, [0, 2]]
        q = tri[edge_case, second][:, [0, 2]]
        chunks.append((edge_case, np.stack([p, q], axis=1)))

    if include_coplanar:
        coplanar = np.flatnonzero(n_zero == 3)
        for i, j in ((0, 1), (1, 2), (2, 0)):
            if len(coplanar):
                chunks.append(
                    (coplanar, np.stack(
                        [tri[coplanar, i][:, [0, 2]], tri[coplanar, j][:, [0, 2]]], axis=1
                    ))
                )

    if not chunks:
        return SliceLayer(float(altitude), np.zeros((0, 2, 2)), np.zeros(0, dtype=np.int64))
    idx = np.concatenate([candidates[c[0]] for c in chunks])
    seg = np.concatenate([c[1] for c in chunks])
    order = np.argsort(idx, kind="stable")
    return SliceLayer(float(altitude), seg[order], idx[order])


def slice_layers(mesh, plan: SlicePlan, include_coplanar=False):
    tri = mesh.triangles()
    if len(tri) == 0:
        return tuple(
            SliceLayer(float(y), np.zeros((0, 2, 2)), np.zeros(0, dtype=np.int64))
            for y in plan.altitudes
        )
    ys = tri[:, :, 1]
    y_min = ys.min(axis=1)
    y_max = ys.max(axis=1)
    return tuple(
        _slice_triangles(tri, y_min, y_max, y, include_coplanar) for y in plan.altitudes
    )


def project_annotations(annotations):
    """Drop y: each annotation becomes a 2D marker at its (x, z)."""
    return tuple(
        Marker(label=a.label, x=float(a.position[0]), z=float(a.position[2]), kind=a.kind)
        for a in annotations
    )


def _bounds(layers, markers=()):
    xs = []
    zs = []
    for layer in layers:
        if len(layer.segments):
            xs.append(layer.segments[:, :, 0])
            zs.append(layer.segments[:, :, 1])
    for m in markers:
        xs.append(np.array([m.x]))
        zs.append(np.array([m.z]))
    if not xs:
        return ((0.0, 0.0), (0.0, 0.0))
    x = np.concatenate([a.ravel() for a in xs])
    z = np.concatenate([a.ravel() for a in zs])
    return ((float(x.min()), float(z.min())), (float(x.max()), float(z.max())))


def merge_collinear(segments, tol=MERGE_TOL):
    """Merge collinear segments that touch (within `tol`) into single spans.

    Segments are grouped by carrier line (canonical direction plus
    perpendicular offset, both quantized at `tol`); within one line,
    spans whose parameter ranges touch or overlap collapse into one.
    Used only to compress SVG paths; geometric post-processing always
    works on the raw per-triangle segments.

    Returns
    -------
    (m, 2, 2) array of [start, end] spans, ordered by first appearance.
    """
    segments = np.asarray(segments, dtype=np.float64)
    if len(segments) == 0:
        return np.zeros((0, 2, 2))
    d = segments[:, 1] - segments[:, 0]
    length = np.hypot(d[:, 0], d[:, 1])

    degenerate = np.flatnonzero(length <= tol)
    idx = np.flatnonzero(length > tol)
    pieces = [(degenerate, segments[degenerate])]

    if len(idx):
        seg = segments[idx].copy()
        u = d[idx] / length[idx][:, None]
        flip = (u[:, 0] < 0) | ((u[:, 0] == 0) & (u[:, 1] < 0))
        u[flip] = -u[flip]
        seg[flip] = seg[flip][:, ::-1]
        offset = seg[:, 0, 1] * u[:, 0] - seg[:, 0, 0] * u[:, 1]
        t0 = seg[:, 0, 0] * u[:, 0] + seg[:, 0, 1] * u[:, 1]
        t1 = seg[:, 1, 0] * u[:, 0] + seg[:, 1, 1] * u[:, 1]
        # direction quantized more coarsely than position: 1e-4 rad of
        # wobble over a room-sized line stays far under a stroke width
        keys = np.column_stack(
            [
                np.round(u[:, 0] / 1e-4),
                np.round(u[:, 1] / 1e-4),
                np.round(offset / max(tol, 1e-5)),
            ]
        ).astype(np.int64)
        order = np.lexsort((t0, keys[:, 2], keys[:, 1], keys[:, 0]))
        k_s = keys[order]
        t0_s = t0[order]
        t1_s = t1[order]
        new_group = np.ones(len(order), dtype=bool)
        new_group[1:] = np.any(k_s[1:] != k_s[:-1], axis=1)
        # segmented running max of t1: shift each group into its own band
        # so the global cumulative max cannot leak across groups
        gid = np.cumsum(new_group) - 1
        band = (np.ptp(t1_s) if len(t1_s) > 1 else 1.0) + np.ptp(t0_s) + 1.0
        reach = np.maximum.accumulate(t1_s + gid * band) - gid * band
        new_span = new_group.copy()
        new_span[1:] |= t0_s[1:] > reach[:-1] + tol
        span_id = np.cumsum(new_span) - 1
        starts = np.flatnonzero(new_span)
        span_start = seg[order[starts], 0]
        # span end point: the member whose t1 is largest (last after a
        # stable sort by t1 within the span)
        sub = np.lexsort((t1_s, span_id))
        ends_rows = sub[np.append(starts[1:] - 1, len(order) - 1)]
        span_end = seg[order[ends_rows], 1]
        first_input = np.minimum.reduceat(idx[order], starts)
        pieces.append((first_input, np.stack([span_start, span_end], axis=1)))

    all_first = np.concatenate([p[0] for p in pieces])
    all_spans = np.concatenate(
        [p[1] if len(p[1]) else np.zeros((0, 2, 2)) for p in pieces]
    )
    return all_spans[np.argsort(all_first, kind="stable")]


def render_svg(
    plan: FloorPlan,
    stroke_width=STROKE_WIDTH_DEFAULT,
    scale=SCALE_DEFAULT,
    padding=10.0,
    config_note=None,
):
    """Serialize a floor plan to a standalone SVG 1.1 document (a string).

    One group per layer, stroke opacity taken from the plan so features
    present at several altitudes read darker. Layers are ordered by
    altitude and segments by source face, making the bytes reproducible
    for identical inputs. Annotation markers are drawn in red on top.
    """
    (x0, z0), (x1, z1) = plan.bounds
    if not (x1 > x0 or z1 > z0) and not plan.markers:
        raise GeometryError("plan has empty bounds; nothing to render")
    width = (x1 - x0) * scale + 2 * padding
    height = (z1 - z0) * scale + 2 * padding

    def sx(x):
        return (x - x0) * scale + padding

    def sz(z):
        return (z1 - z) * scale + padding  # flip: +z runs up the page

    fmt = "{:.4f}".format
    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{fmt(width)}px" height="{fmt(height)}px" '
        f'viewBox="0 0 {fmt(width)} {fmt(height)}">'
    )
    desc = f"style={plan.style} opacity={plan.opacity} layers={len(plan.layers)}"
    if config_note:
        desc += " | " + config_note
    out.append(f"<desc>{_xml_escape(desc)}</desc>")
    for layer in sorted(plan.layers, key=lambda l: l.altitude):
        out.append(
            f'<g stroke="#000000" stroke-opacity="{plan.opacity}" '
            f'stroke-width="{fmt(stroke_width)}" fill="none" stroke-linecap="round" '
            f'data-altitude="{fmt(layer.altitude)}">'
        )
        spans = merge_collinear(layer.segments)
        if len(spans):
            px = (spans[:, :, 0] - x0) * scale + padding
            pz = (z1 - spans[:, :, 1]) * scale + padding
            cols = np.char.mod(
                "%.4f", np.stack([px[:, 0], pz[:, 0], px[:, 1], pz[:, 1]], axis=1)
            )
            # all spans of a layer share one path: "M x z L x z M ..."
            rows = np.char.add(
                np.char.add(np.char.add("M ", cols[:, 0]), np.char.add(" ", cols[:, 1])),
                np.char.add(np.char.add(" L ", cols[:, 2]), np.char.add(" ", cols[:, 3])),
            )
            out.append('<path d="' + " ".join(rows.tolist()) + '"/>')
        out.append("</g>")
    if plan.markers:
        out.append(f'<g fill="{_MARKER_COLOR}" stroke="{_MARKER_COLOR}">')
        for m in plan.markers:
            out.extend(_marker_svg(m, sx(m.x), sz(m.z), fmt))
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _marker_svg(marker, cx, cz, fmt):
    rows = []
    if marker.kind == "sensor":
        rows.append(f'<circle cx="{fmt(cx)}" cy="{fmt(cz)}" r="4"/>')
    elif marker.kind == "thermostat":
        rows.append(
            f'<circle cx="{fmt(cx)}" cy="{fmt(cz)}" r="4" fill="none" stroke-width="1.5"/>'
        )
    elif marker.kind == "window":
        rows.append(
            f'<rect x="{fmt(cx - 5)}" y="{fmt(cz - 2)}" width="10" height="4"/>'
        )
    elif marker.kind == "door":
        rows.append(
            f'<path d="M {fmt(cx - 4)} {fmt(cz + 4)} L {fmt(cx - 4)} {fmt(cz - 4)} '
            f'A 8 8 0 0 1 {fmt(cx + 4)} {fmt(cz + 4)}" fill="none" stroke-width="1.5"/>'
        )
    else:
        rows.append(
            f'<path d="M {fmt(cx - 3)} {fmt(cz - 3)} L {fmt(cx + 3)} {fmt(cz + 3)} '
            f'M {fmt(cx - 3)} {fmt(cz + 3)} L {fmt(cx + 3)} {fmt(cz - 3)}" stroke-width="1.5"/>'
        )
    rows.append(
        f'<text x="{fmt(cx + 6)}" y="{fmt(cz - 6)}" font-size="8" '
        f'font-family="sans-serif" stroke="none">{_xml_escape(marker.label)}</text>'
    )
    return rows


def _xml_escape(text):
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def polygon_area(points):
    """Shoelace area of a simple polygon given as (n, 2) points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("polygon needs at least 3 points of 2 coordinates")
    if _self_intersects(pts):
        raise GeometryError("self-intersecting room polygon")
    x = pts[:, 0]
    z = pts[:, 1]
    return float(abs(np.dot(x, np.roll(z, -1)) - np.dot(z, np.roll(x, -1))) / 2.0)


def _self_intersects(pts):
    n = len(pts)
    edges = [(pts[i], pts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # shared endpoint
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def load_room_polygons(path):
    """Room polygons for measure_report from a JSON file.

    Expects an array of ``{label, actual_area_m2, polygon: [[x, z], ...]}``.
    """
    import json
    from pathlib import Path

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise GeometryError("room polygon file must hold a JSON array")
    for i, room in enumerate(data):
        missing = {"label", "actual_area_m2", "polygon"} - set(room)
        if missing:
            raise GeometryError(f"room entry {i} lacks {sorted(missing)}")
    return data


def measure_report(plan, rooms):
    """Per-room measured area and signed percent error.

    Each room is a dict with ``label``, ``actual_area_m2`` and ``polygon``
    (a list of [x, z] points traced on the plan). The error is
    ``(actual - measured) / actual * 100``, so an undersized measurement
    yields a positive error.
    """
    report = []
    for room in rooms:
        measured = polygon_area(room["polygon"])
        actual = float(room["actual_area_m2"])
        error = (actual - measured) / actual * 100.0
        report.append(
            {
                "label": str(room["label"]),
                "actual_area_m2": actual,
                "measured_area_m2": measured,
                "error_percent": error,
            }
        )
    return report
