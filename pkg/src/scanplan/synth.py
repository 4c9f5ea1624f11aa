"""Procedural ground-truth buildings and end-to-end evaluation.

Real headset scans are noisy, holey, and cluttered; this module builds
rectangular multi-story buildings with exactly known geometry and then
degrades them the same way scans degrade: vertex jitter, missing faces,
clutter boxes at arbitrary angles, and stray triangles bridging wall
corners. Every face carries a label, so each pipeline stage can be scored
against the truth.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import (
    Annotation,
    AnnotationSet,
    RigidTransform,
    TriangleMesh,
    apply_transform,
    rotation_about_x,
    rotation_about_y,
    rotation_about_z,
)

KIND_FLOOR = 0
KIND_CEILING = 1
KIND_WALL = 2
KIND_CLUTTER = 3
KIND_BRIDGE = 4

KIND_NAMES = {KIND_FLOOR: "floor", KIND_CEILING: "ceiling", KIND_WALL: "wall",
              KIND_CLUTTER: "clutter", KIND_BRIDGE: "bridge"}

# wall ids per room; the normal points into the room
_WALL_DEFS = (
    ("x0", np.array([1.0, 0.0, 0.0])),
    ("x1", np.array([-1.0, 0.0, 0.0])),
    ("z0", np.array([0.0, 0.0, 1.0])),
    ("z1", np.array([0.0, 0.0, -1.0])),
)


@dataclass(frozen=True)
class RoomSpec:
    """One rectangular room; `wing_deg` spins it about its own center."""

    label: str
    rect: tuple  # (x0, z0, x1, z1) in meters
    wing_deg: float = 0.0
    omit_walls: tuple = ()  # wall ids among "x0","x1","z0","z1" not scanned

    @property
    def area(self):
        x0, z0, x1, z1 = self.rect
        return (x1 - x0) * (z1 - z0)


@dataclass(frozen=True)
class StorySpec:
    height: float
    rooms: tuple

    def __post_init__(self):
        object.__setattr__(self, "rooms", tuple(self.rooms))
        if self.height <= 0:
            raise ValueError("story height must be positive")


@dataclass(frozen=True)
class BuildingSpec:
    stories: tuple
    wall_thickness: float = 0.3   # also the slab between stories
    clutter_density: float = 0.0  # boxes per square meter of floor
    tilt_x_deg: float = 0.0
    tilt_z_deg: float = 0.0
    yaw_deg: float = 0.0
    noise_sigma: float = 0.0
    hole_fraction: float = 0.0
    bridge_fraction: float = 0.0  # bridging triangles per wall face
    edge_target: float = 0.3
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "stories", tuple(self.stories))
        if not self.stories:
            raise ValueError("building needs at least one story")
        if not 0.0 <= self.hole_fraction < 1.0:
            raise ValueError("hole_fraction must be in [0, 1)")
        if self.edge_target <= 0:
            raise ValueError("edge_target must be positive")


def single_room_spec(width=5.0, depth=4.0, height=2.7, **kwargs):
    """Convenience spec: one rectangular room with its corner at the origin."""
    room = RoomSpec("room", (0.0, 0.0, width, depth))
    return BuildingSpec(stories=(StorySpec(height, (room,)),), **kwargs)


@dataclass
class GroundTruth:
    """Per-face labels plus the exact geometry the generator used."""

    kinds: np.ndarray
    story_ids: np.ndarray
    wall_ids: np.ndarray
    wall_planes: list        # dicts: normal, offset, center, story, room, wall
    floor_y: tuple           # per story, level frame
    ceiling_y: tuple
    room_areas: dict
    room_rects: dict         # axis-aligned rooms only (wing_deg == 0)
    room_story: dict
    applied: RigidTransform

    @property
    def story_count(self):
        return len(self.floor_y)


class _MeshBuilder:
    def __init__(self):
        self.vertex_blocks = []
        self.face_blocks = []
        self.kind_blocks = []
        self.story_blocks = []
        self.wall_blocks = []
        self.vertex_count = 0
        self.face_count = 0

    def _push(self, vertices, faces, kind, story, wall):
        self.vertex_blocks.append(vertices)
        self.face_blocks.append(faces + self.vertex_count)
        n = len(faces)
        self.kind_blocks.append(np.full(n, kind, dtype=np.int64))
        self.story_blocks.append(np.full(n, story, dtype=np.int64))
        self.wall_blocks.append(np.full(n, wall, dtype=np.int64))
        self.vertex_count += len(vertices)
        self.face_count += n

    def add_grid(self, origin, d1, length1, d2, length2, edge, kind, story, wall=-1,
                 transform=None):
        n1 = max(1, int(np.ceil(length1 / edge)))
        n2 = max(1, int(np.ceil(length2 / edge)))
        i = np.arange(n1 + 1)
        j = np.arange(n2 + 1)
        f1 = (length1 * i / n1)[None, :, None]
        f2 = (length2 * j / n2)[:, None, None]
        points = (origin[None, None, :] + d1[None, None, :] * f1
                  + d2[None, None, :] * f2).reshape(-1, 3)
        if transform is not None:
            points = transform.apply_points(points)

        ci, cj = np.meshgrid(np.arange(n1), np.arange(n2))
        v00 = cj * (n1 + 1) + ci
        v10 = v00 + 1
        v01 = v00 + (n1 + 1)
        v11 = v01 + 1
        faces = np.stack(
            [np.stack([v00, v10, v11], axis=-1), np.stack([v00, v11, v01], axis=-1)],
            axis=2,
        ).reshape(-1, 3)
        self._push(points, faces, kind, story, wall)

    def add_triangle(self, p, q, r, kind, story):
        self._push(np.array([p, q, r]), np.array([[0, 1, 2]], dtype=np.int64),
                   kind, story, -1)

    def arrays(self):
        return (
            np.vstack(self.vertex_blocks),
            np.vstack(self.face_blocks).astype(np.int64),
            np.concatenate(self.kind_blocks),
            np.concatenate(self.story_blocks),
            np.concatenate(self.wall_blocks),
        )


def _room_transform(room: RoomSpec):
    if room.wing_deg == 0.0:
        return None
    x0, z0, x1, z1 = room.rect
    center = np.array([(x0 + x1) / 2.0, 0.0, (z0 + z1) / 2.0])
    rot = rotation_about_y(np.radians(room.wing_deg))
    # spin about the room center: conjugate the rotation with the offset
    return RigidTransform(rot.rotation, center - rot.rotation @ center)


def _wall_frames(room, y_base, height):
    """Per wall id: (origin, along, up extent, inward normal)."""
    x0, z0, x1, z1 = room.rect
    wx = x1 - x0
    wz = z1 - z0
    y = np.array([0.0, 1.0, 0.0])
    frames = {
        "x0": (np.array([x0, y_base, z0]), np.array([0.0, 0.0, 1.0]), wz, _WALL_DEFS[0][1]),
        "x1": (np.array([x1, y_base, z0]), np.array([0.0, 0.0, 1.0]), wz, _WALL_DEFS[1][1]),
        "z0": (np.array([x0, y_base, z0]), np.array([1.0, 0.0, 0.0]), wx, _WALL_DEFS[2][1]),
        "z1": (np.array([x0, y_base, z1]), np.array([1.0, 0.0, 0.0]), wx, _WALL_DEFS[3][1]),
    }
    return frames, y, height


def generate(spec: BuildingSpec):
    """Build the labeled mesh, its annotations, and the ground truth.

    Construction happens in a level, axis-aligned frame; the requested
    tilt and yaw are applied at the very end and recorded in the truth so
    recovered orientations can be scored. Everything is driven by one
    seeded generator, so identical specs yield identical bits.

    Returns
    -------
    (TriangleMesh, AnnotationSet, GroundTruth)
    """
    rng = np.random.default_rng(spec.seed)
    builder = _MeshBuilder()
    edge = spec.edge_target

    floor_ys = []
    ceiling_ys = []
    wall_planes = []
    room_areas = {}
    room_rects = {}
    room_story = {}
    annotations = []

    y_base = 0.0
    for s, story in enumerate(spec.stories):
        floor_ys.append(y_base)
        ceiling_ys.append(y_base + story.height)
        for room in story.rooms:
            if room.label in room_areas:
                raise ValueError(f"duplicate room label {room.label!r}")
            transform = _room_transform(room)
            x0, z0, x1, z1 = room.rect
            room_areas[room.label] = room.area
            room_story[room.label] = s
            if transform is None:
                room_rects[room.label] = room.rect

            builder.add_grid(
                np.array([x0, y_base, z0]), np.array([0.0, 0.0, 1.0]), z1 - z0,
                np.array([1.0, 0.0, 0.0]), x1 - x0, edge, KIND_FLOOR, s,
                transform=transform,
            )
            builder.add_grid(
                np.array([x0, y_base + story.height, z0]), np.array([1.0, 0.0, 0.0]),
                x1 - x0, np.array([0.0, 0.0, 1.0]), z1 - z0, edge, KIND_CEILING, s,
                transform=transform,
            )

            frames, up, height = _wall_frames(room, y_base, story.height)
            for wall_id, normal0 in _WALL_DEFS:
                if wall_id in room.omit_walls:
                    continue
                origin, along, span, normal = frames[wall_id]
                wall_index = len(wall_planes)
                # wedge order (up, along) or (along, up) sets the normal sign
                if wall_id in ("x0", "z1"):
                    d1, l1, d2, l2 = up, height, along, span
                else:
                    d1, l1, d2, l2 = along, span, up, height
                builder.add_grid(origin, d1, l1, d2, l2, edge, KIND_WALL, s,
                                 wall=wall_index, transform=transform)
                center = origin + along * (span / 2.0) + up * (height / 2.0)
                if transform is not None:
                    normal = transform.apply_directions(normal0)
                    center = transform.apply_points(center)
                else:
                    normal = normal0
                wall_planes.append(
                    {
                        "normal": normal,
                        "offset": float(np.dot(center, normal)),
                        "center": center,
                        "story": s,
                        "room": room.label,
                        "wall": wall_id,
                        "area": span * height,
                    }
                )

            # facade band bridging this story's walls to the next floor slab
            if s + 1 < len(spec.stories) and spec.wall_thickness > 0:
                band_base = y_base + story.height
                frames_band, up_b, _ = _wall_frames(room, band_base, spec.wall_thickness)
                for wall_id, _ in _WALL_DEFS:
                    if wall_id in room.omit_walls:
                        continue
                    origin, along, span, _normal = frames_band[wall_id]
                    if wall_id in ("x0", "z1"):
                        d1, l1, d2, l2 = up_b, spec.wall_thickness, along, span
                    else:
                        d1, l1, d2, l2 = along, span, up_b, spec.wall_thickness
                    builder.add_grid(origin, d1, l1, d2, l2, edge, KIND_WALL, s,
                                     wall=-1, transform=transform)

            # one sensor annotation per room, stuck to the x0 wall
            if "x0" not in room.omit_walls:
                pos = np.array([x0, y_base + min(1.2, story.height / 2.0), (z0 + z1) / 2.0])
                facing = np.array([1.0, 0.0, 0.0])
                if transform is not None:
                    pos = transform.apply_points(pos)
                    facing = transform.apply_directions(facing)
                annotations.append(
                    Annotation(label=f"sensor-{room.label}", position=pos,
                               facing=facing, kind="sensor")
                )
        y_base = ceiling_ys[-1] + spec.wall_thickness

    _add_clutter(builder, spec, rng, floor_ys)
    _add_bridges(builder, spec, rng, floor_ys)

    vertices, faces, kinds, stories, walls = builder.arrays()

    if spec.noise_sigma > 0:
        vertices = vertices + rng.normal(0.0, spec.noise_sigma, vertices.shape)

    if spec.hole_fraction > 0:
        n_drop = int(np.floor(spec.hole_fraction * len(faces)))
        drop = rng.choice(len(faces), size=n_drop, replace=False)
        keep = np.ones(len(faces), dtype=bool)
        keep[drop] = False
        faces = faces[keep]
        kinds = kinds[keep]
        stories = stories[keep]
        walls = walls[keep]

    applied = (
        rotation_about_y(np.radians(spec.yaw_deg))
        .after(rotation_about_z(np.radians(spec.tilt_z_deg)))
        .after(rotation_about_x(np.radians(spec.tilt_x_deg)))
    )
    mesh = TriangleMesh(vertices, faces, provenance=f"synth:{spec.seed}")
    mesh, annotation_set = apply_transform(mesh, AnnotationSet(annotations), applied)

    truth = GroundTruth(
        kinds=kinds,
        story_ids=stories,
        wall_ids=walls,
        wall_planes=wall_planes,
        floor_y=tuple(floor_ys),
        ceiling_y=tuple(ceiling_ys),
        room_areas=room_areas,
        room_rects=room_rects,
        room_story=room_story,
        applied=applied,
    )
    return mesh, annotation_set, truth


def _add_clutter(builder, spec, rng, floor_ys):
    if spec.clutter_density <= 0:
        return
    margin = 0.9
    for s, story in enumerate(spec.stories):
        for room in story.rooms:
            x0, z0, x1, z1 = room.rect
            count = int(round(spec.clutter_density * room.area))
            transform = _room_transform(room)
            for _ in range(count):
                wx = rng.uniform(0.4, 1.2)
                wz = rng.uniform(0.4, 1.2)
                hgt = rng.uniform(0.5, min(1.2, story.height - 0.5))
                lo_x, hi_x = x0 + margin + wx / 2, x1 - margin - wx / 2
                lo_z, hi_z = z0 + margin + wz / 2, z1 - margin - wz / 2
                if lo_x >= hi_x or lo_z >= hi_z:
                    continue
                cx = rng.uniform(lo_x, hi_x)
                cz = rng.uniform(lo_z, hi_z)
                yaw = rng.uniform(0.0, np.pi)
                spin = rotation_about_y(yaw)
                box = RigidTransform(
                    spin.rotation,
                    np.array([cx, 0.0, cz]) - spin.rotation @ np.array([cx, 0.0, cz]),
                )
                combined = box if transform is None else transform.after(box)
                _add_box(builder, spec, (cx, cz), (wx, wz, hgt), floor_ys[s], s, combined)


def _add_box(builder, spec, center, size, y_base, story, transform):
    cx, cz = center
    wx, wz, hgt = size
    edge = max(spec.edge_target, 0.2)
    x0, x1 = cx - wx / 2, cx + wx / 2
    z0, z1 = cz - wz / 2, cz + wz / 2
    xhat = np.array([1.0, 0.0, 0.0])
    yhat = np.array([0.0, 1.0, 0.0])
    zhat = np.array([0.0, 0.0, 1.0])
    # top
    builder.add_grid(np.array([x0, y_base + hgt, z0]), zhat, wz, xhat, wx, edge,
                     KIND_CLUTTER, story, transform=transform)
    # four sides, normals outward
    builder.add_grid(np.array([x0, y_base, z0]), zhat, wz, yhat, hgt, edge,
                     KIND_CLUTTER, story, transform=transform)        # -x side
    builder.add_grid(np.array([x1, y_base, z0]), yhat, hgt, zhat, wz, edge,
                     KIND_CLUTTER, story, transform=transform)        # +x side
    builder.add_grid(np.array([x0, y_base, z0]), yhat, hgt, xhat, wx, edge,
                     KIND_CLUTTER, story, transform=transform)        # -z side
    builder.add_grid(np.array([x0, y_base, z1]), xhat, wx, yhat, hgt, edge,
                     KIND_CLUTTER, story, transform=transform)        # +z side


def _add_bridges(builder, spec, rng, floor_ys):
    if spec.bridge_fraction <= 0:
        return
    n_wall_faces = int(sum(np.count_nonzero(k == KIND_WALL) for k in builder.kind_blocks))
    count = int(round(spec.bridge_fraction * n_wall_faces))
    if count == 0:
        return
    corners_all = []
    for s, story in enumerate(spec.stories):
        for room in story.rooms:
            x0, z0, x1, z1 = room.rect
            transform = _room_transform(room)
            for cx, cz, da, db in (
                (x0, z0, np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
                (x1, z0, np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
                (x0, z1, np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, -1.0])),
                (x1, z1, np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, -1.0])),
            ):
                corners_all.append((s, story.height, np.array([cx, floor_ys[s], cz]),
                                    da, db, transform))
    for _ in range(count):
        s, height, corner, da, db, transform = corners_all[int(rng.integers(len(corners_all)))]
        y = rng.uniform(0.2, height - 0.2)
        p = corner + da * rng.uniform(0.0, 0.3) + np.array([0.0, y, 0.0])
        q = corner + db * rng.uniform(0.0, 0.3) + np.array([0.0, y + rng.uniform(-0.15, 0.15), 0.0])
        r = corner + da * rng.uniform(0.0, 0.3) + np.array([0.0, y + rng.uniform(0.05, 0.25), 0.0])
        if transform is not None:
            p = transform.apply_points(p)
            q = transform.apply_points(q)
            r = transform.apply_points(r)
        builder.add_triangle(p, q, r, KIND_BRIDGE, s)


def spec_from_dict(data) -> BuildingSpec:
    stories = []
    for story in data["stories"]:
        rooms = [
            RoomSpec(
                label=r["label"],
                rect=tuple(float(v) for v in r["rect"]),
                wing_deg=float(r.get("wing_deg", 0.0)),
                omit_walls=tuple(r.get("omit_walls", ())),
            )
            for r in story["rooms"]
        ]
        stories.append(StorySpec(height=float(story["height"]), rooms=tuple(rooms)))
    keys = (
        "wall_thickness", "clutter_density", "tilt_x_deg", "tilt_z_deg", "yaw_deg",
        "noise_sigma", "hole_fraction", "bridge_fraction", "edge_target", "seed",
    )
    extra = {k: data[k] for k in keys if k in data}
    if "seed" in extra:
        extra["seed"] = int(extra["seed"])
    return BuildingSpec(stories=tuple(stories), **extra)


def spec_to_dict(spec: BuildingSpec):
    return {
        "stories": [
            {
                "height": story.height,
                "rooms": [
                    {
                        "label": r.label,
                        "rect": list(r.rect),
                        "wing_deg": r.wing_deg,
                        "omit_walls": list(r.omit_walls),
                    }
                    for r in story.rooms
                ],
            }
            for story in spec.stories
        ],
        "wall_thickness": spec.wall_thickness,
        "clutter_density": spec.clutter_density,
        "tilt_x_deg": spec.tilt_x_deg,
        "tilt_z_deg": spec.tilt_z_deg,
        "yaw_deg": spec.yaw_deg,
        "noise_sigma": spec.noise_sigma,
        "hole_fraction": spec.hole_fraction,
        "bridge_fraction": spec.bridge_fraction,
        "edge_target": spec.edge_target,
        "seed": spec.seed,
    }


def load_spec(path) -> BuildingSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_spec(spec, path):
    Path(path).write_text(
        json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def truth_to_dict(truth: GroundTruth):
    return {
        "kinds": [KIND_NAMES[int(k)] for k in truth.kinds],
        "story_ids": [int(s) for s in truth.story_ids],
        "wall_ids": [int(w) for w in truth.wall_ids],
        "wall_planes": [
            {
                "normal": [float(v) for v in p["normal"]],
                "offset": p["offset"],
                "center": [float(v) for v in p["center"]],
                "story": p["story"],
                "room": p["room"],
                "wall": p["wall"],
                "area": p["area"],
            }
            for p in truth.wall_planes
        ],
        "floor_y": list(truth.floor_y),
        "ceiling_y": list(truth.ceiling_y),
        "room_areas": dict(truth.room_areas),
        "applied_rotation": [[float(v) for v in row] for row in truth.applied.rotation],
    }


# ---------------------------------------------------------------------------
# end-to-end scoring

WALL_ANGLE_TOL_DEG = 3.0
WALL_OFFSET_TOL = 0.05


def _quarter_snap(net_rotation):
    """Nearest quarter-turn rotation about y, and the leftover yaw (radians)."""
    from .mesh import in_plane_angle
    from .orientation import wrap_quarter_turn

    yaw = in_plane_angle(net_rotation @ np.array([1.0, 0.0, 0.0]))
    residual = wrap_quarter_turn(yaw)
    snapped = yaw - residual
    return rotation_about_y(snapped).rotation, residual, snapped


def match_walls(extracted, truth_planes, quarter):
    """Recall and precision of extracted wall planes against the truth.

    An extracted wall matches a truth plane when their normals agree
    within 3 degrees and the truth wall's center lies within 5 cm of the
    extracted plane. `quarter` maps truth geometry into the recovered
    frame (the yaw is only determined modulo 90 degrees).
    """
    from .mesh import angle_between

    angle_tol = np.radians(WALL_ANGLE_TOL_DEG)
    matched_truth = np.zeros(len(truth_planes), dtype=bool)
    matched_ext = np.zeros(len(extracted), dtype=bool)
    for ti, tp in enumerate(truth_planes):
        n_t = quarter @ np.asarray(tp["normal"], dtype=np.float64)
        c_t = quarter @ np.asarray(tp["center"], dtype=np.float64)
        for ei, wall in enumerate(extracted):
            n_e = np.asarray(wall["normal"], dtype=np.float64)
            if angle_between(n_e, n_t) > angle_tol:
                continue
            if abs(float(np.dot(c_t, n_e)) - float(wall["offset"])) > WALL_OFFSET_TOL:
                continue
            matched_truth[ti] = True
            matched_ext[ei] = True
    recall = float(matched_truth.mean()) if len(truth_planes) else 1.0
    precision = float(matched_ext.mean()) if len(extracted) else 1.0
    return recall, precision, matched_truth, matched_ext


def _merge_lines(lines, pos_tol=0.03):
    """Merge lines whose positions coincide; extents take the union."""
    merged = []
    for pos, a, b in sorted(lines):
        if merged and pos - merged[-1][0] <= pos_tol:
            prev_pos, pa, pb = merged[-1]
            merged[-1] = (prev_pos, min(pa, a), max(pb, b))
        else:
            merged.append((pos, a, b))
    return merged


def _axis_lines(segments, axis_tol=0.02):
    """Split plan segments into near-vertical and near-horizontal lines."""
    vertical = []  # (x position, z0, z1)
    horizontal = []
    for x1, z1, x2, z2 in segments:
        if abs(x1 - x2) <= axis_tol:
            vertical.append(((x1 + x2) / 2.0, min(z1, z2), max(z1, z2)))
        elif abs(z1 - z2) <= axis_tol:
            horizontal.append(((z1 + z2) / 2.0, min(x1, x2), max(x1, x2)))
    return _merge_lines(vertical), _merge_lines(horizontal)


def _snap_side(lines, target, span, snap_tol):
    """Nearest line position to `target` whose extent overlaps `span` enough."""
    lo, hi = span
    need = 0.5 * (hi - lo)
    best = None
    for pos, a, b in lines:
        if abs(pos - target) > snap_tol:
            continue
        overlap = min(b, hi) - max(a, lo)
        if overlap < need:
            continue
        if best is None or abs(pos - target) < abs(best - target):
            best = pos
    return best


def measure_rooms_from_plan(segments, room_rects, snap_tol=0.3):
    """Read room areas off a drafting plan by snapping sides to wall lines.

    Mirrors measuring a printed plan by hand: each side of the known room
    rectangle snaps to the nearest drawn wall line; the measured area is
    the rectangle those four lines bound. Rooms with a missing side
    measure as None.
    """
    vertical, horizontal = _axis_lines(segments)
    out = {}
    for label, rect in room_rects.items():
        x0, z0, x1, z1 = rect
        mx0 = _snap_side(vertical, x0, (z0, z1), snap_tol)
        mx1 = _snap_side(vertical, x1, (z0, z1), snap_tol)
        mz0 = _snap_side(horizontal, z0, (x0, x1), snap_tol)
        mz1 = _snap_side(horizontal, z1, (x0, x1), snap_tol)
        if None in (mx0, mx1, mz0, mz1):
            out[label] = None
        else:
            out[label] = (mx1 - mx0) * (mz1 - mz0)
    return out


def _rect_apply_quarter(rect, quarter):
    x0, z0, x1, z1 = rect
    corners = np.array(
        [[x0, 0.0, z0], [x0, 0.0, z1], [x1, 0.0, z0], [x1, 0.0, z1]]
    ) @ quarter.T
    xs = corners[:, 0]
    zs = corners[:, 2]
    return (float(xs.min()), float(zs.min()), float(xs.max()), float(zs.max()))


def evaluate(config, spec: BuildingSpec):
    """Generate a building, run the whole pipeline, score it against truth.

    The report covers orientation recovery (floor-normal and yaw error,
    the latter modulo quarter turns), floor/ceiling altitude error, story
    count and per-face story agreement, wall recall/precision, per-room
    area error percent read off the drafting plan, and stage timings.
    """
    from .mesh import angle_between
    from .pipeline import run_pipeline

    t0 = time.perf_counter()
    mesh, annotations, truth = generate(spec)
    t_generate = time.perf_counter() - t0

    result = run_pipeline(mesh, annotations, config)

    floor_R = np.array(result.orientation_report["floor_transform"]["rotation"])
    wall_R = np.array(result.orientation_report["wall_transform"]["rotation"])
    net = wall_R @ floor_R @ truth.applied.rotation
    up = np.array([0.0, 1.0, 0.0])
    floor_err_deg = float(np.degrees(angle_between(net @ up, up)))
    quarter, residual, snapped = _quarter_snap(net)
    yaw_err_deg = float(abs(np.degrees(residual)))

    partition = result.partition
    story_ok = partition.story_count == truth.story_count
    floor_err_m = ceiling_err_m = None
    agreement = None
    if story_ok:
        floor_err_m = max(
            abs(partition.floors[s] - truth.floor_y[s]) for s in range(truth.story_count)
        )
        ceiling_err_m = max(
            abs(partition.ceilings[s] - truth.ceiling_y[s]) for s in range(truth.story_count)
        )
        assigned = np.empty(len(truth.story_ids), dtype=np.int64)
        for s, idx in enumerate(partition.face_indices):
            assigned[idx] = s
        agreement = float(np.mean(assigned == truth.story_ids))

    extracted = [w for rep in result.walls_reports for w in rep["walls"]]
    recall, precision, _, _ = match_walls(extracted, truth.wall_planes, quarter)

    rooms = {}
    for label, rect in truth.room_rects.items():
        s = truth.room_story[label]
        if s >= len(result.drafting_layer_docs):
            rooms[label] = {"actual_area_m2": truth.room_areas[label],
                            "measured_area_m2": None, "error_percent": None}
            continue
        segments = result.drafting_layer_docs[s]["layers"][0]["segments"]
        mapped = _rect_apply_quarter(rect, quarter)
        measured = measure_rooms_from_plan(segments, {label: mapped}).get(label)
        actual = truth.room_areas[label]
        error = None if measured is None else (actual - measured) / actual * 100.0
        rooms[label] = {
            "actual_area_m2": actual,
            "measured_area_m2": measured,
            "error_percent": error,
        }

    timings = dict(result.timings)
    timings["generate_s"] = t_generate
    return {
        "faces": int(mesh.num_faces),
        "orientation": {
            "floor_error_deg": floor_err_deg,
            "yaw_error_deg": yaw_err_deg,
            "quarter_turn_deg": float(np.degrees(snapped)),
        },
        "levels": {
            "story_count": partition.story_count,
            "story_count_ok": bool(story_ok),
            "floor_error_m": floor_err_m,
            "ceiling_error_m": ceiling_err_m,
            "label_agreement": agreement,
        },
        "walls": {
            "recall": recall,
            "precision": precision,
            "extracted_count": len(extracted),
            "truth_count": len(truth.wall_planes),
        },
        "rooms": rooms,
        "timings": timings,
    }
