"""Flat-wall extraction: direction grouping, block DBSCAN, and rectangles.

After floors and ceilings are stripped, wall triangles are grouped by
facing direction, clustered with a DBSCAN whose neighborhood is a
wall-aligned rectangular block (thin across the wall, door-width along
it, story-tall vertically), filtered down to full-height segments, and
replaced by one flat rectangle per segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .mesh import TriangleMesh, compute_attributes, unit
from .orientation import TrimSchedule, trimmed_spherical_kmeans

UP = np.array([0.0, 1.0, 0.0])

BLOCK_LENGTH_DEFAULT = 0.4572  # 1.5 ft, along the wall
BLOCK_WIDTH_DEFAULT = 0.2032   # 8 in, across the wall
BLOCK_HEIGHT_DEFAULT = 2.4384  # 8 ft, vertical
MIN_NEIGHBORS_DEFAULT = 8
CONE_ANGLE_DEFAULT = 30.0
MIN_WALL_AREA_DEFAULT = 1.0
REACH_TOL_DEFAULT = 0.5

PRINCIPAL4 = np.array(
    [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]
)


@dataclass(frozen=True)
class WallDirectionSet:
    """Horizontal unit vectors that wall normals are grouped around."""

    directions: np.ndarray  # (k, 3), y component ~ 0
    source: str             # "principal4" or "kmeans"
    flags: tuple = ()

    def __len__(self):
        return len(self.directions)


@dataclass(frozen=True)
class BlockParams:
    """Extents of the DBSCAN neighborhood block and its density threshold.

    length runs along the wall, width across it (wall-normal direction),
    height vertically; all full extents in meters. A point is a core
    point when the block centered on it contains at least min_neighbors
    points (itself included).
    """

    length: float = BLOCK_LENGTH_DEFAULT
    width: float = BLOCK_WIDTH_DEFAULT
    height: float = BLOCK_HEIGHT_DEFAULT
    min_neighbors: int = MIN_NEIGHBORS_DEFAULT

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0:
            raise ValueError("block extents must be positive")
        if self.min_neighbors < 1:
            raise ValueError("min_neighbors must be >= 1")


@dataclass(frozen=True)
class WallSegment:
    """One DBSCAN cluster of triangle centroids: a wall hypothesis."""

    direction_index: int
    cluster_id: int
    member_indices: np.ndarray
    centroids: np.ndarray
    areas: np.ndarray
    y_min: float
    y_max: float
    lateral_min: float
    lateral_max: float

    @property
    def total_area(self):
        return float(self.areas.sum())


@dataclass(frozen=True)
class PlanarWall:
    """Fitted wall plane with its flat rectangle replacement."""

    normal: np.ndarray
    offset: float           # plane: point . normal == offset
    corners: np.ndarray     # (4, 3), rectangle in the plane
    segment_id: int


def lateral_axis(direction):
    """Horizontal axis running along a wall with the given normal."""
    return unit(np.cross(direction, UP))


def wall_directions(mesh, mode="principal4", k=4, schedule=None, seed=0,
                    drop_vertical_deg=30.0, attrs=None) -> WallDirectionSet:
    """Choose the set of wall-normal directions to extract against.

    "principal4" returns the four axis directions and suits buildings
    already aligned with the axes. "kmeans" clusters the actual wall
    normals (trimmed spherical k-means, centers projected to the
    horizontal plane) and also finds wings at odd angles.
    """
    if mode == "principal4":
        return WallDirectionSet(PRINCIPAL4.copy(), "principal4")
    if mode != "kmeans":
        raise ValueError(f"unknown direction mode {mode!r}")
    if schedule is None:
        schedule = TrimSchedule.default()
    if attrs is None:
        attrs = compute_attributes(mesh)
    cos_drop = np.cos(np.radians(drop_vertical_deg))
    wallish = attrs.valid & (np.abs(attrs.normals @ UP) < cos_drop)
    normals = attrs.normals[wallish]
    if len(normals) == 0:
        raise GeometryError("no wall-like triangles to derive directions from")
    result = trimmed_spherical_kmeans(normals, k, schedule, seed=seed)
    flags = []
    if len(result.centers) < k:
        flags.append("cluster-collapse")
    dirs = []
    for center in result.centers:
        horizontal = np.array([center[0], 0.0, center[2]])
        norm = np.linalg.norm(horizontal)
        if norm < 1e-9:
            flags.append("vertical-center-dropped")
            continue
        dirs.append(horizontal / norm)
    if not dirs:
        raise GeometryError("every wall direction collapsed to vertical")
    return WallDirectionSet(np.array(dirs), "kmeans", tuple(flags))


def assign_to_direction(attrs, dirs: WallDirectionSet, cone_angle=CONE_ANGLE_DEFAULT):
    """Group triangle indices by nearest wall direction within a cone.

    A triangle joins the direction with the largest normal dot product,
    but only when the angle to it is at most `cone_angle` degrees;
    everything else stays unassigned.
    """
    if len(dirs) == 0:
        raise GeometryError("empty direction set")
    sim = attrs.normals @ dirs.directions.T
    best = np.argmax(sim, axis=1)
    best_sim = sim[np.arange(len(sim)), best]
    ok = attrs.valid & (best_sim >= np.cos(np.radians(cone_angle)))
    return [np.flatnonzero(ok & (best == d)) for d in range(len(dirs))]


class _BlockGrid:
    """Uniform grid over wall-frame coordinates; cell = block half-extents."""

    def __init__(self, coords, half):
        self.coords = coords
        self.half = half
        cells = np.floor(coords / half).astype(np.int64)
        self.cell_ids = [tuple(c) for c in cells]
        self.buckets = {}
        for i, key in enumerate(self.cell_ids):
            self.buckets.setdefault(key, []).append(i)
        self.buckets = {k: np.array(v, dtype=np.int64) for k, v in self.buckets.items()}

    def neighbor_lists(self):
        """Sorted neighbor index arrays per point (block predicate, self included)."""
        n = len(self.coords)
        out = [None] * n
        offsets = [
            (dx, dy, dz)
            for dx in (-1, 0, 1)
            for dy in (-1, 0, 1)
            for dz in (-1, 0, 1)
        ]
        for key, members in self.buckets.items():
            candidates = [
                self.buckets[nk]
                for nk in ((key[0] + o[0], key[1] + o[1], key[2] + o[2]) for o in offsets)
                if nk in self.buckets
            ]
            cand = np.concatenate(candidates)
            cand.sort()
            delta = np.abs(self.coords[cand][None, :, :] - self.coords[members][:, None, :])
            inside = np.all(delta <= self.half[None, None, :], axis=2)
            for row, i in enumerate(members):
                out[i] = cand[inside[row]]
        return out


def block_dbscan(centroids, direction, params: BlockParams):
    """Cluster centroids with DBSCAN over a wall-aligned block neighborhood.

    The neighborhood of p is every point q with ``|(q-p).d| <= width/2``,
    ``|(q-p).y| <= height/2`` and ``|(q-p).t| <= length/2`` where d is the
    wall direction and t the lateral axis (closed bounds, p included).
    Clusters are connected components of core points; a border point
    joins the cluster of its lowest-index core neighbor, which makes the
    partition independent of input order. Cluster ids are numbered by
    lowest member index.

    Returns
    -------
    (clusters, noise)
      clusters: list of sorted index arrays; noise: sorted index array.
    """
    centroids = np.asarray(centroids, dtype=np.float64).reshape(-1, 3)
    n = len(centroids)
    if n == 0:
        return [], np.array([], dtype=np.int64)
    d = unit(direction)
    t = lateral_axis(d)
    frame = np.column_stack([centroids @ d, centroids[:, 1], centroids @ t])
    half = np.array([params.width / 2.0, params.height / 2.0, params.length / 2.0])

    grid = _BlockGrid(frame, half)
    neighbors = grid.neighbor_lists()
    core = np.array([len(nb) >= params.min_neighbors for nb in neighbors])

    labels = np.full(n, -1, dtype=np.int64)
    cid = 0
    for start in range(n):
        if not core[start] or labels[start] >= 0:
            continue
        stack = [start]
        labels[start] = cid
        while stack:
            nb = neighbors[stack.pop()]
            fresh = nb[core[nb] & (labels[nb] < 0)]
            labels[fresh] = cid
            stack.extend(fresh.tolist())
        cid += 1

    # border points: lowest-index core neighbor decides the cluster
    for i in np.flatnonzero(~core & (labels < 0)):
        nb = neighbors[i]
        core_nb = nb[core[nb]]
        if len(core_nb):
            labels[i] = labels[core_nb[0]]

    clusters = [np.flatnonzero(labels == c) for c in range(cid)]
    clusters.sort(key=lambda idx: int(idx[0]) if len(idx) else -1)
    noise = np.flatnonzero(labels < 0)
    return clusters, noise


def segments_from_clusters(clusters, direction_index, direction, centroids, areas,
                           member_map=None):
    """Wrap raw DBSCAN clusters into WallSegment records."""
    t = lateral_axis(direction)
    segments = []
    for cid, idx in enumerate(clusters):
        if len(idx) == 0:
            continue
        pts = centroids[idx]
        lat = pts @ t
        members = idx if member_map is None else member_map[idx]
        segments.append(
            WallSegment(
                direction_index=direction_index,
                cluster_id=cid,
                member_indices=np.asarray(members, dtype=np.int64),
                centroids=pts,
                areas=areas[idx],
                y_min=float(pts[:, 1].min()),
                y_max=float(pts[:, 1].max()),
                lateral_min=float(lat.min()),
                lateral_max=float(lat.max()),
            )
        )
    return segments


def filter_segments(segments, floor_y, ceiling_y, min_area=MIN_WALL_AREA_DEFAULT,
                    reach_tol=REACH_TOL_DEFAULT):
    """Keep only segments that are big and span floor to ceiling."""
    kept = []
    for seg in segments:
        if seg.total_area < min_area:
            continue
        if seg.y_min > floor_y + reach_tol:
            continue
        if seg.y_max < ceiling_y - reach_tol:
            continue
        kept.append(seg)
    return kept


def fit_plane(segment: WallSegment, direction, mode="median"):
    """Fit the wall plane: normal fixed to the direction, offset from members.

    "any_centroid" passes the plane through the lowest-index member;
    "median" uses the median of member projections onto the direction,
    which rejects protruding clutter stuck to the wall.
    """
    d = unit(direction)
    proj = segment.centroids @ d
    if mode == "any_centroid":
        offset = float(proj[0])
    elif mode == "median":
        offset = float(np.median(proj))
    else:
        raise ValueError(f"unknown plane fit mode {mode!r}")
    return d, offset


def build_rectangle(segment: WallSegment, plane, min_extent=1e-9) -> PlanarWall:
    """Rectangle spanning the segment's lateral and vertical extents.

    Corners are ordered counterclockwise as seen from the wall's facing
    side, so the two replacement triangles inherit the wall normal.
    """
    d, offset = plane
    d = unit(d)
    t = lateral_axis(d)
    lat0, lat1 = segment.lateral_min, segment.lateral_max
    y0, y1 = segment.y_min, segment.y_max
    if lat1 - lat0 < min_extent or y1 - y0 < min_extent:
        raise GeometryError(
            f"degenerate wall: extent {lat1 - lat0:.3g} x {y1 - y0:.3g} m"
        )
    base = d * offset
    corners = np.array(
        [
            base + t * lat0 + UP * y0,
            base + t * lat0 + UP * y1,
            base + t * lat1 + UP * y1,
            base + t * lat1 + UP * y0,
        ]
    )
    return PlanarWall(normal=d, offset=offset, corners=corners,
                      segment_id=segment.cluster_id)


def assemble_walls(walls) -> TriangleMesh:
    """Mesh with two right triangles per wall rectangle.

    Triangle winding is chosen so each face normal equals its wall's
    facing direction.
    """
    vertices = []
    faces = []
    for wall in walls:
        c = wall.corners
        base = len(vertices)
        vertices.extend(c)
        n1 = np.cross(c[1] - c[0], c[2] - c[0])
        if np.dot(n1, wall.normal) >= 0:
            faces.append((base, base + 1, base + 2))
            faces.append((base, base + 2, base + 3))
        else:
            faces.append((base, base + 2, base + 1))
            faces.append((base, base + 3, base + 2))
    if not vertices:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64),
                            provenance="flat-walls")
    return TriangleMesh(np.array(vertices), np.array(faces, dtype=np.int64),
                        provenance="flat-walls")


def extract_walls(
    mesh,
    floor_y,
    ceiling_y,
    directions: WallDirectionSet,
    params: BlockParams = None,
    cone_angle=CONE_ANGLE_DEFAULT,
    min_area=MIN_WALL_AREA_DEFAULT,
    reach_tol=REACH_TOL_DEFAULT,
    fit_mode="median",
    attrs=None,
):
    """Full per-direction pipeline: assign, cluster, filter, fit, rectangle.

    Returns
    -------
    (walls, segments, kept_segments)
      walls: list of PlanarWall; segments: every DBSCAN segment before
      filtering; kept_segments: the ones that produced walls.
    """
    if params is None:
        params = BlockParams()
    if attrs is None:
        attrs = compute_attributes(mesh)
    by_direction = assign_to_direction(attrs, dirs=directions, cone_angle=cone_angle)
    walls = []
    all_segments = []
    kept_segments = []
    for di, face_idx in enumerate(by_direction):
        if len(face_idx) == 0:
            continue
        direction = directions.directions[di]
        cents = attrs.centroids[face_idx]
        clusters, _ = block_dbscan(cents, direction, params)
        segments = segments_from_clusters(
            clusters, di, direction, cents, attrs.areas[face_idx], member_map=face_idx
        )
        all_segments.extend(segments)
        for seg in filter_segments(segments, floor_y, ceiling_y, min_area, reach_tol):
            plane = fit_plane(seg, direction, mode=fit_mode)
            try:
                wall = build_rectangle(seg, plane)
            except GeometryError:
                continue
            walls.append(wall)
            kept_segments.append(seg)
    return walls, all_segments, kept_segments
