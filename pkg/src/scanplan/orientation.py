"""Level the floor and align primary walls with the coordinate axes.

Two leveling strategies are provided. The bounding-box method assumes the
vertical extent of an oriented bounding box is its smallest dimension and
works only for squat, box-like scans. The clustering method finds the
dominant direction of upward-facing triangle normals with a trimmed
spherical k-means and is the default. Wall alignment then clusters the
remaining (wall) normals, takes the strongest horizontal direction, and
rotates about y so that it lands on a coordinate axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .mesh import (
    RigidTransform,
    TriangleMesh,
    compute_attributes,
    in_plane_angle,
    rotation_about_y,
    rotation_between,
    unit,
)

GRAVITY = np.array([0.0, -1.0, 0.0])
UP = np.array([0.0, 1.0, 0.0])

DEFAULT_TRIM_ANGLES = (50.0, 40.0, 30.0, 20.0, 10.0, 5.0, 3.0)


@dataclass(frozen=True)
class TrimSchedule:
    """Strictly decreasing angular thresholds in degrees, last one > 0."""

    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        if not angles:
            raise ValueError("schedule must contain at least one angle")
        if angles[-1] <= 0:
            raise ValueError("schedule angles must stay positive")
        if any(b >= a for a, b in zip(angles, angles[1:])):
            raise ValueError("schedule angles must be strictly decreasing")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def default(cls):
        return cls(DEFAULT_TRIM_ANGLES)


@dataclass(frozen=True)
class SphericalClusterResult:
    """Outcome of (trimmed) spherical k-means over unit vectors.

    assignment holds one entry per input direction: the cluster index,
    or -1 for points discarded by trimming.
    """

    centers: np.ndarray      # (k, 3) unit rows
    assignment: np.ndarray   # (n,) int
    inlier_count: np.ndarray  # (k,) int

    @property
    def discarded_fraction(self):
        if len(self.assignment) == 0:
            return 0.0
        return float(np.mean(self.assignment < 0))


@dataclass(frozen=True)
class OrientationReport:
    method: str
    floor_transform: RigidTransform
    wall_transform: RigidTransform
    gravity_estimate: np.ndarray  # unit vector, points down in mesh coords
    wall_angle: float             # radians, dominant wall direction in-plane
    discarded_fraction: float
    flags: tuple = ()


def _seed_centers(directions, k, rng, density_cone_deg=15.0, sample_cap=2000):
    """Farthest-point seeding over densely supported directions.

    Plain farthest-point seeding gravitates to outliers (they are the
    farthest points), which can leave one center stuck between two real
    direction modes. Restricting seed candidates to directions whose
    angular neighborhood is well populated keeps seeds on actual modes.
    Deterministic given the rng state; density is estimated on a capped
    subsample so seeding stays cheap for large meshes.
    """
    n = len(directions)
    if n > sample_cap:
        sample = np.sort(rng.choice(n, size=sample_cap, replace=False))
        pool = directions[sample]
    else:
        pool = directions
    sim = pool @ pool.T
    density = (sim >= np.cos(np.radians(density_cone_deg))).sum(axis=1)
    candidates = pool[density >= 0.05 * density.max()]
    if len(candidates) < k:
        candidates = pool
    first = int(rng.integers(len(candidates)))
    chosen = [first]
    best_sim = candidates @ candidates[first]
    for _ in range(1, k):
        nxt = int(np.argmin(best_sim))
        chosen.append(nxt)
        best_sim = np.maximum(best_sim, candidates @ candidates[nxt])
    return candidates[chosen].copy()


def spherical_kmeans(directions, k, seed=0, init_centers=None, max_iter=100):
    """Cluster unit vectors by cosine similarity (Lloyd iterations).

    Centers are normalized means of their members. Converges when no
    assignment changes or after `max_iter` rounds. A cluster whose mean
    collapses (antipodal members) keeps its previous center; ties at the
    very first update fall back to the lowest-index member. Empty
    clusters are re-seeded from the point farthest from its own center.

    Parameters
    ----------
    directions : (n, 3) float
      Unit vectors to cluster.
    k : int
    seed : int
      Drives the farthest-point initialization.
    init_centers : (k, 3) float, optional
      Warm start; skips seeding.

    Returns
    -------
    SphericalClusterResult
    """
    directions = np.asarray(directions, dtype=np.float64)
    if directions.ndim != 2 or directions.shape[1] != 3:
        raise ValueError("directions must be (n, 3)")
    n = len(directions)
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k or len(np.unique(directions, axis=0)) < k:
        raise GeometryError(f"need at least k={k} distinct directions, have {n}")

    if init_centers is None:
        rng = np.random.default_rng(seed)
        centers = _seed_centers(directions, k, rng)
    else:
        centers = np.array(init_centers, dtype=np.float64).reshape(k, 3).copy()

    assignment = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        sim = directions @ centers.T
        new_assignment = np.argmax(sim, axis=1)

        # re-seed empty clusters from the globally worst-fitting point
        for c in range(k):
            if not np.any(new_assignment == c):
                own = sim[np.arange(n), new_assignment]
                worst = int(np.argmin(own))
                centers[c] = directions[worst]
                new_assignment[worst] = c

        if np.array_equal(new_assignment, assignment):
            break
        first_round = assignment[0] == -1 and np.all(assignment == -1)
        assignment = new_assignment
        for c in range(k):
            members = directions[assignment == c]
            mean = members.sum(axis=0)
            norm = np.linalg.norm(mean)
            if norm < 1e-6:
                if first_round:
                    lowest = int(np.argmax(assignment == c))
                    centers[c] = directions[lowest]
                # otherwise keep the previous center
            else:
                centers[c] = mean / norm

    counts = np.bincount(assignment, minlength=k)
    return SphericalClusterResult(centers, assignment, counts)


def trimmed_spherical_kmeans(directions, k, schedule=None, seed=0):
    """Spherical k-means with a decreasing outlier-rejection schedule.

    Runs plain k-means, then for each schedule angle discards points
    farther than that angle from their center and re-clusters the
    survivors (warm-started). A final discard pass at the last angle
    guarantees every surviving inlier sits within it. Clusters that lose
    all members are dropped and the returned center count shrinks.
    """
    if schedule is None:
        schedule = TrimSchedule.default()
    directions = np.asarray(directions, dtype=np.float64)
    n = len(directions)
    result = spherical_kmeans(directions, k, seed=seed)
    centers = result.centers
    active = np.arange(n)
    assignment = result.assignment.copy()

    def survivors(threshold_deg):
        cos_thr = np.cos(np.radians(threshold_deg))
        sim = np.einsum("ij,ij->i", directions[active], centers[assignment[active]])
        return active[sim >= cos_thr - 1e-12]

    for angle in schedule.angles:
        keep = survivors(angle)
        # drop clusters that lost every member
        live = np.unique(assignment[keep]) if len(keep) else np.array([], dtype=np.int64)
        if len(live) < len(centers):
            remap = np.full(len(centers), -1, dtype=np.int64)
            remap[live] = np.arange(len(live))
            centers = centers[live]
            assignment[keep] = remap[assignment[keep]]
        if len(centers) == 0:
            raise GeometryError("trimming discarded every direction")
        sub = spherical_kmeans(
            directions[keep], len(centers), seed=seed, init_centers=centers
        )
        centers = sub.centers
        assignment = np.full(n, -1, dtype=np.int64)
        assignment[keep] = sub.assignment
        active = keep

    final = survivors(schedule.angles[-1])
    full = np.full(n, -1, dtype=np.int64)
    full[final] = assignment[final]
    live = np.unique(full[full >= 0])
    if len(live) < len(centers):
        remap = np.full(len(centers), -1, dtype=np.int64)
        remap[live] = np.arange(len(live))
        centers = centers[live]
        full[full >= 0] = remap[full[full >= 0]]
    if len(centers) == 0:
        raise GeometryError("trimming discarded every direction")
    counts = np.bincount(full[full >= 0], minlength=len(centers))
    return SphericalClusterResult(centers, full, counts)


def pca_box_axes(points):
    """Principal axes and extents of a point cloud.

    Returns (axes, extents): axes as columns of a 3x3 matrix, extents as
    the projection ranges along each axis, both sorted by ascending extent.
    """
    points = np.asarray(points, dtype=np.float64)
    centered = points - points.mean(axis=0)
    cov = np.cov(centered, rowvar=False)
    _, vecs = np.linalg.eigh(cov)
    proj = centered @ vecs
    extents = proj.max(axis=0) - proj.min(axis=0)
    order = np.argsort(extents)
    return vecs[:, order], extents[order]


def orient_floor_bbox(mesh: TriangleMesh):
    """Level the floor using an oriented bounding box.

    The smallest box dimension is assumed vertical; the inward normal of
    the box's top face approximates gravity. If the two smallest extents
    differ by less than 1%, the pick is ambiguous and the report carries
    an ``ambiguous-box`` flag, but the best guess is still returned.

    Returns
    -------
    (RigidTransform, OrientationReport)
    """
    if mesh.num_vertices == 0:
        raise GeometryError("cannot orient an empty mesh")
    axes, extents = pca_box_axes(mesh.vertices)
    flags = []
    if extents[0] > 0 and (extents[1] - extents[0]) / extents[1] < 0.01:
        flags.append("ambiguous-box")
    up_axis = axes[:, 0]
    if np.dot(up_axis, UP) < 0:
        up_axis = -up_axis
    g_m = -up_axis  # top face, pointing into the box
    transform = rotation_between(g_m, GRAVITY)
    report = OrientationReport(
        method="bbox",
        floor_transform=transform,
        wall_transform=RigidTransform.identity(),
        gravity_estimate=g_m,
        wall_angle=0.0,
        discarded_fraction=0.0,
        flags=tuple(flags),
    )
    return transform, report


def orient_floor_kmeans(mesh, schedule=None, seed=0, prefilter_deg=30.0, attrs=None):
    """Level the floor from the dominant upward-facing normal direction.

    Triangles whose normals deviate more than `prefilter_deg` from +y are
    ignored; a k=1 trimmed spherical k-means over the rest estimates the
    floor normal, whose opposite is the gravity direction in mesh
    coordinates. The returned transform rotates that estimate onto -y.

    Raises
    ------
    GeometryError
      If no triangle faces upward within the prefilter cone.
    """
    if schedule is None:
        schedule = TrimSchedule.default()
    if attrs is None:
        attrs = compute_attributes(mesh)
    cos_pre = np.cos(np.radians(prefilter_deg))
    upward = attrs.valid & (attrs.normals @ UP >= cos_pre)
    if not np.any(upward):
        raise GeometryError("no floor evidence: no upward-facing triangles")
    result = trimmed_spherical_kmeans(attrs.normals[upward], 1, schedule, seed=seed)
    g_m = -unit(result.centers[0])
    transform = rotation_between(g_m, GRAVITY)
    report = OrientationReport(
        method="spherical_kmeans",
        floor_transform=transform,
        wall_transform=RigidTransform.identity(),
        gravity_estimate=g_m,
        wall_angle=0.0,
        discarded_fraction=result.discarded_fraction,
        flags=(),
    )
    return transform, report


def wrap_quarter_turn(angle):
    """Reduce an angle to the equivalent residual in (-pi/4, pi/4]."""
    half_pi = np.pi / 2.0
    wrapped = angle - half_pi * np.floor(angle / half_pi + 0.5)
    if wrapped <= -np.pi / 4.0:  # keep the interval open at -45 despite rounding
        wrapped += half_pi
    return float(wrapped)


def align_walls(
    mesh,
    k=4,
    schedule=None,
    seed=0,
    drop_vertical_deg=30.0,
    floor_y=None,
    ceiling_y=None,
    attrs=None,
):
    """Rotate about y so the dominant wall direction lands on an axis.

    Assumes the floor is already level. Triangles whose normals are
    within `drop_vertical_deg` of straight up or down are skipped, as are
    triangles below `floor_y` or above `ceiling_y` when given. The
    remaining normals are clustered with k=4 (walls only) or k=6 (floor
    and ceiling still present); the strongest cluster's center, projected
    to the horizontal plane, sets the wall angle. The rotation maps it to
    +x modulo quarter turns, choosing the angle in (-45, 45] degrees so
    the mesh moves as little as possible.

    Returns
    -------
    (RigidTransform, OrientationReport)
    """
    if k not in (4, 6):
        raise ValueError("wall clustering expects k=4 or k=6")
    if schedule is None:
        schedule = TrimSchedule.default()
    if attrs is None:
        attrs = compute_attributes(mesh)
    flags = []
    cos_drop = np.cos(np.radians(drop_vertical_deg))
    keep = attrs.valid & (np.abs(attrs.normals @ UP) < cos_drop)
    if floor_y is not None:
        keep &= attrs.centroids[:, 1] >= floor_y
    if ceiling_y is not None:
        keep &= attrs.centroids[:, 1] <= ceiling_y
    normals = attrs.normals[keep]
    if len(normals) == 0:
        raise GeometryError("no wall-like triangles to align")

    k_eff = k
    distinct = len(np.unique(normals, axis=0))
    if distinct < k_eff:
        k_eff = max(1, distinct)
        flags.append("reduced-cluster-count")
    result = trimmed_spherical_kmeans(normals, k_eff, schedule, seed=seed)
    if len(result.centers) < k:
        if "reduced-cluster-count" not in flags:
            flags.append("reduced-cluster-count")

    strongest = int(np.argmax(result.inlier_count))
    center = result.centers[strongest]
    horizontal = np.array([center[0], 0.0, center[2]])
    if np.linalg.norm(horizontal) < 1e-9:
        raise GeometryError("dominant cluster is vertical; cannot derive a wall angle")
    wall_angle = in_plane_angle(horizontal)

    # minority directions poorly represented -> note it for diagnostics
    total = result.inlier_count.sum()
    if total and result.inlier_count.min() < 0.02 * total:
        flags.append("weak-minority-direction")

    transform = rotation_about_y(-wrap_quarter_turn(wall_angle))
    report = OrientationReport(
        method="spherical_kmeans",
        floor_transform=RigidTransform.identity(),
        wall_transform=transform,
        gravity_estimate=GRAVITY.copy(),
        wall_angle=wall_angle,
        discarded_fraction=result.discarded_fraction,
        flags=tuple(flags),
    )
    return transform, report
