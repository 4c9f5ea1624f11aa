"""Altitude-histogram analysis: floors, ceilings, and story partitioning.

Horizontal surfaces show up as spikes in a histogram of triangle centroid
altitudes weighted by triangle area. Adjacent buckets are examined in
overlapping pairs so a surface split evenly across a bucket boundary is
not overlooked. Floors and ceilings are told apart by which way their
triangles face, and stories are the spans between a floor spike and the
next ceiling spike above it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .mesh import TriangleMesh, compute_attributes

BUCKET_SIZE_DEFAULT = 0.0508  # 2 inches
MIN_GAP_DEFAULT = 1.8
MIN_ROOM_HEIGHT_DEFAULT = 2.0
FILTER_ANGLE_DEFAULT = 15.0
MARGIN_DEFAULT = 0.10
PEAK_FRACTION_DEFAULT = 0.25
ABSOLUTE_MIN_AREA_DEFAULT = 0.5


@dataclass(frozen=True)
class AltitudeHistogram:
    """Area-weighted bucket counts over centroid altitude.

    counts[i] accumulates triangle area for centroids with
    ``origin + i*bucket_size <= y < origin + (i+1)*bucket_size``;
    weighted_y accumulates area*y so bucket pairs can report an exact
    area-weighted altitude.
    """

    bucket_size: float
    origin: float
    counts: np.ndarray
    weighted_y: np.ndarray
    direction_filter: str
    filter_angle: float

    def bucket_of(self, y):
        return int(np.floor((y - self.origin) / self.bucket_size))

    def pair_counts(self):
        """Counts of overlapping adjacent bucket pairs (0,1), (1,2), ...

        The top bucket pairs with a virtual empty one so a histogram of a
        single bucket still yields one pair.
        """
        padded = np.concatenate([self.counts, [0.0]])
        return self.counts + padded[1:]

    def pair_altitude(self, i):
        """Area-weighted centroid altitude of bucket pair (i, i+1)."""
        weight = self.counts[i]
        wy = self.weighted_y[i]
        if i + 1 < len(self.counts):
            weight = weight + self.counts[i + 1]
            wy = wy + self.weighted_y[i + 1]
        if weight <= 0:
            return self.origin + (i + 1) * self.bucket_size
        return float(wy / weight)

    @property
    def top(self):
        return self.origin + len(self.counts) * self.bucket_size


@dataclass(frozen=True)
class Spike:
    """One merged run of strong bucket pairs: a candidate surface."""

    altitude: float
    strength: float   # area count of the best pair in the run
    pair_index: int


@dataclass(frozen=True)
class LevelPartition:
    """Per-story spans and face assignments, ordered bottom to top."""

    floors: tuple          # floor_y per story
    ceilings: tuple        # ceiling_y per story
    face_indices: tuple    # tuple of int arrays, one per story
    flags: tuple = ()

    @property
    def story_count(self):
        return len(self.floors)


def build_histogram(
    mesh: TriangleMesh,
    bucket_size=BUCKET_SIZE_DEFAULT,
    filter_angle=FILTER_ANGLE_DEFAULT,
    direction_filter="both",
    attrs=None,
) -> AltitudeHistogram:
    """Histogram of centroid altitudes for near-horizontal triangles.

    direction_filter picks triangles facing within `filter_angle` degrees
    of straight up ("up"), straight down ("down"), or either ("both");
    each contributes its full area to the bucket containing its centroid.
    """
    if direction_filter not in ("up", "down", "both"):
        raise ValueError(f"bad direction filter {direction_filter!r}")
    if bucket_size <= 0:
        raise ValueError("bucket_size must be positive")
    if attrs is None:
        attrs = compute_attributes(mesh)
    cos_thr = np.cos(np.radians(filter_angle))
    ny = attrs.normals[:, 1]
    if direction_filter == "up":
        mask = ny >= cos_thr
    elif direction_filter == "down":
        mask = -ny >= cos_thr
    else:
        mask = np.abs(ny) >= cos_thr
    mask &= attrs.valid
    if not np.any(mask):
        raise GeometryError("no triangles qualify for the altitude histogram")
    ys = attrs.centroids[mask, 1]
    areas = attrs.areas[mask]
    origin = float(ys.min())
    idx = np.floor((ys - origin) / bucket_size).astype(np.int64)
    nbuckets = int(idx.max()) + 1
    counts = np.bincount(idx, weights=areas, minlength=nbuckets)
    weighted = np.bincount(idx, weights=areas * ys, minlength=nbuckets)
    return AltitudeHistogram(
        bucket_size=float(bucket_size),
        origin=origin,
        counts=counts,
        weighted_y=weighted,
        direction_filter=direction_filter,
        filter_angle=float(filter_angle),
    )


def find_spikes(
    hist: AltitudeHistogram,
    peak_fraction=PEAK_FRACTION_DEFAULT,
    absolute_min_area=ABSOLUTE_MIN_AREA_DEFAULT,
):
    """Merge strong overlapping bucket pairs into candidate surfaces.

    A pair qualifies when its count reaches
    ``max(peak_fraction * strongest_pair, absolute_min_area)``; runs of
    consecutive qualifying pairs (which share a bucket) merge into one
    spike whose altitude is the weighted altitude of the best pair.
    """
    pairs = hist.pair_counts()
    if len(pairs) == 0:
        return []
    threshold = max(peak_fraction * float(pairs.max()), absolute_min_area)
    strong = np.flatnonzero(pairs >= threshold)
    spikes = []
    run = []
    for i in strong:
        if run:
            prev = run[-1]
            # pairs (prev, prev+1) and (i, i+1) describe the same surface only
            # when adjacent AND their shared bucket actually carries mass
            shared = hist.counts[i] if i - prev == 1 else 0.0
            joined = i - prev == 1 and shared >= 0.25 * min(pairs[prev], pairs[i])
            if not joined:
                spikes.append(_close_run(hist, pairs, run))
                run = []
        run.append(i)
    if run:
        spikes.append(_close_run(hist, pairs, run))
    return spikes


def _close_run(hist, pairs, run):
    best = max(run, key=lambda i: (pairs[i], -i))
    return Spike(altitude=hist.pair_altitude(best), strength=float(pairs[best]), pair_index=int(best))


def detect_floor_ceiling(hist: AltitudeHistogram, min_gap=MIN_GAP_DEFAULT,
                         peak_fraction=PEAK_FRACTION_DEFAULT,
                         absolute_min_area=ABSOLUTE_MIN_AREA_DEFAULT):
    """Locate the floor and ceiling altitudes of a (single) story.

    Spikes are split into a low group and a high group at the first
    altitude gap of at least `min_gap`; the result is the highest
    altitude in the low group (floors) and the lowest in the high group
    (ceilings). Sunken floors and raised ceilings are thereby ignored.

    Raises
    ------
    GeometryError
      If no two spike groups are separated by `min_gap`
      (a single horizontal surface, or none at all).
    """
    spikes = find_spikes(hist, peak_fraction, absolute_min_area)
    if len(spikes) < 2:
        raise GeometryError("single-surface: found fewer than two altitude spikes")
    altitudes = [s.altitude for s in spikes]
    split = None
    for i in range(len(altitudes) - 1):
        if altitudes[i + 1] - altitudes[i] >= min_gap:
            split = i
            break
    if split is None:
        raise GeometryError("single-surface: no spike gap of at least "
                            f"{min_gap} m between floor and ceiling groups")
    floor_y = altitudes[split]
    ceiling_y = altitudes[split + 1]
    return floor_y, ceiling_y


def partition_stories(
    mesh: TriangleMesh,
    hist: AltitudeHistogram,
    min_gap=MIN_GAP_DEFAULT,
    min_room_height=MIN_ROOM_HEIGHT_DEFAULT,
    peak_fraction=PEAK_FRACTION_DEFAULT,
    absolute_min_area=ABSOLUTE_MIN_AREA_DEFAULT,
    attrs=None,
) -> LevelPartition:
    """Split a building into stories using up- and down-facing spikes.

    Walks floor spikes bottom to top. Floor candidates closer than
    `min_room_height` collapse onto the highest one; the story's ceiling
    is the lowest down-facing spike at least `min_room_height` above its
    floor. A floor with no ceiling below the next floor is flagged and
    the story is closed at that next floor (best effort). Every face is
    assigned to exactly one story: the one whose span contains its
    centroid, with faces inside the slab between two stories going to
    the story below.
    """
    if attrs is None:
        attrs = compute_attributes(mesh)
    up_hist = build_histogram(mesh, hist.bucket_size, hist.filter_angle, "up", attrs=attrs)
    down_hist = build_histogram(mesh, hist.bucket_size, hist.filter_angle, "down", attrs=attrs)
    floor_spikes = [s.altitude for s in find_spikes(up_hist, peak_fraction, absolute_min_area)]
    ceil_spikes = [s.altitude for s in find_spikes(down_hist, peak_fraction, absolute_min_area)]
    if not floor_spikes or not ceil_spikes:
        raise GeometryError("cannot partition: missing floor or ceiling spikes")

    flags = []
    floors = []
    ceilings = []
    fi = 0
    while fi < len(floor_spikes):
        floor = floor_spikes[fi]
        fi += 1
        while fi < len(floor_spikes) and floor_spikes[fi] - floor < min_room_height:
            floor = floor_spikes[fi]  # highest of the close-together floor levels
            fi += 1
        next_floor = floor_spikes[fi] if fi < len(floor_spikes) else None
        ceiling = None
        for c in ceil_spikes:
            if c - floor >= min_room_height and (next_floor is None or c <= next_floor):
                ceiling = c
                break
        if ceiling is None:
            if next_floor is not None:
                flags.append("missing-ceiling-between-floors")
                ceiling = next_floor
            else:
                above = [c for c in ceil_spikes if c > floor]
                if above:
                    flags.append("low-ceiling")
                    ceiling = above[0]
                else:
                    flags.append("missing-top-ceiling")
                    ceiling = max(hist.top, floor + min_room_height)
        floors.append(floor)
        ceilings.append(ceiling)

    # assign every face; slab interiors go to the story below, so the cut
    # sits just under each upper story's floor
    eps = hist.bucket_size / 2.0
    bounds = np.array(floors[1:]) - eps
    story_of = np.searchsorted(bounds, attrs.centroids[:, 1], side="right")
    face_sets = tuple(np.flatnonzero(story_of == s) for s in range(len(floors)))
    return LevelPartition(
        floors=tuple(floors),
        ceilings=tuple(ceilings),
        face_indices=face_sets,
        flags=tuple(flags),
    )


def remove_ceiling_floor(
    mesh: TriangleMesh,
    floor_y,
    ceiling_y,
    filter_angle=FILTER_ANGLE_DEFAULT,
    margin=MARGIN_DEFAULT,
    attrs=None,
) -> TriangleMesh:
    """Strip floor and ceiling surfaces plus everything outside the story.

    Removes triangles that both face within `filter_angle` of straight up
    or down and sit within `margin` of either plane, then cuts away all
    triangles below ``floor_y - margin`` or above ``ceiling_y + margin``.
    Wall triangles in between are untouched.
    """
    if attrs is None:
        attrs = compute_attributes(mesh)
    cos_thr = np.cos(np.radians(filter_angle))
    ny = attrs.normals[:, 1]
    y = attrs.centroids[:, 1]
    horizontal = np.abs(ny) >= cos_thr
    near_plane = (np.abs(y - floor_y) <= margin) | (np.abs(y - ceiling_y) <= margin)
    out_of_range = (y < floor_y - margin) | (y > ceiling_y + margin)
    drop = (horizontal & near_plane) | out_of_range
    keep = np.flatnonzero(~drop)
    return mesh.submesh(keep)
