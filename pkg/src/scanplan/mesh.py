"""Triangle mesh container, per-face derived attributes, and rigid transforms.

Meshes are stored as indexed triangle soup: an (n, 3) float64 vertex array
and an (m, 3) int64 face array. All coordinates are meters, y is up. Every
operation here is a pure function over immutable snapshots; transforms are
applied identically to geometry and to annotation markers so that markers
stay glued to the surfaces they describe.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError

ORTHO_TOL = 1e-9
DEGENERATE_AREA = 1e-14

ANNOTATION_KINDS = ("sensor", "window", "door", "thermostat", "other")


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) float
      Vertex positions in meters.
    faces : (m, 3) int
      Vertex-index triples. Indices must be in range; degenerate faces
      (repeated indices or zero area) are tolerated and flagged by
      `compute_attributes` rather than rejected here.
    provenance : str
      Free-text tag describing where the mesh came from.
    """

    vertices: np.ndarray
    faces: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.size == 0:
            v = v.reshape(0, 3)
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces must be (m, 3), got {f.shape}")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_faces(self):
        return len(self.faces)

    def triangles(self):
        """Return the (m, 3, 3) array of face corner positions."""
        return self.vertices[self.faces]

    def submesh(self, face_indices, provenance=None):
        """Mesh with only the given faces; the vertex array is shared."""
        face_indices = np.asarray(face_indices)
        return TriangleMesh(
            vertices=self.vertices,
            faces=self.faces[face_indices],
            provenance=self.provenance if provenance is None else provenance,
        )


@dataclass(frozen=True)
class TriangleAttributes:
    """Per-face derived attributes, one row per face of the source mesh.

    `valid` is False for degenerate faces (repeated vertex indices or
    area below `DEGENERATE_AREA`); their normal rows are zero and they
    must be excluded from downstream statistics.
    """

    normals: np.ndarray    # (m, 3), unit for valid rows
    centroids: np.ndarray  # (m, 3)
    areas: np.ndarray      # (m,)
    valid: np.ndarray      # (m,) bool

    def __len__(self):
        return len(self.areas)


def compute_attributes(mesh: TriangleMesh) -> TriangleAttributes:
    """Compute normal, centroid, and area for every face.

    Normals follow the right-hand rule on the stored vertex winding.
    Degenerate faces are flagged (`valid=False`) instead of raising.
    """
    tri = mesh.triangles()
    if len(tri) == 0:
        z = np.zeros((0, 3))
        return TriangleAttributes(z, z.copy(), np.zeros(0), np.zeros(0, dtype=bool))
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    double_area = np.linalg.norm(cross, axis=1)
    areas = 0.5 * double_area
    distinct = (
        (mesh.faces[:, 0] != mesh.faces[:, 1])
        & (mesh.faces[:, 1] != mesh.faces[:, 2])
        & (mesh.faces[:, 0] != mesh.faces[:, 2])
    )
    valid = distinct & (areas > DEGENERATE_AREA)
    normals = np.zeros_like(cross)
    np.divide(cross, double_area[:, None], out=normals, where=valid[:, None])
    centroids = tri.mean(axis=1)
    return TriangleAttributes(normals, centroids, areas, valid)


@dataclass(frozen=True)
class RigidTransform:
    """Rotation plus optional translation, applied as ``R @ x + t``."""

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64)
        if r.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if t.shape != (3,):
            raise ValueError("translation must be a 3-vector")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-8):
            raise ValueError("rotation is not orthonormal")
        if not np.isclose(np.linalg.det(r), 1.0, atol=1e-8):
            raise ValueError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    def apply_points(self, points):
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def apply_directions(self, directions):
        """Rotate direction vectors; translation is not applied."""
        directions = np.asarray(directions, dtype=np.float64)
        return directions @ self.rotation.T

    def after(self, first: "RigidTransform") -> "RigidTransform":
        """Composition: ``self.after(a)`` applies ``a`` first, then self."""
        return RigidTransform(
            rotation=self.rotation @ first.rotation,
            translation=self.rotation @ first.translation + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rotation=rt, translation=-(rt @ self.translation))


@dataclass(frozen=True)
class Annotation:
    """User-placed marker carried through every mesh transform."""

    label: str
    position: np.ndarray
    facing: np.ndarray
    kind: str = "other"

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64)
        f = np.asarray(self.facing, dtype=np.float64)
        if p.shape != (3,) or f.shape != (3,):
            raise ValueError("annotation position and facing must be 3-vectors")
        n = np.linalg.norm(f)
        if n < 1e-12:
            raise ValueError(f"annotation {self.label!r} has zero facing vector")
        if self.kind not in ANNOTATION_KINDS:
            raise ValueError(f"unknown annotation kind {self.kind!r}")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "facing", f / n)


@dataclass(frozen=True)
class AnnotationSet:
    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box; `min_corner <= max_corner` componentwise."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=np.float64)
        hi = np.asarray(self.max_corner, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("box corners must be 3-vectors")
        if np.any(lo > hi):
            raise ValueError("min corner exceeds max corner")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @property
    def extents(self):
        return self.max_corner - self.min_corner


def apply_transform(mesh, annotations, transform):
    """Apply one rigid transform to a mesh and its annotations.

    Annotation positions get the full transform; facing directions are
    rotated only, so they stay unit length.

    Returns
    -------
    (TriangleMesh, AnnotationSet)
      Transformed copies; the inputs are untouched.
    """
    if not isinstance(transform, RigidTransform):
        raise TypeError("transform must be a RigidTransform")
    new_mesh = replace(mesh, vertices=transform.apply_points(mesh.vertices))
    moved = tuple(
        Annotation(
            label=a.label,
            position=transform.apply_points(a.position),
            facing=transform.apply_directions(a.facing),
            kind=a.kind,
        )
        for a in annotations
    )
    return new_mesh, AnnotationSet(moved)


def compute_bounding_box(mesh: TriangleMesh) -> BoundingBox:
    """Axis-aligned bounding box of all vertices."""
    if mesh.num_vertices == 0:
        raise GeometryError("cannot bound an empty mesh")
    return BoundingBox(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-15:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def angle_between(a, b):
    """Angle in radians between two vectors, safe against rounding."""
    d = np.dot(unit(a), unit(b))
    return float(np.arccos(np.clip(d, -1.0, 1.0)))


def rotation_between(a, b) -> RigidTransform:
    """Minimal rotation taking unit vector `a` onto unit vector `b`."""
    a = unit(a)
    b = unit(b)
    axis = np.cross(a, b)
    s = np.linalg.norm(axis)
    c = float(np.dot(a, b))
    if s < 1e-12:
        if c > 0:
            return RigidTransform.identity()
        # antiparallel: rotate half a turn about any perpendicular axis
        helper = np.array([1.0, 0.0, 0.0])
        if abs(a[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        perp = unit(np.cross(a, helper))
        return RigidTransform(_rodrigues(perp, np.pi))
    k = axis / s
    theta = float(np.arctan2(s, c))
    return RigidTransform(_rodrigues(k, theta))


def rotation_about_y(angle) -> RigidTransform:
    """Right-handed rotation about +y by `angle` radians."""
    c, s = np.cos(angle), np.sin(angle)
    return RigidTransform(np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]))


def rotation_about_x(angle) -> RigidTransform:
    c, s = np.cos(angle), np.sin(angle)
    return RigidTransform(np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]))


def rotation_about_z(angle) -> RigidTransform:
    c, s = np.cos(angle), np.sin(angle)
    return RigidTransform(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))


def in_plane_angle(v):
    """Angle of the horizontal part of `v`, additive under rotation_about_y.

    Zero for +x; rotating a vector with `rotation_about_y(g)` adds `g`.
    """
    v = np.asarray(v, dtype=np.float64)
    if abs(v[0]) < 1e-15 and abs(v[2]) < 1e-15:
        raise ValueError("vector has no horizontal component")
    return float(np.arctan2(-v[2], v[0]))


def _rodrigues(axis, theta):
    k = np.asarray(axis, dtype=np.float64)
    kx = np.array(
        [
            [0.0, -k[2], k[1]],
            [k[2], 0.0, -k[0]],
            [-k[1], k[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)
