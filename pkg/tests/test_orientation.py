import numpy as np
import numpy.testing as npt
import pytest

from conftest import wing_spec
from scanplan import synth
from scanplan.errors import GeometryError
from scanplan.mesh import (
    angle_between,
    apply_transform,
    rotation_about_z,
    unit,
)
from scanplan.orientation import (
    TrimSchedule,
    align_walls,
    orient_floor_bbox,
    orient_floor_kmeans,
    spherical_kmeans,
    trimmed_spherical_kmeans,
    wrap_quarter_turn,
)


def jittered(axis, count, max_deg, rng):
    """Unit vectors within max_deg of `axis`."""
    axis = unit(axis)
    # any frame perpendicular to the axis
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = unit(np.cross(axis, helper))
    v = np.cross(axis, u)
    ang = np.radians(rng.uniform(0, max_deg, count))
    phi = rng.uniform(0, 2 * np.pi, count)
    return (
        np.cos(ang)[:, None] * axis
        + np.sin(ang)[:, None] * (np.cos(phi)[:, None] * u + np.sin(phi)[:, None] * v)
    )


def degrees_between(a, b):
    return np.degrees(angle_between(a, b))


def closest_center_error(centers, target):
    return min(degrees_between(c, target) for c in centers)


class TestSphericalKmeans:
    def test_single_direction(self):
        dirs = np.tile([0.0, -1.0, 0.0], (10, 1))
        dirs[5] = [1e-12, -1.0, 0.0]  # keep two distinct rows
        res = spherical_kmeans(dirs, 1, seed=0)
        npt.assert_allclose(res.centers[0], [0, -1, 0], atol=1e-9)
        assert res.inlier_count[0] == 10

    def test_two_clusters_recovered(self, rng):
        dirs = np.vstack(
            [jittered([1, 0, 0], 100, 5.0, rng), jittered([0, 0, 1], 100, 5.0, rng)]
        )
        res = spherical_kmeans(dirs, 2, seed=3)
        assert closest_center_error(res.centers, [1, 0, 0]) < 2.0
        assert closest_center_error(res.centers, [0, 0, 1]) < 2.0

    def test_antipodal_tie_breaks_low_index(self):
        dirs = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        res = spherical_kmeans(dirs, 1, seed=0)
        npt.assert_allclose(res.centers[0], dirs[0])

    def test_assignment_is_angularly_nearest(self, rng):
        dirs = np.vstack(
            [jittered([1, 0, 0], 50, 10.0, rng), jittered([0, 0, 1], 50, 10.0, rng)]
        )
        res = spherical_kmeans(dirs, 2, seed=1)
        sim = dirs @ res.centers.T
        npt.assert_array_equal(res.assignment, np.argmax(sim, axis=1))

    def test_too_few_distinct_directions(self):
        dirs = np.tile([0.0, 1.0, 0.0], (5, 1))
        with pytest.raises(GeometryError, match="distinct"):
            spherical_kmeans(dirs, 2, seed=0)

    def test_deterministic(self, rng):
        dirs = jittered([0, 1, 0], 200, 40.0, rng)
        a = spherical_kmeans(dirs, 3, seed=7)
        b = spherical_kmeans(dirs, 3, seed=7)
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.assignment, b.assignment)


class TestTrimmedKmeans:
    def wall_set(self, rng, jitter=2.0, per=80):
        targets = [(1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1)]
        return np.vstack([jittered(t, per, jitter, rng) for t in targets]), targets

    def test_clean_four_directions(self, rng):
        dirs, targets = self.wall_set(rng)
        res = trimmed_spherical_kmeans(dirs, 4, seed=2)
        for t in targets:
            assert closest_center_error(res.centers, t) < 0.5
        assert res.discarded_fraction == 0.0

    def test_clutter_discarded(self, rng):
        dirs, targets = self.wall_set(rng)
        clutter = unit_cloud(rng, int(0.2 * len(dirs)))
        mixed = np.vstack([dirs, clutter])
        res = trimmed_spherical_kmeans(mixed, 4, seed=2)
        for t in targets:
            assert closest_center_error(res.centers, t) < 1.0
        # the uniform clutter mostly lands outside the final 3 degree cone
        assert res.discarded_fraction > 0.1
        inlier_of_clutter = np.mean(res.assignment[len(dirs):] >= 0)
        assert inlier_of_clutter < 0.1

    def test_single_wide_angle_is_plain_kmeans(self, rng):
        dirs, _ = self.wall_set(rng, jitter=5.0)
        plain = spherical_kmeans(dirs, 4, seed=5)
        trimmed = trimmed_spherical_kmeans(dirs, 4, TrimSchedule((180.0,)), seed=5)
        npt.assert_allclose(trimmed.centers, plain.centers, atol=1e-12)
        assert np.array_equal(trimmed.assignment, plain.assignment)

    def test_final_inliers_within_last_angle(self, rng):
        dirs, _ = self.wall_set(rng, jitter=25.0)
        schedule = TrimSchedule.default()
        res = trimmed_spherical_kmeans(dirs, 4, schedule, seed=0)
        kept = res.assignment >= 0
        sim = np.einsum("ij,ij->i", dirs[kept], res.centers[res.assignment[kept]])
        assert np.all(np.degrees(np.arccos(np.clip(sim, -1, 1))) <= schedule.angles[-1] + 1e-9)

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            TrimSchedule((10.0, 20.0))
        with pytest.raises(ValueError):
            TrimSchedule((10.0, 0.0))
        with pytest.raises(ValueError):
            TrimSchedule(())


def unit_cloud(rng, count):
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def slab_mesh(dx=10.0, dy=3.0, dz=8.0, edge=0.5):
    spec = synth.single_room_spec(dx, dz, dy, edge_target=edge, seed=0)
    mesh, _, _ = synth.generate(spec)
    return mesh


class TestOrientFloorBbox:
    def test_level_slab_is_identity(self):
        mesh = slab_mesh()
        transform, report = orient_floor_bbox(mesh)
        assert degrees_between(transform.rotation @ np.array([0.0, 1.0, 0.0]),
                               [0, 1, 0]) < 1e-6
        assert "ambiguous-box" not in report.flags

    def test_recovers_known_tilt(self):
        mesh = slab_mesh()
        tilt = rotation_about_z(np.radians(10.0))
        tilted, _ = apply_transform(mesh, synth.AnnotationSet(), tilt)
        transform, _ = orient_floor_bbox(tilted)
        recovered = transform.rotation @ tilt.rotation
        assert degrees_between(recovered @ np.array([0.0, 1.0, 0.0]), [0, 1, 0]) < 0.1

    def test_cube_flags_ambiguity(self):
        mesh = slab_mesh(4.0, 4.0, 4.0)
        _, report = orient_floor_bbox(mesh)
        assert "ambiguous-box" in report.flags


class TestOrientFloorKmeans:
    def test_level_room_is_identity(self, clean_room):
        mesh, _, _ = clean_room
        transform, report = orient_floor_kmeans(mesh, seed=0)
        assert degrees_between(transform.rotation @ np.array([0.0, 1.0, 0.0]),
                               [0, 1, 0]) < 0.1
        npt.assert_allclose(report.gravity_estimate, [0, -1, 0], atol=1e-6)

    def test_recovers_compound_tilt(self):
        spec = synth.single_room_spec(5.0, 4.0, 2.7, tilt_x_deg=7.0, tilt_z_deg=4.0, seed=4)
        mesh, _, truth = synth.generate(spec)
        transform, _ = orient_floor_kmeans(mesh, seed=0)
        net = transform.rotation @ truth.applied.rotation
        assert degrees_between(net @ np.array([0.0, 1.0, 0.0]), [0, 1, 0]) < 0.5

    def test_walls_only_mesh_fails(self, clean_room):
        mesh, _, truth = clean_room
        walls_only = mesh.submesh(np.flatnonzero(truth.kinds == synth.KIND_WALL))
        with pytest.raises(GeometryError, match="no floor evidence"):
            orient_floor_kmeans(walls_only, seed=0)

    def test_idempotent(self):
        spec = synth.single_room_spec(5.0, 4.0, 2.7, tilt_x_deg=9.0, tilt_z_deg=-6.0, seed=4)
        mesh, ann, _ = synth.generate(spec)
        t1, _ = orient_floor_kmeans(mesh, seed=0)
        leveled, ann = apply_transform(mesh, ann, t1)
        t2, report = orient_floor_kmeans(leveled, seed=0)
        final_angle = TrimSchedule.default().angles[-1]
        assert degrees_between(t2.rotation @ np.array([0.0, 1.0, 0.0]),
                               [0, 1, 0]) < final_angle

    def test_equivariance(self, rng):
        spec = synth.single_room_spec(5.0, 4.0, 2.7, tilt_x_deg=5.0, seed=4)
        mesh, ann, _ = synth.generate(spec)
        t_plain, _ = orient_floor_kmeans(mesh, seed=0)
        extra = rotation_about_z(np.radians(8.0))
        rotated, _ = apply_transform(mesh, ann, extra)
        t_rot, _ = orient_floor_kmeans(rotated, seed=0)
        # both paths must level the same physical floor
        up = np.array([0.0, 1.0, 0.0])
        a = t_rot.rotation @ extra.rotation @ t_plain.rotation.T @ up
        assert degrees_between(a, up) < 0.5


class TestAlignWalls:
    def test_axis_aligned_is_identity(self, clean_room):
        mesh, _, _ = clean_room
        transform, report = align_walls(mesh, seed=0)
        assert abs(np.degrees(wrap_quarter_turn(report.wall_angle))) < 0.1
        npt.assert_allclose(transform.rotation, np.eye(3), atol=1e-3)

    def test_recovers_23_degree_yaw(self):
        spec = synth.single_room_spec(5.0, 4.0, 2.7, yaw_deg=23.0, seed=4)
        mesh, _, _ = synth.generate(spec)
        transform, _ = align_walls(mesh, seed=0)
        # the rotation undoing a +23 degree yaw is -23 degrees about y
        angle = np.degrees(np.arctan2(transform.rotation[0, 2], transform.rotation[0, 0]))
        assert angle == pytest.approx(-23.0, abs=0.5)

    def test_wing_minority_is_trimmed_away(self):
        mesh, _, _ = synth.generate(wing_spec())
        transform, report = align_walls(mesh, k=4, seed=0)
        # dominant (main body) walls stay put; the 30-degree wing is outvoted
        npt.assert_allclose(transform.rotation, np.eye(3), atol=1e-2)
        assert report.discarded_fraction > 0.05

    def test_preserves_y_coordinates(self):
        spec = synth.single_room_spec(5.0, 4.0, 2.7, yaw_deg=37.0, seed=4)
        mesh, ann, _ = synth.generate(spec)
        transform, _ = align_walls(mesh, seed=0)
        moved, _ = apply_transform(mesh, ann, transform)
        npt.assert_allclose(moved.vertices[:, 1], mesh.vertices[:, 1], atol=1e-12)

    def test_k6_accepts_uncleaned_mesh(self, clean_room):
        mesh, _, _ = clean_room
        transform, _ = align_walls(mesh, k=6, drop_vertical_deg=90.0, seed=0)
        assert abs(np.degrees(np.arctan2(transform.rotation[0, 2],
                                         transform.rotation[0, 0]))) % 90.0 < 0.5

    def test_determinism(self):
        spec = synth.single_room_spec(5.0, 4.0, 2.7, yaw_deg=31.0,
                                      clutter_density=0.1, seed=4)
        mesh, _, _ = synth.generate(spec)
        t1, r1 = align_walls(mesh, seed=9)
        t2, r2 = align_walls(mesh, seed=9)
        assert np.array_equal(t1.rotation, t2.rotation)
        assert r1.wall_angle == r2.wall_angle


class TestWrapQuarterTurn:
    @pytest.mark.parametrize(
        "angle,expected",
        [(0.0, 0.0), (23.0, 23.0), (88.0, -2.0), (45.0, 45.0), (-45.0, 45.0),
         (135.0, 45.0), (91.0, 1.0), (-91.0, -1.0), (180.0, 0.0)],
    )
    def test_wrapping(self, angle, expected):
        out = np.degrees(wrap_quarter_turn(np.radians(angle)))
        assert out == pytest.approx(expected, abs=1e-9)
