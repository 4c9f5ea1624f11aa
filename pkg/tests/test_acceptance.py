"""Acceptance suite: one test per shipping criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion with its measured numbers.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import three_story_spec, two_story_spec, wing_spec
from test_walls import as_partition, brute_force_dbscan, random_point_set

from scanplan import synth
from scanplan.config import PipelineConfig
from scanplan.floorplan import make_slice_plan, measure_report
from scanplan.levels import build_histogram, detect_floor_ceiling, partition_stories
from scanplan.mesh import angle_between, apply_transform, unit
from scanplan.meshio import save_annotations, save_obj
from scanplan.orientation import align_walls, orient_floor_kmeans, wrap_quarter_turn
from scanplan.pipeline import run_pipeline, walls_stage
from scanplan.synth import (
    BuildingSpec,
    RoomSpec,
    StorySpec,
    match_walls,
    single_room_spec,
)
from scanplan.walls import BlockParams, block_dbscan

BUCKET = 0.0508
UP = np.array([0.0, 1.0, 0.0])


def note(criterion, message):
    print(f"[acceptance {criterion}] PASS: {message}")


def clean_family():
    """Clean, level, axis-aligned specs reused by several criteria."""
    return [
        single_room_spec(5.0, 4.0, 2.7, seed=101),
        single_room_spec(7.5, 3.2, 2.4, seed=102),
        BuildingSpec(
            stories=(
                StorySpec(
                    2.7,
                    (
                        RoomSpec("a", (0.0, 0.0, 5.0, 4.0)),
                        RoomSpec("b", (5.3, 0.0, 9.3, 4.0)),
                    ),
                ),
            ),
            seed=103,
        ),
        BuildingSpec(
            stories=(
                StorySpec(
                    2.5,
                    (
                        RoomSpec("nw", (0.0, 0.0, 6.0, 4.0)),
                        RoomSpec("ne", (6.4, 0.0, 10.4, 4.0)),
                        RoomSpec("s", (0.0, 4.4, 10.4, 8.4)),
                    ),
                ),
            ),
            seed=104,
        ),
    ]


class TestCriterion1SlicePlanExactness:
    def test_slice_altitudes_match_closed_form(self):
        start = time.perf_counter()
        plan = make_slice_plan(0.0, 10.0, 4)
        assert plan.altitudes == (0.0, 2.5, 5.0, 7.5, 10.0)

        rng = np.random.default_rng(1)
        checked = 0
        for _ in range(1000):
            lo = float(rng.uniform(-50, 50))
            hi = lo + float(rng.uniform(1e-3, 60))
            n = int(rng.integers(1, 400))
            plan = make_slice_plan(lo, hi, n)
            assert len(plan.altitudes) == n + 1
            for i in range(0, n + 1, max(1, n // 7)):
                assert plan.altitudes[i] == pytest.approx(
                    lo + (hi - lo) * (i / n), abs=1e-12
                )
                checked += 1
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        note(1, f"slice formula exact on 1000 random plans "
                f"({checked} spot checks) in {elapsed:.2f}s")


class TestCriterion2DbscanOracle:
    def test_block_dbscan_equals_brute_force(self):
        rng = np.random.default_rng(2)
        params_pool = [
            BlockParams(),
            BlockParams(min_neighbors=2),
            BlockParams(min_neighbors=5),
            BlockParams(length=0.8, width=0.1, height=1.2, min_neighbors=4),
            BlockParams(length=0.3, width=0.5, height=4.0, min_neighbors=3),
            BlockParams(length=1.5, width=0.05, height=0.8, min_neighbors=6),
        ]
        start = time.perf_counter()
        agree = 0
        cases = 200
        for trial in range(cases):
            n = int(rng.integers(5, 501))
            pts = random_point_set(rng, n)
            angle = rng.uniform(0, 2 * np.pi)
            direction = unit([np.cos(angle), 0.0, np.sin(angle)])
            params = params_pool[trial % len(params_pool)]
            got = as_partition(*block_dbscan(pts, direction, params))
            want = as_partition(*brute_force_dbscan(pts, direction, params))
            assert got == want, f"trial {trial}: partition mismatch (n={n})"
            agree += 1
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0
        note(2, f"{agree}/{cases} random point sets identical to the "
                f"O(n^2) oracle in {elapsed:.1f}s")


class TestCriterion3OrientationRecovery:
    def test_recovers_tilt_and_yaw(self):
        start = time.perf_counter()
        rng = np.random.default_rng(3)
        good = 0
        worst = (0.0, 0.0)
        cases = 50
        for case in range(cases):
            spec = single_room_spec(
                width=float(rng.uniform(4.0, 8.0)),
                depth=float(rng.uniform(3.0, 6.0)),
                height=float(rng.uniform(2.4, 3.0)),
                tilt_x_deg=float(rng.uniform(-10.0, 10.0)),
                tilt_z_deg=float(rng.uniform(-10.0, 10.0)),
                yaw_deg=float(rng.uniform(-45.0, 45.0)),
                clutter_density=float(rng.uniform(0.0, 0.2)),
                seed=500 + case,
            )
            mesh, ann, truth = synth.generate(spec)
            floor_t, _ = orient_floor_kmeans(mesh, seed=0)
            leveled, ann = apply_transform(mesh, ann, floor_t)
            wall_t, _ = align_walls(leveled, k=4, seed=0)
            net = wall_t.rotation @ floor_t.rotation @ truth.applied.rotation
            floor_err = np.degrees(angle_between(net @ UP, UP))
            x_img = net @ np.array([1.0, 0.0, 0.0])
            yaw_err = abs(np.degrees(wrap_quarter_turn(
                np.arctan2(-x_img[2], x_img[0]))))
            worst = max(worst, (floor_err, yaw_err))
            if floor_err < 0.5 and yaw_err < 0.5:
                good += 1
        elapsed = time.perf_counter() - start
        assert good >= 48, f"only {good}/{cases} recovered within 0.5 degrees"
        assert elapsed < 120.0
        note(3, f"{good}/{cases} buildings within 0.5 deg "
                f"(worst {worst[0]:.3f}/{worst[1]:.3f} deg) in {elapsed:.1f}s")


class TestCriterion4FloorCeilingDetection:
    def test_within_one_bucket_on_clean_specs(self):
        specs = clean_family() + [two_story_spec(), three_story_spec()]
        checked = 0
        for spec in specs:
            mesh, _, truth = synth.generate(spec)
            hist = build_histogram(mesh, BUCKET, direction_filter="both")
            part = partition_stories(mesh, hist)
            assert part.story_count == truth.story_count
            for s in range(part.story_count):
                assert abs(part.floors[s] - truth.floor_y[s]) <= BUCKET
                assert abs(part.ceilings[s] - truth.ceiling_y[s]) <= BUCKET
                checked += 1
        note(4, f"floor/ceiling within one bucket ({BUCKET} m) on "
                f"{checked} stories across {len(specs)} clean specs")

    def test_sunken_floor_returns_highest(self):
        from test_levels import horizontal_quad, stack_quads

        mesh = stack_quads(
            horizontal_quad(0, 0, 4, 3, -0.15, up=True),
            horizontal_quad(5, 0, 8, 3, 0.0, up=True),
            horizontal_quad(0, 0, 8, 3, 2.7, up=False),
        )
        hist = build_histogram(mesh, BUCKET, direction_filter="both")
        floor_y, _ = detect_floor_ceiling(hist)
        assert floor_y == pytest.approx(0.0, abs=BUCKET)
        note(4, "sunken-floor case returns the highest floor level")


class TestCriterion5StoryPartitioning:
    @pytest.mark.parametrize("stories,builder", [
        (1, lambda: single_room_spec(6.0, 5.0, 2.7, seed=51)),
        (2, two_story_spec),
        (3, three_story_spec),
    ])
    def test_story_counts_and_labels(self, stories, builder):
        mesh, _, truth = synth.generate(builder())
        hist = build_histogram(mesh, BUCKET, direction_filter="both")
        part = partition_stories(mesh, hist)
        assert part.story_count == stories
        assigned = np.empty(mesh.num_faces, dtype=int)
        for s, idx in enumerate(part.face_indices):
            assigned[idx] = s
        agreement = float(np.mean(assigned == truth.story_ids))
        assert agreement >= 0.99
        note(5, f"{stories}-story spec: exact count, "
                f"label agreement {agreement:.4f}")


class TestCriterion6WallExtraction:
    def extract(self, spec, config):
        mesh, _, truth = synth.generate(spec)
        _, _, report = walls_stage(mesh, truth.floor_y[0], truth.ceiling_y[0], config)
        identity = np.eye(3)
        recall, precision, matched_truth, _ = match_walls(
            report["walls"], truth.wall_planes, identity
        )
        return recall, precision, matched_truth, truth

    def test_clean_specs_perfect(self, default_config):
        for spec in clean_family():
            recall, precision, _, _ = self.extract(spec, default_config)
            assert recall == 1.0 and precision == 1.0, spec
        note(6, f"clean axis-aligned specs: recall=precision=100% "
                f"on {len(clean_family())} specs")

    def test_degraded_recall(self, default_config):
        degraded = [
            replace(spec, hole_fraction=0.10, noise_sigma=0.01)
            for spec in clean_family()
        ]
        recalls = []
        for spec in degraded:
            recall, _, _, _ = self.extract(spec, default_config)
            recalls.append(recall)
            assert recall >= 0.90, f"recall {recall} on {spec}"
        note(6, f"10% holes + 1 cm noise: recalls {['%.2f' % r for r in recalls]}")

    def test_wing_needs_kmeans_directions(self, default_config):
        spec = wing_spec()
        kmeans_cfg = replace(default_config, direction_mode="kmeans", direction_k=6)
        recall_k, _, matched_k, truth = self.extract(spec, kmeans_cfg)
        assert recall_k == 1.0, "kmeans directions must recover the wing"

        recall_p, _, matched_p, truth_p = self.extract(spec, default_config)
        assert recall_p < 1.0, "principal directions cannot see the wing"
        missing = [truth_p.wall_planes[i]["room"]
                   for i in np.flatnonzero(~matched_p)]
        assert set(missing) == {"wing"}, "exactly the wing walls must be missed"
        note(6, f"rotated wing: kmeans recall {recall_k:.2f}, principal4 "
                f"recall {recall_p:.2f} with wing walls missing")


SURVEY_FIXTURES = [
    ("202/S1", 24.1243, 24.037, 0.4),
    ("203/S1", 7.991, 5.5332, 30.8),
    ("204/S1", 31.9608, 31.9032, 0.2),
    ("205/S1", 32.5398, 33.3375, -2.5),
    ("206/S1", 32.9304, 32.6536, 0.8),
    ("203/S2", 7.991, 6.9699, 12.8),
    ("204/S2", 31.9608, 31.7484, 0.7),
    ("205/S2", 32.5398, 32.6814, -0.4),
    ("206/S2", 32.9304, 32.592, 1.0),
    # room 202 of the second scan is excluded: its published error does
    # not follow from its published areas (documented inconsistency)
]


class TestCriterion7AreaErrorFixtures:
    def test_survey_errors_reproduced(self):
        rooms = [
            {
                "label": label,
                "actual_area_m2": actual,
                "polygon": [[0.0, 0.0], [4.0, 0.0], [4.0, measured / 4.0],
                            [0.0, measured / 4.0]],
            }
            for label, actual, measured, _ in SURVEY_FIXTURES
        ]
        report = measure_report(None, rooms)
        for row, (label, _, _, published) in zip(report, SURVEY_FIXTURES):
            assert row["error_percent"] == pytest.approx(published, abs=0.1), label
        note(7, f"{len(SURVEY_FIXTURES)} survey fixtures reproduced to 0.1 points "
                "(one inconsistent row excluded)")


class TestCriterion8EndToEndAreas:
    def test_clean_areas_within_two_percent(self, default_config):
        worst = 0.0
        rooms_checked = 0
        for spec in clean_family():
            report = synth.evaluate(default_config, spec)
            for label, room in report["rooms"].items():
                assert room["error_percent"] is not None, label
                worst = max(worst, abs(room["error_percent"]))
                rooms_checked += 1
                assert abs(room["error_percent"]) <= 2.0, (label, room)
        note(8, f"clean specs: {rooms_checked} room areas within 2% "
                f"(worst {worst:.3f}%)")

    def test_degraded_areas_within_five_percent(self, default_config):
        worst = 0.0
        rooms_checked = 0
        for spec in clean_family():
            degraded = replace(spec, hole_fraction=0.10, noise_sigma=0.01)
            report = synth.evaluate(default_config, degraded)
            for label, room in report["rooms"].items():
                assert room["error_percent"] is not None, label
                worst = max(worst, abs(room["error_percent"]))
                rooms_checked += 1
                assert abs(room["error_percent"]) <= 5.0, (label, room)
        note(8, f"degraded specs: {rooms_checked} room areas within 5% "
                f"(worst {worst:.3f}%)")


class TestCriterion9Determinism:
    def test_pipeline_runs_are_byte_identical(self, tmp_path):
        import subprocess
        import sys

        spec = single_room_spec(
            6.0, 4.5, 2.7, tilt_x_deg=5.0, tilt_z_deg=-7.0, yaw_deg=21.0,
            clutter_density=0.1, noise_sigma=0.01, hole_fraction=0.05,
            bridge_fraction=0.01, seed=909,
        )
        mesh, annotations, _ = synth.generate(spec)
        mesh_path = tmp_path / "scan.obj"
        ann_path = tmp_path / "ann.json"
        save_obj(mesh, mesh_path)
        save_annotations(annotations, ann_path)
        outputs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            proc = subprocess.run(
                [sys.executable, "-m", "scanplan.cli", "pipeline", str(mesh_path),
                 "-o", str(out), "--annotations", str(ann_path)],
                capture_output=True,
            )
            assert proc.returncode == 0, proc.stderr.decode()
            outputs.append({
                p.name: p.read_bytes() for p in sorted(out.iterdir())
                if p.suffix in (".svg", ".json", ".obj")
            })
        assert outputs[0] == outputs[1]
        svg_count = sum(1 for n in outputs[0] if n.endswith(".svg"))
        note(9, f"two pipeline processes byte-identical across "
                f"{len(outputs[0])} artifacts ({svg_count} SVGs)")


class TestCriterion10PerformanceSmoke:
    def test_large_building_pipeline(self):
        spec = BuildingSpec(
            stories=(
                StorySpec(
                    2.7,
                    (
                        RoomSpec("r0", (0.0, 0.0, 8.0, 5.0)),
                        RoomSpec("r1", (8.4, 0.0, 16.4, 5.0)),
                        RoomSpec("r2", (0.0, 5.4, 8.0, 10.4)),
                        RoomSpec("r3", (8.4, 5.4, 16.4, 10.4)),
                    ),
                ),
            ),
            clutter_density=0.05, tilt_x_deg=4.0, tilt_z_deg=-3.0, yaw_deg=12.0,
            noise_sigma=0.005, edge_target=0.065, seed=77,
        )
        mesh, ann, _ = synth.generate(spec)
        assert 250_000 <= mesh.num_faces <= 320_000  # matches the ~285k target
        start = time.perf_counter()
        result = run_pipeline(mesh, ann, PipelineConfig())
        elapsed = time.perf_counter() - start
        assert elapsed < 120.0
        t = result.timings
        t_o = t["orient_s"] + t["levels_s"]
        t_p = t["walls_s"]
        t_sd = t["slice_draw_s"]
        assert t_p > t_o > t_sd, f"stage ordering violated: {t}"
        note(10, f"{mesh.num_faces} faces in {elapsed:.1f}s "
                 f"(T_p={t_p:.2f} > T_o={t_o:.2f} > T_sd={t_sd:.3f}, "
                 f"pen render {t['pen_plan_s']:.2f}s)")
