"""Stage functions and the end-to-end pipeline.

Each stage is a pure function of (geometry, config); the full pipeline is
exactly the stages run in order, so running them one subcommand at a time
over intermediate files reproduces the pipeline's artifacts byte for
byte. Timings are reported separately and never written into artifacts,
which keeps artifact bytes stable across runs.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import floorplan, levels, walls
from .config import PipelineConfig
from .errors import ScanplanError, StageError
from .mesh import apply_transform, compute_attributes
from .orientation import (
    TrimSchedule,
    align_walls,
    orient_floor_bbox,
    orient_floor_kmeans,
)


@contextmanager
def stage(name):
    """Tag ScanplanErrors raised inside with the failing stage's name."""
    try:
        yield
    except StageError:
        raise
    except ScanplanError as exc:
        raise StageError(name, exc) from exc


def json_dumps(obj):
    """Deterministic JSON used for every artifact."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _transform_dict(t):
    return {
        "rotation": [[float(v) for v in row] for row in t.rotation],
        "translation": [float(v) for v in t.translation],
    }


def orient_stage(mesh, annotations, config: PipelineConfig):
    """Level the floor, then align walls; both transforms applied in order."""
    schedule = TrimSchedule(config.schedule)
    if config.orient_method == "bbox":
        floor_t, floor_report = orient_floor_bbox(mesh)
    else:
        floor_t, floor_report = orient_floor_kmeans(
            mesh, schedule, seed=config.seed, prefilter_deg=config.floor_prefilter_deg
        )
    mesh, annotations = apply_transform(mesh, annotations, floor_t)
    wall_t, wall_report = align_walls(
        mesh,
        k=config.wall_k,
        schedule=schedule,
        seed=config.seed,
        drop_vertical_deg=config.drop_vertical_deg,
    )
    mesh, annotations = apply_transform(mesh, annotations, wall_t)
    report = {
        "method": floor_report.method,
        "floor_transform": _transform_dict(floor_t),
        "wall_transform": _transform_dict(wall_t),
        "gravity_estimate": [float(v) for v in floor_report.gravity_estimate],
        "wall_angle_rad": float(wall_report.wall_angle),
        "floor_discarded_fraction": float(floor_report.discarded_fraction),
        "wall_discarded_fraction": float(wall_report.discarded_fraction),
        "flags": sorted(set(floor_report.flags) | set(wall_report.flags)),
        "config": config.to_dict(),
    }
    return mesh, annotations, report


def levels_stage(mesh, config: PipelineConfig):
    """Histogram the oriented mesh and split it into stories."""
    attrs = compute_attributes(mesh)
    hist = levels.build_histogram(
        mesh, config.bucket_size, config.levels_filter_deg, "both", attrs=attrs
    )
    partition = levels.partition_stories(
        mesh,
        hist,
        min_gap=config.min_gap,
        min_room_height=config.min_room_height,
        peak_fraction=config.peak_fraction,
        absolute_min_area=config.absolute_min_area,
        attrs=attrs,
    )
    spikes = levels.find_spikes(hist, config.peak_fraction, config.absolute_min_area)
    report = {
        "story_count": partition.story_count,
        "stories": [
            {
                "floor_y": float(partition.floors[s]),
                "ceiling_y": float(partition.ceilings[s]),
                "face_count": int(len(partition.face_indices[s])),
            }
            for s in range(partition.story_count)
        ],
        "bucket_size": float(hist.bucket_size),
        "spikes": [
            {"altitude": float(s.altitude), "strength": float(s.strength)} for s in spikes
        ],
        "flags": list(partition.flags),
        "config": config.to_dict(),
    }
    return partition, report


def clean_story(story_mesh, floor_y, ceiling_y, config: PipelineConfig):
    """Strip the story's floor and ceiling surfaces before wall work."""
    return levels.remove_ceiling_floor(
        story_mesh, floor_y, ceiling_y, config.levels_filter_deg, config.margin
    )


def walls_stage(story_mesh, floor_y, ceiling_y, config: PipelineConfig, cleaned=None):
    """Extract flat walls for one story (stripping floor/ceiling first)."""
    if cleaned is None:
        cleaned = clean_story(story_mesh, floor_y, ceiling_y, config)
    directions = walls.wall_directions(
        cleaned,
        mode=config.direction_mode,
        k=config.direction_k,
        schedule=TrimSchedule(config.schedule),
        seed=config.seed,
        drop_vertical_deg=config.drop_vertical_deg,
    )
    params = walls.BlockParams(
        length=config.block_length,
        width=config.block_width,
        height=config.block_height,
        min_neighbors=config.min_neighbors,
    )
    planar, segments, kept = walls.extract_walls(
        cleaned,
        floor_y,
        ceiling_y,
        directions,
        params=params,
        cone_angle=config.cone_angle_deg,
        min_area=config.min_wall_area,
        reach_tol=config.reach_tol,
        fit_mode=config.plane_fit_mode,
    )
    flat_mesh = walls.assemble_walls(planar)
    report = {
        "directions": [[float(v) for v in d] for d in directions.directions],
        "direction_source": directions.source,
        "cluster_count": len(segments),
        "kept_count": len(kept),
        "discarded_count": len(segments) - len(kept),
        "walls": [
            {
                "normal": [float(v) for v in w.normal],
                "offset": float(w.offset),
                "corners": [[float(v) for v in c] for c in w.corners],
            }
            for w in planar
        ],
        "flags": list(directions.flags),
        "config": config.to_dict(),
    }
    return flat_mesh, planar, report


def plan_stage(mesh_for_style, floor_y, ceiling_y, annotations, config, style,
               cleaned=None):
    """Slice and render one story's floor plan in the requested style.

    Pen-and-ink expects the story mesh (floor/ceiling removal happens
    here unless a pre-cleaned mesh is passed); drafting expects the
    flat-wall mesh and slices once, halfway between floor and ceiling.
    """
    if style == "pen_and_ink":
        if cleaned is None:
            cleaned = clean_story(mesh_for_style, floor_y, ceiling_y, config)
        plan_alt = floorplan.make_slice_plan(floor_y, ceiling_y, config.slice_count)
        layers = floorplan.slice_layers(cleaned, plan_alt)
    elif style == "drafting":
        mid = (floor_y + ceiling_y) / 2.0
        layers = (floorplan.slice_mesh(mesh_for_style, mid),)
    else:
        raise ValueError(f"unknown style {style!r}")
    markers = floorplan.project_annotations(annotations)
    plan = floorplan.FloorPlan(
        layers=tuple(layers), style=style, opacity=config.opacity, markers=markers
    )
    svg = floorplan.render_svg(
        plan,
        stroke_width=config.stroke_width,
        scale=config.scale,
        config_note=config.summary(),
    )
    layers_doc = {
        "style": style,
        "layers": [
            {
                "altitude": float(layer.altitude),
                "segments": layer.segments.reshape(-1, 4).tolist(),
            }
            for layer in layers
        ],
        "config": config.to_dict(),
    }
    return plan, svg, layers_doc


def annotations_for_story(annotations, floors, bucket_size):
    """Split annotations among stories with the same cut faces use."""
    count = len(floors)
    if count == 1:
        return [list(annotations)]
    eps = bucket_size / 2.0
    bounds = np.array(floors[1:]) - eps
    out = [[] for _ in range(count)]
    for a in annotations:
        s = int(np.searchsorted(bounds, a.position[1], side="right"))
        out[s].append(a)
    return out


@dataclass
class PipelineResult:
    oriented_mesh: object
    oriented_annotations: object
    orientation_report: dict
    partition: object
    levels_report: dict
    story_meshes: list = field(default_factory=list)
    flat_meshes: list = field(default_factory=list)
    walls_reports: list = field(default_factory=list)
    pen_svgs: list = field(default_factory=list)
    pen_layer_docs: list = field(default_factory=list)
    drafting_svgs: list = field(default_factory=list)
    drafting_layer_docs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)


def run_pipeline(mesh, annotations, config: PipelineConfig) -> PipelineResult:
    """Orient, split into stories, extract walls, and render both styles."""
    t0 = time.perf_counter()
    with stage("orient"):
        oriented, ann, orient_report = orient_stage(mesh, annotations, config)
    t_orient = time.perf_counter() - t0

    t0 = time.perf_counter()
    with stage("levels"):
        partition, levels_report = levels_stage(oriented, config)
    t_levels = time.perf_counter() - t0

    result = PipelineResult(
        oriented_mesh=oriented,
        oriented_annotations=ann,
        orientation_report=orient_report,
        partition=partition,
        levels_report=levels_report,
    )
    story_annotations = annotations_for_story(ann, partition.floors, config.bucket_size)

    t_walls = 0.0
    t_draw = 0.0
    t_pen = 0.0
    for s in range(partition.story_count):
        story_mesh = oriented.submesh(partition.face_indices[s])
        result.story_meshes.append(story_mesh)
        floor_y = partition.floors[s]
        ceiling_y = partition.ceilings[s]

        t0 = time.perf_counter()
        with stage("walls"):
            cleaned = clean_story(story_mesh, floor_y, ceiling_y, config)
            flat_mesh, _, walls_report = walls_stage(
                story_mesh, floor_y, ceiling_y, config, cleaned=cleaned
            )
        t_walls += time.perf_counter() - t0
        result.flat_meshes.append(flat_mesh)
        result.walls_reports.append(walls_report)

        with stage("plan"):
            t0 = time.perf_counter()
            _, draft_svg, draft_doc = plan_stage(
                flat_mesh, floor_y, ceiling_y, story_annotations[s], config, "drafting"
            )
            t_draw += time.perf_counter() - t0
            t0 = time.perf_counter()
            _, pen_svg, pen_doc = plan_stage(
                story_mesh, floor_y, ceiling_y, story_annotations[s], config,
                "pen_and_ink", cleaned=cleaned,
            )
            t_pen += time.perf_counter() - t0
        result.pen_svgs.append(pen_svg)
        result.pen_layer_docs.append(pen_doc)
        result.drafting_svgs.append(draft_svg)
        result.drafting_layer_docs.append(draft_doc)

    # slice_draw_s covers the drafting product (the slicing/drawing step of
    # the flat-wall path); the optional many-slice pen-and-ink render is an
    # extra product and is reported on its own
    result.timings = {
        "orient_s": t_orient,
        "levels_s": t_levels,
        "walls_s": t_walls,
        "slice_draw_s": t_draw,
        "pen_plan_s": t_pen,
    }
    return result
