"""Command-line entry point.

Subcommands cover each pipeline stage plus an end-to-end run; every
artifact embeds the configuration that produced it. Exit codes: 0 ok,
1 usage, 2 unreadable or unparsable input, 3 a pipeline stage failed
(the stage is named on stderr). Stage timings go to stderr only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import meshio, synth
from .config import load_config
from .errors import ConfigError, MeshParseError, ScanplanError, StageError
from .mesh import AnnotationSet
from .pipeline import (
    annotations_for_story,
    json_dumps,
    levels_stage,
    orient_stage,
    plan_stage,
    run_pipeline,
    stage,
    walls_stage,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_STAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _timed(name, fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    sys.stderr.write(f"[timing] {name}: {time.perf_counter() - t0:.2f}s\n")
    return out


def build_parser():
    parser = _Parser(prog="scanplan", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("input", help="input file")
        p.add_argument("-o", "--out", required=True, help="output directory")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config entry (repeatable)")

    p = sub.add_parser("orient", parents=[], help="level the floor and align walls")
    common(p)
    p.add_argument("--annotations", help="annotation sidecar JSON")

    p = sub.add_parser("levels", help="detect floors/ceilings and split stories")
    common(p)
    p.add_argument("--oriented", action="store_true",
                   help="input is already oriented; skip orientation")
    p.add_argument("--annotations", help="annotation sidecar JSON")

    p = sub.add_parser("walls", help="extract flat walls for one story")
    common(p)
    p.add_argument("--levels", dest="levels_json", help="levels.json from the levels stage")
    p.add_argument("--story", type=int, default=0)
    p.add_argument("--annotations", help="annotation sidecar JSON")

    p = sub.add_parser("plan", help="render a floor plan")
    common(p)
    p.add_argument("--style", choices=["pen", "drafting"], required=True)
    p.add_argument("--levels", dest="levels_json", help="levels.json from the levels stage")
    p.add_argument("--story", type=int, default=0)
    p.add_argument("--flat-walls", dest="flat_walls",
                   help="flat-wall OBJ for drafting style (skips wall extraction)")
    p.add_argument("--annotations", help="annotation sidecar JSON (oriented frame when --levels)")

    p = sub.add_parser("pipeline", help="run every stage and write all artifacts")
    common(p)
    p.add_argument("--annotations", help="annotation sidecar JSON")

    p = sub.add_parser("synth", help="generate a synthetic labeled building")
    common(p)

    p = sub.add_parser("eval", help="run the pipeline on a synthetic spec and score it")
    common(p)

    return parser


def _config_from_args(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return load_config(args.config, overrides)


def _load_inputs(args, config):
    mesh = meshio.load_mesh(args.input, unit_scale=config.unit_scale)
    annotations = AnnotationSet()
    if getattr(args, "annotations", None):
        annotations = meshio.load_annotations(args.annotations)
    return mesh, annotations


def _write(outdir, name, text):
    path = Path(outdir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def _write_pipeline_artifacts(result, config, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    meshio.save_obj(result.oriented_mesh, outdir / "oriented.obj",
                    header_comment=f"config: {config.summary()}")
    _write(outdir, "orientation.json", json_dumps(result.orientation_report))
    meshio.save_annotations(result.oriented_annotations, outdir / "annotations_oriented.json")
    _write(outdir, "levels.json", json_dumps(result.levels_report))
    for s in range(result.partition.story_count):
        meshio.save_obj(result.story_meshes[s], outdir / f"story_{s}.obj",
                        header_comment=f"config: {config.summary()}")
        meshio.save_obj(result.flat_meshes[s], outdir / f"flat_walls_{s}.obj",
                        header_comment=f"config: {config.summary()}")
        _write(outdir, f"walls_{s}.json", json_dumps(result.walls_reports[s]))
        _write(outdir, f"plan_pen_{s}.svg", result.pen_svgs[s])
        _write(outdir, f"layers_pen_{s}.json", json_dumps(result.pen_layer_docs[s]))
        _write(outdir, f"plan_drafting_{s}.svg", result.drafting_svgs[s])
        _write(outdir, f"layers_drafting_{s}.json", json_dumps(result.drafting_layer_docs[s]))


def _report_timings(timings):
    for key, value in timings.items():
        sys.stderr.write(f"[timing] {key.removesuffix('_s')}: {value:.2f}s\n")


def _read_levels_json(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    floors = [s["floor_y"] for s in data["stories"]]
    ceilings = [s["ceiling_y"] for s in data["stories"]]
    return data, floors, ceilings


def cmd_orient(args):
    config = _config_from_args(args)
    mesh, annotations = _load_inputs(args, config)
    with stage("orient"):
        mesh, annotations, report = _timed(
            "orient", orient_stage, mesh, annotations, config
        )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    meshio.save_obj(mesh, outdir / "oriented.obj",
                    header_comment=f"config: {config.summary()}")
    _write(outdir, "orientation.json", json_dumps(report))
    meshio.save_annotations(annotations, outdir / "annotations_oriented.json")
    return EXIT_OK


def cmd_levels(args):
    config = _config_from_args(args)
    mesh, annotations = _load_inputs(args, config)
    if not args.oriented:
        with stage("orient"):
            mesh, annotations, _ = _timed("orient", orient_stage, mesh, annotations, config)
    with stage("levels"):
        partition, report = _timed("levels", levels_stage, mesh, config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write(outdir, "levels.json", json_dumps(report))
    for s in range(partition.story_count):
        meshio.save_obj(mesh.submesh(partition.face_indices[s]),
                        outdir / f"story_{s}.obj",
                        header_comment=f"config: {config.summary()}")
    return EXIT_OK


def cmd_walls(args):
    config = _config_from_args(args)
    mesh, annotations = _load_inputs(args, config)
    if args.levels_json:
        _, floors, ceilings = _read_levels_json(args.levels_json)
        story = args.story
        story_mesh = mesh  # input is the story mesh already
    else:
        with stage("orient"):
            mesh, annotations, _ = _timed("orient", orient_stage, mesh, annotations, config)
        with stage("levels"):
            partition, _ = _timed("levels", levels_stage, mesh, config)
        floors, ceilings = partition.floors, partition.ceilings
        story = args.story
        story_mesh = mesh.submesh(partition.face_indices[story])
    if story >= len(floors):
        raise ConfigError(f"story {story} out of range (found {len(floors)})")
    with stage("walls"):
        flat_mesh, _, report = _timed(
            "walls", walls_stage, story_mesh, floors[story], ceilings[story], config
        )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    meshio.save_obj(flat_mesh, outdir / f"flat_walls_{story}.obj",
                    header_comment=f"config: {config.summary()}")
    _write(outdir, f"walls_{story}.json", json_dumps(report))
    return EXIT_OK


def cmd_plan(args):
    config = _config_from_args(args)
    style = "pen_and_ink" if args.style == "pen" else "drafting"
    mesh, annotations = _load_inputs(args, config)
    outdir = Path(args.out)

    if args.levels_json:
        _, floors, ceilings = _read_levels_json(args.levels_json)
        story = args.story
        if story >= len(floors):
            raise ConfigError(f"story {story} out of range (found {len(floors)})")
        story_ann = annotations_for_story(annotations, floors, config.bucket_size)[story]
        if style == "drafting":
            if args.flat_walls:
                sliceable = meshio.load_mesh(args.flat_walls, unit_scale=1.0)
            else:
                with stage("walls"):
                    sliceable, _, _ = _timed(
                        "walls", walls_stage, mesh, floors[story], ceilings[story], config
                    )
        else:
            sliceable = mesh
        with stage("plan"):
            _, svg, doc = _timed(
                "plan", plan_stage, sliceable, floors[story], ceilings[story],
                story_ann, config, style
            )
        tag = "pen" if style == "pen_and_ink" else "drafting"
        outdir.mkdir(parents=True, exist_ok=True)
        _write(outdir, f"plan_{tag}_{story}.svg", svg)
        _write(outdir, f"layers_{tag}_{story}.json", json_dumps(doc))
        return EXIT_OK

    # no prior stages given: run the fixed pipeline order implicitly
    result = run_pipeline(mesh, annotations, config)
    _report_timings(result.timings)
    outdir.mkdir(parents=True, exist_ok=True)
    svgs = result.pen_svgs if style == "pen_and_ink" else result.drafting_svgs
    docs = result.pen_layer_docs if style == "pen_and_ink" else result.drafting_layer_docs
    tag = "pen" if style == "pen_and_ink" else "drafting"
    for s in range(result.partition.story_count):
        _write(outdir, f"plan_{tag}_{s}.svg", svgs[s])
        _write(outdir, f"layers_{tag}_{s}.json", json_dumps(docs[s]))
    return EXIT_OK


def cmd_pipeline(args):
    config = _config_from_args(args)
    mesh, annotations = _load_inputs(args, config)
    result = run_pipeline(mesh, annotations, config)
    _report_timings(result.timings)
    _write_pipeline_artifacts(result, config, args.out)
    return EXIT_OK


def cmd_synth(args):
    config = _config_from_args(args)
    spec = synth.load_spec(args.input)
    mesh, annotations, truth = _timed("synth", synth.generate, spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    meshio.save_obj(mesh, outdir / "building.obj",
                    header_comment=f"spec seed: {spec.seed}")
    meshio.save_annotations(annotations, outdir / "annotations.json")
    _write(outdir, "truth.json", json_dumps(synth.truth_to_dict(truth)))
    synth.save_spec(spec, outdir / "spec.json")
    return EXIT_OK


def cmd_eval(args):
    config = _config_from_args(args)
    spec = synth.load_spec(args.input)
    report = synth.evaluate(config, spec)
    _report_timings(report["timings"])
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = dict(report)
    payload["config"] = config.to_dict()
    _write(outdir, "eval.json", json_dumps(payload))
    return EXIT_OK


_COMMANDS = {
    "orient": cmd_orient,
    "levels": cmd_levels,
    "walls": cmd_walls,
    "plan": cmd_plan,
    "pipeline": cmd_pipeline,
    "synth": cmd_synth,
    "eval": cmd_eval,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (MeshParseError, ConfigError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except StageError as exc:
        sys.stderr.write(f"stage {exc.stage} failed: {exc.cause}\n")
        return EXIT_STAGE
    except ScanplanError as exc:
        sys.stderr.write(f"pipeline failed: {exc}\n")
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
