#!/usr/bin/env python3
"""Find floor and ceiling altitudes and split a two-story house.

Horizontal surfaces pile up triangle area at their altitude; the
area-weighted histogram below makes floors and ceilings stand out as
spikes, and the spans between them become stories.
"""

from pathlib import Path

from scanplan import synth
from scanplan.levels import build_histogram, find_spikes, partition_stories
from scanplan.meshio import save_obj
from scanplan.synth import BuildingSpec, RoomSpec, StorySpec

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

spec = BuildingSpec(
    stories=(
        StorySpec(2.7, (RoomSpec("ground", (0.0, 0.0, 7.0, 5.0)),)),
        StorySpec(2.4, (RoomSpec("upper", (0.0, 0.0, 7.0, 5.0)),)),
    ),
    clutter_density=0.1, noise_sigma=0.005, seed=12,
)
mesh, _, truth = synth.generate(spec)
print(f"two-story house: {mesh.num_faces} faces")

hist = build_histogram(mesh, direction_filter="both")
print(f"\naltitude histogram: {len(hist.counts)} buckets of {hist.bucket_size} m")
spikes = find_spikes(hist)
print("spikes (candidate floors/ceilings):")
for s in spikes:
    print(f"  y = {s.altitude:7.3f} m   area {s.strength:7.2f} m^2")

part = partition_stories(mesh, hist)
print(f"\ndetected {part.story_count} stories:")
for i in range(part.story_count):
    true_f, true_c = truth.floor_y[i], truth.ceiling_y[i]
    print(f"  story {i}: floor {part.floors[i]:7.3f} (true {true_f:.3f})  "
          f"ceiling {part.ceilings[i]:7.3f} (true {true_c:.3f})  "
          f"{len(part.face_indices[i])} faces")
    story = mesh.submesh(part.face_indices[i])
    save_obj(story, OUT / f"02_story_{i}.obj")
print(f"\nwrote per-story meshes to {OUT}")
