import numpy as np
import pytest

from scanplan import synth
from scanplan.config import PipelineConfig
from scanplan.synth import BuildingSpec, RoomSpec, StorySpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_config():
    return PipelineConfig()


@pytest.fixture
def clean_room():
    """Level, axis-aligned 5x4x2.7 room with exact geometry."""
    spec = synth.single_room_spec(5.0, 4.0, 2.7, seed=1)
    return synth.generate(spec)


@pytest.fixture
def two_room_spec():
    return BuildingSpec(
        stories=(
            StorySpec(
                2.7,
                (
                    RoomSpec("west", (0.0, 0.0, 5.0, 4.0)),
                    RoomSpec("east", (5.3, 0.0, 9.3, 4.0)),
                ),
            ),
        ),
        seed=2,
    )


def two_story_spec(seed=5, **kwargs):
    return BuildingSpec(
        stories=(
            StorySpec(2.7, (RoomSpec("ground", (0.0, 0.0, 6.0, 5.0)),)),
            StorySpec(2.5, (RoomSpec("upper", (0.0, 0.0, 6.0, 5.0)),)),
        ),
        seed=seed,
        **kwargs,
    )


def three_story_spec(seed=6, **kwargs):
    return BuildingSpec(
        stories=(
            StorySpec(2.7, (RoomSpec("s0", (0.0, 0.0, 6.0, 5.0)),)),
            StorySpec(2.5, (RoomSpec("s1", (0.0, 0.0, 6.0, 5.0)),)),
            StorySpec(2.4, (RoomSpec("s2", (0.0, 0.0, 6.0, 5.0)),)),
        ),
        seed=seed,
        **kwargs,
    )


def wing_spec(seed=9, wing_deg=30.0):
    """Main body plus a wing at an angle.

    The wing keeps only its two x-facing walls (the others adjoin the
    main body and go unscanned), so it contributes wall normals at
    exactly `wing_deg` and `wing_deg + 180` in-plane degrees.
    """
    return BuildingSpec(
        stories=(
            StorySpec(
                2.7,
                (
                    RoomSpec("main", (0.0, 0.0, 8.0, 5.0)),
                    RoomSpec(
                        "wing",
                        (8.6, 0.5, 12.6, 4.5),
                        wing_deg=wing_deg,
                        omit_walls=("z0", "z1"),
                    ),
                ),
            ),
        ),
        seed=seed,
    )
