"""scanplan: floor plans and axis-aligned 3D models from indoor mesh scans.

The pipeline levels a noisy triangle-mesh scan, aligns its walls with the
coordinate axes, finds floor and ceiling altitudes, splits multi-story
buildings into stories, reduces walls to flat rectangles, and renders
pen-and-ink or drafting-style floor plans as SVG.
"""

from .config import PipelineConfig, load_config
from .errors import (
    ConfigError,
    GeometryError,
    MeshParseError,
    ScanplanError,
    StageError,
)
from .floorplan import (
    FloorPlan,
    SliceLayer,
    SlicePlan,
    load_room_polygons,
    make_slice_plan,
    measure_report,
    project_annotations,
    render_svg,
    slice_mesh,
)
from .levels import (
    AltitudeHistogram,
    LevelPartition,
    build_histogram,
    detect_floor_ceiling,
    partition_stories,
    remove_ceiling_floor,
)
from .mesh import (
    Annotation,
    AnnotationSet,
    BoundingBox,
    RigidTransform,
    TriangleAttributes,
    TriangleMesh,
    apply_transform,
    compute_attributes,
    compute_bounding_box,
)
from .meshio import load_annotations, load_mesh, save_annotations, save_obj
from .orientation import (
    OrientationReport,
    SphericalClusterResult,
    TrimSchedule,
    align_walls,
    orient_floor_bbox,
    orient_floor_kmeans,
    spherical_kmeans,
    trimmed_spherical_kmeans,
)
from .pipeline import run_pipeline
from .synth import BuildingSpec, RoomSpec, StorySpec, evaluate, generate
from .walls import (
    BlockParams,
    PlanarWall,
    WallDirectionSet,
    WallSegment,
    assemble_walls,
    assign_to_direction,
    block_dbscan,
    build_rectangle,
    extract_walls,
    filter_segments,
    fit_plane,
    wall_directions,
)

__version__ = "0.1.0"
