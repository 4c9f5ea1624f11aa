"""Pipeline configuration: every tunable in one flat record.

Defaults follow the working values the method was tuned with: 2-inch
histogram buckets, the [50, 40, 30, 20, 10, 5, 3] degree trim schedule,
an 8 ft x 8 in x 1.5 ft DBSCAN block, 0.5 stroke opacity, and 100
slices. Config files are flat ``key = value`` text; CLI flags override.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    # ingestion
    unit_scale: float = 1.0
    # orientation
    orient_method: str = "kmeans"     # "kmeans" or "bbox"
    schedule: tuple = (50.0, 40.0, 30.0, 20.0, 10.0, 5.0, 3.0)
    floor_prefilter_deg: float = 30.0
    wall_k: int = 4
    drop_vertical_deg: float = 30.0
    seed: int = 42
    # levels
    bucket_size: float = 0.0508       # 2 in
    levels_filter_deg: float = 15.0
    min_gap: float = 1.8
    min_room_height: float = 2.0
    margin: float = 0.10
    peak_fraction: float = 0.25
    absolute_min_area: float = 0.5
    # wall extraction
    direction_mode: str = "principal4"  # or "kmeans"
    direction_k: int = 4
    cone_angle_deg: float = 30.0
    block_length: float = 0.4572      # 1.5 ft
    block_width: float = 0.2032       # 8 in
    block_height: float = 2.4384      # 8 ft
    min_neighbors: int = 8
    min_wall_area: float = 1.0
    reach_tol: float = 0.5
    plane_fit_mode: str = "median"
    # floor plan
    style: str = "pen_and_ink"
    slice_count: int = 100
    opacity: float = 0.5
    scale: float = 50.0               # px per meter
    stroke_width: float = 0.5

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def summary(self):
        """One-line key=value rendering, stable order, for artifact stamps."""
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            parts.append(f"{f.name}={v}")
        return " ".join(parts)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _parse_value(name, raw):
    raw = raw.strip()
    if name == "schedule":
        try:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        except ValueError as exc:
            raise ConfigError(f"bad schedule {raw!r}") from exc
    default = getattr(PipelineConfig(), name)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects an integer, got {raw!r}") from exc
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects a number, got {raw!r}") from exc
    return raw


def load_config(path=None, overrides=None) -> PipelineConfig:
    """Config from an optional ``key = value`` file plus override pairs."""
    config = PipelineConfig()
    updates = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            updates[key] = _parse_value(key, value)
    for key, value in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        updates[key] = _parse_value(key, str(value)) if isinstance(value, str) else value
    config = replace(config, **updates)
    _validate(config)
    return config


def _validate(config: PipelineConfig):
    if config.orient_method not in ("kmeans", "bbox"):
        raise ConfigError(f"orient_method must be kmeans or bbox, got {config.orient_method!r}")
    if config.direction_mode not in ("principal4", "kmeans"):
        raise ConfigError("direction_mode must be principal4 or kmeans")
    if config.style not in ("pen_and_ink", "drafting"):
        raise ConfigError("style must be pen_and_ink or drafting")
    if not 0.0 <= config.opacity <= 1.0:
        raise ConfigError("opacity must be within [0, 1]")
    if config.slice_count < 1:
        raise ConfigError("slice_count must be at least 1")
    if config.wall_k not in (4, 6):
        raise ConfigError("wall_k must be 4 or 6")
