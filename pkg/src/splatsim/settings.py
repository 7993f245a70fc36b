"""Render settings shared by both backends, with JSON round-trip."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path

# Per-contribution opacity is capped below 1 so transmittance never reaches
# exactly zero during front-to-back blending.
ALPHA_MAX = 0.995


@dataclass
class RenderSettings:
    sigma_cut: float = 3.0          # proxy bound radius in standard deviations
    alpha_cull: float = 1.0 / 255.0  # contributions below this opacity are dropped
    t_term: float = 1e-4            # stop compositing once transmittance falls below
    tile_size: int = 16
    near: float = 0.05
    far: float = 1e4
    background_rgb: tuple = (0.0, 0.0, 0.0)
    threads: int = 0                # 0 = resolve from SPLATSIM_THREADS / cpu count

    def __post_init__(self):
        if self.sigma_cut <= 0:
            raise ValueError("sigma_cut must be positive")
        if not (0 < self.alpha_cull < 1):
            raise ValueError("alpha_cull must lie in (0, 1)")
        if self.tile_size < 1:
            raise ValueError("tile_size must be >= 1")
        if not (0 <= self.near < self.far):
            raise ValueError("need 0 <= near < far")
        self.background_rgb = tuple(float(c) for c in self.background_rgb)
        if len(self.background_rgb) != 3:
            raise ValueError("background_rgb must have 3 components")

    @classmethod
    def from_json(cls, path) -> "RenderSettings":
        with open(path) as f:
            data = json.load(f)
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2) + "\n")

    def resolved_threads(self) -> int:
        return resolve_threads(self.threads)


def resolve_threads(requested: int = 0) -> int:
    """Worker count: explicit value, else SPLATSIM_THREADS, else cpu count."""
    if requested and requested > 0:
        return int(requested)
    env = os.environ.get("SPLATSIM_THREADS", "")
    if env.strip():
        n = int(env)
        if n > 0:
            return n
    return os.cpu_count() or 1
