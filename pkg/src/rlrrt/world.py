"""Occupancy-grid worlds: map I/O, disc collision queries, ray casting and lidar."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numba import njit
from scipy import ndimage


class MapFormatError(ValueError):
    """Raised when a map file cannot be parsed."""


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Rasterized world.

    ``cells[j, i]`` is the cell spanning ``[i*res, (i+1)*res) x [j*res, (j+1)*res)``;
    row 0 is the bottom of the map (smallest y).
    """

    width_cells: int
    height_cells: int
    resolution: float
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width_cells < 1 or self.height_cells < 1:
            raise ValueError("grid dimensions must be positive")
        if not self.resolution > 0:
            raise ValueError("resolution must be > 0")
        cells = np.ascontiguousarray(self.cells, dtype=bool)
        if cells.shape != (self.height_cells, self.width_cells):
            raise ValueError(
                f"cells shape {cells.shape} != ({self.height_cells}, {self.width_cells})"
            )
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def empty(cls, width_m: float, height_m: float, resolution: float = 0.1) -> "OccupancyGrid":
        w = int(round(width_m / resolution))
        h = int(round(height_m / resolution))
        return cls(w, h, resolution, np.zeros((h, w), dtype=bool))

    @property
    def extent(self) -> tuple[float, float]:
        return self.width_cells * self.resolution, self.height_cells * self.resolution

    @property
    def n_occupied(self) -> int:
        return int(self.cells.sum())

    def in_bounds(self, x: float, y: float) -> bool:
        w, h = self.extent
        return 0.0 <= x < w and 0.0 <= y < h

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(x / self.resolution)), int(math.floor(y / self.resolution))

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (i + 0.5) * self.resolution, (j + 0.5) * self.resolution

    @cached_property
    def _cells_u8(self) -> np.ndarray:
        return self.cells.astype(np.uint8)

    @cached_property
    def _center_clearance(self) -> np.ndarray:
        # distance (m) from every cell center to the nearest occupied cell center
        if not self.cells.any():
            return np.full(self.cells.shape, np.inf)
        return ndimage.distance_transform_edt(~self.cells, sampling=self.resolution)

    def to_ascii(self) -> str:
        lines = [
            f"width {self.width_cells}",
            f"height {self.height_cells}",
            f"resolution {self.resolution!r}",
        ]
        for row in self.cells[::-1]:
            lines.append("".join("#" if c else "." for c in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LidarConfig:
    n_beams: int = 64
    max_range: float = 8.0
    noise_sigma: float = 0.1
    field_of_view: float = 2.0 * math.pi

    def __post_init__(self):
        if self.n_beams < 1:
            raise ValueError("n_beams must be >= 1")
        if not self.max_range > 0:
            raise ValueError("max_range must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @cached_property
    def beam_offsets(self) -> np.ndarray:
        """Beam angles relative to the robot heading, counterclockwise.

        With a full circle, beam 0 points along the heading. A partial field of
        view is spread symmetrically about the heading.
        """
        n = self.n_beams
        if math.isclose(self.field_of_view, 2.0 * math.pi):
            return 2.0 * math.pi * np.arange(n) / n
        if n == 1:
            return np.zeros(1)
        return -0.5 * self.field_of_view + self.field_of_view * np.arange(n) / (n - 1)


@dataclass(frozen=True)
class GoalSpec:
    position: tuple[float, float]
    radius_dG: float = 0.5

    def __post_init__(self):
        if not self.radius_dG > 0:
            raise ValueError("radius_dG must be > 0")

    def reached(self, x: float, y: float) -> bool:
        return math.hypot(x - self.position[0], y - self.position[1]) < self.radius_dG


# ---------------------------------------------------------------- map I/O


def parse_ascii_map(text: str, source: str = "<string>") -> OccupancyGrid:
    lines = text.splitlines()
    header = {}
    for lineno, key in enumerate(("width", "height", "resolution"), start=1):
        if len(lines) < lineno:
            raise MapFormatError(f"{source}: line {lineno}: missing '{key}' header")
        parts = lines[lineno - 1].split()
        if len(parts) != 2 or parts[0] != key:
            raise MapFormatError(f"{source}: line {lineno}: expected '{key} <value>'")
        try:
            header[key] = float(parts[1]) if key == "resolution" else int(parts[1])
        except ValueError:
            raise MapFormatError(f"{source}: line {lineno}: bad {key} value {parts[1]!r}") from None
    w, h, res = header["width"], header["height"], header["resolution"]
    if w < 1 or h < 1 or not res > 0:
        raise MapFormatError(f"{source}: non-positive dimensions or resolution")
    rows = lines[3:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != h:
        raise MapFormatError(f"{source}: expected {h} rows, found {len(rows)}")
    cells = np.zeros((h, w), dtype=bool)
    for r, row in enumerate(rows):
        lineno = r + 4
        if len(row) != w:
            raise MapFormatError(f"{source}: line {lineno}: expected {w} columns, found {len(row)}")
        for c, ch in enumerate(row):
            if ch == "#":
                cells[h - 1 - r, c] = True
            elif ch != ".":
                raise MapFormatError(f"{source}: line {lineno}, column {c + 1}: unknown cell symbol {ch!r}")
    return OccupancyGrid(w, h, res, cells)


def _read_pgm(path: Path) -> OccupancyGrid:
    data = path.read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise MapFormatError(f"{path}: offset 0: not a binary PGM (P5)")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MapFormatError(f"{path}: bad PGM header") from None
    if maxval > 255:
        raise MapFormatError(f"{path}: 16-bit PGM not supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos) if len(data) - pos >= w * h else None
    if pixels is None:
        raise MapFormatError(f"{path}: offset {pos}: expected {w * h} pixel bytes, found {len(data) - pos}")
    meta = path.with_suffix(".meta")
    if not meta.exists():
        raise MapFormatError(f"{path}: missing sidecar {meta.name} with resolution")
    res = None
    for lineno, line in enumerate(meta.read_text().splitlines(), start=1):
        parts = line.split()
        if len(parts) == 2 and parts[0] == "resolution":
            try:
                res = float(parts[1])
            except ValueError:
                raise MapFormatError(f"{meta}: line {lineno}: bad resolution") from None
    if res is None or not res > 0:
        raise MapFormatError(f"{meta}: no valid 'resolution' entry")
    img = pixels.reshape(h, w)
    return OccupancyGrid(w, h, res, img[::-1] <= 127)


def load_map(path) -> OccupancyGrid:
    """Load an ASCII ``.map`` grid or a binary PGM with a ``.meta`` sidecar."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open("rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return _read_pgm(path)
    return parse_ascii_map(path.read_text(), source=str(path))


def save_map(grid: OccupancyGrid, path) -> None:
    Path(path).write_text(grid.to_ascii())


# ---------------------------------------------------------------- collision


def _disc_hits_cells(grid: OccupancyGrid, x: float, y: float, r: float) -> bool:
    res = grid.resolution
    i0 = max(int(math.floor((x - r) / res)), 0)
    i1 = min(int(math.floor((x + r) / res)), grid.width_cells - 1)
    j0 = max(int(math.floor((y - r) / res)), 0)
    j1 = min(int(math.floor((y + r) / res)), grid.height_cells - 1)
    block = grid.cells[j0:j1 + 1, i0:i1 + 1]
    if not block.any():
        return False
    jj, ii = np.nonzero(block)
    lo_x = (ii + i0) * res
    lo_y = (jj + j0) * res
    dx = np.maximum(np.maximum(lo_x - x, x - (lo_x + res)), 0.0)
    dy = np.maximum(np.maximum(lo_y - y, y - (lo_y + res)), 0.0)
    return bool(np.any(dx * dx + dy * dy <= r * r))


def point_free(grid: OccupancyGrid, p, robot_radius: float) -> bool:
    """True iff a disc of ``robot_radius`` at ``p`` lies inside the map and touches no occupied cell."""
    x, y = float(p[0]), float(p[1])
    w, h = grid.extent
    if x - robot_radius < 0.0 or y - robot_radius < 0.0 or x + robot_radius > w or y + robot_radius > h:
        return False
    if x >= w or y >= h:
        return False
    i, j = grid.cell_of(x, y)
    if grid.cells[j, i]:
        return False
    # a cell center further than r + one cell diagonal from every obstacle center is certainly free
    if grid._center_clearance[j, i] > robot_radius + grid.resolution * 1.4142136:
        return True
    return not _disc_hits_cells(grid, x, y, robot_radius)


# ---------------------------------------------------------------- ray casting


@njit(cache=True)
def _cast_rays(cells, res, ox, oy, angles, max_range, out):
    h, w = cells.shape
    for k in range(angles.shape[0]):
        dx = math.cos(angles[k])
        dy = math.sin(angles[k])
        ix = int(math.floor(ox / res))
        iy = int(math.floor(oy / res))
        if cells[iy, ix]:
            out[k] = 0.0
            continue
        if dx > 0.0:
            step_x = 1
            t_max_x = ((ix + 1) * res - ox) / dx
            t_dx = res / dx
        elif dx < 0.0:
            step_x = -1
            t_max_x = (ix * res - ox) / dx
            t_dx = -res / dx
        else:
            step_x = 0
            t_max_x = math.inf
            t_dx = math.inf
        if dy > 0.0:
            step_y = 1
            t_max_y = ((iy + 1) * res - oy) / dy
            t_dy = res / dy
        elif dy < 0.0:
            step_y = -1
            t_max_y = (iy * res - oy) / dy
            t_dy = -res / dy
        else:
            step_y = 0
            t_max_y = math.inf
            t_dy = math.inf
        hit = max_range
        while True:
            if t_max_x < t_max_y:
                t = t_max_x
                ix += step_x
                t_max_x += t_dx
            else:
                t = t_max_y
                iy += step_y
                t_max_y += t_dy
            if t >= max_range:
                break
            if ix < 0 or iy < 0 or ix >= w or iy >= h or cells[iy, ix]:
                hit = t
                break
        out[k] = hit


def raycast_many(grid: OccupancyGrid, origin, angles, max_range: float) -> np.ndarray:
    ox, oy = float(origin[0]), float(origin[1])
    if not grid.in_bounds(ox, oy):
        raise ValueError(f"ray origin ({ox}, {oy}) is outside the map")
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    out = np.empty(angles.shape[0])
    _cast_rays(grid._cells_u8, float(grid.resolution), ox, oy, angles, float(max_range), out)
    return out


def raycast(grid: OccupancyGrid, origin, angle: float, max_range: float) -> float:
    """Distance along ``angle`` to the first occupied (or off-map) cell, capped at ``max_range``."""
    return float(raycast_many(grid, origin, np.array([angle]), max_range)[0])


def lidar_scan(grid: OccupancyGrid, pose, cfg: LidarConfig, rng: np.random.Generator | None = None) -> np.ndarray:
    """Simulated noisy scan from ``pose = (x, y, theta)``; noise needs ``rng`` when sigma > 0."""
    x, y, theta = float(pose[0]), float(pose[1]), float(pose[2])
    ranges = raycast_many(grid, (x, y), theta + cfg.beam_offsets, cfg.max_range)
    if cfg.noise_sigma > 0:
        if rng is None:
            raise ValueError("a random generator is required for noisy scans")
        ranges += rng.normal(0.0, cfg.noise_sigma, ranges.shape[0])
        np.clip(ranges, 0.0, cfg.max_range, out=ranges)
    return ranges


# ---------------------------------------------------------------- sampling


def sample_free_position(grid: OccupancyGrid, radius: float, rng: np.random.Generator,
                         max_tries: int = 100_000) -> tuple[float, float]:
    if grid.cells.all():
        raise ValueError("map has no free cell")
    w, h = grid.extent
    for _ in range(max_tries):
        x = rng.uniform(0.0, w)
        y = rng.uniform(0.0, h)
        if point_free(grid, (x, y), radius):
            return x, y
    raise ValueError(f"no collision-free position found after {max_tries} samples")


def sample_free_state(grid: OccupancyGrid, robot_kind: str, rng: np.random.Generator,
                      goal: GoalSpec | None = None, p_goal_bias: float = 0.0):
    """Random collision-free state; returns the goal pose with probability ``p_goal_bias``."""
    from .dynamics import ROBOTS

    spec = ROBOTS[robot_kind]
    if grid.cells.all():
        raise ValueError("map has no free cell")
    if goal is not None and p_goal_bias > 0 and rng.random() < p_goal_bias:
        return spec.state_at(goal.position[0], goal.position[1], rng.uniform(-math.pi, math.pi))
    x, y = sample_free_position(grid, spec.radius, rng)
    return spec.random_state(x, y, rng)
