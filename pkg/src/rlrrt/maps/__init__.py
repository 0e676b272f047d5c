"""Bundled map fixtures (ASCII grid format)."""

from pathlib import Path

from ..world import OccupancyGrid, load_map

MAP_DIR = Path(__file__).parent
NAMES = ("training", "cluttered", "corridor")


def map_path(name: str) -> Path:
    path = MAP_DIR / f"{name}.map"
    if not path.exists():
        raise FileNotFoundError(f"no bundled map named {name!r}")
    return path


def load_builtin(name: str) -> OccupancyGrid:
    return load_map(map_path(name))


def map_file(spec) -> Path:
    """Path of a bundled map name, or ``spec`` itself as a path."""
    return MAP_DIR / f"{spec}.map" if str(spec) in NAMES else Path(spec)


def resolve_map(spec) -> OccupancyGrid:
    """Load a bundled map by name, or any map file by path."""
    if str(spec) in NAMES:
        return load_builtin(str(spec))
    return load_map(spec)
