"""Regenerate the bundled map files: ``python -m rlrrt.maps._generate``.

All layouts are axis-aligned rectangles given in meters.
"""

from pathlib import Path

import numpy as np

from ..world import OccupancyGrid, save_map

RES = 0.1
WALL = 0.2


class _Canvas:
    def __init__(self, width_m, height_m):
        self.w = int(round(width_m / RES))
        self.h = int(round(height_m / RES))
        self.cells = np.zeros((self.h, self.w), dtype=bool)
        self.box(0, 0, width_m, WALL)
        self.box(0, height_m - WALL, width_m, height_m)
        self.box(0, 0, WALL, height_m)
        self.box(width_m - WALL, 0, width_m, height_m)

    def box(self, x0, y0, x1, y1, value=True):
        i0, i1 = int(round(x0 / RES)), int(round(x1 / RES))
        j0, j1 = int(round(y0 / RES)), int(round(y1 / RES))
        self.cells[max(j0, 0):min(j1, self.h), max(i0, 0):min(i1, self.w)] = value

    def hwall(self, x0, x1, y, gaps=()):
        self.box(x0, y - WALL / 2, x1, y + WALL / 2)
        for g0, g1 in gaps:
            self.box(g0, y - WALL / 2, g1, y + WALL / 2, value=False)

    def vwall(self, x, y0, y1, gaps=()):
        self.box(x - WALL / 2, y0, x + WALL / 2, y1)
        for g0, g1 in gaps:
            self.box(x - WALL / 2, g0, x + WALL / 2, g1, value=False)

    def grid(self):
        return OccupancyGrid(self.w, self.h, RES, self.cells)


def training_map() -> OccupancyGrid:
    c = _Canvas(22.7, 18.0)
    c.vwall(7.5, 0.0, 18.0, gaps=[(3.0, 4.6), (12.0, 13.6)])
    c.hwall(7.5, 22.7, 9.0, gaps=[(11.0, 12.6), (18.5, 20.1)])
    c.vwall(15.0, 9.0, 18.0, gaps=[(13.0, 14.6)])
    # dead-end pocket in the bottom right
    c.hwall(15.5, 22.7, 4.5)
    c.vwall(15.5, 1.5, 4.5)
    for x, y, s in [(2.0, 2.0, 1.0), (4.5, 6.5, 1.2), (2.5, 11.0, 0.8), (5.0, 15.0, 1.0),
                    (10.0, 3.0, 1.5), (12.5, 6.0, 0.8), (10.5, 12.5, 1.0), (18.0, 14.0, 1.2),
                    (20.5, 11.0, 0.6), (12.0, 15.5, 0.7)]:
        c.box(x, y, x + s, y + s)
    return c.grid()


def cluttered_map() -> OccupancyGrid:
    """Office-like floor: rooms off a hallway plus an open area full of desks."""
    c = _Canvas(30.0, 24.0)
    c.hwall(0.0, 30.0, 16.0, gaps=[(3.0, 4.4), (10.5, 11.9), (18.0, 19.4), (25.5, 26.9)])
    for x in (7.5, 15.0, 22.5):
        c.vwall(x, 16.0, 24.0)
    c.hwall(0.0, 12.0, 12.5, gaps=[(5.0, 6.4)])
    c.vwall(12.0, 4.0, 12.5, gaps=[(8.0, 9.4)])
    rng = np.random.default_rng(7)
    placed = 0
    while placed < 26:
        x = rng.uniform(13.5, 28.0)
        y = rng.uniform(1.5, 14.0)
        w, h = rng.choice([0.6, 1.0, 1.6]), rng.choice([0.6, 1.0])
        c.box(x, y, x + w, y + h)
        placed += 1
    for x, y in [(2.0, 2.0), (5.0, 4.5), (8.0, 2.5), (2.5, 8.0), (8.5, 9.0), (4.0, 18.5), (11.0, 20.5),
                 (19.0, 21.5), (26.0, 19.0)]:
        c.box(x, y, x + 1.0, y + 1.0)
    return c.grid()


def corridor_map() -> OccupancyGrid:
    """Narrow corridors (1.6 m) linking open bays."""
    c = _Canvas(32.0, 20.0)
    c.box(0.2, 2.0, 8.0, 8.0)
    c.box(9.6, 2.0, 22.0, 8.0)
    c.box(23.6, 2.0, 31.8, 8.0)
    c.box(0.2, 9.6, 14.0, 14.4)
    c.box(15.6, 9.6, 31.8, 14.4)
    c.box(6.0, 16.0, 26.0, 19.8)
    for x, y, s in [(2.0, 16.4, 0.6), (28.5, 16.8, 0.6), (12.0, 0.6, 0.5), (26.0, 0.5, 0.6)]:
        c.box(x, y, x + s, y + s)
    return c.grid()


BUILDERS = {"training": training_map, "cluttered": cluttered_map, "corridor": corridor_map}


def main():
    here = Path(__file__).parent
    for name, build in BUILDERS.items():
        save_map(build(), here / f"{name}.map")
        print(f"wrote {name}.map")


if __name__ == "__main__":
    main()
