"""Occupancy-grid world with disc-shaped semantic objects.

The grid is a row-major uint8 array indexed ``grid[iy, ix]`` with 0 = free and
1 = obstacle.  Cell (ix, iy) covers the square
``[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res)`` in world meters.  Semantic
objects are discs layered on top of the grid; they block both motion and rays.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import SchemaViolation

FREE = 0
OBSTACLE = 1

WORLD_FORMAT = "dynav-world/1"


@dataclass(frozen=True)
class SemanticObject:
    """A named disc with a category, free-form attributes, and tags.

    Tags mark non-category semantics (for example ``hazard``); attributes
    describe appearance and are what instance-style goals match on.
    """

    name: str
    category: str
    center: Tuple[float, float]
    radius: float
    attributes: Tuple[str, ...] = ()
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.name:
            raise ValueError("object name must be non-empty")
        if self.radius <= 0:
            raise ValueError("object radius must be positive")
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "tags", frozenset(self.tags))

    def boundary_distance(self, x: float, y: float) -> float:
        """Signed distance from a point to the disc boundary (negative inside)."""
        return math.hypot(x - self.center[0], y - self.center[1]) - self.radius

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "category": self.category,
            "center": [self.center[0], self.center[1]],
            "radius": self.radius,
            "attributes": sorted(self.attributes),
            "tags": sorted(self.tags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticObject":
        try:
            return cls(
                name=d["name"],
                category=d["category"],
                center=(float(d["center"][0]), float(d["center"][1])),
                radius=float(d["radius"]),
                attributes=tuple(d.get("attributes", ())),
                tags=frozenset(d.get("tags", ())),
            )
        except (KeyError, TypeError, IndexError) as e:
            raise SchemaViolation(f"bad object record: {e}") from e


class WorldMap:
    """Immutable world: occupancy grid, resolution, and semantic objects."""

    def __init__(self, grid: np.ndarray, resolution: float, objects: Sequence[SemanticObject] = ()):
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        grid = np.ascontiguousarray(grid, dtype=np.uint8)
        if grid.ndim != 2 or grid.size == 0:
            raise ValueError("grid must be a non-empty 2D array")
        if not np.any(grid == FREE):
            raise ValueError("world must contain at least one free cell")
        names = [o.name for o in objects]
        if len(names) != len(set(names)):
            raise ValueError("object names must be unique")
        self.resolution = float(resolution)
        self.grid = grid
        self.grid.setflags(write=False)
        self.objects: Tuple[SemanticObject, ...] = tuple(objects)
        for o in self.objects:
            x, y = o.center
            if not (0.0 <= x <= self.width_m and 0.0 <= y <= self.height_m):
                raise ValueError(f"object {o.name} center lies outside the world")
        self._obstacle_tree: Optional[cKDTree] = None
        self._obstacle_cells: Optional[np.ndarray] = None
        self._occupancy = None
        self._free_cache: dict = {}
        if self.objects:
            self._obj_centers = np.array([o.center for o in self.objects], dtype=float)
            self._obj_radii = np.array([o.radius for o in self.objects], dtype=float)
        else:
            self._obj_centers = np.zeros((0, 2))
            self._obj_radii = np.zeros(0)

    # -- geometry helpers ---------------------------------------------------

    @property
    def height_cells(self) -> int:
        return self.grid.shape[0]

    @property
    def width_cells(self) -> int:
        return self.grid.shape[1]

    @property
    def width_m(self) -> float:
        return self.width_cells * self.resolution

    @property
    def height_m(self) -> float:
        return self.height_cells * self.resolution

    def in_bounds(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width_m and 0.0 <= y < self.height_m

    def cell_of(self, x: float, y: float) -> Tuple[int, int]:
        return int(x / self.resolution), int(y / self.resolution)

    def cell_center(self, ix: int, iy: int) -> Tuple[float, float]:
        return (ix + 0.5) * self.resolution, (iy + 0.5) * self.resolution

    def is_obstacle_cell(self, ix: int, iy: int) -> bool:
        if ix < 0 or iy < 0 or ix >= self.width_cells or iy >= self.height_cells:
            return True
        return self.grid[iy, ix] == OBSTACLE

    def _ensure_obstacle_index(self):
        if self._obstacle_cells is None:
            iys, ixs = np.nonzero(self.grid == OBSTACLE)
            self._obstacle_cells = np.stack([ixs, iys], axis=1) if len(ixs) else np.zeros((0, 2), dtype=int)
            if len(self._obstacle_cells):
                centers = (self._obstacle_cells + 0.5) * self.resolution
                self._obstacle_tree = cKDTree(centers)

    def _cell_rect_distance(self, x: float, y: float, ix: int, iy: int) -> float:
        res = self.resolution
        dx = max(ix * res - x, 0.0, x - (ix + 1) * res)
        dy = max(iy * res - y, 0.0, y - (iy + 1) * res)
        return math.hypot(dx, dy)

    def clearance(self, x: float, y: float) -> float:
        """Exact distance from a point to the nearest blocking surface.

        Obstacle cells are axis-aligned squares, objects are discs, and the
        map border counts as a wall (the world ends there).
        """
        return self.clearance_with_nearest(x, y)[0]

    def clearance_with_nearest(self, x: float, y: float) -> Tuple[float, Tuple[float, float]]:
        """Clearance plus the closest point on the nearest blocking surface."""
        best = min(x, y, self.width_m - x, self.height_m - y)
        # border: closest point is the orthogonal projection onto that wall
        if best == x:
            nearest = (0.0, y)
        elif best == y:
            nearest = (x, 0.0)
        elif best == self.width_m - x:
            nearest = (self.width_m, y)
        else:
            nearest = (x, self.height_m)

        self._ensure_obstacle_index()
        if self._obstacle_tree is not None:
            d_center, idx = self._obstacle_tree.query([x, y])
            # exact rect distance can undercut the center distance by at most
            # half a cell diagonal, so re-check every cell in that band
            ball = self._obstacle_tree.query_ball_point([x, y], d_center + self.resolution * 0.7072)
            for j in ball:
                ix, iy = self._obstacle_cells[j]
                d = self._cell_rect_distance(x, y, int(ix), int(iy))
                if d < best:
                    best = d
                    res = self.resolution
                    nearest = (
                        min(max(x, ix * res), (ix + 1) * res),
                        min(max(y, iy * res), (iy + 1) * res),
                    )

        if len(self._obj_centers):
            dd = np.hypot(self._obj_centers[:, 0] - x, self._obj_centers[:, 1] - y) - self._obj_radii
            k = int(np.argmin(dd))
            if dd[k] < best:
                best = float(dd[k])
                cx, cy = self._obj_centers[k]
                norm = math.hypot(x - cx, y - cy)
                if norm > 1e-12:
                    r = self._obj_radii[k]
                    nearest = (cx + (x - cx) / norm * r, cy + (y - cy) / norm * r)
                else:
                    nearest = (cx + self._obj_radii[k], cy)
        return best, nearest

    def occupancy_with_objects(self) -> np.ndarray:
        """Boolean grid: cell blocked by an obstacle cell or an object disc.

        A cell counts as object-blocked when its center lies inside the disc.
        """
        if self._occupancy is None:
            occ = self.grid == OBSTACLE
            if len(self._obj_centers):
                ys, xs = np.mgrid[0: self.height_cells, 0: self.width_cells]
                cx = (xs + 0.5) * self.resolution
                cy = (ys + 0.5) * self.resolution
                for (ox, oy), r in zip(self._obj_centers, self._obj_radii):
                    occ = occ | (np.hypot(cx - ox, cy - oy) <= r)
            self._occupancy = occ
            self._occupancy.setflags(write=False)
        return self._occupancy

    def free_with_clearance(self, radius: float) -> np.ndarray:
        """Cells whose center keeps the given radius clear of any occupancy."""
        key = round(radius, 9)
        if key not in self._free_cache:
            occ = self.occupancy_with_objects()
            dist = ndimage.distance_transform_edt(~occ, sampling=self.resolution)
            mask = dist > radius
            mask.setflags(write=False)
            self._free_cache[key] = mask
        return self._free_cache[key]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        rows = []
        for iy in range(self.height_cells):
            row = self.grid[iy]
            runs = []
            start = 0
            for i in range(1, len(row) + 1):
                if i == len(row) or row[i] != row[start]:
                    runs.append([i - start, int(row[start])])
                    start = i
            rows.append(runs)
        return {
            "format": WORLD_FORMAT,
            "resolution": self.resolution,
            "width": self.width_cells,
            "height": self.height_cells,
            "grid": rows,
            "objects": [o.to_dict() for o in self.objects],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldMap":
        try:
            if d.get("format") != WORLD_FORMAT:
                raise SchemaViolation(f"unknown world format: {d.get('format')!r}")
            width = int(d["width"])
            height = int(d["height"])
            rows = d["grid"]
            if len(rows) != height:
                raise SchemaViolation("grid row count does not match height")
            grid = np.zeros((height, width), dtype=np.uint8)
            for iy, runs in enumerate(rows):
                ix = 0
                for count, value in runs:
                    if value not in (FREE, OBSTACLE) or count <= 0:
                        raise SchemaViolation(f"bad run {count}x{value} in row {iy}")
                    grid[iy, ix: ix + count] = value
                    ix += count
                if ix != width:
                    raise SchemaViolation(f"row {iy} encodes {ix} cells, expected {width}")
            objects = [SemanticObject.from_dict(o) for o in d.get("objects", [])]
            return cls(grid, float(d["resolution"]), objects)
        except SchemaViolation:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaViolation(f"bad world payload: {e}") from e

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "WorldMap":
        with open(path) as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as e:
                raise SchemaViolation(f"world file is not valid JSON: {e}") from e
        return cls.from_dict(payload)


def empty_world(width_m: float, height_m: float, resolution: float = 0.1,
                objects: Iterable[SemanticObject] = (), walled: bool = True) -> WorldMap:
    """Convenience constructor: open floor, optionally with a one-cell wall ring."""
    w = int(round(width_m / resolution))
    h = int(round(height_m / resolution))
    grid = np.zeros((h, w), dtype=np.uint8)
    if walled:
        grid[0, :] = OBSTACLE
        grid[-1, :] = OBSTACLE
        grid[:, 0] = OBSTACLE
        grid[:, -1] = OBSTACLE
    return WorldMap(grid, resolution, tuple(objects))
