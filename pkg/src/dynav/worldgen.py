"""Procedural room-and-corridor world generation, deterministic per seed."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .errors import GenerationFailed, SchemaViolation
from .geometry import AgentBody, Pose
from .world import FREE, OBSTACLE, SemanticObject, WorldMap

# attribute palette keyed by nothing in particular; category-independent
_PALETTE = (
    "white", "black", "red", "blue", "green", "gray", "brown",
    "wooden", "metal", "plastic", "leather", "striped", "tall", "small",
)


@dataclass(frozen=True)
class WorldGenSpec:
    width_m: float = 16.0
    height_m: float = 12.0
    resolution: float = 0.1
    rooms: int = 3
    categories: Tuple[str, ...] = ("chair", "table")
    objects_per_category: int = 1
    category_counts: Optional[Tuple[int, ...]] = None  # per-category override
    hazards: Tuple[str, ...] = ()
    corridor_width_m: float = 1.4
    room_min_m: float = 3.0
    room_max_m: float = 6.0
    object_radius_m: Tuple[float, float] = (0.25, 0.35)
    agent_radius_m: float = 0.17
    goal_threshold_m: float = 0.3
    max_attempts: int = 30

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "hazards", tuple(self.hazards))
        if self.category_counts is not None:
            object.__setattr__(self, "category_counts", tuple(self.category_counts))
            if len(self.category_counts) != len(self.categories):
                raise ValueError("category_counts must align with categories")
        if self.width_m <= 2 or self.height_m <= 2 or self.resolution <= 0:
            raise ValueError("world dimensions must be positive and non-trivial")

    @classmethod
    def from_dict(cls, d: dict) -> "WorldGenSpec":
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        unknown = set(d) - known - {"seed"}
        if unknown:
            raise SchemaViolation(f"unknown worldgen keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in d.items() if k in known}
        for key in ("categories", "hazards", "category_counts"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        if "object_radius_m" in kwargs:
            kwargs["object_radius_m"] = tuple(kwargs["object_radius_m"])
        return cls(**kwargs)


def _carve_rect(grid: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    h, w = grid.shape
    grid[max(1, y0): min(h - 1, y1), max(1, x0): min(w - 1, x1)] = FREE


def _main_component(free: np.ndarray) -> np.ndarray:
    labels, n = ndimage.label(free)  # 4-connected by default
    if n == 0:
        return np.zeros_like(free, dtype=bool)
    sizes = ndimage.sum(free, labels, index=range(1, n + 1))
    main = int(np.argmax(sizes)) + 1
    return labels == main


def _try_generate(spec: WorldGenSpec, rng: random.Random) -> Optional[WorldMap]:
    res = spec.resolution
    w = int(round(spec.width_m / res))
    h = int(round(spec.height_m / res))
    grid = np.full((h, w), OBSTACLE, dtype=np.uint8)

    if spec.rooms < 1 or not spec.categories:
        raise GenerationFailed("need at least one room and one object category")

    # carve rooms, then L-shaped corridors between consecutive room centers
    centers: List[Tuple[int, int]] = []
    for _ in range(spec.rooms):
        rw = int(rng.uniform(spec.room_min_m, spec.room_max_m) / res)
        rh = int(rng.uniform(spec.room_min_m, spec.room_max_m) / res)
        rw = min(rw, w - 4)
        rh = min(rh, h - 4)
        x0 = rng.randint(2, max(2, w - rw - 2))
        y0 = rng.randint(2, max(2, h - rh - 2))
        _carve_rect(grid, x0, y0, x0 + rw, y0 + rh)
        centers.append((x0 + rw // 2, y0 + rh // 2))
    half = max(1, int(spec.corridor_width_m / res / 2))
    for (ax, ay), (bx, by) in zip(centers, centers[1:]):
        _carve_rect(grid, min(ax, bx) - half, ay - half, max(ax, bx) + half, ay + half)
        _carve_rect(grid, bx - half, min(ay, by) - half, bx + half, max(ay, by) + half)

    # place objects on free floor with enough standoff from walls
    objects: List[SemanticObject] = []
    probe = WorldMap(grid, res)
    counts = spec.category_counts or tuple(spec.objects_per_category for _ in spec.categories)
    wanted = [(cat, ()) for cat, n in zip(spec.categories, counts) for _ in range(n)]
    wanted += [(cat, ("hazard",)) for cat in spec.hazards]
    counters: dict = {}
    free_cells = np.argwhere(grid == FREE)
    if not len(free_cells):
        return None
    for category, tags in wanted:
        radius = rng.uniform(*spec.object_radius_m)
        placed = False
        for _ in range(200):
            iy, ix = free_cells[rng.randrange(len(free_cells))]
            x = (ix + 0.5) * res
            y = (iy + 0.5) * res
            standoff = radius + 2.0 * spec.agent_radius_m + spec.goal_threshold_m
            if probe.clearance(x, y) < standoff:
                continue
            if any(math.hypot(x - o.center[0], y - o.center[1]) < radius + o.radius + 4 * spec.agent_radius_m
                   for o in objects):
                continue
            counters[category] = counters.get(category, 0) + 1
            attrs = tuple(rng.sample(_PALETTE, 2))
            objects.append(SemanticObject(
                name=f"{category}_{counters[category]}",
                category=category,
                center=(x, y),
                radius=radius,
                attributes=attrs,
                tags=frozenset(tags),
            ))
            placed = True
            break
        if not placed:
            return None

    world = WorldMap(grid, res, objects)
    # reject layouts whose walkable space (inflated by the agent) is split, or
    # where some object's goal band is not reachable from the main component
    free = world.free_with_clearance(spec.agent_radius_m)
    main = _main_component(free)
    if main.sum() < 10:
        return None
    labels_all, n_all = ndimage.label(free)
    if n_all > 1:
        sizes = ndimage.sum(free, labels_all, index=range(1, n_all + 1))
        if sorted(sizes)[-2] > 25:  # a second sizable pocket means split space
            return None
    ys, xs = np.nonzero(main)
    cx = (xs + 0.5) * res
    cy = (ys + 0.5) * res
    for o in objects:
        d = np.hypot(cx - o.center[0], cy - o.center[1]) - o.radius
        if not np.any(d <= spec.goal_threshold_m):
            return None
    return world


def generate_world(spec: WorldGenSpec, seed: int) -> WorldMap:
    """Generate a connected world; identical seeds give identical worlds."""
    rng = random.Random(seed)
    for _ in range(spec.max_attempts):
        world = _try_generate(spec, rng)
        if world is not None:
            return world
    raise GenerationFailed(
        f"could not satisfy worldgen spec after {spec.max_attempts} attempts (seed {seed})")


def random_free_pose(world: WorldMap, rng: random.Random,
                     body: AgentBody = AgentBody(), margin: float = 0.05) -> Pose:
    """A pose in the largest walkable component with body clearance plus margin."""
    free = world.free_with_clearance(body.radius + margin)
    main = _main_component(free)
    cells = np.argwhere(main)
    if not len(cells):
        raise GenerationFailed("world has no free pose with the requested clearance")
    iy, ix = cells[rng.randrange(len(cells))]
    x, y = world.cell_center(int(ix), int(iy))
    return Pose(x, y, rng.uniform(-math.pi, math.pi))
