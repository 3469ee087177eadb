"""Depth-and-label raycast sensor over the occupancy world.

``sense`` casts ``n_rays`` rays uniformly across the field of view and returns,
per ray, the exact distance to the first blocking surface (obstacle cell or
object disc) capped at the sensing range, together with the semantic identity
of whatever was hit.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .errors import PoseOutOfBounds
from .geometry import AgentBody, Pose, normalize_angle
from .world import OBSTACLE, WorldMap

DEFAULT_FOV = math.radians(131.0)

_TIE = 1e-12


@dataclass(frozen=True)
class Hit:
    """What a ray struck: a wall cell or a semantic object."""

    kind: str  # "wall" or "object"
    name: str = ""
    category: str = ""
    attributes: Tuple[str, ...] = ()
    tags: frozenset = frozenset()

    @property
    def label(self) -> str:
        return "wall" if self.kind == "wall" else self.name


WALL_HIT = Hit(kind="wall")


@dataclass(frozen=True)
class Ray:
    theta: float          # relative to agent heading, radians
    depth: float          # meters, capped at the sensing range
    hit: Optional[Hit]    # None when nothing lies within range


@dataclass(frozen=True)
class Observation:
    pose: Pose
    rays: Tuple[Ray, ...]
    fov: float
    step: int = 0

    @property
    def n_rays(self) -> int:
        return len(self.rays)

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_dict(),
            "fov_deg": math.degrees(self.fov),
            "step": self.step,
            "rays": [
                {
                    "theta_deg": math.degrees(r.theta),
                    "depth": r.depth,
                    "label": r.hit.label if r.hit else None,
                }
                for r in self.rays
            ],
        }


def _grid_raycast(world: WorldMap, x0: float, y0: float, dx: float, dy: float, t_max: float) -> float:
    """Distance along the ray to the first obstacle cell, or inf.

    Exact voxel traversal; ties where the ray crosses a cell corner step both
    axes at once so zero-length grazes are not reported as hits.
    """
    res = world.resolution
    grid = world.grid
    w, h = world.width_cells, world.height_cells
    ix = int(x0 / res)
    iy = int(y0 / res)
    if ix < 0 or iy < 0 or ix >= w or iy >= h:
        return math.inf

    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    if dx != 0.0:
        nx = (ix + (1 if dx > 0 else 0)) * res
        t_next_x = (nx - x0) / dx
        dt_x = res / abs(dx)
    else:
        t_next_x = math.inf
        dt_x = math.inf
    if dy != 0.0:
        ny = (iy + (1 if dy > 0 else 0)) * res
        t_next_y = (ny - y0) / dy
        dt_y = res / abs(dy)
    else:
        t_next_y = math.inf
        dt_y = math.inf

    if grid[iy, ix] == OBSTACLE:
        return 0.0
    while True:
        if t_next_x < t_next_y - _TIE:
            t_enter = t_next_x
            t_next_x += dt_x
            ix += step_x
        elif t_next_y < t_next_x - _TIE:
            t_enter = t_next_y
            t_next_y += dt_y
            iy += step_y
        else:  # corner crossing: skip the zero-chord diagonal neighbors
            t_enter = t_next_x
            t_next_x += dt_x
            t_next_y += dt_y
            ix += step_x
            iy += step_y
        if t_enter > t_max:
            return math.inf
        if ix < 0 or iy < 0 or ix >= w or iy >= h:
            return math.inf
        if grid[iy, ix] == OBSTACLE:
            return t_enter


def _object_raycast(world: WorldMap, x0: float, y0: float, dx: float, dy: float,
                    t_max: float) -> Tuple[float, Optional[int]]:
    """Nearest positive ray-disc intersection among all objects."""
    best_t = math.inf
    best_i: Optional[int] = None
    for i, obj in enumerate(world.objects):
        ocx = obj.center[0] - x0
        ocy = obj.center[1] - y0
        b = ocx * dx + ocy * dy
        disc = b * b - (ocx * ocx + ocy * ocy - obj.radius * obj.radius)
        if disc <= _TIE:
            continue
        root = math.sqrt(disc)
        t = b - root
        if t <= 1e-9:
            continue  # behind the sensor, or the sensor sits inside the disc
        if t <= t_max and t < best_t:
            best_t = t
            best_i = i
    return best_t, best_i


def sense(world: WorldMap, pose: Pose, body: AgentBody, n_rays: int,
          fov: float = DEFAULT_FOV, step: int = 0) -> Observation:
    """Cast a fan of rays from the pose and report depth plus semantic hits.

    Ray angles are strictly increasing and span exactly [-fov/2, +fov/2].
    Depth is the distance to the first obstacle cell or object disc along the
    ray, capped at the body's sensing range; occlusion follows depth order.
    """
    if n_rays < 2:
        raise ValueError("at least two rays are required")
    if not world.in_bounds(pose.x, pose.y):
        raise PoseOutOfBounds(f"pose ({pose.x:.2f}, {pose.y:.2f}) is outside the world")
    d_max = body.max_sense
    rays: List[Ray] = []
    half = fov / 2.0
    for i in range(n_rays):
        theta = -half + fov * i / (n_rays - 1)
        ang = pose.heading + theta
        dx = math.cos(ang)
        dy = math.sin(ang)
        t_wall = _grid_raycast(world, pose.x, pose.y, dx, dy, d_max)
        t_obj, obj_i = _object_raycast(world, pose.x, pose.y, dx, dy, d_max)
        if obj_i is not None and t_obj <= t_wall:
            obj = world.objects[obj_i]
            hit = Hit(kind="object", name=obj.name, category=obj.category,
                      attributes=obj.attributes, tags=obj.tags)
            rays.append(Ray(normalize_angle(theta), t_obj, hit))
        elif t_wall <= d_max:
            rays.append(Ray(normalize_angle(theta), t_wall, WALL_HIT))
        else:
            rays.append(Ray(normalize_angle(theta), d_max, None))
    return Observation(pose=pose, rays=tuple(rays), fov=fov, step=step)


def traversability_mask(obs: Observation, epsilon: float = 0.0,
                        rng: Optional[random.Random] = None) -> List[bool]:
    """Per-ray ground-truth traversability, optionally corrupted.

    In the simulator every sensed direction is traversable floor up to its
    reported depth, so the ground truth mask is all True.  With probability
    ``epsilon`` a ray is flipped to False to emulate segmentation misses.
    """
    mask = [True] * obs.n_rays
    if epsilon > 0.0:
        if rng is None:
            rng = random.Random(0)
        mask = [rng.random() >= epsilon for _ in range(obs.n_rays)]
    return mask
