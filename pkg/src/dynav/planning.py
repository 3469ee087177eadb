"""Grid shortest paths for evaluation ground truth.

Paths run on the occupancy grid (objects stamped in) inflated by the agent
radius, 8-connected with sqrt(2)-weighted diagonals, and diagonal moves may
not cut corners past a blocked orthogonal neighbor.  The goal region is every
free cell within the success threshold of a matching object's boundary.
"""
from __future__ import annotations

import heapq
import math
from typing import List, Set, Tuple

import numpy as np

from .errors import Unreachable, UnresolvableGoal
from .geometry import AgentBody, Pose
from .goals import GoalSpec
from .world import WorldMap

SQRT2 = math.sqrt(2.0)


def goal_cells(world: WorldMap, goal: GoalSpec, threshold: float,
               body: AgentBody = AgentBody()) -> np.ndarray:
    """Boolean mask of inflated-free cells within the goal region.

    The effective threshold never drops below agent radius plus one cell:
    anything tighter admits no pose the body could legally occupy.
    """
    matching = [o for o in world.objects if goal.matches(o)]
    if not matching:
        raise UnresolvableGoal(f"no object matches goal {goal.text!r}")
    free = world.free_with_clearance(body.radius)
    eff = max(threshold, body.radius + world.resolution)
    ys, xs = np.mgrid[0: world.height_cells, 0: world.width_cells]
    cx = (xs + 0.5) * world.resolution
    cy = (ys + 0.5) * world.resolution
    near = np.full(free.shape, np.inf)
    for o in matching:
        near = np.minimum(near, np.hypot(cx - o.center[0], cy - o.center[1]) - o.radius)
    return free & (near <= eff)


def shortest_path(world: WorldMap, start: Pose, goal: GoalSpec, threshold: float,
                  body: AgentBody = AgentBody()) -> float:
    """Metric length of the shortest grid path from start into the goal region."""
    goals = goal_cells(world, goal, threshold, body)
    if not goals.any():
        raise Unreachable(f"goal region for {goal.text!r} is empty after inflation")
    free = np.array(world.free_with_clearance(body.radius))
    six, siy = world.cell_of(start.x, start.y)
    if not (0 <= six < world.width_cells and 0 <= siy < world.height_cells):
        raise Unreachable("start pose lies outside the world")
    free[siy, six] = True  # the agent demonstrably occupies its own cell

    res = world.resolution
    h, w = free.shape
    dist = np.full((h, w), np.inf)
    dist[siy, six] = 0.0
    pq: List[Tuple[float, int, int]] = [(0.0, six, siy)]
    goal_set = goals
    while pq:
        d, x, y = heapq.heappop(pq)
        if d > dist[y, x]:
            continue
        if goal_set[y, x]:
            return d * res
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nx, ny = x + dx, y + dy
                if nx < 0 or ny < 0 or nx >= w or ny >= h or not free[ny, nx]:
                    continue
                if dx != 0 and dy != 0:
                    # no corner cutting: both orthogonal neighbors must be free
                    if not (free[y, nx] and free[ny, x]):
                        continue
                    nd = d + SQRT2
                else:
                    nd = d + 1.0
                if nd < dist[ny, nx]:
                    dist[ny, nx] = nd
                    heapq.heappush(pq, (nd, nx, ny))
    raise Unreachable(f"no collision-free path reaches {goal.text!r}")
