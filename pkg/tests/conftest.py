"""Shared fixtures: small deterministic worlds and a ready oracle backend."""
from __future__ import annotations

import math
import random

import numpy as np
import pytest

from dynav.config import RunConfig
from dynav.geometry import AgentBody, Pose
from dynav.world import FREE, OBSTACLE, SemanticObject, WorldMap, empty_world


@pytest.fixture
def body():
    return AgentBody()


@pytest.fixture
def box_world():
    """10 x 8 m empty walled room."""
    return empty_world(10.0, 8.0)


@pytest.fixture
def plant_world():
    """Walled room with a single 0.3 m plant 3 m east of the room center."""
    obj = SemanticObject(name="plant_1", category="plant", center=(8.0, 4.0),
                         radius=0.3, attributes=("green",))
    return empty_world(10.0, 8.0, objects=[obj])


@pytest.fixture
def cluttered_world():
    """Room with a wall stub and two labeled objects for sensing tests."""
    world = empty_world(12.0, 10.0)
    grid = world.grid.copy()
    grid[40:60, 60] = OBSTACLE  # vertical stub at x = 6.0..6.1, y = 4..6
    objects = [
        SemanticObject(name="chair_1", category="chair", center=(9.0, 5.0),
                       radius=0.3, attributes=("red", "wooden")),
        SemanticObject(name="table_1", category="table", center=(9.0, 5.6),
                       radius=0.25, attributes=("white",)),
    ]
    return WorldMap(grid, world.resolution, objects)


@pytest.fixture
def run_cfg():
    return RunConfig()


def random_grid_world(rng: random.Random, n: int = 64, fill: float = 0.25,
                      resolution: float = 0.1) -> WorldMap:
    """Random blocky occupancy grid with a walled border, no objects."""
    grid = np.zeros((n, n), dtype=np.uint8)
    grid[0, :] = grid[-1, :] = OBSTACLE
    grid[:, 0] = grid[:, -1] = OBSTACLE
    n_blocks = int(fill * n * n / 9)
    for _ in range(n_blocks):
        iy = rng.randrange(1, n - 3)
        ix = rng.randrange(1, n - 3)
        grid[iy:iy + rng.randint(1, 3), ix:ix + rng.randint(1, 3)] = OBSTACLE
    return WorldMap(grid, resolution)


def make_pose(x: float, y: float, heading_deg: float = 0.0) -> Pose:
    return Pose(x, y, math.radians(heading_deg))
