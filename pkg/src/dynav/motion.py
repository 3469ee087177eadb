"""Motion execution, reactive obstacle avoidance, and the success predicate."""
from __future__ import annotations

import math
from typing import Optional

from .errors import NoEscape, PoseOutOfBounds, UnresolvableGoal
from .geometry import AgentBody, MotionResult, PolarAction, Pose, normalize_angle
from .sensing import Observation
from .goals import GoalSpec
from .world import WorldMap

# advance below this is treated as contact with the blocking surface
_CONTACT = 1e-4
_EPS = 1e-9


def _max_travel(world: WorldMap, x0: float, y0: float, ux: float, uy: float,
                r: float, radius: float) -> float:
    """Farthest collision-free advance of a disc along a segment.

    Conservative distance marching: each step advances by the current
    clearance minus the body radius, which can never jump past a contact.
    """
    t = 0.0
    while t < r - _EPS:
        c = world.clearance(x0 + t * ux, y0 + t * uy) - radius
        if c <= _CONTACT:
            break
        t += min(c, r - t)
    return t


def execute(world: WorldMap, pose: Pose, body: AgentBody, action: PolarAction) -> MotionResult:
    """Rotate, then translate along the new heading, stopping short of contact.

    The swept disc of the body never intersects an obstacle cell, an object,
    or the map border; when the requested range cannot be realized the motion
    is truncated at the last collision-free point and flagged.
    """
    if action.stop:
        raise ValueError("stop actions are not executable motion")
    if not world.in_bounds(pose.x, pose.y):
        raise PoseOutOfBounds(f"pose ({pose.x:.2f}, {pose.y:.2f}) is outside the world")
    heading = normalize_angle(pose.heading + action.theta)
    if action.r == 0.0:
        return MotionResult(Pose(pose.x, pose.y, heading), 0.0, False)
    ux = math.cos(heading)
    uy = math.sin(heading)
    t = _max_travel(world, pose.x, pose.y, ux, uy, action.r, body.radius)
    new_pose = Pose(pose.x + t * ux, pose.y + t * uy, heading)
    return MotionResult(new_pose, t, t < action.r - _CONTACT)


def reactive_avoid(world: WorldMap, pose: Pose, body: AgentBody, clearance: float) -> Pose:
    """Nudge the pose directly away from the nearest obstacle.

    If anything blocks within ``clearance`` of the pose, the pose is displaced
    along the away direction until the clearance is restored, up to a cap of
    2x clearance.  When the cap is reached without restoration the best
    still-collision-free sample along the ray is returned; if even that fails
    the agent is boxed in and NoEscape is raised.
    """
    c0, nearest = world.clearance_with_nearest(pose.x, pose.y)
    if c0 >= clearance:
        return pose
    dx = pose.x - nearest[0]
    dy = pose.y - nearest[1]
    norm = math.hypot(dx, dy)
    if norm < 1e-12:
        dx, dy = 1.0, 0.0  # degenerate contact: pick an arbitrary fixed direction
    else:
        dx /= norm
        dy /= norm
    step = min(0.01, clearance / 10.0)
    best_pose: Optional[Pose] = None
    best_c = c0 if c0 >= body.radius else -math.inf
    if best_c > -math.inf:
        best_pose = pose
    t = step
    cap = 2.0 * clearance
    while t <= cap + _EPS:
        p = Pose(pose.x + dx * t, pose.y + dy * t, pose.heading)
        if world.in_bounds(p.x, p.y):
            c = world.clearance(p.x, p.y)
            if c >= clearance:
                return p
            if c > best_c and c >= body.radius:
                best_c = c
                best_pose = p
        t += step
    if best_pose is None:
        raise NoEscape("no collision-free displaced pose within 2x clearance")
    return best_pose


def success(world: WorldMap, pose: Pose, goal: GoalSpec, obs: Optional[Observation],
            threshold: float, visibility_required: bool = False) -> bool:
    """True when the pose sits within ``threshold`` of a matching object boundary.

    The check is inclusive at exactly the threshold.  With
    ``visibility_required`` some ray of the supplied observation must also hit
    a matching object.
    """
    matching = [o for o in world.objects if goal.matches(o)]
    if not matching:
        raise UnresolvableGoal(f"no object matches goal {goal.text!r}")
    d = min(o.boundary_distance(pose.x, pose.y) for o in matching)
    if d > threshold:
        return False
    if visibility_required:
        if obs is None:
            return False
        names = {o.name for o in matching}
        return any(r.hit is not None and r.hit.kind == "object" and r.hit.name in names
                   for r in obs.rays)
    return True
