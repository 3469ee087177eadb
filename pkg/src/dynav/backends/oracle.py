"""Deterministic in-process decision backend.

Stands in for a remote vision-language endpoint during tests and benchmarks.
It operates purely on the wire request (never on simulator internals): goal
identity comes from parsing ``goal_text``, remembered object positions from
parsing ``memory_text``, and hazards from ray tags and constraint keywords.
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import SchemaViolation
from .protocol import (FILTER, MEMORY_EXTRACT, PROTOCOL_VERSION, SCORE, STOP_CHECK,
                       DecisionRequest, DecisionResponse, MemoryOp, WireRay)

_STOPWORDS = {
    "a", "an", "the", "of", "to", "from", "and", "or", "is", "are", "in", "on",
    "at", "with", "near", "next", "by", "stay", "away", "avoid", "keep", "do",
    "not", "don't", "object", "find", "go", "reach",
}

# clause like "chair_2 (red, wooden) at (3.0, 1.5)" produced by memory rendering
_LOCATED = re.compile(
    r"(?P<name>[\w\- ]+?)(?: \((?P<attrs>[^)]*)\))? at \((?P<x>-?\d+(?:\.\d+)?), (?P<y>-?\d+(?:\.\d+)?)\)")


def _hash_unit(session_id: str, step: int, cid: int) -> float:
    """Stable pseudo-random value in [0, 1) for reproducible tie-breaking."""
    digest = hashlib.sha256(f"{session_id}:{step}:{cid}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2 ** 64


def _tokens(text: str) -> set:
    return {w for w in re.split(r"[^a-z0-9]+", text.lower()) if w and w not in _STOPWORDS}


@dataclass(frozen=True)
class _GoalPattern:
    category: str
    attributes: Tuple[str, ...]

    def matches_ray(self, ray: WireRay) -> bool:
        if ray.label is None or ray.label == "wall":
            return False
        if self.category and self.category.lower() not in ray.label.lower():
            return False
        if self.attributes and not set(self.attributes) <= set(ray.attributes):
            return False
        return bool(self.category or self.attributes)

    def matches_clause(self, name: str, attrs: Sequence[str]) -> bool:
        if self.category and self.category.lower() not in name.lower():
            return False
        if self.attributes and not set(self.attributes) <= set(attrs):
            return False
        return bool(self.category or self.attributes)


def parse_goal_text(text: str) -> _GoalPattern:
    """Invert the canonical goal rendering back into category and attributes."""
    text = text.strip()
    m = re.match(r"^object with (.+)$", text)
    if m:
        return _GoalPattern("", tuple(a.strip() for a in m.group(1).split(",")))
    m = re.match(r"^([\w\- ]+?)\s*\(([^)]*)\)", text)
    if m:
        attrs = tuple(a.strip() for a in m.group(2).split(",") if a.strip())
        return _GoalPattern(m.group(1).strip(), attrs)
    return _GoalPattern(text.split(";")[0].strip(), ())


class OracleBackend:
    """Deterministic scoring, filtering, stop checks, and memory extraction.

    Behavior per request kind:

    * filter: removes candidates near hazard evidence (rays tagged ``hazard``,
      inflated by the apparent object extent so the true disc is covered) and
      candidates whose own ray label shares a keyword with a constraint.
    * score: if the goal is visible, candidates are rated by angular proximity
      to the nearest goal sighting; else, if memory recalls a located match,
      by bearing toward it blended with range; else by range (frontier
      exploration) with a small deterministic hash perturbation.  Also emits
      memory operations for every labeled sighting.
    * stop_check: full confidence exactly when the goal is visible within the
      success distance, zero otherwise.
    * memory_extract: memory operations only.
    """

    def __init__(self, hazard_clearance: float = 0.5, success_threshold: float = 0.3,
                 adjacency_m: float = 1.0, r_scale: float = 10.0):
        self.hazard_clearance = hazard_clearance
        self.success_threshold = success_threshold
        self.adjacency_m = adjacency_m
        # fixed range normalization (sensor reach); normalizing by the set max
        # instead would stretch sub-centimeter differences between cramped
        # candidates past the dither amplitude and deadlock in corners
        self.r_scale = r_scale

    # -- plumbing -----------------------------------------------------------

    def decide(self, req: DecisionRequest) -> DecisionResponse:
        if req.version != PROTOCOL_VERSION:
            raise SchemaViolation(f"bad request version {req.version!r}")
        if req.kind == FILTER:
            return self._filter(req)
        if req.kind == SCORE:
            return self._score(req)
        if req.kind == STOP_CHECK:
            return self._stop(req)
        if req.kind == MEMORY_EXTRACT:
            return DecisionResponse(kind=MEMORY_EXTRACT, memory_ops=self._memory_ops(req))
        raise SchemaViolation(f"unknown request kind {req.kind!r}")

    @staticmethod
    def _endpoint(req: DecisionRequest, theta_deg: float, dist: float) -> Tuple[float, float]:
        ang = math.radians(req.pose[2] + theta_deg)
        return (req.pose[0] + dist * math.cos(ang), req.pose[1] + dist * math.sin(ang))

    @staticmethod
    def _candidate_xy(req: DecisionRequest, cand) -> Tuple[float, float]:
        return OracleBackend._endpoint(req, cand.theta_deg, cand.r_m)

    # -- filter ---------------------------------------------------------------

    def _filter(self, req: DecisionRequest) -> DecisionResponse:
        removals: List[int] = []
        hazard_groups: Dict[str, List[Tuple[float, float]]] = {}
        gaps: Dict[str, float] = {}
        prev: Dict[str, Tuple[float, float]] = {}
        for ray in req.rays:
            if ray.label and "hazard" in ray.tags:
                pt = self._endpoint(req, ray.theta_deg, ray.distance_m)
                hazard_groups.setdefault(ray.label, []).append(pt)
                if ray.label in prev:
                    gap = math.dist(prev[ray.label], pt)
                    gaps[ray.label] = max(gaps.get(ray.label, 0.0), gap)
                prev[ray.label] = pt

        constraint_words = set()
        for c in req.constraints:
            constraint_words |= _tokens(c)

        for cand in req.candidates:
            cx, cy = self._candidate_xy(req, cand)
            hit = False
            for label, pts in hazard_groups.items():
                # the visible endpoints trace only the near arc; pad the
                # standoff by the apparent extent (plus sampling slack) so a
                # candidate behind the object is still caught
                extent = max(math.dist(p, q) for p in pts for q in pts) if len(pts) > 1 else 0.0
                pad = extent + 2.0 * gaps.get(label, 0.0) + 0.05
                if min(math.dist((cx, cy), p) for p in pts) <= self.hazard_clearance + pad:
                    hit = True
                    break
            if not hit and constraint_words:
                ray = min(req.rays, key=lambda r: abs(r.theta_deg - cand.theta_deg))
                if ray.label and ray.label != "wall" and _tokens(ray.label) & constraint_words:
                    hit = True
            if hit:
                removals.append(cand.id)
        return DecisionResponse(kind=FILTER, removals=tuple(removals))

    # -- score ----------------------------------------------------------------

    def _goal_rays(self, req: DecisionRequest) -> List[WireRay]:
        pattern = parse_goal_text(req.goal_text)
        return [r for r in req.rays if pattern.matches_ray(r)]

    def _remembered_target(self, req: DecisionRequest) -> Optional[Tuple[float, float]]:
        if not req.memory_text:
            return None
        pattern = parse_goal_text(req.goal_text)
        best = None
        best_d = math.inf
        for m in _LOCATED.finditer(req.memory_text):
            attrs = tuple(a.strip() for a in (m.group("attrs") or "").split(",") if a.strip())
            if not pattern.matches_clause(m.group("name").strip(), attrs):
                continue
            x, y = float(m.group("x")), float(m.group("y"))
            d = math.hypot(x - req.pose[0], y - req.pose[1])
            if d < best_d:
                best, best_d = (x, y), d
        return best

    def _score(self, req: DecisionRequest) -> DecisionResponse:
        scores: Dict[int, float] = {}
        goal_rays = self._goal_rays(req)
        if goal_rays:
            ref = min(goal_rays, key=lambda r: r.distance_m)
            for c in req.candidates:
                delta = abs(math.radians(c.theta_deg - ref.theta_deg))
                scores[c.id] = max(0.0, 1.0 - delta / math.pi)
        else:
            target = self._remembered_target(req)
            if target is not None:
                bearing = math.atan2(target[1] - req.pose[1], target[0] - req.pose[0])
                rel = bearing - math.radians(req.pose[2])
                rel = (rel + math.pi) % (2 * math.pi) - math.pi
                d_now = math.hypot(target[0] - req.pose[0], target[1] - req.pose[1])
                for c in req.candidates:
                    delta = abs((math.radians(c.theta_deg) - rel + math.pi) % (2 * math.pi) - math.pi)
                    direction = 1.0 - delta / math.pi
                    # cubic reach gate: a blocked bearing loses its pull, so
                    # the agent slides around walls toward the target instead
                    # of grinding against them, and cramped corners collapse
                    # to the dither for a reproducible escape
                    feas = min(1.0, c.r_m) ** 3
                    # open-space credit capped at the target distance, else a
                    # long dash away outbids turning when the target is close
                    # behind the agent
                    reach = min(c.r_m, d_now) / self.r_scale
                    scores[c.id] = min(1.0, 0.7 * direction * feas
                                       + 0.29 * min(1.0, reach)
                                       + 0.01 * _hash_unit(req.session_id, req.step, c.id))
            else:
                # compare reach at 1 m granularity; the dither then picks
                # among comparable rays, which varies the sweep direction
                # step to step instead of replaying one sightline forever
                for c in req.candidates:
                    coarse = min(self.r_scale, math.floor(c.r_m))
                    scores[c.id] = min(1.0, 0.99 * coarse / self.r_scale
                                       + 0.01 * _hash_unit(req.session_id, req.step, c.id))
        return DecisionResponse(kind=SCORE, scores=scores, memory_ops=self._memory_ops(req))

    # -- stop -----------------------------------------------------------------

    def _stop(self, req: DecisionRequest) -> DecisionResponse:
        near = any(r.distance_m <= self.success_threshold for r in self._goal_rays(req))
        return DecisionResponse(kind=STOP_CHECK, s_stop=1.0 if near else 0.0)

    # -- memory extraction ------------------------------------------------------

    def _memory_ops(self, req: DecisionRequest) -> Tuple[MemoryOp, ...]:
        sightings: Dict[str, WireRay] = {}
        for ray in req.rays:
            if ray.label is None or ray.label == "wall":
                continue
            cur = sightings.get(ray.label)
            if cur is None or ray.distance_m < cur.distance_m:
                sightings[ray.label] = ray
        ops: List[MemoryOp] = []
        located: List[Tuple[str, Tuple[float, float]]] = []
        for label in sorted(sightings):
            ray = sightings[label]
            pt = self._endpoint(req, ray.theta_deg, ray.distance_m)
            ops.append(MemoryOp(op="add_node", name=label, attributes=ray.attributes,
                                location=pt))
            located.append((label, pt))
        for i, (name_a, pt_a) in enumerate(located):
            for name_b, pt_b in located[i + 1:]:
                if math.dist(pt_a, pt_b) <= self.adjacency_m:
                    a, b = sorted((name_a, name_b))
                    ops.append(MemoryOp(op="add_edge", start=a, target=b, relation="next to"))
        return tuple(ops)
