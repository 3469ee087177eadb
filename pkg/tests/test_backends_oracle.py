"""Deterministic backend: scoring modes, hazard filtering, stop and memory ops."""
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynav.backends.oracle import OracleBackend, parse_goal_text
from dynav.backends.protocol import (
    FILTER,
    MEMORY_EXTRACT,
    PROTOCOL_VERSION,
    SCORE,
    STOP_CHECK,
    DecisionRequest,
    WireCandidate,
    WireRay,
)
from dynav.errors import SchemaViolation


def make_req(kind=SCORE, goal="chair", rays=(), candidates=(), memory="",
             constraints=(), pose=(0.0, 0.0, 0.0), session="s", step=0):
    return DecisionRequest(
        version=PROTOCOL_VERSION, kind=kind, session_id=session, step=step,
        goal_text=goal, pose=pose, rays=tuple(rays), candidates=tuple(candidates),
        memory_text=memory, constraints=tuple(constraints), template_id="goal-name/1",
    )


@pytest.fixture
def backend():
    return OracleBackend()


# -- goal text parsing -----------------------------------------------------------


def test_parse_goal_text_forms():
    assert parse_goal_text("chair") == parse_goal_text("chair ")
    assert parse_goal_text("chair").category == "chair"
    assert parse_goal_text("chair").attributes == ()

    desc = parse_goal_text("chair (red, wooden)")
    assert desc.category == "chair"
    assert desc.attributes == ("red", "wooden")

    inst = parse_goal_text("object with red, tall")
    assert inst.category == ""
    assert inst.attributes == ("red", "tall")

    hinted = parse_goal_text("toilet; near the sink")
    assert hinted.category == "toilet"


def test_goal_pattern_matching():
    p = parse_goal_text("chair (red)")
    assert p.matches_ray(WireRay(0.0, 2.0, "chair_1", ("red", "wooden"), ()))
    assert not p.matches_ray(WireRay(0.0, 2.0, "chair_1", ("blue",), ()))
    assert not p.matches_ray(WireRay(0.0, 2.0, "table_1", ("red",), ()))
    assert not p.matches_ray(WireRay(0.0, 2.0, "wall", ("red",), ()))
    assert not p.matches_ray(WireRay(0.0, 2.0, None))


# -- scoring: goal visible ----------------------------------------------------------


def test_goal_visible_scores_by_angular_proximity(backend):
    rays = [WireRay(10.0, 3.0, "chair_1")]
    cands = [WireCandidate(1, 2.0, 0.0), WireCandidate(2, 2.0, 12.0),
             WireCandidate(3, 2.0, -30.0)]
    resp = backend.decide(make_req(rays=rays, candidates=cands))
    assert resp.kind == SCORE
    assert resp.scores[1] == pytest.approx(1.0 - math.radians(10.0) / math.pi)
    assert resp.scores[2] == pytest.approx(1.0 - math.radians(2.0) / math.pi)
    assert resp.scores[3] == pytest.approx(1.0 - math.radians(40.0) / math.pi)
    assert max(resp.scores, key=resp.scores.get) == 2


def test_goal_reference_is_nearest_sighting(backend):
    # two chairs in view: the closer one at -20 deg sets the reference bearing
    rays = [WireRay(30.0, 6.0, "chair_1"), WireRay(-20.0, 2.0, "chair_2")]
    cands = [WireCandidate(1, 2.0, 28.0), WireCandidate(2, 2.0, -18.0)]
    resp = backend.decide(make_req(rays=rays, candidates=cands))
    assert resp.scores[2] > resp.scores[1]


# -- scoring: frontier fallback -------------------------------------------------------


def test_frontier_prefers_longest_reach(backend):
    rays = [WireRay(0.0, 5.0, "wall")]
    cands = [WireCandidate(1, 2.0, -20.0), WireCandidate(2, 4.0, 0.0),
             WireCandidate(3, 3.0, 20.0)]
    resp = backend.decide(make_req(rays=rays, candidates=cands, memory=""))
    assert max(resp.scores, key=resp.scores.get) == 2
    assert resp.scores[2] > resp.scores[3] > resp.scores[1]


@settings(max_examples=60, deadline=None)
@given(step=st.integers(0, 500), session=st.sampled_from(("a", "b", "c")))
def test_frontier_order_is_stable_across_dither(step, session):
    backend = OracleBackend()
    cands = [WireCandidate(1, 2.0, -20.0), WireCandidate(2, 4.0, 0.0),
             WireCandidate(3, 3.0, 20.0)]
    resp = backend.decide(make_req(candidates=cands, session=session, step=step))
    # the dither is smaller than one coarse range bin: 4 > 3 > 2 always holds
    assert resp.scores[2] > resp.scores[3] > resp.scores[1]
    assert all(0.0 <= s <= 1.0 for s in resp.scores.values())


def test_frontier_dither_varies_with_step(backend):
    cands = [WireCandidate(1, 2.0, -20.0), WireCandidate(2, 2.3, 20.0)]
    picks = set()
    for step in range(12):
        resp = backend.decide(make_req(candidates=cands, step=step))
        picks.add(max(resp.scores, key=resp.scores.get))
    # equal coarse reach: the step-keyed dither varies which ray wins
    assert picks == {1, 2}


# -- scoring: remembered target --------------------------------------------------------


def test_memory_steering_prefers_target_bearing(backend):
    memory = "chair_2 (red) at (5.0, 5.0)"  # bearing 45 deg from the origin
    cands = [WireCandidate(1, 3.0, 40.0), WireCandidate(2, 3.0, -40.0)]
    resp = backend.decide(make_req(candidates=cands, memory=memory))
    assert resp.scores[1] > resp.scores[2]


def test_memory_steering_picks_nearest_clause(backend):
    memory = "chair_9 at (20.0, 0.0). chair_2 at (0.0, 6.0)"
    cands = [WireCandidate(1, 3.0, 85.0),    # toward the close chair at (0, 6)
             WireCandidate(2, 3.0, 0.0)]     # toward the far chair at (20, 0)
    resp = backend.decide(make_req(candidates=cands, memory=memory))
    assert resp.scores[1] > resp.scores[2]


def test_memory_steering_ignores_non_matching_clauses(backend):
    # memory only knows a table; a chair goal falls back to frontier mode
    memory = "table_1 at (0.0, 6.0)"
    cands = [WireCandidate(1, 2.0, 85.0), WireCandidate(2, 4.0, 0.0)]
    resp = backend.decide(make_req(candidates=cands, memory=memory))
    assert resp.scores[2] > resp.scores[1]


def test_memory_steering_gates_blocked_bearings(backend):
    # target dead ahead but that ray is nearly blocked; the clear flank wins
    memory = "chair_2 at (6.0, 0.0)"
    cands = [WireCandidate(1, 0.2, 0.0), WireCandidate(2, 4.0, 50.0)]
    resp = backend.decide(make_req(candidates=cands, memory=memory))
    assert resp.scores[2] > resp.scores[1]


def test_goal_visibility_overrides_memory(backend):
    memory = "chair_2 at (0.0, 6.0)"
    rays = [WireRay(-10.0, 2.0, "chair_1")]
    cands = [WireCandidate(1, 3.0, -10.0), WireCandidate(2, 3.0, 85.0)]
    resp = backend.decide(make_req(rays=rays, candidates=cands, memory=memory))
    assert resp.scores[1] > resp.scores[2]


# -- filtering ---------------------------------------------------------------------


def test_filter_removes_candidates_near_hazards(backend):
    rays = [WireRay(0.0, 2.0, "sign_1", (), ("hazard",))]
    cands = [WireCandidate(1, 1.8, 0.0),    # lands 0.2 m short of the sign
             WireCandidate(2, 2.0, -40.0)]  # far from it
    resp = backend.decide(make_req(kind=FILTER, rays=rays, candidates=cands))
    assert resp.kind == FILTER
    assert resp.removals == (1,)
    assert resp.adjustments == ()


def test_filter_hazard_padding_covers_hidden_extent(backend):
    # two sightings of one hazard 0.8 m apart: the pad grows with the extent
    rays = [WireRay(-10.0, 2.0, "sign_1", (), ("hazard",)),
            WireRay(10.0, 2.2, "sign_1", (), ("hazard",))]
    wide = backend.decide(make_req(kind=FILTER, rays=rays,
                                   candidates=[WireCandidate(1, 3.4, 0.0)]))
    assert wide.removals == (1,)


def test_filter_removes_constraint_keyword_matches(backend):
    rays = [WireRay(0.0, 3.0, "oven_3"), WireRay(30.0, 3.0, "chair_1")]
    cands = [WireCandidate(1, 2.4, 1.0), WireCandidate(2, 2.4, 29.0)]
    resp = backend.decide(make_req(kind=FILTER, rays=rays, candidates=cands,
                                   constraints=("stay away from the oven",)))
    assert resp.removals == (1,)


def test_filter_clean_scene_removes_nothing(backend):
    rays = [WireRay(0.0, 3.0, "chair_1"), WireRay(20.0, 9.0, None)]
    cands = [WireCandidate(1, 2.4, 0.0), WireCandidate(2, 7.0, 20.0)]
    resp = backend.decide(make_req(kind=FILTER, rays=rays, candidates=cands))
    assert resp.removals == ()
    assert resp.adjustments == ()  # the oracle never nudges, only removes


# -- stop check --------------------------------------------------------------------


def test_stop_confidence_requires_goal_within_threshold(backend):
    near = make_req(kind=STOP_CHECK, rays=[WireRay(5.0, 0.29, "chair_1")])
    far = make_req(kind=STOP_CHECK, rays=[WireRay(5.0, 0.31, "chair_1")])
    none = make_req(kind=STOP_CHECK, rays=[WireRay(5.0, 0.2, "table_1")])
    assert backend.decide(near).s_stop == 1.0
    assert backend.decide(far).s_stop == 0.0
    assert backend.decide(none).s_stop == 0.0
    assert backend.decide(near).kind == STOP_CHECK


# -- memory extraction ----------------------------------------------------------------


def test_memory_ops_add_nodes_at_ray_endpoints(backend):
    rays = [WireRay(0.0, 2.0, "chair_1", ("red",)), WireRay(90.0, 3.0, "wall"),
            WireRay(45.0, 9.0, None)]
    resp = backend.decide(make_req(kind=MEMORY_EXTRACT, rays=rays, pose=(1.0, 1.0, 0.0)))
    assert resp.kind == MEMORY_EXTRACT
    assert len(resp.memory_ops) == 1
    op = resp.memory_ops[0]
    assert op.op == "add_node" and op.name == "chair_1"
    assert op.attributes == ("red",)
    assert op.location[0] == pytest.approx(3.0)
    assert op.location[1] == pytest.approx(1.0)


def test_memory_ops_keep_nearest_sighting(backend):
    rays = [WireRay(0.0, 2.0, "chair_1"), WireRay(2.0, 1.5, "chair_1")]
    resp = backend.decide(make_req(kind=MEMORY_EXTRACT, rays=rays))
    assert len(resp.memory_ops) == 1
    assert math.hypot(*resp.memory_ops[0].location) == pytest.approx(1.5)


def test_memory_ops_adjacency_edge(backend):
    # endpoints 0.4 m apart: adjacent; a third object far away is not linked
    rays = [WireRay(0.0, 2.0, "chair_1"), WireRay(11.0, 2.1, "table_1"),
            WireRay(-60.0, 6.0, "sofa_1")]
    resp = backend.decide(make_req(kind=MEMORY_EXTRACT, rays=rays))
    edges = [op for op in resp.memory_ops if op.op == "add_edge"]
    assert len(edges) == 1
    assert (edges[0].start, edges[0].target) == ("chair_1", "table_1")
    assert edges[0].relation == "next to"
    a = next(op for op in resp.memory_ops if op.name == "chair_1")
    b = next(op for op in resp.memory_ops if op.name == "table_1")
    assert math.dist(a.location, b.location) <= 1.0


def test_score_requests_also_emit_memory_ops(backend):
    rays = [WireRay(0.0, 2.0, "chair_1")]
    resp = backend.decide(make_req(rays=rays, candidates=[WireCandidate(1, 1.6, 0.0)]))
    assert any(op.op == "add_node" and op.name == "chair_1" for op in resp.memory_ops)


# -- plumbing ---------------------------------------------------------------------


def test_oracle_is_deterministic(backend):
    req = make_req(candidates=[WireCandidate(1, 2.0, 0.0), WireCandidate(2, 3.0, 30.0)],
                   rays=[WireRay(0.0, 5.0, "wall")], session="fixed", step=9)
    assert backend.decide(req) == backend.decide(req)


def test_oracle_rejects_bad_version_and_kind(backend):
    bad_version = make_req()
    object.__setattr__(bad_version, "version", "dynav/2")
    with pytest.raises(SchemaViolation):
        backend.decide(bad_version)
    bad_kind = make_req()
    object.__setattr__(bad_kind, "kind", "prophecy")
    with pytest.raises(SchemaViolation):
        backend.decide(bad_kind)
