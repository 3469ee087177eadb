#!/usr/bin/env python3
"""Paired ablation: does carrying graph memory into a second goal help?

Runs two-goal episodes (find a chair, then a table) twice per seed — once with
memory enabled and once without — on identical worlds, then reports SPL, SR,
and how often the memory-enabled arm reached the second goal on a path no
longer than the blind arm's.  Pairs are kept only when the second-goal
category was actually sighted while pursuing the first goal, since memory
cannot help with something never observed.
"""
import argparse
import random
import sys

from dynav.backends import OracleBackend
from dynav.backends.protocol import SCORE
from dynav.config import RunConfig
from dynav.episodes import EpisodeSpec, paired_memory_run
from dynav.geometry import AgentBody
from dynav.goals import GoalSpec
from dynav.metrics import compute_metrics
from dynav.worldgen import WorldGenSpec, generate_world, random_free_pose


class SightingRecorder:
    """Wraps a backend and flags goal-2 sightings during the goal-1 leg."""

    def __init__(self, inner, first_goal: str, second_category: str):
        self.inner = inner
        self.first_goal = first_goal
        self.second_category = second_category
        self.seen = False

    def decide(self, req):
        if req.kind == SCORE and req.goal_text == self.first_goal:
            if any(r.label and self.second_category in r.label for r in req.rays):
                self.seen = True
        return self.inner.decide(req)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=30, help="conditioned pairs to collect")
    ap.add_argument("--seed-start", type=int, default=0)
    ap.add_argument("--max-seeds", type=int, default=300)
    ap.add_argument("--rooms", type=int, default=2)
    ap.add_argument("--objects-per-category", type=int, default=2)
    args = ap.parse_args(argv)

    wspec = WorldGenSpec(categories=("chair", "table"), rooms=args.rooms,
                         objects_per_category=args.objects_per_category)
    cfg = RunConfig(max_distance_m=10000.0)
    backend = OracleBackend(hazard_clearance=cfg.hazard_clearance_m,
                            success_threshold=cfg.success_threshold_m,
                            r_scale=cfg.d_max)

    picked, rows, with_arm, without_arm = [], [], [], []
    seed = args.seed_start
    while len(picked) < args.pairs and seed < args.seed_start + args.max_seeds:
        world = generate_world(wspec, seed)
        start = random_free_pose(world, random.Random(seed + 1000), AgentBody())
        spec = EpisodeSpec(
            episode_id=f"p{seed}", world=world,
            goals=(GoalSpec.name_goal("chair"), GoalSpec.name_goal("table")),
            start=start, seed=seed)
        rec = SightingRecorder(backend, "chair", "table")
        w, wo = paired_memory_run(spec, rec, cfg)
        if rec.seen:
            picked.append(seed)
            with_arm.append(w)
            without_arm.append(wo)
            rows.append((seed, w.goal_results[1].path_length,
                         wo.goal_results[1].path_length))
        seed += 1

    if not picked:
        print("no conditioned pairs found; widen --max-seeds", file=sys.stderr)
        return 1

    rw, rwo = compute_metrics(with_arm), compute_metrics(without_arm)
    le = sum(1 for _, a, b in rows if a <= b + 1e-9)
    wins = sum(1 for _, a, b in rows if a < b - 1e-9)
    print(f"conditioned pairs: {len(rows)} (seeds {picked[0]}..{picked[-1]})")
    print(f"{'':14}{'with memory':>14}{'without':>14}")
    print(f"{'SR':14}{rw.sr:>14.3f}{rwo.sr:>14.3f}")
    print(f"{'mean SPL':14}{rw.spl:>14.4f}{rwo.spl:>14.4f}")
    print(f"goal-2 path <= blind arm: {le}/{len(rows)} pairs ({wins} strict wins)")
    print()
    print(f"{'seed':>6}{'goal-2 with (m)':>18}{'goal-2 without (m)':>20}")
    for s, a, b in rows:
        marker = "<" if a < b - 1e-9 else ("=" if a <= b + 1e-9 else ">")
        print(f"{s:>6}{a:>18.2f}{b:>20.2f}  {marker}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
