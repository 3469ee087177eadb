#!/usr/bin/env python3
"""Benchmark the deterministic oracle backend on generated worlds.

Generates seed-fixed procedural worlds, runs one single-goal episode per seed,
and prints SR / SPL / step / distance statistics.  Useful for judging how
navigation competence responds to world difficulty knobs (rooms, clutter) or
to sensing/proposal parameter changes.
"""
import argparse
import random
import statistics
import sys
import time

from dynav.backends import OracleBackend
from dynav.config import RunConfig
from dynav.episodes import EpisodeSpec, run_episode
from dynav.geometry import AgentBody
from dynav.goals import GoalSpec
from dynav.metrics import compute_metrics
from dynav.worldgen import WorldGenSpec, generate_world, random_free_pose


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--episodes", type=int, default=50)
    ap.add_argument("--seed-start", type=int, default=0)
    ap.add_argument("--rooms", type=int, default=2)
    ap.add_argument("--objects-per-category", type=int, default=2)
    ap.add_argument("--goal", default="chair")
    ap.add_argument("--n-rays", type=int, default=None)
    ap.add_argument("--alpha", type=float, default=None)
    ap.add_argument("--max-steps", type=int, default=200)
    args = ap.parse_args(argv)

    wspec = WorldGenSpec(categories=("chair", "table"), rooms=args.rooms,
                         objects_per_category=args.objects_per_category)
    cfg = RunConfig(max_distance_m=10000.0, max_steps=args.max_steps).with_overrides(
        n_rays=args.n_rays, alpha=args.alpha)
    backend = OracleBackend(hazard_clearance=cfg.hazard_clearance_m,
                            success_threshold=cfg.success_threshold_m,
                            r_scale=cfg.d_max)

    results = []
    t0 = time.monotonic()
    for seed in range(args.seed_start, args.seed_start + args.episodes):
        world = generate_world(wspec, seed)
        start = random_free_pose(world, random.Random(seed + 1000), AgentBody())
        spec = EpisodeSpec(episode_id=f"w{seed}", world=world,
                           goals=(GoalSpec.name_goal(args.goal),),
                           start=start, seed=seed)
        results.append(run_episode(spec, backend, cfg))
    elapsed = time.monotonic() - t0

    rep = compute_metrics(results)
    goals = [ep.goal_results[0] for ep in results]
    steps = [g.steps for g in goals]
    fails = [ep.episode_id for ep in results if not ep.goal_results[0].success]
    print(rep.to_text())
    print(f"steps: median {statistics.median(steps):.0f}, "
          f"p90 {sorted(steps)[int(0.9 * (len(steps) - 1))]}, max {max(steps)}")
    print(f"wall time: {elapsed:.1f}s for {len(results)} episodes")
    if fails:
        print(f"failed episodes: {', '.join(fails)}")
    return 0 if not fails else 1


if __name__ == "__main__":
    sys.exit(main())
