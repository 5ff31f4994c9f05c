"""Seed-sweep experiments for the clonal-selection classifier.

Two studies, both cheap enough for a laptop:

  and-convergence   per-seed rate at which the 4-sample AND problem
                    reaches full affinity within the generation budget
  two-gaussian      held-in classification accuracy of memory cells on
                    two unit Gaussians at (0,0) and (10,10) - the
                    location-only geometry the recognition stage cannot
                    separate (its normalization is scale-invariant), so
                    expect ~0.5-0.75 regardless of seed

Usage:
    python scripts/csaim_experiments.py and-convergence --seeds 30
    python scripts/csaim_experiments.py two-gaussian --data-seeds 8 --rng-seeds 8
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from crypticspots import immune


def and_convergence(n_seeds: int) -> None:
    data = immune.TrainingSet(samples=[[0, 0], [0, 1], [1, 0], [1, 1]],
                              targets=[0, 0, 0, 1])
    cfg = immune.CsaimConfig()
    wins = 0
    t0 = time.perf_counter()
    for seed in range(n_seeds):
        best, _ = immune.run_recsa(data, cfg, np.random.default_rng(seed))
        ok = best.cached_affinity == 4
        wins += ok
        print(f"seed {seed:3d}: affinity {best.cached_affinity}/4"
              f"{'' if ok else '  <- stuck'}")
    dt = time.perf_counter() - t0
    print(f"\n{wins}/{n_seeds} seeds converged "
          f"({dt / n_seeds:.2f}s per run, {cfg.max_generations} generations)")


def two_gaussian(n_data_seeds: int, n_rng_seeds: int) -> None:
    cfg = immune.CsaimConfig()
    mcfg = immune.MemoryConfig()
    accuracies = []
    for data_seed in range(n_data_seeds):
        r = np.random.default_rng(data_seed)
        X = np.vstack([r.normal(0.0, 1.0, (30, 2)), r.normal(10.0, 1.0, (30, 2))])
        y = np.array([0] * 30 + [1] * 30)
        for rng_seed in range(n_rng_seeds):
            cells = immune.build_memory_cells(X, y, cfg, mcfg,
                                              np.random.default_rng(rng_seed))
            pred = [immune.classify(cells, x, mcfg) for x in X]
            acc = float(np.mean([p == t for p, t in zip(pred, y)]))
            accuracies.append(acc)
            print(f"data_seed {data_seed} rng_seed {rng_seed}: "
                  f"cells={len(cells):2d} accuracy={acc:.3f}")
    accuracies = np.array(accuracies)
    print(f"\nn={accuracies.size} mean={accuracies.mean():.3f} "
          f"max={accuracies.max():.3f} >=0.9: {(accuracies >= 0.9).sum()}")
    # scale-invariance of the recognition stage, shown directly
    r = np.random.default_rng(0)
    X = np.vstack([r.normal(0.0, 1.0, (30, 2)), r.normal(10.0, 1.0, (30, 2))])
    y = np.array([0] * 30 + [1] * 30)
    cells = immune.build_memory_cells(X, y, cfg, mcfg, np.random.default_rng(1))
    d = np.array([5.0, 6.0])
    print("classify(d), classify(100d), classify(0.01d):",
          immune.classify(cells, d, mcfg), immune.classify(cells, 100 * d, mcfg),
          immune.classify(cells, 0.01 * d, mcfg))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="study", required=True)
    p_and = sub.add_parser("and-convergence")
    p_and.add_argument("--seeds", type=int, default=30)
    p_tg = sub.add_parser("two-gaussian")
    p_tg.add_argument("--data-seeds", type=int, default=4)
    p_tg.add_argument("--rng-seeds", type=int, default=4)
    args = parser.parse_args()
    if args.study == "and-convergence":
        and_convergence(args.seeds)
    else:
        two_gaussian(args.data_seeds, args.rng_seeds)


if __name__ == "__main__":
    main()
