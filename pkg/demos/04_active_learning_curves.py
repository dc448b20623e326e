"""Learning curves for the selection strategies on an imbalanced pool.

Runs the full cycle loop (select -> label -> reset -> retrain -> evaluate)
for three strategies on identical per-repetition datasets and prints the
mean macro-F1 learning curves. Scaled down from the headline configuration
to finish in about a minute; raise n_samples / budget / repetitions to
reproduce the full comparison.
"""

import time

from ndsal import ALConfig, run_experiment

STRATEGIES = ("random", "nds", "ndsplus")

results = {}
for strategy in STRATEGIES:
    config = ALConfig(
        strategy=strategy,
        draw_size=20,
        initial_size=40,
        budget=200,
        k=4,
        epochs=10,
        repetitions=3,
        master_seed=1,
    )
    start = time.perf_counter()
    results[strategy] = run_experiment(
        config, preset="twitter-abusive", n_samples=800, dim=32, spread=1.0
    )
    print(f"{strategy:8s} done in {time.perf_counter() - start:.1f}s")

grid = [row["labeled_count"] for row in results["random"].aggregate()]
print("\nlabeled   " + "  ".join(f"{s:>8s}" for s in STRATEGIES))
for count in grid:
    cells = "  ".join(f"{results[s].mean_f1_at(count):8.4f}" for s in STRATEGIES)
    print(f"{count:7d}   {cells}")

print("\nalpha trajectory for ndsplus (2% additive decay from 1):")
rows = results["ndsplus"].runs[0].rows
print("  " + "  ".join(f"{row.cycle}:{row.alpha:.2f}" for row in rows if row.alpha is not None))
