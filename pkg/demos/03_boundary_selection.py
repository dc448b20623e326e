"""What the non-dominant selection actually picks, drawn as ASCII art.

Three 2-D blobs with a few stragglers drifting toward the neighbors. The
selection pool is built from each cluster's non-dominant side, so the drawn
samples hug the blob boundaries rather than the cores.
"""

import numpy as np

from ndsal import FeatureMatrix, draw, score_nds, spectral_cluster

rng = np.random.default_rng(5)
centers = np.array([[0.0, 0.0], [14.0, 0.0], [7.0, 12.0]])
rows = [c + rng.normal(0, 1.0, size=(50, 2)) for c in centers]
for i in range(3):
    for j in range(3):
        if i != j:
            spot = centers[i] + 0.33 * (centers[j] - centers[i])
            rows.append(spot + rng.normal(0, 0.5, size=(2, 2)))
points = np.vstack(rows)
features = FeatureMatrix(points, tuple(range(len(points))))

assignment = spectral_cluster(features, K=3, seed=1)
scores = score_nds(features, assignment, m=12)
selected = set(draw(scores, 12, seed=2))

print(f"pool {features.n_samples}, selectable (non-dominant) "
      f"{int((scores.weights > 0).sum())}, drawn {len(selected)}")
print("cutoff multipliers:", scores.metadata["cutoff_multipliers"])

# render: '.' pool, 'o' non-dominant, '#' drawn this cycle
cols, lines = 72, 26
x0, x1 = points[:, 0].min(), points[:, 0].max()
y0, y1 = points[:, 1].min(), points[:, 1].max()
canvas = [[" "] * cols for _ in range(lines)]
for idx, (x, y) in enumerate(points):
    c = int((x - x0) / (x1 - x0 + 1e-9) * (cols - 1))
    r = lines - 1 - int((y - y0) / (y1 - y0 + 1e-9) * (lines - 1))
    glyph = "#" if idx in selected else ("o" if scores.weights[idx] > 0 else ".")
    current = canvas[r][c]
    if current in (" ", ".") or glyph == "#":
        canvas[r][c] = glyph
print("\n" + "\n".join("".join(row) for row in canvas))
print("\nlegend: . dominant core   o selectable boundary   # drawn this cycle")

own = {s: k for k in range(3) for s in assignment.members(k)}
dists = {
    s: np.linalg.norm(points[s] - points[[m for m in assignment.members(own[s])]].mean(axis=0))
    for s in range(len(points))
}
drawn_mean = np.mean([dists[s] for s in selected])
core_mean = np.mean([dists[s] for s in range(len(points)) if scores.weights[s] == 0])
print(f"\nmean distance to own cluster centroid: drawn {drawn_mean:.2f} "
      f"vs dominant {core_mean:.2f}")
