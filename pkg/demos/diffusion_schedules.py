"""
Forward noising channels
========================

Compare variance schedules and draw noisy coordinates and atom types
from the forward process.
"""

import numpy as np

from ligkit import make_schedule, noise_coordinates, noise_types, perturb_protein, score_targets

for kind in ("sigmoid", "linear", "cosine"):
    s = make_schedule(1000, kind)
    marks = [1, 250, 500, 750, 1000]
    print(f"{kind:<8s}", "  ".join(f"abar[{t}]={s.alpha_bar_at(t):.4f}" for t in marks))

s = make_schedule(1000, "linear")
x0 = np.array([[1.0, 0.0, 0.0], [0.0, 1.5, 0.0], [0.0, 0.0, -1.0]])
for t in (1, 100, 500, 1000):
    xt, eps = noise_coordinates(x0, t, s, seed=t)
    target = score_targets(x0, xt, t, s)
    print(f"t={t:4d}  |x_t - x0| = {np.linalg.norm(xt - x0):6.3f}  loss weight {target.weight:.3e}")

# atom types drift toward uniform as abar falls
v0 = np.eye(6)[[0, 2, 2, 5]]
for t in (1, 300, 700, 1000):
    idx, p = noise_types(v0, t, s, seed=0)
    print(f"t={t:4d}  p(true type) = {p[0, 0]:.3f}  sample {idx.tolist()}")

# protein atoms get a small fixed jitter
xp = np.zeros((10_000, 3))
print("protein noise std", perturb_protein(xp, seed=0).std(axis=0).round(4))
