# %% [markdown]
# How much range error an array tolerates: probability that the end-fire
# coherent gain stays above 0.9 as the per-node range error grows.

# %%
import numpy as np

from cdasim import gain_probability_sweep
from cdasim.analysis import default_sigma_grid

lam = 299792458.0 / 1.5e9
grid = default_sigma_grid(lam, 12)

# %%
curves = {n: gain_probability_sweep(n, grid, trials=10_000, seed=0, wavelength=lam, workers=4) for n in (2, 3, 10, 30, 100)}
print("sigma/lambda " + " ".join(f"n={n:<5}" for n in curves))
for i, s in enumerate(grid):
    print(f"{s / lam:11.4f}  " + " ".join(f"{c.probability[i]:7.4f}" for c in curves.values()))

# %%
# Large arrays average the errors, so the drop-off sharpens around lambda/20.
for n, c in curves.items():
    above = grid[c.probability >= 0.99]
    edge = above.max() / lam if above.size else float("nan")
    print(f"n={n:<3} keeps P >= 0.99 up to sigma = lambda/{1 / edge:.0f}")
