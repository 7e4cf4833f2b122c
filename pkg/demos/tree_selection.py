"""
Size, density and the level decomposition
=========================================

Load the bundled bitile collection, measure size and density, split off
trees by size, and run the full level decomposition.
"""

from importlib.resources import files

import numpy as np

from walsh_lab.carleson import OperatorInstance, linearize
from walsh_lab.generators import random_set, signed_indicator
from walsh_lab.phase_plane import density, parse_bitiles, size
from walsh_lab.selection import level_decomposition, pairwise_disjoint_tiles, select_by_size
from walsh_lab.weights import power_weight

bitiles = parse_bitiles(files("walsh_lab").joinpath("data/example_bitiles.txt").read_text())
res = 5
print(len(bitiles), "bitiles")

rng = np.random.default_rng(7)
F, G = random_set(rng, res), random_set(rng, res)
f, g = signed_indicator(rng, F), signed_indicator(rng, G)
w = power_weight(0.5, res)
r, q = 4.0, 1.5

# Size of the whole collection and the top that attains it
s, top = size(bitiles, f, w, return_top=True)
print(f"size = {s:.4f} attained at top {top}")

# Remove trees until the residual size is below sigma / 2
residual, forest = select_by_size(bitiles, f, w, s)
print(f"{len(forest)} trees selected, residual size {size(residual, f, w):.4f} < {s / 2:.4f}")
print("lower tiles of the 2-overlapping parts are disjoint:", pairwise_disjoint_tiles(forest.lower_tiles()))

# Density needs a linearization of the variational operator
lin = linearize(OperatorInstance(bitiles, r), f)
print(f"density = {density(bitiles, lin, g, w, r):.4f}")

# The full decomposition, one CSV row per level
report = level_decomposition(bitiles, f, g, lin, w, q, r, mode="case1", F=F, G=G)
print(report.to_csv())
