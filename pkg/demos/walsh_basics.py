"""
Walsh functions, packets and partial sums
=========================================

A short tour of the dyadic core: build Walsh functions, transform a step
function, and look at the partial sums S_N f together with their
r-variation.
"""

import numpy as np

from walsh_lab import DyadicFunction, fwht, inverse_fwht, walsh
from walsh_lab.carleson import variational_partial_sums
from walsh_lab.walsh import Tile, packet, partial_sum, tile_less

res = 4

# Walsh functions are +-1 step functions; W_0 .. W_7 at resolution 3
for n in range(8):
    print(n, walsh(n, 3).values.astype(int))

# The transform of a single Walsh function is a unit vector
c = fwht(walsh(5, res)).coeffs
print("coefficients of W_5:", np.nonzero(c)[0], c[5])

# A random step function round-trips through the transform
rng = np.random.default_rng(0)
f = DyadicFunction(rng.normal(size=1 << res))
print("round trip error:", np.max(np.abs(inverse_fwht(fwht(f)).values - f.values)))

# Packets live on tiles; two packets are orthogonal unless the tiles are ordered
p, q = Tile(2, 1, 0), Tile(0, 0, 0)
overlap = np.dot(packet(p, res).values, packet(q, res).values) / (1 << res)
print(f"<phi_p, phi_q> = {overlap:.4f}, ordered: {tile_less(p, q)}")

# Partial sums S_N f and the cell-wise 3-variation of N -> S_N f(x)
for N in (0, 1, 3, 7, 15):
    print(f"S_{N} f at x = 0: {partial_sum(f, N).values[0]: .4f}")
print("V^3 of partial sums:", np.round(variational_partial_sums(f, 3.0).values, 3))
