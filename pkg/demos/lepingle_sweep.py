"""
Weighted Lepingle ratios across resolutions
===========================================

Sweep random functions over power weights and watch the r-variation ratio
||V^r(E_k f)||_{L^p(w)} / ||f||_{L^p(w)} stay bounded as the resolution
grows; then contrast with a weight outside A_2.  Writes lepingle.svg.
"""

import numpy as np

from walsh_lab.generators import random_function, trial_rng
from walsh_lab.svg import write_line_plot
from walsh_lab.variation import lepingle_ratio
from walsh_lab.weights import ap_characteristic, power_weight

p, r = 2.0, 3.0
resolutions = list(range(4, 11))
series = {}
for alpha in (-0.5, 0.0, 0.5):
    maxima = []
    for res in resolutions:
        w = power_weight(alpha, res)
        ratios = [lepingle_ratio(random_function(trial_rng(1, t), res), w, p, r) for t in range(30)]
        maxima.append(max(ratios))
    series[f"x^{alpha:g}"] = (resolutions, maxima)
    print(f"alpha = {alpha:+.1f}: max ratios", np.round(maxima, 3))

# x^1.5 is not an A_2 weight: its characteristic grows with the resolution
print("[x^1.5]_A2:", [round(ap_characteristic(power_weight(1.5, res), 2.0), 1) for res in resolutions])

write_line_plot("lepingle.svg", series, title="max Lepingle ratio (p=2, r=3)", xlabel="res", ylabel="ratio")
