"""Weighted variational estimates for Walsh-Fourier partial sums on a
finite dyadic grid: Walsh packets, phase-plane bitiles, tree selection,
r-variation and the discretized variational Carleson operator."""

from .carleson import (OperatorInstance, bilinear_form, carleson_variation, direct_ratio, linearize,
                       linearized_operator, major_subsets, tree_ratio, variational_partial_sums)
from .dyadic import (DyadicFunction, DyadicInterval, conditional_expectation, delta_project, expectation_ladder,
                     haar, inner, lp_norm_weighted)
from .phase_plane import Bitile, Linearization, Tree, density, parse_bitiles, size, split_tree
from .selection import (Forest, compare_decompositions, level_decomposition, select_by_density, select_by_size)
from .variation import (StoppingTime, jump_count, lepingle_ratio, r_variation, stopping_transform)
from .walsh import Tile, fwht, inverse_fwht, packet, partial_sum, walsh
from .weights import Weight, ap_characteristic, maximal_dyadic, power_weight, sharp_dyadic, uniform_weight

__version__ = "0.1.0"
