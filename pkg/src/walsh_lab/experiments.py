"""Randomized experiment suites, the deterministic trial runner and the
calibration-constant file.

A suite is a function ``trial(rng, res, index)`` returning a list of
``(key, ratio)`` measurements and a list of ``(check, passed)`` invariant
results.  The runner derives one sub-seed per trial from the run seed and
reduces results in trial order, so output does not depend on the number of
workers.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .carleson import (DegenerateTree, OperatorInstance, bilinear_form, linearize, major_subsets,
                       tree_ratio, variational_partial_sums)
from .dyadic import DyadicFunction, lp_norm_weighted
from .generators import (make_weight, random_bitiles, random_function, random_set, random_stopping_sequence,
                         random_tree, signed_indicator, trial_rng, trial_seed)
from .phase_plane import bmo_sides, conjugate, counting_function, density, size
from .selection import (coarsest_cover, compare_decompositions, select_by_density, select_by_size,
                        singleton_cover)
from .variation import jump_count_field, martingale_variation_field, stopping_transform
from .walsh import partial_sum_ladder

HEADROOM = 1.1
CALIBRATION_SEED = 20240917
ACCEPTANCE_SEED = 5
RES_RANGE = (4, 5, 6, 7, 8)

# (q, p, r) with r > 2q and 1/r < 1/q - 1/p; exponents alpha keep x^alpha in A_q
THEOREM_GRID = (
    (1.5, 3.0, 4.0),
    (1.5, 4.0, 6.0),
    (1.2, 3.0, 3.0),
    (2.0, 6.0, 6.0),
    (1.1, 2.0, 3.0),
)
LEPINGLE_GRID = tuple((a, p, r) for a in (-0.5, 0.0, 0.5) for p in (1.5, 2.0, 3.0) for r in (2.5, 3.0, 4.0))


def theorem_alphas(q: float) -> tuple:
    return (-0.5, 0.0, round(min(0.5, q - 1) / 2, 3))


def exponent_violation(p: float, q: float, r: float) -> str | None:
    """Name the violated hypothesis of the main variational estimate, if any."""
    if not q > 1:
        return "q > 1"
    if not p > q:
        return "p > q"
    if not r > 2 * q:
        return "r > 2q"
    if not 1 / r < 1 / q - 1 / p:
        return "1/r < 1/q - 1/p"
    return None


# -- suites ----------------------------------------------------------------

def trial_selection(rng, res: int, index: int):
    """Mass bounds, counting bound and efficiency for both selections."""
    q, r = 1.5, 4.0
    alpha = (-0.5, 0.0, 0.25)[index % 3]
    w = make_weight(alpha, res)
    F, G = random_set(rng, res), random_set(rng, res)
    f, g = signed_indicator(rng, F), signed_indicator(rng, G)
    B = random_bitiles(rng, res)
    out, checks = [], []
    sigma = size(B, f, w)
    if sigma > 0:
        resid, forest = select_by_size(B, f, w, sigma)
        checks.append(("size halving", size(resid, f, w) < sigma / 2))
        checks.append(("size monotone", size(resid, f, w) <= sigma + 1e-12))
        wF = w.mass(F)
        out.append(("mass_size", forest.mass(w) / (sigma ** (-2 * q) * wF)))
        cnt = counting_function(forest.trees, res)
        for p in (1.5, 2.0, 3.0):
            out.append(("counting_bmo", lp_norm_weighted(cnt, w, p) / (sigma ** (-2 * q) * wF ** (1 / p))))
        if forest.trees:
            chosen = forest.members()
            out.append(("efficient", compare_decompositions(forest, singleton_cover(chosen), w)))
            out.append(("efficient_coarse", compare_decompositions(forest, coarsest_cover(chosen), w)))
    lin = linearize(OperatorInstance(B, r), random_function(rng, res))
    lam = density(B, lin, g, w, r)
    if lam > 0:
        resid, forest = select_by_density(B, lin, g, w, r, lam)
        checks.append(("density halving", density(resid, lin, g, w, r) < lam / 2))
        out.append(("mass_density", forest.mass(w) / (lam ** (-conjugate(r)) * w.mass(G))))
    return out, checks


def _interval_mass(w, mask, interval) -> float:
    sl = interval.cells(w.res)
    return float(np.sum(w.values[sl] * mask[sl])) / w.values.size


def trial_size(rng, res: int, index: int):
    """Size-bound lemma and the BMO characterization of size."""
    q = (1.5, 2.0)[index % 2]
    alpha = (-0.5, 0.0, 0.25)[(index // 2) % 3]
    w = make_weight(alpha, res)
    F = random_set(rng, res)
    f = signed_indicator(rng, F)
    B = random_bitiles(rng, res)
    out, checks = [], []
    if not B:
        return out, checks
    local = max(_interval_mass(w, F, P.interval) / w.measure(P.interval) for P in B)
    s = size(B, f, w)
    if local > 0:
        out.append(("size_bound", s / local ** (1 / q)))
    if res <= 6 and s > 0:
        for p in (1.5, 2.0, 4.0):
            lhs, rhs = bmo_sides(B, f, w, p)
            checks.append(("weak norm below strong norm", rhs <= lhs * (1 + 1e-12)))
            out.append(("bmo_characterize", lhs / rhs))
    return out, checks


def trial_stopping(rng, res: int, index: int):
    """||sum_k eps_k (E_{N_k} - E_{N_(k-1)}) f||_{L^p(w)} / ||f||_{L^p(w)}."""
    p = (1.5, 2.0, 3.0)[index % 3]
    alpha = ((-0.5, 0.0, 0.25), (-0.5, 0.0, 0.5), (-0.5, 0.0, 0.5))[index % 3][(index // 3) % 3]
    w = make_weight(alpha, res)
    f = random_function(rng, res) if index % 2 else signed_indicator(rng, random_set(rng, res))
    stops = random_stopping_sequence(rng, res, int(rng.integers(2, res + 3)))
    signs = rng.choice([-1.0, 1.0], len(stops) - 1)
    Tf = stopping_transform(f, stops, signs)
    nf = lp_norm_weighted(f, w, p)
    return [("stopping_transform", lp_norm_weighted(Tf, w, p) / nf)], []


def trial_tree(rng, res: int, index: int):
    """Tree-estimate ratio for s = 1 and s = r'."""
    r = (3.0, 4.0)[index % 2]
    alpha = (-0.5, 0.0, 0.5)[(index // 2) % 3]
    w = make_weight(alpha, res)
    T = random_tree(rng, res)
    f = random_function(rng, res)
    g = signed_indicator(rng, random_set(rng, res))
    lin = linearize(OperatorInstance(T.members, r), f)
    out = []
    for key, s in (("tree_est_s1", 1.0), ("tree_est_srp", conjugate(r))):
        try:
            out.append((key, tree_ratio(T, f, g, lin, w, s)))
        except DegenerateTree:
            pass
    return out, []


def lambda_grid(scale: float):
    """Jump thresholds 2^(j/2) scale, j = -12..4 (2^-6 scale up to 4 scale)."""
    return [scale * 2.0 ** (j / 2) for j in range(-12, 5)]


def trial_lepingle(rng, res: int, index: int):
    """Weighted variation and jump ratios of the dyadic martingale."""
    alpha, p, r = LEPINGLE_GRID[index % len(LEPINGLE_GRID)]
    w = make_weight(alpha, res)
    f = random_function(rng, res)
    nf = lp_norm_weighted(f, w, p)
    V = martingale_variation_field(f, r)
    V2 = martingale_variation_field(f, 2.0)
    Vr_big = martingale_variation_field(f, 2 * r)
    best_jump = 0.0
    jumps_ok = True
    for lam in lambda_grid(float(np.max(np.abs(f.values)))):
        field_ = jump_count_field(f, lam).values
        best_jump = max(best_jump, lp_norm_weighted(lam * np.sqrt(field_), w, p) / nf)
        jumps_ok &= bool(np.all(lam * np.sqrt(field_) <= V2.values + 1e-12))
    out = [("lepingle_var", lp_norm_weighted(V, w, p) / nf), ("lepingle_jump", best_jump)]
    checks = [("variation monotone in r", bool(np.all(Vr_big.values <= V.values + 1e-12) and
                                               np.all(V.values <= V2.values + 1e-12))),
              ("jump count below V^2", jumps_ok)]
    return out, checks


def trial_restricted(rng, res: int, index: int):
    """B_P(f, g) / (w(F)^(1/p) w(G)^(1-1/p)) with |f| <= 1_F~, g = 1_G~."""
    q, p, r = THEOREM_GRID[index % len(THEOREM_GRID)]
    alpha = theorem_alphas(q)[(index // len(THEOREM_GRID)) % 3]
    w = make_weight(alpha, res)
    F, G = random_set(rng, res), random_set(rng, res)
    ms = major_subsets(F, G, w, q, r)
    checks = [("major subsets", w.mass(ms.F) > w.mass(F) / 2 and w.mass(ms.G) > w.mass(G) / 2)]
    f = signed_indicator(rng, ms.F)
    g = DyadicFunction(ms.G.astype(np.float64))
    inst = OperatorInstance(random_bitiles(rng, res), r)
    lin = linearize(inst, f)
    val = bilinear_form(inst, f, g, lin, w)
    return [("restricted", float(abs(val)) / (w.mass(F) ** (1 / p) * w.mass(G) ** (1 - 1 / p)))], checks


def trial_direct(rng, res: int, index: int):
    """||V^r(S_N f)||_{L^p(w)} / ||f||_{L^p(w)} over the theorem grid."""
    q, p, r = THEOREM_GRID[index % len(THEOREM_GRID)]
    alpha = theorem_alphas(q)[(index // len(THEOREM_GRID)) % 3]
    w = make_weight(alpha, res)
    f = random_function(rng, res) if (index // 15) % 2 == 0 else signed_indicator(rng, random_set(rng, res))
    V = variational_partial_sums(f, r)
    Vbig = variational_partial_sums(f, 2 * r)
    Vinf = variational_partial_sums(f, np.inf).values
    S = partial_sum_ladder(f)
    checks = [("variation monotone in r", bool(np.all(Vbig.values <= V.values + 1e-12))),
              ("V^inf dominates the maximal partial sum",
               bool(np.all(Vinf >= np.abs(S).max(axis=0) - np.abs(S[0]) - 1e-12)))]
    return [("direct_variation", lp_norm_weighted(V, w, p) / lp_norm_weighted(f, w, p))], checks


@dataclass(frozen=True)
class Suite:
    name: str
    trial: object
    res: tuple
    trials: int


SUITES = {
    "selection": Suite("selection", trial_selection, RES_RANGE, 400),
    "size": Suite("size", trial_size, RES_RANGE, 300),
    "stopping": Suite("stopping", trial_stopping, RES_RANGE, 300),
    "tree": Suite("tree", trial_tree, RES_RANGE, 400),
    "lepingle": Suite("lepingle", trial_lepingle, RES_RANGE, 405),
    "restricted": Suite("restricted", trial_restricted, RES_RANGE, 300),
    "direct": Suite("direct", trial_direct, RES_RANGE, 300),
}


# -- runner ----------------------------------------------------------------

@dataclass
class TrialResult:
    trial: int
    seed: int
    res: int
    measurements: list
    checks: list


@dataclass
class SuiteResult:
    name: str
    seed: int
    results: list = field(default_factory=list)
    wall_time: float = 0.0

    def ratios(self) -> dict:
        out: dict = {}
        for t in self.results:
            for key, val in t.measurements:
                out.setdefault(key, []).append(val)
        return out

    def maxima(self) -> dict:
        return {k: max(v) for k, v in self.ratios().items()}

    def failed_checks(self) -> list:
        return [(t.trial, t.seed, name) for t in self.results for name, ok in t.checks if not ok]


def map_trials(fn, seed: int, trials: int, workers: int = 1) -> list:
    """Apply ``fn(trial_index)`` to every trial, results in trial order."""
    if workers <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(trials)))


def run_suite(name: str, seed: int, trials: int | None = None, workers: int = 1,
              res: tuple | None = None) -> SuiteResult:
    suite = SUITES[name]
    trials = suite.trials if trials is None else trials
    res_list = suite.res if res is None else res

    def one(i):
        rs = res_list[i % len(res_list)]
        meas, checks = suite.trial(trial_rng(seed, i), rs, i // len(res_list))
        return TrialResult(i, trial_seed(seed, i), rs, meas, checks)

    t0 = time.perf_counter()
    results = map_trials(one, seed, trials, workers)
    return SuiteResult(name, seed, results, time.perf_counter() - t0)


# -- calibration file ------------------------------------------------------

def default_calibration_path():
    return resources.files("walsh_lab").joinpath("data/calibration.txt")


def read_calibration(path=None) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    text = (Path(path).read_text() if path is not None else default_calibration_path().read_text())
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"calibration line {lineno}: expected key=value")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ValueError(f"calibration line {lineno}: bad number {val.strip()!r}") from None
    return out


def _round_up(x: float, digits: int = 3) -> float:
    if x <= 0:
        return 0.0
    e = math.floor(math.log10(x)) - digits + 1
    return math.ceil(x / 10 ** e) * 10 ** e


def format_calibration(constants: dict, seed: int, trials: dict) -> str:
    lines = ["# Empirical constants: maximum ratio per quantity over a calibration sweep",
             f"# (seed {seed}; trials {', '.join(f'{k}={v}' for k, v in trials.items())}).",
             f"# Checks assert observed ratio <= {HEADROOM} x constant.", ""]
    for key in sorted(constants):
        lines.append(f"{key}={_round_up(constants[key]):.6g}")
    return "\n".join(lines) + "\n"


def calibrate(seed: int = CALIBRATION_SEED, workers: int = 1, scale: float = 1.0) -> tuple[dict, dict]:
    constants, trials = {}, {}
    for name, suite in SUITES.items():
        n = max(1, int(suite.trials * scale))
        trials[name] = n
        for key, val in run_suite(name, seed, n, workers).maxima().items():
            constants[key] = max(constants.get(key, 0.0), val)
    return constants, trials


def compare(maxima: dict, calibration: dict, headroom: float = HEADROOM) -> list:
    """(key, observed, bound, passed) for every measured key."""
    out = []
    for key in sorted(maxima):
        if key not in calibration:
            out.append((key, maxima[key], math.nan, False))
            continue
        bound = headroom * calibration[key]
        out.append((key, maxima[key], bound, bool(np.isfinite(maxima[key]) and maxima[key] <= bound)))
    return out
