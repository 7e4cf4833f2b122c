"""walsh-lab: run invariant suites, variational-norm sweeps, level
decompositions and weighted Lepingle sweeps from the command line.

Exit codes: 0 success, 1 invariant or calibration failure, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import inspect
import io
import sys
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .carleson import OperatorInstance, direct_ratio, linearize, major_subsets
from .dyadic import MAX_RES, DyadicFunction, DyadicInterval, haar
from .experiments import (HEADROOM, lambda_grid, exponent_violation, map_trials, read_calibration)
from .generators import make_weight, parse_weight, random_function, random_set, signed_indicator, trial_rng, trial_seed
from .phase_plane import BitileParseError, parse_bitiles
from .selection import level_decomposition
from .svg import write_line_plot
from .variation import jump_ratio, lepingle_ratio
from .verify import CHECKS
from .walsh import walsh

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    seed: int
    res: int
    p: float
    q: float
    r: float
    alpha: float
    trials: int
    workers: int
    calibration: dict


@dataclass
class RunReport:
    ratios: dict
    wall_time: float

    def summary(self, key: str) -> dict:
        v = np.asarray(self.ratios[key], dtype=np.float64)
        return {"max": float(v.max()), "median": float(np.median(v)), "p95": float(np.percentile(v, 95))}


# -- argument handling --------------------------------------------------------

def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="run seed (u64); trial i uses a sub-seed derived from (seed, i)")
    common.add_argument("--res", type=int, default=None, help=f"dyadic resolution (<= {MAX_RES})")
    common.add_argument("--p", type=float, default=None, help="Lebesgue exponent")
    common.add_argument("--q", type=float, default=None, help="A_q class of the weight")
    common.add_argument("--r", type=float, default=None, help="variation exponent")
    common.add_argument("--weight", default="constant", help="constant | power:a  (w(x) = x^a)")
    common.add_argument("--trials", type=int, default=None, help="number of random trials (>= 1)")
    common.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    common.add_argument("--svg", default=None, help="optional SVG plot path")
    common.add_argument("--calibration", default=None, help="calibration constants file (key=value lines)")
    common.add_argument("--workers", type=int, default=1, help="worker threads (output does not depend on this)")

    parser = argparse.ArgumentParser(prog="walsh-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run every invariant suite")
    v.add_argument("--inject-fault", choices=sorted(CHECKS), default=None,
                   help="perturb one check so that it must fail (tests the harness)")
    n = sub.add_parser("norm", parents=[common], help="variational partial-sum ratio sweep")
    n.add_argument("--function", default="random", help="random | walsh:N | haar")
    d = sub.add_parser("decompose", parents=[common], help="level decomposition of a bitile file")
    d.add_argument("bitiles", nargs="?", default=None, help="bitile file (default: bundled example)")
    d.add_argument("--mode", choices=("auto", "case1", "case2"), default="auto")
    le = sub.add_parser("lepingle", parents=[common], help="weighted Lepingle ratio sweep")
    le.add_argument("--function", default="random", help="random | walsh:N | haar")
    return parser


def _check_common(args, default_res: int, default_trials: int):
    res = default_res if args.res is None else args.res
    if not 0 <= res <= MAX_RES:
        raise UsageError(f"--res {res} outside [0, {MAX_RES}] (resolution cap exceeded)")
    trials = default_trials if args.trials is None else args.trials
    if trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    try:
        alpha = parse_weight(args.weight)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if alpha <= -1:
        raise UsageError(f"weight x^{alpha:g} is not locally integrable (need a > -1)")
    try:
        calib = read_calibration(args.calibration)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read calibration: {exc}") from None
    return res, trials, alpha, calib


def _test_function(spec: str, rng, res: int) -> DyadicFunction:
    if spec == "random":
        return random_function(rng, res)
    if spec == "haar":
        if res < 1:
            raise UsageError("the Haar function needs --res >= 1")
        return haar(DyadicInterval(0, 0), res)
    if spec.startswith("walsh:"):
        try:
            return walsh(int(spec.split(":", 1)[1]), res)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"unknown --function {spec!r}")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    text = buf.getvalue()
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def _calibration_verdict(report: RunReport, calib: dict, keys: dict) -> bool:
    ok = True
    for key, cal_key in keys.items():
        s = report.summary(key)
        if cal_key not in calib:
            print(f"{key}: max {s['max']:.4g} median {s['median']:.4g} p95 {s['p95']:.4g} (no calibrated constant)",
                  file=sys.stderr)
            continue
        bound = HEADROOM * calib[cal_key]
        verdict = "PASS" if s["max"] <= bound else "FAIL"
        ok &= verdict == "PASS"
        print(f"{verdict} {key}: max {s['max']:.4g} median {s['median']:.4g} p95 {s['p95']:.4g} "
              f"(bound {bound:.4g} = {HEADROOM} x {cal_key})", file=sys.stderr)
    return ok


# -- commands ----------------------------------------------------------------

def cmd_verify(args) -> int:
    res, trials, _, _ = _check_common(args, MAX_RES, 1)
    ok = True
    for name, check in CHECKS.items():
        kwargs = {"fault": args.inject_fault == name}
        params = inspect.signature(check).parameters
        if "seed" in params:
            kwargs["seed"] = args.seed
        if args.trials is not None and "trials" in params:
            kwargs["trials"] = trials
        if name == "orthonormality":
            kwargs["max_res"] = res
        result = check(**kwargs)
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {name}: {result.instances} instances, {result.seconds:.1f}s")
        for sub_seed, detail in result.failures[:10]:
            replay = f" [replay sub-seed {sub_seed}]" if sub_seed is not None else ""
            print(f"    {detail}{replay}")
        ok &= result.passed
    return EXIT_OK if ok else EXIT_FAIL


def _theorem_config(args, res_default):
    res, trials, alpha, calib = _check_common(args, res_default, 100)
    p = 2.0 if args.p is None else args.p
    q = 1.1 if args.q is None else args.q
    r = 3.0 if args.r is None else args.r
    bad = exponent_violation(p, q, r)
    if bad is not None:
        raise UsageError(f"exponents p={p:g}, q={q:g}, r={r:g} violate the hypothesis {bad}")
    if not alpha < q - 1:
        raise UsageError(f"weight x^{alpha:g} is not in A_q for q={q:g} (need -1 < a < q - 1)")
    return ExperimentConfig(args.seed, res, p, q, r, alpha, trials, args.workers, calib)


def cmd_norm(args) -> int:
    cfg = _theorem_config(args, 6)
    w = make_weight(cfg.alpha, cfg.res)
    t0 = time.perf_counter()

    def one(i):
        f = _test_function(args.function, trial_rng(cfg.seed, i), cfg.res)
        return direct_ratio(f, w, cfg.p, cfg.r)

    ratios = map_trials(one, cfg.seed, cfg.trials, cfg.workers)
    report = RunReport({"ratio": ratios}, time.perf_counter() - t0)
    rows = [[i, trial_seed(cfg.seed, i), _fmt(cfg.p), _fmt(cfg.q), _fmt(cfg.r), _fmt(cfg.alpha), cfg.res, _fmt(x)]
            for i, x in enumerate(ratios)]
    rows.append(["max", "", _fmt(cfg.p), _fmt(cfg.q), _fmt(cfg.r), _fmt(cfg.alpha), cfg.res, _fmt(max(ratios))])
    _write_csv(args.out, ["trial", "seed", "p", "q", "r", "alpha", "res", "ratio"], rows)
    if args.svg:
        xs, ys = [], []
        for res in range(1, cfg.res + 1):
            wr = make_weight(cfg.alpha, res)
            vals = [direct_ratio(_test_function(args.function, trial_rng(cfg.seed, i), res), wr, cfg.p, cfg.r)
                    for i in range(cfg.trials)]
            xs.append(res)
            ys.append(max(vals))
        write_line_plot(args.svg, {"max ratio": (xs, ys)}, title="variational partial-sum ratio",
                        xlabel="resolution", ylabel="max ||V^r S f|| / ||f||")
    ok = _calibration_verdict(report, cfg.calibration, {"ratio": "direct_variation"})
    return EXIT_OK if ok else EXIT_FAIL


def _bundled_example() -> str:
    return resources.files("walsh_lab").joinpath("data/example_bitiles.txt").read_text()


def cmd_decompose(args) -> int:
    try:
        text = _bundled_example() if args.bitiles is None else open(args.bitiles, encoding="utf-8").read()
    except OSError as exc:
        raise UsageError(f"cannot read bitile file: {exc}") from None
    try:
        bitiles = parse_bitiles(text)
    except BitileParseError as exc:
        raise UsageError(f"{args.bitiles or 'bundled example'}: {exc}") from None
    # smallest res with k + 1 <= res and 2^(k+1) (n+1) <= 2^res for every bitile
    needed = max([max(P.k + 1, (((P.n + 1) << (P.k + 1)) - 1).bit_length()) for P in bitiles], default=1)
    res, _, alpha, _ = _check_common(args, max(needed, 1), 1)
    for P in bitiles:
        if not P.resolvable(res):
            raise UsageError(f"bitile {P.k} {P.m} {P.n} is not resolvable at --res {res}")
    q = 1.5 if args.q is None else args.q
    r = 4.0 if args.r is None else args.r
    if not (q > 1 and r > 2 * q):
        raise UsageError(f"need q > 1 and r > 2q (got q={q:g}, r={r:g})")
    if not alpha < q - 1:
        raise UsageError(f"weight x^{alpha:g} is not in A_q for q={q:g} (need -1 < a < q - 1)")
    w = make_weight(alpha, res)
    rng = trial_rng(args.seed, 0)
    F, G = random_set(rng, res), random_set(rng, res)
    ms = major_subsets(F, G, w, q, r)
    f = signed_indicator(rng, ms.F)
    g = DyadicFunction(ms.G.astype(np.float64))
    mode = args.mode if args.mode != "auto" else f"case{ms.case}"
    lin = linearize(OperatorInstance(bitiles, r), f)
    report = level_decomposition(bitiles, f, g, lin, w, q, r, mode=mode, F=F, G=G)
    text = report.to_csv()
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    for L in report.levels:
        tag = f"n={L.n}" + ("" if L.k is None else f" k={L.k}")
        print(f"level {tag}: {len(L.trees)} trees, sum w(I_T) = {L.mass_w:.4g} (budget 2^n = {L.mass_target:.4g})",
              file=sys.stderr)
    members = report.members()
    partition_ok = sorted(members) == sorted(set(bitiles)) and len(members) == len(set(bitiles))
    print(f"{mode}: {len(set(bitiles))} bitiles in {len(report.levels)} levels; partition "
          f"{'verified' if partition_ok else 'BROKEN'}", file=sys.stderr)
    if args.svg and report.levels:
        xs = list(range(len(report.levels)))
        write_line_plot(args.svg, {"size achieved": (xs, [L.size_achieved for L in report.levels]),
                                   "size target": (xs, [L.size_target for L in report.levels]),
                                   "density achieved": (xs, [L.density_achieved for L in report.levels]),
                                   "density target": (xs, [L.density_target for L in report.levels])},
                        title=f"level decomposition ({mode})", xlabel="level index", ylabel="value")
    return EXIT_OK if partition_ok else EXIT_FAIL


def cmd_lepingle(args) -> int:
    res, trials, alpha, calib = _check_common(args, 6, 100)
    p = 2.0 if args.p is None else args.p
    r = 3.0 if args.r is None else args.r
    if not p > 1:
        raise UsageError(f"the weighted Lepingle inequality needs p > 1 (got p={p:g})")
    if not r > 2:
        raise UsageError(f"the weighted Lepingle inequality needs r > 2 (got r={r:g})")
    if not alpha < p - 1:
        print(f"warning: x^{alpha:g} is not in A_p for p={p:g}; no bound is claimed", file=sys.stderr)
    w = make_weight(alpha, res)
    t0 = time.perf_counter()

    def one(i):
        f = _test_function(args.function, trial_rng(args.seed, i), res)
        scale = float(np.max(np.abs(f.values)))
        rj = max(jump_ratio(f, w, p, lam) for lam in lambda_grid(scale))
        return lepingle_ratio(f, w, p, r), rj

    pairs = map_trials(one, args.seed, trials, args.workers)
    report = RunReport({"ratio_var": [a for a, _ in pairs], "ratio_jump": [b for _, b in pairs]},
                       time.perf_counter() - t0)
    rows = [[i, _fmt(p), _fmt(r), _fmt(alpha), res, _fmt(a), _fmt(b)] for i, (a, b) in enumerate(pairs)]
    _write_csv(args.out, ["trial", "p", "r", "alpha", "res", "ratio_var", "ratio_jump"], rows)
    if args.svg:
        xs = list(range(trials))
        write_line_plot(args.svg, {"ratio_var": (xs, report.ratios["ratio_var"]),
                                   "ratio_jump": (xs, report.ratios["ratio_jump"])},
                        title="weighted Lepingle ratios", xlabel="trial", ylabel="ratio")
    ok = _calibration_verdict(report, calib, {"ratio_var": "lepingle_var", "ratio_jump": "lepingle_jump"})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "norm": cmd_norm, "decompose": cmd_decompose, "lepingle": cmd_lepingle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"walsh-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
