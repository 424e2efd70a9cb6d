"""Check the stock suite against the qualitative findings the acceptance
suite asserts, printing every indicator. Used to freeze landscape knobs."""

import argparse
import time

import numpy as np

from cashlab.harness import bracket_win_counts, export_loss_matrix, run_suite
from cashlab.stats import compare_pipeline
from cashlab.suites import (
    STOCK_SUITE_SEED,
    bandit_scheme_family,
    halving_scheme_family,
    stock_suite,
)


def report_halving(store):
    ok = True
    for split in ("validation", "generalization"):
        matrix = export_loss_matrix(store, split)
        result = compare_pipeline(matrix, alpha=0.05, correction="finner")
        ranks = dict(zip(matrix.method_names, result.ranks.average_ranks))
        print(f"  [{split}] ranks:", {k: round(v, 3) for k, v in ranks.items()})
        print(f"  [{split}] omnibus p = {result.omnibus.p_value:.3g}, halted = {result.halted}")
        for s in ("SH0", "SH1", "SH2"):
            better = ranks[f"{s}.W"] < ranks[s]
            ok &= better
            print(f"    {s}.W < {s}: {better}")
        sh2_vs_sh0 = ranks["SH2"] < ranks["SH0"]
        ok &= sh2_vs_sh0
        print(f"    SH2 < SH0: {sh2_vs_sh0}")
        if not result.halted:
            p = result.pvalues.adjusted_for("SH2.W", "SH0")
            ok &= p < 0.05
            print(f"    adj p(SH2.W vs SH0) = {p:.3g} (< 0.05: {p < 0.05})")
    return ok


def report_bandit(store):
    ok = True
    for split in ("validation", "generalization"):
        matrix = export_loss_matrix(store, split)
        result = compare_pipeline(matrix, alpha=0.05, correction="finner")
        ranks = dict(zip(matrix.method_names, result.ranks.average_ranks))
        print(f"  [{split}] ranks:", {k: round(v, 3) for k, v in ranks.items()})
        if not result.halted:
            p = result.pvalues.adjusted_for("HB.W", "SH2.W")
            in_band = p > 0.05 or ranks["HB.W"] < ranks["SH2.W"]
            ok &= in_band
            print(f"    adj p(HB.W vs SH2.W) = {p:.3g}, HB.W in band: {in_band}")
    wins = bracket_win_counts(store)
    e_u = wins.entropy("uniform")
    e_w = wins.entropy("weighted")
    print(f"  bracket wins uniform  {wins.counts['uniform']} entropy {e_u:.4f}")
    print(f"  bracket wins weighted {wins.counts['weighted']} entropy {e_w:.4f}")
    ok &= e_w >= e_u
    print(f"  entropy(weighted) >= entropy(uniform): {e_w >= e_u}")
    return ok


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--problems", type=int, default=50)
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--noise", type=float, default=None)
    args = parser.parse_args()

    kwargs = {}
    if args.noise is not None:
        kwargs["noise_scale"] = args.noise
    t0 = time.time()
    suite = stock_suite(n_problems=args.problems, reps=args.reps, **kwargs)
    print(f"suite: {args.problems} problems x {args.reps} reps "
          f"(noise {suite.problems[0].noise_scale})")

    store33 = run_suite(suite, halving_scheme_family(33), seed=STOCK_SUITE_SEED)
    print(f"\nhalving family at budget 33 ({time.time() - t0:.0f}s)")
    ok33 = report_halving(store33)

    store99 = run_suite(suite, bandit_scheme_family(99), seed=STOCK_SUITE_SEED)
    print(f"\nbandit family at budget 99 ({time.time() - t0:.0f}s)")
    ok99 = report_bandit(store99)

    print(f"\nALL CHECKS: {'PASS' if ok33 and ok99 else 'FAIL'} "
          f"({time.time() - t0:.0f}s total)")


if __name__ == "__main__":
    main()
