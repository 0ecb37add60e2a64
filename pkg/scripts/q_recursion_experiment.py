#!/usr/bin/env python3
"""Estimate the per-value query counts Q(t, b) along the lift chain of the
randomized evaluator and check the level-to-level recursion.

Prints one row per inequality with the literal verdict and the verdict under
the differing-block allowance (the literal factor-2 step is provably
unattainable at alternating levels; see notes in sabotage.check_recursions).

Usage:
    python scripts/q_recursion_experiment.py --depth 8 --samples 100000
"""

import argparse
import sys

import numpy as np

from qclab import sabotage


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=20240809)
    ap.add_argument("--run-on", choices=("x", "y"), default="x")
    args = ap.parse_args(argv)

    estimates = {}
    for t in range(args.depth + 1):
        seed = int(np.random.SeedSequence(args.seed, spawn_key=(t,)).generate_state(1)[0])
        estimates[t] = sabotage.estimate_sep_counts(
            "saks_wigderson", args.depth, t, args.samples, seed, run_on=args.run_on
        )
        e0, e1 = estimates[t]
        print(f"t={t}: Q(t,0) = {e0.mean:8.3f} +- {e0.half_width_95:.3f}   "
              f"Q(t,1) = {e1.mean:8.3f} +- {e1.half_width_95:.3f}")

    rep = sabotage.check_recursions(estimates)
    print("\nbase cases (exhaustive zero-error trees):",
          {k: str(v) for k, v in rep.base_cases.items()})
    for row in rep.rows:
        flag = "ok" if row["ok"] else "FAIL"
        cflag = "ok" if row["ok_corrected"] else "FAIL"
        print(f"{row['name']:34s} lhs={row['lhs']:8.3f} rhs={row['rhs']:8.3f} "
              f"slack={row['slack']:.3f}  literal={flag}  corrected={cflag}")
    print(f"\nliteral: {rep.ok}  corrected: {rep.corrected_ok}  "
          f"alpha = {sabotage.spectral_alpha():.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
