#!/usr/bin/env python3
"""Dimension sweep for the matrix norm bounds and the rank-one ensemble."""

import argparse

import numpy as np

from itolab.randmat import (MatrixEnsemble, bound_latala, bound_entry_matrix,
                            rademacher_law, seginer_ensemble)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--samples", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    print(f"{'d':>4} {'entry lhs':>10} {'entry rhs':>10} {'latala ratio':>13} "
          f"{'seginer ratio':>14} {'(log d)^1/4':>12}")
    for d in args.dims:
        ens = MatrixEnsemble(d, d, 1, rademacher_law(), "entries")
        eb = bound_entry_matrix(ens, args.p, n_samples=args.samples, seed=args.seed)
        lb = bound_latala(ens, args.p, n_samples=args.samples, seed=args.seed)
        sg = seginer_ensemble(np.ones((d, d)), args.p, n_samples=args.samples,
                              seed=args.seed)
        print(f"{d:>4} {eb.lhs:>10.4f} {eb.rhs:>10.4f} "
              f"{lb.details['first_ratio']:>13.4f} {sg.details['ratio']:>14.4f} "
              f"{sg.details['log_quarter']:>12.4f}")


if __name__ == "__main__":
    main()
