#!/usr/bin/env python3
"""Iterate the purification map over D = 2..20 and a grid of Werner weights.

Prints one line per cell and the worst-case iteration count, and optionally
writes the table as CSV.  Also scans weights just above the separability
threshold, where convergence is slowest.

    python scripts/purification_grid.py --out grid.csv
"""
import argparse
import csv
import time

from quditxor.purify import PurifyConfig, run_purification, separability_threshold


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dmin", type=int, default=2)
    ap.add_argument("--dmax", type=int, default=20)
    ap.add_argument("--max-iters", type=int, default=500)
    ap.add_argument("--target", type=float, default=0.999)
    ap.add_argument("--near", default="0.001,0.005,0.01,0.02",
                    help="offsets above lambda_D for the near-threshold scan")
    ap.add_argument("--out")
    args = ap.parse_args()

    offsets = [float(x) for x in args.near.split(",")]
    rows = []
    t0 = time.time()
    for D in range(args.dmin, args.dmax + 1):
        lam_d = separability_threshold(D)
        grid = sorted({*(lam_d + o for o in offsets), 0.25, 0.5, 0.75, 0.95})
        for lam in grid:
            if not lam_d < lam <= 1:
                continue
            tr = run_purification(PurifyConfig(D=D, lam=lam, max_iters=args.max_iters,
                                               fidelity_target=args.target))
            rows.append((D, lam, lam - lam_d, tr.converged, tr.iterations_used, tr.final_fidelity))
            print(f"D={D:2d} lam={lam:.4f} (+{lam - lam_d:.4f})  "
                  f"{'converged' if tr.converged else 'STALLED  '} "
                  f"iters={tr.iterations_used:4d}  F={tr.final_fidelity:.6f}")

    done = [r for r in rows if r[3]]
    print(f"\n{len(done)}/{len(rows)} cells converged in {time.time() - t0:.1f}s; "
          f"worst iteration count {max(r[4] for r in done) if done else 'n/a'}")
    for r in rows:
        if not r[3]:
            print(f"  not converged: D={r[0]} lam={r[1]:.4f} final F={r[5]:.6f}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["D", "lambda", "offset", "converged", "iterations_used", "final_fidelity"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
