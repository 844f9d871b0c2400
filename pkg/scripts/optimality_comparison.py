#!/usr/bin/env python3
"""Sweep the access-degree comparison across user counts.

For each K the table lists, per access degree L, the best known rate at
cache memory M = N/K next to the rate this scheme achieves, flagging exact
matches.  A summary counts matches and gaps over the whole sweep.  Example:

    python scripts/optimality_comparison.py --k-min 4 --k-max 24
    python scripts/optimality_comparison.py --k-max 60 --csv table.csv
"""

from __future__ import annotations

import argparse
import csv
import sys
from fractions import Fraction

from cachecode import optimality_table


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k-min", type=int, default=4)
    parser.add_argument("--k-max", type=int, default=20)
    parser.add_argument("--csv", default=None, help="also write the rows to this file")
    parser.add_argument("--gaps-only", action="store_true",
                        help="print only rows where the scheme misses the optimum")
    args = parser.parse_args(argv)
    if args.k_min < 4 or args.k_max < args.k_min:
        parser.error("need 4 <= k-min <= k-max")

    rows = []
    for K in range(args.k_min, args.k_max + 1):
        for row in optimality_table(K):
            rows.append((K, row))

    matches = sum(1 for _, row in rows if row.matches)
    print(f"{'K':>4} {'L':>4}  {'row':<7} {'optimal':>10} {'achieved':>10}  match")
    for K, row in rows:
        if args.gaps_only and row.matches:
            continue
        print(f"{K:>4} {row.access_degree:>4}  {row.label:<7} "
              f"{str(row.optimal_rate):>10} {str(row.new_rate):>10}  "
              f"{'yes' if row.matches else 'no'}")
    print(f"\n{matches}/{len(rows)} rows meet the best known rate exactly")

    gaps = [(K, row) for K, row in rows if not row.matches]
    if gaps:
        worst_K, worst = max(
            gaps, key=lambda item: item[1].new_rate - item[1].optimal_rate
        )
        print(f"largest gap: K={worst_K} L={worst.access_degree} "
              f"({worst.new_rate} achieved vs {worst.optimal_rate} optimal, "
              f"+{Fraction(worst.new_rate - worst.optimal_rate)})")

    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["K", "L", "label", "rate_optimal", "rate_new", "match"])
            for K, row in rows:
                writer.writerow([
                    K, row.access_degree, row.label,
                    str(row.optimal_rate), str(row.new_rate),
                    "yes" if row.matches else "no",
                ])
        print(f"wrote {len(rows)} rows to {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
