#!/usr/bin/env python3
"""How many models of each family exist, as the system grows.

Families: independent models (IM), single complete components (SCM),
everything built from independent complete components (MCM), the subset of
those sharing one fixed preferred basis (MCM*), set partitions (Bell), and
field-plus-pairwise models for comparison. The point of the table: the
full family is astronomically large, but the slice sharing one preferred
basis (the slice an exhaustive search actually scans) grows only like the
Bell numbers.
"""

import math

import mcmselect as M


def main() -> None:
    print(f"{'n':>3} {'IM':>22} {'SCM':>22} {'MCM':>26} "
          f"{'MCM*':>12} {'Bell':>12} {'pairwise':>16}")
    for n in range(1, 13):
        print(f"{n:>3} {M.count_im_all(n):>22} {M.count_icc_all(n):>22} "
              f"{M.count_mcm_all(n):>26} {M.count_mcm_star(n):>12} "
              f"{M.bell(n):>12} {M.pairwise_model_count(n):>16}")

    n = 9
    print(f"\nat n = {n}:")
    print(f"  all spin models:      2^(2^{n}-1) ~ 10^"
          f"{int(((1 << n) - 1) * math.log10(2))}")
    print(f"  MCM family:           ~10^{len(str(M.count_mcm_all(n))) - 1}")
    print(f"  sharing one basis:    {M.count_mcm_star(n)} "
          f"({M.bell(n)} of full rank)")
    print("\nexact class example: components of ranks 2+2+4 over n=8 spins:")
    print(f"  {M.count_mcm_class(8, {2: 2, 4: 1})} distinct models")


if __name__ == "__main__":
    main()
