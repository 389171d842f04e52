#!/usr/bin/env python3
"""Recover the generating rules of a synthetic dataset, end to end.

The data contains nothing but three distinct 9-spin states drawn with
probabilities 0.2 / 0.3 / 0.5. The pipeline discovers that seven
independent parity statements hold with probability one (they pin the
three states down to a 2-dimensional pattern space), and fits the three
probabilities in the remaining rank-2 block. That is a complete, exact
description of the generator.
"""

import numpy as np

import mcmselect as M

STATES = ["000011011", "110110000", "101000101"]
PROBS = [0.2, 0.3, 0.5]


def parse(bits: str) -> int:
    return sum(1 << i for i, c in enumerate(bits) if c == "1")


def main() -> None:
    print("generating 100000 observations of n=9 spins from 3 hidden states")
    d = M.generate_synthetic([parse(s) for s in STATES], PROBS,
                             100000, seed=42, n=9)
    print(f"distinct states observed: {len(d.counts)}")

    print("\nsearching all 511 operators for the best independent basis...")
    basis = M.best_im_exhaustive(d)
    for op, bias in zip(basis.operators, basis.biases):
        tag = "  <- holds on every row" if abs(bias) == 1.0 else ""
        print(f"  {op.to_string()}  bias {bias:+.4f}{tag}")

    print("\nscanning all 21147 partitions of the basis...")
    structure, report = M.best_mcm_exhaustive(d, basis)
    print(f"best structure: {len(structure.blocks)} components, "
          f"K = {report.K} interactions")
    print(f"log-evidence      {report.total_log_evidence:.3f}")
    print(f"max log-likelihood {report.max_log_likelihood:.3f}")

    fitted = M.fit_mcm(d, basis, structure)
    for block, q in zip(structure.blocks, fitted.q_tables):
        if block.rank > 1:
            print(f"\nfitted pattern probabilities of block {block.members}:")
            for p, prob in enumerate(q):
                bits = format(p, f"0{block.rank}b")[::-1]
                print(f"  pattern {bits}: {prob:.4f}")

    print("\nthe fitted block reproduces the planted (0, 0.2, 0.3, 0.5);")
    print("sampling 5 new rows from the fitted model:")
    for x in M.sample_mcm(fitted, seed=7, count=5):
        print("  " + M.state_to_string(x, 9))


if __name__ == "__main__":
    main()
