"""Search for the most biased complete set of independent operators.

Over a fixed dataset, the best independent model is the set of n
GF(2)-independent operators with the largest absolute empirical means
(biases): its log-likelihood is -N * sum_a H[m_a], where H is the binary
entropy of a +/-1 variable with mean m. Greedy selection in decreasing
|bias| order with an independence filter attains the optimum, because
GF(2) independence is a matroid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .data import Dataset, operator_biases
from .errors import CapExceededError, DatasetFormatError, DimensionMismatchError
from .gf2 import GaugeTransform, Gf2Span, Operator, gf2_rank

DEFAULT_EXHAUSTIVE_IM_CAP = 25


def bias_entropy(m: float) -> float:
    """Entropy (nats) of a +/-1 variable with mean m; 0 at m = +/-1."""
    if not -1.0 <= m <= 1.0:
        raise ValueError(f"bias must lie in [-1, 1], got {m}")
    p = 0.5 * (1.0 + m)
    q = 1.0 - p
    return float(-(xlogy(p, p) + xlogy(q, q)))


def im_log_likelihood(biases: Sequence[float], N: int) -> float:
    """Max log-likelihood of an independent model with the given biases."""
    return -N * sum(bias_entropy(m) for m in biases)


@dataclass(frozen=True)
class Basis:
    """n independent operators ordered by decreasing |bias|."""

    operators: tuple[Operator, ...]
    biases: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.operators:
            raise ValueError("basis must contain at least one operator")
        n = self.operators[0].n
        if len(self.operators) != n:
            raise ValueError(
                f"basis has {len(self.operators)} operators, expected n={n}")
        if len(self.biases) != n:
            raise ValueError("one bias per operator required")
        if gf2_rank(self.operators) != n:
            raise ValueError("basis operators are dependent mod 2")
        mags = [abs(b) for b in self.biases]
        if any(mags[i] < mags[i + 1] - 1e-12 for i in range(n - 1)):
            raise ValueError("biases must be sorted by non-increasing magnitude")

    @property
    def n(self) -> int:
        return len(self.operators)

    @cached_property
    def transform(self) -> GaugeTransform:
        return GaugeTransform(columns=self.operators)


def _bias_order(masks: Sequence[int], biases: np.ndarray, n: int) -> np.ndarray:
    """Sort order: |bias| descending, then interaction order, then mask.

    Ties are broken toward lower interaction order and smaller mask so the
    search result is reproducible.
    """
    orders = np.fromiter((m.bit_count() for m in masks), dtype=np.int64,
                         count=len(masks))
    neg_abs = -np.abs(biases)
    if n <= 64:
        key_lo = np.fromiter(masks, dtype=np.uint64, count=len(masks))
        return np.lexsort((key_lo, orders, neg_abs))
    key_lo = np.fromiter((m & ((1 << 64) - 1) for m in masks), dtype=np.uint64,
                         count=len(masks))
    key_hi = np.fromiter((m >> 64 for m in masks), dtype=np.uint64,
                         count=len(masks))
    return np.lexsort((key_lo, key_hi, orders, neg_abs))


def _greedy_independent(masks_sorted: Sequence[int], n: int) -> list[int]:
    """Positions of the first n independent masks in priority order."""
    span = Gf2Span()
    chosen: list[int] = []
    for pos, m in enumerate(masks_sorted):
        if span.add(m):
            chosen.append(pos)
            if len(chosen) == n:
                return chosen
    raise ValueError("candidate pool does not span the full space")


def basis_from_operators(d: Dataset, ops: Sequence[Operator]) -> Basis:
    """Build a Basis from unordered operators, computing and sorting biases."""
    masks = [op.mask for op in ops]
    biases = operator_biases(d, masks)
    order = _bias_order(masks, biases, d.n)
    return Basis(
        operators=tuple(Operator(masks[i], d.n) for i in order),
        biases=tuple(float(biases[i]) for i in order),
    )


def identity_basis(d: Dataset) -> Basis:
    """The basis of single-spin operators, ordered by bias magnitude."""
    return basis_from_operators(d, [Operator.single(i, d.n) for i in range(d.n)])


def all_operator_biases(d: Dataset) -> np.ndarray:
    """Biases of all 2^n operators at once, indexed by mask.

    Builds the empirical state distribution table and applies the fast
    parity (Walsh) transform, so the cost is O(n 2^n) instead of O(4^n).
    """
    n = d.n
    if n > 26:
        raise CapExceededError(f"bias table for n={n} needs 2^{n} floats")
    table = np.zeros(1 << n, dtype=np.float64)
    lo, _, mult, _ = d._distinct
    np.add.at(table, lo.astype(np.int64), mult.astype(np.float64))
    h = 1
    size = 1 << n
    while h < size:
        t = table.reshape(-1, 2, h)
        a = t[:, 0, :].copy()
        t[:, 0, :] = a + t[:, 1, :]
        t[:, 1, :] = a - t[:, 1, :]
        h <<= 1
    return table / d.N


def best_im_exhaustive(d: Dataset, max_n: int = DEFAULT_EXHAUSTIVE_IM_CAP) -> Basis:
    """Best independent model by ranking all 2^n - 1 operators.

    Operators are sorted by decreasing |bias| and accepted greedily while
    independent of the ones already chosen, until n are found.
    """
    n = d.n
    if n > max_n:
        raise CapExceededError(
            f"exhaustive basis search over n={n} exceeds cap {max_n}")
    biases = all_operator_biases(d)[1:]
    masks = np.arange(1, 1 << n, dtype=np.uint64)
    orders = np.bitwise_count(masks)
    order = np.lexsort((masks, orders, -np.abs(biases)))
    chosen = _greedy_independent_array(masks[order], n)
    sel = order[chosen]
    return Basis(
        operators=tuple(Operator(int(masks[i]), n) for i in sel),
        biases=tuple(float(biases[i]) for i in sel),
    )


def _greedy_independent_array(masks_sorted: np.ndarray, n: int) -> list[int]:
    """Vectorized variant of _greedy_independent for uint64 mask arrays.

    Runs in-place Gaussian elimination over the whole pool: each accepted
    pivot clears its leading bit everywhere, so a candidate reduces to zero
    iff it depends on the accepted set.
    """
    reduced = masks_sorted.copy()
    chosen: list[int] = []
    start = 0
    one = np.uint64(1)
    while len(chosen) < n:
        nz = np.nonzero(reduced[start:])[0]
        if nz.size == 0:
            raise ValueError("candidate pool does not span the full space")
        pos = start + int(nz[0])
        chosen.append(pos)
        val = int(reduced[pos])
        bit = np.uint64(val.bit_length() - 1)
        hit = ((reduced >> bit) & one).astype(bool)
        reduced[hit] ^= np.uint64(val)
        start = pos + 1
    return chosen


def _products_up_to_order(masks: Sequence[int], max_order: int) -> list[int]:
    """All distinct nonzero XOR products of up to max_order of the masks."""
    from itertools import combinations

    seen: set[int] = {0}
    pool: list[int] = []
    idx = range(len(masks))
    for j in range(1, min(max_order, len(masks)) + 1):
        for comb in combinations(idx, j):
            m = 0
            for i in comb:
                m ^= masks[i]
            if m not in seen:
                seen.add(m)
                pool.append(m)
    return pool


def best_im_heuristic(
    d: Dataset,
    max_order: int,
    max_rounds: int = 100,
) -> tuple[Basis, int]:
    """Iterative basis improvement through bounded-order products.

    Starting from the original spin variables, each round forms all
    products of at most max_order current basis operators, then keeps the
    n most biased independent ones. Rounds repeat until the basis is
    stable as a set or max_rounds is hit; iterating can reach operators of
    any order even though each round is bounded. Returns the final basis
    and the number of rounds run.
    """
    if max_order < 1:
        raise ValueError("product order must be at least 1")
    n = d.n
    current = [1 << i for i in range(n)]
    rounds = 0
    while rounds < max_rounds:
        pool = _products_up_to_order(current, max_order)
        biases = operator_biases(d, pool)
        order = _bias_order(pool, biases, n)
        pool_sorted = [pool[i] for i in order]
        chosen = _greedy_independent(pool_sorted, n)
        new = [pool_sorted[i] for i in chosen]
        rounds += 1
        if set(new) == set(current):
            current = new
            break
        current = new
    return (
        basis_from_operators(d, [Operator(m, n) for m in current]),
        rounds,
    )


def save_basis(basis: Basis, path: str | Path, header: Sequence[str] = ()) -> None:
    """Write one `maskstring bias` line per operator."""
    with open(path, "w", encoding="ascii") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for op, bias in zip(basis.operators, basis.biases):
            fh.write(f"{op.to_string()} {bias!r}\n")


def load_basis(path: str | Path, d: Dataset | None = None) -> Basis:
    """Read a basis file; with a dataset, biases are recomputed from it."""
    ops: list[Operator] = []
    biases: list[float] = []
    n: int | None = None
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DatasetFormatError(
                    f"expected 'mask bias', got {line!r}", lineno)
            try:
                op = Operator.from_string(parts[0])
                bias = float(parts[1])
            except ValueError as exc:
                raise DatasetFormatError(str(exc), lineno) from None
            if n is None:
                n = op.n
            elif op.n != n:
                raise DatasetFormatError(
                    f"mask width {op.n} differs from previous {n}", lineno)
            ops.append(op)
            biases.append(bias)
    if not ops:
        raise DatasetFormatError(f"no operators in {path}")
    if d is not None:
        if d.n != ops[0].n:
            raise DimensionMismatchError(
                f"basis width {ops[0].n} does not match dataset width {d.n}")
        return basis_from_operators(d, ops)
    masks = [op.mask for op in ops]
    order = _bias_order(masks, np.asarray(biases), ops[0].n)
    return Basis(
        operators=tuple(ops[i] for i in order),
        biases=tuple(biases[i] for i in order),
    )
