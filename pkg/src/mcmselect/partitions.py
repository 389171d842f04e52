"""Best block structure over a fixed basis: exhaustive scan and greedy merge.

The exhaustive path walks every set partition of the basis indices in
restricted-growth-string order (Bell(n) of them) and lets each block
independently pick modeled or unmodeled, whichever has higher evidence;
that covers every rank-deficient structure as well, because an unmodeled
block of rank r is equivalent to r unmodeled singletons. The greedy path
starts from singletons and repeatedly applies the pairwise merge with the
highest resulting evidence, recording the whole merge trajectory.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .basis import Basis
from .data import DEFAULT_RANK_CAP, Dataset, block_patterns
from .errors import CapExceededError
from .evidence import (
    LOG_2,
    Block,
    EvidenceReport,
    McmStructure,
    _table_log_evidence,
    mcm_log_evidence,
)

DEFAULT_EXHAUSTIVE_MCM_CAP = 15


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """All restricted growth strings of length n in lexicographic order.

    A string a encodes the partition that puts i and j together iff
    a[i] == a[j]; a[0] = 0 and a[j] <= max(a[:j]) + 1.
    """
    if n < 1:
        raise ValueError("need at least one element")
    a = [0] * n
    # b[j] = max(a[:j]) + 1, the largest allowed value at position j
    b = [1] * n
    while True:
        yield tuple(a)
        j = n - 1
        while j >= 1 and a[j] == b[j]:
            j -= 1
        if j < 1:
            return
        a[j] += 1
        tail = b[j] + (1 if a[j] == b[j] else 0)
        for k in range(j + 1, n):
            a[k] = 0
            b[k] = tail


def enumerate_partitions(n: int) -> Iterator[list[list[int]]]:
    """All set partitions of {0..n-1}; Bell(n) of them, in RGS order."""
    for rgs in restricted_growth_strings(n):
        blocks: list[list[int]] = [[] for _ in range(max(rgs) + 1)]
        for i, lbl in enumerate(rgs):
            blocks[lbl].append(i)
        yield blocks


def _mask_members(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


class _BlockCache:
    """Memoized per-block evidence values, keyed by basis-index bitmask."""

    def __init__(self, d: Dataset, basis: Basis, rank_cap: int):
        self._d = d
        self._masks = [op.mask for op in basis.operators]
        self._rank_cap = rank_cap
        self._N = d.N
        self._pairs: dict[int, tuple[float, float]] = {}

    def pair(self, block_mask: int) -> tuple[float, float]:
        """(modeled, unmodeled) log-evidence of one block."""
        got = self._pairs.get(block_mask)
        if got is None:
            got = self._compute(block_mask)
            self._pairs[block_mask] = got
        return got

    def _compute(self, block_mask: int) -> tuple[float, float]:
        members = _mask_members(block_mask)
        r = len(members)
        unmodeled = -self._N * r * LOG_2
        if r > self._rank_cap:
            return (-math.inf, unmodeled)
        masks = [self._masks[i] for i in members]
        patterns, mult = block_patterns(self._d, masks)
        table = np.zeros(1 << r, dtype=np.int64)
        np.add.at(table, patterns, mult)
        return (_table_log_evidence(table, self._N, r), unmodeled)

    def best_value(self, block_mask: int) -> float:
        modeled, unmodeled = self.pair(block_mask)
        return modeled if modeled > unmodeled else unmodeled

    def modeled_flag(self, block_mask: int) -> bool:
        # Ties go to the unmodeled (parameter-free) description.
        modeled, unmodeled = self.pair(block_mask)
        return modeled > unmodeled

    def ensure(self, block_masks: Sequence[int], workers: int) -> None:
        missing = [m for m in block_masks if m not in self._pairs]
        if not missing:
            return
        if workers > 1 and len(missing) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for m, val in zip(missing, pool.map(self._compute, missing)):
                    self._pairs[m] = val
        else:
            for m in missing:
                self._pairs[m] = self._compute(m)

    def structure_for(self, block_masks: Sequence[int]) -> McmStructure:
        blocks = sorted(
            (Block(_mask_members(m), self.modeled_flag(m)) for m in block_masks),
            key=lambda b: b.members[0],
        )
        size = sum(b.rank for b in blocks)
        return McmStructure(n=self._d.n, basis_size=size, blocks=tuple(blocks))


def best_mcm_exhaustive(
    d: Dataset,
    basis: Basis,
    max_n: int = DEFAULT_EXHAUSTIVE_MCM_CAP,
    rank_cap: int = DEFAULT_RANK_CAP,
    workers: int = 1,
) -> tuple[McmStructure, EvidenceReport]:
    """Scan all Bell(n) partitions of the basis and return the argmax.

    Equal-evidence ties prefer fewer blocks, then the partition reached
    first in RGS order.
    """
    n = d.n
    if n > max_n:
        raise CapExceededError(
            f"exhaustive structure search over n={n} exceeds cap {max_n}")
    cache = _BlockCache(d, basis, rank_cap)
    if workers > 1:
        cache.ensure(list(range(1, 1 << n)), workers)
    best_total = -math.inf
    best_nb = n + 1
    best_masks: tuple[int, ...] = ()
    block_masks = [0] * n
    best_value = cache.best_value
    for rgs in restricted_growth_strings(n):
        nb = max(rgs) + 1
        for i in range(nb):
            block_masks[i] = 0
        for i, lbl in enumerate(rgs):
            block_masks[lbl] |= 1 << i
        total = 0.0
        for i in range(nb):
            total += best_value(block_masks[i])
        if total > best_total or (total == best_total and nb < best_nb):
            best_total = total
            best_nb = nb
            best_masks = tuple(block_masks[:nb])
    structure = cache.structure_for(best_masks)
    return structure, mcm_log_evidence(d, basis, structure, rank_cap)


@dataclass(frozen=True)
class MergeStep:
    """One state of the merge trajectory; merged is None for the start."""

    merged: tuple[tuple[int, ...], tuple[int, ...]] | None
    structure: McmStructure
    log_evidence: float


@dataclass(frozen=True)
class MergeTrace:
    """Full hierarchical merge trajectory, block count n down to 1."""

    steps: tuple[MergeStep, ...]

    def best(self) -> MergeStep:
        """Argmax step; equal evidence prefers fewer blocks (later step)."""
        top = self.steps[0]
        for step in self.steps[1:]:
            if step.log_evidence >= top.log_evidence:
                top = step
        return top

    def evidence_curve(self) -> list[tuple[int, float]]:
        """(number of blocks, log-evidence) along the trajectory."""
        return [(len(s.structure.blocks), s.log_evidence) for s in self.steps]


def best_mcm_greedy(
    d: Dataset,
    basis: Basis,
    rank_cap: int = DEFAULT_RANK_CAP,
    workers: int = 1,
) -> MergeTrace:
    """Hierarchical merging from singleton blocks down to one block.

    Every step applies the pairwise merge with the highest resulting total
    evidence, even when that decreases it: the trace records the whole
    path, and best() picks the argmax along it. Merges whose combined rank
    would exceed the count-table cap are never proposed.
    """
    n = d.n
    cache = _BlockCache(d, basis, rank_cap)
    blocks = [1 << i for i in range(n)]
    cache.ensure(blocks, workers)
    total = sum(cache.best_value(b) for b in blocks)
    steps = [MergeStep(None, cache.structure_for(blocks), total)]
    while len(blocks) > 1:
        pairs = [
            (i, j)
            for i in range(len(blocks))
            for j in range(i + 1, len(blocks))
            if (blocks[i] | blocks[j]).bit_count() <= rank_cap
        ]
        if not pairs:
            break
        cache.ensure([blocks[i] | blocks[j] for i, j in pairs], workers)
        best_pair = None
        best_total = -math.inf
        for i, j in pairs:
            cand = (
                total
                - cache.best_value(blocks[i])
                - cache.best_value(blocks[j])
                + cache.best_value(blocks[i] | blocks[j])
            )
            if cand > best_total:
                best_total = cand
                best_pair = (i, j)
        i, j = best_pair
        merged_members = (_mask_members(blocks[i]), _mask_members(blocks[j]))
        merged = blocks[i] | blocks[j]
        blocks = [b for k, b in enumerate(blocks) if k not in (i, j)]
        blocks.append(merged)
        blocks.sort(key=lambda m: m & -m)
        total = best_total
        steps.append(MergeStep(merged_members, cache.structure_for(blocks), total))
    return MergeTrace(tuple(steps))
