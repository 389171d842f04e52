"""Closed-form evidence and likelihood of models built from complete blocks.

A model here is a partition of basis operators into blocks. A modeled
block of rank r carries all 2^r - 1 products of its operators; its
marginal likelihood under the Jeffreys (Dirichlet-1/2) prior over the
2^r pattern probabilities integrates in closed form to

    Gamma(2^(r-1)) / Gamma(N + 2^(r-1)) * prod_cells Gamma(k + 1/2) / sqrt(pi)

where k are the pattern occurrence counts. Unmodeled directions carry a
uniform 1/2 per spin per observation. Everything is computed in log space
(natural log) because the raw products overflow at a few thousand
observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .basis import Basis
from .data import (
    DEFAULT_RANK_CAP,
    BlockCounts,
    Dataset,
    project_counts,
)
from .errors import BoundaryModelError, DimensionMismatchError
from .gf2 import Operator

LOG_2 = math.log(2.0)
_HALF_LOG_PI = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class Block:
    """One cell of a basis partition; members are 0-based basis indices."""

    members: tuple[int, ...]
    modeled: bool = True

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("block must be nonempty")
        if any(self.members[i] >= self.members[i + 1]
               for i in range(len(self.members) - 1)):
            raise ValueError("block members must be strictly increasing")

    @property
    def rank(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class McmStructure:
    """Partition of the first basis_size basis operators into blocks.

    Blocks flagged unmodeled contribute a uniform factor instead of a
    fitted one, which realizes rank-deficient models without a separate
    mechanism; the n - basis_size directions outside the structure are
    uniform as well.
    """

    n: int
    basis_size: int
    blocks: tuple[Block, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.basis_size <= self.n:
            raise ValueError(
                f"basis_size {self.basis_size} out of range for n={self.n}")
        seen: set[int] = set()
        for b in self.blocks:
            for i in b.members:
                if not 0 <= i < self.basis_size:
                    raise ValueError(f"member {i} outside basis of size "
                                     f"{self.basis_size}")
                if i in seen:
                    raise ValueError(f"member {i} appears in two blocks")
                seen.add(i)
        if len(seen) != self.basis_size:
            raise ValueError("blocks must cover every basis index")
        firsts = [b.members[0] for b in self.blocks]
        if firsts != sorted(firsts):
            raise ValueError("blocks must be ordered by smallest member")

    @classmethod
    def from_partition(
        cls,
        parts: Iterable[Iterable[int]],
        n: int,
        basis_size: int | None = None,
        flags: Sequence[bool] | None = None,
    ) -> McmStructure:
        """Build from unordered index groups; canonicalizes ordering."""
        raw = [tuple(sorted(p)) for p in parts]
        if flags is None:
            flags = [True] * len(raw)
        if len(flags) != len(raw):
            raise ValueError("one modeled flag per block required")
        order = sorted(range(len(raw)), key=lambda i: raw[i][0] if raw[i] else -1)
        blocks = tuple(Block(raw[i], bool(flags[i])) for i in order)
        size = sum(b.rank for b in blocks) if basis_size is None else basis_size
        return cls(n=n, basis_size=size, blocks=blocks)

    @classmethod
    def singletons(cls, n: int, basis_size: int | None = None,
                   modeled: bool = True) -> McmStructure:
        size = n if basis_size is None else basis_size
        return cls(n=n, basis_size=size,
                   blocks=tuple(Block((i,), modeled) for i in range(size)))

    @property
    def modeled_rank(self) -> int:
        return sum(b.rank for b in self.blocks if b.modeled)

    @property
    def operator_count(self) -> int:
        """Total number of interactions carried by the modeled blocks."""
        return sum((1 << b.rank) - 1 for b in self.blocks if b.modeled)

    def partition_key(self) -> tuple[tuple[int, ...], ...]:
        return tuple(b.members for b in self.blocks)


@dataclass(frozen=True)
class EvidenceReport:
    """Log-evidence decomposition of one structure on one dataset.

    per_block entries align with the structure's blocks; unmodeled blocks
    appear with their uniform contribution. unmodeled_term covers only the
    n - basis_size directions outside the structure, so the total is the
    block sum plus unmodeled_term.
    """

    n: int
    N: int
    per_block_log_evidence: tuple[float, ...]
    total_log_evidence: float
    max_log_likelihood: float
    K: int
    first_order_complexity: float
    unmodeled_term: float

    def __post_init__(self) -> None:
        recon = sum(self.per_block_log_evidence) + self.unmodeled_term
        if not math.isclose(recon, self.total_log_evidence,
                            rel_tol=1e-9, abs_tol=1e-6):
            raise ValueError("total does not match block decomposition")
        if self.max_log_likelihood < self.total_log_evidence - 1e-6:
            raise ValueError("evidence exceeds maximum likelihood")


def _table_log_evidence(table: np.ndarray, N: int, rank: int) -> float:
    """log of the Dirichlet-1/2 marginal likelihood for one count table.

    Empty cells are skipped: Gamma(1/2) = sqrt(pi) makes their factor one.
    """
    half_cells = float(1 << (rank - 1))
    nz = table[table > 0]
    return float(
        gammaln(half_cells)
        - gammaln(N + half_cells)
        + (gammaln(nz + 0.5) - _HALF_LOG_PI).sum()
    )


def _table_log_likelihood(table: np.ndarray, N: int) -> float:
    """sum of k log(k/N) over cells, with 0 log 0 = 0."""
    nz = table[table > 0].astype(np.float64)
    return float((nz * (np.log(nz) - math.log(N))).sum())


def icc_log_evidence(counts: BlockCounts, N: int) -> float:
    """Log-evidence (nats) of one modeled block from its pattern counts."""
    if counts.N != N:
        raise ValueError(f"count table sums to {counts.N}, expected N={N}")
    if N < 1:
        raise ValueError("evidence needs at least one observation")
    return _table_log_evidence(counts.counts, N, counts.rank)


def first_order_complexity(K: int, N: int) -> float:
    """Leading parameter-counting complexity term, (K/2) log(N / 2 pi).

    Reported for orientation only; ranking always uses the exact evidence.
    """
    if K < 0:
        raise ValueError("operator count must be nonnegative")
    if N < 1:
        raise ValueError("sample count must be positive")
    return 0.5 * K * math.log(N / (2.0 * math.pi))


def _basis_operators(basis: Basis | Sequence[Operator]) -> tuple[Operator, ...]:
    if isinstance(basis, Basis):
        return basis.operators
    return tuple(basis)


def mcm_log_evidence(
    d: Dataset,
    basis: Basis | Sequence[Operator],
    m: McmStructure,
    rank_cap: int = DEFAULT_RANK_CAP,
) -> EvidenceReport:
    """Evidence report of a structure over a basis on a dataset.

    Modeled blocks contribute the closed-form block evidence of their
    projected counts; unmodeled blocks and off-structure directions
    contribute -N log 2 per spin. The total factorizes, so blocks are
    evaluated independently.
    """
    ops = _basis_operators(basis)
    if m.n != d.n:
        raise DimensionMismatchError(
            f"structure width {m.n} does not match dataset width {d.n}")
    if any(op.n != d.n for op in ops):
        raise DimensionMismatchError("basis width does not match dataset")
    if m.basis_size > len(ops):
        raise ValueError(
            f"structure needs {m.basis_size} basis operators, got {len(ops)}")
    N = d.N
    per_block: list[float] = []
    loglik = 0.0
    for b in m.blocks:
        if b.modeled:
            counts = project_counts(d, [ops[i] for i in b.members], rank_cap)
            per_block.append(icc_log_evidence(counts, N))
            loglik += _table_log_likelihood(counts.counts, N)
        else:
            uniform = -N * b.rank * LOG_2
            per_block.append(uniform)
            loglik += uniform
    unmodeled_term = -N * (d.n - m.basis_size) * LOG_2
    total = sum(per_block) + unmodeled_term
    K = m.operator_count
    return EvidenceReport(
        n=d.n,
        N=N,
        per_block_log_evidence=tuple(per_block),
        total_log_evidence=total,
        max_log_likelihood=loglik + unmodeled_term,
        K=K,
        first_order_complexity=first_order_complexity(K, N),
        unmodeled_term=unmodeled_term,
    )


def mcm_max_log_likelihood(
    d: Dataset,
    basis: Basis | Sequence[Operator],
    m: McmStructure,
    rank_cap: int = DEFAULT_RANK_CAP,
) -> float:
    """Maximum log-likelihood of the structure (plug-in pattern frequencies)."""
    return mcm_log_evidence(d, basis, m, rank_cap).max_log_likelihood


def fit_probs(counts: BlockCounts) -> np.ndarray:
    """Maximum-likelihood pattern probabilities k/N of one block."""
    N = counts.N
    if N < 1:
        raise ValueError("cannot fit probabilities without observations")
    return counts.counts.astype(np.float64) / N


def _pattern_signs(subset: int, rank: int) -> np.ndarray:
    """Values (+/-1) of the product of subset operators on all 2^rank patterns."""
    patterns = np.arange(1 << rank, dtype=np.uint64)
    par = np.bitwise_count(patterns & np.uint64(subset)) & np.uint64(1)
    return 1.0 - 2.0 * par.astype(np.float64)


def _subset_operator(block: Sequence[Operator], subset: int) -> Operator:
    mask = 0
    for a, op in enumerate(block):
        if (subset >> a) & 1:
            mask ^= op.mask
    return Operator(mask, block[0].n)


def couplings_from_probs(
    probs: np.ndarray | Sequence[float],
    block: Sequence[Operator],
) -> dict[Operator, float]:
    """Interaction strengths of the 2^r - 1 block products from pattern
    probabilities.

    Inverts the maximum-entropy form on the block's own pattern space:
    g = 2^-r * sum_p sign(p) log q(p) for each nonempty operator subset.
    Any zero probability cell makes the couplings diverge; the
    probability-table parameterization remains the valid description then.
    """
    r = len(block)
    q = np.asarray(probs, dtype=np.float64)
    if q.shape != (1 << r,):
        raise ValueError(f"expected {1 << r} probabilities, got {q.shape}")
    if (q <= 0.0).any():
        raise BoundaryModelError(
            "a pattern probability is zero: boundary model, no finite couplings")
    logq = np.log(q)
    scale = 1.0 / (1 << r)
    out: dict[Operator, float] = {}
    for subset in range(1, 1 << r):
        g = scale * float((_pattern_signs(subset, r) * logq).sum())
        out[_subset_operator(block, subset)] = g
    return out


def _subset_coords(block_masks: Sequence[int], mask: int) -> int:
    """Which subset of block operators multiplies to the given mask."""
    pivots: dict[int, tuple[int, int]] = {}
    for a, m in enumerate(block_masks):
        combo = 1 << a
        while m:
            lead = m.bit_length() - 1
            if lead in pivots:
                pm, pc = pivots[lead]
                m ^= pm
                combo ^= pc
            else:
                pivots[lead] = (m, combo)
                break
        else:
            raise ValueError("block operators are dependent mod 2")
    combo = 0
    while mask:
        lead = mask.bit_length() - 1
        if lead not in pivots:
            raise ValueError("operator is not generated by the block")
        pm, pc = pivots[lead]
        mask ^= pm
        combo ^= pc
    return combo


def probs_from_couplings(
    couplings: Mapping[Operator, float],
    block: Sequence[Operator],
) -> np.ndarray:
    """Pattern probabilities of the maximum-entropy block model with the
    given interaction strengths (inverse of couplings_from_probs)."""
    r = len(block)
    masks = [op.mask for op in block]
    energy = np.zeros(1 << r, dtype=np.float64)
    for op, g in couplings.items():
        subset = _subset_coords(masks, op.mask)
        if subset == 0:
            raise ValueError("identity operator cannot carry a coupling")
        energy += g * _pattern_signs(subset, r)
    energy -= energy.max()
    w = np.exp(energy)
    return w / w.sum()
