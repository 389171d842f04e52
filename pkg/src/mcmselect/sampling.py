"""Fit a block structure and draw new configurations from it.

Sampling works in basis coordinates: each modeled block contributes a
pattern drawn from its fitted distribution, every other basis direction is
a fair coin, and the assembled pattern vector is mapped back to a spin
state through the inverse of the basis change. Drawing a block's pattern
by evaluating its operators on a uniformly chosen dataset row reproduces
the fitted distribution exactly, so no cumulative tables are needed; the
explicit table route is also provided and the two are cross-checked in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import Basis
from .data import DEFAULT_RANK_CAP, Dataset, _parity_with_mask, project_counts
from .evidence import McmStructure, fit_probs
from .gf2 import GaugeTransform, invert_mod2


@dataclass(frozen=True)
class FittedMcm:
    """A structure, its fitted pattern probabilities, and the basis maps.

    q_tables aligns with structure.blocks (None for unmodeled blocks).
    source keeps the fitting dataset for direct row resampling; a hand-built
    model may pass source=None and sample through the table route.
    """

    structure: McmStructure
    q_tables: tuple[np.ndarray | None, ...]
    transform: GaugeTransform
    source: Dataset | None = None

    def __post_init__(self) -> None:
        if self.transform.n != self.structure.n:
            raise ValueError("transform size does not match structure width")
        if len(self.q_tables) != len(self.structure.blocks):
            raise ValueError("one probability table per block required")
        for b, q in zip(self.structure.blocks, self.q_tables):
            if b.modeled:
                if q is None or q.shape != (1 << b.rank,):
                    raise ValueError("bad probability table shape")
                if not np.isclose(q.sum(), 1.0, atol=1e-9):
                    raise ValueError("probability table must sum to 1")
            elif q is not None:
                raise ValueError("unmodeled block cannot carry a table")

    @property
    def inverse(self) -> GaugeTransform:
        return invert_mod2(self.transform)


def fit_mcm(
    d: Dataset,
    basis: Basis,
    m: McmStructure,
    rank_cap: int = DEFAULT_RANK_CAP,
) -> FittedMcm:
    """Fit pattern probabilities of every modeled block; the basis change
    is inverted once here."""
    tables: list[np.ndarray | None] = []
    for b in m.blocks:
        if b.modeled:
            counts = project_counts(d, [basis.operators[i] for i in b.members],
                                    rank_cap)
            tables.append(fit_probs(counts))
        else:
            tables.append(None)
    t = basis.transform
    t.inverse_columns  # force the one-time inversion; raises if singular
    return FittedMcm(structure=m, q_tables=tuple(tables), transform=t, source=d)


def _draw_block_patterns(
    f: FittedMcm,
    block_index: int,
    rng: np.random.Generator,
    count: int,
    method: str,
) -> np.ndarray:
    block = f.structure.blocks[block_index]
    if method == "resample":
        if f.source is None:
            raise ValueError("resample route needs the source dataset")
        idx = rng.integers(0, f.source.N, size=count)
        lo, hi = f.source._rows_packed
        rlo = lo[idx]
        rhi = hi[idx] if hi is not None else None
        patterns = np.zeros(count, dtype=np.int64)
        for a, op_idx in enumerate(block.members):
            mask = f.transform.columns[op_idx].mask
            patterns |= _parity_with_mask(rlo, rhi, mask).astype(np.int64) << a
        return patterns
    if method == "table":
        q = f.q_tables[block_index]
        return rng.choice(1 << block.rank, size=count, p=q / q.sum())
    raise ValueError(f"unknown sampling method {method!r}")


def sample_mcm(
    f: FittedMcm,
    seed: int,
    count: int,
    method: str = "auto",
) -> list[int]:
    """Draw packed spin states from the fitted maximum-likelihood model.

    Deterministic given the seed: each block gets its own generator stream
    derived from it, and one extra stream covers the uniform directions.
    method is "resample" (evaluate blocks on uniformly drawn source rows),
    "table" (inverse-CDF over the fitted tables), or "auto" (resample when
    a source dataset is attached, table otherwise).
    """
    if count < 1:
        raise ValueError("sample count must be positive")
    m = f.structure
    n = m.n
    if method == "auto":
        method = "resample" if f.source is not None else "table"
    streams = np.random.SeedSequence(seed).spawn(len(m.blocks) + 1)
    rngs = [np.random.default_rng(s) for s in streams]

    pattern_sets: list[tuple[tuple[int, ...], np.ndarray]] = []
    for bi, block in enumerate(m.blocks):
        if block.modeled:
            pats = _draw_block_patterns(f, bi, rngs[bi], count, method)
            pattern_sets.append((block.members, pats))

    uniform_rng = rngs[-1]
    uniform_positions = sorted(
        [i for b in m.blocks if not b.modeled for i in b.members]
        + list(range(m.basis_size, n))
    )

    if n <= 63:
        y = np.zeros(count, dtype=np.uint64)
        for members, pats in pattern_sets:
            p = pats.astype(np.uint64)
            for a, op_idx in enumerate(members):
                y |= ((p >> np.uint64(a)) & np.uint64(1)) << np.uint64(op_idx)
        for j in uniform_positions:
            bits = uniform_rng.integers(0, 2, size=count, dtype=np.uint64)
            y |= bits << np.uint64(j)
        inv_rows = f.transform.inverse_rows
        x = np.zeros(count, dtype=np.uint64)
        for j in range(n):
            hit = ((y >> np.uint64(j)) & np.uint64(1)).astype(bool)
            x[hit] ^= np.uint64(inv_rows[j])
        return [int(v) for v in x]

    # wide systems: assemble per draw with Python ints
    ys = [0] * count
    for members, pats in pattern_sets:
        for i in range(count):
            p = int(pats[i])
            acc = 0
            for a, op_idx in enumerate(members):
                acc |= ((p >> a) & 1) << op_idx
            ys[i] |= acc
    for j in uniform_positions:
        bits = uniform_rng.integers(0, 2, size=count)
        for i in range(count):
            ys[i] |= int(bits[i]) << j
    return [f.transform.apply_inverse(y) for y in ys]


def generate_synthetic(
    states: Sequence[int],
    probs: Sequence[float],
    count: int,
    seed: int,
    *,
    n: int,
) -> Dataset:
    """i.i.d. draws from a finite list of states with given probabilities."""
    if len(states) != len(probs):
        raise ValueError("need one probability per state")
    if len(set(states)) != len(states):
        raise ValueError("states must be distinct")
    if count < 1:
        raise ValueError("sample count must be positive")
    p = np.asarray(probs, dtype=np.float64)
    if (p < 0).any():
        raise ValueError("probabilities must be nonnegative")
    if abs(float(p.sum()) - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    idx = rng.choice(len(states), size=count, p=p / p.sum())
    return Dataset(n=n, rows=tuple(states[i] for i in idx))
