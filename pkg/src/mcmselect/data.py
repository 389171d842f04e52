"""Binary dataset ingestion, storage, and operator-level statistics.

File format: plain text, one observation per line, exactly n characters of
'0'/'1' where character i is the bit x_i of spin i ('1' means s_i = -1).
Lines starting with '#' are comments; blank lines are skipped. The format
round-trips bit-exactly through save_dataset/load_dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CapExceededError, DatasetFormatError, DimensionMismatchError
from .gf2 import MAX_WIDTH, GaugeTransform, Operator, gf2_rank

DEFAULT_RANK_CAP = 20

_WORD = np.uint64
_LOW64 = (1 << 64) - 1


def _pack_masks(masks: Sequence[int], n: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Split ints into one or two uint64 lanes depending on width."""
    lo = np.fromiter((m & _LOW64 for m in masks), dtype=_WORD, count=len(masks))
    if n <= 64:
        return lo, None
    hi = np.fromiter((m >> 64 for m in masks), dtype=_WORD, count=len(masks))
    return lo, hi


def _parity_with_mask(lo: np.ndarray, hi: np.ndarray | None, mask: int) -> np.ndarray:
    """Elementwise parity of popcount(state & mask) as uint8 0/1."""
    acc = np.bitwise_count(lo & _WORD(mask & _LOW64))
    if hi is not None:
        acc = acc + np.bitwise_count(hi & _WORD(mask >> 64))
    return (acc & 1).astype(np.uint8)


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of N observed spin configurations.

    Both the raw row list (needed for direct resampling) and the distinct
    state count table (needed for statistics and evidence) are kept; the
    packed numpy views are built lazily and cached.
    """

    n: int
    rows: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_WIDTH:
            raise ValueError(f"variable count must be in 1..{MAX_WIDTH}, got {self.n}")
        if not self.rows:
            raise ValueError("dataset must contain at least one observation")
        limit = 1 << self.n
        for x in self.rows:
            if not 0 <= x < limit:
                raise ValueError(f"state {x:#x} does not fit in {self.n} bits")

    @classmethod
    def from_rows(cls, rows: Iterable[int], n: int) -> Dataset:
        return cls(n=n, rows=tuple(rows))

    @property
    def N(self) -> int:
        return len(self.rows)

    @cached_property
    def counts(self) -> Mapping[int, int]:
        table: dict[int, int] = {}
        for x in self.rows:
            table[x] = table.get(x, 0) + 1
        return table

    @cached_property
    def _distinct(self) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, list[int]]:
        states = sorted(self.counts)
        lo, hi = _pack_masks(states, self.n)
        mult = np.fromiter((self.counts[s] for s in states), dtype=np.int64,
                           count=len(states))
        return lo, hi, mult, states

    @cached_property
    def _rows_packed(self) -> tuple[np.ndarray, np.ndarray | None]:
        return _pack_masks(self.rows, self.n)


def _relabel_state(state: int, relabel: Sequence[tuple[int, int]]) -> int:
    out = 0
    for j, (src, flip) in enumerate(relabel):
        bit = (state >> src) & 1
        if flip:
            bit ^= 1
        out |= bit << j
    return out


def load_relabel(path: str | Path, n: int) -> tuple[tuple[int, int], ...]:
    """Read a relabeling side file: one `source_index flip` pair per output
    variable, 0-based, '#' comments allowed.

    Output variable j takes input column source_index, XORed with flip.
    Covers variable permutations and per-variable sign flips (e.g. recoding
    votes onto a common political-orientation axis).
    """
    entries: list[tuple[int, int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DatasetFormatError(
                    f"expected 'source_index flip', got {line!r}", lineno)
            try:
                src, flip = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetFormatError(
                    f"non-integer field in {line!r}", lineno) from None
            if not 0 <= src < n or flip not in (0, 1):
                raise DatasetFormatError(
                    f"bad relabel entry {line!r} for n={n}", lineno)
            entries.append((src, flip))
    if len(entries) != n:
        raise DatasetFormatError(
            f"relabel file has {len(entries)} entries, expected {n}")
    return tuple(entries)


def load_dataset(
    path: str | Path,
    n: int,
    relabel: Sequence[tuple[int, int]] | str | Path | None = None,
) -> Dataset:
    """Load observations from a text file (format in the module docstring).

    `relabel` may be a parsed relabeling or a path to a side file; it is
    applied to every row at load time.
    """
    if not 1 <= n <= MAX_WIDTH:
        raise DatasetFormatError(f"variable count must be in 1..{MAX_WIDTH}, got {n}")
    if relabel is not None and not isinstance(relabel, (tuple, list)):
        relabel = load_relabel(relabel, n)
    rows: list[int] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if len(line) != n:
                raise DatasetFormatError(
                    f"expected {n} characters, got {len(line)}", lineno)
            state = 0
            for i, c in enumerate(line):
                if c == "1":
                    state |= 1 << i
                elif c != "0":
                    raise DatasetFormatError(
                        f"invalid character {c!r}", lineno)
            if relabel is not None:
                state = _relabel_state(state, relabel)
            rows.append(state)
    if not rows:
        raise DatasetFormatError(f"no observations in {path}")
    return Dataset(n=n, rows=tuple(rows))


def state_to_string(state: int, n: int) -> str:
    return "".join("1" if (state >> i) & 1 else "0" for i in range(n))


def save_dataset(
    rows: Iterable[int],
    n: int,
    path: str | Path,
    header: Sequence[str] = (),
) -> None:
    """Write rows in the dataset file format, with optional '#' header lines."""
    with open(path, "w", encoding="ascii") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for x in rows:
            fh.write(state_to_string(x, n) + "\n")


@dataclass(frozen=True, eq=False)
class BlockCounts:
    """Occurrence counts of the 2^rank value patterns of an operator block.

    Pattern index p has bit a set iff block operator a evaluates to -1, so
    p == 0 is the all-(+1) pattern.
    """

    rank: int
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("block rank must be at least 1")
        if self.counts.shape != (1 << self.rank,):
            raise ValueError(
                f"count table has {self.counts.shape} cells, expected {1 << self.rank}")
        if (self.counts < 0).any():
            raise ValueError("negative count")

    @property
    def N(self) -> int:
        return int(self.counts.sum())


def operator_bias(d: Dataset, op: Operator) -> float:
    """Empirical mean of the operator over the dataset, in [-1, 1]."""
    if op.n != d.n:
        raise DimensionMismatchError(
            f"operator width {op.n} does not match dataset width {d.n}")
    lo, hi, mult, _ = d._distinct
    par = _parity_with_mask(lo, hi, op.mask)
    signed = mult - 2 * (mult * par.astype(np.int64))
    return float(signed.sum()) / d.N


def operator_biases(d: Dataset, masks: Sequence[int]) -> np.ndarray:
    """Vectorized operator_bias over many masks."""
    lo, hi, mult, _ = d._distinct
    out = np.empty(len(masks), dtype=np.float64)
    for i, m in enumerate(masks):
        par = _parity_with_mask(lo, hi, m)
        out[i] = float((mult - 2 * (mult * par.astype(np.int64))).sum())
    return out / d.N


def block_patterns(d: Dataset, masks: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Pattern index of every distinct state under a block of operator masks.

    Returns (patterns, multiplicities) aligned arrays over distinct states.
    """
    lo, hi, mult, _ = d._distinct
    patterns = np.zeros(len(lo), dtype=np.int64)
    for a, m in enumerate(masks):
        patterns |= _parity_with_mask(lo, hi, m).astype(np.int64) << a
    return patterns, mult


def project_counts(
    d: Dataset,
    block: Sequence[Operator],
    rank_cap: int = DEFAULT_RANK_CAP,
) -> BlockCounts:
    """Count how often the block operators take each of their 2^r patterns."""
    r = len(block)
    if r == 0:
        raise ValueError("block must contain at least one operator")
    if r > rank_cap:
        raise CapExceededError(
            f"block rank {r} exceeds count-table cap {rank_cap}")
    for op in block:
        if op.n != d.n:
            raise DimensionMismatchError(
                f"operator width {op.n} does not match dataset width {d.n}")
    masks = [op.mask for op in block]
    if gf2_rank(masks) != r:
        raise ValueError("block operators are dependent mod 2")
    patterns, mult = block_patterns(d, masks)
    table = np.zeros(1 << r, dtype=np.int64)
    np.add.at(table, patterns, mult)
    return BlockCounts(rank=r, counts=table)


def transform_dataset(d: Dataset, t: GaugeTransform) -> Dataset:
    """Re-express every observation in the transform's output coordinates."""
    if t.n != d.n:
        raise DimensionMismatchError(
            f"transform size {t.n} does not match dataset width {d.n}")
    image = {x: t.apply(x) for x in d.counts}
    return Dataset(n=d.n, rows=tuple(image[x] for x in d.rows))
