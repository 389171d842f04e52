"""Spin operators as bit masks and GF(2) linear algebra on them.

States and operators over n binary spins are packed into Python ints:
bit i of a state x is 1 iff spin s_i = -1 (the encoding s_i = (-1)^{x_i}),
and bit i of an operator mask is 1 iff spin s_i participates in the
product. Every algebraic question about operators (products, independence,
change of basis) is then XOR arithmetic and parity counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .errors import DimensionMismatchError, SingularMatrixError

MAX_WIDTH = 128


def _check_width(n: int) -> None:
    if not 1 <= n <= MAX_WIDTH:
        raise ValueError(f"spin count must be in 1..{MAX_WIDTH}, got {n}")


@dataclass(frozen=True)
class Operator:
    """A product of spins identified by an n-bit participation mask."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        _check_width(self.n)
        if not 0 <= self.mask < (1 << self.n):
            raise ValueError(f"mask {self.mask:#x} does not fit in {self.n} bits")

    @classmethod
    def identity(cls, n: int) -> Operator:
        return cls(0, n)

    @classmethod
    def single(cls, i: int, n: int) -> Operator:
        """The one-spin operator s_i (0-based index)."""
        if not 0 <= i < n:
            raise ValueError(f"spin index {i} out of range for n={n}")
        return cls(1 << i, n)

    @classmethod
    def from_spins(cls, spins: Iterable[int], n: int) -> Operator:
        mask = 0
        for i in spins:
            if not 0 <= i < n:
                raise ValueError(f"spin index {i} out of range for n={n}")
            mask |= 1 << i
        return cls(mask, n)

    @classmethod
    def from_string(cls, bits: str) -> Operator:
        """Parse an '0101...' mask string; character i is spin i."""
        mask = _parse_bits(bits)
        return cls(mask, len(bits))

    def to_string(self) -> str:
        return _bits_to_string(self.mask, self.n)

    @property
    def order(self) -> int:
        """Number of participating spins (interaction order)."""
        return self.mask.bit_count()

    def is_identity(self) -> bool:
        return self.mask == 0

    def evaluate(self, state: int) -> int:
        """Value of the operator on a packed state, +1 or -1."""
        if not 0 <= state < (1 << self.n):
            raise DimensionMismatchError(
                f"state {state:#x} does not fit in {self.n} bits"
            )
        return -1 if (self.mask & state).bit_count() & 1 else 1

    def __mul__(self, other: Operator) -> Operator:
        if self.n != other.n:
            raise DimensionMismatchError(
                f"operators have different widths: {self.n} != {other.n}"
            )
        return Operator(self.mask ^ other.mask, self.n)


def op_product(a: Operator, b: Operator) -> Operator:
    """Group product of two operators: XOR of participation masks."""
    return a * b


def evaluate(op: Operator, state: int) -> int:
    return op.evaluate(state)


def _parse_bits(bits: str) -> int:
    mask = 0
    for i, c in enumerate(bits):
        if c == "1":
            mask |= 1 << i
        elif c != "0":
            raise ValueError(f"invalid character {c!r} in bit string")
    return mask


def _bits_to_string(mask: int, n: int) -> str:
    return "".join("1" if (mask >> i) & 1 else "0" for i in range(n))


class Gf2Span:
    """Incrementally maintained GF(2) span of bit masks.

    Keeps a reduced echelon set keyed by leading bit, so membership tests
    and insertions cost O(rank) word operations.
    """

    def __init__(self, masks: Iterable[int] = ()):
        self._pivots: dict[int, int] = {}
        for m in masks:
            self.add(m)

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def reduce(self, mask: int) -> int:
        """Residual of mask after elimination; 0 iff mask is in the span."""
        while mask:
            lead = mask.bit_length() - 1
            piv = self._pivots.get(lead)
            if piv is None:
                return mask
            mask ^= piv
        return 0

    def contains(self, mask: int) -> bool:
        return self.reduce(mask) == 0

    def add(self, mask: int) -> bool:
        """Insert mask; returns False if it was already dependent."""
        residual = self.reduce(mask)
        if residual == 0:
            return False
        self._pivots[residual.bit_length() - 1] = residual
        return True


def gf2_rank(ops: Sequence[Operator] | Sequence[int]) -> int:
    """GF(2) rank of a set of operators (or raw masks)."""
    span = Gf2Span()
    widths = set()
    for op in ops:
        if isinstance(op, Operator):
            widths.add(op.n)
            span.add(op.mask)
        else:
            span.add(op)
    if len(widths) > 1:
        raise DimensionMismatchError(f"mixed operator widths: {sorted(widths)}")
    return span.rank


def _transpose_bits(columns: Sequence[int], n: int) -> list[int]:
    rows = [0] * n
    for j, col in enumerate(columns):
        while col:
            low = col & -col
            rows[low.bit_length() - 1] |= 1 << j
            col ^= low
    return rows


def _invert_bit_matrix(columns: Sequence[int], n: int) -> list[int]:
    """Invert an n x n bit matrix given as columns; returns inverse columns.

    Gauss-Jordan elimination on [T | I]; raises SingularMatrixError when no
    pivot exists for some column.
    """
    rows = _transpose_bits(columns, n)
    aug = [rows[i] | (1 << (n + i)) for i in range(n)]
    for col in range(n):
        pivot = None
        for r in range(col, n):
            if (aug[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            raise SingularMatrixError("matrix is singular mod 2")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for r in range(n):
            if r != col and ((aug[r] >> col) & 1):
                aug[r] ^= aug[col]
    inv_rows = [aug[i] >> n for i in range(n)]
    return _transpose_bits(inv_rows, n)


@dataclass(frozen=True)
class GaugeTransform:
    """Change of basis given by n independent operators.

    Column j of the matrix is the mask of basis operator b_j, so entry
    (i, j) is 1 iff b_j contains spin s_i. Applying the transform maps a
    packed state x to y with y_j = parity(mask_j & x), i.e. y_j = 1 iff an
    odd number of negative spins contribute to b_j.
    """

    columns: tuple[Operator, ...]

    def __post_init__(self) -> None:
        n = len(self.columns)
        _check_width(n)
        for op in self.columns:
            if op.n != n:
                raise DimensionMismatchError(
                    f"column width {op.n} does not match matrix size {n}"
                )
        if gf2_rank(self.columns) != n:
            raise SingularMatrixError("transform columns are dependent mod 2")

    @property
    def n(self) -> int:
        return len(self.columns)

    @cached_property
    def inverse_columns(self) -> tuple[int, ...]:
        return tuple(
            _invert_bit_matrix([op.mask for op in self.columns], self.n)
        )

    @cached_property
    def inverse_rows(self) -> tuple[int, ...]:
        """Rows of the inverse matrix: applying the inverse to y XORs the
        rows selected by y's set bits."""
        return tuple(_transpose_bits(self.inverse_columns, self.n))

    def apply(self, state: int) -> int:
        if not 0 <= state < (1 << self.n):
            raise DimensionMismatchError(
                f"state {state:#x} does not fit in {self.n} bits"
            )
        out = 0
        for j, op in enumerate(self.columns):
            if (op.mask & state).bit_count() & 1:
                out |= 1 << j
        return out

    def apply_inverse(self, state: int) -> int:
        if not 0 <= state < (1 << self.n):
            raise DimensionMismatchError(
                f"state {state:#x} does not fit in {self.n} bits"
            )
        out = 0
        cols = self.inverse_columns
        for j in range(self.n):
            if (cols[j] & state).bit_count() & 1:
                out |= 1 << j
        return out


def invert_mod2(t: GaugeTransform) -> GaugeTransform:
    """The inverse transform; composing the two is the identity map."""
    n = t.n
    return GaugeTransform(tuple(Operator(m, n) for m in t.inverse_columns))


def complete_basis(ops: Sequence[Operator]) -> GaugeTransform:
    """Extend r independent operators to a full invertible transform.

    Completion adds single-spin operators in increasing spin index,
    skipping any that are dependent on what is already present. Any valid
    completion only permutes the bits that carry no model information, so
    the deterministic choice is purely a reproducibility convention.
    """
    if not ops:
        raise ValueError("cannot complete an empty operator set")
    n = ops[0].n
    span = Gf2Span()
    for op in ops:
        if op.n != n:
            raise DimensionMismatchError("operators have mixed widths")
        if not span.add(op.mask):
            raise SingularMatrixError("input operators are dependent mod 2")
    columns = list(ops)
    for i in range(n):
        if len(columns) == n:
            break
        if span.add(1 << i):
            columns.append(Operator(1 << i, n))
    return GaugeTransform(tuple(columns))


def transform_operator(t: GaugeTransform, op: Operator) -> Operator:
    """Express an operator in the coordinates produced by the transform.

    The returned operator satisfies result.evaluate(t.apply(x)) ==
    op.evaluate(x) for every state x.
    """
    if op.n != t.n:
        raise DimensionMismatchError(
            f"operator width {op.n} does not match transform size {t.n}"
        )
    cols = t.inverse_columns
    mask = 0
    rest = op.mask
    while rest:
        low = rest & -rest
        mask ^= cols[low.bit_length() - 1]
        rest ^= low
    return Operator(mask, t.n)
