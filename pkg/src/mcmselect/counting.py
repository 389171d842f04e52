"""Exact counts of model families over n spins.

All counts are exact Python integers (they pass 10^150 well before n=25,
so floats are never involved). Division in the closed forms is checked to
be remainder-free.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator, Mapping


def _exact_div(num: int, den: int) -> int:
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"non-integral count: {num} / {den}")
    return q


def _independent_choices(n: int, r: int) -> int:
    """prod_{i<r} (2^n - 2^i): ordered choices of r independent operators."""
    out = 1
    for i in range(r):
        out *= (1 << n) - (1 << i)
    return out


def count_im(n: int, r: int) -> int:
    """Number of independent models with r operators over n spins:
    prod_{i<r} (2^n - 2^i) / r!"""
    if not 0 <= r <= n:
        raise ValueError(f"rank {r} out of range for n={n}")
    return _exact_div(_independent_choices(n, r), math.factorial(r))


def count_icc(n: int, r: int) -> int:
    """Number of rank-r complete components over n spins:
    prod_{i<r} (2^n - 2^i) / (2^r - 2^i)"""
    if not 0 <= r <= n:
        raise ValueError(f"rank {r} out of range for n={n}")
    return _exact_div(_independent_choices(n, r), _independent_choices(r, r))


def count_mcm_class(n: int, multiplicities: Mapping[int, int]) -> int:
    """Number of models made of m_r components of rank r, per the given
    multiplicity map.

    The numerator counts ordered joint basis choices for the total rank;
    the denominator removes basis changes inside each component and
    permutations among components of equal rank.
    """
    r_total = 0
    for rank, m in multiplicities.items():
        if rank < 1 or m < 0:
            raise ValueError(f"bad multiplicity entry {rank}: {m}")
        r_total += rank * m
    if r_total > n:
        raise ValueError(f"total rank {r_total} exceeds n={n}")
    den = 1
    for rank, m in multiplicities.items():
        if m:
            den *= math.factorial(m) * _independent_choices(rank, rank) ** m
    return _exact_div(_independent_choices(n, r_total), den)


def integer_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """All partitions of n as tuples of parts in non-increasing order."""
    if n < 0:
        raise ValueError("cannot partition a negative integer")

    def rec(remaining: int, bound: int, prefix: tuple[int, ...]):
        if remaining == 0:
            yield prefix
            return
        for part in range(min(remaining, bound), 0, -1):
            yield from rec(remaining - part, part, prefix + (part,))

    yield from rec(n, n, ())


def count_mcm_all(n: int) -> int:
    """Total number of models of any rank built from independent complete
    components, the empty model included."""
    total = 0
    for r in range(n + 1):
        for parts in integer_partitions(r):
            mult: dict[int, int] = {}
            for p in parts:
                mult[p] = mult.get(p, 0) + 1
            total += count_mcm_class(n, mult)
    return total


def count_im_all(n: int) -> int:
    """Total number of independent models of any rank (empty included)."""
    return sum(count_im(n, r) for r in range(n + 1))


def count_icc_all(n: int) -> int:
    """Total number of single-complete-component models of any rank."""
    return sum(count_icc(n, r) for r in range(n + 1))


@lru_cache(maxsize=None)
def _bell_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _bell_row(n - 1)
    row = [prev[-1]]
    for v in prev:
        row.append(row[-1] + v)
    return tuple(row)


def bell(n: int) -> int:
    """Bell number: set partitions of n elements, via the Bell triangle."""
    if n < 0:
        raise ValueError("Bell numbers need n >= 0")
    return _bell_row(n)[0]


def count_mcm_star(n: int) -> int:
    """Number of structures sharing one fixed preferred basis, every rank
    included: sum_r C(n, r) * Bell(r)."""
    if n < 0:
        raise ValueError("need n >= 0")
    return sum(math.comb(n, r) * bell(r) for r in range(n + 1))


def pairwise_model_count(n: int) -> int:
    """Models with only fields and pairwise couplings: 2^(n(n+1)/2)."""
    if n < 0:
        raise ValueError("need n >= 0")
    return 1 << (n * (n + 1) // 2)
