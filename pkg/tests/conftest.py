"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from mcmselect import Dataset, GaugeTransform, Gf2Span, Operator


def parse_state(bits: str) -> int:
    """Packed state from a '0101' string; character i is spin i."""
    m = 0
    for i, c in enumerate(bits):
        if c == "1":
            m |= 1 << i
    return m


def spin_product(mask: int, state: int, n: int) -> int:
    """Oracle evaluation: literal product of s_i = (-1)^(x_i) over the mask."""
    value = 1
    for i in range(n):
        if (mask >> i) & 1:
            value *= -1 if (state >> i) & 1 else 1
    return value


def random_dataset(rng: np.random.Generator, n: int, N: int) -> Dataset:
    rows = [int(v) for v in rng.integers(0, 1 << n, size=N)]
    return Dataset.from_rows(rows, n)


def random_invertible_ops(rng: np.random.Generator, n: int) -> list[Operator]:
    """n random GF(2)-independent operators, by rejection."""
    span = Gf2Span()
    ops: list[Operator] = []
    while len(ops) < n:
        m = int(rng.integers(1, 1 << n))
        if span.add(m):
            ops.append(Operator(m, n))
    return ops


def random_transform(rng: np.random.Generator, n: int) -> GaugeTransform:
    return GaugeTransform(tuple(random_invertible_ops(rng, n)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
