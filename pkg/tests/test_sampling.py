"""Model fitting, seeded sampling, and the synthetic generator."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from mcmselect import (
    Dataset,
    FittedMcm,
    McmStructure,
    Operator,
    basis_from_operators,
    complete_basis,
    fit_mcm,
    generate_synthetic,
    mcm_max_log_likelihood,
    project_counts,
    sample_mcm,
)

from conftest import random_dataset


def spin_basis(d: Dataset):
    return basis_from_operators(
        d, [Operator.single(i, d.n) for i in range(d.n)])


class TestFit:
    def test_single_state_concentrates(self):
        d = Dataset.from_rows([0b011] * 12, 3)
        m = McmStructure.from_partition([[0, 1, 2]], n=3)
        f = fit_mcm(d, spin_basis(d), m)
        q = f.q_tables[0]
        assert q.sum() == pytest.approx(1.0)
        assert (q == 1.0).sum() == 1

    def test_tables_align_with_blocks(self, rng):
        d = random_dataset(rng, 4, 100)
        m = McmStructure.from_partition([[0, 1], [2], [3]], n=4,
                                        flags=[True, False, True])
        f = fit_mcm(d, spin_basis(d), m)
        assert f.q_tables[0].shape == (4,)
        assert f.q_tables[1] is None
        assert f.q_tables[2].shape == (2,)

    def test_refit_from_sample(self, rng):
        d = random_dataset(rng, 4, 5000)
        basis = spin_basis(d)
        m = McmStructure.from_partition([[0, 1], [2, 3]], n=4)
        f = fit_mcm(d, basis, m)
        rows = sample_mcm(f, seed=5, count=20000)
        d2 = Dataset.from_rows(rows, 4)
        f2 = fit_mcm(d2, spin_basis(d2), m)
        for q1, q2 in zip(f.q_tables, f2.q_tables):
            # multinomial chi-square on the refit tables
            expected = q1 * 20000
            observed = q2 * 20000
            keep = expected > 0
            chi2 = float(((observed[keep] - expected[keep]) ** 2
                          / expected[keep]).sum())
            dof = int(keep.sum()) - 1
            assert stats.chi2.sf(chi2, dof) > 0.001


class TestSample:
    def test_deterministic(self, rng):
        d = random_dataset(rng, 5, 300)
        m = McmStructure.from_partition([[0, 1], [2], [3, 4]], n=5)
        f = fit_mcm(d, spin_basis(d), m)
        a = sample_mcm(f, seed=123, count=50)
        b = sample_mcm(f, seed=123, count=50)
        c = sample_mcm(f, seed=124, count=50)
        assert a == b
        assert a != c

    def test_full_block_resamples_dataset_rows(self, rng):
        d = random_dataset(rng, 6, 50)
        m = McmStructure.from_partition([list(range(6))], n=6)
        f = fit_mcm(d, spin_basis(d), m)
        rows = sample_mcm(f, seed=1, count=500)
        assert set(rows) <= set(d.rows)

    def test_all_unmodeled_uniform(self):
        d = Dataset.from_rows([0] * 10, 3)
        m = McmStructure.singletons(3, modeled=False)
        f = fit_mcm(d, spin_basis(d), m)
        rows = sample_mcm(f, seed=2, count=40000)
        counts = np.bincount(rows, minlength=8)
        chi2, p = stats.chisquare(counts)
        assert p > 0.001

    def test_planted_blocks_distribution_and_independence(self):
        q1 = np.array([0.35, 0.05, 0.15, 0.45])
        q2 = np.array([0.5, 0.2, 0.2, 0.1])
        structure = McmStructure.from_partition([[0, 1], [2, 3]], n=4)
        transform = complete_basis([Operator.single(i, 4) for i in range(4)])
        planted = FittedMcm(structure=structure, q_tables=(q1, q2),
                            transform=transform, source=None)
        rows = sample_mcm(planted, seed=42, count=100000, method="table")
        d = Dataset.from_rows(rows, 4)
        t1 = project_counts(d, [Operator.single(0, 4), Operator.single(1, 4)])
        t2 = project_counts(d, [Operator.single(2, 4), Operator.single(3, 4)])
        for table, q in ((t1, q1), (t2, q2)):
            chi2, p = stats.chisquare(table.counts, q * 100000)
            assert p > 0.01
        # cross-block independence: empirical pair operator bias across the
        # cut is the product of the marginal biases, up to noise
        from mcmselect import operator_bias
        for i in (0, 1):
            for j in (2, 3):
                pair = operator_bias(
                    d, Operator.from_spins([i, j], 4))
                prod = (operator_bias(d, Operator.single(i, 4))
                        * operator_bias(d, Operator.single(j, 4)))
                assert abs(pair - prod) < 0.02

    def test_table_and_resample_routes_agree(self, rng):
        d = random_dataset(rng, 4, 2000)
        basis = spin_basis(d)
        m = McmStructure.from_partition([[0, 1], [2, 3]], n=4)
        f = fit_mcm(d, basis, m)
        n_draw = 40000
        rows_r = sample_mcm(f, seed=9, count=n_draw, method="resample")
        rows_t = sample_mcm(f, seed=9, count=n_draw, method="table")
        for block in m.blocks:
            ops = [basis.operators[i] for i in block.members]
            cr = project_counts(Dataset.from_rows(rows_r, 4), ops).counts
            ct = project_counts(Dataset.from_rows(rows_t, 4), ops).counts
            expected = f.q_tables[m.blocks.index(block)] * n_draw
            keep = expected > 0
            for observed in (cr, ct):
                chi2 = float(((observed[keep] - expected[keep]) ** 2
                              / expected[keep]).sum())
                assert stats.chi2.sf(chi2, int(keep.sum()) - 1) > 0.001

    def test_resample_needs_source(self):
        structure = McmStructure.from_partition([[0, 1]], n=2)
        transform = complete_basis([Operator.single(i, 2) for i in range(2)])
        planted = FittedMcm(structure=structure,
                            q_tables=(np.array([0.25, 0.25, 0.25, 0.25]),),
                            transform=transform, source=None)
        with pytest.raises(ValueError, match="source"):
            sample_mcm(planted, seed=0, count=5, method="resample")
        assert len(sample_mcm(planted, seed=0, count=5)) == 5  # auto -> table

    def test_loglik_of_own_sample_converges(self, rng):
        d = random_dataset(rng, 4, 3000)
        basis = spin_basis(d)
        m = McmStructure.from_partition([[0, 1], [2], [3]], n=4)
        f = fit_mcm(d, basis, m)
        count = 50000
        rows = sample_mcm(f, seed=31, count=count)
        d2 = Dataset.from_rows(rows, 4)
        per_draw = mcm_max_log_likelihood(d, basis, m) / d.N
        # average log-prob of the sample under the fitted model
        logq = []
        for bi, block in enumerate(m.blocks):
            q = f.q_tables[bi]
            ops = [basis.operators[i] for i in block.members]
            table = project_counts(d2, ops).counts
            with np.errstate(divide="ignore"):
                lg = np.where(table > 0, np.log(np.clip(q, 1e-300, None)), 0.0)
            logq.append(float((table * lg).sum()) / count)
        got = sum(logq)
        # three standard errors of the per-draw log-likelihood
        sd = 0.0
        for bi, block in enumerate(m.blocks):
            q = f.q_tables[bi][f.q_tables[bi] > 0]
            mean = float((q * np.log(q)).sum())
            var = float((q * np.log(q) ** 2).sum()) - mean ** 2
            sd += var
        se = math.sqrt(sd / count)
        assert abs(got - per_draw) <= 3 * se + 1e-9

    def test_count_validation(self, rng):
        d = random_dataset(rng, 3, 10)
        f = fit_mcm(d, spin_basis(d), McmStructure.singletons(3))
        with pytest.raises(ValueError):
            sample_mcm(f, seed=0, count=0)


class TestGenerateSynthetic:
    def test_single_state(self):
        d = generate_synthetic([0b101], [1.0], 20, seed=0, n=3)
        assert d.rows == (0b101,) * 20

    def test_three_state_frequencies(self):
        states = [0b000011011, 0b110110000, 0b101000101]
        d = generate_synthetic(states, [0.2, 0.3, 0.5], 100000, seed=42, n=9)
        for s, p in zip(states, (0.2, 0.3, 0.5)):
            assert d.counts[s] / d.N == pytest.approx(p, abs=0.005)

    def test_complementary_pair_biases(self):
        from mcmselect import operator_bias
        a = 0b0000
        b = 0b1111
        d = generate_synthetic([a, b], [0.5, 0.5], 50000, seed=7, n=4)
        for i in range(4):
            assert abs(operator_bias(d, Operator.single(i, 4))) < 0.02
        for i in range(4):
            for j in range(i + 1, 4):
                assert operator_bias(d, Operator.from_spins([i, j], 4)) == 1.0

    def test_probability_validation(self):
        with pytest.raises(ValueError, match="sum"):
            generate_synthetic([0, 1], [0.5, 0.5 + 1e-9], 5, seed=0, n=1)
        with pytest.raises(ValueError, match="distinct"):
            generate_synthetic([1, 1], [0.5, 0.5], 5, seed=0, n=1)

    def test_deterministic(self):
        a = generate_synthetic([0, 3], [0.4, 0.6], 100, seed=5, n=2)
        b = generate_synthetic([0, 3], [0.4, 0.6], 100, seed=5, n=2)
        assert a.rows == b.rows


class TestRoundTrip:
    def test_patterns_survive_inverse_transform(self, rng):
        # applying the forward transform to sampled states must reproduce
        # the block patterns that were drawn
        d = random_dataset(rng, 5, 500)
        basis = spin_basis(d)
        m = McmStructure.from_partition([[0, 1, 2], [3, 4]], n=5)
        f = fit_mcm(d, basis, m)
        rows = sample_mcm(f, seed=8, count=200)
        for x in rows:
            y = f.transform.apply(x)
            assert f.transform.apply_inverse(y) == x

    def test_wide_system_route(self):
        # n > 63 exercises the python-int assembly path
        n = 66
        rows = [((1 << 65) | 1)] * 4 + [0] * 4
        d = Dataset.from_rows(rows, n)
        basis = basis_from_operators(
            d, [Operator.single(i, n) for i in range(n)])
        m = McmStructure.singletons(n)
        f = fit_mcm(d, basis, m)
        out = sample_mcm(f, seed=3, count=50)
        assert len(out) == 50
        assert all(0 <= x < (1 << n) for x in out)
