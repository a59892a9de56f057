"""Likelihood unit tests against a high-precision independent oracle."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrsachain import (
    IMPOSSIBLE,
    CompartmentState,
    FixedRates,
    LatentRemovals,
    ModelMask,
    ModelParams,
    ObservedDataset,
    log_binomial_pmf,
    log_likelihood,
    pointwise_log_likelihood,
    reconstruct_trajectory,
)
from mrsachain.likelihood import CHANNELS, PointwiseLogLik, is_impossible
from mrsachain.model import InfeasibleStepError

from _oracle import oracle_pointwise, oracle_total, random_instance


def toy_dataset():
    """Two-month instance small enough to audit by hand."""
    init = CompartmentState(s=20, col_ha=4, inf_ha=2, col_ca=3, inf_ca=1,
                            removed=0)
    data = ObservedDataset(
        init=init,
        new_col_ha=[2, 1], new_inf_ha=[1, 1], new_col_ca=[1, 0],
        new_inf_ca=[0, 1], admissions=[3, 2], discharges=[2, 3])
    latents = LatentRemovals(rem_col_ha=[2, 1], rem_inf_ha=[1, 1],
                             rem_col_ca=[2, 1], rem_inf_ca=[1, 0])
    return data, latents


TOY_PARAMS = ModelParams(0.0421, 0.0567, 0.0095, 0.0407, 0.0100, 0.2628)
FIXED = FixedRates()


class TestLogBinomialPmf:
    def test_matches_exact(self):
        for k, n, p in [(0, 0, 0.3), (3, 10, 0.25), (10, 10, 0.9),
                        (0, 10, 0.0), (7, 2000, 0.001)]:
            exact = math.log(math.comb(n, k)) + \
                (k * math.log(p) if k else 0.0) + \
                ((n - k) * math.log1p(-p) if n - k else 0.0)
            assert log_binomial_pmf(k, n, p) == pytest.approx(exact, abs=1e-11)

    def test_degenerate_probabilities(self):
        assert log_binomial_pmf(0, 5, 0.0) == 0.0
        assert log_binomial_pmf(5, 5, 1.0) == 0.0
        assert is_impossible(log_binomial_pmf(1, 5, 0.0))
        assert is_impossible(log_binomial_pmf(4, 5, 1.0))

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            log_binomial_pmf(6, 5, 0.5)
        with pytest.raises(ValueError):
            log_binomial_pmf(-1, 5, 0.5)
        with pytest.raises(ValueError):
            log_binomial_pmf(1, 5, 1.5)


class TestPointwise:
    def test_shape_and_channels(self):
        data, latents = toy_dataset()
        pw = pointwise_log_likelihood(data, latents, TOY_PARAMS, FIXED,
                                      ModelMask.full())
        assert pw.matrix.shape == (2, 6)
        assert pw.channels == CHANNELS

    def test_matches_oracle_on_toy(self):
        data, latents = toy_dataset()
        pw = pointwise_log_likelihood(data, latents, TOY_PARAMS, FIXED,
                                      ModelMask.full())
        oracle = oracle_pointwise(data, latents, TOY_PARAMS, FIXED,
                                  ModelMask.full())
        for t in range(2):
            for c in range(6):
                assert pw.matrix[t, c] == pytest.approx(float(oracle[t][c]),
                                                        abs=1e-10)

    def test_frozen_toy_total(self):
        # Independently computed with 50-digit arithmetic and frozen.
        data, latents = toy_dataset()
        assert log_likelihood(data, latents, TOY_PARAMS, FIXED,
                              ModelMask.full()) == pytest.approx(
            -29.310484281324342, abs=1e-10)

    def test_entries_nonpositive_and_finite(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            data, latents, params = random_instance(rng)
            pw = pointwise_log_likelihood(data, latents, params, FIXED,
                                          ModelMask.full())
            assert np.all(pw.matrix <= 0.0)
            assert np.all(np.isfinite(pw.matrix))

    def test_impossible_sentinel(self):
        data, latents = toy_dataset()
        # alpha = 0 makes any observed infection a zero-probability event
        params = ModelParams(0.0421, 0.0567, 0.0095, 0.0407, 0.0100, 0.0)
        pw = pointwise_log_likelihood(data, latents, params, FIXED,
                                      ModelMask.full())
        assert pw.has_impossible
        assert pw.matrix[0, 1] == IMPOSSIBLE
        assert pw.total == IMPOSSIBLE

    def test_total_is_plain_sum(self):
        data, latents = toy_dataset()
        pw = pointwise_log_likelihood(data, latents, TOY_PARAMS, FIXED,
                                      ModelMask.full())
        acc = 0.0
        for v in pw.matrix.ravel():
            acc += float(v)
        assert pw.total == acc


class TestOracleEquivalence:
    def test_random_instances(self):
        rng = np.random.default_rng(1234)
        for _ in range(100):
            data, latents, params = random_instance(rng)
            got = log_likelihood(data, latents, params, FIXED, ModelMask.full())
            want = oracle_total(data, latents, params, FIXED, ModelMask.full())
            assert got == pytest.approx(want, abs=1e-10)

    def test_random_instances_masked(self):
        rng = np.random.default_rng(99)
        for _ in range(25):
            data, latents, params = random_instance(rng)
            mask = ModelMask(*(bool(b) for b in rng.integers(0, 2, 4))) \
                if rng.integers(0, 2) else ModelMask.full()
            got = log_likelihood(data, latents, params, FIXED, mask)
            want = oracle_total(data, latents, params, FIXED, mask)
            assert got == pytest.approx(want, abs=1e-10)


class TestNesting:
    def test_masked_equals_full_with_zeroed_rates(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            data, latents, params = random_instance(rng)
            flags = rng.integers(0, 2, 4).astype(bool)
            if not flags.any():
                flags[rng.integers(0, 4)] = True
            mask = ModelMask(*map(bool, flags))
            zeroed = ModelParams(*(v if a else 0.0 for v, a in
                                   zip(params.as_tuple()[:4], flags)),
                                 params.sigma, params.alpha)
            a = pointwise_log_likelihood(data, latents, params, FIXED, mask)
            b = pointwise_log_likelihood(data, latents, zeroed, FIXED,
                                         ModelMask.full())
            assert np.array_equal(a.matrix, b.matrix)  # bitwise


class TestReconstructTrajectory:
    def test_round_trip(self):
        data, latents = toy_dataset()
        traj = reconstruct_trajectory(data, latents)
        assert len(traj.states) == 3 and len(traj.events) == 2
        assert np.array_equal(traj.event_series("new_col_ha"), data.new_col_ha)
        assert np.array_equal(traj.event_series("rem_col_ha"),
                              latents.rem_col_ha)

    def test_infeasible_latents_raise_with_month(self):
        data, _ = toy_dataset()
        bad = LatentRemovals(rem_col_ha=[0, 9], rem_inf_ha=[0, 0],
                             rem_col_ca=[0, 0], rem_inf_ca=[0, 0])
        with pytest.raises(InfeasibleStepError, match="month 1"):
            reconstruct_trajectory(data, bad)

    def test_length_mismatch(self):
        data, _ = toy_dataset()
        with pytest.raises(ValueError):
            reconstruct_trajectory(data, LatentRemovals.zeros(3))


class TestObservedDataset:
    def test_rejects_initial_removed(self):
        init = CompartmentState(s=5, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0,
                                removed=1)
        with pytest.raises(ValueError, match="removed"):
            ObservedDataset(init=init, new_col_ha=[0], new_inf_ha=[0],
                            new_col_ca=[0], new_inf_ca=[0], admissions=[0],
                            discharges=[0])

    def test_rejects_negative_series(self):
        init = CompartmentState(s=5, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0,
                                removed=0)
        with pytest.raises(ValueError):
            ObservedDataset(init=init, new_col_ha=[-1], new_inf_ha=[0],
                            new_col_ca=[0], new_inf_ca=[0], admissions=[0],
                            discharges=[0])


@given(st.integers(0, 40), st.integers(0, 40),
       st.floats(0.0, 1.0, allow_nan=False))
@settings(max_examples=300)
def test_log_binomial_pmf_nonpositive(k, extra, p):
    n = k + extra
    v = log_binomial_pmf(k, n, p)
    assert v <= 0.0
    assert math.isfinite(v) or is_impossible(v)
