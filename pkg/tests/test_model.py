"""Unit tests for compartment states, transition probabilities and stepping."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrsachain import (
    CompartmentState,
    EventCounts,
    ExogenousFlows,
    FixedRates,
    ModelMask,
    ModelParams,
    apply_mask,
    colonization_probability,
    hazard_to_probability,
    step_compartments,
)
from mrsachain.model import DegeneratePopulationError, InfeasibleStepError

TRUTH = ModelParams(beta_ch=0.0421, beta_ih=0.0567, beta_cc=0.0095,
                    beta_ic=0.0407, sigma=0.0100, alpha=0.2628)


class TestCompartmentState:
    def test_total(self):
        s = CompartmentState(s=10, col_ha=2, inf_ha=3, col_ca=4, inf_ca=5, removed=6)
        assert s.total == 30

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="col_ha"):
            CompartmentState(s=1, col_ha=-1, inf_ha=0, col_ca=0, inf_ca=0, removed=0)

    def test_rejects_non_integers(self):
        with pytest.raises(TypeError):
            CompartmentState(s=1.5, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0, removed=0)
        with pytest.raises(TypeError):
            CompartmentState(s=True, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0, removed=0)

    def test_frozen(self):
        s = CompartmentState(s=1, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0, removed=0)
        with pytest.raises(AttributeError):
            s.s = 2


class TestModelParams:
    def test_roundtrip(self):
        assert ModelParams.from_sequence(TRUTH.as_tuple()) == TRUTH

    def test_field_order(self):
        assert ModelParams.FIELD_ORDER == (
            "beta_ch", "beta_ih", "beta_cc", "beta_ic", "sigma", "alpha")

    @pytest.mark.parametrize("bad", [-0.1, float("nan"), float("inf")])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            ModelParams(bad, 0, 0, 0, 0, 0)


class TestFixedRates:
    def test_defaults(self):
        assert FixedRates().as_tuple() == (1.3, 1.3, 10.0, 10.0)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            FixedRates(rho1=0.0)


class TestModelMask:
    def test_requires_one_active(self):
        with pytest.raises(ValueError):
            ModelMask(False, False, False, False)

    def test_active_names(self):
        assert ModelMask(True, False, False, True).active_names == (
            "beta_ch", "beta_ic")

    def test_apply_mask_zeroes_inactive(self):
        masked = apply_mask(TRUTH, ModelMask(True, False, True, False))
        assert masked.beta_ch == TRUTH.beta_ch
        assert masked.beta_ih == 0.0
        assert masked.beta_cc == TRUTH.beta_cc
        assert masked.beta_ic == 0.0
        assert masked.sigma == TRUTH.sigma and masked.alpha == TRUTH.alpha

    def test_apply_full_mask_is_identity(self):
        assert apply_mask(TRUTH, ModelMask.full()) is TRUTH


class TestColonizationProbability:
    def test_reference_value(self):
        # 1 - exp(-(0.0421*25/3048 + 0.01)), high-precision reference
        state = CompartmentState(s=3023, col_ha=25, inf_ha=0, col_ca=0,
                                 inf_ca=0, removed=0)
        params = ModelParams(0.0421, 0.0, 0.0, 0.0, 0.01, 0.0)
        p = colonization_probability(state, params, ModelMask.full())
        assert p == pytest.approx(0.0102919797548714, abs=1e-12)

    def test_zero_rates_give_zero(self):
        state = CompartmentState(s=10, col_ha=5, inf_ha=5, col_ca=5, inf_ca=5,
                                 removed=0)
        zero = ModelParams(0, 0, 0, 0, 0, 0)
        assert colonization_probability(state, zero, ModelMask.full()) == 0.0

    def test_strictly_below_one(self):
        state = CompartmentState(s=1, col_ha=1, inf_ha=0, col_ca=0, inf_ca=0,
                                 removed=0)
        params = ModelParams(10.0, 0, 0, 0, 10.0, 0)
        assert colonization_probability(state, params, ModelMask.full()) < 1.0

    def test_monotone_in_prevalence(self):
        lo = CompartmentState(s=100, col_ha=1, inf_ha=0, col_ca=0, inf_ca=0,
                              removed=0)
        hi = CompartmentState(s=100, col_ha=50, inf_ha=0, col_ca=0, inf_ca=0,
                              removed=0)
        mask = ModelMask.full()
        assert colonization_probability(hi, TRUTH, mask) > \
            colonization_probability(lo, TRUTH, mask)

    def test_mask_drops_term(self):
        state = CompartmentState(s=100, col_ha=0, inf_ha=20, col_ca=0, inf_ca=0,
                                 removed=0)
        full = colonization_probability(state, TRUTH, ModelMask.full())
        no_ih = colonization_probability(
            state, TRUTH, ModelMask(True, False, True, True))
        sigma_only = hazard_to_probability(TRUTH.sigma)
        assert full > no_ih == pytest.approx(sigma_only)

    def test_empty_population_raises(self):
        state = CompartmentState(s=0, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0,
                                 removed=0)
        with pytest.raises(DegeneratePopulationError):
            colonization_probability(state, TRUTH, ModelMask.full())


class TestHazardToProbability:
    def test_values(self):
        assert hazard_to_probability(0.0) == 0.0
        assert hazard_to_probability(1.3) == pytest.approx(1 - math.exp(-1.3))
        assert hazard_to_probability(50.0) == pytest.approx(1.0)

    def test_rejects_negative_and_nan(self):
        for bad in (-1.0, float("nan"), float("inf")):
            with pytest.raises(ValueError):
                hazard_to_probability(bad)


class TestStepCompartments:
    def test_bookkeeping(self):
        state = CompartmentState(s=100, col_ha=10, inf_ha=5, col_ca=8, inf_ca=4,
                                 removed=2)
        ev = EventCounts(new_col_ha=3, new_inf_ha=2, new_col_ca=6, new_inf_ca=1,
                         rem_col_ha=4, rem_inf_ha=1, rem_col_ca=5, rem_inf_ca=3)
        nxt = step_compartments(state, ev, ExogenousFlows(20, 15))
        assert nxt == CompartmentState(s=100 + 20 - 15 - 3,
                                       col_ha=10 + 3 - 2 - 4,
                                       inf_ha=5 + 2 - 1,
                                       col_ca=8 + 6 - 5,
                                       inf_ca=4 + 1 - 3,
                                       removed=2 + 4 + 1 + 5 + 3)

    def test_forced_negative_s(self):
        state = CompartmentState(s=5, col_ha=0, inf_ha=0, col_ca=0, inf_ca=0,
                                 removed=0)
        with pytest.raises(InfeasibleStepError, match="month 7"):
            step_compartments(state, EventCounts(),
                              ExogenousFlows(admissions=3, discharges=9), month=7)

    @pytest.mark.parametrize("events,pattern", [
        (EventCounts(new_col_ha=6), "new_col_ha > s"),
        (EventCounts(new_inf_ha=2, rem_col_ha=2), r"new_inf_ha \+ rem_col_ha > col_ha"),
        (EventCounts(rem_inf_ha=3), "rem_inf_ha > inf_ha"),
        (EventCounts(rem_col_ca=2), "rem_col_ca > col_ca"),
        (EventCounts(rem_inf_ca=2), "rem_inf_ca > inf_ca"),
    ])
    def test_infeasible_events_name_equation(self, events, pattern):
        state = CompartmentState(s=5, col_ha=3, inf_ha=2, col_ca=1, inf_ca=1,
                                 removed=0)
        with pytest.raises(InfeasibleStepError, match=pattern):
            step_compartments(state, events, ExogenousFlows())

    def test_removals_capped_by_existing_census(self):
        # CA removals come from the standing census only, not this month's
        # arrivals
        state = CompartmentState(s=5, col_ha=0, inf_ha=0, col_ca=2, inf_ca=0,
                                 removed=0)
        ev = EventCounts(new_col_ca=10, rem_col_ca=3)
        with pytest.raises(InfeasibleStepError):
            step_compartments(state, ev, ExogenousFlows())


counts = st.integers(min_value=0, max_value=50)


@st.composite
def feasible_steps(draw):
    state = CompartmentState(
        s=draw(st.integers(0, 200)), col_ha=draw(counts), inf_ha=draw(counts),
        col_ca=draw(counts), inf_ca=draw(counts), removed=draw(counts))
    new_col = draw(st.integers(0, state.s))
    new_inf = draw(st.integers(0, state.col_ha))
    ev = EventCounts(
        new_col_ha=new_col,
        new_inf_ha=new_inf,
        new_col_ca=draw(counts),
        new_inf_ca=draw(counts),
        rem_col_ha=draw(st.integers(0, state.col_ha - new_inf)),
        rem_inf_ha=draw(st.integers(0, state.inf_ha)),
        rem_col_ca=draw(st.integers(0, state.col_ca)),
        rem_inf_ca=draw(st.integers(0, state.inf_ca)),
    )
    adm = draw(st.integers(0, 100))
    max_dis = state.s + adm - ev.new_col_ha
    flows = ExogenousFlows(adm, draw(st.integers(0, max_dis)))
    return state, ev, flows


@given(feasible_steps())
@settings(max_examples=200)
def test_population_conservation(step):
    state, ev, flows = step
    nxt = step_compartments(state, ev, flows)
    assert nxt.total - state.total == (
        flows.admissions - flows.discharges + ev.new_col_ca + ev.new_inf_ca)


@given(feasible_steps())
@settings(max_examples=200)
def test_removed_is_monotone(step):
    state, ev, flows = step
    assert step_compartments(state, ev, flows).removed >= state.removed
