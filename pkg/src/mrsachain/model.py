"""Core model definitions for hospital MRSA transmission.

Seven-compartment monthly census (susceptible, HA/CA colonized and
infected, removed), the transition-probability formulas, and the
difference equations that advance the census one month.  Everything here
is a pure function over immutable values; the simulator and the
likelihood both build on these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "CompartmentState",
    "EventCounts",
    "ModelParams",
    "FixedRates",
    "ModelMask",
    "ExogenousFlows",
    "DegeneratePopulationError",
    "InfeasibleStepError",
    "colonization_probability",
    "hazard_to_probability",
    "step_compartments",
    "apply_mask",
]


class DegeneratePopulationError(ValueError):
    """Raised when a transition probability is requested for an empty ward."""


class InfeasibleStepError(ValueError):
    """Raised when event counts would drive a compartment negative."""

    def __init__(self, month: int | None, equation: str):
        self.month = month
        self.equation = equation
        where = f" at month {month}" if month is not None else ""
        super().__init__(f"infeasible transition{where}: {equation}")


@dataclass(frozen=True)
class CompartmentState:
    """Integer census of the seven compartments at one month."""

    s: int
    col_ha: int
    inf_ha: int
    col_ca: int
    inf_ca: int
    removed: int

    def __post_init__(self):
        for name in ("s", "col_ha", "inf_ha", "col_ca", "inf_ca", "removed"):
            v = getattr(self, name)
            if not isinstance(v, (int,)) or isinstance(v, bool):
                raise TypeError(f"{name} must be an integer, got {v!r}")
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    @property
    def total(self) -> int:
        """Total tracked population, all compartments included."""
        return self.s + self.col_ha + self.inf_ha + self.col_ca + self.inf_ca + self.removed


@dataclass(frozen=True)
class EventCounts:
    """Monthly transition counts: new colonizations/infections and removals."""

    new_col_ha: int = 0
    new_inf_ha: int = 0
    new_col_ca: int = 0
    new_inf_ca: int = 0
    rem_col_ha: int = 0
    rem_inf_ha: int = 0
    rem_col_ca: int = 0
    rem_inf_ca: int = 0

    def __post_init__(self):
        for name in (
            "new_col_ha", "new_inf_ha", "new_col_ca", "new_inf_ca",
            "rem_col_ha", "rem_inf_ha", "rem_col_ca", "rem_inf_ca",
        ):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")

    def check_feasible(self, state: CompartmentState, month: int | None = None) -> None:
        """Verify the counts can be drawn from ``state`` without going negative."""
        if self.new_col_ha > state.s:
            raise InfeasibleStepError(month, "new_col_ha > s")
        if self.new_inf_ha + self.rem_col_ha > state.col_ha:
            raise InfeasibleStepError(month, "new_inf_ha + rem_col_ha > col_ha")
        if self.rem_inf_ha > state.inf_ha:
            raise InfeasibleStepError(month, "rem_inf_ha > inf_ha")
        if self.rem_col_ca > state.col_ca:
            raise InfeasibleStepError(month, "rem_col_ca > col_ca")
        if self.rem_inf_ca > state.inf_ca:
            raise InfeasibleStepError(month, "rem_inf_ca > inf_ca")


@dataclass(frozen=True)
class ModelParams:
    """Estimated rate vector: four transmission rates, import rate, infection rate.

    All rates are per month.  ``beta_ch``/``beta_ih`` scale the force of
    colonization from HA-colonized/HA-infected patients, ``beta_cc``/
    ``beta_ic`` from CA-colonized/CA-infected patients, ``sigma`` is the
    baseline import hazard and ``alpha`` the colonization-to-infection
    hazard.
    """

    beta_ch: float
    beta_ih: float
    beta_cc: float
    beta_ic: float
    sigma: float
    alpha: float

    FIELD_ORDER = ("beta_ch", "beta_ih", "beta_cc", "beta_ic", "sigma", "alpha")

    def __post_init__(self):
        for name in self.FIELD_ORDER:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in self.FIELD_ORDER)

    @classmethod
    def from_sequence(cls, values) -> "ModelParams":
        return cls(*map(float, values))


@dataclass(frozen=True)
class FixedRates:
    """Inverse mean months-to-isolation for the four colonized/infected groups."""

    rho1: float = 1.3
    rho2: float = 1.3
    rho3: float = 10.0
    rho4: float = 10.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho3", "rho4"):
            v = getattr(self, name)
            if not v > 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.rho1, self.rho2, self.rho3, self.rho4)


@dataclass(frozen=True)
class ModelMask:
    """Which of the four transmission terms are active in the force of colonization.

    Inactive terms are structurally pinned to rate 0, so a sub-model's
    likelihood is exactly the full model's likelihood restricted.
    """

    ch_active: bool = True
    ih_active: bool = True
    cc_active: bool = True
    ic_active: bool = True

    def __post_init__(self):
        if not (self.ch_active or self.ih_active or self.cc_active or self.ic_active):
            raise ValueError("at least one transmission term must be active")

    def as_tuple(self) -> tuple[bool, bool, bool, bool]:
        return (self.ch_active, self.ih_active, self.cc_active, self.ic_active)

    @property
    def active_names(self) -> tuple[str, ...]:
        names = ("beta_ch", "beta_ih", "beta_cc", "beta_ic")
        return tuple(n for n, a in zip(names, self.as_tuple()) if a)

    @classmethod
    def full(cls) -> "ModelMask":
        return cls(True, True, True, True)


@dataclass(frozen=True)
class ExogenousFlows:
    """Patients admitted to and discharged from hospital in one month."""

    admissions: int = 0
    discharges: int = 0

    def __post_init__(self):
        if self.admissions < 0 or self.discharges < 0:
            raise ValueError("admissions and discharges must be non-negative")


def apply_mask(params: ModelParams, mask: ModelMask) -> ModelParams:
    """Pin masked-out transmission rates to exactly zero, leaving the rest alone."""
    kwargs = {}
    for name, active in zip(("beta_ch", "beta_ih", "beta_cc", "beta_ic"), mask.as_tuple()):
        if not active:
            kwargs[name] = 0.0
    return replace(params, **kwargs) if kwargs else params


def colonization_probability(
    state: CompartmentState, params: ModelParams, mask: ModelMask
) -> float:
    """Monthly probability that one susceptible patient acquires HA colonization.

    The hazard is the prevalence-weighted sum of the active transmission
    rates plus the import rate; the probability is ``1 - exp(-hazard)``,
    so it is strictly below 1 for finite rates.
    """
    n = state.total
    if n == 0:
        raise DegeneratePopulationError("total population is zero")
    p = apply_mask(params, mask)
    hazard = (
        p.beta_ch * state.col_ha / n
        + p.beta_ih * state.inf_ha / n
        + p.beta_cc * state.col_ca / n
        + p.beta_ic * state.inf_ca / n
        + p.sigma
    )
    return -math.expm1(-hazard)


def hazard_to_probability(rate: float) -> float:
    """Convert a constant monthly hazard to a transition probability."""
    if not math.isfinite(rate) or rate < 0:
        raise ValueError(f"rate must be finite and >= 0, got {rate}")
    return -math.expm1(-rate)


def step_compartments(
    state: CompartmentState, events: EventCounts, flows: ExogenousFlows,
    month: int | None = None,
) -> CompartmentState:
    """Advance the census one month with the given events and admission flows.

    CA colonizations/infections arrive from outside the tracked
    susceptible pool, so they raise the total population; removals only
    reshuffle it.
    """
    events.check_feasible(state, month)
    s_next = state.s + flows.admissions - flows.discharges - events.new_col_ha
    if s_next < 0:
        raise InfeasibleStepError(month, "s + admissions - discharges - new_col_ha < 0")
    return CompartmentState(
        s=s_next,
        col_ha=state.col_ha + events.new_col_ha - events.new_inf_ha - events.rem_col_ha,
        inf_ha=state.inf_ha + events.new_inf_ha - events.rem_inf_ha,
        col_ca=state.col_ca + events.new_col_ca - events.rem_col_ca,
        inf_ca=state.inf_ca + events.new_inf_ca - events.rem_inf_ca,
        removed=state.removed
        + events.rem_col_ha + events.rem_inf_ha + events.rem_col_ca + events.rem_inf_ca,
    )
