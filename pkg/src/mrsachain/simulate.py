"""Seeded stochastic forward simulation of the transmission model.

Trajectories are generated with counter-based Philox streams so that
replicate ensembles are reproducible and embarrassingly parallel: the
stream for replicate ``j`` is keyed by ``base_seed XOR j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    CompartmentState,
    EventCounts,
    ExogenousFlows,
    FixedRates,
    InfeasibleStepError,
    ModelMask,
    ModelParams,
    apply_mask,
    colonization_probability,
    hazard_to_probability,
    step_compartments,
)

__all__ = [
    "PoissonArrivals",
    "SimulationConfig",
    "Trajectory",
    "ReplicateSummary",
    "REFERENCE_PARAMS",
    "REFERENCE_SEED",
    "draw_transitions",
    "simulate_trajectory",
    "generate_synthetic_dataset",
    "reference_simulation_config",
    "make_reference_dataset",
    "posterior_predictive",
]

#: Mean monthly hospital throughput used when no flow series is supplied.
DEFAULT_ADMISSIONS = 11918
DEFAULT_DISCHARGES = 11918
DEFAULT_HORIZON = 61


@dataclass(frozen=True)
class PoissonArrivals:
    """Endogenous generator spec for CA arrivals: independent Poisson counts."""

    mean_col: float
    mean_inf: float

    def __post_init__(self):
        if self.mean_col < 0 or self.mean_inf < 0:
            raise ValueError("Poisson means must be non-negative")


@dataclass(frozen=True)
class SimulationConfig:
    """Inputs that fully determine one stochastic trajectory (with the seed)."""

    init: CompartmentState
    horizon: int = DEFAULT_HORIZON
    admissions: np.ndarray | None = None
    discharges: np.ndarray | None = None
    ca_arrivals: PoissonArrivals | tuple[np.ndarray, np.ndarray] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for name, default in (("admissions", DEFAULT_ADMISSIONS),
                              ("discharges", DEFAULT_DISCHARGES)):
            v = getattr(self, name)
            if v is None:
                v = np.full(self.horizon, default, dtype=np.int64)
            else:
                v = np.asarray(v, dtype=np.int64)
                if v.shape != (self.horizon,):
                    raise ValueError(f"{name} series must have length {self.horizon}")
                if v.min() < 0:
                    raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, v)
        ca = self.ca_arrivals
        if ca is None:
            ca = PoissonArrivals(0.0, 0.0)
        elif not isinstance(ca, PoissonArrivals):
            col, inf = (np.asarray(a, dtype=np.int64) for a in ca)
            if col.shape != (self.horizon,) or inf.shape != (self.horizon,):
                raise ValueError(f"ca_arrivals series must have length {self.horizon}")
            if col.min() < 0 or inf.min() < 0:
                raise ValueError("ca_arrivals must be non-negative")
            ca = (col, inf)
        object.__setattr__(self, "ca_arrivals", ca)


@dataclass
class Trajectory:
    """A realized path: horizon+1 states and the horizon event records.

    ``joint_rejections`` counts resampled removal draws on the
    HA-colonized compartment; see :func:`draw_transitions`.
    """

    states: list[CompartmentState]
    events: list[EventCounts]
    joint_rejections: int = 0

    @property
    def horizon(self) -> int:
        return len(self.events)

    def event_series(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.events], dtype=np.int64)

    def state_series(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.states], dtype=np.int64)


def _stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _draw_transitions(
    state: CompartmentState, params: ModelParams, fixed: FixedRates,
    mask: ModelMask, rng: np.random.Generator,
) -> tuple[EventCounts, int]:
    p_col = colonization_probability(state, params, mask)
    p_inf = hazard_to_probability(apply_mask(params, mask).alpha)
    p_r1 = hazard_to_probability(fixed.rho1)
    p_r2 = hazard_to_probability(fixed.rho2)
    p_r3 = hazard_to_probability(fixed.rho3)
    p_r4 = hazard_to_probability(fixed.rho4)

    new_col_ha = int(rng.binomial(state.s, p_col))
    # The new-infection and removal draws share the HA-colonized pool and
    # can jointly exceed it.  Infections are drawn first so their marginal
    # is the exact binomial; the removal count is then rejection-resampled
    # until the pair is feasible (a truncated binomial on the remainder).
    # The likelihood for these two channels is the product of the two
    # unnormalized binomial pmfs over the feasible set, and its score in
    # alpha matches the exact binomial infection frequency — so this draw
    # order is the one that keeps simulate-then-fit recovery calibrated.
    # Resampling the pair instead would truncate the infection marginal
    # (conditional mean 10.57 instead of 11.56 at a census of 50) and
    # systematically depress fitted alpha.
    new_inf_ha = int(rng.binomial(state.col_ha, p_inf))
    rejections = 0
    while True:
        rem_col_ha = int(rng.binomial(state.col_ha, p_r1))
        if new_inf_ha + rem_col_ha <= state.col_ha:
            break
        rejections += 1
    events = EventCounts(
        new_col_ha=new_col_ha,
        new_inf_ha=new_inf_ha,
        rem_col_ha=rem_col_ha,
        rem_inf_ha=int(rng.binomial(state.inf_ha, p_r2)),
        rem_col_ca=int(rng.binomial(state.col_ca, p_r3)),
        rem_inf_ca=int(rng.binomial(state.inf_ca, p_r4)),
    )
    return events, rejections


def draw_transitions(
    state: CompartmentState, params: ModelParams, fixed: FixedRates,
    mask: ModelMask, rng: np.random.Generator,
) -> EventCounts:
    """Draw one month of binomial transitions from ``state``.

    CA arrivals are exogenous and not drawn here; the returned counts
    have ``new_col_ca = new_inf_ca = 0``.
    """
    events, _ = _draw_transitions(state, params, fixed, mask, rng)
    return events


def simulate_trajectory(
    config: SimulationConfig, params: ModelParams, fixed: FixedRates,
    mask: ModelMask,
) -> Trajectory:
    """Iterate draws and difference equations over the configured horizon."""
    from dataclasses import replace

    rng = _stream(config.seed)
    states = [config.init]
    events: list[EventCounts] = []
    rejections = 0
    for t in range(config.horizon):
        ev, rej = _draw_transitions(states[-1], params, fixed, mask, rng)
        rejections += rej
        if isinstance(config.ca_arrivals, PoissonArrivals):
            ca_col = int(rng.poisson(config.ca_arrivals.mean_col))
            ca_inf = int(rng.poisson(config.ca_arrivals.mean_inf))
        else:
            ca_col = int(config.ca_arrivals[0][t])
            ca_inf = int(config.ca_arrivals[1][t])
        ev = replace(ev, new_col_ca=ca_col, new_inf_ca=ca_inf)
        flows = ExogenousFlows(int(config.admissions[t]), int(config.discharges[t]))
        states.append(step_compartments(states[-1], ev, flows, month=t))
        events.append(ev)
    return Trajectory(states=states, events=events, joint_rejections=rejections)


def generate_synthetic_dataset(
    config: SimulationConfig, params: ModelParams, fixed: FixedRates,
    mask: ModelMask,
):
    """Simulate a trajectory and keep only the observable series."""
    from .likelihood import ObservedDataset

    traj = simulate_trajectory(config, params, fixed, mask)
    return ObservedDataset(
        init=config.init,
        new_col_ha=traj.event_series("new_col_ha"),
        new_inf_ha=traj.event_series("new_inf_ha"),
        new_col_ca=traj.event_series("new_col_ca"),
        new_inf_ca=traj.event_series("new_inf_ca"),
        admissions=config.admissions.copy(),
        discharges=config.discharges.copy(),
    )


#: Rate vector used to generate the bundled reference dataset.
REFERENCE_PARAMS = ModelParams(beta_ch=0.0421, beta_ih=0.0567, beta_cc=0.0095,
                               beta_ic=0.0407, sigma=0.0100, alpha=0.2628)

#: Seed of the bundled reference dataset.
REFERENCE_SEED = 20260826

#: Initial census of the reference scenario: a 3048-bed hospital with a
#: sizeable standing HA-colonized population.  The early relaxation of
#: that census toward its steady state gives the HA prevalence series
#: real variation, which the HA transmission terms need in order to be
#: identified when the dataset is fitted.
REFERENCE_INIT = CompartmentState(s=3048, col_ha=150, inf_ha=30, col_ca=46,
                                  inf_ca=23, removed=0)


def reference_simulation_config(seed: int = REFERENCE_SEED,
                                horizon: int = DEFAULT_HORIZON) -> SimulationConfig:
    """The synthetic reference scenario, fully determined by the seed.

    CA arrival counts are Poisson with per-month means drawn from wide
    uniform ranges, so the CA census fluctuates strongly from month to
    month.  That variation is what separates the four transmission terms
    from the constant import rate when the dataset is fitted; with
    near-constant arrivals the rate split is barely identified.
    """
    rng = _stream(seed ^ 0xA5A5A5A5)  # separate stream from the trajectory
    col_means = rng.uniform(0.0, 500.0, horizon)
    inf_means = rng.uniform(0.0, 250.0, horizon)
    ca = (rng.poisson(col_means).astype(np.int64),
          rng.poisson(inf_means).astype(np.int64))
    return SimulationConfig(init=REFERENCE_INIT, horizon=horizon,
                            ca_arrivals=ca, seed=seed)


def make_reference_dataset(seed: int = REFERENCE_SEED):
    """Regenerate the bundled reference dataset (or a sibling at another seed)."""
    return generate_synthetic_dataset(
        reference_simulation_config(seed), REFERENCE_PARAMS, FixedRates(),
        ModelMask.full())


@dataclass
class ReplicateSummary:
    """Per-month posterior-predictive bands for the two HA event channels."""

    mean_col: np.ndarray
    lo_col: np.ndarray
    hi_col: np.ndarray
    mean_inf: np.ndarray
    lo_inf: np.ndarray
    hi_inf: np.ndarray

    @property
    def months(self) -> int:
        return len(self.mean_col)

    def to_csv(self, path) -> None:
        from .io_utils import atomic_write_text

        lines = ["month,mean_col,lo_col,hi_col,mean_inf,lo_inf,hi_inf"]
        for t in range(self.months):
            lines.append(
                f"{t + 1},{self.mean_col[t]!r},{self.lo_col[t]!r},{self.hi_col[t]!r},"
                f"{self.mean_inf[t]!r},{self.lo_inf[t]!r},{self.hi_inf[t]!r}"
            )
        atomic_write_text(path, "\n".join(lines) + "\n")


def posterior_predictive(
    chain, config: SimulationConfig, fixed: FixedRates, mask: ModelMask,
    n_rep: int, seed: int,
) -> ReplicateSummary:
    """Simulate replicates at randomly chosen posterior draws and band them.

    ``chain`` needs only a ``params`` array of shape (draws, 6); each
    replicate runs on its own Philox stream keyed by ``seed XOR j``.
    """
    params_draws = np.asarray(chain.params if hasattr(chain, "params") else chain,
                              dtype=np.float64)
    if params_draws.ndim != 2 or params_draws.shape[0] == 0:
        raise ValueError("chain must contain at least one draw")
    if n_rep < 1:
        raise ValueError("n_rep must be >= 1")

    # draw-index picker gets its own stream so replicate streams (keyed
    # seed XOR j) never replay it
    picker = _stream(seed ^ 0x9E3779B97F4A7C15)
    idx = picker.integers(0, params_draws.shape[0], size=n_rep)
    cols = np.empty((n_rep, config.horizon))
    infs = np.empty((n_rep, config.horizon))
    for j in range(n_rep):
        params = ModelParams.from_sequence(params_draws[idx[j]])
        rep_config = SimulationConfig(
            init=config.init, horizon=config.horizon,
            admissions=config.admissions, discharges=config.discharges,
            ca_arrivals=config.ca_arrivals, seed=seed ^ j,
        )
        traj = simulate_trajectory(rep_config, params, fixed, mask)
        cols[j] = traj.event_series("new_col_ha")
        infs[j] = traj.event_series("new_inf_ha")
    return ReplicateSummary(
        mean_col=cols.mean(axis=0),
        lo_col=np.quantile(cols, 0.025, axis=0),
        hi_col=np.quantile(cols, 0.975, axis=0),
        mean_inf=infs.mean(axis=0),
        lo_inf=np.quantile(infs, 0.025, axis=0),
        hi_inf=np.quantile(infs, 0.975, axis=0),
    )
