"""Stochastic chain-binomial modelling of hospital MRSA transmission.

Monthly compartmental dynamics for hospital- and community-acquired
MRSA (colonized and infected states), Bayesian fitting by random-walk
Metropolis-Hastings with latent removal counts, WAIC comparison over the
fifteen-sub-model transmission lattice, and posterior-predictive checks.
"""

from .likelihood import (
    IMPOSSIBLE,
    LatentRemovals,
    ObservedDataset,
    PointwiseLogLik,
    log_binomial_pmf,
    log_likelihood,
    pointwise_log_likelihood,
    reconstruct_trajectory,
)
from .mcmc import (
    Chain,
    McmcConfig,
    PosteriorSummary,
    PriorSpec,
    effective_sample_size,
    export_trace,
    log_posterior,
    log_prior,
    rwmh_sample,
    summarize_chain,
    update_latent_removals,
)
from .model import (
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
from .selection import (
    ComparisonTable,
    WaicResult,
    compare_models,
    enumerate_models,
    kruskal_wallis,
    mean_absolute_error,
    waic,
    waic_from_chain,
)
from .simulate import (
    REFERENCE_PARAMS,
    REFERENCE_SEED,
    PoissonArrivals,
    ReplicateSummary,
    SimulationConfig,
    Trajectory,
    draw_transitions,
    generate_synthetic_dataset,
    make_reference_dataset,
    posterior_predictive,
    reference_simulation_config,
    simulate_trajectory,
)
from .datasets import RunConfig, load_config, load_dataset, reference_dataset_path

__version__ = "0.1.0"
