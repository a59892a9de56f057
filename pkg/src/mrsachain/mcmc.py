"""Bayesian posterior sampling for the transmission model.

Random-walk Metropolis-Hastings over the positive rate vector (Gaussian
proposals on the log scale, with the Jacobian in the acceptance ratio),
with the four monthly removal series treated as latent variables and
updated between parameter updates by integer Metropolis sweeps:
single-site steps plus total-preserving shifts between adjacent months.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .likelihood import (
    IMPOSSIBLE,
    LatentRemovals,
    LikelihoodWorkspace,
    ObservedDataset,
)
from .model import FixedRates, ModelMask, ModelParams, apply_mask

__all__ = [
    "PriorSpec",
    "McmcConfig",
    "Chain",
    "PosteriorSummary",
    "ParameterSummary",
    "gamma_log_density",
    "log_prior",
    "log_posterior",
    "initial_latent_removals",
    "update_latent_removals",
    "rwmh_sample",
    "effective_sample_size",
    "summarize_chain",
    "export_trace",
]

PARAM_NAMES = ModelParams.FIELD_ORDER


@dataclass(frozen=True)
class PriorSpec:
    """Independent gamma priors, one (shape, rate) pair per estimated rate."""

    shapes: tuple[float, float, float, float, float, float]
    rates: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        if len(self.shapes) != 6 or len(self.rates) != 6:
            raise ValueError("need one (shape, rate) pair per parameter")
        if any(a <= 0 for a in self.shapes) or any(b <= 0 for b in self.rates):
            raise ValueError("gamma shapes and rates must be positive")

    @classmethod
    def same_gamma(cls, shape: float, rate: float) -> "PriorSpec":
        return cls((shape,) * 6, (rate,) * 6)

    @classmethod
    def preset(cls, which: int) -> "PriorSpec":
        rates = {1: 0.5, 2: 1.0, 3: 1.5}
        if which not in rates:
            raise ValueError("prior preset must be 1, 2 or 3")
        return cls.same_gamma(1.0, rates[which])

    def means(self) -> np.ndarray:
        return np.array(self.shapes) / np.array(self.rates)


@dataclass(frozen=True)
class McmcConfig:
    n_iter: int = 60_000
    n_burnin: int = 10_000
    initial_params: ModelParams | None = None
    proposal_scales: tuple[float, ...] | float = 0.5
    adapt: bool = True
    target_acceptance: float = 0.44
    n_chains: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.n_burnin < self.n_iter:
            raise ValueError("require 0 <= n_burnin < n_iter")
        if self.n_chains < 1:
            raise ValueError("n_chains must be >= 1")
        scales = self.proposal_scales
        if np.isscalar(scales):
            scales = (float(scales),) * 6
        else:
            scales = tuple(float(s) for s in scales)
            if len(scales) != 6:
                raise ValueError("need one proposal scale per parameter")
        if any(s < 0 for s in scales):
            raise ValueError("proposal scales must be non-negative")
        object.__setattr__(self, "proposal_scales", scales)


@dataclass
class Chain:
    """Retained posterior draws with their latent removals and diagnostics."""

    params: np.ndarray              # (n_kept, 6)
    log_posterior: np.ndarray       # (n_kept,)
    latents: np.ndarray             # (n_kept, 4, months), int32
    acceptance_rates: dict[str, float]
    latent_acceptance: float
    final_scales: np.ndarray
    mask: ModelMask
    seed: int
    psrf: dict[str, float] | None = None

    def __len__(self) -> int:
        return self.params.shape[0]

    @property
    def months(self) -> int:
        return self.latents.shape[2]

    def param_series(self, name: str) -> np.ndarray:
        return self.params[:, PARAM_NAMES.index(name)]

    def draw(self, i: int) -> tuple[ModelParams, LatentRemovals, float]:
        return (
            ModelParams.from_sequence(self.params[i]),
            LatentRemovals.from_matrix(self.latents[i].astype(np.int64)),
            float(self.log_posterior[i]),
        )


def gamma_log_density(x: float, shape: float, rate: float) -> float:
    """Gamma(shape, rate) log density; IMPOSSIBLE outside the support."""
    return float(_kernels.gamma_logpdf(float(x), float(shape), float(rate)))


def _free_flags(mask: ModelMask) -> np.ndarray:
    return np.array(list(mask.as_tuple()) + [True, True], dtype=np.bool_)


def log_prior(params, prior: PriorSpec, mask: ModelMask) -> float:
    """Sum of gamma log densities over the active parameters.

    Masked-out transmission rates are excluded from the parameter vector
    and contribute nothing.  Accepts a ModelParams or a length-6 sequence
    (so out-of-support values can be scored to the IMPOSSIBLE sentinel).
    """
    values = params.as_tuple() if isinstance(params, ModelParams) else tuple(params)
    free = _free_flags(mask)
    total = 0.0
    for j in range(6):
        if not free[j]:
            continue
        lp = gamma_log_density(values[j], prior.shapes[j], prior.rates[j])
        if lp == IMPOSSIBLE:
            return IMPOSSIBLE
        total += lp
    return total


def log_posterior(
    data: ObservedDataset, latents: LatentRemovals, params: ModelParams,
    fixed: FixedRates, mask: ModelMask, prior: PriorSpec,
) -> float:
    """Unnormalized log posterior: log-likelihood plus log prior."""
    lp = log_prior(params, prior, mask)
    if lp == IMPOSSIBLE:
        return IMPOSSIBLE
    from .likelihood import log_likelihood

    ll = log_likelihood(data, latents, params, fixed, mask)
    return IMPOSSIBLE if ll == IMPOSSIBLE else ll + lp


class LatentInitializationError(RuntimeError):
    """No feasible starting configuration for the latent removals."""


def initial_latent_removals(
    data: ObservedDataset, params: ModelParams, fixed: FixedRates,
    mask: ModelMask,
) -> LatentRemovals:
    """Deterministic greedy start: round(eligible * removal probability),
    clipped so the whole trajectory stays feasible.

    Each removal series only interacts with its own compartment, whose
    inflows and non-removal outflows are observed, so the series can be
    built channel by channel with an exact forward feasibility cap.
    """
    tau = data.months
    p = apply_mask(params, mask)
    probs = [
        -math.expm1(-fixed.rho1),
        -math.expm1(-fixed.rho2),
        -math.expm1(-fixed.rho3),
        -math.expm1(-fixed.rho4),
    ]
    # (initial count, inflow series, observed outflow series) per channel
    specs = [
        (data.init.col_ha, data.new_col_ha, data.new_inf_ha),
        (data.init.inf_ha, data.new_inf_ha, np.zeros(tau, dtype=np.int64)),
        (data.init.col_ca, data.new_col_ca, np.zeros(tau, dtype=np.int64)),
        (data.init.inf_ca, data.new_inf_ca, np.zeros(tau, dtype=np.int64)),
    ]
    out = np.zeros((4, tau), dtype=np.int64)
    for row, (x0, inflow, obs_out) in enumerate(specs):
        x = int(x0)
        for t in range(tau):
            if obs_out[t] > x:
                raise LatentInitializationError(
                    f"observed outflow exceeds compartment {row} at month {t}"
                )
            want = round(x * probs[row])
            cap = x - int(obs_out[t])
            # forward cap: with zero future removals, the compartment at
            # every later month must still cover its observed outflow
            cap_future = cap
            level = x - int(obs_out[t])
            for u in range(t + 1, tau):
                level += int(inflow[u - 1])
                slack = level - int(obs_out[u])
                if slack < cap_future:
                    cap_future = slack
                level -= int(obs_out[u])
            r = max(0, min(want, cap, cap_future))
            out[row, t] = r
            x = x - int(obs_out[t]) - r + int(inflow[t])
    latents = LatentRemovals.from_matrix(out)
    # final exactness check against the shared recursion
    from .likelihood import reconstruct_trajectory

    try:
        reconstruct_trajectory(data, latents)
    except Exception as exc:  # pragma: no cover - defensive
        raise LatentInitializationError(str(exc)) from exc
    return latents


def update_latent_removals(
    current: LatentRemovals, data: ObservedDataset, params: ModelParams,
    fixed: FixedRates, mask: ModelMask, rng: np.random.Generator,
) -> LatentRemovals:
    """One full Metropolis sweep over the latent removals.

    Proposes +/-1 or +/-2 at each (channel, month) site, then a
    total-preserving shift of one or two removals between each pair of
    adjacent months.  The shift moves only perturb a two-month window of
    the reconstructed census, so they are cheap to accept and transport
    latent mass along the series far faster than site moves alone.
    Infeasible or zero-probability proposals are rejected, so detailed
    balance holds with respect to the joint posterior at fixed
    parameters.
    """
    ws = LikelihoodWorkspace(data)
    theta = np.array(apply_mask(params, mask).as_tuple())
    rho = np.array(fixed.as_tuple())
    lat = current.as_matrix().copy()
    cur_ll = _kernels.total_loglik(ws.init, ws.obs, ws.adm, ws.dis, lat,
                                   theta, rho, ws.logfact)
    if cur_ll == IMPOSSIBLE:
        raise ValueError("current latent configuration has zero posterior mass")
    steps = np.array([-2, -1, 1, 2])
    for row in range(4):
        for t in range(lat.shape[1]):
            step = steps[rng.integers(0, 4)]
            new = lat[row, t] + step
            if new < 0:
                continue
            old = lat[row, t]
            lat[row, t] = new
            new_ll = _kernels.total_loglik(ws.init, ws.obs, ws.adm, ws.dis,
                                           lat, theta, rho, ws.logfact)
            delta = new_ll - cur_ll
            if delta >= 0 or math.log(rng.random()) < delta:
                cur_ll = new_ll
            else:
                lat[row, t] = old
    for row in range(4):
        for t in range(lat.shape[1] - 1):
            amount = int(rng.integers(1, 3))
            src = t if rng.random() < 0.5 else t + 1
            dst = t + 1 if src == t else t
            if lat[row, src] < amount:
                continue
            lat[row, src] -= amount
            lat[row, dst] += amount
            new_ll = _kernels.total_loglik(ws.init, ws.obs, ws.adm, ws.dis,
                                           lat, theta, rho, ws.logfact)
            delta = new_ll - cur_ll
            if delta >= 0 or math.log(rng.random()) < delta:
                cur_ll = new_ll
            else:
                lat[row, src] += amount
                lat[row, dst] -= amount
    return LatentRemovals.from_matrix(lat)


def _run_single_chain(
    ws: LikelihoodWorkspace, data: ObservedDataset, fixed: FixedRates,
    mask: ModelMask, prior: PriorSpec, config: McmcConfig, seed: int,
) -> Chain:
    free = _free_flags(mask)
    if config.initial_params is not None:
        theta0 = np.array(apply_mask(config.initial_params, mask).as_tuple())
    else:
        theta0 = np.where(free, prior.means(), 0.0)
    init_params = ModelParams.from_sequence(theta0)
    latents0 = initial_latent_removals(data, init_params, fixed, mask)

    n_kept = config.n_iter - config.n_burnin
    tau = data.months
    out_params = np.empty((n_kept, 6))
    out_logpost = np.empty(n_kept)
    out_lat = np.empty((n_kept, 4, tau), dtype=np.int32)
    theta = theta0.copy()
    lat = latents0.as_matrix().copy()
    scales = np.array(config.proposal_scales, dtype=np.float64)

    status, acc_rates, lat_rate = _kernels.rwmh_chain(
        ws.init, ws.obs, ws.adm, ws.dis, lat, theta, free,
        np.array(fixed.as_tuple()), ws.logfact,
        np.array(prior.shapes), np.array(prior.rates), scales,
        config.n_iter, config.n_burnin, config.adapt,
        config.target_acceptance, np.uint32(seed & 0xFFFFFFFF),
        out_params, out_logpost, out_lat,
    )
    if status >= 0:
        raise LatentInitializationError(
            f"initial configuration infeasible at month {status // 10}"
        )
    return Chain(
        params=out_params,
        log_posterior=out_logpost,
        latents=out_lat,
        acceptance_rates={
            name: float(acc_rates[j]) for j, name in enumerate(PARAM_NAMES) if free[j]
        },
        latent_acceptance=float(lat_rate),
        final_scales=scales,
        mask=mask,
        seed=seed,
    )


def rwmh_sample(
    data: ObservedDataset, fixed: FixedRates, mask: ModelMask,
    prior: PriorSpec, config: McmcConfig,
) -> Chain:
    """Sample the joint posterior of rates and latent removals.

    With ``n_chains > 1`` the chains run on decorrelated seeds, the
    retained draws are concatenated, and a split-free potential scale
    reduction factor per parameter is attached as a diagnostic.
    """
    ws = LikelihoodWorkspace(data)
    chains = [
        _run_single_chain(ws, data, fixed, mask, prior, config,
                          config.seed + 0x9E3779B9 * c)
        for c in range(config.n_chains)
    ]
    if config.n_chains == 1:
        return chains[0]
    merged = Chain(
        params=np.concatenate([c.params for c in chains]),
        log_posterior=np.concatenate([c.log_posterior for c in chains]),
        latents=np.concatenate([c.latents for c in chains]),
        acceptance_rates={
            k: float(np.mean([c.acceptance_rates[k] for c in chains]))
            for k in chains[0].acceptance_rates
        },
        latent_acceptance=float(np.mean([c.latent_acceptance for c in chains])),
        final_scales=chains[0].final_scales,
        mask=mask,
        seed=config.seed,
        psrf=_psrf([c.params for c in chains]),
    )
    return merged


def _psrf(param_blocks: list[np.ndarray]) -> dict[str, float]:
    out = {}
    m = len(param_blocks)
    n = param_blocks[0].shape[0]
    for j, name in enumerate(PARAM_NAMES):
        cols = np.stack([b[:, j] for b in param_blocks])
        w = cols.var(axis=1, ddof=1).mean()
        b = n * cols.mean(axis=1).var(ddof=1)
        if w == 0:
            out[name] = 1.0
        else:
            out[name] = float(math.sqrt(((n - 1) / n * w + b / n) / w))
    return out


def effective_sample_size(x: np.ndarray) -> tuple[float, bool]:
    """Geyer initial-positive-sequence ESS.

    Returns (ess, degenerate): a zero-variance series reports its full
    length with the degenerate flag set.  ESS is clamped to (0, len(x)].
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n == 0:
        raise ValueError("empty series")
    v = x.var()
    if v == 0:
        return float(n), True
    # autocovariance via FFT
    m = 1 << (2 * n - 1).bit_length()
    centered = x - x.mean()
    f = np.fft.rfft(centered, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:n].real / n
    rho = acov / acov[0]
    tau_int = 0.0
    k = 0
    while 2 * k + 1 < n:
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0:
            break
        tau_int += pair
        k += 1
    tau_int = max(2.0 * tau_int - 1.0, 1.0)
    return float(min(n / tau_int, n)), False


@dataclass(frozen=True)
class ParameterSummary:
    mean: float
    ci_low: float
    ci_high: float
    ess: float
    degenerate: bool = False


@dataclass
class PosteriorSummary:
    """Per-parameter posterior mean, 95% equal-tailed interval and ESS."""

    parameters: dict[str, ParameterSummary]
    acceptance_rates: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "parameters": {
                name: {
                    "mean": s.mean, "ci_low": s.ci_low, "ci_high": s.ci_high,
                    "ess": s.ess, "degenerate": s.degenerate,
                    "acceptance": self.acceptance_rates.get(name),
                }
                for name, s in self.parameters.items()
            }
        }


def summarize_chain(chain: Chain) -> PosteriorSummary:
    """Posterior mean, empirical 2.5%/97.5% quantiles and ESS per parameter."""
    if len(chain) == 0:
        raise ValueError("empty chain")
    free = _free_flags(chain.mask)
    params = {}
    for j, name in enumerate(PARAM_NAMES):
        if not free[j]:
            continue
        x = chain.params[:, j]
        ess, degenerate = effective_sample_size(x)
        params[name] = ParameterSummary(
            mean=float(x.mean()),
            ci_low=float(np.quantile(x, 0.025)),
            ci_high=float(np.quantile(x, 0.975)),
            ess=ess,
            degenerate=degenerate,
        )
    return PosteriorSummary(parameters=params,
                            acceptance_rates=dict(chain.acceptance_rates))


def export_trace(chain: Chain, path) -> None:
    """Write retained draws as CSV, one row per iteration, full precision."""
    from .io_utils import atomic_write_text

    lines = ["iter," + ",".join(PARAM_NAMES) + ",log_post"]
    for i in range(len(chain)):
        vals = ",".join(repr(float(v)) for v in chain.params[i])
        lines.append(f"{i + 1},{vals},{float(chain.log_posterior[i])!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")
