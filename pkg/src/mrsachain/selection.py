"""Model comparison across the fifteen-sub-model lattice.

WAIC is computed conditionally on each draw's sampled latent removals,
with one (month, channel) cell as the pointwise unit.  The lattice is
the fifteen non-empty subsets of the four transmission terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as sp_stats

from . import _kernels
from .likelihood import LikelihoodWorkspace, ObservedDataset
from .mcmc import Chain, McmcConfig, PriorSpec, rwmh_sample
from .model import FixedRates, ModelMask

__all__ = [
    "WaicResult",
    "ComparisonRow",
    "ComparisonTable",
    "waic",
    "waic_from_chain",
    "enumerate_models",
    "compare_models",
    "mean_absolute_error",
    "kruskal_wallis",
]


@dataclass(frozen=True)
class WaicResult:
    waic: float
    lppd: float
    p_waic: float
    pointwise_lppd: np.ndarray
    pointwise_p: np.ndarray


def waic(pointwise_draws: np.ndarray) -> WaicResult:
    """WAIC from a stack of per-draw pointwise log-likelihoods.

    Accepts shape (draws, points) or (draws, months, 6).  lppd uses a
    max-shifted log-mean-exp; the penalty is the pointwise sample
    variance with the (S-1) denominator.
    """
    stack = np.asarray(pointwise_draws, dtype=np.float64)
    if stack.ndim == 3:
        stack = stack.reshape(stack.shape[0], -1)
    if stack.ndim != 2 or stack.shape[0] < 1:
        raise ValueError("need a (draws, points) stack with at least one draw")
    bad = np.isneginf(stack)
    if bad.any():
        s, i = np.argwhere(bad)[0]
        raise ValueError(f"pointwise log-likelihood is -inf at draw {s}, point {i}")
    if not np.isfinite(stack).all():
        raise ValueError("pointwise log-likelihoods must be finite")

    n_draws = stack.shape[0]
    shift = stack.max(axis=0)
    lppd_points = shift + np.log(np.exp(stack - shift).mean(axis=0))
    p_points = stack.var(axis=0, ddof=1) if n_draws > 1 else np.zeros(stack.shape[1])
    lppd = float(lppd_points.sum())
    p_waic = float(p_points.sum())
    return WaicResult(
        waic=-2.0 * (lppd - p_waic), lppd=lppd, p_waic=p_waic,
        pointwise_lppd=lppd_points, pointwise_p=p_points,
    )


def waic_from_chain(chain: Chain, data: ObservedDataset,
                    fixed: FixedRates) -> WaicResult:
    """WAIC for a fitted chain without materializing the full stack.

    Evaluates the pointwise matrix at every draw's parameters and latent
    removals with streaming log-sum-exp and Welford accumulators.
    """
    if len(chain) < 2:
        raise ValueError("need at least 2 posterior draws")
    ws = LikelihoodWorkspace(data)
    lppd_points, var_points, status = _kernels.waic_accumulate(
        chain.params, chain.latents, ws.init, ws.obs, ws.adm, ws.dis,
        np.array(fixed.as_tuple()), ws.logfact,
    )
    if status >= 0:
        draw, point = divmod(status, 1_000_000)
        raise ValueError(
            f"pointwise log-likelihood is -inf at draw {draw}, point {point}"
        )
    lppd = float(lppd_points.sum())
    p_waic = float(var_points.sum())
    return WaicResult(
        waic=-2.0 * (lppd - p_waic), lppd=lppd, p_waic=p_waic,
        pointwise_lppd=lppd_points, pointwise_p=var_points,
    )


#: Active transmission-term subsets for models 1..15, in table order:
#: singles, pairs, triples, then the full model.
_MODEL_SUBSETS = [
    ("ch",),
    ("ih",),
    ("cc",),
    ("ic",),
    ("ch", "ih"),
    ("cc", "ic"),
    ("ch", "cc"),
    ("ih", "ic"),
    ("ch", "ic"),
    ("ih", "cc"),
    ("ch", "ih", "cc"),
    ("ch", "cc", "ic"),
    ("ch", "ih", "ic"),
    ("ih", "cc", "ic"),
    ("ch", "ih", "cc", "ic"),
]


def enumerate_models() -> list[ModelMask]:
    """The fifteen sub-model masks, indexed as models 1..15."""
    masks = []
    for subset in _MODEL_SUBSETS:
        masks.append(ModelMask(
            ch_active="ch" in subset,
            ih_active="ih" in subset,
            cc_active="cc" in subset,
            ic_active="ic" in subset,
        ))
    return masks


@dataclass
class ComparisonRow:
    prior_id: int
    model_id: int
    active_params: tuple[str, ...]
    waic: float | None
    lppd: float | None
    p_waic: float | None
    error: str | None = None


@dataclass
class ComparisonTable:
    """15 rows per prior, sorted ascending by WAIC within each prior."""

    rows: list[ComparisonRow]
    sd_by_prior: dict[int, float]

    def to_csv(self, path) -> None:
        from .io_utils import atomic_write_text

        lines = ["prior,model_id,active_params,waic,lppd,p_waic,sd_group"]
        for r in self.rows:
            sd = self.sd_by_prior.get(r.prior_id)
            lines.append(
                f"{r.prior_id},{r.model_id},{'+'.join(r.active_params)},"
                f"{'' if r.waic is None else repr(r.waic)},"
                f"{'' if r.lppd is None else repr(r.lppd)},"
                f"{'' if r.p_waic is None else repr(r.p_waic)},"
                f"{'' if sd is None else repr(sd)}"
            )
        atomic_write_text(path, "\n".join(lines) + "\n")


def compare_models(
    data: ObservedDataset, fixed: FixedRates, priors: list[PriorSpec],
    mcmc: McmcConfig, models: list[int] | None = None,
) -> ComparisonTable:
    """Fit each sub-model under each prior and rank by WAIC.

    Per-model fit failures are recorded in their row rather than
    aborting the table.  Each (prior, model) job runs on its own seed
    derived from the base config seed.
    """
    masks = enumerate_models()
    model_ids = models if models is not None else list(range(1, 16))
    rows: list[ComparisonRow] = []
    sd_by_prior: dict[int, float] = {}
    for p_idx, prior in enumerate(priors, start=1):
        prior_rows: list[ComparisonRow] = []
        for model_id in model_ids:
            mask = masks[model_id - 1]
            job = replace(mcmc, seed=mcmc.seed + 1000 * p_idx + model_id)
            try:
                chain = rwmh_sample(data, fixed, mask, prior, job)
                result = waic_from_chain(chain, data, fixed)
                prior_rows.append(ComparisonRow(
                    prior_id=p_idx, model_id=model_id,
                    active_params=mask.active_names,
                    waic=result.waic, lppd=result.lppd, p_waic=result.p_waic,
                ))
            except Exception as exc:
                prior_rows.append(ComparisonRow(
                    prior_id=p_idx, model_id=model_id,
                    active_params=mask.active_names,
                    waic=None, lppd=None, p_waic=None, error=str(exc),
                ))
        ok = [r.waic for r in prior_rows if r.waic is not None]
        if len(ok) > 1:
            sd_by_prior[p_idx] = float(np.std(ok, ddof=1))
        prior_rows.sort(key=lambda r: (r.waic is None, r.waic))
        rows.extend(prior_rows)
    return ComparisonTable(rows=rows, sd_by_prior=sd_by_prior)


def mean_absolute_error(observed, predicted_mean) -> float:
    """Average absolute difference between an observed and predicted series."""
    obs = np.asarray(observed, dtype=np.float64)
    pred = np.asarray(predicted_mean, dtype=np.float64)
    if obs.shape != pred.shape or obs.ndim != 1 or obs.size == 0:
        raise ValueError("series must be 1-d, non-empty and of equal length")
    return float(np.abs(obs - pred).mean())


def kruskal_wallis(groups: list) -> tuple[float, float]:
    """Rank-based k-sample test (tie-corrected H, chi-squared p-value)."""
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    for g in groups:
        if len(g) == 0:
            raise ValueError("groups must be non-empty")
    h, p = sp_stats.kruskal(*groups)
    return float(h), float(p)
