"""Chain-binomial log-likelihood for the hospital MRSA model.

The observed data are the monthly new-colonization/infection counts plus
admission/discharge flows; the monthly removal counts are latent and
supplied explicitly (data augmentation).  Given both, the compartment
trajectory is fully determined, and the likelihood decomposes into six
binomial channels per month.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .model import (
    CompartmentState,
    EventCounts,
    ExogenousFlows,
    FixedRates,
    InfeasibleStepError,
    ModelMask,
    ModelParams,
    apply_mask,
)

__all__ = [
    "IMPOSSIBLE",
    "is_impossible",
    "CHANNELS",
    "ObservedDataset",
    "LatentRemovals",
    "PointwiseLogLik",
    "LikelihoodWorkspace",
    "log_binomial_pmf",
    "reconstruct_trajectory",
    "pointwise_log_likelihood",
    "log_likelihood",
]

#: Sentinel for a zero-probability (impossible) outcome.  Distinguishable
#: from overflow because no finite chain-binomial term can underflow to
#: -inf: the most extreme finite term is bounded by n*log(p) magnitudes.
IMPOSSIBLE = float("-inf")

#: Column order of the pointwise log-likelihood matrix.
CHANNELS = ("s_to_col_ha", "col_ha_to_inf_ha", "col_ha_removed",
            "inf_ha_removed", "col_ca_removed", "inf_ca_removed")

_EQ_NAMES = {
    _kernels.EQ_NEW_COL_HA: "new_col_ha > s",
    _kernels.EQ_COL_HA_OUT: "new_inf_ha + rem_col_ha > col_ha",
    _kernels.EQ_REM_INF_HA: "rem_inf_ha > inf_ha",
    _kernels.EQ_REM_COL_CA: "rem_col_ca > col_ca",
    _kernels.EQ_REM_INF_CA: "rem_inf_ca > inf_ca",
    _kernels.EQ_S_NEGATIVE: "s + admissions - discharges - new_col_ha < 0",
    _kernels.EQ_EMPTY_POP: "total population is zero",
}


def is_impossible(x: float) -> bool:
    return x == IMPOSSIBLE


def _as_count_array(values, name: str, length: int | None = None) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d series")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.array_equal(rounded, arr):
            raise ValueError(f"{name} must contain integers")
        arr = rounded
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} must be non-negative")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} must have length {length}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class ObservedDataset:
    """Monthly observed series with initial conditions.

    ``init.removed`` must be zero: nobody is isolated at the start of the
    observation window.
    """

    init: CompartmentState
    new_col_ha: np.ndarray
    new_inf_ha: np.ndarray
    new_col_ca: np.ndarray
    new_inf_ca: np.ndarray
    admissions: np.ndarray
    discharges: np.ndarray

    def __post_init__(self):
        if self.init.removed != 0:
            raise ValueError("initial removed count must be zero")
        tau = len(self.new_col_ha)
        for name in ("new_col_ha", "new_inf_ha", "new_col_ca", "new_inf_ca",
                     "admissions", "discharges"):
            object.__setattr__(self, name, _as_count_array(getattr(self, name), name, tau))

    @property
    def months(self) -> int:
        return len(self.new_col_ha)

    def event_matrix(self) -> np.ndarray:
        """Observed events as a (4, months) int64 matrix."""
        return np.stack([self.new_col_ha, self.new_inf_ha,
                         self.new_col_ca, self.new_inf_ca])

    def init_vector(self) -> np.ndarray:
        i = self.init
        return np.array([i.s, i.col_ha, i.inf_ha, i.col_ca, i.inf_ca, i.removed],
                        dtype=np.int64)

    def flows(self, t: int) -> ExogenousFlows:
        return ExogenousFlows(int(self.admissions[t]), int(self.discharges[t]))


@dataclass(frozen=True)
class LatentRemovals:
    """Monthly isolation counts for the four colonized/infected groups."""

    rem_col_ha: np.ndarray
    rem_inf_ha: np.ndarray
    rem_col_ca: np.ndarray
    rem_inf_ca: np.ndarray

    def __post_init__(self):
        tau = len(self.rem_col_ha)
        for name in ("rem_col_ha", "rem_inf_ha", "rem_col_ca", "rem_inf_ca"):
            object.__setattr__(self, name, _as_count_array(getattr(self, name), name, tau))

    @property
    def months(self) -> int:
        return len(self.rem_col_ha)

    def as_matrix(self) -> np.ndarray:
        return np.stack([self.rem_col_ha, self.rem_inf_ha,
                         self.rem_col_ca, self.rem_inf_ca])

    @classmethod
    def from_matrix(cls, mat: np.ndarray) -> "LatentRemovals":
        return cls(mat[0], mat[1], mat[2], mat[3])

    @classmethod
    def zeros(cls, months: int) -> "LatentRemovals":
        z = np.zeros(months, dtype=np.int64)
        return cls(z, z.copy(), z.copy(), z.copy())


@dataclass
class PointwiseLogLik:
    """Per-month, per-channel log-likelihood terms (months x 6)."""

    matrix: np.ndarray
    channels: tuple[str, ...] = CHANNELS

    @property
    def total(self) -> float:
        if self.has_impossible:
            return IMPOSSIBLE
        # fixed left-to-right summation order for reproducibility
        acc = 0.0
        for v in self.matrix.ravel():
            acc += float(v)
        return acc

    @property
    def has_impossible(self) -> bool:
        return bool(np.isneginf(self.matrix).any())


_LOGFACT_EXACT_N = 20


def _build_logfact(n_max: int) -> np.ndarray:
    lf = gammaln(np.arange(n_max + 1, dtype=np.float64) + 1.0)
    exact_n = min(_LOGFACT_EXACT_N, n_max)
    lf[: exact_n + 1] = [math.log(math.factorial(i)) for i in range(exact_n + 1)]
    return lf


_small_lf = _build_logfact(4096)


def log_binomial_pmf(k: int, n: int, p: float) -> float:
    """log of the binomial pmf, with 0*log(0) treated as 0.

    Impossible events return the :data:`IMPOSSIBLE` sentinel.
    """
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"require 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    lf = _small_lf if n < _small_lf.size else _build_logfact(n)
    return float(_kernels.log_binom_pmf(k, n, p, lf))


class LikelihoodWorkspace:
    """Precomputed arrays for fast repeated likelihood evaluation.

    Builds the log-factorial table sized to the largest binomial count
    the dataset can produce, so every kernel call is allocation-light.
    """

    def __init__(self, data: ObservedDataset):
        self.data = data
        self.init = data.init_vector()
        self.obs = data.event_matrix()
        self.adm = data.admissions
        self.dis = data.discharges
        n_max = int(self.init.sum() + self.adm.sum() + self.obs.sum()) + 1
        self.logfact = _build_logfact(n_max)

    def pointwise(self, latents: LatentRemovals, params: ModelParams,
                  fixed: FixedRates, mask: ModelMask) -> np.ndarray:
        theta = np.array(apply_mask(params, mask).as_tuple())
        rho = np.array(fixed.as_tuple())
        out = np.empty((self.data.months, 6))
        status = _kernels.pointwise_matrix(
            self.init, self.obs, self.adm, self.dis, latents.as_matrix(),
            theta, rho, self.logfact, out)
        if status >= 0:
            raise InfeasibleStepError(status // 10, _EQ_NAMES[status % 10])
        return out

    def total(self, latents: LatentRemovals, params: ModelParams,
              fixed: FixedRates, mask: ModelMask) -> float:
        theta = np.array(apply_mask(params, mask).as_tuple())
        rho = np.array(fixed.as_tuple())
        return float(_kernels.total_loglik(
            self.init, self.obs, self.adm, self.dis, latents.as_matrix(),
            theta, rho, self.logfact))


def reconstruct_trajectory(data: ObservedDataset, latents: LatentRemovals):
    """Rebuild the full compartment trajectory from observed events and latents.

    Raises :class:`InfeasibleStepError` naming the month and violated
    equation if any step is impossible.
    """
    from .simulate import Trajectory  # local import: simulate builds on this module

    if latents.months != data.months:
        raise ValueError("latent series length must equal the dataset length")
    states = [data.init]
    events = []
    for t in range(data.months):
        ev = EventCounts(
            new_col_ha=int(data.new_col_ha[t]),
            new_inf_ha=int(data.new_inf_ha[t]),
            new_col_ca=int(data.new_col_ca[t]),
            new_inf_ca=int(data.new_inf_ca[t]),
            rem_col_ha=int(latents.rem_col_ha[t]),
            rem_inf_ha=int(latents.rem_inf_ha[t]),
            rem_col_ca=int(latents.rem_col_ca[t]),
            rem_inf_ca=int(latents.rem_inf_ca[t]),
        )
        from .model import step_compartments

        states.append(step_compartments(states[-1], ev, data.flows(t), month=t))
        events.append(ev)
    return Trajectory(states=states, events=events)


def pointwise_log_likelihood(
    data: ObservedDataset, latents: LatentRemovals, params: ModelParams,
    fixed: FixedRates, mask: ModelMask,
) -> PointwiseLogLik:
    """The months x 6 matrix of binomial log-pmf terms.

    Entries may be the :data:`IMPOSSIBLE` sentinel (zero-probability
    data under these parameters); infeasible trajectories raise.
    """
    ws = LikelihoodWorkspace(data)
    return PointwiseLogLik(ws.pointwise(latents, params, fixed, mask))


def log_likelihood(
    data: ObservedDataset, latents: LatentRemovals, params: ModelParams,
    fixed: FixedRates, mask: ModelMask,
) -> float:
    """Total chain-binomial log-likelihood (sum of all pointwise entries)."""
    return pointwise_log_likelihood(data, latents, params, fixed, mask).total
