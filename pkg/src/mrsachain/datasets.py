"""Dataset and run-configuration ingestion.

The dataset CSV schema is one row per month:

    month,new_col_ha,new_inf_ha,new_col_ca,new_inf_ca,admissions,discharges

with a 1-based contiguous month index.  An optional ``label`` column
(calendar labels) is ignored.  Run configuration is a strict TOML file:
unknown keys are rejected so typos cannot silently change a comparison.
"""

from __future__ import annotations

import csv
import importlib.resources
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

from .io_utils import atomic_write_text
from .likelihood import ObservedDataset
from .mcmc import McmcConfig, PriorSpec
from .model import CompartmentState, FixedRates, ModelMask

__all__ = [
    "DatasetValidationError",
    "ConfigError",
    "RunConfig",
    "load_dataset",
    "save_dataset",
    "load_config",
    "reference_dataset_path",
]

DEFAULT_S0 = 3048

DATASET_COLUMNS = ("month", "new_col_ha", "new_inf_ha", "new_col_ca",
                   "new_inf_ca", "admissions", "discharges")
OPTIONAL_COLUMNS = ("label",)


class DatasetValidationError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def load_dataset(
    path, s0: int = DEFAULT_S0,
    init: CompartmentState | None = None,
) -> ObservedDataset:
    """Parse and validate a monthly dataset CSV.

    Unless an explicit initial state is given, the initial compartment
    counts default to the first month's observed counts with ``s0``
    susceptibles and nobody removed.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetValidationError(f"{path}: no observations")
        missing = [c for c in DATASET_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise DatasetValidationError(f"{path}: missing columns {missing}")
        unknown = [c for c in reader.fieldnames
                   if c not in DATASET_COLUMNS + OPTIONAL_COLUMNS]
        if unknown:
            raise DatasetValidationError(f"{path}: unknown columns {unknown}")
        rows = list(reader)
    if not rows:
        raise DatasetValidationError(f"{path}: no observations")

    series = {c: [] for c in DATASET_COLUMNS}
    for i, row in enumerate(rows, start=2):  # header is line 1
        for col in DATASET_COLUMNS:
            raw = row[col]
            try:
                value = int(raw)
            except (TypeError, ValueError):
                raise DatasetValidationError(
                    f"{path}: line {i}, column '{col}': not an integer: {raw!r}"
                ) from None
            if col != "month" and value < 0:
                raise DatasetValidationError(
                    f"{path}: line {i}, column '{col}': negative count {value}"
                )
            series[col].append(value)
    months = series["month"]
    if months != list(range(1, len(months) + 1)):
        raise DatasetValidationError(
            f"{path}: month index must be contiguous starting at 1"
        )

    if init is None:
        init = CompartmentState(
            s=s0,
            col_ha=series["new_col_ha"][0],
            inf_ha=series["new_inf_ha"][0],
            col_ca=series["new_col_ca"][0],
            inf_ca=series["new_inf_ca"][0],
            removed=0,
        )
    return ObservedDataset(
        init=init,
        new_col_ha=np.array(series["new_col_ha"], dtype=np.int64),
        new_inf_ha=np.array(series["new_inf_ha"], dtype=np.int64),
        new_col_ca=np.array(series["new_col_ca"], dtype=np.int64),
        new_inf_ca=np.array(series["new_inf_ca"], dtype=np.int64),
        admissions=np.array(series["admissions"], dtype=np.int64),
        discharges=np.array(series["discharges"], dtype=np.int64),
    )


def save_dataset(data: ObservedDataset, path) -> None:
    lines = [",".join(DATASET_COLUMNS)]
    for t in range(data.months):
        lines.append(
            f"{t + 1},{data.new_col_ha[t]},{data.new_inf_ha[t]},"
            f"{data.new_col_ca[t]},{data.new_inf_ca[t]},"
            f"{data.admissions[t]},{data.discharges[t]}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def reference_dataset_path() -> Path:
    """Bundled synthetic reference dataset (no private data required)."""
    return Path(importlib.resources.files("mrsachain") / "data" / "reference_dataset.csv")


@dataclass
class RunConfig:
    """Everything a command needs: data, model, priors and MCMC settings."""

    dataset: Path | None = None
    s0: int = DEFAULT_S0
    init: CompartmentState | None = None
    fixed: FixedRates = field(default_factory=FixedRates)
    prior: PriorSpec = field(default_factory=lambda: PriorSpec.preset(1))
    prior_ids: tuple[int, ...] = (1, 2, 3)
    model: int | str = 15
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    out_dir: Path = Path(".")
    seed: int = 0

    def mask(self) -> ModelMask:
        from .selection import enumerate_models

        if self.model == "all":
            raise ConfigError("a single model id is required here, got 'all'")
        return enumerate_models()[int(self.model) - 1]


_KNOWN_KEYS = {
    "dataset", "s0", "init", "fixed_rates", "prior", "priors", "model",
    "mcmc", "out_dir", "seed",
}
_INIT_KEYS = {"s", "col_ha", "inf_ha", "col_ca", "inf_ca", "removed"}
_MCMC_KEYS = {"n_iter", "n_burnin", "proposal_scale", "adapt",
              "target_acceptance", "n_chains", "seed"}


def load_config(path, dataset_override=None) -> RunConfig:
    """Parse a TOML run configuration, rejecting unknown keys.

    Unspecified fields take the defaults: prior preset 1, 60000
    iterations with 10000 burn-in, isolation rates (1.3, 1.3, 10, 10).
    """
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")

    cfg = RunConfig()
    if dataset_override is not None:
        cfg.dataset = Path(dataset_override)
    elif "dataset" in raw:
        cfg.dataset = (path.parent / raw["dataset"]).resolve()
    if cfg.dataset is not None and not cfg.dataset.exists():
        raise ConfigError(f"dataset path does not exist: {cfg.dataset}")

    if "s0" in raw:
        cfg.s0 = int(raw["s0"])
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "out_dir" in raw:
        cfg.out_dir = Path(raw["out_dir"])
    if "model" in raw:
        m = raw["model"]
        if m != "all":
            m = int(m)
            if not 1 <= m <= 15:
                raise ConfigError(f"model must be 1..15 or 'all', got {m}")
        cfg.model = m

    if "init" in raw:
        sub = raw["init"]
        unknown = set(sub) - _INIT_KEYS
        if unknown:
            raise ConfigError(f"init: unknown keys {sorted(unknown)}")
        defaults = {"s": cfg.s0, "col_ha": 0, "inf_ha": 0, "col_ca": 0,
                    "inf_ca": 0, "removed": 0}
        defaults.update({k: int(v) for k, v in sub.items()})
        try:
            cfg.init = CompartmentState(**defaults)
        except ValueError as exc:
            raise ConfigError(f"init: {exc}") from None

    if "fixed_rates" in raw:
        vals = raw["fixed_rates"]
        if not (isinstance(vals, list) and len(vals) == 4):
            raise ConfigError("fixed_rates must be a list of four rates")
        try:
            cfg.fixed = FixedRates(*map(float, vals))
        except ValueError as exc:
            raise ConfigError(f"fixed_rates: {exc}") from None

    if "prior" in raw:
        cfg.prior = _parse_prior(raw["prior"])
    if "priors" in raw:
        ids = raw["priors"]
        if not (isinstance(ids, list) and all(i in (1, 2, 3) for i in ids)):
            raise ConfigError("priors must be a list drawn from [1, 2, 3]")
        cfg.prior_ids = tuple(ids)

    if "mcmc" in raw:
        sub = raw["mcmc"]
        unknown = set(sub) - _MCMC_KEYS
        if unknown:
            raise ConfigError(f"mcmc: unknown keys {sorted(unknown)}")
        kwargs = {}
        for key in ("n_iter", "n_burnin", "n_chains", "seed"):
            if key in sub:
                kwargs[key] = int(sub[key])
        if "proposal_scale" in sub:
            kwargs["proposal_scales"] = float(sub["proposal_scale"])
        if "adapt" in sub:
            kwargs["adapt"] = bool(sub["adapt"])
        if "target_acceptance" in sub:
            kwargs["target_acceptance"] = float(sub["target_acceptance"])
        try:
            cfg.mcmc = McmcConfig(**kwargs)
        except ValueError as exc:
            raise ConfigError(f"mcmc: {exc}") from None
    if "seed" in raw and "mcmc" not in raw:
        from dataclasses import replace

        cfg.mcmc = replace(cfg.mcmc, seed=cfg.seed)
    return cfg


def _parse_prior(value) -> PriorSpec:
    if value in (1, 2, 3):
        return PriorSpec.preset(int(value))
    if isinstance(value, list) and len(value) == 2:
        return PriorSpec.same_gamma(float(value[0]), float(value[1]))
    raise ConfigError(
        "prior must be a preset id (1, 2 or 3) or a [shape, rate] pair"
    )
