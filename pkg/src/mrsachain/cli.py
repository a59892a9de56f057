"""Command-line operator surface.

Verbs: ``simulate``, ``fit``, ``compare``, ``ppc``, ``report``.  All
artifacts are plain CSV/JSON, written atomically; re-running a command
with the same inputs and seed reproduces them byte for byte.

Exit codes: 0 success, 1 validation error, 2 runtime/infeasibility error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .datasets import (
    ConfigError,
    DatasetValidationError,
    RunConfig,
    load_config,
    load_dataset,
    reference_dataset_path,
    save_dataset,
)
from .io_utils import atomic_write_text
from .likelihood import ObservedDataset
from .mcmc import (
    PARAM_NAMES,
    Chain,
    McmcConfig,
    PriorSpec,
    export_trace,
    rwmh_sample,
    summarize_chain,
)
from .model import (
    CompartmentState,
    FixedRates,
    InfeasibleStepError,
    ModelMask,
    ModelParams,
)
from .selection import compare_models, enumerate_models, mean_absolute_error
from .simulate import (
    PoissonArrivals,
    SimulationConfig,
    posterior_predictive,
    simulate_trajectory,
)

OUT_ENV_VAR = "MRSACHAIN_OUT"


class CliValidationError(Exception):
    pass


def _default_out() -> Path:
    return Path(os.environ.get(OUT_ENV_VAR, "."))


def _write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _build_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config, dataset_override=getattr(args, "data", None))
    else:
        cfg = RunConfig()
        if getattr(args, "data", None):
            cfg.dataset = Path(args.data)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.mcmc = replace(cfg.mcmc, seed=args.seed)
    if getattr(args, "out", None):
        cfg.out_dir = Path(args.out)
    elif cfg.out_dir == Path("."):
        cfg.out_dir = _default_out()
    if getattr(args, "model", None):
        cfg.model = args.model if args.model == "all" else int(args.model)
    if getattr(args, "prior", None):
        p = args.prior
        if p in ("1", "2", "3"):
            cfg.prior = PriorSpec.preset(int(p))
        else:
            raw = json.loads(Path(p).read_text())
            cfg.prior = PriorSpec.same_gamma(float(raw["shape"]), float(raw["rate"]))
    return cfg


def _load_data(cfg: RunConfig) -> ObservedDataset:
    if cfg.dataset is None:
        raise CliValidationError("no dataset given (use --data or a config file)")
    return load_dataset(cfg.dataset, s0=cfg.s0, init=cfg.init)


def _parse_params(args) -> ModelParams:
    if args.params is not None:
        values = [float(v) for v in args.params.split(",")]
        if len(values) != 6:
            raise CliValidationError(
                "--params needs 6 comma-separated values "
                "(beta_ch,beta_ih,beta_cc,beta_ic,sigma,alpha)"
            )
        return ModelParams.from_sequence(values)
    if args.from_summary is not None:
        raw = json.loads(Path(args.from_summary).read_text())
        means = {k: v["mean"] for k, v in raw["parameters"].items()}
        return ModelParams.from_sequence(
            [means.get(name, 0.0) for name in PARAM_NAMES]
        )
    raise CliValidationError("simulate needs --params or --from-summary")


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    params = _parse_params(args)
    mask = ModelMask.full() if cfg.model == "all" else cfg.mask()
    if cfg.dataset is not None:
        data = _load_data(cfg)
        sim = SimulationConfig(
            init=data.init, horizon=data.months,
            admissions=data.admissions, discharges=data.discharges,
            ca_arrivals=(data.new_col_ca, data.new_inf_ca), seed=cfg.seed,
        )
    else:
        init = cfg.init or CompartmentState(
            s=cfg.s0, col_ha=25, inf_ha=6, col_ca=46, inf_ca=23, removed=0
        )
        sim = SimulationConfig(
            init=init, horizon=args.horizon,
            ca_arrivals=PoissonArrivals(args.ca_col_mean, args.ca_inf_mean),
            seed=cfg.seed,
        )
    traj = simulate_trajectory(sim, params, cfg.fixed, mask)
    dataset = ObservedDataset(
        init=sim.init,
        new_col_ha=traj.event_series("new_col_ha"),
        new_inf_ha=traj.event_series("new_inf_ha"),
        new_col_ca=traj.event_series("new_col_ca"),
        new_inf_ca=traj.event_series("new_inf_ca"),
        admissions=sim.admissions,
        discharges=sim.discharges,
    )
    out = cfg.out_dir
    save_dataset(dataset, out / "dataset.csv")
    state_names = ("s", "col_ha", "inf_ha", "col_ca", "inf_ca", "removed")
    lines = ["month," + ",".join(state_names)]
    for t, state in enumerate(traj.states):
        lines.append(str(t) + "," + ",".join(str(getattr(state, n)) for n in state_names))
    atomic_write_text(out / "trajectory.csv", "\n".join(lines) + "\n")
    print(f"wrote {out / 'dataset.csv'} and {out / 'trajectory.csv'}")
    return 0


def cmd_fit(args) -> int:
    cfg = _build_config(args)
    data = _load_data(cfg)
    if cfg.model == "all":
        raise CliValidationError("fit needs a single model id (1..15)")
    mask = cfg.mask()
    chain = rwmh_sample(data, cfg.fixed, mask, cfg.prior, cfg.mcmc)
    summary = summarize_chain(chain)
    out = cfg.out_dir
    export_trace(chain, out / "trace.csv")
    _write_json(out / "summary.json", {
        "model": cfg.model,
        "active_params": list(mask.active_names),
        "seed": cfg.mcmc.seed,
        **summary.to_json_dict(),
    })
    _write_json(out / "diagnostics.json", {
        "acceptance_rates": chain.acceptance_rates,
        "latent_acceptance": chain.latent_acceptance,
        "ess": {k: s.ess for k, s in summary.parameters.items()},
        "psrf": chain.psrf,
        "n_draws": len(chain),
    })
    print(f"wrote {out / 'trace.csv'}, {out / 'summary.json'}, {out / 'diagnostics.json'}")
    return 0


def cmd_compare(args) -> int:
    cfg = _build_config(args)
    data = _load_data(cfg)
    priors = [PriorSpec.preset(i) for i in cfg.prior_ids]
    if getattr(args, "prior", None) in ("1", "2", "3"):
        priors = [PriorSpec.preset(int(args.prior))]
    models = None if cfg.model == "all" else [int(cfg.model)]
    table = compare_models(data, cfg.fixed, priors, cfg.mcmc, models=models)
    out = cfg.out_dir
    table.to_csv(out / "comparison.csv")
    failed = [r for r in table.rows if r.error is not None]
    print(f"wrote {out / 'comparison.csv'} ({len(table.rows)} rows, {len(failed)} failed)")
    return 0


def _chain_from_trace(path) -> np.ndarray:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    expected = ["iter", *PARAM_NAMES, "log_post"]
    if header != expected:
        raise CliValidationError(f"unexpected trace schema in {path}")
    rows = [line.split(",") for line in lines[1:]]
    if not rows:
        raise CliValidationError(f"empty trace: {path}")
    return np.array([[float(v) for v in row[1:7]] for row in rows])


def cmd_ppc(args) -> int:
    cfg = _build_config(args)
    data = _load_data(cfg)
    params_draws = _chain_from_trace(args.chain)
    mask = ModelMask.full() if cfg.model == "all" else cfg.mask()
    sim = SimulationConfig(
        init=data.init, horizon=data.months,
        admissions=data.admissions, discharges=data.discharges,
        ca_arrivals=(data.new_col_ca, data.new_inf_ca), seed=cfg.seed,
    )
    summary = posterior_predictive(
        params_draws, sim, cfg.fixed, mask, n_rep=args.n_rep, seed=cfg.seed,
    )
    out = cfg.out_dir
    summary.to_csv(out / "bands.csv")
    in_col = (data.new_col_ha >= summary.lo_col) & (data.new_col_ha <= summary.hi_col)
    in_inf = (data.new_inf_ha >= summary.lo_inf) & (data.new_inf_ha <= summary.hi_inf)
    _write_json(out / "ppc.json", {
        "mae_colonization": mean_absolute_error(data.new_col_ha, summary.mean_col),
        "mae_infection": mean_absolute_error(data.new_inf_ha, summary.mean_inf),
        "coverage_fraction": float(np.concatenate([in_col, in_inf]).mean()),
        "coverage_colonization": float(in_col.mean()),
        "coverage_infection": float(in_inf.mean()),
        "n_rep": args.n_rep,
    })
    print(f"wrote {out / 'bands.csv'} and {out / 'ppc.json'}")
    return 0


def cmd_report(args) -> int:
    art_dir = Path(args.out or _default_out())
    lines = ["# Run report", ""]
    found = False

    summary_path = art_dir / "summary.json"
    if summary_path.exists():
        found = True
        raw = json.loads(summary_path.read_text())
        lines += [f"## Posterior summary (model {raw.get('model')})", "",
                  "| parameter | mean | 95% CI | ESS | acceptance |",
                  "|---|---|---|---|---|"]
        for name, s in raw["parameters"].items():
            flags = []
            acc = s.get("acceptance")
            if acc is not None and not 0.2 <= acc <= 0.6:
                flags.append("acceptance out of range")
            if s["ess"] < 100:
                flags.append("low ESS")
            note = f" ({'; '.join(flags)})" if flags else ""
            lines.append(
                f"| {name} | {s['mean']:.4f} | ({s['ci_low']:.4f}, {s['ci_high']:.4f}) "
                f"| {s['ess']:.0f} | {acc if acc is None else f'{acc:.2f}'}{note} |"
            )
        lines.append("")

    diag_path = art_dir / "diagnostics.json"
    if diag_path.exists():
        found = True
        raw = json.loads(diag_path.read_text())
        lines += ["## Diagnostics", "",
                  f"- retained draws: {raw.get('n_draws')}",
                  f"- latent-removal acceptance: {raw.get('latent_acceptance'):.3f}", ""]

    cmp_path = art_dir / "comparison.csv"
    if cmp_path.exists():
        found = True
        rows = cmp_path.read_text().strip().splitlines()
        lines += ["## Model comparison (ascending WAIC per prior)", "", "```",
                  *rows, "```", ""]
        failures = [r for r in rows[1:] if r.split(",")[3] == ""]
        if failures:
            lines += [f"WARNING: {len(failures)} model fits failed", ""]

    ppc_path = art_dir / "ppc.json"
    if ppc_path.exists():
        found = True
        raw = json.loads(ppc_path.read_text())
        lines += ["## Posterior predictive", "",
                  f"- MAE colonization: {raw['mae_colonization']:.3f}",
                  f"- MAE infection: {raw['mae_infection']:.3f}",
                  f"- band coverage: {raw['coverage_fraction']:.3f}", ""]

    if not found:
        lines += ["No artifacts found.", ""]
    atomic_write_text(art_dir / "report.md", "\n".join(lines))
    print(f"wrote {art_dir / 'report.md'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrsachain",
        description="Chain-binomial hospital MRSA transmission modelling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--data", help="dataset CSV path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or .)")
        p.add_argument("--model", help="model id 1..15 or 'all'")
        p.add_argument("--prior", help="prior preset 1|2|3 or JSON path")

    p = sub.add_parser("simulate", help="generate a synthetic dataset and trajectory")
    common(p)
    p.add_argument("--params", help="beta_ch,beta_ih,beta_cc,beta_ic,sigma,alpha")
    p.add_argument("--from-summary", help="take parameter means from a summary.json")
    p.add_argument("--horizon", type=int, default=61)
    p.add_argument("--ca-col-mean", type=float, default=46.0)
    p.add_argument("--ca-inf-mean", type=float, default=23.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one model by RWMH and summarize the posterior")
    common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="fit the model lattice and rank by WAIC")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ppc", help="posterior-predictive bands and MAE from a trace")
    common(p)
    p.add_argument("--chain", required=True, help="trace.csv from a fit")
    p.add_argument("--n-rep", type=int, default=500)
    p.set_defaults(func=cmd_ppc)

    p = sub.add_parser("report", help="collate artifacts into a markdown report")
    p.add_argument("--out", help="artifact directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InfeasibleStepError, RuntimeError, OSError) as exc:
        print(json.dumps({"error": "runtime", "message": str(exc)}), file=sys.stderr)
        return 2
    except (CliValidationError, DatasetValidationError, ConfigError, ValueError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
