"""End-to-end CLI tests: verbs, artifacts, exit codes, determinism."""

import hashlib
import json

import numpy as np
import pytest

from mrsachain import (
    CompartmentState,
    FixedRates,
    ModelMask,
    ModelParams,
    PoissonArrivals,
    SimulationConfig,
    generate_synthetic_dataset,
)
from mrsachain.cli import OUT_ENV_VAR, main
from mrsachain.datasets import save_dataset

PARAMS_FLAG = "0.0421,0.0567,0.0095,0.0407,0.0100,0.2628"
HEADER = "month,new_col_ha,new_inf_ha,new_col_ca,new_inf_ca,admissions,discharges"


@pytest.fixture
def small_dataset(tmp_path):
    init = CompartmentState(s=600, col_ha=8, inf_ha=3, col_ca=10, inf_ca=5,
                            removed=0)
    cfg = SimulationConfig(init=init, horizon=8,
                           admissions=np.full(8, 40), discharges=np.full(8, 40),
                           ca_arrivals=PoissonArrivals(10.0, 5.0), seed=5)
    data = generate_synthetic_dataset(
        cfg, ModelParams.from_sequence([float(v) for v in PARAMS_FLAG.split(",")]),
        FixedRates(), ModelMask.full())
    path = tmp_path / "data.csv"
    save_dataset(data, path)
    return path


@pytest.fixture
def fit_config(tmp_path, small_dataset):
    path = tmp_path / "run.toml"
    path.write_text(
        f'dataset = "{small_dataset.name}"\n'
        "s0 = 600\n"
        "[init]\n"
        "s = 600\ncol_ha = 8\ninf_ha = 3\ncol_ca = 10\ninf_ca = 5\n"
        "[mcmc]\n"
        "n_iter = 600\nn_burnin = 100\nseed = 3\n"
    )
    return path


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestSimulate:
    def test_writes_artifacts(self, tmp_path):
        out = tmp_path / "o"
        code = main(["simulate", "--params", PARAMS_FLAG, "--horizon", "10",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        dataset = (out / "dataset.csv").read_text().splitlines()
        assert dataset[0] == HEADER
        assert len(dataset) == 11
        traj = (out / "trajectory.csv").read_text().splitlines()
        assert traj[0] == "month,s,col_ha,inf_ha,col_ca,inf_ca,removed"
        assert len(traj) == 12

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["simulate", "--params", PARAMS_FLAG, "--horizon", "10",
                         "--seed", "4", "--out", str(out)]) == 0
        assert sha(a / "dataset.csv") == sha(b / "dataset.csv")
        assert sha(a / "trajectory.csv") == sha(b / "trajectory.csv")

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--params", PARAMS_FLAG, "--seed", "4", "--out", str(a)])
        main(["simulate", "--params", PARAMS_FLAG, "--seed", "5", "--out", str(b)])
        assert sha(a / "dataset.csv") != sha(b / "dataset.csv")

    def test_missing_params_is_validation_error(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path)]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "validation"

    def test_malformed_params(self, tmp_path):
        assert main(["simulate", "--params", "1,2,3", "--out", str(tmp_path)]) == 1

    def test_env_var_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUT_ENV_VAR, str(tmp_path / "envout"))
        assert main(["simulate", "--params", PARAMS_FLAG, "--horizon", "5",
                     "--seed", "1"]) == 0
        assert (tmp_path / "envout" / "dataset.csv").exists()


class TestFit:
    def test_artifacts_and_schema(self, tmp_path, fit_config):
        out = tmp_path / "fitout"
        assert main(["fit", "--config", str(fit_config), "--out", str(out)]) == 0
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "iter,beta_ch,beta_ih,beta_cc,beta_ic,sigma,alpha,log_post"
        assert len(trace) == 501
        summary = json.loads((out / "summary.json").read_text())
        assert summary["model"] == 15
        assert set(summary["parameters"]) == set(ModelParams.FIELD_ORDER)
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["n_draws"] == 500
        assert 0 < diag["latent_acceptance"] < 1

    def test_deterministic(self, tmp_path, fit_config):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["fit", "--config", str(fit_config), "--out", str(out)]) == 0
        assert sha(a / "trace.csv") == sha(b / "trace.csv")
        assert sha(a / "summary.json") == sha(b / "summary.json")

    def test_submodel_fit(self, tmp_path, fit_config):
        out = tmp_path / "m1"
        assert main(["fit", "--config", str(fit_config), "--model", "1",
                     "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["active_params"] == ["beta_ch"]
        assert set(summary["parameters"]) == {"beta_ch", "sigma", "alpha"}

    def test_model_all_rejected(self, tmp_path, fit_config):
        assert main(["fit", "--config", str(fit_config), "--model", "all",
                     "--out", str(tmp_path)]) == 1

    def test_no_dataset(self, tmp_path):
        assert main(["fit", "--out", str(tmp_path)]) == 1

    def test_infeasible_dataset_is_runtime_error(self, tmp_path, capsys):
        # month 2 observes more infections than the colonized census can
        # supply, so no latent configuration is feasible
        bad = tmp_path / "bad.csv"
        bad.write_text(HEADER + "\n1,1,0,0,0,0,0\n2,0,5,0,0,0,0\n")
        cfg = tmp_path / "run.toml"
        cfg.write_text(f'dataset = "bad.csv"\ns0 = 50\n[mcmc]\nn_iter = 200\nn_burnin = 50\n')
        assert main(["fit", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "runtime"

    def test_invalid_dataset_is_validation_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(HEADER + "\n1,x,0,0,0,0,0\n")
        assert main(["fit", "--data", str(bad), "--out", str(tmp_path)]) == 1

    def test_prior_json_file(self, tmp_path, fit_config):
        prior = tmp_path / "prior.json"
        prior.write_text('{"shape": 1.0, "rate": 1.5}\n')
        out = tmp_path / "p"
        assert main(["fit", "--config", str(fit_config), "--prior", str(prior),
                     "--out", str(out)]) == 0


class TestCompare:
    def test_comparison_artifact(self, tmp_path, fit_config):
        out = tmp_path / "cmp"
        assert main(["compare", "--config", str(fit_config), "--model", "1",
                     "--prior", "1", "--out", str(out)]) == 0
        lines = (out / "comparison.csv").read_text().splitlines()
        assert lines[0] == "prior,model_id,active_params,waic,lppd,p_waic,sd_group"
        assert len(lines) == 2
        assert lines[1].startswith("1,1,beta_ch,")

    def test_deterministic(self, tmp_path, fit_config):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["compare", "--config", str(fit_config), "--model", "2",
                         "--prior", "1", "--out", str(out)]) == 0
        assert sha(a / "comparison.csv") == sha(b / "comparison.csv")


class TestPpc:
    def test_bands_and_metrics(self, tmp_path, fit_config, small_dataset):
        fit_out = tmp_path / "fit"
        assert main(["fit", "--config", str(fit_config), "--out", str(fit_out)]) == 0
        ppc_out = tmp_path / "ppc"
        assert main(["ppc", "--config", str(fit_config),
                     "--chain", str(fit_out / "trace.csv"),
                     "--n-rep", "50", "--seed", "2", "--out", str(ppc_out)]) == 0
        bands = (ppc_out / "bands.csv").read_text().splitlines()
        assert bands[0] == "month,mean_col,lo_col,hi_col,mean_inf,lo_inf,hi_inf"
        assert len(bands) == 9
        metrics = json.loads((ppc_out / "ppc.json").read_text())
        for key in ("mae_colonization", "mae_infection", "coverage_fraction",
                    "coverage_colonization", "coverage_infection"):
            assert key in metrics
        assert 0.0 <= metrics["coverage_fraction"] <= 1.0

    def test_bad_trace_schema(self, tmp_path, fit_config):
        bogus = tmp_path / "trace.csv"
        bogus.write_text("a,b\n1,2\n")
        assert main(["ppc", "--config", str(fit_config), "--chain", str(bogus),
                     "--out", str(tmp_path)]) == 1


class TestReport:
    def test_collates_artifacts(self, tmp_path, fit_config):
        out = tmp_path / "run"
        assert main(["fit", "--config", str(fit_config), "--out", str(out)]) == 0
        assert main(["ppc", "--config", str(fit_config),
                     "--chain", str(out / "trace.csv"), "--n-rep", "20",
                     "--seed", "2", "--out", str(out)]) == 0
        assert main(["report", "--out", str(out)]) == 0
        report = (out / "report.md").read_text()
        assert "## Posterior summary" in report
        assert "## Diagnostics" in report
        assert "## Posterior predictive" in report

    def test_empty_directory(self, tmp_path):
        assert main(["report", "--out", str(tmp_path)]) == 0
        assert "No artifacts found." in (tmp_path / "report.md").read_text()


class TestEntryPoint:
    def test_console_script_help(self):
        import subprocess
        proc = subprocess.run(["mrsachain", "--help"], capture_output=True,
                              text=True)
        assert proc.returncode == 0
        for verb in ("simulate", "fit", "compare", "ppc", "report"):
            assert verb in proc.stdout
