import csv
import dataclasses
import os

import pytest

from censornet.config import ConfigError, network_from_section, parse_sections
from censornet.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    load_config,
    run_experiment,
    run_mismatch,
)
from censornet import NetworkConfig
import censornet.experiments as experiments
import censornet.problem_o as problem_o
import censornet.problem_s as problem_s


class TestParsing:
    def test_sections_and_comments(self):
        text = "# header\n[a]\nx = 1\ny = 2, 3\n[b]\nz = true\n"
        s = parse_sections(text)
        assert s["a"]["x"][0] == "1"
        assert s["b"]["z"][0] == "true"

    def test_error_carries_line_number(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_sections("[a]\nx = 1\nnot-a-kv-line\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_sections("[a]\nx = 1\nx = 2\n")

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="outside"):
            parse_sections("x = 1\n")


class TestNetworkSection:
    def _section(self, text):
        return parse_sections(text)["network"]

    def test_exactly_one_of_each_pair(self):
        sec = self._section("[network]\nK = 5\nA = 1\nrho = 0.5\nsigma_w2 = 0.1\nsnr_c_db = 10\nsnr_h_db = 5\n")
        with pytest.raises(ConfigError, match="exactly one"):
            network_from_section(sec)

    def test_snr_path(self):
        sec = self._section("[network]\nK = 5\nA = 1\nrho = 0.5\nsnr_c_db = 10\nsnr_h_db = 5\n")
        cfg = network_from_section(sec)
        assert cfg.sigma_w2 == pytest.approx(0.1)
        assert cfg.sigma_v2 == pytest.approx(1e-8)  # -50 dBm default

    def test_dbm_key(self):
        sec = self._section("[network]\nK = 5\nA = 1\nrho = 0.5\nsnr_c_db = 10\nsnr_h_db = 5\nsigma_v2_dbm = -30\n")
        cfg = network_from_section(sec)
        assert cfg.sigma_v2 == pytest.approx(1e-6)

    def test_rho_domain_error_names_key(self):
        sec = self._section("[network]\nK = 5\nA = 1\nrho = 1.2\nsnr_c_db = 10\nsnr_h_db = 5\n")
        with pytest.raises(ConfigError, match="rho"):
            network_from_section(sec)

    def test_unknown_key_rejected(self):
        sec = self._section("[network]\nK = 5\nbogus = 2\n")
        with pytest.raises(ConfigError, match="bogus"):
            network_from_section(sec)


class TestLoadConfig:
    def test_minimal_file_gets_defaults(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("[experiment]\nid = table1\n")
        spec = load_config(str(path))
        assert spec.network.K == 5
        assert spec.network.A == 1.0
        assert spec.network.sigma_v2 == pytest.approx(1e-8)
        assert spec.sweep["p0"] == [0.4, 0.6, 0.8]

    def test_flag_overrides_file_seed(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("[experiment]\nid = table1\nseed = 3\n")
        spec = load_config(str(path), overrides={"seed": 7})
        assert spec.seed == 7

    def test_unknown_id_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("[experiment]\nid = table99\n")
        with pytest.raises(ConfigError, match="table99"):
            load_config(str(path))

    def test_empty_sweep_rejected(self):
        cfg = NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10, snr_h_db=5, rho=0.5)
        with pytest.raises(ConfigError, match="empty"):
            ExperimentSpec(experiment="custom", network=cfg, sweep={"p0": []}, fixed={})

    def test_every_builtin_id_loads(self):
        for exp_id in EXPERIMENTS:
            spec = load_config(None, overrides={"id": exp_id})
            assert spec.experiment == exp_id


@pytest.fixture()
def fast_solvers(monkeypatch):
    """Shrink solver grids/budgets so experiment tests stay quick."""

    def fast_o(**kw):
        kw.setdefault("tau_grid", 13)
        kw.setdefault("coarse_n_mc", 400)
        kw.setdefault("refine_points", 3)
        kw.setdefault("f_grid", 21)
        kw.setdefault("f_grid_full", 7)
        return problem_o.SolverOptions(**kw)

    def fast_s(**kw):
        kw.setdefault("tau_grid_2d", 7)
        kw.setdefault("coarse_n_mc", 400)
        kw.setdefault("refine_points", 3)
        kw.setdefault("max_outer", 4)
        return problem_s.SOptions(**kw)

    monkeypatch.setattr(experiments, "SolverOptions", fast_o)
    monkeypatch.setattr(experiments, "SOptions", fast_s)


def _tiny_spec(tmp_path, out="results", workers=1, seed=3, problem="o"):
    cfg = NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10, snr_h_db=5, rho=0.5)
    return ExperimentSpec(
        experiment="custom", network=cfg,
        sweep={"rho": [0.3, 0.5]}, fixed={"p0": 0.4, "beta": 0.02, "alpha": 0.15},
        out_dir=str(tmp_path / out), seed=seed, n_mc_pu=800, n_mc_oracle=4000,
        workers=workers, problem=problem,
    )


class TestRunExperiment:
    def test_csv_well_formed(self, tmp_path, fast_solvers):
        spec = _tiny_spec(tmp_path)
        files = run_experiment(spec, log=lambda *a: None)
        assert len(files) == 1
        with open(files[0]) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 8  # 2 sweep points x 4 schemes
        for row in rows:
            assert row["status"] in ("ok", "infeasible", "nonconverged")
            if row["status"] == "ok":
                for col in ("pm", "pf", "pt"):
                    assert 0.0 <= float(row[col]) <= 1.0
                assert row["pm_se"] != ""

    def test_deterministic_across_runs_and_workers(self, tmp_path, fast_solvers):
        a = run_experiment(_tiny_spec(tmp_path, "a", workers=1), log=lambda *a: None)
        b = run_experiment(_tiny_spec(tmp_path, "b", workers=1), log=lambda *a: None)
        with open(a[0], "rb") as fa, open(b[0], "rb") as fb:
            assert fa.read() == fb.read()
        c = run_experiment(_tiny_spec(tmp_path, "c", workers=2), log=lambda *a: None)
        with open(a[0], "rb") as fa, open(c[0], "rb") as fc:
            assert fa.read() == fc.read()

    def test_seed_changes_output(self, tmp_path, fast_solvers):
        a = run_experiment(_tiny_spec(tmp_path, "a", seed=3), log=lambda *a: None)
        d = run_experiment(_tiny_spec(tmp_path, "d", seed=4), log=lambda *a: None)
        with open(a[0], "rb") as fa, open(d[0], "rb") as fd:
            assert fa.read() != fd.read()


class TestMismatch:
    def test_matched_design_hits_cap_and_mismatch_inflates(self, fast_solvers):
        cfg = NetworkConfig.from_snr(K=3, A=1.0, snr_c_db=10, snr_h_db=5, rho=0.0)
        rows = run_mismatch(cfg, p0_list=[0.4], rho_list=[0.0, 0.5], beta=0.02,
                            n_mc_pu=2000, n_mc_oracle=30000, seed=5)
        assert [r["rho"] for r in rows] == ["0", "0.5"]
        pf0 = float(rows[0]["pf"])
        pf5 = float(rows[1]["pf"])
        se0 = float(rows[0]["pf_se"])
        assert abs(pf0 - 0.02) < max(3 * se0, 3e-3)
        assert pf5 > pf0
