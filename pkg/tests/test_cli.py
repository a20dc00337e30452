import csv
import json

import pytest

from aoi_multicast.cli import main

SCENARIO = {
    "n": 10,
    "k1": 3,
    "k2": 5,
    "delay_I": {"rate": 1.0, "shift": 1.0},
    "delay_II": {"rate": 2.0, "shift": 0.5},
    "p1": 0.6,
    "mode": "at_will",
}

SINGLE_NODE = {
    "n": 1,
    "k1": 1,
    "k2": 1,
    "delay_I": {"rate": 1.0, "shift": 0.0},
    "delay_II": {"rate": 1.0, "shift": 0.0},
    "p1": 1.0,
    "mode": "at_will",
}


@pytest.fixture
def scenario_file(tmp_path):
    def write(doc, name="scen.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return write


class TestEval:
    def test_single_node_zero_wait(self, scenario_file, capsys):
        rc = main(["eval", scenario_file(SINGLE_NODE)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out == {"age_I": 2.0, "age_II": "infinite"}

    def test_symmetric_scenario_equal_ages(self, scenario_file, capsys):
        doc = dict(SCENARIO, k2=3, delay_II={"rate": 1.0, "shift": 1.0}, p1=0.5)
        rc = main(["eval", scenario_file(doc)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["age_I"] == out["age_II"]

    def test_matches_library_call(self, scenario_file, capsys):
        from aoi_multicast.analytic import (
            Scenario,
            Stream,
            StreamMix,
            age_atwill_exact,
        )
        from aoi_multicast.orderstats import ShiftedExp

        rc = main(["eval", scenario_file(SCENARIO)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        s = Scenario(
            10, 3, 5, ShiftedExp(1, 1), ShiftedExp(2, 0.5), StreamMix(0.6)
        )
        assert out["age_I"] == age_atwill_exact(s, Stream.TYPE_I)
        assert out["age_II"] == age_atwill_exact(s, Stream.TYPE_II)

    def test_approx_mode(self, scenario_file, capsys):
        rc = main(
            ["eval", scenario_file(SCENARIO), "--approx",
             "--alpha1", "0.3", "--alpha2", "0.5"]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["age_I"] > 0 and out["age_II"] > 0

    def test_approx_missing_alphas(self, scenario_file, capsys):
        rc = main(["eval", scenario_file(SCENARIO), "--approx"])
        assert rc == 2

    @pytest.mark.parametrize(
        "patch,key",
        [
            ({"n": 0}, "n"),
            ({"k1": 11}, "k1"),
            ({"p1": 1.5}, "p1"),
            ({"mode": "bogus"}, "mode"),
            ({"mode": "exogenous"}, "mu"),
            ({"delay_I": {"rate": -1.0, "shift": 0.0}}, "delay_I.rate"),
            ({"surplus": 1}, "surplus"),
        ],
    )
    def test_schema_violation_names_key(self, scenario_file, capsys, patch, key):
        doc = dict(SCENARIO)
        doc.update(patch)
        rc = main(["eval", scenario_file(doc)])
        assert rc == 2
        assert key in capsys.readouterr().err

    def test_missing_key(self, scenario_file, capsys):
        doc = dict(SCENARIO)
        del doc["delay_II"]
        rc = main(["eval", scenario_file(doc)])
        assert rc == 2
        assert "delay_II" in capsys.readouterr().err


class TestSimulate:
    def test_fixed_seed_identical_stdout(self, scenario_file, capsys):
        path = scenario_file(SCENARIO)
        args = ["simulate", path, "--cycles", "20000", "--seed", "9",
                "--replications", "3"]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_zero_wait_estimate(self, scenario_file, capsys):
        rc = main(
            ["simulate", scenario_file(SINGLE_NODE), "--cycles", "100000",
             "--seed", "3", "--replications", "8"]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["age_I"] - 2.0) <= 3 * out["se_I"]
        assert out["age_II"] == "infinite"

    def test_agrees_with_eval(self, scenario_file, capsys):
        path = scenario_file(SCENARIO)
        assert main(["eval", path]) == 0
        exact = json.loads(capsys.readouterr().out)
        assert main(
            ["simulate", path, "--cycles", "100000", "--seed", "13",
             "--replications", "6"]
        ) == 0
        sim = json.loads(capsys.readouterr().out)
        for key, se_key in (("age_I", "se_I"), ("age_II", "se_II")):
            tol = max(3 * sim[se_key], 0.01 * exact[key])
            assert abs(sim[key] - exact[key]) <= tol


class TestValidate:
    def test_pass(self, scenario_file, capsys):
        rc = main(
            ["validate", scenario_file(SCENARIO), "--cycles", "100000",
             "--seed", "17", "--replications", "6"]
        )
        out = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert out["result"] == "PASS"

    def test_fail_on_corrupted_threshold(self, scenario_file, capsys):
        # negative control: simulate k1=3 but judge against k1=9 closed form
        import aoi_multicast.cli as cli_mod
        from aoi_multicast.sim import SimConfig, simulate

        path = scenario_file(SCENARIO)

        def corrupted(cfg, threads=1):
            bad = cfg.scenario.__class__(
                cfg.scenario.n, 9, cfg.scenario.k2, cfg.scenario.delay_I,
                cfg.scenario.delay_II, cfg.scenario.mix, cfg.scenario.mode,
            )
            return simulate(SimConfig(bad, cfg.cycles, cfg.seed,
                                      cfg.warmup_cycles, cfg.replications))

        orig = cli_mod.simulate
        cli_mod.simulate = corrupted
        try:
            rc = main(["validate", path, "--cycles", "50000", "--seed", "19",
                       "--replications", "4"])
        finally:
            cli_mod.simulate = orig
        out = json.loads(capsys.readouterr().out)
        assert rc == 1
        assert out["result"] == "FAIL"

    def test_starved_stream_skipped(self, scenario_file, capsys):
        rc = main(
            ["validate", scenario_file(SINGLE_NODE), "--cycles", "100000",
             "--seed", "3", "--replications", "6"]
        )
        captured = capsys.readouterr()
        out = json.loads(captured.out)
        assert rc == 0
        assert out["age_II"] == {"status": "skipped (starved)"}
        assert "starved" in captured.err


class TestPareto:
    def test_csv_output(self, scenario_file, tmp_path, capsys):
        doc = dict(SCENARIO, p1=0.5, k2=3, delay_II={"rate": 1.0, "shift": 1.0})
        out_path = tmp_path / "pareto.csv"
        rc = main(
            ["pareto", scenario_file(doc), "--betas", "0.2,0.5,0.8",
             "--out", str(out_path)]
        )
        assert rc == 0
        assert "rows" in capsys.readouterr().out
        with open(out_path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["beta", "k1", "k2", "age_I", "age_II", "objective"]
        assert len(rows) >= 2
        # '.' decimal separator, parseable floats
        for row in rows[1:]:
            assert float(row[3]) > 0 and "." in row[3]

    def test_single_beta_single_row(self, scenario_file, tmp_path):
        doc = dict(SCENARIO, p1=0.5)
        out_path = tmp_path / "one.csv"
        rc = main(["pareto", scenario_file(doc), "--betas", "0.5",
                   "--out", str(out_path)])
        assert rc == 0
        with open(out_path, newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) == 2

    def test_approx_evaluator_columns(self, scenario_file, tmp_path):
        doc = dict(SCENARIO, p1=0.5)
        out_path = tmp_path / "approx.csv"
        rc = main(
            ["pareto", scenario_file(doc), "--betas", "0.3,0.7",
             "--evaluator", "approx", "--grid", "64", "--out", str(out_path)]
        )
        assert rc == 0
        with open(out_path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0][:3] == ["beta", "alpha1", "alpha2"]

    def test_bad_betas(self, scenario_file, tmp_path, capsys):
        rc = main(
            ["pareto", scenario_file(SCENARIO), "--betas", "0.5,boom",
             "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 2


class TestSweep:
    def test_sweep_k1_single_stream_interior_minimum(self, scenario_file, tmp_path):
        doc = dict(SCENARIO, n=100, k1=1, k2=1, p1=1.0)
        out_path = tmp_path / "k1.csv"
        values = ",".join(str(k) for k in range(1, 101))
        rc = main(
            ["sweep", scenario_file(doc), "--param", "k1", "--values", values,
             "--out", str(out_path)]
        )
        assert rc == 0
        with open(out_path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["param_value", "age_I", "age_II"]
        ages = [float(r[1]) for r in rows[1:]]
        best = ages.index(min(ages))
        assert 0 < best < len(ages) - 1  # interior minimum in k1
        assert all(r[2] == "infinite" for r in rows[1:])  # p1 = 1 starves II

    def test_sweep_n_with_fixed_alphas_flattens(self, scenario_file, tmp_path):
        doc = dict(SCENARIO, p1=0.5)
        del doc["k1"], doc["k2"]
        out_path = tmp_path / "n.csv"
        rc = main(
            ["sweep", scenario_file(doc), "--param", "n",
             "--values", "100,1000,10000", "--alpha1", "0.5", "--alpha2", "0.5",
             "--out", str(out_path)]
        )
        assert rc == 0
        with open(out_path, newline="") as f:
            rows = list(csv.reader(f))
        ages = [float(r[1]) for r in rows[1:]]
        assert abs(ages[2] - ages[1]) < abs(ages[1] - ages[0])
        assert abs(ages[2] - ages[1]) / ages[2] < 0.01

    def test_sweep_mu_monotone_toward_atwill(self, scenario_file, tmp_path):
        doc = dict(SCENARIO, mode="exogenous", mu=1.0)
        out_path = tmp_path / "mu.csv"
        rc = main(
            ["sweep", scenario_file(doc), "--param", "mu",
             "--values", "0.5,1,2,4,8,1000000", "--out", str(out_path)]
        )
        assert rc == 0
        with open(out_path, newline="") as f:
            rows = list(csv.reader(f))
        ages = [float(r[1]) for r in rows[1:]]
        assert all(a > b for a, b in zip(ages, ages[1:]))
        from aoi_multicast.analytic import Scenario, Stream, StreamMix, age_atwill_exact
        from aoi_multicast.orderstats import ShiftedExp

        aw = age_atwill_exact(
            Scenario(10, 3, 5, ShiftedExp(1, 1), ShiftedExp(2, 0.5), StreamMix(0.6)),
            Stream.TYPE_I,
        )
        assert ages[-1] == pytest.approx(aw, rel=1e-3)

    def test_unknown_param(self, scenario_file, tmp_path):
        rc = main(
            ["sweep", scenario_file(SCENARIO), "--param", "bogus",
             "--values", "1", "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 2
