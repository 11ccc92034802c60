"""Monte Carlo harness: runners, config files, reports, determinism."""

import json

import numpy as np
import pytest

from idealconv import (AllUndecided, ExperimentConfig, parse_config_file,
                       run_convergence_theorem, run_counterexample,
                       run_main_theorem, run_thinnability_suite, write_report)
from idealconv.experiments import config_from_mapping

GRID = (-1.0, 0.0, 1.0, 2.0)


def small_main_config(**over):
    base = dict(sequence="spike:squares:2:alternating", ideal="density0",
                horizon=10 ** 5, trials=6, grid=GRID, epsilon=0.25,
                master_seed=4242)
    base.update(over)
    return ExperimentConfig(**base)


class TestCounterexample:
    def test_standard_run_passes(self):
        report = run_counterexample(10 ** 5)
        assert report.passed
        assert report.baseline["b_verdict"] == "not_in"
        assert report.baseline["thinned_verdict"] == "in"
        assert report.baseline["a_density_upper"] >= 0.999

    def test_doubled_horizon_same_verdicts(self):
        a = run_counterexample(10 ** 5)
        b = run_counterexample(2 * 10 ** 5)
        for key in ("b_verdict", "thinned_verdict"):
            assert a.baseline[key] == b.baseline[key]

    def test_odd_thinning_set_fails_precondition(self):
        report = run_counterexample(10 ** 5, b_spec="odds")
        assert not report.passed
        assert not report.baseline["precondition_ok"]
        assert any("precondition" in n for n in report.notes)


class TestMainTheorem:
    def test_small_run_agrees(self):
        report = run_main_theorem(small_main_config())
        assert report.passed
        assert report.baseline["gamma"] == [-1.0, 1.0]
        assert report.agreement_fraction >= 0.99

    def test_constant_sequence_agrees_exactly(self):
        config = ExperimentConfig(sequence="const:1.5", ideal="density0",
                                  horizon=10 ** 4, trials=5,
                                  grid=(0.0, 1.5, 3.0), epsilon=0.25)
        report = run_main_theorem(config)
        assert report.agreement_fraction == 1.0
        assert report.baseline["gamma"] == [1.5]

    def test_epsilon_sweep_coherence(self):
        config = small_main_config(epsilon_sweep=(0.25, 0.1, 0.05), trials=4)
        report = run_main_theorem(config)
        for eps_key_big, eps_key_small in (("0.25", "0.1"), ("0.1", "0.05")):
            big = report.baseline["verdicts"][eps_key_big]
            small = report.baseline["verdicts"][eps_key_small]
            gamma_small = {c for c, v in small.items() if v == "not_in"}
            gamma_big = {c for c, v in big.items() if v == "not_in"}
            undecided_big = {c for c, v in big.items() if v == "undecided"}
            assert gamma_small <= gamma_big | undecided_big

    def test_fin_run_keeps_spike(self):
        report = run_main_theorem(small_main_config(ideal="fin"))
        assert report.passed
        assert report.baseline["gamma"] == [-1.0, 1.0, 2.0]

    def test_evenfin_warns(self):
        with pytest.warns(UserWarning):
            run_main_theorem(small_main_config(ideal="evenfin", trials=2))

    def test_all_undecided_raises(self):
        # a lone candidate whose hit set sits inside the threshold band
        config = ExperimentConfig(sequence="spike:squares:2:alternating",
                                  ideal="density0", horizon=10 ** 6,
                                  trials=2, grid=(2.0,), epsilon=0.25)
        with pytest.raises(AllUndecided):
            run_main_theorem(config)


class TestConvergenceTheorem:
    def test_spike_converges_and_partitions(self):
        # horizon where the squares escape set is decisively inside the
        # ideal (the tail ratio clears the in-threshold)
        config = ExperimentConfig(sequence="spike:squares:1:const0",
                                  ideal="density0", horizon=4 * 10 ** 6,
                                  trials=4, epsilon=0.25, limit=0.0)
        report = run_convergence_theorem(config)
        assert report.passed
        assert report.baseline["decision"]["verdict"] == "in"
        assert all(t.detail["partition_exact"] for t in report.per_trial)
        assert all(t.detail["kept"] == "in" for t in report.per_trial)

    def test_alternating_fails_to_converge_everywhere(self):
        config = ExperimentConfig(sequence="alternating", ideal="density0",
                                  horizon=10 ** 5, trials=6, epsilon=0.5,
                                  limit=1.0)
        report = run_convergence_theorem(config)
        assert report.passed  # trials agree with the failing baseline
        assert report.baseline["decision"]["verdict"] == "not_in"
        assert all(t.detail["kept"] == "not_in" for t in report.per_trial)


class TestThinnabilitySuite:
    def test_structure_and_counterexample_failure(self):
        from idealconv import even_fin, fin
        reports = run_thinnability_suite(
            trials=3, seed=7, horizon=10 ** 5,
            roster=[fin(), even_fin()],
            properties=("weak",))
        by_ideal = {r.ideal: r for r in reports}
        assert by_ideal["fin"].passed
        assert not by_ideal["evenfin"].passed

    def test_erdos_ulam_reports_carry_prefix_mass_notes(self):
        from idealconv import erdos_ulam_ideal
        reports = run_thinnability_suite(trials=2, seed=3, horizon=10 ** 5,
                                         roster=[erdos_ulam_ideal()],
                                         properties=("weak",))
        assert any("prefix-mass ratio" in note for note in reports[0].notes)


class TestConfigFiles:
    def test_parse_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# example configuration\n"
            "sequence = spike:squares:2:alternating\n"
            "ideal = density0\n"
            "horizon = 100000\n"
            "trials = 4\n"
            "seed = 99\n"
            "grid = -1,0,1,2\n"
            "epsilon = 0.25\n"
            "epsilon_sweep = 0.25,0.1\n"
            "pass_fraction = 0.95\n")
        config = parse_config_file(path)
        assert config.horizon == 100000
        assert config.master_seed == 99
        assert config.grid == (-1.0, 0.0, 1.0, 2.0)
        assert config.epsilon_sweep == (0.25, 0.1)
        override = parse_config_file(path, {"trials": 2, "seed": 7})
        assert override.trials == 2 and override.master_seed == 7

    def test_bad_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("horizont = 10\n")
        with pytest.raises(ValueError):
            parse_config_file(path)

    def test_sweep_must_decrease(self):
        with pytest.raises(ValueError):
            config_from_mapping({"epsilon_sweep": "0.1,0.25"})


class TestReports:
    def test_json_and_csv_written(self, tmp_path):
        report = run_main_theorem(small_main_config(trials=3))
        out_json = tmp_path / "r.json"
        out_csv = tmp_path / "r.csv"
        write_report(report, str(out_json), str(out_csv))
        payload = json.loads(out_json.read_text())
        assert payload["pass"] is True
        lines = out_csv.read_text().strip().splitlines()
        assert lines[0].startswith("trial,seed,agreement")
        assert len(lines) == 1 + 3

    def test_agreement_fraction_permutation_invariant(self):
        report = run_main_theorem(small_main_config(trials=5))
        records = list(report.per_trial)
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(records))
        decided = [records[i].agreement for i in perm
                   if records[i].agreement is not None]
        assert (sum(decided) / len(decided)) == report.agreement_fraction


class TestDeterminism:
    def test_rerun_is_byte_identical(self):
        a = run_main_theorem(small_main_config()).to_json()
        b = run_main_theorem(small_main_config()).to_json()
        assert a == b

    def test_workers_do_not_change_output(self):
        serial = run_main_theorem(small_main_config(workers=1)).to_json()
        parallel = run_main_theorem(small_main_config(workers=4)).to_json()
        assert serial == parallel

    def test_convergence_rerun_identical(self):
        config = ExperimentConfig(sequence="alternating", ideal="density0",
                                  horizon=10 ** 5, trials=4, epsilon=0.5,
                                  limit=1.0)
        assert (run_convergence_theorem(config).to_json()
                == run_convergence_theorem(config).to_json())
