"""Command-line interface: outputs, config plumbing, exit codes."""

import json

from idealconv.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestInspectionCommands:
    def test_density_json_shape(self, capsys):
        code, payload = run_cli(capsys, "density", "--set", "evens",
                                "--kind", "asymptotic", "--horizon", "100000")
        assert code == 0
        assert payload["kind"] == "asymptotic"
        assert abs(payload["upper"] - 0.5) < 1e-3
        assert {"n", "value"} == set(payload["trace"][0].keys())

    def test_density_alpha_and_eu_kinds(self, capsys):
        for kind in ("alpha:1", "eu:one_over_n", "weight:one_over_n",
                     "polya"):
            code, payload = run_cli(capsys, "density", "--set", "evens",
                                    "--kind", kind, "--horizon", "50000")
            assert code == 0 and "upper" in payload

    def test_membership(self, capsys):
        code, payload = run_cli(capsys, "membership", "--ideal", "evenfin",
                                "--set", "evens", "--horizon", "10000")
        assert code == 0
        assert payload["verdict"] == "not_in"

    def test_gamma(self, capsys):
        code, payload = run_cli(capsys, "gamma", "--seq",
                                "spike:squares:2:alternating", "--ideal",
                                "fin", "--horizon", "100000",
                                "--grid=-1,0,1,2", "--epsilon", "0.25")
        assert code == 0
        assert payload["gamma"] == [-1.0, 1.0, 2.0]

    def test_sample_bits_and_trace(self, capsys):
        code, payload = run_cli(capsys, "sample", "--seed", "7",
                                "--horizon", "100000")
        assert code == 0
        assert len(payload["first_bits"]) == 64
        assert set(payload["first_bits"]) <= {"0", "1"}
        code, payload = run_cli(capsys, "sample", "--seed", "7",
                                "--horizon", "1000000",
                                "--indices", "squares")
        assert code == 0
        assert abs(payload["frequency"]["trace"][-1]["value"] - 0.5) < 0.1

    def test_invalid_spec_exits_one(self, capsys):
        code = main(["density", "--set", "nonsense", "--horizon", "1000"])
        assert code == 1


class TestExperimentCommands:
    def test_counterexample_pass_exit_zero(self, capsys):
        code, payload = run_cli(capsys, "counterexample",
                                "--horizon", "100000")
        assert code == 0
        assert payload["pass"] is True

    def test_counterexample_precondition_fail_exit_two(self, capsys):
        code, payload = run_cli(capsys, "counterexample",
                                "--horizon", "100000", "--b", "odds")
        assert code == 2
        assert payload["pass"] is False

    def test_verify_main_with_flags(self, capsys):
        code, payload = run_cli(
            capsys, "verify-main", "--sequence",
            "spike:squares:2:alternating", "--ideal", "fin",
            "--horizon", "100000", "--trials", "4",
            "--grid=-1,0,1,2", "--epsilon", "0.25", "--seed", "5")
        assert code == 0
        assert payload["pass"] is True
        assert payload["baseline"]["gamma"] == [-1.0, 1.0, 2.0]

    def test_verify_main_all_undecided_exit_three(self, capsys):
        code = main(["verify-main", "--sequence",
                     "spike:squares:2:alternating", "--ideal", "density0",
                     "--horizon", "1000000", "--trials", "2",
                     "--grid", "2", "--epsilon", "0.25"])
        assert code == 3

    def test_verify_convergence_with_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "conv.cfg"
        cfg.write_text(
            "sequence = alternating\n"
            "ideal = density0\n"
            "horizon = 100000\n"
            "trials = 3\n"
            "epsilon = 0.5\n"
            "limit = 1.0\n")
        code, payload = run_cli(capsys, "verify-convergence",
                                "--config", str(cfg))
        assert code == 0
        assert payload["baseline"]["decision"]["verdict"] == "not_in"

    def test_thinnability_single_ideal(self, capsys):
        code, payload = run_cli(capsys, "thinnability", "--ideal", "fin",
                                "--property", "stretchable",
                                "--trials", "3", "--seed", "2",
                                "--horizon", "100000")
        assert code == 0
        report = payload["reports"][0]
        assert report["ideal"] == "fin"
        assert report["pass"] is True

    def test_thinnability_counterexample_exit_two(self, capsys):
        code, payload = run_cli(capsys, "thinnability", "--ideal", "evenfin",
                                "--property", "weak", "--trials", "2",
                                "--seed", "3", "--horizon", "100000")
        assert code == 2
        assert payload["reports"][0]["pass"] is False

    def test_out_files_written(self, capsys, tmp_path):
        out_json = tmp_path / "main.json"
        out_csv = tmp_path / "main.csv"
        code, _ = run_cli(
            capsys, "verify-main", "--sequence", "const:1.0",
            "--ideal", "density0", "--horizon", "10000", "--trials", "2",
            "--grid", "0,1", "--epsilon", "0.2",
            "--out-json", str(out_json), "--out-csv", str(out_csv))
        assert code == 0
        assert json.loads(out_json.read_text())["pass"] is True
        assert out_csv.read_text().startswith("trial,seed,agreement")


class TestCliDeterminism:
    def test_same_invocation_same_bytes(self, capsys):
        argv = ["verify-main", "--sequence", "spike:squares:2:alternating",
                "--ideal", "fin", "--horizon", "50000", "--trials", "3",
                "--grid=-1,0,1,2", "--epsilon", "0.25", "--seed", "11"]
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        second = capsys.readouterr().out
        assert first == second
        code_w = main(argv + ["--workers", "3"])
        with_workers = capsys.readouterr().out
        assert code_w == 0 and with_workers == first
