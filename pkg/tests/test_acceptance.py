"""Acceptance gate: every criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS/FAIL
line per criterion. Expected values tagged as oracle-checked are
recomputed here with the brute-force helpers in oracles.py, which were
written before the estimators.

One sub-criterion is expected red and is marked `known_defect`: the
alpha = -1 density of the evens at horizon 1e6. Its stated target is
0.5 +/- 1e-2, but the prefix harmonic ratio it discretizes equals
0.4759... at that horizon (and approaches 1/2 only at a 1/log n rate,
so no feasible horizon reaches the band). The estimator itself is
verified against the oracle to full precision; the gate keeps the
stated tolerance and fails honestly. Deselect with -m "not known_defect".
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import pytest

import idealconv as ic
from idealconv.cli import main as cli_main

import oracles

pytestmark = pytest.mark.acceptance

H6 = 10 ** 6


def report_line(cid: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} — {detail}")


class TestCriterion1Counterexample:
    def test_counterexample_subcommand_exact(self, capsys):
        t0 = time.perf_counter()
        code = cli_main(["counterexample", "--horizon", str(H6)])
        elapsed = time.perf_counter() - t0
        payload = json.loads(capsys.readouterr().out)
        facts = payload["baseline"]
        ok = (code == 0
              and facts["b_verdict"] == "not_in"
              and 0.999 <= facts["a_density_upper"] <= 1.0
              and facts["thinned_verdict"] == "in"
              and elapsed < 5.0)
        report_line("1", ok, f"verdicts=({facts['b_verdict']}, "
                             f"density={facts['a_density_upper']:.6f}, "
                             f"{facts['thinned_verdict']}), {elapsed:.2f}s")
        assert facts["b_verdict"] == "not_in"
        assert 0.999 <= facts["a_density_upper"] <= 1.0
        assert facts["thinned_verdict"] == "in"
        assert code == 0
        assert elapsed < 5.0


class TestCriterion2DensityOracleSuite:
    t_start = None

    @classmethod
    def setup_class(cls):
        cls.t_start = time.perf_counter()
        cls.spent = 0.0

    @classmethod
    def charge(cls, t0):
        cls.spent += time.perf_counter() - t0

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_multiples_density(self, k):
        t0 = time.perf_counter()
        est = ic.asymptotic_density(ic.parse_set_spec(f"multiples:{k}", H6))
        sched = ic.default_schedule(H6)
        oracle_vals = oracles.counts_at(lambda i: i % k == 0, sched.tail)
        oracle_upper = max(c / n for c, n in zip(oracle_vals, sched.tail))
        ok = (abs(est.upper - 1 / k) <= 1e-3
              and abs(est.lower - 1 / k) <= 1e-3
              and est.upper == pytest.approx(oracle_upper, rel=1e-12))
        self.charge(t0)
        report_line(f"2.multiples:{k}", ok,
                    f"upper={est.upper:.6f} target={1 / k:.6f}")
        assert abs(est.upper - 1 / k) <= 1e-3
        assert abs(est.lower - 1 / k) <= 1e-3
        assert est.upper == pytest.approx(oracle_upper, rel=1e-12)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0])
    def test_alpha_density_of_evens(self, alpha):
        t0 = time.perf_counter()
        est = ic.alpha_density_upper(ic.parse_set_spec("evens", H6), alpha)
        sched = ic.default_schedule(H6)
        oracle_upper = self._oracle_alpha_upper(alpha, sched)
        ok = (abs(est.upper - 0.5) <= 1e-2
              and est.upper == pytest.approx(oracle_upper, rel=1e-11))
        self.charge(t0)
        report_line(f"2.alpha:{alpha:g}", ok, f"upper={est.upper:.6f}")
        assert est.upper == pytest.approx(oracle_upper, rel=1e-11)
        assert abs(est.upper - 0.5) <= 1e-2

    @pytest.mark.known_defect
    def test_alpha_minus_one_density_of_evens(self):
        # stated target: within 0.5 +/- 1e-2 at H = 1e6; the exact prefix
        # harmonic ratio there is 0.4759..., so this fails by design (see
        # module docstring); the estimator-vs-oracle check is exact
        t0 = time.perf_counter()
        est = ic.alpha_density_upper(ic.parse_set_spec("evens", H6), -1.0)
        sched = ic.default_schedule(H6)
        oracle_upper = self._oracle_alpha_upper(-1.0, sched)
        assert est.upper == pytest.approx(oracle_upper, rel=1e-11)
        self.charge(t0)
        ok = abs(est.upper - 0.5) <= 1e-2
        report_line("2.alpha:-1", ok,
                    f"upper={est.upper:.6f} vs stated 0.5±0.01 "
                    "(unreachable at this horizon; see README)")
        assert abs(est.upper - 0.5) <= 1e-2

    @staticmethod
    def _oracle_alpha_upper(alpha, sched):
        best = 0.0
        num = 0.0
        den = 0.0
        prev = 0
        for n in sched.checkpoints:
            num += math.fsum(float(i) ** alpha
                             for i in range(prev + 1, n + 1) if i % 2 == 0)
            den += math.fsum(float(i) ** alpha
                             for i in range(prev + 1, n + 1))
            prev = n
            if n >= sched.tail_start:
                best = max(best, num / den)
        return best

    def test_blocks_asymptotic_band(self):
        t0 = time.perf_counter()
        horizon = 2 ** 24
        est = ic.asymptotic_density(ic.parse_set_spec("blocks:2", horizon))
        sched = ic.default_schedule(horizon)
        oracle_vals = [oracles.blocks_count(n) / n for n in sched.tail]
        ok = (abs(est.upper - 2 / 3) <= 0.02 and abs(est.lower - 1 / 3) <= 0.02
              and est.upper == pytest.approx(max(oracle_vals), rel=1e-12)
              and est.lower == pytest.approx(min(oracle_vals), rel=1e-12))
        self.charge(t0)
        report_line("2.blocks", ok,
                    f"upper={est.upper:.6f} lower={est.lower:.6f}")
        assert est.upper == pytest.approx(max(oracle_vals), rel=1e-12)
        assert est.lower == pytest.approx(min(oracle_vals), rel=1e-12)
        assert abs(est.upper - 2 / 3) <= 0.02
        assert abs(est.lower - 1 / 3) <= 0.02

    def test_zz_runtime_budget(self):
        ok = self.spent < 60.0
        report_line("2.runtime", ok, f"{self.spent:.1f}s < 60s")
        assert ok


class TestCriterion3PolyaSeparation:
    def test_polya_exceeds_asymptotic_on_blocks(self):
        t0 = time.perf_counter()
        horizon = 2 ** 26
        window = ic.parse_set_spec("blocks:2", horizon)
        sched = ic.default_schedule(horizon)
        pol = ic.polya_upper(window, None, sched)
        asym = ic.asymptotic_density(window, sched)
        elapsed = time.perf_counter() - t0

        # brute-force window oracle at the same boundaries
        s = 0.99
        oracle_vals = []
        for n in sched.tail:
            lo = math.ceil(s * n)
            oracle_vals.append(
                oracles.blocks_window_count(lo, n) / ((1 - s) * n))
        oracle_upper = max(oracle_vals)
        asym_oracle = max(oracles.blocks_count(n) / n for n in sched.tail)

        ok = (pol.upper >= 0.95 and asym.upper <= 0.70 and elapsed < 120.0
              and pol.upper == pytest.approx(oracle_upper, rel=1e-12)
              and asym.upper == pytest.approx(asym_oracle, rel=1e-12))
        report_line("3", ok, f"polya(s=0.99)={pol.upper:.6f} "
                             f"asymptotic={asym.upper:.6f} {elapsed:.1f}s")
        assert pol.param == 0.99
        assert pol.upper == pytest.approx(oracle_upper, rel=1e-12)
        assert asym.upper == pytest.approx(asym_oracle, rel=1e-12)
        assert pol.upper >= 0.95
        assert asym.upper <= 0.70
        assert elapsed < 120.0


@pytest.mark.slow
class TestCriterion4ThinnabilitySuite:
    def test_suite_outcomes(self):
        t0 = time.perf_counter()
        reports = ic.run_thinnability_suite(trials=50, seed=20260808,
                                            horizon=H6)
        elapsed = time.perf_counter() - t0

        by_key = {(r.ideal, r.property): r for r in reports}
        proved = [r for r in reports if r.ideal != "evenfin"]
        violations_on_proved = [r for r in proved if not r.passed]

        evenfin_weak = by_key[("evenfin", "weakly_thinnable")]
        witness_hit = any(
            v.witnesses.get("a") == "complement:{1}"
            and v.witnesses.get("b") == "evens"
            for v in evenfin_weak.violations)

        undecided_ok = all(r.undecided < 0.2 * r.trials for r in reports)

        ok = (not violations_on_proved and not evenfin_weak.passed
              and witness_hit and undecided_ok and elapsed < 600.0)
        worst_undecided = max(r.undecided / r.trials for r in reports)
        report_line(
            "4", ok,
            f"{len(reports)} reports, proved-ideal violations="
            f"{len(violations_on_proved)}, evenfin weak fails={not evenfin_weak.passed},"
            f" worst undecided={worst_undecided:.0%}, {elapsed:.0f}s")
        assert not violations_on_proved, [r.ideal for r in violations_on_proved]
        assert not evenfin_weak.passed
        assert witness_hit
        assert by_key[("evenfin", "stretchable")].passed
        assert undecided_ok
        assert elapsed < 600.0


@pytest.mark.slow
class TestCriterion5MainTheorem:
    def test_monte_carlo_invariance_both_ideals(self):
        t0 = time.perf_counter()
        base = dict(sequence="spike:squares:2:alternating", horizon=H6,
                    trials=200, grid=(-1.0, 0.0, 1.0, 2.0), epsilon=0.25,
                    master_seed=20260808)
        rep0 = ic.run_main_theorem(ic.ExperimentConfig(ideal="density0",
                                                       **base))
        repf = ic.run_main_theorem(ic.ExperimentConfig(ideal="fin", **base))
        elapsed = time.perf_counter() - t0
        ok = (rep0.baseline["gamma"] == [-1.0, 1.0]
              and rep0.agreement_fraction >= 0.99
              and repf.baseline["gamma"] == [-1.0, 1.0, 2.0]
              and repf.agreement_fraction >= 0.99
              and elapsed < 600.0)
        report_line("5", ok,
                    f"I0 gamma={rep0.baseline['gamma']} "
                    f"agree={rep0.agreement_fraction:.4f} | Fin gamma="
                    f"{repf.baseline['gamma']} agree="
                    f"{repf.agreement_fraction:.4f}, {elapsed:.0f}s")
        assert rep0.baseline["gamma"] == [-1.0, 1.0]
        assert rep0.agreement_fraction >= 0.99
        assert repf.baseline["gamma"] == [-1.0, 1.0, 2.0]
        assert repf.agreement_fraction >= 0.99
        assert elapsed < 600.0


@pytest.mark.slow
class TestCriterion6ConvergenceTheorem:
    def test_monte_carlo_convergence_transfer(self):
        t0 = time.perf_counter()
        config = ic.ExperimentConfig(sequence="spike:squares:1:const0",
                                     ideal="density0", horizon=4 * H6,
                                     trials=200, epsilon=0.25, limit=0.0,
                                     master_seed=20260808)
        report = ic.run_convergence_theorem(config)
        elapsed = time.perf_counter() - t0
        kept_in = sum(1 for t in report.per_trial
                      if t.detail.get("kept") == "in")
        partition_all = all(t.detail.get("partition_exact")
                            for t in report.per_trial)
        ok = (report.baseline["decision"]["verdict"] == "in"
              and kept_in / len(report.per_trial) >= 0.99
              and partition_all and elapsed < 300.0)
        report_line("6", ok, f"baseline=in kept_in={kept_in}/200 "
                             f"partition_exact={partition_all}, {elapsed:.0f}s")
        assert report.baseline["decision"]["verdict"] == "in"
        assert kept_in / len(report.per_trial) >= 0.99
        assert partition_all
        assert elapsed < 300.0


@pytest.mark.slow
class TestCriterion7PropertyInvariants:
    def test_property_suite_green(self):
        # the module invariants live in tests/test_properties.py at 1000
        # generated cases per invariant; run it as its own pytest session
        t0 = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "pytest",
             str(Path(__file__).parent / "test_properties.py"), "-q"],
            capture_output=True, text=True, cwd=str(Path(__file__).parent.parent))
        elapsed = time.perf_counter() - t0
        ok = proc.returncode == 0
        tail = proc.stdout.strip().splitlines()[-1] if proc.stdout else ""
        report_line("7", ok, f"{tail}, {elapsed:.0f}s")
        assert proc.returncode == 0, proc.stdout[-2000:]


class TestCriterion8Determinism:
    def test_byte_identical_reports_across_threads(self):
        base = dict(sequence="spike:squares:2:alternating", ideal="density0",
                    horizon=10 ** 5, trials=8, grid=(-1.0, 0.0, 1.0, 2.0),
                    epsilon=0.25, master_seed=777)
        one = ic.run_main_theorem(ic.ExperimentConfig(workers=1, **base))
        again = ic.run_main_theorem(ic.ExperimentConfig(workers=1, **base))
        four = ic.run_main_theorem(ic.ExperimentConfig(workers=4, **base))
        conv = dict(sequence="alternating", ideal="density0",
                    horizon=10 ** 5, trials=8, epsilon=0.5, limit=1.0,
                    master_seed=777)
        c_one = ic.run_convergence_theorem(ic.ExperimentConfig(workers=1, **conv))
        c_four = ic.run_convergence_theorem(ic.ExperimentConfig(workers=4, **conv))
        ok = (one.to_json() == again.to_json()
              and one.to_json() == four.to_json()
              and c_one.to_json() == c_four.to_json())
        report_line("8", ok, "rerun and 4-thread reports byte-identical")
        assert one.to_json() == again.to_json()
        assert one.to_json() == four.to_json()
        assert c_one.to_json() == c_four.to_json()
