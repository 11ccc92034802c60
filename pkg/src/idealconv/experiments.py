"""Monte Carlo harness: cluster-point invariance under random subsequence
selection, convergence transfer, the counterexample run, and the
thinnability suite.

Probability-one statements are verified as near-unanimity over seeded
trials: a run passes when the fraction of decided trials agreeing with
the unrestricted baseline reaches the configured pass fraction. Every
trial derives its own seed from (master seed, trial index), so reports
are byte-identical however many workers execute them.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .densities import addlimit_check, asymptotic_density, default_schedule
from .errors import AllUndecided, GridEpsilonMismatch
from .ideals import (IdealSpec, PropertyReport, SetGenerator, Verdict,
                     counterexample_ideal, default_roster, member,
                     parse_ideal_spec, test_invariant, test_stretchable,
                     test_thinnable, test_weakly_thinnable)
from .sampler import complement_selector, derive_seed, sample_selector
from .sequences import (auto_grid, default_epsilon, grid_pitch,
                        ideal_converges, parse_sequence_spec)
from .subsets import SetRule, SubsetWindow, parse_set_spec, thin

DEFAULT_TRIALS = 200
DEFAULT_PASS_FRACTION = 0.99
DEFAULT_MASTER_SEED = 20260808


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs of one experiment run (all fields echo into the report)."""

    sequence: str = "spike:squares:2:alternating"
    ideal: str = "density0"
    horizon: int = 10 ** 6
    trials: int = DEFAULT_TRIALS
    master_seed: int = DEFAULT_MASTER_SEED
    grid: Optional[tuple[float, ...]] = None
    epsilon: Optional[float] = None
    epsilon_sweep: Optional[tuple[float, ...]] = None
    pass_fraction: float = DEFAULT_PASS_FRACTION
    limit: float = 0.0
    workers: int = 1
    out_json: Optional[str] = None
    out_csv: Optional[str] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.pass_fraction <= 1.0:
            raise ValueError("pass_fraction must lie in (0, 1]")
        if self.epsilon_sweep is not None:
            sweep = self.epsilon_sweep
            if any(b >= a for a, b in zip(sweep, sweep[1:])):
                raise ValueError("epsilon_sweep must be strictly decreasing")
            if any(e <= 0 for e in sweep):
                raise ValueError("epsilon_sweep values must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def canonical_dict(self) -> dict:
        return {
            "sequence": self.sequence,
            "ideal": self.ideal,
            "horizon": self.horizon,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "grid": list(self.grid) if self.grid is not None else None,
            "epsilon": self.epsilon,
            "epsilon_sweep": (list(self.epsilon_sweep)
                              if self.epsilon_sweep is not None else None),
            "pass_fraction": self.pass_fraction,
            "limit": self.limit,
        }


_CONFIG_KEYS = {
    "sequence": str, "ideal": str, "horizon": int, "trials": int,
    "seed": int, "epsilon": float, "pass_fraction": float, "limit": float,
    "workers": int, "out_json": str, "out_csv": str,
}


def parse_config_file(path: str | Path,
                      overrides: Optional[dict] = None) -> ExperimentConfig:
    """Flat key = value file; '#' starts a comment. Keys: sequence, ideal,
    horizon, trials, seed, grid, epsilon, epsilon_sweep, pass_fraction,
    limit, workers, out_json, out_csv."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)


def config_from_mapping(values: dict) -> ExperimentConfig:
    kwargs: dict = {}
    for key, raw in values.items():
        if key == "seed":
            kwargs["master_seed"] = int(raw)
        elif key == "grid":
            if isinstance(raw, (list, tuple)):
                kwargs["grid"] = tuple(float(v) for v in raw)
            elif str(raw).strip() == "auto":
                kwargs["grid"] = None
            else:
                kwargs["grid"] = tuple(float(v) for v in str(raw).split(",") if v)
        elif key == "epsilon_sweep":
            if isinstance(raw, (list, tuple)):
                kwargs["epsilon_sweep"] = tuple(float(v) for v in raw)
            else:
                kwargs["epsilon_sweep"] = tuple(
                    float(v) for v in str(raw).split(",") if v)
        elif key in _CONFIG_KEYS:
            conv = _CONFIG_KEYS[key]
            kwargs["master_seed" if key == "seed" else key] = conv(raw)
        else:
            raise ValueError(f"unknown config key {key!r}")
    return ExperimentConfig(**kwargs)


@dataclass(frozen=True)
class TrialRecord:
    """One seeded trial: its verdicts and whether it matched the baseline."""

    index: int
    seed: int
    agreement: Optional[bool]  # None = undecided
    detail: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"index": self.index, "seed": self.seed,
                "agreement": self.agreement, "detail": self.detail}


@dataclass(frozen=True)
class ExperimentReport:
    """Aggregated outcome of a Monte Carlo run."""

    name: str
    config: dict
    baseline: dict
    per_trial: tuple[TrialRecord, ...]
    agreement_fraction: float
    undecided_trials: int
    passed: bool
    notes: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "config": self.config,
            "baseline": self.baseline,
            "per_trial": [t.to_json_dict() for t in self.per_trial],
            "agreement_fraction": self.agreement_fraction,
            "undecided_trials": self.undecided_trials,
            "pass": self.passed,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    def csv_rows(self) -> list[dict]:
        rows = []
        for t in self.per_trial:
            row = {"trial": t.index, "seed": t.seed,
                   "agreement": ("" if t.agreement is None
                                 else int(t.agreement))}
            for key, val in sorted(t.detail.items()):
                if isinstance(val, (int, float, str)):
                    row[key] = val
            rows.append(row)
        return rows


def write_report(report: ExperimentReport, out_json: Optional[str] = None,
                 out_csv: Optional[str] = None) -> None:
    if out_json:
        Path(out_json).write_text(report.to_json() + "\n")
    if out_csv:
        rows = report.csv_rows()
        fieldnames: list[str] = []
        for row in rows:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
        Path(out_csv).write_text(buf.getvalue())


def _aggregate(name: str, config: ExperimentConfig, baseline: dict,
               records: list[TrialRecord],
               notes: Sequence[str] = ()) -> ExperimentReport:
    decided = [r for r in records if r.agreement is not None]
    if not decided:
        raise AllUndecided(f"{name}: no trial reached a decision")
    agreeing = sum(1 for r in decided if r.agreement)
    fraction = agreeing / len(decided)
    return ExperimentReport(
        name=name, config=config.canonical_dict(), baseline=baseline,
        per_trial=tuple(records), agreement_fraction=fraction,
        undecided_trials=len(records) - len(decided),
        passed=fraction >= config.pass_fraction, notes=tuple(notes))


def _run_trials(config: ExperimentConfig,
                trial_fn: Callable[[int], TrialRecord]) -> list[TrialRecord]:
    if config.workers == 1:
        return [trial_fn(t) for t in range(config.trials)]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(trial_fn, range(config.trials)))


# -- cluster-point invariance -------------------------------------------------

def _position_window(mask: np.ndarray, description: str) -> SubsetWindow:
    """Window over enumeration positions 1..len(mask) backed by the mask."""
    rule = SetRule(lambda idx, _m=mask: _m[idx - 1], description)
    return SubsetWindow.from_rule(rule, len(mask))


def _gamma_verdicts(x_values: np.ndarray, dim: int, grid: Sequence[float],
                    sweep: Sequence[float], label: str,
                    ideal: IdealSpec) -> dict:
    """verdicts[eps][candidate] for a materialized value array."""
    out: dict = {}
    horizon = len(x_values)
    sched = default_schedule(horizon)
    for eps in sweep:
        verdicts = {}
        for cand in grid:
            center = np.atleast_1d(np.asarray(cand, dtype=np.float64))
            if dim == 1:
                dist = np.abs(x_values.reshape(-1) - center[0])
            else:
                dist = np.sqrt(((np.atleast_2d(x_values) - center) ** 2).sum(axis=1))
            window = _position_window(dist < eps, f"{label} hits {cand}")
            verdicts[_point_key(cand)] = member(ideal, window, sched).verdict
        out[eps] = verdicts
    return out


def _point_key(point) -> str:
    if isinstance(point, (tuple, list)):
        return "(" + ",".join(f"{v:g}" for v in point) + ")"
    return f"{point:g}"


def _compare_gammas(base: dict, trial: dict) -> Optional[bool]:
    """True = decided agreement, False = decided disagreement, None = no
    evidence (nothing mutually decided, or mismatches only among
    undecided candidates)."""
    any_undecided_mismatch = False
    compared = 0
    for eps, base_v in base.items():
        trial_v = trial[eps]
        for cand, bv in base_v.items():
            tv = trial_v[cand]
            if bv == Verdict.UNDECIDED or tv == Verdict.UNDECIDED:
                if bv != tv:
                    any_undecided_mismatch = True
                continue
            compared += 1
            if bv != tv:
                return False
    if compared == 0 or any_undecided_mismatch:
        return None
    return True


def run_main_theorem(config: ExperimentConfig) -> ExperimentReport:
    """Compare the cluster-point set of the sequence with the sets of its
    randomly selected subsequences, on a shared grid and epsilon sweep."""
    x = parse_sequence_spec(config.sequence)
    ideal = parse_ideal_spec(config.ideal)
    if ideal.family == "evenfin":
        warnings.warn("the even-counterexample ideal is not weakly "
                      "thinnable; cluster invariance is expected to fail")
    grid = tuple(config.grid) if config.grid is not None else \
        auto_grid(x, config.horizon)
    epsilon = config.epsilon if config.epsilon is not None else \
        default_epsilon(grid)
    sweep = config.epsilon_sweep or (epsilon,)
    pitch = grid_pitch(grid)
    for eps in sweep:
        if eps >= 2 * pitch:
            raise GridEpsilonMismatch(
                f"epsilon {eps:g} >= twice the grid pitch {pitch:g}")

    base_idx = np.arange(1, config.horizon + 1, dtype=np.int64)
    base_vals = x.values(base_idx)
    base_verdicts = _gamma_verdicts(base_vals, x.dim, grid, sweep,
                                    "baseline", ideal)
    primary = sweep[0]
    baseline = {
        "gamma": [c for c in grid
                  if base_verdicts[primary][_point_key(c)] == Verdict.NOT_IN],
        "undecided": [c for c in grid
                      if base_verdicts[primary][_point_key(c)] == Verdict.UNDECIDED],
        "verdicts": {f"{eps:g}": {c: v.value for c, v in vv.items()}
                     for eps, vv in base_verdicts.items()},
    }

    def trial_fn(t: int) -> TrialRecord:
        seed = derive_seed(config.master_seed, t)
        selector = sample_selector(seed)
        selected = selector.selected_between(1, config.horizon + 1)
        if len(selected) < 64:
            return TrialRecord(t, seed, None, {"note": "too few selections"})
        vals = x.values(selected)
        verdicts = _gamma_verdicts(vals, x.dim, grid, sweep, f"trial{t}", ideal)
        agreement = _compare_gammas(base_verdicts, verdicts)
        gamma = [c for c in grid
                 if verdicts[primary][_point_key(c)] == Verdict.NOT_IN]
        return TrialRecord(t, seed, agreement, {
            "gamma": _point_key(tuple(gamma)) if gamma else "()",
            "selected": len(selected),
            "verdicts": {f"{eps:g}": {c: v.value for c, v in vv.items()}
                         for eps, vv in verdicts.items()}})

    records = _run_trials(config, trial_fn)
    return _aggregate("main_theorem", config, baseline, records)


# -- convergence transfer -----------------------------------------------------

def run_convergence_theorem(config: ExperimentConfig,
                            limit: Optional[float] = None) -> ExperimentReport:
    """Forward direction: if the sequence converges to the limit, almost
    every selected subsequence must; the converse is exercised through the
    selector/complement partition, whose escape sets must reunite exactly."""
    x = parse_sequence_spec(config.sequence)
    ideal = parse_ideal_spec(config.ideal)
    limit = config.limit if limit is None else limit
    epsilon = config.epsilon if config.epsilon is not None else 0.25
    horizon = config.horizon

    baseline_decision = ideal_converges(x, ideal, limit, epsilon, horizon)
    base_idx = np.arange(1, horizon + 1, dtype=np.int64)
    base_vals = x.values(base_idx)
    if x.dim == 1:
        base_dist = np.abs(base_vals.reshape(-1) - limit)
    else:
        center = np.atleast_1d(np.asarray(limit, dtype=np.float64))
        base_dist = np.sqrt(((np.atleast_2d(base_vals) - center) ** 2).sum(axis=1))
    base_escape_mask = base_dist >= epsilon
    base_escape_idx = base_idx[base_escape_mask]
    baseline = {"decision": baseline_decision.to_json_dict(),
                "limit": limit, "epsilon": epsilon,
                "escape_count": int(base_escape_mask.sum())}

    def _restricted_verdict(selected: np.ndarray, label: str):
        mask = base_escape_mask[selected - 1]
        window = _position_window(mask, label)
        sched = default_schedule(len(mask))
        return member(ideal, window, sched), mask

    def trial_fn(t: int) -> TrialRecord:
        seed = derive_seed(config.master_seed, t)
        selector = sample_selector(seed)
        selected = selector.selected_between(1, horizon + 1)
        comp = complement_selector(selector).selected_between(1, horizon + 1)
        if len(selected) < 64 or len(comp) < 64:
            return TrialRecord(t, seed, None, {"note": "degenerate split"})
        d_sel, mask_sel = _restricted_verdict(selected, f"trial{t} kept")
        d_comp, mask_comp = _restricted_verdict(comp, f"trial{t} dropped")
        # partition identity: the two escape sets reunite to the baseline's
        esc_union = np.union1d(selected[mask_sel], comp[mask_comp])
        partition_exact = bool(np.array_equal(esc_union, base_escape_idx))
        if d_sel.verdict == Verdict.UNDECIDED or d_comp.verdict == Verdict.UNDECIDED:
            agreement = None
        else:
            conjunction = (d_sel.verdict == Verdict.IN
                           and d_comp.verdict == Verdict.IN)
            agreement = (conjunction ==
                         (baseline_decision.verdict == Verdict.IN))
            if not partition_exact:
                agreement = False
        return TrialRecord(t, seed, agreement, {
            "kept": d_sel.verdict.value, "dropped": d_comp.verdict.value,
            "kept_statistic": d_sel.statistic,
            "partition_exact": partition_exact})

    records = _run_trials(config, trial_fn)
    notes = []
    if all(r.detail.get("partition_exact") for r in records):
        notes.append("partition identity held exactly in every trial")
    return _aggregate("convergence_theorem", config, baseline, records, notes)


# -- counterexample -----------------------------------------------------------

def run_counterexample(horizon: int = 10 ** 6,
                       b_spec: Optional[str] = None) -> ExperimentReport:
    """Reproduce the three facts of the even-counterexample: the evens lie
    outside the ideal, the thinning base has density one, and the thinned
    set (the odds from 3 on) lands inside the ideal."""
    ideal, a, b = counterexample_ideal(horizon)
    notes = []
    if b_spec is not None:
        b = parse_set_spec(b_spec, horizon)
    sched = default_schedule(horizon)

    b_decision = member(ideal, b, sched)
    precondition_ok = b_decision.verdict == Verdict.NOT_IN
    if not precondition_ok:
        notes.append(f"B={b.description} is already inside the ideal; "
                     "the counterexample precondition fails")

    density_a = asymptotic_density(a, sched)
    ab = thin(a, b)
    ab_decision = member(ideal, ab, default_schedule(ab.horizon))

    facts = {
        "b_verdict": b_decision.verdict.value,
        "b_statistic": b_decision.statistic,
        "a_density_upper": density_a.upper,
        "a_density_lower": density_a.lower,
        "thinned_verdict": ab_decision.verdict.value,
        "thinned_description": ab.description,
        "precondition_ok": precondition_ok,
    }
    expected = (b_decision.verdict == Verdict.NOT_IN
                and density_a.upper >= 0.999
                and ab_decision.verdict == Verdict.IN)
    record = TrialRecord(0, 0, expected, facts)
    config = ExperimentConfig(sequence="none", ideal="evenfin",
                              horizon=horizon, trials=1,
                              pass_fraction=1.0)
    return ExperimentReport(
        name="counterexample", config=config.canonical_dict(),
        baseline=facts, per_trial=(record,),
        agreement_fraction=1.0 if expected else 0.0,
        undecided_trials=0, passed=expected, notes=tuple(notes))


# -- thinnability suite -------------------------------------------------------

PROPERTY_TESTERS = {
    "stretchable": test_stretchable,
    "weak": test_weakly_thinnable,
    "full": test_thinnable,
    "invariant": test_invariant,
}


def run_thinnability_suite(trials: int = 50, seed: int = DEFAULT_MASTER_SEED,
                           horizon: int = 10 ** 6,
                           roster: Optional[Sequence[IdealSpec]] = None,
                           properties: Sequence[str] = ("stretchable", "weak",
                                                        "full", "invariant"),
                           ) -> list[PropertyReport]:
    """Run the property testers over the ideal roster.

    The even-counterexample ideal gets the forced witness pair (the
    density-one base and the evens) injected ahead of its random trials,
    so its weak-thinnability failure is reproduced deterministically.
    Prefix-mass ratio checks for the Erdos-Ulam weight ride along as notes.
    """
    reports: list[PropertyReport] = []
    for ideal in (roster if roster is not None else default_roster()):
        for prop in properties:
            tester = PROPERTY_TESTERS[prop]
            forced = ()
            if ideal.family == "evenfin" and prop in ("weak", "full",
                                                      "invariant"):
                _, a, b = counterexample_ideal(horizon)
                forced = ((a, b),)
            gen = SetGenerator(horizon, forced_pairs=forced)
            report = tester(ideal, gen, trials, seed)
            if ideal.family == "eu" and prop == "weak":
                sched = default_schedule(min(horizon, 10 ** 6))
                extras = []
                for k in (2, 3):
                    est = addlimit_check(ideal.weight, k, sched)
                    extras.append(f"prefix-mass ratio k={k}: "
                                  f"lower={est.lower:.4f}")
                report.notes = report.notes + tuple(extras)
            reports.append(report)
    return reports
