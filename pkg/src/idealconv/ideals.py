"""Finite-horizon membership decisions for ideals on N, plus randomized
testers for the structural properties an ideal may enjoy (stretchable,
weakly thinnable, thinnable, invariant).

Membership in a density-defined ideal cannot be decided exactly from a
finite window, so decisions are three-valued: a statistic is compared
against an in-threshold and an out-threshold and anything in between is
reported Undecided rather than coerced. The exceptions are Fin and the
even-counterexample family, whose window decisions are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .densities import (CheckpointSchedule, WeightFunction,
                        alpha_density_upper, asymptotic_density,
                        default_schedule, erdos_ulam_ratio, polya_upper,
                        weight_sum)
from .errors import GeneratorExhausted
from .subsets import (SetRule, SubsetWindow, bernoulli_window, parse_set_rule,
                      parse_set_spec, progression, stretch, thin, window_union)

DEFAULT_TAU_IN = 0.005
DEFAULT_TAU_OUT = 0.02

#: tail-mass multiple of f's own magnitude that flags a divergent weight sum
DIVERGENCE_FLOOR_MULTIPLE = 10.0

#: rejection-sampling budget for random draws
DRAW_BUDGET = 64


class Verdict(str, Enum):
    IN = "in"
    NOT_IN = "not_in"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class Decision:
    """Three-valued membership verdict with the statistic that produced it."""

    verdict: Verdict
    statistic: float
    horizon_used: int

    def to_json_dict(self) -> dict:
        return {"verdict": self.verdict.value, "statistic": self.statistic,
                "horizon_used": self.horizon_used}


@dataclass(frozen=True)
class IdealSpec:
    """Tagged description of one ideal plus its decision thresholds.

    family is one of fin, density0, alpha, summable, eu, polya, evenfin.
    Ratio-statistic families decide In at statistic <= tau_in and NotIn at
    statistic >= tau_out; fin and evenfin decide exactly and the summable
    family uses a convergence diagnostic with a divergence floor.
    """

    family: str
    alpha: Optional[float] = None
    weight: Optional[WeightFunction] = None
    tau_in: float = DEFAULT_TAU_IN
    tau_out: float = DEFAULT_TAU_OUT

    def __post_init__(self):
        if self.family not in ("fin", "density0", "alpha", "summable", "eu",
                               "polya", "evenfin"):
            raise ValueError(f"unknown ideal family {self.family!r}")
        if not (0.0 <= self.tau_in < self.tau_out):
            raise ValueError("thresholds need 0 <= tau_in < tau_out")
        if self.family == "alpha" and (self.alpha is None or self.alpha < -1):
            raise ValueError("alpha family needs alpha >= -1")
        if self.family in ("summable", "eu") and self.weight is None:
            raise ValueError(f"{self.family} family needs a weight function")

    @property
    def label(self) -> str:
        if self.family == "alpha":
            return f"alpha:{self.alpha:g}"
        if self.family == "summable":
            return f"summable:{self.weight.name}"
        if self.family == "eu":
            return f"eu:{self.weight.name}"
        return self.family

    def key(self) -> tuple:
        return (self.label, self.tau_in, self.tau_out)

    def __repr__(self) -> str:
        return f"IdealSpec({self.label})"


def fin() -> IdealSpec:
    return IdealSpec("fin")


def zero_density() -> IdealSpec:
    return IdealSpec("density0")


def alpha_ideal(alpha: float) -> IdealSpec:
    return IdealSpec("alpha", alpha=float(alpha))


def summable_ideal(weight: Optional[WeightFunction] = None) -> IdealSpec:
    return IdealSpec("summable", weight=weight or WeightFunction.one_over_n())


def erdos_ulam_ideal(weight: Optional[WeightFunction] = None) -> IdealSpec:
    return IdealSpec("eu", weight=weight or WeightFunction.one_over_n())


def polya_ideal() -> IdealSpec:
    return IdealSpec("polya")


def even_fin() -> IdealSpec:
    """Sets whose intersection with the evens is finite (the ideal built
    from the 1-on-evens / 0-on-odds weight)."""
    return IdealSpec("evenfin")


def parse_ideal_spec(text: str) -> IdealSpec:
    """Grammar: fin | density0 | alpha:<real> | summable:<weight> |
    eu:<weight> | polya | evenfin."""
    from .densities import parse_weight
    text = text.strip()
    if text == "fin":
        return fin()
    if text == "density0":
        return zero_density()
    if text == "polya":
        return polya_ideal()
    if text == "evenfin":
        return even_fin()
    if text.startswith("alpha:"):
        return alpha_ideal(float(text.partition(":")[2]))
    if text.startswith("summable:"):
        return summable_ideal(parse_weight(text.partition(":")[2]))
    if text.startswith("eu:"):
        return erdos_ulam_ideal(parse_weight(text.partition(":")[2]))
    raise ValueError(f"unknown ideal spec {text!r}")


# -- membership --------------------------------------------------------------

def _decide(stat: float, tau_in: float, tau_out: float) -> Verdict:
    if stat >= tau_out:
        return Verdict.NOT_IN
    if stat <= tau_in:
        return Verdict.IN
    return Verdict.UNDECIDED


def _max_even_member(a: SubsetWindow) -> int:
    """Largest even member of the window, 0 if none (top-down block scan)."""
    if a.is_materialized:
        ev = a.members[a.members % 2 == 0]
        return int(ev[-1]) if len(ev) else 0
    chunk = 1 << 16
    hi = a.horizon
    while hi >= 1:
        lo = max(1, hi - chunk + 1)
        idx = np.arange(lo, hi + 1, dtype=np.int64)
        mask = a.contains(idx) & (idx % 2 == 0)
        if mask.any():
            return int(idx[mask][-1])
        hi = lo - 1
    return 0


def member(ideal: IdealSpec, a: SubsetWindow,
           sched: Optional[CheckpointSchedule] = None) -> Decision:
    """Finite-horizon membership decision for the window in the ideal."""
    sched = sched or default_schedule(a.horizon)
    cache_key = ("member", ideal.key(), sched.key())
    hit = a.cache.get(cache_key)
    if hit is not None:
        return hit
    decision = _member_uncached(ideal, a, sched)
    a.cache[cache_key] = decision
    return decision


def _member_uncached(ideal: IdealSpec, a: SubsetWindow,
                     sched: CheckpointSchedule) -> Decision:
    horizon = sched.horizon
    fam = ideal.family

    if fam == "fin":
        # exact: in iff no member appears after the tail start
        ns = np.asarray([sched.tail_start, horizon], dtype=np.int64)
        c0, c1 = a.counting_at(ns)
        stat = float(c1 - c0)
        verdict = Verdict.IN if stat == 0 else Verdict.NOT_IN
        return Decision(verdict, stat, horizon)

    if fam == "evenfin":
        # exact once the horizon clears the largest even member by 2
        max_even = _max_even_member(a)
        stat = float(max_even)
        verdict = Verdict.IN if max_even <= a.horizon - 2 else Verdict.NOT_IN
        return Decision(verdict, stat, horizon)

    if fam == "summable":
        est = weight_sum(ideal.weight, a, sched=sched)
        sums = [cv.value for cv in est.trace]
        tail = sums[sched.tail_slice()]
        tail_mass = tail[-1] - tail[0]
        floor = DIVERGENCE_FLOOR_MULTIPLE * ideal.tau_in * ideal.weight.anchor()
        if tail_mass >= floor:
            verdict = Verdict.NOT_IN
        elif est.converged:
            verdict = Verdict.IN
        else:
            verdict = Verdict.UNDECIDED
        return Decision(verdict, float(tail_mass), horizon)

    if fam == "density0":
        est = asymptotic_density(a, sched)
    elif fam == "alpha":
        est = alpha_density_upper(a, ideal.alpha, sched)
    elif fam == "polya":
        est = polya_upper(a, None, sched)
    elif fam == "eu":
        est = erdos_ulam_ratio(ideal.weight, a, sched)
    else:  # pragma: no cover
        raise AssertionError(fam)
    stat = est.upper
    return Decision(_decide(stat, ideal.tau_in, ideal.tau_out), stat, horizon)


# -- property testers ---------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    """Witness of a failed closure check: the operands and the statistics."""

    check: str
    witnesses: dict

    def to_json_dict(self) -> dict:
        return {"check": self.check, "witnesses": self.witnesses}


@dataclass
class PropertyReport:
    """Outcome of a randomized property check.

    `passed` is true iff no decided trial produced a violation; undecided
    trials are tallied separately and never count either way.
    """

    property: str
    ideal: str
    trials: int
    violations: tuple[Violation, ...] = ()
    undecided: int = 0
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "property": self.property,
            "ideal": self.ideal,
            "trials": self.trials,
            "violations": [v.to_json_dict() for v in self.violations],
            "undecided": self.undecided,
            "pass": self.passed,
            "notes": list(self.notes),
        }


def _trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(K.mix64(master_seed, index + 1))


class SetGenerator:
    """Reproducible draws from the documented random-set families.

    Positive-density draws come from arithmetic progressions (step <= 5),
    counter-based Bernoulli(p) sets with p in {0.3, ..., 0.9}, and unions
    of progressions; sparse (in-ideal) draws come from finite sets, powers
    of two, and cubes. Geometric block sets join the not-in pool. The pools
    keep every drawn statistic clear of the threshold band, so trials
    decide rather than stall undecided; the full parameter ranges stay
    available through the set-spec grammar.
    """

    def __init__(self, horizon: int,
                 forced_pairs: Sequence[tuple[SubsetWindow, SubsetWindow]] = (),
                 forced_sets: Sequence[SubsetWindow] = (),
                 finite_only: Optional[bool] = None):
        self.horizon = int(horizon)
        self._forced = list(forced_pairs)
        self._forced_pos = 0
        self._forced_sets = tuple(forced_sets)
        # a forced pool is finite: exhausting it is vacuous, not an error
        self.finite_only = (bool(self._forced_sets) if finite_only is None
                            else finite_only)

    # forced pairs are consumed by the pair-based testers first
    def next_forced(self) -> Optional[tuple[SubsetWindow, SubsetWindow]]:
        if self._forced_pos < len(self._forced):
            pair = self._forced[self._forced_pos]
            self._forced_pos += 1
            return pair
        return None

    def reset(self) -> None:
        self._forced_pos = 0

    def positive_density(self, rng: np.random.Generator) -> SubsetWindow:
        kind = int(rng.integers(0, 4))
        if kind == 0:
            step = int(rng.integers(1, 6))
            first = int(rng.integers(1, step + 1))
            return progression(first, step, self.horizon)
        if kind == 1:
            p = float(rng.choice([0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
            return bernoulli_window(p, int(rng.integers(0, 2 ** 62)), self.horizon)
        if kind == 2:
            return parse_set_spec("naturals", self.horizon)
        a = progression(int(rng.integers(1, 4)), int(rng.integers(2, 6)),
                        self.horizon)
        b = progression(int(rng.integers(1, 4)), int(rng.integers(2, 6)),
                        self.horizon)
        return window_union(a, b)

    def _not_in_candidate(self, ideal: IdealSpec,
                          rng: np.random.Generator) -> SubsetWindow:
        if ideal.family == "evenfin":
            kind = int(rng.integers(0, 3))
            if kind == 0:
                return parse_set_spec("evens", self.horizon)
            if kind == 1:
                p = float(rng.choice([0.3, 0.5, 0.7, 0.9]))
                return bernoulli_window(p, int(rng.integers(0, 2 ** 62)),
                                        self.horizon)
            step = int(rng.integers(1, 6))
            first = int(rng.integers(1, step + 1))
            if step % 2 == 0 and first % 2 == 1:
                first = min(step, first + 1)  # keep evens inside
            return progression(first, step, self.horizon)
        if int(rng.integers(0, 8)) == 0:
            return parse_set_spec(f"blocks:{int(rng.choice([2, 3]))}",
                                  self.horizon)
        return self.positive_density(rng)

    def _in_candidate(self, ideal: IdealSpec,
                      rng: np.random.Generator) -> SubsetWindow:
        if ideal.family == "evenfin":
            kind = int(rng.integers(0, 3))
            if kind == 0:
                return parse_set_spec("odds", self.horizon)
            if kind == 1:
                step = 2 * int(rng.integers(1, 4))
                return progression(1, step, self.horizon)
            return self._small_finite(rng)
        kind = int(rng.integers(0, 3))
        if kind == 0:
            return self._small_finite(rng)
        if kind == 1:
            return self._shifted_sparse("powers:2")
        return self._shifted_sparse("cubes")

    def _shifted_sparse(self, family: str) -> SubsetWindow:
        # drop the small members so harmonic-type masses stay negligible
        floor = 256
        inner = parse_set_rule(family)
        rule = SetRule(lambda idx, _r=inner: _r(idx) & (idx >= floor),
                       f"{family}>= {floor}")
        return SubsetWindow.from_rule(rule, self.horizon)

    def _small_finite(self, rng: np.random.Generator) -> SubsetWindow:
        # members kept away from 1 (weight mass) and far below the tail
        # start (stabilization) so the draw is In for every roster family
        count = int(rng.integers(1, 12))
        lo = max(2, self.horizon // 1000)
        hi = max(lo + 1, self.horizon // 256)
        members = np.unique(rng.integers(lo, hi, size=count))
        return SubsetWindow.from_members(members, horizon=self.horizon,
                                         description="finite")

    def draw_with_verdict(self, ideal: IdealSpec, want: Verdict,
                          rng: np.random.Generator,
                          sched: CheckpointSchedule) -> SubsetWindow:
        """Rejection-sample a window whose decision matches `want`."""
        if self._forced_sets:
            for cand in self._forced_sets:
                if member(ideal, cand, sched).verdict == want:
                    return cand
            raise GeneratorExhausted(
                f"no {want.value} set in the forced pool for {ideal.label}")
        for _ in range(DRAW_BUDGET):
            cand = (self._not_in_candidate(ideal, rng) if want == Verdict.NOT_IN
                    else self._in_candidate(ideal, rng))
            if member(ideal, cand, sched).verdict == want:
                return cand
        raise GeneratorExhausted(
            f"no {want.value} draw for {ideal.label} in {DRAW_BUDGET} tries")

    def dominated_pair(self, ideal: IdealSpec, rng: np.random.Generator,
                       sched: CheckpointSchedule) -> tuple[SubsetWindow, SubsetWindow]:
        """(X, Y) with X <= Y positionally and Y decided NotIn.

        X is built from Y by per-position decrements bounded by the gaps of
        Y's enumeration, which preserves strict increase by construction.
        """
        y = self.draw_with_verdict(ideal, Verdict.NOT_IN, rng, sched)
        ym = y.members
        delta0 = int(rng.integers(0, int(ym[0])))
        gaps = np.diff(ym)
        incr = rng.integers(0, gaps, endpoint=False) if len(gaps) else \
            np.zeros(0, dtype=np.int64)
        delta = np.concatenate([[delta0], incr]).cumsum()
        xm = ym - delta
        x = SubsetWindow.from_members(xm, horizon=int(xm[-1]),
                                      description=f"dominating({y.description})")
        return x, y


def _violation(check: str, **witnesses) -> Violation:
    return Violation(check, witnesses)


def thin_extended(a: SubsetWindow, b: SubsetWindow) -> SubsetWindow:
    """thin(a, b) rehorizoned to the largest position it provably covers.

    When b is complete below its horizon, every member of the abstract set
    A_B that is <= a_m, with m = min(len(a.members), b.horizon), comes from
    a listed index of b; so the thinned members are complete up to a_m. The
    plain transform stops at the last picked member, which would make every
    thinned window look unstabilized to the Fin test.
    """
    out = thin(a, b)
    if not b.complete_below_horizon or len(out.members) == 0:
        return out
    am = a.members
    m = min(len(am), b.horizon)
    horizon = int(am[m - 1])
    if horizon <= out.horizon:
        return out
    return SubsetWindow(horizon=horizon, members=out.members,
                        description=out.description)


def _describe(w: SubsetWindow) -> str:
    return w.description or "set"


def test_stretchable(ideal: IdealSpec, gen: SetGenerator, trials: int,
                     seed: int) -> PropertyReport:
    """Draw A NotIn and k in {2,3,5}; kA decided In is a violation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sched = default_schedule(gen.horizon)
    violations: list[Violation] = []
    undecided = 0
    notes: list[str] = []
    for t in range(trials):
        rng = _trial_rng(seed, t)
        k = int(rng.choice([2, 3, 5]))
        try:
            a = gen.draw_with_verdict(ideal, Verdict.NOT_IN, rng, sched)
        except GeneratorExhausted:
            if gen.finite_only:
                undecided += 1
                notes.append("draw pool exhausted; vacuous trial")
                continue
            raise
        ka = stretch(a, k)
        d = member(ideal, ka, default_schedule(ka.horizon))
        if d.verdict == Verdict.IN:
            violations.append(_violation(
                "stretch(A,k) decided In", a=_describe(a), k=k,
                statistic=d.statistic))
        elif d.verdict == Verdict.UNDECIDED:
            undecided += 1
    return PropertyReport("stretchable", ideal.label, trials,
                          tuple(violations), undecided, tuple(notes))


def _weak_check(ideal: IdealSpec, a: SubsetWindow, b: SubsetWindow,
                sched: CheckpointSchedule,
                violations: list, tag: str = "thin(A,B)") -> Optional[bool]:
    """Returns True if decided fine, None if undecided, records violations."""
    ab = thin_extended(a, b)
    d = member(ideal, ab, default_schedule(ab.horizon))
    if d.verdict == Verdict.IN:
        violations.append(_violation(
            f"{tag} decided In", a=_describe(a), b=_describe(b),
            statistic=d.statistic))
        return True
    if d.verdict == Verdict.UNDECIDED:
        return None
    return True


def _draw_weak_operands(ideal: IdealSpec, gen: SetGenerator,
                        rng: np.random.Generator, sched: CheckpointSchedule,
                        notes: list) -> Optional[tuple[SubsetWindow, SubsetWindow]]:
    forced = gen.next_forced()
    if forced is not None:
        return forced
    a = gen.positive_density(rng)
    # confirm the draw is decisively of positive density
    est = asymptotic_density(a, sched)
    if est.lower < DEFAULT_TAU_OUT:
        notes.append(f"discarded low-density draw {_describe(a)}")
        a = progression(1, 2, gen.horizon)
    b = gen.draw_with_verdict(ideal, Verdict.NOT_IN, rng, sched)
    return a, b


def test_weakly_thinnable(ideal: IdealSpec, gen: SetGenerator, trials: int,
                          seed: int) -> PropertyReport:
    """Draw A of positive density and B NotIn; A_B decided In is a violation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sched = default_schedule(gen.horizon)
    gen.reset()
    violations: list[Violation] = []
    undecided = 0
    notes: list[str] = []
    for t in range(trials):
        rng = _trial_rng(seed, t)
        try:
            a, b = _draw_weak_operands(ideal, gen, rng, sched, notes)
        except GeneratorExhausted:
            if gen.finite_only:
                undecided += 1
                notes.append("draw pool exhausted; vacuous trial")
                continue
            raise
        if _weak_check(ideal, a, b, sched, violations) is None:
            undecided += 1
    return PropertyReport("weakly_thinnable", ideal.label, trials,
                          tuple(violations), undecided, tuple(notes))


def test_thinnable(ideal: IdealSpec, gen: SetGenerator, trials: int,
                   seed: int) -> PropertyReport:
    """Weak thinnability plus the reverse thinning B_A and the positional
    domination closure (X <= Y, Y NotIn, X decided In is a violation)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sched = default_schedule(gen.horizon)
    gen.reset()
    violations: list[Violation] = []
    undecided = 0
    notes: list[str] = []
    for t in range(trials):
        rng = _trial_rng(seed, t)
        try:
            a, b = _draw_weak_operands(ideal, gen, rng, sched, notes)
        except GeneratorExhausted:
            if gen.finite_only:
                undecided += 1
                notes.append("draw pool exhausted; vacuous trial")
                continue
            raise
        ok_parts = []
        ok_parts.append(_weak_check(ideal, a, b, sched, violations))
        ok_parts.append(_weak_check(ideal, b, a, sched, violations,
                                    tag="thin(B,A)"))
        x, y = gen.dominated_pair(ideal, rng, sched)
        d = member(ideal, x, default_schedule(x.horizon))
        if d.verdict == Verdict.IN:
            violations.append(_violation(
                "dominating X decided In", x=_describe(x), y=_describe(y),
                statistic=d.statistic))
            ok_parts.append(True)
        else:
            ok_parts.append(None if d.verdict == Verdict.UNDECIDED else True)
        if any(p is None for p in ok_parts):
            undecided += 1
    return PropertyReport("thinnable", ideal.label, trials,
                          tuple(violations), undecided, tuple(notes))


def test_invariant(ideal: IdealSpec, gen: SetGenerator, trials: int,
                   seed: int) -> PropertyReport:
    """Both directions: thin(A, B) must carry B's verdict for every
    positive-density A."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sched = default_schedule(gen.horizon)
    gen.reset()
    violations: list[Violation] = []
    undecided = 0
    notes: list[str] = []
    for t in range(trials):
        rng = _trial_rng(seed, t)
        forced = gen.next_forced()
        if forced is not None:
            a, b = forced
        else:
            a = gen.positive_density(rng)
            b = None
        trial_undecided = False
        # forward: B NotIn -> A_B must not be decided In
        if b is None:
            try:
                b_not = gen.draw_with_verdict(ideal, Verdict.NOT_IN, rng, sched)
            except GeneratorExhausted:
                if not gen.finite_only:
                    raise
                b_not = None
                notes.append("draw pool exhausted; forward check skipped")
        else:
            b_not = b
        if b_not is not None:
            if _weak_check(ideal, a, b_not, sched, violations,
                           tag="forward thin(A,B)") is None:
                trial_undecided = True
        # backward: B In -> A_B must not be decided NotIn
        if b is None:
            try:
                b_in = gen.draw_with_verdict(ideal, Verdict.IN, rng, sched)
            except GeneratorExhausted:
                if not gen.finite_only:
                    raise
                b_in = None
                notes.append("draw pool exhausted; backward check skipped")
            if b_in is not None:
                ab = thin_extended(a, b_in)
                d = member(ideal, ab, default_schedule(ab.horizon))
                if d.verdict == Verdict.NOT_IN:
                    violations.append(_violation(
                        "backward thin(A,B) decided NotIn", a=_describe(a),
                        b=_describe(b_in), statistic=d.statistic))
                elif d.verdict == Verdict.UNDECIDED:
                    trial_undecided = True
        if trial_undecided:
            undecided += 1
    return PropertyReport("invariant", ideal.label, trials,
                          tuple(violations), undecided, tuple(notes))


# the testers are library API whose names start with test_; keep pytest
# from collecting them when imported into a test module
test_stretchable.__test__ = False  # type: ignore[attr-defined]
test_weakly_thinnable.__test__ = False  # type: ignore[attr-defined]
test_thinnable.__test__ = False  # type: ignore[attr-defined]
test_invariant.__test__ = False  # type: ignore[attr-defined]


def counterexample_ideal(horizon: int = 10 ** 6
                         ) -> tuple[IdealSpec, SubsetWindow, SubsetWindow]:
    """The even-counterexample ideal with its witness pair: A = N minus {1}
    (density one) and B = the evens (outside the ideal), for which the
    thinned set A_B is the odds from 3 on and lands inside the ideal."""
    ideal = even_fin()
    a = parse_set_spec("complement:{1}", horizon)
    b = parse_set_spec("evens", horizon)
    return ideal, a, b


def default_roster() -> tuple[IdealSpec, ...]:
    """The ideals exercised by the thinnability suite."""
    return (
        fin(),
        zero_density(),
        alpha_ideal(-1.0),
        alpha_ideal(0.0),
        alpha_ideal(0.5),
        alpha_ideal(1.0),
        alpha_ideal(2.0),
        summable_ideal(),
        erdos_ulam_ideal(),
        polya_ideal(),
        even_fin(),
    )
