"""Finite-horizon density and weight-sum estimators.

Limits of the form limsup_n g(n) are discretized on a checkpoint schedule:
the reported upper/lower values are the max/min of the per-checkpoint
statistic over the final (tail) checkpoints, and a `converged` diagnostic
flags whether the tail still oscillates. Nothing is extrapolated: every
reported number is a ratio or sum actually attained at some checkpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels as K
from .errors import GridTooCoarse, ScheduleBeyondHorizon, ZeroTotalWeight
from .subsets import SubsetWindow

#: max oscillation over the tail below which an estimate counts as settled
CONVERGENCE_TOL = 5e-3

#: default Polya inner-limit grid
DEFAULT_S_GRID = (0.5, 0.75, 0.9, 0.95, 0.99)

RATIO_KINDS = frozenset({"asymptotic", "alpha", "log", "erdos_ulam", "addlimit"})

# exp(alpha * log i) must stay within float range across the window
_LOG_RANGE_LIMIT = 600.0


@dataclass(frozen=True)
class CheckpointSchedule:
    """Strictly increasing horizons at which a running statistic is read.

    The final ceil(tail_fraction * m) checkpoints form the tail used for
    the limsup/liminf proxy.
    """

    checkpoints: tuple[int, ...]
    tail_fraction: float = 0.5

    def __post_init__(self):
        cps = self.checkpoints
        if len(cps) < 8:
            raise ValueError("a schedule needs at least 8 checkpoints")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        if cps[0] < 1:
            raise ValueError("checkpoints must be positive")
        if not 0.0 < self.tail_fraction < 1.0:
            raise ValueError("tail_fraction must lie in (0, 1)")

    @classmethod
    def geometric(cls, horizon: int, ratio: float = 0.8, count: int = 32,
                  tail_fraction: float = 0.5) -> "CheckpointSchedule":
        """Default schedule: n_j = ceil(H * ratio^(m-j)), deduplicated.

        Geometric spacing puts checkpoints at every scale, which is what
        limsup detection on block-structured sets needs.
        """
        ns = sorted({int(math.ceil(horizon * ratio ** (count - j)))
                     for j in range(1, count + 1)})
        ns = [n for n in ns if n >= 1]
        return cls(checkpoints=tuple(ns), tail_fraction=tail_fraction)

    @property
    def horizon(self) -> int:
        return self.checkpoints[-1]

    @property
    def tail(self) -> tuple[int, ...]:
        k = max(1, math.ceil(len(self.checkpoints) * self.tail_fraction))
        return self.checkpoints[-k:]

    @property
    def tail_start(self) -> int:
        return self.tail[0]

    def tail_slice(self) -> slice:
        k = max(1, math.ceil(len(self.checkpoints) * self.tail_fraction))
        return slice(len(self.checkpoints) - k, len(self.checkpoints))

    def array(self) -> np.ndarray:
        return np.asarray(self.checkpoints, dtype=np.int64)

    def require_within(self, horizon: int) -> None:
        if self.horizon > horizon:
            raise ScheduleBeyondHorizon(
                f"schedule reaches {self.horizon}, window horizon {horizon}")

    def key(self) -> tuple:
        return (self.checkpoints, self.tail_fraction)


def default_schedule(horizon: int) -> CheckpointSchedule:
    return CheckpointSchedule.geometric(horizon)


class WeightFunction:
    """Positive weight rule n -> f(n) driving summable/Erdos-Ulam statistics.

    `alternating01` (1 on evens, 0 on odds) is admitted as a flagged
    exception to positivity and monotonicity; it exists to build the
    counterexample ideal.
    """

    __slots__ = ("name", "kind", "param", "definitively_nonincreasing",
                 "nonincreasing_from")

    def __init__(self, name: str, kind: int, param: float = 0.0,
                 definitively_nonincreasing: bool = True,
                 nonincreasing_from: int = 1):
        self.name = name
        self.kind = kind
        self.param = param
        self.definitively_nonincreasing = definitively_nonincreasing
        self.nonincreasing_from = nonincreasing_from

    def values(self, idx: np.ndarray) -> np.ndarray:
        return K.weight_values(self.kind, self.param, np.asarray(idx, np.int64))

    def scalar(self, n: int) -> float:
        return float(self.values(np.array([n], dtype=np.int64))[0])

    def anchor(self) -> float:
        """Magnitude scale for divergence floors: f(1), or the largest of
        the first values when f(1) = 0 (the flagged zero-weight exception)."""
        v = self.scalar(1)
        if v > 0.0:
            return v
        head = self.values(np.arange(1, 65, dtype=np.int64))
        top = float(head.max())
        return top if top > 0.0 else 1.0

    def __repr__(self) -> str:
        return f"WeightFunction({self.name})"

    @classmethod
    def one_over_n(cls) -> "WeightFunction":
        return cls("one_over_n", K.W_ONE_OVER_N)

    @classmethod
    def const(cls, c: float = 1.0) -> "WeightFunction":
        if c <= 0:
            raise ValueError("const weight must be positive")
        return cls(f"const:{c:g}" if c != 1.0 else "const", K.W_CONST, c)

    @classmethod
    def one_over_n_log(cls) -> "WeightFunction":
        return cls("one_over_n_log", K.W_ONE_OVER_N_LOG)

    @classmethod
    def alternating01(cls) -> "WeightFunction":
        return cls("alternating01", K.W_ALTERNATING01,
                   definitively_nonincreasing=False)


def parse_weight(text: str) -> WeightFunction:
    text = text.strip()
    if text == "one_over_n":
        return WeightFunction.one_over_n()
    if text == "const":
        return WeightFunction.const()
    if text.startswith("const:"):
        return WeightFunction.const(float(text.partition(":")[2]))
    if text == "one_over_n_log":
        return WeightFunction.one_over_n_log()
    if text == "alternating01":
        return WeightFunction.alternating01()
    raise ValueError(f"unknown weight function {text!r}")


class CheckpointValue(NamedTuple):
    n: int
    value: float
    numerator: float
    denominator: float


@dataclass(frozen=True)
class DensityEstimate:
    """A discretized upper/lower limit with its checkpoint trace."""

    kind: str
    upper: float
    lower: float
    trace: tuple[CheckpointValue, ...]
    converged: bool
    param: Optional[float] = None
    detail: Optional[Mapping] = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower exceeds upper")
        if self.kind in RATIO_KINDS:
            if not (0.0 <= self.lower and self.upper <= 1.0):
                raise ValueError(f"{self.kind} values must lie in [0, 1]")

    def to_json_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "upper": self.upper,
            "lower": self.lower,
            "converged": self.converged,
            "trace": [{"n": cv.n, "value": cv.value} for cv in self.trace],
        }
        if self.param is not None:
            out["param"] = self.param
        if self.detail is not None:
            out["detail"] = self.detail
        return out


def _require_usable(a: SubsetWindow, sched: CheckpointSchedule) -> None:
    if not a.complete_below_horizon:
        raise ValueError("estimators need a window complete below its horizon")
    sched.require_within(a.horizon)


def _tail_stats(values: Sequence[float], sched: CheckpointSchedule):
    tail = list(values[sched.tail_slice()])
    upper = max(tail)
    lower = min(tail)
    converged = (upper - lower) < CONVERGENCE_TOL
    return upper, lower, converged


def asymptotic_density(a: SubsetWindow,
                       sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Counting ratio |A ∩ [1,n]| / n read on the schedule."""
    sched = sched or default_schedule(a.horizon)
    _require_usable(a, sched)
    ns = sched.array()
    counts = a.counting_at(ns)
    values = counts / ns
    trace = tuple(CheckpointValue(int(n), float(v), float(c), float(n))
                  for n, v, c in zip(ns, values, counts))
    upper, lower, converged = _tail_stats(values.tolist(), sched)
    return DensityEstimate("asymptotic", upper, lower, trace, converged)


def alpha_density_upper(a: SubsetWindow, alpha: float,
                        sched: Optional[CheckpointSchedule] = None,
                        kind: str = "alpha") -> DensityEstimate:
    """Weighted counting ratio with weights i^alpha.

    alpha = 0 reproduces the asymptotic ratio checkpoint-by-checkpoint,
    bit for bit; alpha = -1 is the logarithmic-density ratio.
    """
    if alpha < -1.0:
        raise ValueError("alpha must be >= -1")
    sched = sched or default_schedule(a.horizon)
    _require_usable(a, sched)
    if abs(alpha) * math.log(max(sched.horizon, 2)) > _LOG_RANGE_LIMIT:
        raise ValueError("alpha too large for this horizon (float overflow)")
    ns = sched.array()
    num = a.weighted_at(K.W_POW, alpha, ns)
    den = K.prefix_weight_at(K.W_POW, alpha, ns)
    # numerator and denominator take different summation paths, so a full
    # window can land an ulp above 1; ratios are clamped to the unit interval
    values = np.clip(num / den, 0.0, 1.0)
    trace = tuple(CheckpointValue(int(n), float(v), float(x), float(d))
                  for n, v, x, d in zip(ns, values, num, den))
    upper, lower, converged = _tail_stats(values.tolist(), sched)
    return DensityEstimate(kind, upper, lower, trace, converged, param=alpha)


def log_density_upper(a: SubsetWindow,
                      sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Logarithmic-density ratio (the alpha = -1 weighting)."""
    return alpha_density_upper(a, -1.0, sched, kind="log")


def polya_upper(a: SubsetWindow,
                s_grid: Optional[Sequence[float]] = None,
                sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Sliding-window ratio |A ∩ [ns, n]| / ((1-s) n), reported at the
    largest s of the grid with the whole per-s trend retained.

    The s -> 1 outer limit is never extrapolated; callers inspect the
    per-s uppers in `detail` to judge the trend.
    """
    s_values = tuple(s_grid) if s_grid is not None else DEFAULT_S_GRID
    if len(s_values) < 3:
        raise GridTooCoarse("polya needs at least 3 grid points")
    if any(b <= a2 for a2, b in zip(s_values, s_values[1:])):
        raise ValueError("s_grid must be strictly increasing")
    if not (0.0 < s_values[0] and s_values[-1] < 1.0):
        raise ValueError("s_grid must lie inside (0, 1)")
    sched = sched or default_schedule(a.horizon)
    _require_usable(a, sched)
    ns = sched.array()

    # one counting pass over every window boundary
    positions = {int(n) for n in ns}
    for s in s_values:
        positions.update(int(math.ceil(s * int(n))) - 1 for n in ns)
    pos_arr = np.asarray(sorted(positions), dtype=np.int64)
    counts = a.counting_at(pos_arr)
    count_of = dict(zip(pos_arr.tolist(), counts.tolist()))

    per_s = []
    for s in s_values:
        vals = []
        insides = []
        for n in ns.tolist():
            lo = int(math.ceil(s * n))
            inside = count_of[n] - count_of[lo - 1]
            insides.append(inside)
            vals.append(inside / ((1.0 - s) * n))
        upper_s, lower_s, _ = _tail_stats(vals, sched)
        per_s.append({"s": float(s), "upper": upper_s, "lower": lower_s,
                      "values": vals, "insides": insides})

    top = per_s[-1]
    s_top = s_values[-1]
    trace = tuple(CheckpointValue(int(n), float(v), float(c),
                                  float((1.0 - s_top) * int(n)))
                  for n, v, c in zip(ns.tolist(), top["values"], top["insides"]))
    detail = {"s_grid": [float(s) for s in s_values],
              "per_s": [{"s": e["s"], "upper": e["upper"], "lower": e["lower"],
                         "trace": [{"n": int(n), "value": v}
                                   for n, v in zip(ns.tolist(), e["values"])]}
                        for e in per_s]}
    return DensityEstimate("polya", top["upper"], top["lower"], trace,
                           _tail_stats(top["values"], sched)[2],
                           param=float(s_values[-1]), detail=detail)


def weight_sum(f: WeightFunction, a: SubsetWindow,
               horizon: Optional[int] = None,
               sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Partial sums of f over the window's members.

    The trace is monotone nondecreasing; `converged` is true when the
    increments between consecutive tail checkpoints have decayed below
    tolerance, the finite-horizon signature of a convergent series.
    """
    horizon = horizon if horizon is not None else a.horizon
    if horizon > a.horizon:
        raise ScheduleBeyondHorizon(
            f"requested horizon {horizon} exceeds window horizon {a.horizon}")
    sched = sched or default_schedule(horizon)
    _require_usable(a, sched)
    ns = sched.array()
    sums = a.weighted_at(f.kind, f.param, ns)
    trace = tuple(CheckpointValue(int(n), float(s), float(s), 1.0)
                  for n, s in zip(ns, sums))
    tail = sums[sched.tail_slice()]
    increments = np.diff(tail)
    converged = bool((increments < CONVERGENCE_TOL).all()) if len(increments) else True
    return DensityEstimate("weight_sum", float(sums[-1]), float(tail[0]),
                           trace, converged)


def erdos_ulam_ratio(f: WeightFunction, a: SubsetWindow,
                     sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Relative weight ratio sum_{i in A, i<=n} f(i) / sum_{i<=n} f(i)."""
    sched = sched or default_schedule(a.horizon)
    _require_usable(a, sched)
    ns = sched.array()
    num = a.weighted_at(f.kind, f.param, ns)
    den = K.prefix_weight_at(f.kind, f.param, ns)
    if den[-1] <= 0.0:
        raise ZeroTotalWeight(f"{f.name} sums to zero below {sched.horizon}")
    with np.errstate(invalid="ignore"):
        values = np.clip(np.where(den > 0, num / den, 0.0), 0.0, 1.0)
    trace = tuple(CheckpointValue(int(n), float(v), float(x), float(d))
                  for n, v, x, d in zip(ns, values, num, den))
    upper, lower, converged = _tail_stats(values.tolist(), sched)
    return DensityEstimate("erdos_ulam", upper, lower, trace, converged)


def addlimit_check(f: WeightFunction, k: int,
                   sched: CheckpointSchedule) -> DensityEstimate:
    """Prefix-mass ratio sum_{i<=n} f(i) / sum_{i<=kn} f(i) on the schedule.

    The caller compares `lower` against a positivity threshold; a liminf
    bounded away from zero is the admission test for Erdos-Ulam weights.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    ns = sched.array()
    merged = np.unique(np.concatenate([ns, ns * k]))
    sums = K.prefix_weight_at(f.kind, f.param, merged)
    at = dict(zip(merged.tolist(), sums.tolist()))
    values = []
    for n in ns.tolist():
        den = at[k * n]
        values.append(min(max(at[n] / den, 0.0), 1.0) if den > 0 else 0.0)
    trace = tuple(CheckpointValue(int(n), float(v), float(at[int(n)]),
                                  float(at[k * int(n)]))
                  for n, v in zip(ns.tolist(), values))
    upper, lower, converged = _tail_stats(values, sched)
    return DensityEstimate("addlimit", upper, lower, trace, converged,
                           param=float(k))


def alpha_vs_polya_diagnostic(a: SubsetWindow,
                              alphas: Sequence[float] = (1.0, 2.0, 4.0),
                              s_grid: Optional[Sequence[float]] = None,
                              sched: Optional[CheckpointSchedule] = None) -> dict:
    """Side-by-side finite-horizon alpha-sweep and s-sweep uppers.

    Whether the two sweeps approach each other at a finite horizon is an
    open diagnostic question, so this reports both and asserts nothing.
    """
    sched = sched or default_schedule(a.horizon)
    alpha_uppers = [{"alpha": float(al),
                     "upper": alpha_density_upper(a, al, sched).upper}
                    for al in alphas]
    pol = polya_upper(a, s_grid, sched)
    return {"alpha_sweep": alpha_uppers,
            "polya_per_s": [{"s": e["s"], "upper": e["upper"]}
                            for e in pol.detail["per_s"]]}
