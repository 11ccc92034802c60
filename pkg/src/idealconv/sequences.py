"""Deterministic real-vector sequences, their hit sets, and cluster-point
estimation against an ideal.

A candidate point is kept as a cluster point when the index set of an
epsilon-ball around it is decided *outside* the ideal; undecided
candidates are reported separately, never silently included. Hit sets
are rule-backed windows, so horizons of 1e8 stream in O(1) memory.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .densities import CheckpointSchedule, default_schedule
from .errors import GridEpsilonMismatch
from .ideals import Decision, IdealSpec, Verdict, member
from .subsets import SetRule, SubsetWindow, parse_set_rule

CHUNK = 1 << 16

Point = float | tuple[float, ...]


class RealSequence:
    """A total deterministic rule n -> x_n in R^d (d <= 3).

    `values` evaluates on int64 index arrays and returns shape (k,) for
    d = 1 or (k, d) otherwise; named forms are all vectorised.
    """

    def __init__(self, values_fn: Callable[[np.ndarray], np.ndarray],
                 dim: int = 1, description: str = "",
                 distinct_values: Optional[tuple[float, ...]] = None):
        if not 1 <= dim <= 3:
            raise ValueError("dim must be 1, 2, or 3")
        self._values_fn = values_fn
        self.dim = dim
        self.description = description
        self.distinct_values = distinct_values

    def values(self, idx: np.ndarray) -> np.ndarray:
        out = self._values_fn(np.asarray(idx, dtype=np.int64))
        return np.asarray(out, dtype=np.float64)

    def __repr__(self) -> str:
        return f"RealSequence({self.description or 'custom'}, d={self.dim})"

    @classmethod
    def from_scalar(cls, fn: Callable[[int], float], dim: int = 1,
                    description: str = "") -> "RealSequence":
        """Wrap a scalar rule (slow path: evaluated pointwise)."""
        def values_fn(idx: np.ndarray) -> np.ndarray:
            return np.asarray([fn(int(n)) for n in idx], dtype=np.float64)
        return cls(values_fn, dim, description)

    @classmethod
    def alternating(cls) -> "RealSequence":
        return cls(lambda idx: np.where(idx % 2 == 0, 1.0, -1.0), 1,
                   "alternating", distinct_values=(-1.0, 1.0))

    @classmethod
    def constant(cls, v: float) -> "RealSequence":
        return cls(lambda idx, _v=float(v): np.full(len(idx), _v), 1,
                   f"const:{v:g}", distinct_values=(float(v),))

    @classmethod
    def identity(cls) -> "RealSequence":
        return cls(lambda idx: idx.astype(np.float64), 1, "identity")

    @classmethod
    def periodic(cls, values: Sequence[float]) -> "RealSequence":
        vals = np.asarray(list(values), dtype=np.float64)
        if len(vals) == 0:
            raise ValueError("periodic needs at least one value")
        body = ",".join(f"{v:g}" for v in vals)
        return cls(lambda idx: vals[(idx - 1) % len(vals)], 1,
                   f"periodic:[{body}]",
                   distinct_values=tuple(sorted(set(vals.tolist()))))

    @classmethod
    def spike(cls, rule: SetRule, value: float,
              base: "RealSequence") -> "RealSequence":
        """Equal to `value` on the set, to the base sequence elsewhere."""
        if base.dim != 1:
            raise ValueError("spike base must be one-dimensional")
        distinct = None
        if base.distinct_values is not None:
            distinct = tuple(sorted(set(base.distinct_values) | {float(value)}))
        return cls(
            lambda idx: np.where(rule(idx), float(value), base.values(idx)),
            1, f"spike:{rule.description}:{value:g}:{base.description}",
            distinct_values=distinct)

    @classmethod
    def rational_enum(cls) -> "RealSequence":
        """Row-by-row enumeration of the rationals in [0, 1]: row q lists
        p/q for p = 0..q. Every rational recurs; the walk is dense."""
        def values_fn(idx: np.ndarray) -> np.ndarray:
            off = idx.astype(np.float64) - 1.0
            q = np.floor((-3.0 + np.sqrt(9.0 + 8.0 * off)) / 2.0).astype(np.int64)
            q = np.maximum(q, 0)
            # C(q) = q(q+3)/2 rows consumed by rows 1..q; fix rounding
            for _ in range(3):
                too_far = (q * (q + 3)) // 2 > (idx - 1)
                q = np.where(too_far, q - 1, q)
                fits = ((q + 1) * (q + 4)) // 2 <= (idx - 1)
                q = np.where(fits, q + 1, q)
            row = q + 1
            p = (idx - 1) - (q * (q + 3)) // 2
            return p.astype(np.float64) / row.astype(np.float64)
        return cls(values_fn, 1, "rational-enum")


def parse_sequence_spec(text: str) -> RealSequence:
    """Grammar: alternating | identity | const0 | const:<v> |
    periodic:[v1,...,vp] | spike:<set-spec>:<value>:<base> | rational-enum."""
    text = text.strip()
    if text == "alternating":
        return RealSequence.alternating()
    if text == "identity":
        return RealSequence.identity()
    if text == "const0":
        return RealSequence.constant(0.0)
    if text == "rational-enum":
        return RealSequence.rational_enum()
    if text.startswith("const:"):
        return RealSequence.constant(float(text.partition(":")[2]))
    if text.startswith("periodic:"):
        body = text.partition(":")[2].strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError("periodic wants a bracketed value list")
        vals = [float(v) for v in re.split(r"[,\s]+", body[1:-1]) if v]
        return RealSequence.periodic(vals)
    if text.startswith("spike:"):
        segs = text.split(":")
        # the set spec may itself contain colons: try split points in turn
        for i in range(2, len(segs) - 1):
            set_text = ":".join(segs[1:i])
            value_text = segs[i]
            base_text = ":".join(segs[i + 1:])
            try:
                rule = parse_set_rule(set_text)
                value = float(value_text)
                base = parse_sequence_spec(base_text)
            except ValueError:
                continue
            return RealSequence.spike(rule, value, base)
        raise ValueError(f"cannot parse spike spec {text!r}")
    raise ValueError(f"unknown sequence spec {text!r}")


def evaluate(x: RealSequence, n: int) -> Point:
    """x_n as a float (d = 1) or tuple."""
    if n < 1:
        raise ValueError("sequence indices start at 1")
    out = x.values(np.array([n], dtype=np.int64))
    if x.dim == 1:
        return float(out.reshape(-1)[0])
    return tuple(float(v) for v in np.atleast_2d(out)[0])


def _as_point_array(x: RealSequence, point: Point) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(point, dtype=np.float64))
    if len(arr) != x.dim:
        raise ValueError(f"point dimension {len(arr)} != sequence dim {x.dim}")
    return arr


def _distance_values(x: RealSequence, idx: np.ndarray,
                     center: np.ndarray) -> np.ndarray:
    vals = x.values(idx)
    if x.dim == 1:
        return np.abs(vals.reshape(-1) - center[0])
    return np.sqrt(((np.atleast_2d(vals) - center) ** 2).sum(axis=1))


def hit_set(x: RealSequence, center: Point, epsilon: float,
            horizon: int) -> SubsetWindow:
    """{n <= horizon : |x_n - center| < epsilon} as a streaming window."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = _as_point_array(x, center)
    rule = SetRule(lambda idx: _distance_values(x, idx, c) < epsilon,
                   f"hits({x.description}, {center}, eps={epsilon:g})")
    return SubsetWindow.from_rule(rule, horizon)


def escape_set(x: RealSequence, limit: Point, epsilon: float,
               horizon: int) -> SubsetWindow:
    """{n <= horizon : |x_n - limit| >= epsilon}, the hit set's complement."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = _as_point_array(x, limit)
    rule = SetRule(lambda idx: _distance_values(x, idx, c) >= epsilon,
                   f"escapes({x.description}, {limit}, eps={epsilon:g})")
    return SubsetWindow.from_rule(rule, horizon)


def grid_pitch(grid: Sequence[Point]) -> float:
    """Smallest pairwise distance between candidate points."""
    pts = np.asarray(grid, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.shape[0] < 2:
        return math.inf
    best = math.inf
    for i in range(pts.shape[0] - 1):
        d = np.sqrt(((pts[i + 1:] - pts[i]) ** 2).sum(axis=1))
        best = min(best, float(d.min()))
    return best


def default_epsilon(grid: Sequence[Point]) -> float:
    pitch = grid_pitch(grid)
    if not math.isfinite(pitch):
        return 0.1
    return 0.25 * pitch


def auto_grid(x: RealSequence, horizon: int, pitch: float = 0.1) -> tuple[float, ...]:
    """Uniform grid over the observed range plus the named distinct values."""
    if x.dim != 1:
        raise ValueError("auto grids exist only for one-dimensional sequences")
    lo = math.inf
    hi = -math.inf
    for a in range(1, horizon + 1, CHUNK):
        b = min(a + CHUNK - 1, horizon)
        vals = x.values(np.arange(a, b + 1, dtype=np.int64)).reshape(-1)
        lo = min(lo, float(vals.min()))
        hi = max(hi, float(vals.max()))
    if (hi - lo) / pitch > 10000:
        raise ValueError("observed range too wide for an auto grid; "
                         "pass an explicit grid")
    points = set(np.round(np.arange(lo, hi + pitch / 2, pitch), 10).tolist())
    for v in (x.distinct_values or ()):
        points.add(float(v))
    return tuple(sorted(points))


@dataclass(frozen=True)
class ClusterReport:
    """Per-candidate decisions and the resulting cluster-point set."""

    ideal: str
    candidates: tuple[Point, ...]
    epsilon: float
    per_candidate: tuple[tuple[Point, Decision], ...]
    gamma: tuple[Point, ...]
    undecided: tuple[Point, ...]

    def to_json_dict(self) -> dict:
        return {
            "ideal": self.ideal,
            "epsilon": self.epsilon,
            "candidates": list(self.candidates),
            "per_candidate": [{"point": p, "decision": d.to_json_dict()}
                              for p, d in self.per_candidate],
            "gamma": list(self.gamma),
            "undecided": list(self.undecided),
        }


def cluster_points(x: RealSequence, ideal: IdealSpec, grid: Sequence[Point],
                   epsilon: float, horizon: int,
                   sched: Optional[CheckpointSchedule] = None) -> ClusterReport:
    """Estimate the cluster-point set of x against the ideal on a grid.

    gamma collects the candidates whose epsilon-ball hit set is decided
    NotIn; undecided candidates are excluded from gamma and listed apart.
    """
    grid = tuple(grid)
    if len(grid) == 0:
        raise ValueError("candidate grid is empty")
    pitch = grid_pitch(grid)
    if epsilon >= 2 * pitch:
        raise GridEpsilonMismatch(
            f"epsilon {epsilon:g} >= twice the grid pitch {pitch:g}")
    sched = sched or default_schedule(horizon)
    per = []
    gamma = []
    undecided = []
    for point in grid:
        window = hit_set(x, point, epsilon, horizon)
        decision = member(ideal, window, sched)
        per.append((point, decision))
        if decision.verdict == Verdict.NOT_IN:
            gamma.append(point)
        elif decision.verdict == Verdict.UNDECIDED:
            undecided.append(point)
    return ClusterReport(ideal.label, grid, epsilon, tuple(per),
                         tuple(gamma), tuple(undecided))


def ideal_converges(x: RealSequence, ideal: IdealSpec, limit: Point,
                    epsilon: float, horizon: int,
                    sched: Optional[CheckpointSchedule] = None) -> Decision:
    """Decision on the escape set; In means x converges to the limit at
    this epsilon, relative to the ideal."""
    sched = sched or default_schedule(horizon)
    window = escape_set(x, limit, epsilon, horizon)
    return member(ideal, window, sched)
