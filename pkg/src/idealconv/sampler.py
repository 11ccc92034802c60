"""Dyadic subsequence selection.

A point of (0, 1] with non-terminating binary digits corresponds to the
subsequence keeping x_i exactly when digit i is 1. Under Lebesgue measure
those digits are independent fair bits, so the computational counterpart
of "almost every omega" is a seeded Bernoulli(1/2) bitstream. Bits come
from a named counter-based construction (the splitmix64 finalizer applied
to seed + i * golden-gamma), so (seed, index) -> bit is stateless,
reproducible, and parallel-safe.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .densities import (CheckpointSchedule, CheckpointValue, DensityEstimate,
                        asymptotic_density, default_schedule)
from .errors import SelectorExhausted
from .sequences import RealSequence
from .subsets import SetRule, SubsetWindow

#: P(bit = 1) = threshold / 2^64; one half exactly
HALF_THRESHOLD = 1 << 63


def derive_seed(master_seed: int, index: int) -> int:
    """Per-trial seed: one mixer application, stateless in (master, index)."""
    return K.mix64(master_seed, index + 1)


class SubsequenceSelector:
    """A 0/1 bitstream encoding which indices survive.

    Backed either by a seed (infinite, fair bits, almost surely infinitely
    many ones) or by an explicit finite bit list, which is only a prefix:
    queries past its end raise SelectorExhausted. `flipped` turns the
    stream into its complement (the digits of 1 - omega).
    """

    def __init__(self, *, seed: Optional[int] = None,
                 bits: Optional[Sequence[int]] = None,
                 flipped: bool = False):
        if (seed is None) == (bits is None):
            raise ValueError("exactly one of seed/bits must be given")
        self.seed = seed
        self._bits = (np.asarray(bits, dtype=np.uint8).clip(0, 1)
                      if bits is not None else None)
        self.flipped = bool(flipped)
        self.non_terminating = bits is None

    def __repr__(self) -> str:
        src = (f"seed={self.seed}" if self.seed is not None
               else f"{len(self._bits)} explicit bits")
        return f"SubsequenceSelector({src}{', flipped' if self.flipped else ''})"

    @property
    def prefix_length(self) -> Optional[int]:
        return None if self._bits is None else len(self._bits)

    def _require_within(self, hi: int) -> None:
        if self._bits is not None and hi - 1 > len(self._bits):
            raise SelectorExhausted(
                f"explicit selector holds {len(self._bits)} bits, "
                f"index {hi - 1} requested")

    def bits(self, lo: int, hi: int) -> np.ndarray:
        """Digits d_i for i in [lo, hi) as uint8."""
        if lo < 1:
            raise ValueError("bit indices start at 1")
        self._require_within(hi)
        if self._bits is not None:
            out = self._bits[lo - 1:hi - 1].copy()
        else:
            out = K.counter_mask(self.seed, lo, hi, HALF_THRESHOLD)
        return (1 - out).astype(np.uint8) if self.flipped else out

    def bit_at(self, i: int) -> int:
        return int(self.bits(i, i + 1)[0])

    def bits_at(self, idx: np.ndarray) -> np.ndarray:
        """Digits at arbitrary positions (used for index traces)."""
        idx = np.asarray(idx, dtype=np.int64)
        if len(idx) == 0:
            return np.zeros(0, dtype=np.uint8)
        if self._bits is not None:
            self._require_within(int(idx.max()) + 1)
            out = self._bits[idx - 1]
        else:
            out = K.counter_mask_idx(self.seed, idx, HALF_THRESHOLD)
        return (1 - out).astype(np.uint8) if self.flipped else out

    def ones_count_at(self, ns: np.ndarray) -> np.ndarray:
        """|{i <= n : d_i = 1}| for each n in sorted ns."""
        ns = np.asarray(ns, dtype=np.int64)
        if self._bits is None and not self.flipped:
            return K.counter_count_at(self.seed, ns, HALF_THRESHOLD)
        if self._bits is None:
            unflipped_ones = K.counter_count_at(self.seed, ns, HALF_THRESHOLD)
            return ns - unflipped_ones
        self._require_within(int(ns.max()) + 1 if len(ns) else 1)
        bits = self._bits if not self.flipped else 1 - self._bits
        return K.mask_count_at(bits, ns)

    def selected_between(self, lo: int, hi: int) -> np.ndarray:
        """Selected indices n_k in [lo, hi), in increasing order."""
        if lo < 1:
            raise ValueError("bit indices start at 1")
        self._require_within(hi)
        if self._bits is None and not self.flipped:
            return K.counter_select(self.seed, lo, hi, HALF_THRESHOLD)
        b = self.bits(lo, hi)
        return np.nonzero(b)[0].astype(np.int64) + lo

    def selected_window(self, horizon: int) -> SubsetWindow:
        """The selected-index set as a streaming window."""
        rule = SetRule(lambda idx: self.bits_at(idx).astype(bool),
                       f"selected({self!r})")
        return SubsetWindow.from_rule(rule, horizon)


def sample_selector(seed: int) -> SubsequenceSelector:
    """Fair-coin selector; distinct seeds give independent streams."""
    return SubsequenceSelector(seed=seed)


def explicit_selector(bits: Sequence[int]) -> SubsequenceSelector:
    """Finite-prefix selector from explicit bits (1 = keep index)."""
    return SubsequenceSelector(bits=bits)


def complement_selector(s: SubsequenceSelector) -> SubsequenceSelector:
    """The bit-flipped stream: selected sets of s and of its complement
    partition [1, H] for every H."""
    if s.seed is not None:
        return SubsequenceSelector(seed=s.seed, flipped=not s.flipped)
    return SubsequenceSelector(bits=s._bits, flipped=not s.flipped)


def restrict(x: RealSequence, s: SubsequenceSelector,
             materialization_horizon: int = 1 << 26) -> RealSequence:
    """The subsequence k -> x_{n_k} over the selected indices of s.

    Selected indices are located by scanning the bitstream in growing
    spans; asking for more ones than exist below the materialization bound
    raises SelectorExhausted.
    """
    state = {"indices": np.zeros(0, dtype=np.int64), "scanned": 0}

    def ensure(count: int) -> None:
        while len(state["indices"]) < count:
            lo = state["scanned"] + 1
            if s.prefix_length is not None:
                hi = s.prefix_length + 1
                if lo >= hi:
                    raise SelectorExhausted(
                        f"selector yields only {len(state['indices'])} ones, "
                        f"{count} needed")
            else:
                span = max(4 * (count - len(state["indices"])), 1 << 16)
                hi = lo + span
                if hi - 1 > materialization_horizon:
                    hi = materialization_horizon + 1
                if lo >= hi:
                    raise SelectorExhausted(
                        f"selector yields only {len(state['indices'])} ones "
                        f"below {materialization_horizon}")
            found = s.selected_between(lo, hi)
            state["indices"] = np.concatenate([state["indices"], found])
            state["scanned"] = hi - 1

    def values_fn(idx: np.ndarray) -> np.ndarray:
        if len(idx) == 0:
            return np.zeros(0, dtype=np.float64)
        ensure(int(idx.max()))
        return x.values(state["indices"][idx - 1])

    return RealSequence(values_fn, x.dim,
                        f"restrict({x.description})",
                        distinct_values=x.distinct_values)


def index_trace(s: SubsequenceSelector, window: SubsetWindow,
                sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Density of J = {positions n : the n-th member of the window is
    selected}, read on the enumeration axis.

    For a fair-coin selector this concentrates at one half whatever the
    window is; for the full window it is the selector's own frequency.
    """
    members = window.members
    if len(members) == 0:
        raise ValueError("index_trace needs a nonempty window")
    bits = s.bits_at(members)
    positions = np.nonzero(bits)[0].astype(np.int64) + 1
    j_window = SubsetWindow(horizon=len(members), members=positions,
                            description=f"selected positions of {window.description}")
    sched = sched or default_schedule(len(members))
    return asymptotic_density(j_window, sched)


def selector_frequency(s: SubsequenceSelector, horizon: int,
                       sched: Optional[CheckpointSchedule] = None) -> DensityEstimate:
    """Frequency trace of the selector's ones over [1, horizon]."""
    sched = sched or default_schedule(horizon)
    sched.require_within(horizon)
    ns = sched.array()
    counts = s.ones_count_at(ns)
    values = counts / ns
    trace = tuple(CheckpointValue(int(n), float(v), float(c), float(n))
                  for n, v, c in zip(ns, values, counts))
    tail = values[sched.tail_slice()]
    upper, lower = float(tail.max()), float(tail.min())
    return DensityEstimate("asymptotic", upper, lower, trace,
                           bool(upper - lower < 5e-3))
