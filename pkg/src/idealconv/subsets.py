"""Finite-horizon views of subsets of the positive integers.

A window holds S ∩ [1, H] for some subset S and horizon H, either as an
explicit sorted member array or as a vectorised membership rule that is
streamed in blocks (so sparse or huge-horizon sets never require O(H)
memory up front). The transforms of interest are thinning A_B = {a_b : b
in B}, stretching kA = {ka : a in A}, and the positional comparison
A <= B via canonical enumerations.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels as K
from .errors import BeyondHorizon, InsufficientWindow

CHUNK = 1 << 16

Predicate = Callable[[np.ndarray], np.ndarray]


class SetRule:
    """Horizon-independent membership rule, vectorised over index arrays."""

    def __init__(self, pred: Predicate, description: str):
        self.pred = pred
        self.description = description

    def __call__(self, idx: np.ndarray) -> np.ndarray:
        return self.pred(idx)

    def __repr__(self) -> str:
        return f"SetRule({self.description})"


class SubsetWindow:
    """Immutable finite-horizon view of a subset of N.

    Exactly one of `members` / `rule` backs the window. Rule-backed windows
    materialize lazily; counting and weighted sums stream in blocks without
    materializing. `complete_below_horizon` asserts the view is exactly
    S ∩ [1, horizon]; estimators refuse incomplete windows.
    """

    __slots__ = ("horizon", "complete_below_horizon", "description",
                 "_members", "_rule", "_count_hook", "cache")

    def __init__(self, *, horizon: int,
                 members: Optional[np.ndarray] = None,
                 rule: Optional[SetRule] = None,
                 count_hook: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 complete_below_horizon: bool = True,
                 description: str = ""):
        if horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if (members is None) == (rule is None):
            raise ValueError("exactly one of members/rule must be given")
        self.horizon = int(horizon)
        self.complete_below_horizon = bool(complete_below_horizon)
        self.description = description
        self._rule = rule
        self._count_hook = count_hook
        self.cache: dict = {}
        if members is not None:
            arr = np.asarray(members, dtype=np.int64)
            if arr.ndim != 1:
                raise ValueError("members must be one-dimensional")
            if len(arr) and (arr[0] < 1 or arr[-1] > self.horizon):
                raise ValueError("members must lie in [1, horizon]")
            if len(arr) > 1 and not (np.diff(arr) > 0).all():
                raise ValueError("members must be strictly increasing")
            arr.setflags(write=False)
            self._members = arr
        else:
            self._members = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_members(cls, members: Iterable[int], horizon: Optional[int] = None,
                     description: str = "") -> "SubsetWindow":
        arr = np.asarray(list(members) if not isinstance(members, np.ndarray)
                         else members, dtype=np.int64)
        if horizon is None:
            horizon = int(arr[-1]) if len(arr) else 1
        return cls(horizon=horizon, members=arr, description=description)

    @classmethod
    def from_rule(cls, rule: SetRule, horizon: int,
                  description: str = "") -> "SubsetWindow":
        return cls(horizon=horizon, rule=rule,
                   description=description or rule.description)

    def __repr__(self) -> str:
        backing = "materialized" if self._members is not None else "rule"
        return (f"SubsetWindow({self.description or 'set'}, H={self.horizon}, "
                f"{backing})")

    # -- members -----------------------------------------------------------

    @property
    def is_materialized(self) -> bool:
        return self._members is not None

    @property
    def members(self) -> np.ndarray:
        """Sorted member array (materializes a rule-backed window)."""
        if self._members is None:
            parts = []
            for lo in range(1, self.horizon + 1, CHUNK):
                hi = min(lo + CHUNK - 1, self.horizon)
                idx = np.arange(lo, hi + 1, dtype=np.int64)
                parts.append(idx[self._rule(idx)])
            arr = (np.concatenate(parts) if parts
                   else np.zeros(0, dtype=np.int64))
            arr.setflags(write=False)
            self._members = arr
        return self._members

    def size(self) -> int:
        """|S ∩ [1, horizon]|."""
        if self._members is not None:
            return len(self._members)
        return int(self.counting_at(np.array([self.horizon], dtype=np.int64))[0])

    def contains(self, idx: np.ndarray) -> np.ndarray:
        """Vectorised membership test for positions within the horizon."""
        idx = np.asarray(idx, dtype=np.int64)
        if self._rule is not None:
            return self._rule(idx)
        return np.isin(idx, self._members)

    # -- counting and weighted sums ----------------------------------------

    def counting_at(self, ns: np.ndarray) -> np.ndarray:
        """|S ∩ [1, n]| for each n in sorted ns (exact integers)."""
        ns = np.asarray(ns, dtype=np.int64)
        if len(ns) and ns[-1] > self.horizon:
            raise BeyondHorizon(
                f"count at {int(ns[-1])} requested, horizon {self.horizon}")
        if self._count_hook is not None:
            return self._count_hook(ns)
        if self._members is not None:
            return np.searchsorted(self._members, ns, side="right").astype(np.int64)
        return self._stream_counts(ns)

    def _stream_counts(self, ns: np.ndarray) -> np.ndarray:
        out = np.zeros(len(ns), dtype=np.int64)
        if len(ns) == 0:
            return out
        total = 0
        pos = 0
        while pos < len(ns) and ns[pos] <= 0:
            pos += 1
        top = int(ns[-1])
        for lo in range(1, top + 1, CHUNK):
            hi = min(lo + CHUNK - 1, top)
            idx = np.arange(lo, hi + 1, dtype=np.int64)
            mask = self._rule(idx)
            if pos < len(ns) and ns[pos] <= hi:
                cum = np.cumsum(mask)
                while pos < len(ns) and ns[pos] <= hi:
                    out[pos] = total + int(cum[int(ns[pos]) - lo])
                    pos += 1
            total += int(np.count_nonzero(mask))
        while pos < len(ns):
            out[pos] = total
            pos += 1
        return out

    def weighted_at(self, kind: int, param: float, ns: np.ndarray) -> np.ndarray:
        """sum of w(m) over members m <= n, for each n in sorted ns."""
        ns = np.asarray(ns, dtype=np.int64)
        if len(ns) and ns[-1] > self.horizon:
            raise BeyondHorizon(
                f"weighted sum at {int(ns[-1])} requested, horizon {self.horizon}")
        if self._members is not None:
            return K.masked_weight_at(kind, param, self._members, ns)
        return self._stream_weights(kind, param, ns)

    def _stream_weights(self, kind: int, param: float,
                        ns: np.ndarray) -> np.ndarray:
        out = np.zeros(len(ns), dtype=np.float64)
        if len(ns) == 0:
            return out
        total = 0.0
        carry = 0.0
        pos = 0
        while pos < len(ns) and ns[pos] <= 0:
            pos += 1
        top = int(ns[-1])
        for lo in range(1, top + 1, CHUNK):
            hi = min(lo + CHUNK - 1, top)
            idx = np.arange(lo, hi + 1, dtype=np.int64)
            sel = idx[self._rule(idx)]
            w = K.weight_values(kind, param, sel)
            while pos < len(ns) and ns[pos] <= hi:
                c = int(np.searchsorted(sel, ns[pos], side="right"))
                out[pos] = total + float(w[:c].sum())
                pos += 1
            # Kahan merge of the block total
            y = float(w.sum()) - carry
            t = total + y
            carry = (t - total) - y
            total = t
        while pos < len(ns):
            out[pos] = total
            pos += 1
        return out


# -- canonical operations ---------------------------------------------------

def canonical_enumerate(w: SubsetWindow) -> np.ndarray:
    """Members in increasing order; position n (1-based) holds a_n."""
    return w.members


def counting(a: SubsetWindow, n: int) -> int:
    """|A ∩ [1, n]|; raises BeyondHorizon past the window."""
    if n > a.horizon:
        raise BeyondHorizon(f"count at {n} requested, horizon {a.horizon}")
    if n < 1:
        return 0
    return int(a.counting_at(np.array([n], dtype=np.int64))[0])


def thin(a: SubsetWindow, b: SubsetWindow) -> SubsetWindow:
    """A_B = {a_b : b in B}, truncated to the indices a's window covers.

    Indices in B beyond len(a.members) are dropped; the result horizon is
    the member of A at the largest usable index, so the output is again
    exactly (A_B) ∩ [1, horizon].
    """
    a_members = a.members
    b_members = b.members
    if len(b_members) == 0:
        return SubsetWindow(horizon=a.horizon,
                            members=np.zeros(0, dtype=np.int64),
                            description=f"thin({a.description},{b.description})")
    usable = b_members[b_members <= len(a_members)]
    if len(usable) == 0:
        raise InsufficientWindow(
            f"no index of {b.description or 'B'} is covered by "
            f"{a.description or 'A'} ({len(a_members)} members)")
    picked = a_members[usable - 1]
    return SubsetWindow(horizon=int(picked[-1]), members=picked,
                        description=f"thin({a.description},{b.description})")


def stretch(a: SubsetWindow, k: int) -> SubsetWindow:
    """kA = {ka : a in A} with horizon k*H."""
    if k < 1:
        raise ValueError("stretch factor must be a positive integer")
    if k == 1:
        return a
    desc = f"{k}*({a.description})"
    if a.is_materialized:
        return SubsetWindow(horizon=k * a.horizon, members=a.members * k,
                            description=desc)
    rule = SetRule(
        lambda idx, _k=k, _r=a._rule: (idx % _k == 0) & _r(idx // _k),
        desc)
    # counts delegate exactly: |kA ∩ [1,n]| = |A ∩ [1, n//k]|
    hook = lambda ns, _k=k, _a=a: _a.counting_at(
        np.minimum(np.asarray(ns, dtype=np.int64) // _k, _a.horizon))
    return SubsetWindow(horizon=k * a.horizon, rule=rule, count_hook=hook,
                        description=desc)


class DominanceCheck:
    """Outcome of a positional comparison, truthy iff it held everywhere."""

    __slots__ = ("holds", "positions_checked", "first_failure")

    def __init__(self, holds: bool, positions_checked: int,
                 first_failure: Optional[int] = None):
        self.holds = holds
        self.positions_checked = positions_checked
        self.first_failure = first_failure

    def __bool__(self) -> bool:
        return self.holds

    def __repr__(self) -> str:
        state = "holds" if self.holds else f"fails at n={self.first_failure}"
        return f"DominanceCheck({state}, {self.positions_checked} positions)"


def dominates(x: SubsetWindow, y: SubsetWindow) -> DominanceCheck:
    """x_n <= y_n over the first min(len, len) enumeration positions."""
    xm = x.members
    ym = y.members
    if len(xm) == 0 or len(ym) == 0:
        raise ValueError("dominates requires nonempty windows")
    k = min(len(xm), len(ym))
    bad = np.nonzero(xm[:k] > ym[:k])[0]
    if len(bad):
        return DominanceCheck(False, k, int(bad[0]) + 1)
    return DominanceCheck(True, k)


# -- plumbing: union / complement (used by set specs and experiments) -------

def window_union(a: SubsetWindow, b: SubsetWindow) -> SubsetWindow:
    """A ∪ B on the common horizon."""
    horizon = min(a.horizon, b.horizon)
    desc = f"({a.description})|({b.description})"
    if a.is_materialized and b.is_materialized:
        merged = np.union1d(a.members[a.members <= horizon],
                            b.members[b.members <= horizon])
        return SubsetWindow(horizon=horizon, members=merged, description=desc)
    ra, rb = _as_rule(a), _as_rule(b)
    return SubsetWindow(horizon=horizon,
                        rule=SetRule(lambda idx: ra(idx) | rb(idx), desc),
                        description=desc)


def window_complement(a: SubsetWindow) -> SubsetWindow:
    """[1, H] \\ A on the same horizon."""
    r = _as_rule(a)
    desc = f"complement({a.description})"
    return SubsetWindow(horizon=a.horizon,
                        rule=SetRule(lambda idx: ~r(idx), desc),
                        description=desc)


def _as_rule(a: SubsetWindow) -> Predicate:
    if a._rule is not None:
        return a._rule
    members = a.members
    return lambda idx: np.isin(idx, members)


# -- named families ----------------------------------------------------------

def _squares_pred(idx: np.ndarray) -> np.ndarray:
    r = np.sqrt(idx.astype(np.float64)).round().astype(np.int64)
    return r * r == idx


def _cubes_pred(idx: np.ndarray) -> np.ndarray:
    r = np.cbrt(idx.astype(np.float64)).round().astype(np.int64)
    return r * r * r == idx


def _blocks_pred_factory(base: int) -> Predicate:
    # membership in ∪_j [base^(2j), 2*base^(2j)) via precomputed block starts
    def pred(idx: np.ndarray) -> np.ndarray:
        top = int(idx.max()) if len(idx) else 1
        starts = []
        s = 1
        while s <= top:
            starts.append(s)
            s *= base * base
        st = np.asarray(starts, dtype=np.int64)
        slot = np.searchsorted(st, idx, side="right") - 1
        lo = st[np.maximum(slot, 0)]
        return (slot >= 0) & (idx < 2 * lo)
    return pred


def _powers_pred_factory(base: int) -> Predicate:
    def pred(idx: np.ndarray) -> np.ndarray:
        top = int(idx.max()) if len(idx) else 1
        vals = []
        v = base
        while v <= top:
            vals.append(v)
            v *= base
        return np.isin(idx, np.asarray(vals, dtype=np.int64))
    return pred


def bernoulli_rule(p: float, seed: int) -> SetRule:
    """Random set with membership probability p, decided per index by the
    counter-based generator (reproducible, O(1) state)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    threshold = min(int(p * 2.0 ** 64), (1 << 64) - 1)
    return SetRule(
        lambda idx: _counter_member(seed, idx, threshold),
        f"bernoulli(p={p:g},seed={seed})")


def _counter_member(seed: int, idx: np.ndarray, threshold: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        return np.zeros(0, dtype=bool)
    return K.counter_mask_idx(seed, idx, threshold).astype(bool)


_RULES: dict[str, Callable[[], SetRule]] = {
    "naturals": lambda: SetRule(lambda idx: np.ones(len(idx), bool), "naturals"),
    "all": lambda: SetRule(lambda idx: np.ones(len(idx), bool), "naturals"),
    "evens": lambda: SetRule(lambda idx: idx % 2 == 0, "evens"),
    "odds": lambda: SetRule(lambda idx: idx % 2 == 1, "odds"),
    "squares": lambda: SetRule(_squares_pred, "squares"),
    "cubes": lambda: SetRule(_cubes_pred, "cubes"),
}


def parse_set_rule(text: str) -> SetRule:
    """Parse a set family name into a horizon-independent rule.

    Grammar: explicit list `{2,4,6}`; named family `evens`, `odds`,
    `squares`, `cubes`, `naturals`, `multiples:k`, `blocks:base`,
    `powers:base`, `bernoulli:p:seed`; `complement:<spec>`.
    """
    text = text.strip()
    if text.startswith("{"):
        if not text.endswith("}"):
            raise ValueError(f"unterminated set literal: {text!r}")
        body = text[1:-1].strip()
        values = ([int(v) for v in re.split(r"[,\s]+", body) if v]
                  if body else [])
        arr = np.asarray(sorted(set(values)), dtype=np.int64)
        if len(arr) and arr[0] < 1:
            raise ValueError("set literals must contain positive integers")
        return SetRule(lambda idx: np.isin(idx, arr), text)
    if text.startswith("complement:"):
        inner = parse_set_rule(text[len("complement:"):])
        return SetRule(lambda idx: ~inner(idx), f"complement:{inner.description}")
    if ":" in text:
        head, _, rest = text.partition(":")
        if head == "multiples":
            k = int(rest)
            if k < 1:
                raise ValueError("multiples:k needs k >= 1")
            return SetRule(lambda idx: idx % k == 0, text)
        if head == "blocks":
            base = int(rest)
            if base < 2:
                raise ValueError("blocks:base needs base >= 2")
            return SetRule(_blocks_pred_factory(base), text)
        if head == "powers":
            base = int(rest)
            if base < 2:
                raise ValueError("powers:base needs base >= 2")
            return SetRule(_powers_pred_factory(base), text)
        if head == "bernoulli":
            p_text, _, seed_text = rest.partition(":")
            return bernoulli_rule(float(p_text), int(seed_text or 0))
        raise ValueError(f"unknown set family {head!r}")
    if text in _RULES:
        return _RULES[text]()
    raise ValueError(f"unknown set spec {text!r}")


def parse_set_spec(text: str, horizon: int) -> SubsetWindow:
    """Parse a set spec into a window at the given horizon."""
    text = text.strip()
    if text.startswith("{"):
        rule = parse_set_rule(text)  # validates
        body = text[1:-1].strip()
        values = sorted({int(v) for v in re.split(r"[,\s]+", body) if v})
        members = np.asarray([v for v in values if v <= horizon],
                             dtype=np.int64)
        return SubsetWindow(horizon=horizon, members=members, description=text)
    rule = parse_set_rule(text)
    return SubsetWindow.from_rule(rule, horizon)


def naturals(horizon: int) -> SubsetWindow:
    return parse_set_spec("naturals", horizon)


def evens(horizon: int) -> SubsetWindow:
    return parse_set_spec("evens", horizon)


def odds(horizon: int) -> SubsetWindow:
    return parse_set_spec("odds", horizon)


def squares(horizon: int) -> SubsetWindow:
    return parse_set_spec("squares", horizon)


def multiples(k: int, horizon: int) -> SubsetWindow:
    return parse_set_spec(f"multiples:{k}", horizon)


def blocks(base: int, horizon: int) -> SubsetWindow:
    return parse_set_spec(f"blocks:{base}", horizon)


def progression(first: int, step: int, horizon: int) -> SubsetWindow:
    """Arithmetic progression {first, first+step, ...} within the horizon."""
    if first < 1 or step < 1:
        raise ValueError("progression needs first >= 1 and step >= 1")
    rule = SetRule(lambda idx: (idx >= first) & ((idx - first) % step == 0),
                   f"progression({first},{step})")
    return SubsetWindow.from_rule(rule, horizon)


def bernoulli_window(p: float, seed: int, horizon: int) -> SubsetWindow:
    return SubsetWindow.from_rule(bernoulli_rule(p, seed), horizon)
