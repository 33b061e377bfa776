"""Subsets of the half line at infinity: gaps, porosity, strong-porosity tiers.

A ``RaySet`` describes a subset E of [0, inf) through an interval covering:
E intersected with [0, h] as a finite list of disjoint closed intervals
(degenerate intervals are points).  Gap components, the longest-gap length
l(h), and the porosity quantity (limsup of l(h)/h) derive from the covering.
Dense families (lattices, the full half line) override the derived queries
analytically instead of enumerating astronomically many pieces.

The strong-porosity tiers follow the same ladder everywhere:

* strongly porous: the tail of the gap ratio sequence (b-a)/b converges to 1;
* tau-strongly porous: some gap sequence with left endpoints within fixed
  multiplicative constants of tau (nearest-in-log greedy matching with a
  monotonicity repair pass);
* completely / omega-strongly porous: the tau condition over a battery of
  eventually increasing sequences drawn from E, directly or after retaining
  only the terms near high-ratio gap left endpoints.

Positive battery verdicts are explicitly battery-relative; negative verdicts
carry the failing tau as a witness.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .errors import InputError, ResourceError
from .limits import (
    DEFAULT_PROFILE,
    LimitVerdict,
    Ternary,
    ToleranceProfile,
    detect_limit,
)
from .logvalue import LogValue
from .spaces import ScalingSequence, three_valued

GAP_CAP = 200_000
RATIO_CAP = 1e3
BATTERY_PREFIX = 4096
_MESH_PER_SEGMENT = 8


@dataclass(frozen=True)
class Gap:
    """A maximal open interval (lo, hi) of the complement of E in [0, h]."""

    lo: LogValue
    hi: LogValue
    complete: bool  # False when the component was cut at the horizon

    @property
    def length(self) -> LogValue:
        return self.hi - self.lo

    @property
    def ratio(self) -> float:
        """(hi - lo) / hi, the quantity whose tail limit decides porosity."""
        if self.hi.is_zero:
            return 0.0
        return (self.length / self.hi).to_float()


Interval = tuple[LogValue, LogValue]


class RaySet:
    """Base class for subsets of the half line given by a gap oracle."""

    family: str = "abstract"

    def contains(self, x: LogValue) -> bool:
        raise NotImplementedError

    def covering(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        """E intersected with [0, h] as disjoint sorted closed intervals."""
        raise NotImplementedError

    def is_bounded_hint(self) -> bool:
        return False

    # -- derived gap queries (overridable for dense families) ---------------

    def gap_components(self, h: LogValue, cap: int = GAP_CAP) -> list[Gap]:
        if not h.is_positive:
            raise InputError("horizon must be positive")
        return _gaps_from_covering(self.covering(h, cap), h)

    def longest_gap(self, h: LogValue) -> LogValue:
        gaps = self.gap_components(h)
        if not gaps:
            return LogValue.zero()
        return max(g.length for g in gaps)

    def tail_gaps(self, h: LogValue, count: int) -> list[Gap]:
        """The last ``count`` gap components below the horizon."""
        return self.gap_components(h)[-count:]

    def gap_sequence(self, count: int) -> list[Gap]:
        """The first ``count`` completed gaps in increasing order."""
        h = self.horizon_for_gaps(count)
        gaps = [g for g in self.gap_components(h) if g.complete]
        return gaps[:count]

    def horizon_for_gaps(self, count: int) -> LogValue:
        raise NotImplementedError

    # -- element access for battery construction and distance queries -------

    def element(self, k: int) -> LogValue:
        """k-th battery anchor element (1-based, increasing, in E)."""
        raise NotImplementedError

    def nearest(self, x: LogValue) -> LogValue:
        """The element-or-boundary point of E nearest to x (linear distance)."""
        raise NotImplementedError

    def distance_to(self, x: LogValue, h: LogValue) -> LogValue:
        """dist(x, E intersected with [0, h])."""
        raise NotImplementedError

    def neighbor_gaps(self, t: LogValue) -> list["Gap"]:
        """Completed gaps whose left endpoints bracket t (at most a few)."""
        raise NotImplementedError

    def gap_left(self, k: int) -> Optional[LogValue]:
        """Left endpoint of the k-th completed gap; None when E has no gaps."""
        raise NotImplementedError


def _gaps_from_covering(cov: list[Interval], h: LogValue) -> list[Gap]:
    gaps: list[Gap] = []
    if not cov:
        return [Gap(LogValue.zero(), h, complete=False)]
    first_lo = cov[0][0]
    if first_lo.is_positive:
        gaps.append(Gap(LogValue.zero(), first_lo, complete=True))
    for (lo_a, hi_a), (lo_b, hi_b) in zip(cov, cov[1:]):
        if hi_a < lo_b:
            gaps.append(Gap(hi_a, lo_b, complete=True))
    last_hi = cov[-1][1]
    if last_hi < h:
        gaps.append(Gap(last_hi, h, complete=False))
    return gaps


# ---------------------------------------------------------------------------
# Concrete ray sets


class PointRay(RaySet):
    """A sparse increasing point family {e_n} (optionally with 0 adjoined)."""

    def __init__(
        self,
        family: str,
        rule: Callable[[int], LogValue],
        first_index: int = 1,
        include_zero: bool = False,
        log_tol: float = 1e-9,
    ) -> None:
        self.family = family
        self._rule = functools.lru_cache(maxsize=None)(rule)
        self._first = first_index
        self._include_zero = include_zero
        self._log_tol = log_tol

    def element(self, k: int) -> LogValue:
        return self._rule(self._first + k - 1)

    def _elements_upto(self, h: LogValue, cap: int) -> list[LogValue]:
        out: list[LogValue] = []
        k = 1
        while True:
            e = self.element(k)
            if e > h:
                break
            out.append(e)
            k += 1
            if len(out) > cap:
                raise ResourceError(f"{self.family}: more than {cap} elements below horizon")
        return out

    def contains(self, x: LogValue) -> bool:
        if x.is_zero:
            return self._include_zero
        if not x.is_positive:
            return False
        k = self.floor_index(x)
        for j in (k, k + 1):
            if j >= 1 and abs(self.element(j).log2mag - x.log2mag) <= self._log_tol:
                return True
        return False

    def floor_index(self, x: LogValue) -> int:
        """Largest k with element(k) <= x; 0 when x precedes every element."""
        if self.element(1) > x:
            return 0
        hi = 1
        while self.element(hi * 2) <= x:
            hi *= 2
            if hi > 2 ** 62:
                raise ResourceError(f"{self.family}: element index search overflow")
        lo = hi  # element(lo) <= x < element(2*hi)
        hi = hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.element(mid) <= x:
                lo = mid
            else:
                hi = mid
        return lo

    def covering(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        cov: list[Interval] = []
        if self._include_zero:
            cov.append((LogValue.zero(), LogValue.zero()))
        cov.extend((e, e) for e in self._elements_upto(h, cap))
        return cov

    def tail_gaps(self, h: LogValue, count: int) -> list[Gap]:
        k = self.floor_index(h)
        gaps: list[Gap] = []
        lo_k = max(1, k - count)
        for j in range(lo_k, k):
            gaps.append(Gap(self.element(j), self.element(j + 1), complete=True))
        if k >= 1 and self.element(k) < h:
            gaps.append(Gap(self.element(k), h, complete=False))
        return gaps[-count:]

    def gap_sequence(self, count: int) -> list[Gap]:
        return [Gap(self.element(j), self.element(j + 1), complete=True) for j in range(1, count + 1)]

    def horizon_for_gaps(self, count: int) -> LogValue:
        return self.element(count + 1)

    def nearest(self, x: LogValue) -> LogValue:
        cands: list[LogValue] = []
        if self._include_zero:
            cands.append(LogValue.zero())
        k = self.floor_index(x)
        if k >= 1:
            cands.append(self.element(k))
        cands.append(self.element(k + 1))
        return min(cands, key=lambda e: abs(e - x))

    def distance_to(self, x: LogValue, h: LogValue) -> LogValue:
        cands: list[LogValue] = []
        if self._include_zero:
            cands.append(LogValue.zero())
        k = self.floor_index(x)
        if k >= 1:
            cands.append(self.element(k))
        nxt = self.element(k + 1)
        if nxt <= h:
            cands.append(nxt)
        if not cands:
            return x  # window is empty below x; only 0 would remain, excluded
        return min(abs(e - x) for e in cands)

    def neighbor_gaps(self, t: LogValue) -> list[Gap]:
        k = self.floor_index(t)
        out = [
            Gap(self.element(j), self.element(j + 1), complete=True)
            for j in (k - 1, k, k + 1)
            if j >= 1
        ]
        if not out:
            out.append(Gap(self.element(1), self.element(2), complete=True))
        return out

    def gap_left(self, k: int) -> Optional[LogValue]:
        return self.element(k)


class LatticeRay(RaySet):
    """{0, s, 2s, ...}: the integer-spaced model of lattice distance sets.

    Gap queries are analytic; the covering is only materialized for small
    horizons.  ``slack`` widens membership for perturbed lattices.
    """

    def __init__(self, family: str = "integers", spacing: float = 1.0, slack: float = 0.0) -> None:
        if spacing <= 0:
            raise InputError("spacing must be positive")
        self.family = family
        self._s = spacing
        self._slack = slack

    def _beyond_resolution(self, x: LogValue) -> bool:
        # Above 2**52 the spacing falls below the representation's resolution:
        # every such value is indistinguishable from a lattice point.
        return x.log2mag > 52.0 + math.log2(self._s)

    def contains(self, x: LogValue) -> bool:
        if x.sign > 0 and self._beyond_resolution(x):
            return True
        xf = x.to_float()
        if xf < -self._slack:
            return False
        frac = abs(xf / self._s - round(xf / self._s)) * self._s
        return frac <= self._slack + 1e-9 * max(1.0, abs(xf))

    def covering(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        hf = h.to_float()
        if not math.isfinite(hf) or hf / self._s > cap:
            raise ResourceError(f"{self.family}: covering needs more than {cap} pieces")
        n = int(math.floor(hf / self._s + 1e-12))
        half = self._slack
        out: list[Interval] = []
        for k in range(n + 1):
            c = k * self._s
            if half > 0:
                out.append((LogValue.from_float(max(0.0, c - half)), LogValue.from_float(c + half)))
            else:
                v = LogValue.from_float(c)
                out.append((v, v))
        return out

    def longest_gap(self, h: LogValue) -> LogValue:
        hf = h.to_float()
        if math.isfinite(hf) and hf < self._s:
            return LogValue.from_float(max(0.0, hf - self._slack))
        return LogValue.from_float(max(0.0, self._s - 2 * self._slack))

    def tail_gaps(self, h: LogValue, count: int) -> list[Gap]:
        hf = h.to_float()
        gaps: list[Gap] = []
        if math.isfinite(hf):
            n = int(math.floor(hf / self._s + 1e-12))
            for k in range(max(0, n - count), n):
                gaps.append(self._gap_at(k))
            if n * self._s + self._slack < hf:
                gaps.append(Gap(LogValue.from_float(n * self._s + self._slack), h, complete=False))
        else:
            # Approximate the tail structurally: unit gaps hanging off h.
            step = LogValue.from_float(self._s)
            hi = h
            for _ in range(count):
                lo = hi - step
                gaps.append(Gap(lo, hi, complete=True))
                hi = lo
            gaps.reverse()
        return gaps[-count:]

    def _gap_at(self, k: int) -> Gap:
        lo = k * self._s + self._slack
        hi = (k + 1) * self._s - self._slack
        return Gap(LogValue.from_float(lo), LogValue.from_float(hi), complete=True)

    def gap_sequence(self, count: int) -> list[Gap]:
        return [self._gap_at(k) for k in range(count)]

    def horizon_for_gaps(self, count: int) -> LogValue:
        return LogValue.from_float((count + 1) * self._s)

    def element(self, k: int) -> LogValue:
        return LogValue.from_float(k * self._s)

    def nearest(self, x: LogValue) -> LogValue:
        if x.sign > 0 and self._beyond_resolution(x):
            return x
        xf = x.to_float()
        return LogValue.from_float(max(0.0, round(xf / self._s)) * self._s)

    def distance_to(self, x: LogValue, h: LogValue) -> LogValue:
        if x.sign > 0 and self._beyond_resolution(x):
            return LogValue.zero()
        xf = x.to_float()
        lo = math.floor(xf / self._s) * self._s
        cands = [lo]
        if LogValue.from_float(lo + self._s) <= h:
            cands.append(lo + self._s)
        d = min(abs(xf - c) for c in cands if c >= 0)
        return LogValue.from_float(max(0.0, d - self._slack))

    def neighbor_gaps(self, t: LogValue) -> list[Gap]:
        if t.sign > 0 and self._beyond_resolution(t):
            # Structurally exact at this magnitude: unit gaps flanking t.
            step = LogValue.from_float(self._s)
            return [Gap(t - step, t, complete=True), Gap(t, t + step, complete=True)]
        tf = t.to_float()
        k = int(math.floor(tf / self._s))
        out = [self._gap_at(j) for j in (k - 1, k, k + 1) if j >= 0]
        return out or [self._gap_at(0)]

    def gap_left(self, k: int) -> Optional[LogValue]:
        return LogValue.from_float(k * self._s + self._slack)


class FullRay(RaySet):
    """The whole half line [0, inf): no gaps at all."""

    family = "reals"

    def contains(self, x: LogValue) -> bool:
        return x.sign >= 0

    def covering(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        return [(LogValue.zero(), h)]

    def longest_gap(self, h: LogValue) -> LogValue:
        return LogValue.zero()

    def tail_gaps(self, h: LogValue, count: int) -> list[Gap]:
        return []

    def gap_sequence(self, count: int) -> list[Gap]:
        return []

    def horizon_for_gaps(self, count: int) -> LogValue:
        return LogValue.from_log2(40.0)

    def element(self, k: int) -> LogValue:
        return LogValue.from_int(k)

    def nearest(self, x: LogValue) -> LogValue:
        return x if x.sign >= 0 else LogValue.zero()

    def distance_to(self, x: LogValue, h: LogValue) -> LogValue:
        if x <= h:
            return LogValue.zero()
        return x - h

    def neighbor_gaps(self, t: LogValue) -> list[Gap]:
        return []

    def gap_left(self, k: int) -> Optional[LogValue]:
        return None


class IntervalUnionRay(RaySet):
    """A union of closed blocks [lo_k, hi_k] marching to infinity."""

    def __init__(
        self,
        family: str,
        block: Callable[[int], Interval],
        first_index: int = 1,
        include_zero: bool = True,
    ) -> None:
        self.family = family
        self._block = functools.lru_cache(maxsize=None)(block)
        self._first = first_index
        self._include_zero = include_zero

    def block(self, k: int) -> Interval:
        return self._block(k)

    def _block_floor(self, x: LogValue) -> int:
        """Largest block index k with lo_k <= x; first-1 when x precedes all."""
        if self._block(self._first)[0] > x:
            return self._first - 1
        span = 1
        while self._block(self._first + span)[0] <= x:
            span *= 2
            if span > 2 ** 62:
                raise ResourceError(f"{self.family}: block index search overflow")
        lo, hi = self._first + span // 2, self._first + span
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._block(mid)[0] <= x:
                lo = mid
            else:
                hi = mid
        return lo

    def _blocks_upto(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        out: list[Interval] = []
        k = self._first
        while True:
            lo, hi = self._block(k)
            if lo > h:
                break
            out.append((lo, min(hi, h)))
            k += 1
            if len(out) > cap:
                raise ResourceError(f"{self.family}: more than {cap} blocks below horizon")
        return out

    def contains(self, x: LogValue) -> bool:
        if x.is_zero:
            return self._include_zero
        if not x.is_positive:
            return False
        k = self._block_floor(x)
        if k < self._first:
            return False
        lo, hi = self._block(k)
        return lo <= x <= hi

    def covering(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        cov: list[Interval] = []
        if self._include_zero:
            cov.append((LogValue.zero(), LogValue.zero()))
        cov.extend(self._blocks_upto(h, cap))
        return cov

    def gap_sequence(self, count: int) -> list[Gap]:
        gaps: list[Gap] = []
        if self._include_zero:
            first_lo = self._block(self._first)[0]
            if first_lo.is_positive:
                gaps.append(Gap(LogValue.zero(), first_lo, complete=True))
        k = self._first
        while len(gaps) < count:
            hi_k = self._block(k)[1]
            lo_next = self._block(k + 1)[0]
            if hi_k < lo_next:
                gaps.append(Gap(hi_k, lo_next, complete=True))
            k += 1
        return gaps[:count]

    def horizon_for_gaps(self, count: int) -> LogValue:
        return self._block(self._first + count + 1)[0]

    def element(self, k: int) -> LogValue:
        # Battery anchors: a geometric mesh of each block, endpoints included.
        # Blocks are assumed to start strictly above zero.
        m = _MESH_PER_SEGMENT
        seg, j = divmod(k - 1, m)
        lo, hi = self._block(self._first + seg)
        t = (hi.log2mag - lo.log2mag) * (j / (m - 1)) if m > 1 else 0.0
        return LogValue.from_log2(lo.log2mag + t)

    def nearest(self, x: LogValue) -> LogValue:
        if not x.is_positive:
            return LogValue.zero() if self._include_zero else self._block(self._first)[0]
        k = self._block_floor(x)
        if k < self._first:
            cands = [self._block(self._first)[0]]
            if self._include_zero:
                cands.append(LogValue.zero())
            return min(cands, key=lambda e: abs(e - x))
        lo, hi = self._block(k)
        if x <= hi:
            return x
        return min([hi, self._block(k + 1)[0]], key=lambda e: abs(e - x))

    def distance_to(self, x: LogValue, h: LogValue) -> LogValue:
        if not x.is_positive:
            if self._include_zero:
                return abs(x)
            return abs(self._block(self._first)[0] - x)
        k = self._block_floor(x)
        best: Optional[LogValue] = abs(x) if self._include_zero else None
        if k >= self._first:
            lo, hi = self._block(k)
            top = min(hi, h)
            if lo <= h:
                if x <= top:
                    return LogValue.zero()
                d = x - top
                best = d if best is None or d < best else best
        lo_next = self._block(max(k + 1, self._first))[0]
        if lo_next <= h:
            d = abs(lo_next - x)
            best = d if best is None or d < best else best
        return best if best is not None else x

    def neighbor_gaps(self, t: LogValue) -> list[Gap]:
        k = max(self._block_floor(t), self._first)
        out: list[Gap] = []
        for j in (k - 1, k, k + 1):
            if j < self._first:
                continue
            hi_j = self._block(j)[1]
            lo_next = self._block(j + 1)[0]
            if hi_j < lo_next:
                out.append(Gap(hi_j, lo_next, complete=True))
        return out

    def gap_left(self, k: int) -> Optional[LogValue]:
        return self._block(self._first + k - 1)[1]


class ExplicitRay(PointRay):
    """A finite explicit point set (bounded; the trailing gap dominates)."""

    def __init__(self, values: Sequence[float], family: str = "explicit") -> None:
        vals = sorted(set(float(v) for v in values))
        if not vals or vals[0] < 0:
            raise InputError("explicit ray set needs nonnegative values")
        self._values = [LogValue.from_float(v) for v in vals if v > 0]
        include_zero = vals[0] == 0.0

        def rule(k: int) -> LogValue:
            if k <= len(self._values):
                return self._values[k - 1]
            # Pad past the data so index searches terminate; the pad marks
            # the set as bounded rather than adding elements.
            top = self._values[-1].log2mag if self._values else 0.0
            return LogValue.from_log2(top + 4096.0 * (k - len(self._values)))

        super().__init__(family, rule, include_zero=include_zero)
        self._count = len(self._values)

    def is_bounded_hint(self) -> bool:
        return True

    def covering(self, h: LogValue, cap: int = GAP_CAP) -> list[Interval]:
        cov: list[Interval] = []
        if self._include_zero:
            cov.append((LogValue.zero(), LogValue.zero()))
        cov.extend((e, e) for e in self._values if e <= h)
        return cov

    def gap_sequence(self, count: int) -> list[Gap]:
        gaps = [
            Gap(a, b, complete=True)
            for a, b in zip(self._values, self._values[1:])
        ]
        return gaps[:count]

    def horizon_for_gaps(self, count: int) -> LogValue:
        return self._values[-1] if self._values else LogValue.one()

    def neighbor_gaps(self, t: LogValue) -> list[Gap]:
        # Clamp to the real data; never expose gaps built from pad elements.
        k = min(self.floor_index(t), self._count - 1)
        return [
            Gap(self._values[j - 1], self._values[j], complete=True)
            for j in (k - 1, k, k + 1)
            if 1 <= j <= self._count - 1
        ]

    def gap_left(self, k: int) -> Optional[LogValue]:
        if k <= self._count - 1:
            return self._values[k - 1]
        return None


# ---------------------------------------------------------------------------
# Porosity at infinity


@dataclass(frozen=True)
class PorosityEstimate:
    """Two independent estimates of limsup l(h)/h, with the achieving gap."""

    value_by_scan: float
    value_by_gap_formula: float
    scan_series: tuple  # (h, l, l/h) float triples for reporting
    achieving_gap: Optional[Gap]

    @property
    def value(self) -> float:
        return self.value_by_gap_formula


def gap_components(E: RaySet, h: LogValue, cap: int = GAP_CAP) -> list[Gap]:
    """Maximal open intervals of [0, h] minus E, in increasing order."""
    return E.gap_components(h, cap)


def longest_gap(E: RaySet, h: LogValue) -> LogValue:
    """l(h): length of the longest interval avoiding E inside [0, h]."""
    if not h.is_positive:
        raise InputError("horizon must be positive")
    return E.longest_gap(h)


def default_schedule(max_log2: float = 40.0) -> list[LogValue]:
    """Geometric horizon schedule 2^8, 2^10, ..., up to 2^max_log2."""
    exps: list[float] = []
    e = 8.0
    while e < max_log2:
        exps.append(e)
        e += 2.0
    exps.append(max_log2)
    return [LogValue.from_log2(x) for x in exps]


def _tail_max(values: Sequence[float], tail_fraction: float) -> float:
    if not values:
        return 0.0
    w = max(1, int(math.ceil(tail_fraction * len(values))))
    return max(values[-w:])


def porosity_at_infinity(
    E: RaySet,
    schedule: Optional[Sequence[LogValue]] = None,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    tail_gap_count: int = 64,
) -> PorosityEstimate:
    """Estimate p(E) = limsup_h l(h)/h two independent ways.

    The scan route refines the horizon schedule with the right endpoints of
    the gaps near each horizon (l(h)/h peaks exactly there) and takes the max
    over the tail of the refined schedule.  The gap-formula route takes the
    tail max of (b-a)/b over completed gaps below the last horizon, raised by
    a trailing cut gap when one dominates.
    """
    if schedule is None:
        schedule = default_schedule()
    if not schedule:
        raise InputError("horizon schedule must be nonempty")
    horizons = list(schedule)
    if any(not h.is_positive for h in horizons):
        raise InputError("horizons must be positive")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise InputError("horizon schedule must be strictly increasing")
    h_max = horizons[-1]

    refined = set((h.sign, h.log2mag) for h in horizons)
    probe_points = list(horizons)
    for h in horizons:
        for g in E.tail_gaps(h, 4):
            if g.complete and g.hi.is_positive and g.hi <= h_max:
                key = (g.hi.sign, g.hi.log2mag)
                if key not in refined:
                    refined.add(key)
                    probe_points.append(g.hi)
    probe_points.sort()

    series: list[tuple[float, float, float]] = []
    ratios: list[float] = []
    for h in probe_points:
        l = E.longest_gap(h)
        ratio = 0.0 if l.is_zero else min(1.0, (l / h).to_float())
        series.append((h.to_float(), l.to_float(), ratio))
        ratios.append(ratio)
    value_by_scan = _tail_max(ratios, profile.tail_fraction)

    tail = E.tail_gaps(h_max, tail_gap_count)
    completed = [g for g in tail if g.complete]
    gap_value = _tail_max([g.ratio for g in completed], profile.tail_fraction)
    achieving = None
    if completed:
        achieving = max(completed, key=lambda g: g.ratio)
    trailing = [g for g in tail if not g.complete]
    if trailing and trailing[-1].ratio > gap_value:
        gap_value = trailing[-1].ratio
        achieving = trailing[-1]

    return PorosityEstimate(
        value_by_scan=value_by_scan,
        value_by_gap_formula=min(1.0, gap_value),
        scan_series=tuple(series),
        achieving_gap=achieving,
    )


def ratios_tend_to_one(ratios: Sequence[float], profile: ToleranceProfile) -> Ternary:
    """Does a sequence of gap ratios (values in [0, 1]) tend to 1?

    Accepts either direct convergence within eps_rel or a certified trend:
    the transformed sequence 1/(1 - ratio) diverges exactly when the ratios
    approach 1, which covers slow climbs such as 1 - 1/n that never get
    within eps_rel of 1 on a feasible prefix.
    """
    direct = detect_limit(ratios, profile)
    primary = three_valued(direct, 1.0, profile.eps_rel)
    if primary is not Ternary.UNDETERMINED:
        return primary
    transformed = [1.0 / (1.0 - r) if r < 1.0 else math.inf for r in ratios]
    t = detect_limit(transformed, profile)
    if t.is_diverged:
        return Ternary.TRUE
    if t.is_converged:
        return Ternary.FALSE
    return Ternary.UNDETERMINED


def is_strongly_porous(
    E: RaySet,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    depth: int = BATTERY_PREFIX,
) -> Ternary:
    """Does the tail of the completed-gap ratio sequence converge to 1?

    Certified on the first ``depth`` completed gaps (gap enumeration is cheap
    in log scale, so the certification digs far deeper than the horizon
    scan).  Bounded sets are strongly porous: the trailing infinite gap
    dominates every large horizon.
    """
    if E.is_bounded_hint():
        return Ternary.TRUE
    gaps = E.gap_sequence(depth)
    if not gaps:
        return Ternary.FALSE  # no gaps at all: l(h) stays 0
    return ratios_tend_to_one([g.ratio for g in gaps], profile)


# ---------------------------------------------------------------------------
# The asymptotic-equivalence relation and the tau-strong porosity ladder


@dataclass(frozen=True)
class AsympMatch:
    """Outcome of matching one positive sequence against another.

    ``c1``/``c2`` bound the tail of the ratio first/second; the verdict is
    true when the bounds are within ``ratio_cap`` of each other and neither
    drifts through the tail.  When a gap sequence was matched it is recorded
    together with the tail verdict of its (b-a)/b ratios.
    """

    c1: float
    c2: float
    verdict: Ternary
    note: str = ""
    matched_gaps: tuple = ()
    gap_ratio_verdict: Optional[LimitVerdict] = None


def _drifts(ratios: Sequence[float], eps_rel: float) -> Optional[str]:
    """Detect a ratio sequence escaping to 0 or infinity through the tail."""
    if len(ratios) < 4:
        return None
    steps = list(zip(ratios, ratios[1:]))
    down = sum(1 for a, b in steps if b <= a) / len(steps)
    up = sum(1 for a, b in steps if b >= a) / len(steps)
    total = ratios[-1] / ratios[0]
    if down >= 0.75 and total <= 1.0 - 8.0 * eps_rel:
        return f"monotone downward drift (factor {total:.4g})"
    if up >= 0.75 and total >= 1.0 + 8.0 * eps_rel:
        return f"monotone upward drift (factor {total:.4g})"
    # Envelope drift: quarter extrema marching in one direction.
    q = max(1, len(ratios) // 4)
    quarters = [ratios[i * q : (i + 1) * q] for i in range(4)]
    quarters = [qq for qq in quarters if qq]
    mins = [min(qq) for qq in quarters]
    maxs = [max(qq) for qq in quarters]
    if len(mins) == 4 and all(b < a for a, b in zip(mins, mins[1:])) and mins[0] / mins[-1] >= 4.0:
        return "lower envelope drifts to 0"
    if len(maxs) == 4 and all(b > a for a, b in zip(maxs, maxs[1:])) and maxs[-1] / maxs[0] >= 4.0:
        return "upper envelope drifts to infinity"
    return None


def _ratio_bounds(
    ratios: Sequence[float],
    profile: ToleranceProfile,
    ratio_cap: float,
) -> AsympMatch:
    w = max(2, int(math.ceil(profile.tail_fraction * len(ratios))))
    tail = list(ratios[-w:])
    c1, c2 = min(tail), max(tail)
    if c1 <= 0.0:
        return AsympMatch(c1, c2, Ternary.FALSE, note="ratio reached zero")
    drift = _drifts(tail, profile.eps_rel)
    if drift is not None:
        return AsympMatch(c1, c2, Ternary.FALSE, note=drift)
    if c2 / c1 > ratio_cap:
        return AsympMatch(c1, c2, Ternary.FALSE, note=f"bound spread {c2 / c1:.4g} exceeds cap")
    return AsympMatch(c1, c2, Ternary.TRUE)


def asymp_equivalent(
    a: Sequence,
    g: Sequence,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    ratio_cap: float = RATIO_CAP,
) -> AsympMatch:
    """Are two positive sequences within fixed multiplicative constants?

    Accepts float or LogValue prefixes of equal length; bounds are tail
    inf/sup of a_n / g_n.
    """
    if len(a) != len(g):
        raise InputError("asymp_equivalent requires equal-length prefixes")
    if len(a) == 0:
        raise InputError("asymp_equivalent requires nonempty prefixes")
    ratios: list[float] = []
    for x, y in zip(a, g):
        xv = LogValue.coerce(x)
        yv = LogValue.coerce(y)
        if not (xv.is_positive and yv.is_positive):
            raise InputError("asymp_equivalent requires strictly positive terms")
        ratios.append((xv / yv).to_float())
    return _ratio_bounds(ratios, profile, ratio_cap)


@dataclass(frozen=True)
class TauEvidence:
    """Per-tau outcome inside a battery verdict."""

    tau_name: str
    match: AsympMatch
    verdict: Ternary
    note: str = ""


@dataclass(frozen=True)
class BatteryVerdict:
    """Battery-relative classifier outcome with witness and evidence."""

    verdict: Ternary
    witness: Optional[str]
    evidence: tuple  # of TauEvidence
    note: str = ""


def _match_terms(
    E: RaySet,
    terms: Sequence[LogValue],
    profile: ToleranceProfile,
    ratio_cap: float,
) -> AsympMatch:
    """Greedy nearest-in-log matching of positive terms to gap left endpoints.

    A pick below the previous one (on the last 75% of the terms) is repaired
    to the previous gap; the definition only needs the selected endpoints to
    be eventually nondecreasing, and repeats are allowed.
    """
    picks: list[Gap] = []
    start_monotone = len(terms) // 4
    for i, t in enumerate(terms):
        cands = [g for g in E.neighbor_gaps(t) if g.lo.is_positive]
        if not cands:
            return AsympMatch(0.0, 0.0, Ternary.FALSE, note="no completed gaps to match")
        g = min(cands, key=lambda c: abs(c.lo.log2mag - t.log2mag))
        if picks and i >= start_monotone and g.lo < picks[-1].lo:
            g = picks[-1]
        picks.append(g)

    ratios = [(g.lo / t).to_float() for g, t in zip(picks, terms)]
    match = _ratio_bounds(ratios, profile, ratio_cap)
    matched = tuple(picks)
    gap_ratio_verdict = detect_limit([g.ratio for g in matched], profile)
    ratio_ok = ratios_tend_to_one([g.ratio for g in matched], profile)

    if match.verdict.is_true and ratio_ok.is_true:
        verdict = Ternary.TRUE
        note = ""
    elif match.verdict.is_false or ratio_ok.is_false:
        verdict = Ternary.FALSE
        note = match.note if match.verdict.is_false else "matched gap ratios do not tend to 1"
    else:
        verdict = Ternary.UNDETERMINED
        note = "gap ratio tail undetermined"
    return AsympMatch(
        c1=match.c1,
        c2=match.c2,
        verdict=verdict,
        note=note,
        matched_gaps=matched,
        gap_ratio_verdict=gap_ratio_verdict,
    )


def tau_strong_porosity(
    E: RaySet,
    tau: ScalingSequence,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    ratio_cap: float = RATIO_CAP,
    prefix_length: int = BATTERY_PREFIX,
) -> AsympMatch:
    """Is E tau-strongly porous: some gap sequence with left endpoints
    asymptotically equivalent to tau, gap ratios tending to 1?"""
    terms = tau.prefix(prefix_length)
    for i, t in enumerate(terms):
        if not t.is_positive:
            raise InputError(f"tau term {i + 1} is not positive")
    sample_stride = max(1, len(terms) // 128)
    for i in range(0, len(terms), sample_stride):
        if not E.contains(terms[i]):
            raise InputError(f"tau term {i + 1} of {tau.name!r} is not in the set")
    tau_profile = profile.with_overrides(prefix_length=prefix_length)
    if not tau.certify_eventually_increasing(tau_profile):
        return AsympMatch(0.0, 0.0, Ternary.UNDETERMINED, note="tau not certified eventually increasing")
    if not tau.certify_divergent(tau_profile):
        return AsympMatch(0.0, 0.0, Ternary.UNDETERMINED, note="tau not certified divergent")
    return _match_terms(E, terms, profile, ratio_cap)


# ---------------------------------------------------------------------------
# Batteries and the completely / omega strong classifiers


def _prf_bit(seed: int, k: int) -> int:
    # Stable across runs and platforms: str seeding hashes through sha512.
    return random.Random(f"{seed}:{k}").getrandbits(1)


def _positive_element(E: RaySet, v: LogValue) -> LogValue:
    return v if v.is_positive else E.element(1)


def default_battery(
    E: RaySet,
    seed: int = 17,
) -> list[ScalingSequence]:
    """The sampling battery over eventually increasing sequences in E.

    Members: all elements in order, every c-th element (c in 2, 3, 5),
    elements nearest to the powers 2^k, the gap left endpoints, and a seeded
    random strictly increasing element selection.
    """
    members: list[ScalingSequence] = []

    def elem_member(name: str, idx: Callable[[int], int]) -> ScalingSequence:
        return ScalingSequence(
            f"{E.family}:{name}",
            lambda k: _positive_element(E, E.element(idx(k))),
            eventually_increasing=True,
        )

    members.append(elem_member("all", lambda k: k))
    for c in (2, 3, 5):
        members.append(elem_member(f"every-{c}", lambda k, c=c: c * k))
    members.append(
        ScalingSequence(
            f"{E.family}:near-pow2",
            lambda k: _positive_element(E, E.nearest(LogValue.from_log2(float(k)))),
            eventually_increasing=True,
        )
    )
    if E.gap_left(1) is not None:
        members.append(
            ScalingSequence(
                f"{E.family}:gap-lefts",
                lambda k: _positive_element(E, E.gap_left(k)),
                eventually_increasing=True,
            )
        )
    members.append(elem_member(f"random[{seed}]", lambda k: 2 * k + _prf_bit(seed, k)))
    return members


def completely_strongly_porous(
    E: RaySet,
    battery: Optional[Sequence[ScalingSequence]] = None,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    ratio_cap: float = RATIO_CAP,
    prefix_length: int = BATTERY_PREFIX,
    seed: int = 17,
) -> BatteryVerdict:
    """tau-strong porosity for every battery member.

    A positive verdict is battery-relative (the definition quantifies over
    all eventually increasing sequences in E); a negative verdict names a
    concrete witness tau.
    """
    if E.is_bounded_hint():
        return BatteryVerdict(Ternary.TRUE, None, (), note="vacuous: bounded set has no divergent sequences")
    if battery is None:
        battery = default_battery(E, seed=seed)
    if not battery:
        raise InputError("battery must be nonempty")
    evidence: list[TauEvidence] = []
    witness: Optional[str] = None
    undetermined = False
    for tau in battery:
        m = tau_strong_porosity(E, tau, profile, ratio_cap, prefix_length)
        evidence.append(TauEvidence(tau.name, m, m.verdict, note=m.note))
        if m.verdict.is_false and witness is None:
            witness = tau.name
        if m.verdict is Ternary.UNDETERMINED:
            undetermined = True
    if witness is not None:
        verdict = Ternary.FALSE
    elif undetermined:
        verdict = Ternary.UNDETERMINED
    else:
        verdict = Ternary.TRUE
    return BatteryVerdict(
        verdict,
        witness,
        tuple(evidence),
        note="battery-relative positive" if verdict.is_true else "",
    )


# ---------------------------------------------------------------------------
# Closed-form family constructors and the shared rule grammar

_LOG2E_LN = 1.0 / math.log(2.0)


def log2_factorial(n: int) -> float:
    """log2(n!) via lgamma; exact big-int log2 for small n."""
    if n < 64:
        return math.log2(math.factorial(n)) if n > 1 else 0.0
    return math.lgamma(n + 1) * _LOG2E_LN


def geometric_ray(q: float, include_zero: bool = False) -> PointRay:
    if q <= 1.0:
        raise InputError("geometric ratio must exceed 1")
    lq = math.log2(q)
    return PointRay(
        f"geometric({q:g})",
        lambda n: LogValue.from_log2(n * lq),
        first_index=0,
        include_zero=include_zero,
    )


def factorial_ray(include_zero: bool = False) -> PointRay:
    return PointRay(
        "factorial",
        lambda n: LogValue.from_log2(log2_factorial(n)),
        first_index=1,
        include_zero=include_zero,
    )


def superexp_ray(c: float = 1.0, include_zero: bool = False) -> PointRay:
    if c <= 0:
        raise InputError("superexp exponent factor must be positive")
    return PointRay(
        f"superexp({c:g})",
        lambda n: LogValue.from_log2(c * float(n) * float(n)),
        first_index=0,
        include_zero=include_zero,
    )


def integers_ray() -> LatticeRay:
    return LatticeRay("integers")


def reals_ray() -> FullRay:
    return FullRay()


def interval_union_ray(include_zero: bool = True) -> IntervalUnionRay:
    """Blocks [(2k)!, (2k+1)!] for k >= 1, the interval-union family."""

    def block(k: int) -> Interval:
        return (
            LogValue.from_log2(log2_factorial(2 * k)),
            LogValue.from_log2(log2_factorial(2 * k + 1)),
        )

    return IntervalUnionRay("interval_union", block, first_index=1, include_zero=include_zero)


def rayset_from_spec(spec: dict) -> RaySet:
    """Build a RaySet from the shared rule grammar.

    Kinds: geometric(q), factorial, superexp(c), integers, reals,
    interval_union, explicit(values).  distance_set_of(space) is resolved at
    the gallery level, where models live.
    """
    kind = spec.get("kind")
    if kind == "geometric":
        return geometric_ray(float(spec.get("q", 2.0)), bool(spec.get("include_zero", False)))
    if kind == "factorial":
        return factorial_ray(bool(spec.get("include_zero", False)))
    if kind == "superexp":
        return superexp_ray(float(spec.get("c", 1.0)), bool(spec.get("include_zero", False)))
    if kind == "integers":
        return integers_ray()
    if kind == "reals":
        return reals_ray()
    if kind == "interval_union":
        return interval_union_ray(bool(spec.get("include_zero", True)))
    if kind == "explicit":
        return ExplicitRay(spec.get("values", []))
    if kind == "distance_set_of":
        raise InputError("distance_set_of is resolved by the gallery, not the bare grammar")
    raise InputError(f"unknown ray set kind {kind!r}")


def _qualifying_ratio_threshold(E: RaySet, profile: ToleranceProfile, depth: int = 2048) -> float:
    gaps = E.gap_sequence(depth)
    if not gaps:
        return 1.0
    tail = gaps[-max(1, len(gaps) // 4) :]
    r_max = max(g.ratio for g in tail)
    return 1.0 - max(50.0 * profile.eps_rel, 2.0 * (1.0 - r_max))


def omega_strongly_porous(
    E: RaySet,
    battery: Optional[Sequence[ScalingSequence]] = None,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    ratio_cap: float = RATIO_CAP,
    prefix_length: int = BATTERY_PREFIX,
    seed: int = 17,
    min_retained: int = 32,
) -> BatteryVerdict:
    """For every battery tau, search a subsequence witnessing tau'-strength.

    The subsequence retains the terms lying within the ratio cap of a high-
    ratio gap left endpoint; a tau whose retained subsequence is too short or
    fails the match is a witness against omega-strong porosity.  Strong
    porosity itself is a necessary condition and is checked first.
    """
    if E.is_bounded_hint():
        return BatteryVerdict(Ternary.TRUE, None, (), note="vacuous: bounded set has no divergent sequences")
    sp = is_strongly_porous(E, profile)
    if sp.is_false:
        return BatteryVerdict(Ternary.FALSE, None, (), note="not strongly porous (necessary condition)")
    if battery is None:
        battery = default_battery(E, seed=seed)
    if not battery:
        raise InputError("battery must be nonempty")

    qual = _qualifying_ratio_threshold(E, profile)
    log_cap = math.log2(ratio_cap)
    evidence: list[TauEvidence] = []
    witness: Optional[str] = None
    undetermined = False
    for tau in battery:
        terms = tau.prefix(prefix_length)
        retained: list[LogValue] = []
        last_kept = -1
        for i, t in enumerate(terms):
            if not t.is_positive:
                raise InputError(f"tau term {i + 1} is not positive")
            for g in E.neighbor_gaps(t):
                if (
                    g.lo.is_positive
                    and g.ratio >= qual
                    and abs(g.lo.log2mag - t.log2mag) <= log_cap
                ):
                    retained.append(t)
                    last_kept = i
                    break
        cofinal = last_kept >= int(0.9 * (len(terms) - 1))
        if len(retained) < min_retained or not cofinal:
            m = AsympMatch(0.0, 0.0, Ternary.FALSE, note="retained subsequence is finite on the prefix")
            evidence.append(TauEvidence(tau.name, m, Ternary.FALSE, note=m.note))
            if witness is None:
                witness = tau.name
            continue
        if any(b < a for a, b in zip(retained, retained[1:])):
            m = AsympMatch(0.0, 0.0, Ternary.UNDETERMINED, note="retained subsequence not increasing")
            evidence.append(TauEvidence(tau.name, m, Ternary.UNDETERMINED, note=m.note))
            undetermined = True
            continue
        m = _match_terms(E, retained, profile, ratio_cap)
        evidence.append(TauEvidence(tau.name, m, m.verdict, note=m.note))
        if m.verdict.is_false and witness is None:
            witness = tau.name
        if m.verdict is Ternary.UNDETERMINED:
            undetermined = True
    if witness is not None:
        verdict = Ternary.FALSE
    elif undetermined:
        verdict = Ternary.UNDETERMINED
    else:
        verdict = Ternary.TRUE
    return BatteryVerdict(
        verdict,
        witness,
        tuple(evidence),
        note="battery-relative positive" if verdict.is_true else "",
    )
