"""Metric models, point sequences, and scaling sequences.

A ``MetricModel`` is a countable unbounded metric space given by oracles: a
distance function returning log-scale values, a base point, and an annulus
enumerator.  Sequences are closed-form rules n -> term (1-based), which lets
divergence be certified by probing the rule far beyond the decision prefix
(a ladder of geometrically spaced indices) instead of trusting slow growth.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

from .errors import InputError
from .limits import (
    DEFAULT_PROFILE,
    LimitVerdict,
    Selector,
    Ternary,
    ToleranceProfile,
    VerdictKind,
)
from .logvalue import LogValue

Point = Any

ANNULUS_CAP = 4096
_LADDER_RUNGS = 24


@dataclass(frozen=True)
class AnnulusResult:
    """Points of an annulus query, sorted by distance from the base point."""

    points: tuple
    truncated: bool


@dataclass(frozen=True, eq=False)
class MetricModel:
    """An unbounded metric space presented through oracles.

    ``distance_fn`` must be symmetric, nonnegative and satisfy the triangle
    inequality on sampled triples; ``annulus_fn(lo, hi, cap)`` returns the
    points x with d(x, p) in [lo, hi] sorted by (distance, point), flagging
    truncation at ``cap``.
    """

    name: str
    base_point: Point
    distance_fn: Callable[[Point, Point], LogValue]
    annulus_fn: Callable[[LogValue, LogValue, int], AnnulusResult]

    def distance(self, x: Point, y: Point) -> LogValue:
        return self.distance_fn(x, y)

    def d_p(self, x: Point) -> LogValue:
        return self.distance_fn(x, self.base_point)

    def annulus(self, lo: LogValue, hi: LogValue, cap: int = ANNULUS_CAP) -> AnnulusResult:
        if hi < lo:
            raise InputError("annulus requires lo <= hi")
        return self.annulus_fn(lo, hi, cap)


@dataclass(frozen=True, eq=False)
class PointSequence:
    """A rule n -> x_n of points of a model (1-based).

    ``escapes`` is a structural certificate set by constructions that
    guarantee d(x_n, p) -> infinity (or guarantee its failure); None means
    "decide by probing the rule on the index ladder".
    """

    name: str
    rule: Callable[[int], Point]
    escapes: Optional[bool] = None

    def point(self, n: int) -> Point:
        return self.rule(n)

    def prefix(self, length: int) -> list:
        return [self.rule(n) for n in range(1, length + 1)]

    def subsequence(self, selector: Selector) -> "PointSequence":
        rule = self.rule
        sel = selector.rule
        return PointSequence(
            f"{self.name}[{selector.name}]",
            lambda k: rule(sel(k)),
            escapes=self.escapes,
        )


def constant_sequence(model: MetricModel) -> PointSequence:
    """The constant sequence at the base point (canonical alpha_0 witness)."""
    p = model.base_point
    return PointSequence("const@p", lambda n: p)


@dataclass(frozen=True, eq=False)
class ScalingSequence:
    """A positive real sequence n -> r_n in log scale, expected to diverge.

    Also used for sequences tau drawn from a subset of the half line; the
    shape (rule to positive log-scale reals) is identical.
    """

    name: str
    rule: Callable[[int], LogValue]
    eventually_increasing: Optional[bool] = None  # metadata; None = unknown
    divergent_hint: Optional[bool] = None  # structural certificate, as above

    def term(self, n: int) -> LogValue:
        r = self.rule(n)
        if not r.is_positive:
            raise InputError(f"scaling sequence {self.name!r} nonpositive at n={n}")
        return r

    def prefix(self, length: int) -> list[LogValue]:
        return [self.term(n) for n in range(1, length + 1)]

    def float_prefix(self, length: int) -> list[float]:
        return [t.to_float() for t in self.prefix(length)]

    def subsequence(self, selector: Selector) -> "ScalingSequence":
        rule = self.rule
        sel = selector.rule
        return ScalingSequence(
            f"{self.name}[{selector.name}]",
            lambda k: rule(sel(k)),
            eventually_increasing=self.eventually_increasing,
            divergent_hint=self.divergent_hint,
        )

    def certify_divergent(self, profile: ToleranceProfile = DEFAULT_PROFILE) -> bool:
        """Probe the rule on a geometric index ladder past the prefix.

        Divergence holds when the ladder magnitudes are nondecreasing (within
        slack) and the last rung exceeds the divergence threshold.  A
        structural certificate set at construction time short-circuits the
        probe.
        """
        if self.divergent_hint is not None:
            return self.divergent_hint
        return _ladder_diverges(lambda n: self.term(n), profile)

    def certify_eventually_increasing(self, profile: ToleranceProfile = DEFAULT_PROFILE) -> bool:
        """Nondecreasing on the last 75% of the decision prefix."""
        terms = self.prefix(profile.prefix_length)
        start = max(1, len(terms) // 4)
        return all(terms[i] <= terms[i + 1] for i in range(start - 1, len(terms) - 1))


def _ladder_diverges(term: Callable[[int], LogValue], profile: ToleranceProfile) -> bool:
    n0 = profile.prefix_length
    mags = []
    for j in range(_LADDER_RUNGS + 1):
        mags.append(term(n0 * (2 ** j)).log2mag)
    slack = 0.5
    if any(b < a - slack for a, b in zip(mags, mags[1:])):
        return False
    return mags[-1] > math.log2(profile.divergence_threshold)


def escape_certified(model: MetricModel, x: PointSequence, profile: ToleranceProfile = DEFAULT_PROFILE) -> bool:
    """Certify d(x_n, p) -> infinity on the index ladder."""
    return _ladder_diverges(lambda n: _positive_or_tiny(model.d_p(x.point(n))), profile)


def _positive_or_tiny(v: LogValue) -> LogValue:
    # The ladder compares log2 magnitudes; map exact zeros far below any
    # plausible magnitude instead of failing.
    return v if not v.is_zero else LogValue.from_log2(-4096.0)


@functools.lru_cache(maxsize=None)
def _cached_dp_prefix(model: MetricModel, seq: PointSequence, length: int) -> tuple:
    return tuple(model.d_p(seq.point(n)) for n in range(1, length + 1))


def dp_prefix(model: MetricModel, seq: PointSequence, length: int) -> tuple:
    """Cached prefix of d(x_n, p) values."""
    return _cached_dp_prefix(model, seq, length)


def ratio_terms(
    num: Sequence[LogValue], den: Sequence[LogValue]
) -> list[float]:
    """Decode element-wise ratios to floats (inf when the ratio overflows)."""
    if len(num) != len(den):
        raise InputError("ratio_terms requires equal-length prefixes")
    return [(a / b).to_float() for a, b in zip(num, den)]


def three_valued(verdict: LimitVerdict, target: float, eps: float) -> Ternary:
    """Map a limit verdict to a ternary 'equals target' decision."""
    if verdict.kind is VerdictKind.CONVERGED:
        v = verdict.converged_value()
        if abs(v - target) <= eps:
            return Ternary.TRUE
        if abs(v - target) > 10.0 * eps:
            return Ternary.FALSE
        return Ternary.UNDETERMINED
    if verdict.kind is VerdictKind.DIVERGED_TO_INFINITY:
        return Ternary.FALSE
    return Ternary.UNDETERMINED
