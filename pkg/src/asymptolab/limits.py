"""Finite-prefix limit detection and the three-valued verdict vocabulary.

Every limit in this package is decided on a finite prefix of a sequence: the
last ``tail_fraction`` of the terms forms the decision window.  A verdict is
always one of Converged / DivergedToInfinity / Undetermined; nothing in the
package silently collapses Undetermined into a boolean.

Divergence on a prefix is accepted in two ways: either every window term
already exceeds ``divergence_threshold``, or the window shows sustained
monotone growth (slow escapes such as r_n = n never reach an absolute
threshold on a 4096-term prefix, but their growth certifies them).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

from .errors import InputError


class Ternary(Enum):
    """Three-valued verdict used by every classifier in the package."""

    TRUE = "true"
    FALSE = "false"
    UNDETERMINED = "undetermined"

    @property
    def is_true(self) -> bool:
        return self is Ternary.TRUE

    @property
    def is_false(self) -> bool:
        return self is Ternary.FALSE

    @staticmethod
    def from_bool(b: bool) -> "Ternary":
        return Ternary.TRUE if b else Ternary.FALSE


@dataclass(frozen=True)
class ToleranceProfile:
    """Numerical tolerances governing finite-prefix limit decisions."""

    eps_rel: float = 1e-3
    eps_zero: float = 1e-6
    tail_fraction: float = 0.25
    prefix_length: int = 4096
    divergence_threshold: float = 1e9

    def __post_init__(self) -> None:
        if self.eps_rel <= 0 or self.eps_zero <= 0:
            raise InputError("eps_rel and eps_zero must be positive")
        if not 0.0 < self.tail_fraction < 1.0:
            raise InputError("tail_fraction must lie in (0, 1)")
        if self.prefix_length < 8:
            raise InputError("prefix_length must be at least 8")
        if self.divergence_threshold <= 0:
            raise InputError("divergence_threshold must be positive")

    def window(self, n: int) -> int:
        """Width of the decision window for an n-term prefix."""
        return max(2, int(math.ceil(self.tail_fraction * n)))

    def with_overrides(self, **kw) -> "ToleranceProfile":
        return replace(self, **kw)


DEFAULT_PROFILE = ToleranceProfile()

# Index growth drives magnitudes like 2**(n*n); 48 terms already reach 2**2304.
SUPEREXP_PROFILE = ToleranceProfile(prefix_length=48)


class VerdictKind(Enum):
    CONVERGED = "converged"
    DIVERGED_TO_INFINITY = "diverged_to_infinity"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class LimitVerdict:
    kind: VerdictKind
    value: Optional[float] = None  # present iff CONVERGED
    oscillation: float = math.nan  # max - min over the decision window
    window: int = 0
    note: str = ""

    @property
    def is_converged(self) -> bool:
        return self.kind is VerdictKind.CONVERGED

    @property
    def is_diverged(self) -> bool:
        return self.kind is VerdictKind.DIVERGED_TO_INFINITY

    @property
    def is_undetermined(self) -> bool:
        return self.kind is VerdictKind.UNDETERMINED

    def converged_value(self) -> float:
        if not self.is_converged:
            raise InputError(f"no value: verdict is {self.kind.value} ({self.note})")
        assert self.value is not None
        return self.value


def _smoothed(xs: Sequence[float], width: int = 5) -> list[float]:
    w = min(width, len(xs))
    out = []
    for i in range(len(xs) - w + 1):
        chunk = xs[i : i + w]
        out.append(math.inf if any(math.isinf(c) for c in chunk) else sum(chunk) / w)
    return out


def _nondecreasing(xs: Sequence[float], eps_rel: float) -> bool:
    for a, b in zip(xs, xs[1:]):
        if math.isinf(b):
            continue
        if math.isinf(a):
            return False
        if b < a - eps_rel * (abs(a) + 1.0):
            return False
    return True


def detect_limit(terms: Sequence[float], profile: ToleranceProfile = DEFAULT_PROFILE) -> LimitVerdict:
    """Decide lim terms on a finite prefix.

    Convergence: window oscillation at most eps_rel * (|mean| + 1); the
    reported value is the arithmetic mean of the window.  Divergence: window
    nondecreasing after smoothing, and either entirely above the divergence
    threshold or showing sustained growth.  Deterministic in its inputs.
    """
    if len(terms) == 0:
        raise InputError("detect_limit requires a nonempty term sequence")
    terms = [float(t) for t in terms]
    n = len(terms)
    w = min(profile.window(n), n)
    tail = terms[n - w :]

    finite_tail = all(math.isfinite(t) for t in tail)
    if finite_tail:
        value = sum(tail) / w
        osc = max(tail) - min(tail)
        if osc <= profile.eps_rel * (abs(value) + 1.0):
            return LimitVerdict(VerdictKind.CONVERGED, value=value, oscillation=osc, window=w)
    else:
        osc = math.inf

    if _nondecreasing(_smoothed(tail), profile.eps_rel):
        above = min(tail) > profile.divergence_threshold
        growing = (
            all(t > 0 for t in tail)
            and tail[0] > 0
            and (math.isinf(tail[-1]) or tail[-1] >= (1.0 + 8.0 * profile.eps_rel) * tail[0])
            and (math.isinf(tail[-1]) or terms[n // 4] <= 0 or tail[-1] >= 2.0 * terms[n // 4])
        )
        if above or growing:
            return LimitVerdict(
                VerdictKind.DIVERGED_TO_INFINITY,
                oscillation=osc,
                window=w,
                note="above threshold" if above else "sustained growth",
            )

    return LimitVerdict(
        VerdictKind.UNDETERMINED,
        oscillation=osc,
        window=w,
        note=f"window oscillation {osc:.6g} exceeds tolerance",
    )


# -- index selectors and subsequences ---------------------------------------


@dataclass(frozen=True)
class Selector:
    """A strictly increasing index rule k -> n_k (1-based on both sides)."""

    name: str
    rule: Callable[[int], int] = field(compare=False)

    def index(self, k: int) -> int:
        return self.rule(k)

    def validate(self, upto: int = 64) -> None:
        prev = 0
        for k in range(1, upto + 1):
            nk = self.rule(k)
            if nk <= prev:
                raise InputError(f"selector {self.name!r} is not strictly increasing at k={k}")
            prev = nk

    def compose(self, inner: "Selector") -> "Selector":
        return Selector(f"{self.name}∘{inner.name}", lambda k: self.rule(inner.rule(k)))


IDENTITY = Selector("identity", lambda k: k)
EVENS = Selector("evens", lambda k: 2 * k)
ODDS = Selector("odds", lambda k: 2 * k - 1)
SQUARES = Selector("squares", lambda k: k * k)


def random_selector(seed: int) -> Selector:
    """Seeded strictly increasing selector, O(1) per index.

    n_k = 2k + b_k with a per-index pseudorandom bit keeps steps in {1, 2, 3}
    and stays evaluable at the huge indices the divergence ladder probes.
    """

    def rule(k: int) -> int:
        # String seeding hashes through sha512: stable across runs/platforms.
        return 2 * k + random.Random(f"sel:{seed}:{k}").getrandbits(1)

    return Selector(f"random[{seed}]", rule)


def selector_battery(seed: int = 17) -> list[Selector]:
    """The default refinement battery: evens, odds, squares, seeded random."""
    return [EVENS, ODDS, SQUARES, random_selector(seed)]


def subsequence(terms, selector: Selector):
    """Extract the selector's subsequence.

    Term lists yield term lists (indices past the end are dropped); objects
    exposing a ``subsequence`` method (point and scaling sequences) delegate
    to it, composing rules.
    """
    selector.validate()
    if hasattr(terms, "subsequence"):
        return terms.subsequence(selector)
    out = []
    k = 1
    n = len(terms)
    while True:
        nk = selector.rule(k)
        if nk > n:
            break
        out.append(terms[nk - 1])
        k += 1
    return out
