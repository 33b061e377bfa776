"""Built-in example families with analytic ground-truth annotations.

Each family bundles a metric model (distance and annulus oracles), the
distance set of its base point as a ray set, tolerance defaults, a scaling
battery with pool builders, and the annotated expectations every cross-check
runs against.  Magnitudes live in log scale throughout, so families like the
superexponential one stay exact far past double range.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .errors import InputError
from .limits import DEFAULT_PROFILE, SUPEREXP_PROFILE, Ternary, ToleranceProfile
from .logvalue import LogValue
from .porosity import (
    FullRay,
    IntervalUnionRay,
    LatticeRay,
    PointRay,
    RaySet,
    factorial_ray,
    geometric_ray,
    interval_union_ray,
    log2_factorial,
    superexp_ray,
)
from .spaces import AnnulusResult, MetricModel, PointSequence, ScalingSequence

_LOG2 = math.log2


def _logvalue_metric(a: LogValue, b: LogValue) -> LogValue:
    return abs(a - b)


def _ceil_int(v: LogValue) -> int:
    n = v.to_int_nearest()
    return n if n >= v.to_float() or v.log2mag > 52 else n + 1


def _floor_int(v: LogValue) -> int:
    n = v.to_int_nearest()
    return n if n <= v.to_float() or v.log2mag > 52 else n - 1


@dataclass(frozen=True)
class GroundTruth:
    """Analytic expectations; every figure carries its provenance note."""

    porosity_limit: float
    porosity_at_default: float
    porosity_provenance: str
    strongly_porous: Ternary
    completely_strongly_porous: Ternary
    omega_strongly_porous: Ternary
    stars_for_every_scaling: bool  # the two-point functional tends to 0
    expects_unbounded_pretangent: bool  # negation of omega-strong porosity
    expects_single_point_witness: bool  # strong porosity side of the chain


@dataclass(frozen=True, eq=False)
class Family:
    """A gallery family: model, distance set, expectations, sampling plan."""

    kind: str
    label: str
    model: MetricModel
    s_p: RaySet
    ground_truth: GroundTruth
    profile: ToleranceProfile
    scaling_battery: tuple  # ScalingSequence, >= 5 members
    pool_for: Callable[[ScalingSequence], list] = field(repr=False)
    fn_radii: Callable[[int], list] = field(repr=False)  # count -> [LogValue]
    midgap_scaling: Optional[ScalingSequence] = None
    liminf_scaling: Optional[ScalingSequence] = None

    def default_pool(self, r: ScalingSequence) -> list:
        return self.pool_for(r)


# ---------------------------------------------------------------------------
# Integers and lattices


def _int_distance(a: int, b: int) -> LogValue:
    return LogValue.from_int(abs(a - b))


def _int_annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
    a = max(0, _ceil_int(lo))
    b = _floor_int(hi)
    points: list = []
    truncated = False
    if lo.is_zero or lo.to_float() == 0.0:
        points.append(0)
        a = max(a, 1)
    d = a
    while d <= b:
        for x in (-d, d):
            points.append(x)
            if len(points) >= cap:
                truncated = d < b
                return AnnulusResult(tuple(points[:cap]), truncated)
        d += 1
    return AnnulusResult(tuple(points), truncated)


def _integers_family() -> Family:
    model = MetricModel(
        name="integers",
        base_point=0,
        distance_fn=_int_distance,
        annulus_fn=_int_annulus,
    )
    s_p = LatticeRay("integers")
    gt = GroundTruth(
        porosity_limit=0.0,
        porosity_at_default=0.0,
        porosity_provenance="unit gaps: l(h)=1, ratio 1/h -> 0",
        strongly_porous=Ternary.FALSE,
        completely_strongly_porous=Ternary.FALSE,
        omega_strongly_porous=Ternary.FALSE,
        stars_for_every_scaling=False,
        expects_unbounded_pretangent=True,
        expects_single_point_witness=False,
    )

    def lv(n: int) -> LogValue:
        return LogValue.from_int(n)

    battery = (
        ScalingSequence("n", lambda n: lv(n), eventually_increasing=True),
        ScalingSequence("2n", lambda n: lv(2 * n), eventually_increasing=True),
        ScalingSequence("n^2", lambda n: lv(n * n), eventually_increasing=True),
        ScalingSequence("2^n", lambda n: LogValue.from_log2(float(n)), eventually_increasing=True),
        ScalingSequence("3n+7", lambda n: lv(3 * n + 7), eventually_increasing=True),
    )

    def pool_for(r: ScalingSequence, grid: Sequence[float] = (-2.0, -1.0, 1.0, 2.0)) -> list:
        pool = []
        for c in grid:
            c_lv = LogValue.from_float(c)
            pool.append(
                PointSequence(
                    f"coef[{c:g}]",
                    lambda n, c_lv=c_lv: (c_lv * r.term(n)).to_int_nearest(),
                )
            )
        return pool

    def fn_radii(count: int) -> list:
        return [LogValue.from_log2(4.0 + j) for j in range(count)]

    return Family(
        kind="integers",
        label="integers",
        model=model,
        s_p=s_p,
        ground_truth=gt,
        profile=DEFAULT_PROFILE,
        scaling_battery=battery,
        pool_for=pool_for,
        fn_radii=fn_radii,
        midgap_scaling=ScalingSequence("n+1/2", lambda n: LogValue.from_float(n + 0.5), eventually_increasing=True),
        liminf_scaling=battery[0],
    )


def _lattice_distance(a: tuple, b: tuple) -> LogValue:
    s = sum((x - y) * (x - y) for x, y in zip(a, b))
    return LogValue.from_int(s).sqrt()


def _lattice_annulus(d: int) -> Callable[[LogValue, LogValue, int], AnnulusResult]:
    def annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
        hf = hi.to_float()
        lf = lo.to_float()
        exhaustive_limit = 64.0 if d <= 2 else 16.0
        if math.isfinite(hf) and hf <= exhaustive_limit:
            pts = []
            m = int(math.floor(hf))
            for p in _lattice_box(d, m):
                dist = math.sqrt(sum(c * c for c in p))
                if lf <= dist and dist * dist <= hf * hf + 1e-9:
                    pts.append((dist, p))
            pts.sort()
            truncated = len(pts) > cap
            return AnnulusResult(tuple(p for _, p in pts[:cap]), truncated)
        # Large radii: deterministic axis sample (flagged as truncated).
        a = max(1, _ceil_int(lo))
        b = _floor_int(hi)
        points = []
        m = a
        while m <= b and len(points) < cap:
            points.append((m,) + (0,) * (d - 1))
            m += 1
        return AnnulusResult(tuple(points), True)

    return annulus


def _lattice_box(d: int, m: int) -> list:
    rng = range(-m, m + 1)
    if d == 1:
        return [(x,) for x in rng]
    if d == 2:
        return [(x, y) for x in rng for y in rng]
    return [(x, y, z) for x in rng for y in rng for z in rng]


def _lattice_family(d: int) -> Family:
    if not 1 <= d <= 3:
        raise InputError("lattice dimension must be 1, 2 or 3")
    model = MetricModel(
        name=f"lattice{d}",
        base_point=(0,) * d,
        distance_fn=_lattice_distance,
        annulus_fn=_lattice_annulus(d),
    )
    # Integer radii are realized on the axes, so the integer-spaced model
    # bounds the true gap structure of the distance set from above.
    s_p = LatticeRay(f"lattice{d}-distances")
    gt = GroundTruth(
        porosity_limit=0.0,
        porosity_at_default=0.0,
        porosity_provenance="distance set contains every integer radius; gaps <= 1",
        strongly_porous=Ternary.FALSE,
        completely_strongly_porous=Ternary.FALSE,
        omega_strongly_porous=Ternary.FALSE,
        stars_for_every_scaling=False,
        expects_unbounded_pretangent=True,
        expects_single_point_witness=False,
    )

    battery = (
        ScalingSequence("n", lambda n: LogValue.from_int(n), eventually_increasing=True),
        ScalingSequence("2n", lambda n: LogValue.from_int(2 * n), eventually_increasing=True),
        ScalingSequence("n^2", lambda n: LogValue.from_int(n * n), eventually_increasing=True),
        ScalingSequence("3n+7", lambda n: LogValue.from_int(3 * n + 7), eventually_increasing=True),
        ScalingSequence("n+isqrt", lambda n: LogValue.from_int(n + math.isqrt(n)), eventually_increasing=True),
    )

    def pool_for(r: ScalingSequence, grid: Optional[Sequence[tuple]] = None) -> list:
        if grid is None:
            grid = default_vector_grid(d)
        pool = []
        for vec in grid:
            parts = tuple(LogValue.from_float(c) for c in vec)
            pool.append(
                PointSequence(
                    "coef[" + ",".join(f"{c:g}" for c in vec) + "]",
                    lambda n, parts=parts: tuple((c * r.term(n)).to_int_nearest() for c in parts),
                )
            )
        return pool

    def fn_radii(count: int) -> list:
        return [LogValue.from_log2(4.0 + j) for j in range(count)]

    return Family(
        kind="lattice",
        label=f"lattice Z^{d}",
        model=model,
        s_p=s_p,
        ground_truth=gt,
        profile=DEFAULT_PROFILE,
        scaling_battery=battery,
        pool_for=pool_for,
        fn_radii=fn_radii,
        midgap_scaling=ScalingSequence("n+1/2", lambda n: LogValue.from_float(n + 0.5), eventually_increasing=True),
        liminf_scaling=battery[0],
    )


def default_vector_grid(d: int) -> list:
    """Coefficient vectors for lattice pools (|grid| >= 8 for d <= 2)."""
    if d == 1:
        return [(-3.0,), (-2.0,), (-1.0,), (-0.5,), (0.5,), (1.0,), (2.0,), (3.0,)]
    if d == 2:
        out = []
        for k in range(8):
            ang = math.pi * k / 4.0
            out.append((math.cos(ang), math.sin(ang)))
        return out
    return [
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
        (1.0, 1.0, 1.0),
        (-1.0, 1.0, 0.5),
    ]


# ---------------------------------------------------------------------------
# The real half line


def _reals_annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
    # A continuum: return a deterministic geometric mesh, always truncated.
    pts: list = []
    if lo.is_zero:
        pts.append(LogValue.zero())
        lo = LogValue.from_log2(min(0.0, hi.log2mag - 8.0))
    steps = min(cap - len(pts), 33)
    a, b = lo.log2mag, hi.log2mag
    for j in range(steps):
        t = a + (b - a) * (j / (steps - 1) if steps > 1 else 0.0)
        pts.append(LogValue.from_log2(t))
    return AnnulusResult(tuple(pts), True)


def _reals_family() -> Family:
    model = MetricModel(
        name="reals",
        base_point=LogValue.zero(),
        distance_fn=_logvalue_metric,
        annulus_fn=_reals_annulus,
    )
    gt = GroundTruth(
        porosity_limit=0.0,
        porosity_at_default=0.0,
        porosity_provenance="no gaps at all",
        strongly_porous=Ternary.FALSE,
        completely_strongly_porous=Ternary.FALSE,
        omega_strongly_porous=Ternary.FALSE,
        stars_for_every_scaling=False,
        expects_unbounded_pretangent=True,
        expects_single_point_witness=False,
    )
    battery = (
        ScalingSequence("n", lambda n: LogValue.from_int(n), eventually_increasing=True),
        ScalingSequence("2n", lambda n: LogValue.from_int(2 * n), eventually_increasing=True),
        ScalingSequence("n^2", lambda n: LogValue.from_int(n * n), eventually_increasing=True),
        ScalingSequence("2^n", lambda n: LogValue.from_log2(float(n)), eventually_increasing=True),
        ScalingSequence("pi*n", lambda n: LogValue.from_float(math.pi * n), eventually_increasing=True),
    )

    def pool_for(r: ScalingSequence, grid: Sequence[float] = (0.5, 1.0, 2.0, 3.0)) -> list:
        return [
            PointSequence(f"coef[{c:g}]", lambda n, c=LogValue.from_float(c): c * r.term(n))
            for c in grid
        ]

    def fn_radii(count: int) -> list:
        return [LogValue.from_log2(4.0 + j) for j in range(count)]

    return Family(
        kind="reals",
        label="half line",
        model=model,
        s_p=FullRay(),
        ground_truth=gt,
        profile=DEFAULT_PROFILE,
        scaling_battery=battery,
        pool_for=pool_for,
        fn_radii=fn_radii,
        midgap_scaling=None,
        liminf_scaling=battery[0],
    )


# ---------------------------------------------------------------------------
# Sparse point families on the half line (log-scale points)


def _point_family_annulus(ray: PointRay) -> Callable[[LogValue, LogValue, int], AnnulusResult]:
    def annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
        pts: list = []
        if (lo.is_zero or lo.to_float() == 0.0) and ray.contains(LogValue.zero()):
            pts.append(LogValue.zero())
        k = ray.floor_index(hi)
        start = ray.floor_index(lo)
        for j in range(max(1, start), k + 1):
            e = ray.element(j)
            if lo <= e <= hi:
                pts.append(e)
            if len(pts) > cap:
                return AnnulusResult(tuple(pts[:cap]), True)
        return AnnulusResult(tuple(pts), False)

    return annulus


def _sparse_point_family(
    kind: str,
    label: str,
    element_log2: Callable[[int], float],
    first_index: int,
    porosity_limit: float,
    porosity_at_default: float,
    provenance: str,
    sp: Ternary,
    csp: Ternary,
    omega: Ternary,
    midgap_log2: Callable[[int], float],
    profile: ToleranceProfile,
) -> Family:
    ray = PointRay(kind, lambda n: LogValue.from_log2(element_log2(n)), first_index=first_index, include_zero=True)
    model = MetricModel(
        name=kind,
        base_point=LogValue.zero(),
        distance_fn=_logvalue_metric,
        annulus_fn=_point_family_annulus(ray),
    )
    gt = GroundTruth(
        porosity_limit=porosity_limit,
        porosity_at_default=porosity_at_default,
        porosity_provenance=provenance,
        strongly_porous=sp,
        completely_strongly_porous=csp,
        omega_strongly_porous=omega,
        stars_for_every_scaling=sp.is_true,
        expects_unbounded_pretangent=not omega.is_true,
        expects_single_point_witness=sp.is_true,
    )

    def elem(n: int) -> LogValue:
        return LogValue.from_log2(element_log2(max(n, first_index)))

    battery = (
        ScalingSequence("elem", lambda n: elem(n), eventually_increasing=True),
        ScalingSequence("midgap", lambda n: LogValue.from_log2(midgap_log2(max(n, first_index))), eventually_increasing=True),
        ScalingSequence("elem+1", lambda n: elem(n + 1), eventually_increasing=True),
        ScalingSequence("2*elem", lambda n: elem(n) * 2, eventually_increasing=True),
        ScalingSequence("elem-squared-idx", lambda n: elem(2 * n), eventually_increasing=True),
    )

    def pool_for(r: ScalingSequence, offsets: Sequence[int] = (-1, 0, 1), coeffs: Sequence[float] = (3.0,)) -> list:
        pool = [
            PointSequence(
                f"elem[{off:+d}]",
                lambda n, off=off: elem(max(n + off, first_index)),
            )
            for off in offsets
        ]
        for c in coeffs:
            c_lv = LogValue.from_float(c)
            pool.append(
                PointSequence(
                    f"near[{c:g}r]",
                    lambda n, c_lv=c_lv: ray.nearest(c_lv * r.term(n)),
                )
            )
        return pool

    def fn_radii(count: int) -> list:
        return [elem(j + first_index) for j in range(count)]

    return Family(
        kind=kind,
        label=label,
        model=model,
        s_p=ray,
        ground_truth=gt,
        profile=profile,
        scaling_battery=battery,
        pool_for=pool_for,
        fn_radii=fn_radii,
        midgap_scaling=battery[1],
        liminf_scaling=battery[0],
    )


def _geometric_family(q: float) -> Family:
    if q <= 1.0:
        raise InputError("geometric ratio must exceed 1")
    lq = _LOG2(q)
    return _sparse_point_family(
        kind=f"geometric({q:g})",
        label=f"geometric ratio {q:g}",
        element_log2=lambda n: n * lq,
        first_index=0,
        porosity_limit=1.0 - 1.0 / q,
        porosity_at_default=1.0 - 1.0 / q,
        provenance="gap ratio (q^{n+1}-q^n)/q^{n+1} = 1 - 1/q exactly",
        sp=Ternary.FALSE,
        csp=Ternary.FALSE,
        omega=Ternary.FALSE,
        midgap_log2=lambda n: (n + 0.5) * lq,
        profile=DEFAULT_PROFILE,
    )


def _factorial_family() -> Family:
    # Largest factorial gap completed below 2^40 is (13!, 14!).
    at_default = 1.0 - 1.0 / 14.0
    return _sparse_point_family(
        kind="factorial",
        label="factorials",
        element_log2=log2_factorial,
        first_index=1,
        porosity_limit=1.0,
        porosity_at_default=at_default,
        provenance="gap ratio 1 - n!/(n+1)! = 1 - 1/(n+1) -> 1; at h=2^40 the last completed gap is (13!, 14!)",
        sp=Ternary.TRUE,
        csp=Ternary.TRUE,
        omega=Ternary.TRUE,
        midgap_log2=lambda n: 0.5 * (log2_factorial(n) + log2_factorial(n + 1)),
        profile=DEFAULT_PROFILE,
    )


def _superexp_family(c: float) -> Family:
    if c <= 0:
        raise InputError("superexp exponent factor must be positive")
    # At h = 2^40 with c = 1 the last completed gap is (2^36, 2^49)'s
    # predecessor (2^25, 2^36): ratio 1 - 2^{-11}.
    n_h = int(math.floor(math.sqrt(40.0 / c)))
    at_default = 1.0 - 2.0 ** (-c * (2 * (n_h - 1) + 1))
    fam = _sparse_point_family(
        kind=f"superexp({c:g})",
        label=f"superexponential 2^({c:g} n^2)",
        element_log2=lambda n: c * float(n) * float(n),
        first_index=0,
        porosity_limit=1.0,
        porosity_at_default=at_default,
        provenance="gap ratio 1 - 2^{-c(2n+1)} -> 1",
        sp=Ternary.TRUE,
        csp=Ternary.TRUE,
        omega=Ternary.TRUE,
        midgap_log2=lambda n: c * (float(n) * float(n) + float(n)),
        profile=SUPEREXP_PROFILE,
    )
    return fam


def _interval_union_family() -> Family:
    ray = interval_union_ray(include_zero=True)
    model = MetricModel(
        name="interval_union",
        base_point=LogValue.zero(),
        distance_fn=_logvalue_metric,
        annulus_fn=_interval_union_annulus(ray),
    )
    gt = GroundTruth(
        porosity_limit=1.0,
        porosity_at_default=1.0 - 1.0 / 14.0,
        porosity_provenance="gaps ((2k+1)!, (2k+2)!): ratio 1 - 1/(2k+2) -> 1; last completed below 2^40 is (13!, 14!)",
        strongly_porous=Ternary.TRUE,
        completely_strongly_porous=Ternary.FALSE,
        omega_strongly_porous=Ternary.FALSE,
        stars_for_every_scaling=False,
        expects_unbounded_pretangent=True,
        expects_single_point_witness=True,
    )

    def block_end(n: int) -> LogValue:
        return LogValue.from_log2(log2_factorial(2 * n + 1))

    def block_start(n: int) -> LogValue:
        return LogValue.from_log2(log2_factorial(2 * n))

    battery = (
        ScalingSequence("block-ends", lambda n: block_end(n), eventually_increasing=True),
        ScalingSequence("block-starts", lambda n: block_start(n), eventually_increasing=True),
        ScalingSequence(
            "midgap",
            lambda n: LogValue.from_log2(0.5 * (log2_factorial(2 * n + 1) + log2_factorial(2 * n + 2))),
            eventually_increasing=True,
        ),
        ScalingSequence("2*block-ends", lambda n: block_end(n) * 2, eventually_increasing=True),
        ScalingSequence("block-ends+1", lambda n: block_end(n + 1), eventually_increasing=True),
    )

    def pool_for(r: ScalingSequence, coeffs: Sequence[float] = (1.0, 2.0, 3.0)) -> list:
        return [
            PointSequence(
                f"near[{c:g}r]",
                lambda n, c_lv=LogValue.from_float(c): ray.nearest(c_lv * r.term(n)),
            )
            for c in coeffs
        ]

    def fn_radii(count: int) -> list:
        return [block_end(j + 1) for j in range(count)]

    return Family(
        kind="interval_union",
        label="blocks [(2k)!, (2k+1)!]",
        model=model,
        s_p=ray,
        ground_truth=gt,
        profile=DEFAULT_PROFILE,
        scaling_battery=battery,
        pool_for=pool_for,
        fn_radii=fn_radii,
        midgap_scaling=battery[2],
        liminf_scaling=battery[0],
    )


def _interval_union_annulus(ray: IntervalUnionRay) -> Callable[[LogValue, LogValue, int], AnnulusResult]:
    def annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
        pts: list = []
        if (lo.is_zero or lo.to_float() == 0.0) and ray.contains(LogValue.zero()):
            pts.append(LogValue.zero())
        k = 1
        while len(pts) < cap:
            blo, bhi = ray.block(k)
            if blo > hi:
                break
            top = min(bhi, hi)
            bot = max(blo, lo)
            if bot <= top:
                mesh = 5
                for j in range(mesh):
                    t = bot.log2mag + (top.log2mag - bot.log2mag) * (j / (mesh - 1))
                    cand = LogValue.from_log2(t)
                    if not pts or cand > pts[-1]:
                        pts.append(cand)
            k += 1
        return AnnulusResult(tuple(pts[:cap]), True)

    return annulus


# ---------------------------------------------------------------------------
# Perturbed lattice


def _perturbed_positions(d: int, delta: float, seed: int) -> Callable[[tuple], tuple]:
    def position(x: tuple) -> tuple:
        rng = random.Random(f"pl:{seed}:{x}")
        return tuple(c + delta * (2.0 * rng.random() - 1.0) for c in x)

    return position


def _perturbed_family(d: int, delta: float, seed: int = 7) -> Family:
    if not 1 <= d <= 3:
        raise InputError("lattice dimension must be 1, 2 or 3")
    if not 0.0 <= delta < 0.5:
        raise InputError("perturbation must lie in [0, 0.5)")
    pos = _perturbed_positions(d, delta, seed)

    def distance(a: tuple, b: tuple) -> LogValue:
        pa, pb = pos(a), pos(b)
        return LogValue.from_float(math.dist(pa, pb)) if pa != pb else LogValue.zero()

    def annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
        base = _lattice_annulus(d)(lo, hi, cap)
        return base  # perturbed positions keep the lattice indexing

    model = MetricModel(
        name=f"perturbed{d}({delta:g})",
        base_point=(0,) * d,
        distance_fn=distance,
        annulus_fn=annulus,
    )
    s_p = LatticeRay(f"perturbed{d}-distances", slack=2.0 * delta + 1e-9)
    gt = GroundTruth(
        porosity_limit=0.0,
        porosity_at_default=0.0,
        porosity_provenance=f"gaps at most 1 + 2*{delta:g}",
        strongly_porous=Ternary.FALSE,
        completely_strongly_porous=Ternary.FALSE,
        omega_strongly_porous=Ternary.FALSE,
        stars_for_every_scaling=False,
        expects_unbounded_pretangent=True,
        expects_single_point_witness=False,
    )
    battery = (
        ScalingSequence("n", lambda n: LogValue.from_int(n), eventually_increasing=True),
        ScalingSequence("2n", lambda n: LogValue.from_int(2 * n), eventually_increasing=True),
        ScalingSequence("n^2", lambda n: LogValue.from_int(n * n), eventually_increasing=True),
        ScalingSequence("3n+7", lambda n: LogValue.from_int(3 * n + 7), eventually_increasing=True),
        ScalingSequence("n+isqrt", lambda n: LogValue.from_int(n + math.isqrt(n)), eventually_increasing=True),
    )

    def pool_for(r: ScalingSequence, grid: Optional[Sequence[tuple]] = None) -> list:
        if grid is None:
            grid = default_vector_grid(d)
        pool = []
        for vec in grid:
            parts = tuple(LogValue.from_float(c) for c in vec)
            pool.append(
                PointSequence(
                    "coef[" + ",".join(f"{c:g}" for c in vec) + "]",
                    lambda n, parts=parts: tuple((c * r.term(n)).to_int_nearest() for c in parts),
                )
            )
        return pool

    def fn_radii(count: int) -> list:
        return [LogValue.from_log2(4.0 + j) for j in range(count)]

    return Family(
        kind="perturbed_lattice",
        label=f"perturbed Z^{d}, delta={delta:g}",
        model=model,
        s_p=s_p,
        ground_truth=gt,
        profile=DEFAULT_PROFILE,
        scaling_battery=battery,
        pool_for=pool_for,
        fn_radii=fn_radii,
        midgap_scaling=None,
        liminf_scaling=battery[0],
    )


# ---------------------------------------------------------------------------
# Constructors, grammar, and auxiliary witness spaces


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    q: float = 2.0
    c: float = 1.0
    d: int = 1
    delta: float = 0.2

    @staticmethod
    def from_dict(raw: dict) -> "FamilySpec":
        kind = raw.get("kind")
        if kind not in {"integers", "lattice", "reals", "geometric", "factorial", "superexp", "interval_union", "perturbed_lattice"}:
            raise InputError(f"unknown family kind {kind!r}")
        return FamilySpec(
            kind=kind,
            q=float(raw.get("q", 2.0)),
            c=float(raw.get("c", 1.0)),
            d=int(raw.get("d", 1)),
            delta=float(raw.get("delta", 0.2)),
        )


def make_family(spec: FamilySpec) -> Family:
    """Instantiate a gallery family from its validated spec."""
    if spec.kind == "integers":
        return _integers_family()
    if spec.kind == "lattice":
        return _lattice_family(spec.d)
    if spec.kind == "reals":
        return _reals_family()
    if spec.kind == "geometric":
        return _geometric_family(spec.q)
    if spec.kind == "factorial":
        return _factorial_family()
    if spec.kind == "superexp":
        return _superexp_family(spec.c)
    if spec.kind == "interval_union":
        return _interval_union_family()
    if spec.kind == "perturbed_lattice":
        return _perturbed_family(spec.d, spec.delta)
    raise InputError(f"unknown family kind {spec.kind!r}")


def default_gallery() -> list:
    """The verification gallery: one family per analytic regime."""
    return [
        make_family(FamilySpec("integers")),
        make_family(FamilySpec("lattice", d=2)),
        make_family(FamilySpec("reals")),
        make_family(FamilySpec("geometric", q=2.0)),
        make_family(FamilySpec("geometric", q=3.0)),
        make_family(FamilySpec("geometric", q=10.0)),
        make_family(FamilySpec("factorial")),
        make_family(FamilySpec("superexp", c=1.0)),
        make_family(FamilySpec("interval_union")),
        make_family(FamilySpec("perturbed_lattice", d=2, delta=0.2)),
    ]


def satellite_model(even_only: bool = True, factor: float = 3.0) -> MetricModel:
    """The superexponential family with satellite points factor * 2^(n^2).

    With ``even_only`` the satellites exist only at even indices: the
    canonical source of a pretangent sample that fails tangency (the
    satellite class appears under the even-index refinement).
    """
    values: list = []
    for n in range(0, 120):
        values.append(LogValue.from_log2(float(n * n)))
        if (not even_only) or n % 2 == 0:
            values.append(LogValue.from_log2(float(n * n) + _LOG2(factor)))
    values.sort()
    dedup: list = []
    for v in values:
        if not dedup or v > dedup[-1]:
            dedup.append(v)

    def annulus(lo: LogValue, hi: LogValue, cap: int) -> AnnulusResult:
        pts = [v for v in dedup if lo <= v <= hi]
        return AnnulusResult(tuple(pts[:cap]), len(pts) > cap)

    return MetricModel(
        name=f"superexp+satellite({factor:g}{',even' if even_only else ''})",
        base_point=LogValue.zero(),
        distance_fn=_logvalue_metric,
        annulus_fn=annulus,
    )


def satellite_pool(even_only: bool = True, factor: float = 3.0) -> list:
    """Pool for the satellite space: the main stream and the oscillator."""
    lf = _LOG2(factor)

    def main(n: int) -> LogValue:
        return LogValue.from_log2(float(n * n))

    def oscillator(n: int) -> LogValue:
        if (not even_only) or n % 2 == 0:
            return LogValue.from_log2(float(n * n) + lf)
        return LogValue.from_log2(float(n * n))

    return [
        PointSequence("main", main, escapes=True),
        PointSequence("satellite-osc", oscillator, escapes=True),
    ]


def satellite_scaling() -> ScalingSequence:
    return ScalingSequence(
        "2^(n^2)",
        lambda n: LogValue.from_log2(float(n * n)),
        eventually_increasing=True,
        divergent_hint=True,
    )
