"""Sampled pretangent spaces: normalized limits, mutual stability, cliques.

Pools of point sequences stand in for the (uncountable) set of admissible
sequences: each sequence with a converged normalized distance joins the
quotient by the zero-distance relation, classes become vertices of a weighted
graph whose edges are the converged pairwise limits, and the maximal cliques
of that graph (always containing the distinguished zero class) are the
sampled pretangent spaces.  Refining along a subsequence re-runs the whole
construction on the composed rules and reports whether the embedding of the
old graph into the new one commutes with the projections and preserves
weights.

Every verdict here is pool-relative and says so; nothing claims to have
constructed a full pretangent space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .errors import InputError, ResourceError
from .limits import (
    DEFAULT_PROFILE,
    LimitVerdict,
    Selector,
    ToleranceProfile,
    VerdictKind,
    detect_limit,
    selector_battery,
)
from .logvalue import LogValue
from .spaces import (
    MetricModel,
    PointSequence,
    ScalingSequence,
    constant_sequence,
    dp_prefix,
    escape_certified,
)

POOL_CAP = 10_000
VERTEX_CAP = 2000

ALPHA0_NAME = "alpha0"


def d_tilde(
    model: MetricModel,
    x: PointSequence,
    r: ScalingSequence,
    profile: ToleranceProfile = DEFAULT_PROFILE,
) -> LimitVerdict:
    """Normalized distance limit of x from the base point.

    Converged only when the raw distances are additionally certified to
    escape to infinity; a bounded or returning sequence is reported as
    Undetermined with a diagnostic, never as converged to its ratio limit.
    """
    n = profile.prefix_length
    num = dp_prefix(model, x, n)
    den = r.prefix(n)
    verdict = detect_limit([(a / b).to_float() for a, b in zip(num, den)], profile)
    if verdict.is_converged and not _escapes(model, x, profile):
        return LimitVerdict(
            VerdictKind.UNDETERMINED,
            oscillation=verdict.oscillation,
            window=verdict.window,
            note="not escaping to infinity",
        )
    return verdict


def _escapes(model: MetricModel, x: PointSequence, profile: ToleranceProfile) -> bool:
    if x.escapes is not None:
        return x.escapes
    return escape_certified(model, x, profile)


def mutual_stability(
    model: MetricModel,
    x: PointSequence,
    y: PointSequence,
    r: ScalingSequence,
    profile: ToleranceProfile = DEFAULT_PROFILE,
) -> LimitVerdict:
    """The pairwise limit d(x_n, y_n) / r_n deciding mutual stability."""
    for seq in (x, y):
        v = d_tilde(model, seq, r, profile)
        if not v.is_converged:
            raise InputError(
                f"mutual_stability requires converged normalized distances; {seq.name!r} is {v.kind.value}"
            )
    return _pair_limit(model, x, y, r, profile)


def _pair_limit(
    model: MetricModel,
    x: PointSequence,
    y: PointSequence,
    r: ScalingSequence,
    profile: ToleranceProfile,
) -> LimitVerdict:
    n = profile.prefix_length
    den = r.prefix(n)
    terms = [
        (model.distance(x.point(i + 1), y.point(i + 1)) / den[i]).to_float()
        for i in range(n)
    ]
    return detect_limit(terms, profile)


@dataclass(frozen=True, eq=False)
class SeqClass:
    """An equivalence class of pool sequences with equal rescaled limits."""

    representative: PointSequence
    d_tilde: float
    members: tuple
    is_alpha0: bool = False

    @property
    def name(self) -> str:
        return self.representative.name


@dataclass(frozen=True, eq=False)
class DroppedSequence:
    sequence: PointSequence
    verdict: LimitVerdict


@dataclass(frozen=True, eq=False)
class QuotientResult:
    classes: tuple  # SeqClass, alpha0 first
    dropped: tuple  # DroppedSequence diagnostics
    class_of_pool_index: dict  # pool position -> class index (converged only)


@dataclass(frozen=True, eq=False)
class StabilityGraph:
    """Weighted graph on sequence classes; alpha0 is always vertex 0."""

    vertices: tuple  # SeqClass
    edges: dict  # (i, j) with i < j -> positive weight
    non_edges: dict  # (i, j) with i < j -> LimitVerdict annotation
    dropped: tuple
    class_of_pool_index: dict

    @property
    def alpha0_index(self) -> int:
        return 0

    def vertex_count(self) -> int:
        return len(self.vertices)

    def weight(self, i: int, j: int) -> Optional[float]:
        if i == j:
            return 0.0
        key = (min(i, j), max(i, j))
        return self.edges.get(key)

    def neighbors(self) -> list:
        adj: list[set] = [set() for _ in self.vertices]
        for (i, j) in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True, eq=False)
class _Admitted:
    """Pool admissibility pass: alpha0 plus the converged sequences."""

    seqs: list  # index 0 is the constant alpha0 representative
    values: list  # d_tilde values (0.0 for alpha0)
    pool_index: list  # original pool positions (-1 for alpha0)
    dropped: tuple


def _admit(
    model: MetricModel,
    pool: Sequence[PointSequence],
    r: ScalingSequence,
    profile: ToleranceProfile,
) -> _Admitted:
    if len(pool) == 0:
        raise InputError("pool must be nonempty")
    if len(pool) > POOL_CAP:
        raise ResourceError(f"pool size {len(pool)} exceeds cap {POOL_CAP}")
    seqs: list = [constant_sequence(model)]
    values: list = [0.0]
    pool_index: list = [-1]
    dropped: list = []
    for idx, seq in enumerate(pool):
        v = d_tilde(model, seq, r, profile)
        if v.is_converged:
            seqs.append(seq)
            values.append(v.converged_value())
            pool_index.append(idx)
        else:
            dropped.append(DroppedSequence(seq, v))
    return _Admitted(seqs, values, pool_index, tuple(dropped))


def _classes_from_union(adm: _Admitted, uf: _UnionFind) -> tuple[list, dict]:
    groups: dict[int, list[int]] = {}
    for k in range(len(adm.seqs)):
        groups.setdefault(uf.find(k), []).append(k)
    entries = []
    for root, members in groups.items():
        is_alpha = root == 0
        cls = SeqClass(
            representative=adm.seqs[members[0]],
            d_tilde=0.0 if is_alpha else adm.values[members[0]],
            members=tuple(adm.seqs[m] for m in members),
            is_alpha0=is_alpha,
        )
        first_pos = min(adm.pool_index[m] for m in members)
        # alpha0 first, then ascending d_tilde, insertion order as tie-break.
        entries.append(((not is_alpha, cls.d_tilde, first_pos), cls, members))
    entries.sort(key=lambda e: e[0])
    classes = [e[1] for e in entries]
    class_of_pool_index: dict[int, int] = {}
    for ci, (_, _cls, members) in enumerate(entries):
        for m in members:
            if adm.pool_index[m] >= 0:
                class_of_pool_index[adm.pool_index[m]] = ci
    return classes, class_of_pool_index


def quotient_pool(
    model: MetricModel,
    pool: Sequence[PointSequence],
    r: ScalingSequence,
    profile: ToleranceProfile = DEFAULT_PROFILE,
) -> QuotientResult:
    """Drop non-admissible sequences and merge the rest by zero pair limits.

    The zero class is synthesized from the constant sequence at the base
    point: it is the canonical representative even though its raw distances
    do not escape, and every pool sequence with vanishing normalized distance
    merges into it.
    """
    adm = _admit(model, pool, r, profile)
    uf = _UnionFind(len(adm.seqs))
    for i in range(len(adm.seqs)):
        for j in range(i + 1, len(adm.seqs)):
            # A zero pair limit forces equal normalized distances; pairs with
            # clearly distinct limits cannot merge.
            if abs(adm.values[i] - adm.values[j]) > 4.0 * profile.eps_zero:
                continue
            if i == 0:
                if adm.values[j] <= profile.eps_zero:
                    uf.union(i, j)
                continue
            v = _pair_limit(model, adm.seqs[i], adm.seqs[j], r, profile)
            if v.is_converged and abs(v.converged_value()) <= profile.eps_zero:
                uf.union(i, j)
    classes, class_of_pool_index = _classes_from_union(adm, uf)
    return QuotientResult(tuple(classes), adm.dropped, class_of_pool_index)


def build_stability_graph(
    model: MetricModel,
    pool: Sequence[PointSequence],
    r: ScalingSequence,
    profile: ToleranceProfile = DEFAULT_PROFILE,
) -> StabilityGraph:
    """Vertices from the quotient, edges from converged pairwise limits.

    Pair limits over the admitted sequences are computed once and reused for
    both decisions: a limit at (numerical) zero merges its pair before any
    edge is drawn, so the published graph is already the re-quotient fixed
    point.  Edge weights between classes come from their representatives;
    the alpha0 row equals the normalized distance values exactly.
    """
    adm = _admit(model, pool, r, profile)
    n = len(adm.seqs)
    verdicts: dict[tuple[int, int], LimitVerdict] = {}
    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if i == 0:
                v = LimitVerdict(
                    VerdictKind.CONVERGED,
                    value=adm.values[j],
                    oscillation=0.0,
                    window=profile.window(profile.prefix_length),
                    note="alpha0 row equals the normalized distance",
                )
            else:
                v = _pair_limit(model, adm.seqs[i], adm.seqs[j], r, profile)
            verdicts[(i, j)] = v
            if v.is_converged and abs(v.converged_value()) <= profile.eps_zero:
                uf.union(i, j)

    classes, class_of_pool_index = _classes_from_union(adm, uf)
    rep_index = [adm.seqs.index(c.members[0]) for c in classes]
    edges: dict = {}
    non_edges: dict = {}
    for ci in range(len(classes)):
        for cj in range(ci + 1, len(classes)):
            a, b = rep_index[ci], rep_index[cj]
            v = verdicts[(min(a, b), max(a, b))]
            if v.is_converged:
                w = v.converged_value()
                if w > profile.eps_zero:
                    edges[(ci, cj)] = w
                # w <= eps_zero cannot happen: the pair would share a class.
            else:
                non_edges[(ci, cj)] = v
    return StabilityGraph(
        vertices=tuple(classes),
        edges=edges,
        non_edges=non_edges,
        dropped=adm.dropped,
        class_of_pool_index=class_of_pool_index,
    )


# ---------------------------------------------------------------------------
# Maximal cliques (sampled pretangent spaces)


@dataclass(frozen=True, eq=False)
class PretangentSample:
    """A maximal clique of the stability graph with its metric matrix."""

    vertex_indices: tuple
    classes: tuple  # SeqClass, in vertex-index order
    matrix: tuple  # row-major tuple of tuples of weights
    contains_alpha0: bool

    def size(self) -> int:
        return len(self.vertex_indices)

    def diameter(self) -> float:
        return max((max(row) for row in self.matrix), default=0.0)

    def min_positive(self) -> float:
        vals = [v for row in self.matrix for v in row if v > 0.0]
        return min(vals) if vals else 0.0


def bron_kerbosch(neighbors: Sequence[set]) -> list:
    """All maximal cliques of an undirected graph, exactly.

    Pivoting on the vertex with most candidates, outer loop in degeneracy
    order; output cliques are sorted tuples, listed lexicographically.
    """
    n = len(neighbors)
    cliques: list = []

    def expand(r: set, p: set, x: set) -> None:
        if not p and not x:
            cliques.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: (len(p & neighbors[u]), -u))
        for v in sorted(p - neighbors[pivot]):
            expand(r | {v}, p & neighbors[v], x & neighbors[v])
            p = p - {v}
            x = x | {v}

    order = _degeneracy_order(neighbors)
    p_all = set(range(n))
    done: set = set()
    for v in order:
        nb = neighbors[v]
        expand({v}, p_all & nb - done, done & nb)
        done.add(v)
    return sorted(cliques)


def _degeneracy_order(neighbors: Sequence[set]) -> list:
    n = len(neighbors)
    degree = [len(neighbors[v]) for v in range(n)]
    removed = [False] * n
    order = []
    for _ in range(n):
        v = min((u for u in range(n) if not removed[u]), key=lambda u: (degree[u], u))
        order.append(v)
        removed[v] = True
        for u in neighbors[v]:
            if not removed[u]:
                degree[u] -= 1
    return order


def maximal_cliques(g: StabilityGraph) -> list:
    """Sampled pretangent spaces: the maximal cliques with their metrics."""
    if g.vertex_count() > VERTEX_CAP:
        raise ResourceError(f"graph has {g.vertex_count()} vertices, cap is {VERTEX_CAP}")
    adj = g.neighbors()
    samples = []
    for clique in bron_kerbosch(adj):
        matrix = tuple(
            tuple(0.0 if i == j else float(g.weight(i, j)) for j in clique) for i in clique
        )
        samples.append(
            PretangentSample(
                vertex_indices=clique,
                classes=tuple(g.vertices[i] for i in clique),
                matrix=matrix,
                contains_alpha0=g.alpha0_index in clique,
            )
        )
    return samples


def is_star(g: StabilityGraph) -> bool:
    """Is every edge incident to the alpha0 vertex?"""
    return all(g.alpha0_index in (i, j) for (i, j) in g.edges)


# ---------------------------------------------------------------------------
# Subsequence refinement and the embedding report


@dataclass(frozen=True, eq=False)
class RefinementReport:
    """Outcome of rebuilding the graph along a subsequence."""

    selector: Selector
    graph: StabilityGraph
    embedding: dict  # original class index -> refined class index (or None)
    commutes: bool
    max_weight_error: float
    notes: tuple


def refine_by_subsequence(
    model: MetricModel,
    pool: Sequence[PointSequence],
    r: ScalingSequence,
    selector: Selector,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    original: Optional[StabilityGraph] = None,
    extra_pool: Sequence[PointSequence] = (),
) -> RefinementReport:
    """Rebuild classes and graph for the subsequenced pool and scaling.

    The embedding maps each original class to the refined class of its
    subsequenced representative; the report checks that projecting after
    restriction agrees with embedding after projecting (on every pool
    member alive on both sides) and that converged edge weights survive
    within 2 * eps_rel.
    """
    selector.validate()
    if original is None:
        original = build_stability_graph(model, pool, r, profile)
    sub_pool = [x.subsequence(selector) for x in pool]
    sub_pool.extend(extra_pool)
    refined = build_stability_graph(model, sub_pool, r.subsequence(selector), profile)

    notes: list[str] = []
    embedding: dict = {original.alpha0_index: refined.alpha0_index}
    for orig_ci in range(original.vertex_count()):
        if orig_ci == original.alpha0_index:
            continue
        pool_positions = [
            pos for pos, ci in original.class_of_pool_index.items() if ci == orig_ci
        ]
        refined_targets = {
            refined.class_of_pool_index.get(pos) for pos in pool_positions
        }
        refined_targets.discard(None)
        if not refined_targets:
            embedding[orig_ci] = None
            notes.append(f"class {orig_ci} has no surviving members after refinement")
        elif len(refined_targets) > 1:
            embedding[orig_ci] = None
            notes.append(f"class {orig_ci} splits after refinement: {sorted(refined_targets)}")
        else:
            embedding[orig_ci] = refined_targets.pop()

    commutes = all(v is not None for v in embedding.values())
    for pos, orig_ci in original.class_of_pool_index.items():
        target = refined.class_of_pool_index.get(pos)
        if target is None:
            commutes = False
            notes.append(f"pool member {pos} dropped after refinement")
        elif embedding.get(orig_ci) != target:
            commutes = False
            notes.append(f"pool member {pos} lands off the embedding image")

    max_err = 0.0
    for (i, j), w in original.edges.items():
        a, b = embedding.get(i), embedding.get(j)
        if a is None or b is None:
            continue
        w2 = refined.weight(a, b)
        if w2 is None:
            max_err = math.inf
            notes.append(f"edge ({i},{j}) lost under refinement")
        else:
            max_err = max(max_err, abs(w2 - w))
    return RefinementReport(
        selector=selector,
        graph=refined,
        embedding=embedding,
        commutes=commutes,
        max_weight_error=max_err,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Tangency probing


@dataclass(frozen=True, eq=False)
class TangencyOutcome:
    kind: str  # "no_counterexample" | "witness" | "undetermined"
    selector: Optional[Selector] = None
    extending_class: Optional[SeqClass] = None
    extending_d_tilde: Optional[float] = None
    note: str = ""

    @property
    def is_witness(self) -> bool:
        return self.kind == "witness"


def tangency_probe(
    model: MetricModel,
    pool: Sequence[PointSequence],
    r: ScalingSequence,
    clique: PretangentSample,
    selectors: Optional[Sequence[Selector]] = None,
    extra_probes: Optional[Callable[[Selector], Sequence[PointSequence]]] = None,
    profile: ToleranceProfile = DEFAULT_PROFILE,
) -> TangencyOutcome:
    """Search for a subsequence under which the clique stops being maximal.

    Every battery selector refines the graph (pool enlarged by the probe
    generator's sequences); a refined vertex adjacent to the whole image of
    the clique is a witness against tangency.  Exhausting the battery yields
    NoCounterexample, which is explicitly battery-relative: the definition
    quantifies over all strictly increasing index sequences.
    """
    if selectors is None:
        selectors = selector_battery()
    original = build_stability_graph(model, pool, r, profile)
    undetermined_notes: list[str] = []
    for selector in selectors:
        probes = list(extra_probes(selector)) if extra_probes is not None else []
        report = refine_by_subsequence(
            model, pool, r, selector, profile, original=original, extra_pool=probes
        )
        image = []
        broken = False
        for ci in clique.vertex_indices:
            target = report.embedding.get(ci)
            if target is None:
                undetermined_notes.append(
                    f"{selector.name}: clique vertex {ci} lost under refinement"
                )
                broken = True
                break
            image.append(target)
        if broken:
            continue
        refined = report.graph
        image_set = set(image)
        adj = refined.neighbors()
        if any(
            j not in adj[i] for i in image_set for j in image_set if i < j
        ):
            undetermined_notes.append(f"{selector.name}: clique image is not a clique")
            continue
        for w in range(refined.vertex_count()):
            if w in image_set:
                continue
            if image_set <= adj[w]:
                cls = refined.vertices[w]
                return TangencyOutcome(
                    kind="witness",
                    selector=selector,
                    extending_class=cls,
                    extending_d_tilde=cls.d_tilde,
                    note=f"vertex with normalized distance {cls.d_tilde:.6g} extends the image",
                )
    if undetermined_notes:
        return TangencyOutcome(kind="undetermined", note="; ".join(undetermined_notes))
    return TangencyOutcome(
        kind="no_counterexample",
        note="battery exhausted without extension (battery-relative)",
    )


# ---------------------------------------------------------------------------
# Escaping witnesses


def two_point_witness(
    model: MetricModel,
    profile: ToleranceProfile = DEFAULT_PROFILE,
    max_shells: int = 200,
) -> tuple:
    """A scaling sequence and escaping sequence realizing a two-point sample.

    Scans geometric annuli for points, sets r_n to their distances (a normal
    scaling sequence by construction: nondecreasing, realized inside the
    distance set), and returns the sampled two-point space containing the
    zero class.  A model with no points beyond some shell is rejected.
    """
    shell_points: list = []
    shell_dists: list = []
    k = 0
    empty_run = 0
    while len(shell_points) < max_shells and empty_run <= 64:
        lo = LogValue.from_log2(float(k))
        hi = LogValue.from_log2(float(k + 1))
        res = model.annulus(lo, hi, cap=4)
        if res.points:
            x = res.points[0]
            shell_points.append(x)
            shell_dists.append(model.d_p(x))
            empty_run = 0
        else:
            empty_run += 1
        k += 1
    if len(shell_points) < 8:
        raise InputError(
            f"model {model.name!r} looks bounded: only {len(shell_points)} occupied shells"
        )

    count = len(shell_points)
    # Beyond the scanned shells the rules plateau; the local profile below
    # keeps every decision inside the scanned range.
    x = PointSequence(f"escape[{model.name}]", lambda n: shell_points[min(n - 1, count - 1)], escapes=True)
    r = ScalingSequence(
        f"shell[{model.name}]",
        lambda n: shell_dists[min(n - 1, count - 1)],
        eventually_increasing=True,
        divergent_hint=True,
    )
    local = profile.with_overrides(prefix_length=min(profile.prefix_length, count))
    graph = build_stability_graph(model, [x], r, local)
    samples = [s for s in maximal_cliques(graph) if s.size() >= 2]
    if not samples:
        raise InputError(f"model {model.name!r} produced no two-point sample")
    return r, x, samples[0]
