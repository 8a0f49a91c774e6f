"""Detectors for forbidden colored copies and the scoring function.

A copy of a pattern in a host is described by the tuple of host edge indices
aligned with ``pattern.edges``; all per-copy tests work on the tuple of colors
read at those indices ("local colors").
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

from .graphs import (
    NONEDGE,
    ColoredCompleteGraph,
    GraphPattern,
    Symmetry,
    canonical_form,
    edge_index,
    embeddings,
    normalize_colors,
)


class Kind(Enum):
    MONOCHROMATIC = "mono"
    RAINBOW = "rainbow"
    CANONICAL = "canonical"
    ORDERABLE = "orderable"


@dataclass(frozen=True)
class PatternKind:
    """One forbidden structure: ``kind`` copies of ``pattern``."""

    kind: Kind
    pattern: GraphPattern

    def __post_init__(self):
        if self.kind is Kind.CANONICAL and not self.pattern.ordered:
            raise ValueError("canonical copies need an ordered pattern")

    def __str__(self) -> str:
        return f"{self.kind.value} {self.pattern}"


# --------------------------------------------------------------------------
# per-copy tests on local colors


def is_monochromatic(cols: Sequence[int]) -> bool:
    return len(set(cols)) <= 1


def is_rainbow(cols: Sequence[int]) -> bool:
    return len(set(cols)) == len(cols)


def _is_lex(groups: Sequence[int], cols: Sequence[int]) -> bool:
    """Colors equal exactly when the group labels are equal."""
    color_of: dict[int, int] = {}
    group_of: dict[int, int] = {}
    for g, c in zip(groups, cols):
        if color_of.setdefault(g, c) != c:
            return False
        if group_of.setdefault(c, g) != g:
            return False
    return True


def is_lower_lex(pattern: GraphPattern, cols: Sequence[int]) -> bool:
    return _is_lex([a for a, _ in pattern.edges], cols)


def is_upper_lex(pattern: GraphPattern, cols: Sequence[int]) -> bool:
    return _is_lex([b for _, b in pattern.edges], cols)


def is_canonically_colored(pattern: GraphPattern, cols: Sequence[int]) -> bool:
    """Monochromatic, rainbow, lower- or upper-lexicographic copy of an ordered pattern."""
    return (
        is_monochromatic(cols)
        or is_rainbow(cols)
        or is_lower_lex(pattern, cols)
        or is_upper_lex(pattern, cols)
    )


def is_orderable(pattern: GraphPattern, cols: Sequence[int]) -> Optional[list[int]]:
    """Greedy elimination; returns a witness vertex order or None.

    A vertex whose remaining incident edges all share one color can go first;
    removing it keeps every orderable coloring orderable, so the greedy choice
    never needs to backtrack.
    """
    m = pattern.m
    inc: list[list[tuple[int, int]]] = [[] for _ in range(m)]
    for (a, b), c in zip(pattern.edges, cols):
        inc[a].append((b, c))
        inc[b].append((a, c))
    alive = [True] * m
    order: list[int] = []
    progress = True
    while progress and len(order) < m:
        progress = False
        for v in range(m):
            if not alive[v]:
                continue
            seen = {c for u, c in inc[v] if alive[u]}
            if len(seen) <= 1:
                alive[v] = False
                order.append(v)
                progress = True
    return order if len(order) == m else None


def is_orderable_bruteforce(pattern: GraphPattern, cols: Sequence[int]) -> Optional[tuple[int, ...]]:
    """Reference check over all m! vertex orders."""
    col = {e: c for e, c in zip(pattern.edges, cols)}
    for order in itertools.permutations(range(pattern.m)):
        pos = {v: i for i, v in enumerate(order)}
        lead: dict[int, int] = {}
        ok = True
        for (a, b), c in col.items():
            first = a if pos[a] < pos[b] else b
            if lead.setdefault(first, c) != c:
                ok = False
                break
        if ok:
            return order
    return None


def check_witness(pattern: GraphPattern, cols: Sequence[int], order: Sequence[int]) -> bool:
    """For every vertex, its edges to later vertices share one color."""
    pos = {v: i for i, v in enumerate(order)}
    lead: dict[int, int] = {}
    for (a, b), c in zip(pattern.edges, cols):
        first = a if pos[a] < pos[b] else b
        if lead.setdefault(first, c) != c:
            return False
    return True


def strip_low_degree(pattern: GraphPattern, cols: Sequence[int]) -> tuple[GraphPattern, tuple[int, ...]]:
    """Recursively delete vertices of degree at most one."""
    edges = list(zip(pattern.edges, cols))
    alive = set(range(pattern.m))
    changed = True
    while changed:
        changed = False
        deg = Counter()
        for (a, b), _ in edges:
            deg[a] += 1
            deg[b] += 1
        for v in sorted(alive):
            if deg[v] <= 1:
                alive.discard(v)
                edges = [(e, c) for e, c in edges if v not in e]
                changed = True
                break
    keep = sorted(alive)
    relabel = {v: i for i, v in enumerate(keep)}
    new_edges = tuple((relabel[a], relabel[b]) for (a, b), _ in edges)
    sub = GraphPattern(len(keep), new_edges, pattern.ordered)
    # GraphPattern sorts its edges; realign the colors
    cmap = {(relabel[a], relabel[b]): c for (a, b), c in edges}
    return sub, tuple(cmap[e] for e in sub.edges)


TESTS: dict[Kind, Callable[[GraphPattern, Sequence[int]], bool]] = {
    Kind.MONOCHROMATIC: lambda p, c: is_monochromatic(c),
    Kind.RAINBOW: lambda p, c: is_rainbow(c),
    Kind.CANONICAL: is_canonically_colored,
    Kind.ORDERABLE: lambda p, c: is_orderable(p, c) is not None,
}


class CopyChecker:
    """Cached per-copy test for one PatternKind, keyed by normalized local colors."""

    def __init__(self, pk: PatternKind):
        self.pk = pk
        self.edges = pk.pattern.edges
        self._test = TESTS[pk.kind]
        self._cache: dict[tuple[int, ...], bool] = {}
        self.rainbow_len = pk.pattern.num_edges if pk.kind is Kind.RAINBOW else None

    def __call__(self, cols: Sequence[int]) -> bool:
        if self.pk.kind is Kind.MONOCHROMATIC:
            c0 = cols[0]
            return all(c == c0 for c in cols)
        if self.pk.kind is Kind.RAINBOW:
            return len(set(cols)) == self.rainbow_len
        key = normalize_colors(cols)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._test(self.pk.pattern, key)
            self._cache[key] = hit
        return hit


# --------------------------------------------------------------------------
# copies in a host


@lru_cache(maxsize=None)
def copy_table(pattern: GraphPattern, n: int):
    """All copies of ``pattern`` in K_n as (vertex map, host edge indices, all-pair indices).

    The last entry lists every host pair inside the copy's vertex set; a copy
    only counts when none of those pairs is a non-edge.
    """
    out = []
    for phi in embeddings(pattern, n):
        idx = tuple(edge_index(phi[a], phi[b], n) for a, b in pattern.edges)
        clique = tuple(edge_index(a, b, n) for a, b in itertools.combinations(sorted(phi), 2))
        out.append((phi, idx, clique))
    return tuple(out)


def local_colors(host: ColoredCompleteGraph, pattern: GraphPattern, phi: Sequence[int]) -> tuple[int, ...]:
    return tuple(host.color(phi[a], phi[b]) for a, b in pattern.edges)


def iter_copies(host: ColoredCompleteGraph, pk: PatternKind, checker: CopyChecker | None = None):
    """Yield vertex maps of the copies of ``pk`` present in ``host``."""
    check = checker or CopyChecker(pk)
    cols = host.colors
    gaps = host.has_nonedges()
    for phi, idx, clique in copy_table(pk.pattern, host.n):
        if gaps and any(cols[i] == NONEDGE for i in clique):
            continue
        if check(tuple(cols[i] for i in idx)):
            yield phi


def find_copy(host: ColoredCompleteGraph, pk: PatternKind) -> Optional[tuple[int, ...]]:
    return next(iter_copies(host, pk), None)


def count_copies_of(host: ColoredCompleteGraph, pk: PatternKind) -> int:
    return sum(1 for _ in iter_copies(host, pk))


def find_monochromatic_copy(host: ColoredCompleteGraph, g: GraphPattern) -> Optional[tuple[int, ...]]:
    return find_copy(host, PatternKind(Kind.MONOCHROMATIC, g))


def find_rainbow_copy(host: ColoredCompleteGraph, h: GraphPattern) -> Optional[tuple[int, ...]]:
    if host.num_classes < h.num_edges:
        return None
    return find_copy(host, PatternKind(Kind.RAINBOW, h))


def find_canonical_copy(host: ColoredCompleteGraph, g: GraphPattern) -> Optional[tuple[int, ...]]:
    if not g.ordered:
        raise ValueError("canonical copies are defined for ordered patterns")
    return find_copy(host, PatternKind(Kind.CANONICAL, g))


# --------------------------------------------------------------------------
# specialized orderability criteria


class OrderabilityKind(Enum):
    CYCLE = "cycle"
    K4 = "K4"
    K23 = "K23"
    L3 = "L3"
    K33MINUS = "K33minus"
    K24 = "K24"
    K33 = "K33"


def ladder3() -> GraphPattern:
    # bottom row 0,1,2 and top row 3,4,5 with three rungs
    return GraphPattern(6, ((0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)), False, "L3")


def k33_minus_edge() -> GraphPattern:
    edges = tuple((i, 3 + j) for i in range(3) for j in range(3) if (i, j) != (2, 2))
    return GraphPattern(6, edges, False, "K33-e")


def _same_graph(p: GraphPattern, q: GraphPattern) -> bool:
    if p.m != q.m or p.num_edges != q.num_edges:
        return False
    target = set(q.edges)
    for perm in itertools.permutations(range(p.m)):
        if all((min(perm[a], perm[b]), max(perm[a], perm[b])) in target for a, b in p.edges):
            return True
    return False


@lru_cache(maxsize=None)
def orderability_kind(pattern: GraphPattern) -> Optional[OrderabilityKind]:
    """The specialized criterion that applies to ``pattern``, if any."""
    if pattern.is_cycle():
        return OrderabilityKind.CYCLE
    if pattern.m == 4 and pattern.is_complete():
        return OrderabilityKind.K4
    named = {
        OrderabilityKind.K23: GraphPattern.complete_bipartite(2, 3),
        OrderabilityKind.L3: ladder3(),
        OrderabilityKind.K33MINUS: k33_minus_edge(),
        OrderabilityKind.K24: GraphPattern.complete_bipartite(2, 4),
        OrderabilityKind.K33: GraphPattern.complete_bipartite(3, 3),
    }
    for kind, q in named.items():
        if _same_graph(pattern.with_order(False), q):
            return kind
    return None


KIND_SIZE = {
    OrderabilityKind.K4: 4,
    OrderabilityKind.K23: 5,
    OrderabilityKind.L3: 6,
    OrderabilityKind.K33MINUS: 6,
    OrderabilityKind.K24: 6,
    OrderabilityKind.K33: 6,
}

# A criterion row is (terms, rhs): sum of coef * y_{e,f} <= rhs, where
# y_{e,f} = 1 iff host edges e < f have the same color.
Row = tuple[tuple[tuple[tuple[int, int], int], ...], int]


def _rows_builder(n: int):
    rows: dict = {}

    def y(a, b, c, d):
        if a == b or c == d:
            return None
        e, f = edge_index(a, b, n), edge_index(c, d, n)
        if e == f:
            return None
        return (e, f) if e < f else (f, e)

    def add(terms, rhs):
        coef = Counter(t for t in terms if t is not None)
        if sum(coef.values()) <= rhs:
            return  # can never be violated
        key = (tuple(sorted(coef.items())), rhs)
        rows[key] = None

    return rows, y, add


def _distinct(n: int, k: int):
    return itertools.permutations(range(n), k)


@lru_cache(maxsize=64)
def criterion_rows(
    kind: OrderabilityKind, n: int, cycle_length: int = 3, complete: bool = True
) -> tuple[Row, ...]:
    """Linear rows over pairwise color-equality indicators that forbid an orderable copy.

    Rows that can never be violated are dropped and duplicates are merged.
    The list is ordered deterministically.  ``complete=False`` omits the extra
    K(3,3)-e family that closes a gap in the four published families.
    """
    rows, y, add = _rows_builder(n)
    V = range(n)
    if kind is OrderabilityKind.CYCLE:
        if n >= cycle_length:
            for i in V:
                for j, k in itertools.combinations([v for v in V if v != i], 2):
                    add([y(i, j, i, k)], 0)
    elif kind is OrderabilityKind.K4:
        for quad in itertools.combinations(V, 4):
            for i, j in itertools.permutations(quad, 2):
                k, l = [v for v in quad if v not in (i, j)]
                add([y(i, j, i, k), y(i, j, i, l), y(i, k, i, l), y(j, k, j, l)], 3)
    elif kind is OrderabilityKind.K23:
        for a1, a2 in _distinct(n, 2):
            add([y(a1, a2, a1, b) for b in V if b not in (a1, a2)], 1)
        for a1, b1, a2, b2 in _distinct(n, 4):
            add([y(a2, a1, a2, b1), y(b2, a1, b2, b1)], 1)
        for a1, b1, a2, b2, c2 in _distinct(n, 5):
            add([y(a2, a1, a2, b1), y(a1, b2, a1, c2)], 1)
    elif kind is OrderabilityKind.L3:
        for a, b in _distinct(n, 2):
            add([y(a, b, a, c) for c in V if c not in (a, b)], 1)
        for a, b, c1, c2, d1, d2 in itertools.product(V, repeat=6):
            # a == b would let one vertex carry both pairs, which L3 cannot use
            if a != b and len({a, b, c1, c2, d1, d2}) >= 5:
                add([y(a, c1, a, c2), y(b, d1, b, d2)], 1)
    elif kind is OrderabilityKind.K33MINUS:
        for a1, b1, c1, a2, b2, c2 in _distinct(n, 6):
            star = [y(a1, a2, a1, b2), y(a1, a2, a1, c2), y(a1, b2, a1, c2)]
            add(star + [y(a2, b1, a2, c1)], 3)
            add(star + [y(c1, a2, c1, b2)], 3)
            add([y(a1, b2, a1, c2), y(a2, a1, a2, b1), y(c1, a2, c1, b2)], 2)
            add([y(a2, a1, a2, b1), y(c1, a2, c1, b2), y(c2, a1, c2, b1)], 2)
        if complete:
            # order c1, a2, b2: both right neighbours of c1 see {a1, b1} in one color
            for a1, b1, c1, a2, b2 in _distinct(n, 5):
                add([y(a2, a1, a2, b1), y(b2, a1, b2, b1), y(c1, a2, c1, b2)], 2)
    elif kind is OrderabilityKind.K24:
        for a, b in _distinct(n, 2):
            add([y(a, b, a, c) for c in V if c not in (a, b)], 2)
        for a1, b1, a2, b2 in _distinct(n, 4):
            add([y(a2, a1, a2, b1)] + [y(a1, b2, a1, c) for c in V if c not in (a1, a2, b1)], 2)
        for a1, b1 in _distinct(n, 2):
            add([y(e, a1, e, b1) for e in V if e not in (a1, b1)], 2)
        for a2, b2, a1, b1, c2, d2 in _distinct(n, 6):
            add([y(a2, a1, a2, b1), y(b2, a1, b2, b1), y(a1, c2, a1, d2)], 2)
    elif kind is OrderabilityKind.K33:
        for a1, b1, a2, b2, c2 in _distinct(n, 5):
            add([y(a1, a2, a1, b2), y(a1, a2, a1, c2), y(a1, b2, a1, c2),
                 y(b1, a2, b1, b2), y(b1, a2, b1, c2), y(b1, b2, b1, c2)], 4)
        for a1, b1, c1, a2, b2, c2 in _distinct(n, 6):
            star = [y(a1, a2, a1, b2), y(a1, a2, a1, c2), y(a1, b2, a1, c2), y(a2, b1, a2, c1)]
            add(star + [y(b1, b2, b1, c2)], 4)
            add(star + [y(b2, b1, b2, c1)], 4)
    else:
        raise ValueError(f"no criterion for {kind}")
    return tuple(sorted(rows))


def violated_rows(colors: Sequence[int], rows: Iterable[Row]) -> list[Row]:
    out = []
    for terms, rhs in rows:
        s = 0
        for (e, f), coef in terms:
            if colors[e] == colors[f]:
                s += coef
        if s > rhs:
            out.append((terms, rhs))
    return out


def _improper_vertex(host: ColoredCompleteGraph) -> Optional[tuple[int, int, int]]:
    """A vertex v with two same-colored edges vu, vw, as (u, v, w)."""
    n = host.n
    for v in range(n):
        seen: dict[int, int] = {}
        for u in range(n):
            if u == v:
                continue
            c = host.color(v, u)
            if c in seen:
                return seen[c], v, u
            seen[c] = u
    return None


def find_orderable_copy(
    host: ColoredCompleteGraph, g: GraphPattern, mode: str = "generic"
) -> Optional[tuple[int, ...]]:
    """An embedding of ``g`` whose induced coloring is orderable, or None.

    ``mode="specialized"`` decides existence with the dedicated criterion for
    ``g`` (cycles, K4 and the bipartite families) instead of testing copies.
    """
    if mode == "generic":
        return find_copy(host, PatternKind(Kind.ORDERABLE, g))
    if mode != "specialized":
        raise ValueError(f"unknown mode {mode!r}")
    kind = orderability_kind(g)
    if kind is None:
        raise ValueError(f"no specialized criterion for {g}")
    if host.n < g.m:
        return None
    if kind is OrderabilityKind.CYCLE:
        hit = _improper_vertex(host)
        if hit is None:
            return None
        u, v, w = hit
        others = [x for x in range(host.n) if x not in hit][: g.m - 3]
        # walk the pattern cycle 0-1-...-(m-1)-0 starting at v, then w, ..., u
        walk = [v, w, *others, u]
        order = [0]
        while len(order) < g.m:
            nxt = [x for x in g.neighbors(order[-1]) if x not in order]
            order.append(min(nxt))
        phi = [0] * g.m
        for slot, hv in zip(order, walk):
            phi[slot] = hv
        return tuple(phi)
    rows = criterion_rows(kind, host.n)
    if not violated_rows(host.colors, rows):
        return None
    phi = find_copy(host, PatternKind(Kind.ORDERABLE, g))
    if phi is None:
        raise RuntimeError(f"criterion for {kind.value} fired but no orderable copy exists")
    return phi


# --------------------------------------------------------------------------
# auxiliary colored graphs and scoring


def induced_key(host: ColoredCompleteGraph, vertices: Sequence[int], sym: Symmetry):
    return canonical_form(host.induced(vertices).normalized(), sym)


def count_auxiliary(host: ColoredCompleteGraph, aux: ColoredCompleteGraph, sym: Symmetry) -> int:
    """Number of vertex subsets inducing a copy of ``aux`` (under ``sym``)."""
    if aux.n > host.n:
        return 0
    target = canonical_form(aux.normalized(), sym)
    return sum(
        1
        for sub in itertools.combinations(range(host.n), aux.n)
        if induced_key(host, sub, sym).colors == target.colors
    )


def score(host: ColoredCompleteGraph, problem) -> int:
    """Total number of forbidden copies in ``host``; zero iff feasible."""
    total = 0
    for pk in problem.forbidden:
        total += count_copies_of(host, pk)
    for aux in problem.auxiliary:
        total += count_auxiliary(host, aux, problem.symmetry)
    return total


def is_feasible(host: ColoredCompleteGraph, problem) -> bool:
    if any(find_copy(host, pk) is not None for pk in problem.forbidden):
        return False
    return all(count_auxiliary(host, aux, problem.symmetry) == 0 for aux in problem.auxiliary)

