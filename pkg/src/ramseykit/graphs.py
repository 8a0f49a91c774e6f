"""Colored complete graphs, patterns, canonical forms and the on-disk graph format.

Edges of K_n are indexed once, globally, in row-major pair order
(0,1),(0,2),...,(0,n-1),(1,2),...,(n-2,n-1).  Colors are dense non-negative
integers normalized by first occurrence, so two colorings that differ only by a
renaming of the color classes have the same sequence.  The reserved value
``NONEDGE`` marks a missing edge (used by the flag-algebra code only).
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

NONEDGE = -1


class Symmetry(Enum):
    ORDERED = "ordered"
    UNORDERED = "unordered"


class GraphFormatError(ValueError):
    pass


def num_edges(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> int:
    """Row-major index of the pair {i, j} (0-based vertices) in K_n."""
    if i > j:
        i, j = j, i
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


@lru_cache(maxsize=None)
def edge_pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def normalize_colors(colors: Iterable[int]) -> tuple[int, ...]:
    """Relabel color ids by order of first occurrence, starting at 0.

    ``NONEDGE`` entries are kept as they are.
    """
    relabel: dict[int, int] = {}
    out = []
    for c in colors:
        if c == NONEDGE:
            out.append(NONEDGE)
            continue
        lab = relabel.get(c)
        if lab is None:
            lab = relabel[c] = len(relabel)
        out.append(lab)
    return tuple(out)


def is_normalized(colors: Sequence[int]) -> bool:
    return first_unnormalized_position(colors) is None


def first_unnormalized_position(colors: Sequence[int]) -> int | None:
    nxt = 0
    for pos, c in enumerate(colors):
        if c == NONEDGE:
            continue
        if c > nxt or c < 0:
            return pos
        if c == nxt:
            nxt += 1
    return None


@dataclass(frozen=True)
class ColoredCompleteGraph:
    """A complete graph on ``n`` ordered slots with a colorblind edge partition."""

    n: int
    colors: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a colored complete graph needs at least one vertex")
        if not isinstance(self.colors, tuple):
            object.__setattr__(self, "colors", tuple(self.colors))
        if len(self.colors) != num_edges(self.n):
            raise ValueError(
                f"expected {num_edges(self.n)} edge colors for n={self.n}, got {len(self.colors)}"
            )

    @classmethod
    def from_matrix(cls, mat: Sequence[Sequence[int]], normalize: bool = True) -> "ColoredCompleteGraph":
        n = len(mat)
        cols = [mat[i][j] for i, j in edge_pairs(n)]
        return cls(n, normalize_colors(cols) if normalize else tuple(cols))

    @classmethod
    def monochromatic(cls, n: int) -> "ColoredCompleteGraph":
        return cls(n, (0,) * num_edges(n))

    @classmethod
    def rainbow(cls, n: int) -> "ColoredCompleteGraph":
        return cls(n, tuple(range(num_edges(n))))

    def color(self, i: int, j: int) -> int:
        return self.colors[edge_index(i, j, self.n)]

    def matrix(self) -> list[list[int]]:
        n = self.n
        mat = [[NONEDGE] * n for _ in range(n)]
        for (i, j), c in zip(edge_pairs(n), self.colors):
            mat[i][j] = mat[j][i] = c
        return mat

    @property
    def num_classes(self) -> int:
        return len({c for c in self.colors if c != NONEDGE})

    def normalized(self) -> "ColoredCompleteGraph":
        return ColoredCompleteGraph(self.n, normalize_colors(self.colors))

    def is_normalized(self) -> bool:
        return is_normalized(self.colors)

    def has_nonedges(self) -> bool:
        return NONEDGE in self.colors

    def induced(self, vertices: Sequence[int]) -> "ColoredCompleteGraph":
        """Subgraph on ``vertices``, relabeled 0..k-1 in the given order (not normalized)."""
        k = len(vertices)
        if k == 1:
            return ColoredCompleteGraph(1, ())
        n = self.n
        cols = tuple(
            self.colors[edge_index(vertices[a], vertices[b], n)] for a, b in edge_pairs(k)
        )
        return ColoredCompleteGraph(k, cols)

    def permuted(self, perm: Sequence[int]) -> "ColoredCompleteGraph":
        """Graph whose vertex ``a`` is vertex ``perm[a]`` of this graph."""
        return self.induced(perm)

    def remove_last_vertex(self) -> "ColoredCompleteGraph":
        return self.induced(range(self.n - 1)).normalized()

    def __str__(self) -> str:
        return serialize_graph(self)


@dataclass(frozen=True)
class CanonicalKey:
    colors: tuple[int, ...]
    hash64: int = field(compare=False)

    @classmethod
    def of(cls, colors: tuple[int, ...]) -> "CanonicalKey":
        return cls(colors, hash64(colors))


def hash64(colors: Sequence[int]) -> int:
    data = ",".join(map(str, colors)).encode()
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


# --------------------------------------------------------------------------
# canonical forms


def canonical_relabeling(mat: Sequence[Sequence[int]], fixed: int = 0) -> list[int]:
    """Vertex order whose colex color sequence is lexicographically minimal.

    The minimum is taken over all vertex orders that keep vertices
    ``0..fixed-1`` in place; color ids are renamed by first occurrence along
    the way, so the result is invariant under renaming.  Depth-first search
    with prefix pruning against the best image; siblings lying in one orbit of
    the automorphisms discovered so far (fixing the current prefix) are skipped.
    """
    n = len(mat)
    if n <= 1:
        return list(range(n))
    best_img: list[int] | None = None
    best_perm: list[int] = []
    autos: list[list[int]] = []
    perm: list[int] = []
    used = [False] * n
    img: list[int] = []

    def orbit_roots(cands: list[int]) -> dict[int, int]:
        parent = {v: v for v in cands}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in autos:
            if all(g[q] == q for q in perm):
                for v in cands:
                    w = g[v]
                    if w in parent:
                        a, b = find(v), find(w)
                        if a != b:
                            parent[max(a, b)] = min(a, b)
        return {v: find(v) for v in cands}

    version = 0

    def rec(p: int, labmap: dict[int, int], tight: bool):
        nonlocal best_img, best_perm, version
        if p == n:
            if best_img is None or not tight:
                best_img = img.copy()
                best_perm = perm.copy()
                version += 1
            else:
                g = [0] * n
                for a in range(n):
                    g[perm[a]] = best_perm[a]
                autos.append(g)
            return
        cands = [p] if p < fixed else [v for v in range(fixed, n) if not used[v]]
        tried: list[int] = []
        start = p * (p - 1) // 2
        for v in cands:
            if autos and tried:
                roots = orbit_roots(cands)
                if any(roots[u] == roots[v] for u in tried):
                    continue
            lm = labmap
            row = []
            copied = False
            for q in range(p):
                c = mat[perm[q]][v]
                if c == NONEDGE:
                    row.append(NONEDGE)
                    continue
                lab = lm.get(c)
                if lab is None:
                    if not copied:
                        lm = dict(lm)
                        copied = True
                    lab = lm[c] = len(lm)
                row.append(lab)
            tried.append(v)
            now_tight = tight
            if tight and best_img is not None:
                seg = best_img[start:start + p]
                if row > seg:
                    continue
                if row < seg:
                    now_tight = False
            perm.append(v)
            used[v] = True
            img.extend(row)
            before = version
            rec(p + 1, lm, now_tight)
            del img[len(img) - len(row):]
            used[v] = False
            perm.pop()
            if version != before:
                # the new best extends the current prefix
                tight = True

    rec(0, {}, True)
    return best_perm


def canonical_form(g: ColoredCompleteGraph, sym: Symmetry, fixed: int = 0) -> CanonicalKey:
    """Canonical key of ``g`` under ``sym``; equal keys iff isomorphic graphs."""
    if sym is Symmetry.ORDERED or g.n <= 1:
        return CanonicalKey.of(normalize_colors(g.colors))
    mat = g.matrix()
    perm = canonical_relabeling(mat, fixed)
    cols = [mat[perm[a]][perm[b]] for a, b in edge_pairs(g.n)]
    return CanonicalKey.of(normalize_colors(cols))


def canonical_graph(g: ColoredCompleteGraph, sym: Symmetry) -> ColoredCompleteGraph:
    return ColoredCompleteGraph(g.n, canonical_form(g, sym).colors)


# --------------------------------------------------------------------------
# text format


def serialize_graph(g: ColoredCompleteGraph) -> str:
    toks = [str(g.n), str(g.num_classes)]
    toks.extend("x" if c == NONEDGE else str(c) for c in g.colors)
    return " ".join(toks)


def parse_graph(line: str) -> ColoredCompleteGraph:
    """Parse ``n k c_1 ... c_{n(n-1)/2}``; ``x`` marks a non-edge."""
    toks = line.split()
    if len(toks) < 2:
        raise GraphFormatError(f"graph line needs at least 'n k': {line!r}")
    try:
        n, k = int(toks[0]), int(toks[1])
        cols = tuple(NONEDGE if t == "x" else int(t) for t in toks[2:])
    except ValueError as exc:
        raise GraphFormatError(f"non-integer token in graph line {line!r}") from exc
    if n < 1:
        raise GraphFormatError(f"vertex count must be >= 1, got {n}")
    if len(cols) != num_edges(n):
        raise GraphFormatError(
            f"expected {num_edges(n)} colors for n={n}, got {len(cols)}"
        )
    pos = first_unnormalized_position(cols)
    if pos is not None:
        seen = {c for c in cols[:pos] if c != NONEDGE}
        missing = min(set(range(cols[pos])) - seen) if cols[pos] > 0 else None
        detail = f"id {cols[pos]} appears before id {missing}" if missing is not None else f"bad id {cols[pos]}"
        raise GraphFormatError(f"colors not normalized at position {pos}: {detail}")
    real = len({c for c in cols if c != NONEDGE})
    if real != k:
        raise GraphFormatError(f"header says {k} color classes, found {real}")
    return ColoredCompleteGraph(n, cols)


def write_level(path, problem_id: str, n: int, graphs: Sequence[ColoredCompleteGraph]) -> None:
    with open(path, "w") as fh:
        fh.write(f"# problem={problem_id} level={n} count={len(graphs)}\n")
        for g in graphs:
            fh.write(serialize_graph(g) + "\n")


def read_level(path) -> tuple[dict[str, str], list[ColoredCompleteGraph]]:
    header: dict[str, str] = {}
    graphs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        header[key] = val
                continue
            graphs.append(parse_graph(line))
    if "count" in header and int(header["count"]) != len(graphs):
        raise GraphFormatError(f"{path}: header count {header['count']} but {len(graphs)} graphs")
    return header, graphs


# --------------------------------------------------------------------------
# patterns


@dataclass(frozen=True)
class GraphPattern:
    """Target graph on vertices 0..m-1; if ``ordered`` the labels carry the order."""

    m: int
    edges: tuple[tuple[int, int], ...]
    ordered: bool = False
    name: str = ""

    def __post_init__(self):
        norm = []
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if not (0 <= u < self.m and 0 <= v < self.m):
                raise ValueError(f"edge ({u},{v}) outside 0..{self.m - 1}")
            norm.append((min(u, v), max(u, v)))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate edge in pattern")
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def from_code(cls, m: int, bits: str, ordered: bool = True, name: str = "") -> "GraphPattern":
        """Pattern from a 0/1 string over the row-major pairs of K_m."""
        pairs = edge_pairs(m)
        if len(bits) != len(pairs):
            raise ValueError(f"code {bits!r} must have {len(pairs)} bits for m={m}")
        edges = tuple(p for p, b in zip(pairs, bits) if b == "1")
        return cls(m, edges, ordered, name or bits)

    @classmethod
    def complete(cls, p: int, ordered: bool = False) -> "GraphPattern":
        return cls(p, edge_pairs(p), ordered, f"K{p}")

    @classmethod
    def cycle(cls, k: int, ordered: bool = False) -> "GraphPattern":
        return cls(k, tuple((i, (i + 1) % k) for i in range(k)), ordered, f"C{k}")

    @classmethod
    def complete_bipartite(cls, a: int, b: int) -> "GraphPattern":
        return cls(a + b, tuple((i, a + j) for i in range(a) for j in range(b)), False, f"K{a}{b}")

    def with_order(self, ordered: bool) -> "GraphPattern":
        return GraphPattern(self.m, self.edges, ordered, self.name)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> list[int]:
        return [b if a == v else a for a, b in self.edges if v in (a, b)]

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    def is_complete(self) -> bool:
        return self.num_edges == num_edges(self.m)

    def is_cycle(self) -> bool:
        if self.m < 3 or self.num_edges != self.m:
            return False
        if any(self.degree(v) != 2 for v in range(self.m)):
            return False
        seen, stack = {0}, [0]
        while stack:
            v = stack.pop()
            for u in self.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.m

    def automorphisms(self) -> list[tuple[int, ...]]:
        return _automorphisms(self.m, self.edges, self.ordered)

    def code(self) -> str:
        es = set(self.edges)
        return "".join("1" if p in es else "0" for p in edge_pairs(self.m))

    def __str__(self) -> str:
        return self.name or f"G({self.m};{self.edges})"


@lru_cache(maxsize=None)
def _automorphisms(m: int, edges: tuple, ordered: bool) -> list[tuple[int, ...]]:
    if ordered:
        return [tuple(range(m))]
    es = set(edges)
    out = []
    for p in itertools.permutations(range(m)):
        if all((min(p[a], p[b]), max(p[a], p[b])) in es for a, b in edges):
            out.append(p)
    return out


@lru_cache(maxsize=None)
def _copy_representatives(m: int, edges: tuple, ordered: bool) -> tuple[tuple[int, ...], ...]:
    """Permutations of [m] giving each distinct labeled copy on a fixed m-set once."""
    if ordered:
        return (tuple(range(m)),)
    reps: dict[frozenset, tuple[int, ...]] = {}
    for p in itertools.permutations(range(m)):
        img = frozenset((min(p[a], p[b]), max(p[a], p[b])) for a, b in edges)
        reps.setdefault(img, p)
    return tuple(reps.values())


def embeddings(pattern: GraphPattern, n: int) -> Iterator[tuple[int, ...]]:
    """Copies of ``pattern`` in K_n as vertex maps ``phi`` (``phi[u]`` = host vertex).

    Ordered patterns: every strictly increasing injection.  Unordered patterns:
    every subgraph copy exactly once (injections modulo pattern automorphisms).
    """
    m = pattern.m
    if m > n:
        return
    reps = _copy_representatives(m, pattern.edges, pattern.ordered)
    for subset in itertools.combinations(range(n), m):
        for p in reps:
            yield tuple(subset[p[u]] for u in range(m))


def count_copies(pattern: GraphPattern, n: int) -> int:
    if pattern.m > n:
        return 0
    reps = _copy_representatives(pattern.m, pattern.edges, pattern.ordered)
    return math.comb(n, pattern.m) * len(reps)
