"""Search engines for lower bounds: tabu search and a DFS decision procedure.

``tabu_search`` recolors one edge at a time, always taking the best move whose
resulting coloring has not been visited recently (visited colorings are kept as
64-bit hashes).  ``dfs_decide`` settles the two-color problems exactly by
backtracking over edges with unit propagation on the forbidden copies.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .graphs import (
    ColoredCompleteGraph,
    canonical_form,
    edge_index,
    edge_pairs,
    hash64,
    normalize_colors,
    num_edges,
)
from .patterns import CopyChecker, copy_table, score
from .problems import ColorRegime, ProblemSpec, Variant


@dataclass
class TabuConfig:
    n: int
    c_max: Optional[int] = None
    max_iters: int = 100_000
    tabu_capacity: int = 1_000_000
    seed: int = 0
    restarts: int = 1


@dataclass
class SearchTrace:
    seed: int
    restart: int
    initial: tuple[int, ...]
    scores: list[int] = field(default_factory=list)
    edges: list[int] = field(default_factory=list)
    colors: list[int] = field(default_factory=list)
    final: Optional[tuple[int, ...]] = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "score", "edge", "color"])
            for it, (s, e, c) in enumerate(zip(self.scores, self.edges, self.colors), 1):
                w.writerow([it, s, e, c])


@dataclass
class TabuResult:
    witness: Optional[ColoredCompleteGraph]
    traces: list[SearchTrace]

    @property
    def found(self) -> bool:
        return self.witness is not None


def default_c_max(problem: ProblemSpec, n: int) -> int:
    """Two classes for two-color problems, |E(H)|-1 for CR, n-1 for ER."""
    if problem.regime is ColorRegime.TWO:
        return 2
    if problem.variant is Variant.CR:
        return max(1, problem.h.num_edges - 1)
    return max(2, n - 1)


class _Scorer:
    """Copies of every forbidden structure, indexed by host edge."""

    def __init__(self, problem: ProblemSpec, n: int):
        self.units: list[tuple[Callable, tuple[int, ...]]] = []
        for pk in problem.forbidden:
            chk = CopyChecker(pk)
            for _, idx, _ in copy_table(pk.pattern, n):
                self.units.append((chk, idx))
        for aux in problem.auxiliary:
            if aux.n > n:
                continue
            target = canonical_form(aux.normalized(), problem.symmetry).colors
            test = _aux_test(aux.n, target, problem.symmetry)
            for sub in itertools.combinations(range(n), aux.n):
                idx = tuple(edge_index(a, b, n) for a, b in itertools.combinations(sub, 2))
                self.units.append((test, idx))
        self.by_edge: list[list[int]] = [[] for _ in range(num_edges(n))]
        for u, (_, idx) in enumerate(self.units):
            for e in set(idx):
                self.by_edge[e].append(u)

    def status(self, colors: Sequence[int]) -> list[bool]:
        return [test(tuple(colors[i] for i in idx)) for test, idx in self.units]

    def delta(self, colors: list[int], status: list[bool], e: int, c: int) -> int:
        old = colors[e]
        colors[e] = c
        d = 0
        for u in self.by_edge[e]:
            test, idx = self.units[u]
            d += test(tuple(colors[i] for i in idx)) - status[u]
        colors[e] = old
        return d


def _aux_test(k: int, target: tuple[int, ...], sym):
    cache: dict = {}

    def test(cols):
        key = normalize_colors(cols)
        hit = cache.get(key)
        if hit is None:
            hit = canonical_form(ColoredCompleteGraph(k, key), sym).colors == target
            cache[key] = hit
        return hit

    return test


def _one_restart(problem, cfg, c_max, scorer, rng, restart) -> tuple[Optional[tuple[int, ...]], SearchTrace]:
    E = num_edges(cfg.n)
    colors = [int(x) for x in rng.integers(0, c_max, size=E)]
    trace = SearchTrace(cfg.seed, restart, tuple(colors))
    status = scorer.status(colors)
    cur = sum(status)
    tabu_q: deque[int] = deque()
    tabu_s: set[int] = set()

    def push(h):
        if h in tabu_s:
            return
        tabu_q.append(h)
        tabu_s.add(h)
        while len(tabu_q) > cfg.tabu_capacity:
            tabu_s.discard(tabu_q.popleft())

    push(hash64(normalize_colors(colors)))
    if cur == 0:
        trace.final = tuple(colors)
        return trace.final, trace
    for _ in range(cfg.max_iters):
        moves = []
        for e in range(E):
            for c in range(c_max):
                if c != colors[e]:
                    moves.append((scorer.delta(colors, status, e, c), e, c))
        moves.sort()
        chosen = None
        for d, e, c in moves:
            old = colors[e]
            colors[e] = c
            h = hash64(normalize_colors(colors))
            colors[e] = old
            if h not in tabu_s:
                chosen = (d, e, c, h)
                break
        if chosen is None:
            break  # every neighbour is tabu
        d, e, c, h = chosen
        colors[e] = c
        for u in scorer.by_edge[e]:
            test, idx = scorer.units[u]
            status[u] = test(tuple(colors[i] for i in idx))
        cur += d
        push(h)
        trace.scores.append(cur)
        trace.edges.append(e)
        trace.colors.append(c)
        if cur == 0:
            trace.final = tuple(colors)
            return trace.final, trace
    trace.final = tuple(colors)
    return None, trace


def tabu_search(problem: ProblemSpec, cfg: TabuConfig) -> TabuResult:
    """Restarts run one after another; the first one reaching score 0 wins."""
    if cfg.n < 2:
        raise ValueError("tabu search needs n >= 2")
    c_max = cfg.c_max or default_c_max(problem, cfg.n)
    if problem.regime is ColorRegime.TWO and c_max > 2:
        raise ValueError("two-color problems allow at most 2 classes")
    scorer = _Scorer(problem, cfg.n)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    traces = []
    for r, ss in enumerate(seeds):
        found, trace = _one_restart(problem, cfg, c_max, scorer, np.random.default_rng(ss), r)
        traces.append(trace)
        if found is not None:
            g = ColoredCompleteGraph(cfg.n, normalize_colors(found))
            assert score(g, problem) == 0
            return TabuResult(g, traces)
    return TabuResult(None, traces)


# --------------------------------------------------------------------------
# exact decision for two-color problems


@dataclass
class DfsResult:
    status: str  # "feasible", "infeasible" or "indeterminate"
    witness: Optional[ColoredCompleteGraph]
    nodes: int

    @property
    def feasible(self) -> Optional[bool]:
        return {"feasible": True, "infeasible": False}.get(self.status)


def _edge_order(n: int) -> list[int]:
    """Row-major edge indices, shortest edges (j - i) first."""
    pairs = sorted(edge_pairs(n), key=lambda ij: (ij[1] - ij[0], ij[0]))
    return [edge_index(i, j, n) for i, j in pairs]


def dfs_decide(problem: ProblemSpec, n: int, node_budget: int | None = None) -> DfsResult:
    """Is there a 2-coloring of K_n with no forbidden monochromatic copy?

    Backtracking over edges with edge (0,1) fixed to class 0.  After every
    assignment, a copy with all but one edge in one class forces the last edge
    into the other class; a fully monochromatic copy is a conflict.  The next
    edge is the one whose still-possible monochromatic copies are closest to
    complete.  ``nodes`` counts decisions and flips.
    """
    if problem.regime is not ColorRegime.TWO:
        raise ValueError("dfs_decide handles two-color problems only")
    if any(pk.kind.value != "mono" for pk in problem.forbidden) or problem.auxiliary:
        raise ValueError("dfs_decide handles monochromatic constraints only")
    if n <= 1:
        g = ColoredCompleteGraph(1, ())
        return DfsResult("feasible" if score(g, problem) == 0 else "infeasible", g if score(g, problem) == 0 else None, 1)
    E = num_edges(n)
    copies = [idx for pk in problem.forbidden for _, idx, _ in copy_table(pk.pattern, n)]
    occ: list[list[int]] = [[] for _ in range(E)]
    for r, idx in enumerate(copies):
        for e in idx:
            occ[e].append(r)
    size = [len(idx) for idx in copies]
    cnt = [[0] * len(copies), [0] * len(copies)]
    col = [-1] * E
    trail: list[int] = []
    decisions: list[tuple[int, int, bool]] = []  # (edge, trail length, flipped)
    order = _edge_order(n)
    nodes = 0

    def assign(e: int, c: int) -> None:
        col[e] = c
        trail.append(e)
        row = cnt[c]
        for r in occ[e]:
            row[r] += 1

    def propagate(head: int) -> bool:
        while head < len(trail):
            e = trail[head]
            head += 1
            c = col[e]
            mine, other = cnt[c], cnt[1 - c]
            for r in occ[e]:
                if mine[r] == size[r]:
                    return False
                if mine[r] == size[r] - 1 and other[r] == 0:
                    f = next(f for f in copies[r] if col[f] < 0)
                    assign(f, 1 - c)
        return True

    weight = [2.0 ** -k for k in range(max(size, default=0) + 1)]

    def pick() -> Optional[int]:
        # the edge whose copies are closest to monochromatic; ties by short edges first
        best, best_e = -1.0, None
        c0, c1 = cnt
        for f in order:
            if col[f] >= 0:
                continue
            sc = 0.0
            for r in occ[f]:
                if c1[r] == 0:
                    sc += weight[size[r] - c0[r]]
                if c0[r] == 0:
                    sc += weight[size[r] - c1[r]]
            if sc > best:
                best, best_e = sc, f
        return best_e

    assign(edge_index(0, 1, n), 0)  # color swap symmetry
    ok = propagate(0)
    while True:
        if not ok:
            while decisions and decisions[-1][2]:
                decisions.pop()
            if not decisions:
                return DfsResult("infeasible", None, nodes)
            e, mark, _ = decisions.pop()
            while len(trail) > mark:
                f = trail.pop()
                row = cnt[col[f]]
                for r in occ[f]:
                    row[r] -= 1
                col[f] = -1
            decisions.append((e, mark, True))
            nodes += 1
            assign(e, 1)
            ok = propagate(len(trail) - 1)
            continue
        e = pick()
        if e is None:
            break
        nodes += 1
        if node_budget is not None and nodes > node_budget:
            return DfsResult("indeterminate", None, nodes)
        decisions.append((e, len(trail), False))
        assign(e, 0)
        ok = propagate(len(trail) - 1)
    g = ColoredCompleteGraph(n, normalize_colors(col))
    assert score(g, problem) == 0
    return DfsResult("feasible", g, nodes)



def dfs_value(problem: ProblemSpec, n_max: int = 30, node_budget: int | None = None) -> tuple[Optional[int], list[DfsResult]]:
    """Smallest n with no feasible coloring, scanning n = 1, 2, ..."""
    results = []
    for n in range(1, n_max + 1):
        r = dfs_decide(problem, n, node_budget)
        results.append(r)
        if r.status == "infeasible":
            return n, results
        if r.status == "indeterminate":
            return None, results
    return None, results
