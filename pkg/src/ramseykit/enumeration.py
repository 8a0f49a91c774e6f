"""Complete enumeration of feasible colorings, one vertex at a time.

Level n holds one representative per isomorphism class (under the problem's
symmetry) of feasible colorings of K_n.  Every child at level n+1 arises from
a representative at level n by attaching vertex n and coloring the new edges
(i, n), i = 0..n-1, in that order.  Only copies of forbidden structures that
meet the new vertex are checked, each one as soon as its last new edge is
colored.
"""

from __future__ import annotations

import itertools
import logging
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .graphs import (
    NONEDGE,
    ColoredCompleteGraph,
    Symmetry,
    canonical_form,
    edge_index,
    edge_pairs,
    normalize_colors,
    num_edges,
    read_level,
    serialize_graph,
    write_level,
)
from .patterns import CopyChecker, Kind, OrderabilityKind, copy_table, is_feasible, orderability_kind
from .problems import ColorRegime, ProblemSpec

log = logging.getLogger(__name__)


class LevelLimitError(RuntimeError):
    """A level grew beyond the configured size cap."""

    def __init__(self, level: int, count: int):
        super().__init__(f"level {level} exceeded the size cap ({count} graphs so far)")
        self.level = level
        self.count = count


class BudgetExceeded(RuntimeError):
    def __init__(self, level: int):
        super().__init__(f"time budget exhausted while building level {level}")
        self.level = level


@dataclass
class LevelResult:
    n: int
    representatives: list[ColoredCompleteGraph]

    @property
    def count(self) -> int:
        return len(self.representatives)


@dataclass
class Certificate:
    """Witness(graph, n): value >= n+1.  Exhaustion(n): value <= n (level n is empty)."""

    kind: str  # "witness" or "exhaustion"
    n: int
    counts: list[int] = field(default_factory=list)
    witness: Optional[ColoredCompleteGraph] = None
    complete: bool = True

    @property
    def lower_bound(self) -> int:
        return self.n + 1 if self.kind == "witness" else self.n

    @property
    def value(self) -> Optional[int]:
        """The exact value when the run ended in an empty level."""
        return self.n if self.kind == "exhaustion" else None

    def to_text(self, problem_id: str) -> str:
        lines = [
            f"problem {problem_id}",
            f"type {self.kind}",
            f"n {self.n}",
            "counts " + " ".join(map(str, self.counts)),
            f"complete {str(self.complete).lower()}",
        ]
        if self.witness is not None:
            lines.append("witness " + serialize_graph(self.witness))
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# extension


@dataclass
class _Check:
    checker: CopyChecker
    idx: tuple[int, ...]
    clique: Optional[tuple[int, ...]]


class Extender:
    """Precomputed copy lists for extending K_n to K_{n+1}."""

    def __init__(self, problem: ProblemSpec, allow_nonedges: bool = False):
        self.problem = problem
        self.allow_nonedges = allow_nonedges
        self.checkers = {pk: CopyChecker(pk) for pk in problem.forbidden}
        self.cycle_len = None
        if problem.orderable_mode == "specialized":
            kind = orderability_kind(problem.g)
            if kind is None:
                raise ValueError(f"no specialized criterion for {problem.g}")
            if kind is OrderabilityKind.CYCLE:
                self.cycle_len = problem.g.m
        self._levels: dict[int, tuple] = {}
        self._aux_cache: dict[tuple[int, ...], bool] = {}
        self.aux_keys = {}
        for aux in problem.auxiliary:
            key = canonical_form(aux.normalized(), problem.symmetry).colors
            self.aux_keys.setdefault(aux.n, set()).add(key)

    def _level(self, n: int):
        """Tables for attaching vertex n to K_n."""
        if n in self._levels:
            return self._levels[n]
        N = n + 1
        old_to_new = [edge_index(i, j, N) for i, j in edge_pairs(n)]
        new_pos = [edge_index(i, n, N) for i in range(n)]
        triggers: list[list[_Check]] = [[] for _ in range(n + 1)]
        for pk, chk in self.checkers.items():
            if self.cycle_len is not None and pk.kind is Kind.ORDERABLE:
                continue
            for phi, idx, clique in copy_table(pk.pattern, N):
                if n not in phi:
                    continue
                others = [v for a, b in pk.pattern.edges for v in (phi[a], phi[b]) if n in (phi[a], phi[b]) and v != n]
                t = max(others) + 1 if others else 0
                if self.allow_nonedges:
                    t = max(t, max(v for v in phi if v != n) + 1)
                triggers[t].append(_Check(chk, idx, clique if self.allow_nonedges else None))
        aux_trig: list[list[tuple[int, ...]]] = [[] for _ in range(n + 1)]
        for k in self.aux_keys:
            if k > N:
                continue
            for sub in itertools.combinations(range(n), k - 1):
                vs = sub + (n,)
                aux_trig[(max(sub) + 1) if sub else 0].append(vs)
        self._levels[n] = (old_to_new, new_pos, triggers, aux_trig)
        return self._levels[n]

    def _aux_hit(self, child: list[int], N: int, vs: tuple[int, ...]) -> bool:
        cols = normalize_colors(child[edge_index(a, b, N)] for a, b in itertools.combinations(vs, 2))
        key = (len(vs),) + cols
        hit = self._aux_cache.get(key)
        if hit is None:
            g = ColoredCompleteGraph(len(vs), cols)
            hit = canonical_form(g, self.problem.symmetry).colors in self.aux_keys[len(vs)]
            self._aux_cache[key] = hit
        return hit

    def _ok(self, child: list[int], checks: Sequence[_Check], auxes, N: int) -> bool:
        for ch in checks:
            if ch.clique is not None and any(child[i] == NONEDGE for i in ch.clique):
                continue
            if ch.checker(tuple(child[i] for i in ch.idx)):
                return False
        for vs in auxes:
            if self._aux_hit(child, N, vs):
                return False
        return True

    def extend(self, parent: ColoredCompleteGraph) -> list[tuple[int, ...]]:
        """Normalized color sequences of all feasible one-vertex extensions."""
        n = parent.n
        N = n + 1
        old_to_new, new_pos, triggers, aux_trig = self._level(n)
        child: list[int] = [NONEDGE] * num_edges(N)
        for old, new in enumerate(old_to_new):
            child[new] = parent.colors[old]
        used = len({c for c in parent.colors if c != NONEDGE})
        cap = 2 if self.problem.regime is ColorRegime.TWO else None
        out: list[tuple[int, ...]] = []

        proper = self.cycle_len is not None and N >= self.cycle_len
        at_vertex: list[set[int]] = []
        if proper:
            at_vertex = [set() for _ in range(n)]
            for (i, j), c in zip(edge_pairs(n), parent.colors):
                if c == NONEDGE:
                    continue
                if c in at_vertex[i] or c in at_vertex[j]:
                    return []  # parent already improper, every cycle copy through it is orderable
                at_vertex[i].add(c)
                at_vertex[j].add(c)
        new_colors: set[int] = set()

        if not self._ok(child, triggers[0], aux_trig[0], N):
            return []

        def rec(i: int, nxt: int):
            if i == n:
                out.append(normalize_colors(child))
                return
            top = nxt if cap is None else min(nxt, cap - 1)
            options = list(range(top + 1))
            if self.allow_nonedges:
                options.append(NONEDGE)
            p = new_pos[i]
            for c in options:
                if proper and c != NONEDGE and (c in at_vertex[i] or c in new_colors):
                    continue
                child[p] = c
                if self._ok(child, triggers[i + 1], aux_trig[i + 1], N):
                    if proper and c != NONEDGE:
                        new_colors.add(c)
                    rec(i + 1, nxt + 1 if c == nxt else nxt)
                    if proper and c != NONEDGE:
                        new_colors.discard(c)
            child[p] = NONEDGE

        rec(0, used)
        return out


def extend_by_vertex(parent: ColoredCompleteGraph, problem: ProblemSpec) -> list[ColoredCompleteGraph]:
    """All feasible children of ``parent`` (not deduplicated across isomorphism)."""
    return [ColoredCompleteGraph(parent.n + 1, c) for c in Extender(problem).extend(parent)]


def _dedupe(children: Iterable[tuple[int, ...]], N: int, sym: Symmetry, acc: dict) -> None:
    for cols in children:
        if sym is Symmetry.ORDERED:
            acc.setdefault(cols, None)
        else:
            key = canonical_form(ColoredCompleteGraph(N, cols), sym).colors
            acc.setdefault(key, None)


def enumerate_level(
    reps: LevelResult,
    problem: ProblemSpec,
    extender: Extender | None = None,
    max_size: int | None = None,
    deadline: float | None = None,
) -> LevelResult:
    """Representatives at level n+1 from a complete set at level n, sorted by key."""
    ext = extender or Extender(problem)
    N = reps.n + 1
    acc: dict[tuple[int, ...], None] = {}
    for parent in reps.representatives:
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded(N)
        _dedupe(ext.extend(parent), N, problem.symmetry, acc)
        if max_size is not None and len(acc) > max_size:
            raise LevelLimitError(N, len(acc))
    keys = sorted(acc)
    return LevelResult(N, [ColoredCompleteGraph(N, k) for k in keys])


def first_level(problem: ProblemSpec) -> LevelResult:
    k1 = ColoredCompleteGraph(1, ())
    return LevelResult(1, [k1] if is_feasible(k1, problem) else [])


def slug(problem_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", problem_id).strip("_")


def level_path(out_dir: Path, problem_id: str, n: int) -> Path:
    return Path(out_dir) / f"{slug(problem_id)}_level{n:02d}.txt"


def _load_level(path: Path, n: int) -> Optional[LevelResult]:
    if not path.exists():
        return None
    header, graphs = read_level(path)
    if int(header.get("count", -1)) != len(graphs) or int(header.get("level", -1)) != n:
        return None  # incomplete write
    return LevelResult(n, graphs)


def run_enumeration(
    problem: ProblemSpec,
    n_max: int,
    out_dir: str | Path | None = None,
    budget_seconds: float | None = None,
    max_level_size: int | None = None,
    resume: bool = True,
) -> tuple[Certificate, list[LevelResult]]:
    """Enumerate levels 1..n_max, stopping at the first empty level.

    An empty level n gives an exhaustion certificate (the value is n); reaching
    ``n_max`` gives a witness from the last level.  Running out of time or
    hitting the size cap returns the best witness so far marked incomplete.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    deadline = time.monotonic() + budget_seconds if budget_seconds else None
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    ext = Extender(problem)
    levels: list[LevelResult] = []
    cur = first_level(problem)
    complete = True
    while True:
        levels.append(cur)
        if out is not None and not (resume and _load_level(level_path(out, problem.id, cur.n), cur.n)):
            write_level(level_path(out, problem.id, cur.n), problem.id, cur.n, cur.representatives)
        log.info("%s level %d: %d graphs", problem.id, cur.n, cur.count)
        if cur.count == 0 or cur.n >= n_max:
            break
        nxt = None
        if out is not None and resume:
            nxt = _load_level(level_path(out, problem.id, cur.n + 1), cur.n + 1)
        if nxt is None:
            try:
                nxt = enumerate_level(cur, problem, ext, max_level_size, deadline)
            except (BudgetExceeded, LevelLimitError) as exc:
                log.warning("%s: %s", problem.id, exc)
                complete = False
                break
        cur = nxt
    counts = [lv.count for lv in levels]
    last = levels[-1]
    if last.count == 0:
        cert = Certificate("exhaustion", last.n, counts)
    else:
        cert = Certificate("witness", last.n, counts, last.representatives[0], complete)
    if out is not None:
        (out / f"{slug(problem.id)}_certificate.txt").write_text(cert.to_text(problem.id))
    return cert, levels
