"""Integer programs for the colorings searched elsewhere, plus LP/CNF export.

Three formulations:

* naive: x[e, c] = 1 iff edge e has color c (CR with a triangle/cycle or K4 as G);
* colorblind: y[e, f] = 1 iff edges e < f share a color (CR, any supported G);
* ordered: x[e] = 1 iff edge e is in the first class (OR).

Models are plain data; solving is delegated to an external program through
``SolverBridge`` (or, for tests and small runs, to scipy's HiGHS wrapper).
"""

from __future__ import annotations

import itertools
import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .graphs import ColoredCompleteGraph, GraphPattern, edge_index, edge_pairs, num_edges
from .patterns import OrderabilityKind, copy_table, criterion_rows, orderability_kind

DEFAULT_ROW_CAP = 10_000_000


class RowCapExceeded(RuntimeError):
    pass


@dataclass
class Row:
    vars: tuple[int, ...]
    coefs: tuple[int, ...]
    sense: str  # "<=", ">=", "="
    rhs: int
    family: str = ""

    def value(self, x: Sequence[int]) -> int:
        return sum(c * x[v] for v, c in zip(self.vars, self.coefs))

    def satisfied(self, x: Sequence[int]) -> bool:
        s = self.value(x)
        if self.sense == "<=":
            return s <= self.rhs
        if self.sense == ">=":
            return s >= self.rhs
        return s == self.rhs


@dataclass
class IlpModel:
    kind: str  # "naive", "colorblind" or "ordered"
    n: int
    names: list[str] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    objective: Optional[tuple[str, dict[int, int]]] = None
    c_max: Optional[int] = None
    row_cap: int = DEFAULT_ROW_CAP
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def var(self, name: str) -> int:
        k = self._index.get(name)
        if k is None:
            k = self._index[name] = len(self.names)
            self.names.append(name)
        return k

    def index(self, name: str) -> int:
        return self._index[name]

    def add(self, terms: dict[int, int] | Sequence[tuple[int, int]], sense: str, rhs: int, family: str) -> None:
        items = sorted(dict(terms).items()) if isinstance(terms, dict) else sorted(terms)
        if len(self.rows) >= self.row_cap:
            raise RowCapExceeded(
                f"more than {self.row_cap} rows; the full model is too large to generate"
            )
        self.rows.append(Row(tuple(v for v, _ in items), tuple(c for _, c in items), sense, rhs, family))

    def family_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.family] = out.get(r.family, 0) + 1
        return out

    @property
    def num_vars(self) -> int:
        return len(self.names)


# --------------------------------------------------------------------------
# naive formulation


def _x_name(i: int, j: int, c: int) -> str:
    return f"x_{i + 1}_{j + 1}_c{c}"


def default_c_max(h: GraphPattern) -> int:
    """Enough colors for every coloring without a rainbow H: |E(H)| - 1."""
    return h.num_edges - 1


def gen_naive_cr(
    g: GraphPattern,
    h: GraphPattern,
    n: int,
    c_max: int | None = None,
    objective: str | None = None,
    literal_rainbow: bool = False,
    row_cap: int = DEFAULT_ROW_CAP,
) -> IlpModel:
    """Color-indexed model for CR(G, H) with G a cycle or K4.

    Rainbow rows take every injective color assignment to the copy's edges;
    ``literal_rainbow=True`` takes every assignment instead (which also rules
    out monochromatic copies of H).  ``objective`` is "max" or "min" on the
    number of colors used.
    """
    kind = orderability_kind(g.with_order(False))
    if kind not in (OrderabilityKind.CYCLE, OrderabilityKind.K4):
        raise ValueError("the naive formulation supports cycles and K4 as G")
    if n < max(g.m, h.m):
        raise ValueError("n must be at least the pattern sizes")
    c_max = default_c_max(h) if c_max is None else c_max
    if c_max < 1:
        raise ValueError("c_max must be positive")
    model = IlpModel("naive", n, c_max=c_max, row_cap=row_cap)
    C = range(c_max)
    x = {(i, j, c): model.var(_x_name(i, j, c)) for i, j in edge_pairs(n) for c in C}

    def X(i, j, c):
        return x[(min(i, j), max(i, j), c)]

    for i, j in edge_pairs(n):
        model.add({X(i, j, c): 1 for c in C}, "=", 1, "assign")

    ne = h.num_edges
    if literal_rainbow:
        n_assign = c_max ** ne
    else:
        n_assign = math.perm(c_max, ne) if c_max >= ne else 0
    if n_assign * len(copy_table(h.with_order(False), n)) + len(model.rows) > row_cap:
        raise RowCapExceeded("rainbow rows exceed the row cap; the full model is too large to generate")
    assigns = itertools.product(C, repeat=ne) if literal_rainbow else itertools.permutations(C, ne)
    assigns = list(assigns)
    for phi, _, _ in copy_table(h.with_order(False), n):
        pairs = [(phi[a], phi[b]) for a, b in h.edges]
        for cs in assigns:
            terms: dict[int, int] = {}
            for (a, b), c in zip(pairs, cs):
                v = X(a, b, c)
                terms[v] = terms.get(v, 0) + 1
            model.add(terms, "<=", ne - 1, "rainbow")

    if kind is OrderabilityKind.CYCLE:
        if n >= g.m:
            for i in range(n):
                for j, k in itertools.combinations([v for v in range(n) if v != i], 2):
                    for c in C:
                        model.add({X(i, j, c): 1, X(i, k, c): 1}, "<=", 1, "cycle")
    else:
        for quad in itertools.combinations(range(n), 4):
            for i, j in itertools.permutations(quad, 2):
                k, l = [v for v in quad if v not in (i, j)]
                for c in C:
                    for d in C:
                        terms = {}
                        for v in (X(i, j, c), X(i, k, c), X(i, l, c), X(j, k, d), X(j, l, d)):
                            terms[v] = terms.get(v, 0) + 1
                        model.add(terms, "<=", 4, "K4")

    if objective is not None:
        z = [model.var(f"z_c{c}") for c in C]
        if objective == "max":
            for c in C:
                terms = {z[c]: 1}
                for i, j in edge_pairs(n):
                    terms[X(i, j, c)] = -1
                model.add(terms, "<=", 0, "colors")
        elif objective == "min":
            for c in C:
                for i, j in edge_pairs(n):
                    model.add({z[c]: 1, X(i, j, c): -1}, ">=", 0, "colors")
        else:
            raise ValueError("objective must be 'max' or 'min'")
        model.objective = (objective, {v: 1 for v in z})
    return model


# --------------------------------------------------------------------------
# colorblind formulation


def _y_name(e: int, f: int) -> str:
    return f"y_{e}_{f}"


def orderability_constraints(kind: OrderabilityKind, n: int, cycle_length: int = 3, complete: bool = True):
    """Criterion rows as (terms {(e, f): coef}, sense, rhs) over host edge pairs."""
    if kind is not OrderabilityKind.CYCLE and n < 4:
        raise ValueError("n too small for this kind")
    out = []
    for terms, rhs in criterion_rows(kind, n, cycle_length, complete):
        sense = "=" if kind is OrderabilityKind.CYCLE else "<="
        out.append((dict(terms), sense, rhs))
    return out


def gen_colorblind_cr(
    g: GraphPattern,
    h: GraphPattern,
    n: int,
    complete: bool = True,
    objective: str | None = None,
    row_cap: int = DEFAULT_ROW_CAP,
) -> IlpModel:
    """Pairwise-equality model for CR(G, H) with a supported G."""
    kind = orderability_kind(g.with_order(False))
    if kind is None:
        raise ValueError(f"no orderability constraints for {g}")
    if n < max(g.m, h.m):
        raise ValueError("n must be at least the pattern sizes")
    model = IlpModel("colorblind", n, row_cap=row_cap)
    E = num_edges(n)
    y = {}
    for e, f in itertools.combinations(range(E), 2):
        y[(e, f)] = model.var(_y_name(e, f))

    def Y(e, f):
        return y[(e, f) if e < f else (f, e)]

    for e, f, g3 in itertools.combinations(range(E), 3):
        a, b, c = Y(e, f), Y(e, g3), Y(f, g3)
        model.add({a: 1, b: -1, c: -1}, ">=", -1, "transitivity")
        model.add({b: 1, a: -1, c: -1}, ">=", -1, "transitivity")
        model.add({c: 1, a: -1, b: -1}, ">=", -1, "transitivity")

    for _, idx, _ in copy_table(h.with_order(False), n):
        model.add({Y(e, f): 1 for e, f in itertools.combinations(idx, 2)}, ">=", 1, "rainbow")

    fam = kind.value
    for terms, sense, rhs in orderability_constraints(kind, n, g.m, complete):
        model.add({Y(e, f): c for (e, f), c in terms.items()}, sense, rhs, fam)

    if objective is not None:
        if objective not in ("max", "min"):
            raise ValueError("objective must be 'max' or 'min'")
        # a class is counted at its row-major first edge: w_e = 1 iff no earlier edge shares its color
        w = [model.var(f"w_{e}") for e in range(E)]
        for e in range(E):
            for f in range(e):
                model.add({w[e]: 1, Y(f, e): 1}, "<=", 1, "colors")
            terms = {w[e]: 1}
            for f in range(e):
                terms[Y(f, e)] = 1
            model.add(terms, ">=", 1, "colors")
        model.objective = (objective, {v: 1 for v in w})
    return model


# --------------------------------------------------------------------------
# ordered Ramsey formulation


def gen_ordered_or(g: GraphPattern, n: int, row_cap: int = DEFAULT_ROW_CAP) -> IlpModel:
    """One binary per edge, two cover rows per increasing copy of G."""
    if not g.ordered:
        raise ValueError("the ordered formulation needs an ordered pattern")
    if n < g.m:
        raise ValueError("n must be at least |V(G)|")
    model = IlpModel("ordered", n, row_cap=row_cap)
    xs = [model.var(f"x_{i + 1}_{j + 1}") for i, j in edge_pairs(n)]
    for _, idx, _ in copy_table(g, n):
        model.add({xs[e]: 1 for e in idx}, ">=", 1, "not_all_second")
        model.add({xs[e]: 1 for e in idx}, "<=", g.num_edges - 1, "not_all_first")
    return model


# --------------------------------------------------------------------------
# assignments


def assignment_from_coloring(model: IlpModel, coloring: ColoredCompleteGraph) -> list[int]:
    """The 0/1 vector a coloring induces on the model's variables."""
    if coloring.n != model.n:
        raise ValueError(f"coloring has {coloring.n} vertices, model has {model.n}")
    cols = coloring.colors
    x = [0] * model.num_vars
    if model.kind == "naive":
        if any(c >= model.c_max for c in cols):
            raise ValueError(f"coloring uses ids >= c_max={model.c_max}")
        for (i, j), c in zip(edge_pairs(model.n), cols):
            x[model.index(_x_name(i, j, c))] = 1
        used = set(cols)
        for c in range(model.c_max):
            k = model._index.get(f"z_c{c}")
            if k is not None:
                x[k] = int(c in used)
    elif model.kind == "colorblind":
        for e, f in itertools.combinations(range(len(cols)), 2):
            x[model.index(_y_name(e, f))] = int(cols[e] == cols[f])
        for e in range(len(cols)):
            k = model._index.get(f"w_{e}")
            if k is not None:
                x[k] = int(all(cols[f] != cols[e] for f in range(e)))
    elif model.kind == "ordered":
        if len(set(cols)) > 2:
            raise ValueError("the ordered model takes two-class colorings")
        for e, c in enumerate(cols):
            x[e] = int(c == 0)
    else:
        raise ValueError(f"unknown model kind {model.kind}")
    return x


def check_assignment(model: IlpModel, coloring: ColoredCompleteGraph) -> tuple[bool, list[int]]:
    """Substitute the induced assignment; returns (all rows hold, violated row indices)."""
    x = assignment_from_coloring(model, coloring)
    bad = [k for k, r in enumerate(model.rows) if not r.satisfied(x)]
    return not bad, bad


def coloring_from_assignment(model: IlpModel, values: dict[str, float]) -> ColoredCompleteGraph:
    """Decode a solver assignment back into a normalized coloring."""
    from .graphs import normalize_colors

    n = model.n
    E = num_edges(n)
    if model.kind == "ordered":
        cols = [0 if round(values.get(model.names[e], 0)) == 1 else 1 for e in range(E)]
    elif model.kind == "naive":
        cols = []
        for i, j in edge_pairs(n):
            cs = [c for c in range(model.c_max) if round(values.get(_x_name(i, j, c), 0)) == 1]
            if len(cs) != 1:
                raise ValueError(f"edge ({i},{j}) has {len(cs)} colors in the solution")
            cols.append(cs[0])
    else:
        parent = list(range(E))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e, f in itertools.combinations(range(E), 2):
            if round(values.get(_y_name(e, f), 0)) == 1:
                parent[find(f)] = find(e)
        cols = [find(e) for e in range(E)]
    return ColoredCompleteGraph(n, normalize_colors(cols))


# --------------------------------------------------------------------------
# export


def _lp_terms(vars_, coefs, names) -> str:
    parts = []
    for v, c in zip(vars_, coefs):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        parts.append(f"{sign} {names[v]}" if mag == 1 else f"{sign} {mag} {names[v]}")
    return " ".join(parts) if parts else "0 " + names[0]


def export_lp(model: IlpModel) -> str:
    """CPLEX-style LP text (Minimize/Maximize, Subject To, Binary, End)."""
    out = [f"\\ {model.kind} model, n = {model.n}"]
    if model.objective is not None:
        sense, terms = model.objective
        out.append("Maximize" if sense == "max" else "Minimize")
        items = sorted(terms.items())
        out.append(" obj: " + _lp_terms([v for v, _ in items], [c for _, c in items], model.names))
    else:
        out.append("Minimize")
        out.append(f" obj: 0 {model.names[0]}")
    out.append("Subject To")
    op = {"<=": "<=", ">=": ">=", "=": "="}
    for k, r in enumerate(model.rows, 1):
        out.append(f" r{k}: {_lp_terms(r.vars, r.coefs, model.names)} {op[r.sense]} {r.rhs}")
    out.append("Binary")
    for k in range(0, model.num_vars, 8):
        out.append(" " + " ".join(model.names[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_cnf(model: IlpModel) -> str:
    """DIMACS CNF for ordered models; variable k is edge k-1 in row-major order."""
    if model.kind != "ordered":
        raise ValueError("CNF export is defined for the ordered formulation only")
    clauses = []
    for r in model.rows:
        if any(c != 1 for c in r.coefs):
            raise ValueError("row is not a cover constraint")
        lits = [v + 1 for v in r.vars]
        if r.sense == ">=" and r.rhs == 1:
            clauses.append(lits)
        elif r.sense == "<=" and r.rhs == len(lits) - 1:
            clauses.append([-l for l in lits])
        else:
            raise ValueError("row is not clause-representable")
    out = [f"c ordered model n={model.n}; variable k = edge k in row-major order, true = first class"]
    out.append(f"p cnf {model.num_vars} {len(clauses)}")
    out.extend(" ".join(map(str, c)) + " 0" for c in clauses)
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# solving


@dataclass
class SolveResult:
    status: str  # "feasible", "infeasible" or "unknown"
    values: dict[str, float] = field(default_factory=dict)


def parse_solution(text: str) -> SolveResult:
    """Solution import: optional ``status <word>`` line, then ``name value`` pairs."""
    status = None
    values: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(("#", "c ")):
            continue
        toks = line.split()
        if toks[0].lower() == "status":
            status = toks[1].lower() if len(toks) > 1 else "unknown"
            continue
        if len(toks) != 2:
            raise ValueError(f"bad solution line {line!r}")
        values[toks[0]] = float(toks[1])
    if status is None:
        status = "feasible" if values else "unknown"
    if status not in ("feasible", "infeasible", "unknown", "optimal"):
        status = "unknown"
    if status == "optimal":
        status = "feasible"
    return SolveResult(status, values)


@dataclass
class SolverBridge:
    """Runs an external solver: ``args`` may use {model} and {solution} placeholders."""

    executable: str
    args: str = "{model} {solution}"
    fmt: str = "lp"
    timeout: float | None = None

    def solve(self, model: IlpModel) -> SolveResult:
        with tempfile.TemporaryDirectory() as tmp:
            mpath = Path(tmp) / f"model.{self.fmt}"
            spath = Path(tmp) / "solution.txt"
            mpath.write_text(export_lp(model) if self.fmt == "lp" else export_cnf(model))
            cmd = [self.executable] + [a.format(model=mpath, solution=spath) for a in shlex.split(self.args)]
            subprocess.run(cmd, check=False, capture_output=True, timeout=self.timeout)
            if not spath.exists():
                return SolveResult("unknown")
            return parse_solution(spath.read_text())


def solve_with_scipy(model: IlpModel, time_limit: float | None = None) -> SolveResult:
    """In-process MILP solve through scipy's HiGHS interface."""
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    nv = model.num_vars
    rows, cols, vals, lo, hi = [], [], [], [], []
    for k, r in enumerate(model.rows):
        for v, c in zip(r.vars, r.coefs):
            rows.append(k)
            cols.append(v)
            vals.append(c)
        lo.append(r.rhs if r.sense in (">=", "=") else -np.inf)
        hi.append(r.rhs if r.sense in ("<=", "=") else np.inf)
    A = coo_matrix((vals, (rows, cols)), shape=(len(model.rows), nv)).tocsr()
    c = np.zeros(nv)
    if model.objective is not None:
        sense, terms = model.objective
        for v, w in terms.items():
            c[v] = -w if sense == "max" else w
    opts = {"time_limit": time_limit} if time_limit else {}
    res = milp(
        c,
        constraints=[LinearConstraint(A, np.array(lo), np.array(hi))] if model.rows else [],
        integrality=np.ones(nv),
        bounds=Bounds(0, 1),
        options=opts,
    )
    if res.status == 0:
        return SolveResult("feasible", {name: float(v) for name, v in zip(model.names, res.x)})
    if res.status == 2:
        return SolveResult("infeasible")
    return SolveResult("unknown")
