"""Flag-algebra upper bounds through blow-ups.

A feasible coloring of K_n blown up into n independent sets (consecutive
ones in the ordered setting) has non-edge density tending to 1/n, so a lower
bound delta on the non-edge density of every admissible limit gives
n <= 1/delta.  Admissible graphs are colorblind graphs with non-edges that
contain no forbidden copy on a clique and no configuration that cannot occur
inside a blow-up.  The SDP maximizes delta subject to

    d(non-edge, B) - delta - sum_sigma <Q_sigma, P_sigma(B)> >= 0   for every B,
    Q_sigma PSD,

where P_sigma(B) holds the averaged flag products of type sigma in B.  All
product coefficients are exact fractions; floats appear only at export.
"""

from __future__ import annotations

import itertools
import json
import math
import shlex
import subprocess
import tempfile
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .enumeration import Extender, LevelResult, enumerate_level
from .graphs import (
    NONEDGE,
    ColoredCompleteGraph,
    Symmetry,
    canonical_form,
    edge_pairs,
    normalize_colors,
    num_edges,
)
from .patterns import count_auxiliary, find_copy
from .problems import ProblemSpec

MAX_N = {Symmetry.UNORDERED: 5, Symmetry.ORDERED: 4}
RIGOR_TOL = 1e-7
X = NONEDGE


# --------------------------------------------------------------------------
# blow-ups


def blowup_forbidden(sym: Symmetry, labeled_colors: bool = False) -> list[ColoredCompleteGraph]:
    """Three-vertex configurations that never occur in a blow-up.

    Colors are over the pairs (01, 02, 12).  Unordered (colorblind): a single
    edge, and two edges of different classes.  Ordered: every ordering of those,
    plus the two triples whose only non-edge joins the outer vertices (the
    blobs are intervals).  ``labeled_colors`` keeps two named colors apart,
    which is only meaningful in the ordered two-color setting.
    """
    if sym is Symmetry.UNORDERED:
        if labeled_colors:
            raise ValueError("unsupported regime: unordered blow-ups are colorblind")
        return [ColoredCompleteGraph(3, (X, X, 0)), ColoredCompleteGraph(3, (0, 1, X))]
    palette = (0, 1) if labeled_colors else (0,)
    out: list[tuple[int, ...]] = []
    for pos in range(3):  # one edge
        for c in palette:
            cols = [X, X, X]
            cols[pos] = c
            out.append(tuple(cols))
    for hole in range(3):  # two edges, different classes
        for c, d in ((0, 1), (1, 0)) if labeled_colors else ((0, 1),):
            cols = [c, d]
            cols.insert(hole, X)
            out.append(tuple(cols))
    for c in palette:  # outer vertices in one blob, middle vertex outside it
        out.append((c, X, c))
    return [ColoredCompleteGraph(3, c) for c in out]


def blow_up(g: ColoredCompleteGraph, k: int) -> ColoredCompleteGraph:
    """Balanced k-blow-up; vertex v becomes the interval v*k .. v*k+k-1."""
    N = g.n * k
    cols = []
    for a, b in edge_pairs(N):
        u, v = a // k, b // k
        cols.append(X if u == v else g.color(u, v))
    return ColoredCompleteGraph(N, tuple(cols))


@dataclass(frozen=True)
class BlowupProblem:
    problem: ProblemSpec
    forbidden: tuple[ColoredCompleteGraph, ...]
    spec: ProblemSpec = field(repr=False)

    @classmethod
    def of(cls, problem: ProblemSpec) -> "BlowupProblem":
        configs = tuple(blowup_forbidden(problem.symmetry))
        spec = ProblemSpec(
            problem.variant,
            problem.g,
            problem.h,
            extra=problem.extra,
            auxiliary=problem.auxiliary + configs,
            name=problem.name,
        )
        return cls(problem, configs, spec)

    @property
    def symmetry(self) -> Symmetry:
        return self.problem.symmetry

    def is_admissible(self, g: ColoredCompleteGraph) -> bool:
        if any(find_copy(g, pk) is not None for pk in self.spec.forbidden):
            return False
        return all(count_auxiliary(g, a, self.symmetry) == 0 for a in self.spec.auxiliary)


def admissible_graphs(bp: BlowupProblem, N: int, max_size: int | None = None) -> list[ColoredCompleteGraph]:
    """All admissible graphs on N vertices, one per isomorphism class, sorted."""
    if N < 1:
        raise ValueError("N must be positive")
    ext = Extender(bp.spec, allow_nonedges=True)
    level = LevelResult(1, [ColoredCompleteGraph(1, ())])
    while level.n < N:
        level = enumerate_level(level, bp.spec, ext, max_size)
    return level.representatives


# --------------------------------------------------------------------------
# densities and flags


def _nonedge_density(g: ColoredCompleteGraph) -> Fraction:
    return Fraction(sum(c == X for c in g.colors), num_edges(g.n))


def subgraph_key(g: ColoredCompleteGraph, vertices: Sequence[int], sym: Symmetry) -> tuple:
    return (len(vertices),) + canonical_form(g.induced(vertices), sym).colors


def densities(g: ColoredCompleteGraph, m: int, sym: Symmetry) -> dict[tuple, Fraction]:
    """d(F, g) for every m-vertex graph F occurring in g, keyed by canonical colors."""
    counts: dict[tuple, int] = defaultdict(int)
    for sub in itertools.combinations(range(g.n), m):
        counts[subgraph_key(g, sub, sym)] += 1
    total = math.comb(g.n, m)
    return {k: Fraction(v, total) for k, v in counts.items()}


@dataclass(frozen=True)
class FlagType:
    """A fully labeled graph on s vertices; label i is vertex i."""

    s: int
    colors: tuple[int, ...]


@dataclass(frozen=True)
class Flag:
    """A graph on ``n`` vertices with labeled vertices ``labeled`` (in label order)."""

    n: int
    colors: tuple[int, ...]
    labeled: tuple[int, ...]


def _type_colors(g: ColoredCompleteGraph, theta: Sequence[int]) -> tuple[int, ...]:
    if len(theta) < 2:
        return ()
    return normalize_colors(g.induced(theta).colors)


def flag_at(g: ColoredCompleteGraph, theta: Sequence[int], rest: Sequence[int], sym: Symmetry) -> Flag:
    """Canonical flag induced on labeled vertices ``theta`` plus ``rest``."""
    s = len(theta)
    if sym is Symmetry.ORDERED:
        verts = sorted(tuple(theta) + tuple(rest))
        pos = {v: k for k, v in enumerate(verts)}
        sub = g.induced(verts)
        return Flag(len(verts), normalize_colors(sub.colors), tuple(pos[v] for v in theta))
    verts = tuple(theta) + tuple(sorted(rest))
    if len(verts) == 1:
        return Flag(1, (), (0,) if s else ())
    sub = g.induced(verts)
    return Flag(len(verts), canonical_form(sub, sym, fixed=s).colors, tuple(range(s)))


def flag_types(basis: Sequence[ColoredCompleteGraph], s: int, sym: Symmetry) -> list[FlagType]:
    """Types of size s that occur in some basis graph."""
    seen = set()
    for g in basis:
        for theta in _placements(g.n, s, sym):
            seen.add(_type_colors(g, theta))
    return [FlagType(s, c) for c in sorted(seen)]


def _placements(n: int, s: int, sym: Symmetry):
    if sym is Symmetry.ORDERED:
        return itertools.combinations(range(n), s)
    return itertools.permutations(range(n), s)


@dataclass
class TypeBlock:
    sigma: FlagType
    flags: list[Flag]
    # per basis graph: {(i, j) with i <= j: P_ij}
    coeffs: list[dict[tuple[int, int], Fraction]]


def _block_worker(args):
    sigma, fsize, basis, sym = args
    return _type_block(sigma, fsize, basis, sym)


def _type_block(sigma: FlagType, fsize: int, basis: Sequence[ColoredCompleteGraph], sym: Symmetry) -> TypeBlock:
    s = sigma.s
    raw: list[dict[tuple[Flag, Flag], int]] = []
    flags: set[Flag] = set()
    for g in basis:
        N = g.n
        if 2 * fsize - s != N:
            raise ValueError("flag sizes do not fit the basis size")
        counts: dict[tuple[Flag, Flag], int] = defaultdict(int)
        n_theta = 0
        for theta in _placements(N, s, sym):
            n_theta += 1
            if _type_colors(g, theta) != sigma.colors:
                continue
            rest = [v for v in range(N) if v not in theta]
            for x1 in itertools.combinations(rest, fsize - s):
                x2 = [v for v in rest if v not in x1]
                f1 = flag_at(g, theta, x1, sym)
                f2 = flag_at(g, theta, x2, sym)
                flags.add(f1)
                flags.add(f2)
                counts[(f1, f2)] += 1
        denom = n_theta * math.comb(N - s, fsize - s)
        raw.append((counts, denom))
    order = sorted(flags, key=lambda f: (f.labeled, f.colors))
    where = {f: k for k, f in enumerate(order)}
    coeffs = []
    for counts, denom in raw:
        row: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
        for (f1, f2), c in counts.items():
            i, j = where[f1], where[f2]
            row[(min(i, j), max(i, j))] += Fraction(c, denom) / (1 if i == j else 2)
        coeffs.append(dict(row))
    return TypeBlock(sigma, order, coeffs)


def product_expansion(
    f1: Flag, f2: Flag, sigma: FlagType, basis: Sequence[ColoredCompleteGraph], sym: Symmetry
) -> list[Fraction]:
    """Coefficient of each basis graph in the averaged product of f1 and f2."""
    s = sigma.s
    if len(f1.labeled) != s or len(f2.labeled) != s:
        raise ValueError("flags do not match the type")
    out = []
    for g in basis:
        N = g.n
        if f1.n + f2.n - s > N:
            raise ValueError("flags are too large for the basis size")
        hit = total = 0
        for theta in _placements(N, s, sym):
            rest = [v for v in range(N) if v not in theta]
            for x1 in itertools.combinations(rest, f1.n - s):
                left = [v for v in rest if v not in x1]
                for x2 in itertools.combinations(left, f2.n - s):
                    total += 1
                    if _type_colors(g, theta) != sigma.colors:
                        continue
                    if flag_at(g, theta, x1, sym) == f1 and flag_at(g, theta, x2, sym) == f2:
                        hit += 1
        out.append(Fraction(hit, total))
    return out


# --------------------------------------------------------------------------
# SDP


class EmptyBasis(RuntimeError):
    pass


@dataclass
class FlagSdp:
    problem_id: str
    N: int
    basis: list[ColoredCompleteGraph]
    objective: list[Fraction]
    blocks: list[TypeBlock]

    @property
    def num_vars(self) -> int:
        return 1 + sum(len(b.flags) * (len(b.flags) + 1) // 2 for b in self.blocks)

    def var_layout(self) -> list[tuple[int, int, int]]:
        """(block, i, j) for each Q variable, after delta."""
        out = []
        for b, blk in enumerate(self.blocks):
            for i in range(len(blk.flags)):
                for j in range(i, len(blk.flags)):
                    out.append((b, i, j))
        return out


def assemble_sdp(bp: BlowupProblem, N: int, threads: int = 1, allow_large: bool = False) -> FlagSdp:
    if N < 2:
        raise ValueError("N must be at least 2")
    if not allow_large and N > MAX_N[bp.symmetry]:
        raise ValueError(f"N={N} is beyond the desk-scale cap {MAX_N[bp.symmetry]} for this symmetry")
    basis = admissible_graphs(bp, N)
    if not basis:
        raise EmptyBasis(f"no admissible graph on {N} vertices; degenerate bound {N}")
    sym = bp.symmetry
    jobs = []
    for s in range(N % 2, N - 1, 2):
        fsize = (N + s) // 2
        for sigma in flag_types(basis, s, sym):
            jobs.append((sigma, fsize, basis, sym))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(_block_worker, jobs))
    else:
        blocks = [_block_worker(j) for j in jobs]
    blocks = [b for b in blocks if b.flags]
    objective = [_nonedge_density(g) for g in basis]
    return FlagSdp(bp.problem.id, N, basis, objective, blocks)


def _lp_weights(sdp: FlagSdp) -> list[list[tuple[int, float]]]:
    """Per basis graph: (variable index, weight) with off-diagonal entries doubled."""
    layout = {key: 1 + k for k, key in enumerate(sdp.var_layout())}
    rows = []
    for B in range(len(sdp.basis)):
        row = []
        for b, blk in enumerate(sdp.blocks):
            for (i, j), p in blk.coeffs[B].items():
                row.append((layout[(b, i, j)], float(p) * (1 if i == j else 2)))
        rows.append(row)
    return rows


def export_sdp(sdp: FlagSdp) -> str:
    """SDPA sparse text: min c.x  s.t.  sum_i F_i x_i - F_0 PSD.

    x_1 is delta (c_1 = -1); the remaining x are the upper triangles of the Q
    blocks.  Blocks 1..k are the Q matrices, the last block is diagonal with one
    entry per basis graph holding the slack d(non-edge, B) - delta - <Q, P(B)>.
    """
    m = sdp.num_vars
    sizes = [len(b.flags) for b in sdp.blocks] + [-len(sdp.basis)]
    lp = len(sizes)
    lines = [
        f'"flag SDP for {sdp.problem_id}, N={sdp.N}; x1 = delta, maximize delta"',
        str(m),
        str(len(sizes)),
        " ".join(map(str, sizes)),
        " ".join(["-1"] + ["0"] * (m - 1)),
    ]
    ents: list[tuple[int, int, int, int, float]] = []
    for B, d in enumerate(sdp.objective):
        if d:
            ents.append((0, lp, B + 1, B + 1, -float(d)))
    for B in range(len(sdp.basis)):
        ents.append((1, lp, B + 1, B + 1, -1.0))
    for k, (b, i, j) in enumerate(sdp.var_layout()):
        ents.append((k + 2, b + 1, i + 1, j + 1, 1.0))
    for B, row in enumerate(_lp_weights(sdp)):
        for v, w in row:
            if w:
                ents.append((v + 1, lp, B + 1, B + 1, -w))
    ents.sort()
    lines.extend(f"{a} {b} {i} {j} {v!r}" for a, b, i, j, v in ents)
    return "\n".join(lines) + "\n"


@dataclass
class SdpSolution:
    delta: float
    x: list[float]


def parse_solution(text: str) -> SdpSolution:
    """Read either an SDPA output (``xVec = {...}``) or a CSDP-style solution (y on line 1)."""
    if "xVec" in text:
        after = text.split("xVec", 1)[1]
        body = after[after.index("{") + 1: after.index("}")]
        x = [float(t) for t in body.replace(",", " ").split()]
    else:
        first = next((ln for ln in text.splitlines() if ln.strip()), "")
        x = [float(t) for t in first.split()]
    if not x:
        raise ValueError("no solution vector found")
    return SdpSolution(x[0], x)


def bound_from_delta(delta: float, tol: float = 1e-6) -> int:
    """Largest n with 1/n >= delta - tol, plus one."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if delta <= tol:
        raise ValueError("no finite bound: delta does not exceed the tolerance")
    return math.floor(1.0 / (delta - tol)) + 1


@dataclass
class SdpCheck:
    min_slack: float
    min_eig: float

    def passes(self, tol: float = RIGOR_TOL) -> bool:
        return self.min_slack >= -tol and self.min_eig >= -tol


def recheck(sdp: FlagSdp, x: Sequence[float]) -> SdpCheck:
    """Re-evaluate PSD-ness of the Q blocks and every slack inequality in floating point."""
    x = np.asarray(x, dtype=float)
    if len(x) != sdp.num_vars:
        raise ValueError(f"expected {sdp.num_vars} values, got {len(x)}")
    mats = [np.zeros((len(b.flags), len(b.flags))) for b in sdp.blocks]
    for k, (b, i, j) in enumerate(sdp.var_layout()):
        mats[b][i, j] = mats[b][j, i] = x[k + 1]
    min_eig = min((float(np.linalg.eigvalsh(M)[0]) for M in mats if M.size), default=0.0)
    slacks = []
    for B, row in enumerate(_lp_weights(sdp)):
        slacks.append(float(sdp.objective[B]) - x[0] - sum(w * x[v] for v, w in row))
    return SdpCheck(min(slacks), min_eig)


def solve_sdp_cvxopt(sdp: FlagSdp) -> SdpSolution:
    """In-process solve with cvxopt's conic solver (maximize delta)."""
    from cvxopt import matrix, solvers, spmatrix

    m = sdp.num_vars
    nb = len(sdp.basis)
    c = matrix([-1.0] + [0.0] * (m - 1))
    vals, ri, ci = [], [], []
    for B, row in enumerate(_lp_weights(sdp)):
        vals.append(1.0)
        ri.append(B)
        ci.append(0)
        for v, w in row:
            vals.append(w)
            ri.append(B)
            ci.append(v)
    Gl = spmatrix(vals, ri, ci, (nb, m))
    hl = matrix([float(d) for d in sdp.objective])
    Gs, hs = [], []
    layout = sdp.var_layout()
    for b, blk in enumerate(sdp.blocks):
        k = len(blk.flags)
        v2, r2, c2 = [], [], []
        for var, (bb, i, j) in enumerate(layout):
            if bb != b:
                continue
            for a, d in {(i, j), (j, i)}:
                v2.append(-1.0)
                r2.append(a + d * k)
                c2.append(var + 1)
        Gs.append(spmatrix(v2, r2, c2, (k * k, m)))
        hs.append(matrix(0.0, (k, k)))
    solvers.options["show_progress"] = False
    res = solvers.sdp(c, Gl=Gl, hl=hl, Gs=Gs or None, hs=hs or None)
    if res["x"] is None:
        raise RuntimeError(f"SDP solver failed: {res['status']}")
    x = [float(v) for v in res["x"]]
    return SdpSolution(x[0], x)


@dataclass
class ExternalSdpSolver:
    """Runs an SDPA-format solver; ``args`` may use {problem} and {solution}."""

    executable: str
    args: str = "{problem} {solution}"
    timeout: float | None = None

    def solve(self, sdp: FlagSdp) -> SdpSolution:
        with tempfile.TemporaryDirectory() as tmp:
            p = Path(tmp) / "problem.dat-s"
            s = Path(tmp) / "solution.txt"
            p.write_text(export_sdp(sdp))
            cmd = [self.executable] + [a.format(problem=p, solution=s) for a in shlex.split(self.args)]
            proc = subprocess.run(cmd, check=False, capture_output=True, text=True, timeout=self.timeout)
            text = s.read_text() if s.exists() else proc.stdout
            return parse_solution(text)


@dataclass
class BoundReport:
    problem: str
    N: int
    delta: float
    tol: float
    bound: Optional[int]
    rigor: str

    def to_text(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True) + "\n"


def bound_report(sdp: FlagSdp, sol: SdpSolution, tol: float = 1e-6) -> BoundReport:
    chk = recheck(sdp, sol.x)
    rigor = "float re-check passed (1e-7)" if chk.passes() else "non-rigorous (numerical SDP)"
    try:
        bound = bound_from_delta(sol.delta, tol)
    except ValueError:
        bound = None
    return BoundReport(sdp.problem_id, sdp.N, sol.delta, tol, bound, rigor)
