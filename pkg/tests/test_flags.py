import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import blowup_brute_admissible, canonical_oracle
from ramseykit.enumeration import run_enumeration
from ramseykit.flags import (
    BlowupProblem,
    EmptyBasis,
    Flag,
    FlagType,
    admissible_graphs,
    assemble_sdp,
    blow_up,
    blowup_forbidden,
    bound_from_delta,
    bound_report,
    densities,
    export_sdp,
    flag_at,
    parse_solution,
    product_expansion,
    recheck,
    solve_sdp_cvxopt,
)
from ramseykit.graphs import NONEDGE, ColoredCompleteGraph, GraphPattern, Symmetry, canonical_form
from ramseykit.patterns import count_auxiliary
from ramseykit.problems import ProblemSpec, parse_problem

X = NONEDGE
U, O = Symmetry.UNORDERED, Symmetry.ORDERED


def _triples(g):
    for a, b, c in itertools.combinations(range(g.n), 3):
        yield a, b, c, (g.color(a, b), g.color(a, c), g.color(b, c))


def _blowup_ok(g, ordered):
    """Plain triple scan of the blow-up constraints."""
    for a, b, c, (ab, ac, bc) in _triples(g):
        edges = [x for x in (ab, ac, bc) if x != X]
        if len(edges) == 1:
            return False
        if len(edges) == 2 and edges[0] != edges[1]:
            return False
        if ordered and ac == X and ab != X and ab == bc:
            return False  # a and c share a blob that skips b
    return True


def _ok_r33(g):
    if not _blowup_ok(g, False):
        return False
    return not any(ab == ac == bc != X for *_, (ab, ac, bc) in _triples(g))


def _ok_cr33(g):
    # every triangle of edges is either orderable or rainbow
    return _blowup_ok(g, False) and not any(X not in t for *_, t in _triples(g))


def _ok_er_c3(g):
    if not _blowup_ok(g, True):
        return False
    c3 = GraphPattern.complete(3, True)
    return not any(X not in t and canonical_oracle(c3, t) for *_, t in _triples(g))


# ---------------------------------------------------------------- blow-ups


def test_blowup_forbidden_counts():
    assert len(blowup_forbidden(U)) == 2
    assert len(blowup_forbidden(O, labeled_colors=True)) == 14
    assert len(blowup_forbidden(O)) == 7
    with pytest.raises(ValueError):
        blowup_forbidden(U, labeled_colors=True)


def test_unordered_one_edge_config():
    one_edge = ColoredCompleteGraph(3, (X, X, 0))  # only edge (2,3) in 1-based labels
    assert one_edge in blowup_forbidden(U)
    assert sum(1 for c in one_edge.colors if c != X) == 1


def test_ordered_configs_are_the_unordered_ones_plus_interval_rule():
    for labeled in (False, True):
        for g in blowup_forbidden(O, labeled):
            assert not _blowup_ok(g, True)
    # every ordered 3-vertex config with at most two colors is listed or allowed
    listed = {g.colors for g in blowup_forbidden(O, True)}
    for cols in itertools.product((X, 0, 1), repeat=3):
        g = ColoredCompleteGraph(3, cols)
        assert (cols in listed) == (not _blowup_ok(g, True))


@pytest.mark.parametrize(
    "name,ok,classes,N",
    [
        ("R(K3)", _ok_r33, 2, 2),
        ("R(K3)", _ok_r33, 2, 3),
        ("R(K3)", _ok_r33, 2, 4),
        ("ER(C3)", _ok_er_c3, 3, 3),
        ("ER(C3)", _ok_er_c3, 4, 4),
        ("CR(3,3)", _ok_cr33, 3, 3),
        ("CR(3,3)", _ok_cr33, 4, 4),  # triangle-free on 4 vertices has at most 4 edges
    ],
)
def test_admissible_matches_bruteforce(name, ok, classes, N):
    p = parse_problem(name)
    bp = BlowupProblem.of(p)
    got = {canonical_form(g, p.symmetry).colors for g in admissible_graphs(bp, N)}
    assert got == blowup_brute_admissible(N, classes, ok, p.symmetry)


def test_r33_small_bases():
    bp = BlowupProblem.of(parse_problem("R(K3)"))
    assert [g.colors for g in admissible_graphs(bp, 2)] == [(X,), (0,)]
    # empty triple, cherry with both edges in one class, triangle split 2 + 1
    assert [g.colors for g in admissible_graphs(bp, 3)] == [(X, X, X), (X, 0, 0), (0, 0, 1)]


@pytest.mark.parametrize("name", ["R(K3)", "ER(C3)", "CR(3,3)", "CR(3,4)", "OR(C3)", "OR(P3_101)"])
def test_blowups_of_feasible_graphs_are_admissible(name):
    p = parse_problem(name)
    bp = BlowupProblem.of(p)
    _, levels = run_enumeration(p, 5)
    for lv in levels:
        for g in lv.representatives:
            for k in (2, 3):
                b = blow_up(g, k)
                assert _blowup_ok(b, p.symmetry is O)
                assert all(count_auxiliary(b, c, p.symmetry) == 0 for c in bp.forbidden)
                assert bp.is_admissible(b)


def test_blow_up_shape():
    g = ColoredCompleteGraph(2, (0,))
    assert blow_up(g, 2).colors == (X, 0, 0, 0, 0, X)


# ---------------------------------------------------------------- densities and products


def _brute_key(g, verts, sym):
    """Canonical key by trying every relabeling of the induced graph."""
    verts = list(verts)
    orders = [verts] if sym is O else itertools.permutations(verts)
    best = None
    for order in orders:
        cols = [g.color(a, b) for a, b in itertools.combinations(order, 2)]
        ren, out = {}, []
        for c in cols:
            if c != X and c not in ren:
                ren[c] = len(ren)
            out.append(X if c == X else ren[c])
        best = tuple(out) if best is None else min(best, tuple(out))
    return best


@pytest.mark.parametrize("name,N", [("R(K3)", 4), ("ER(C3)", 4), ("CR(3,4)", 4), ("OR(C3)", 4)])
def test_partition_of_unity(name, N):
    p = parse_problem(name)
    basis = admissible_graphs(BlowupProblem.of(p), N)
    for B in basis:
        for m in range(1, N + 1):
            d = densities(B, m, p.symmetry)
            assert sum(d.values()) == 1
            # dual route: count each class over all m-subsets independently
            counts = {}
            for sub in itertools.combinations(range(N), m):
                k = _brute_key(B, sub, p.symmetry)
                counts[k] = counts.get(k, 0) + 1
            assert sorted(Fraction(c, math.comb(N, m)) for c in counts.values()) == sorted(d.values())
            assert sum(Fraction(c, math.comb(N, m)) for c in counts.values()) == 1


def test_flag_blocks_sum_to_one():
    for name, N in (("R(K3)", 4), ("R(K3)", 5), ("OR(C3)", 4)):
        sdp = assemble_sdp(BlowupProblem.of(parse_problem(name)), N)
        for B in range(len(sdp.basis)):
            per_s = {}
            for blk in sdp.blocks:
                tot = sum(v * (1 if i == j else 2) for (i, j), v in blk.coeffs[B].items())
                per_s[blk.sigma.s] = per_s.get(blk.sigma.s, 0) + tot
            assert all(v == 1 for v in per_s.values())


def test_pendant_product_example():
    basis = admissible_graphs(BlowupProblem.of(parse_problem("R(K3)")), 3)
    sigma = FlagType(1, ())
    pendant = Flag(2, (0,), (0,))
    coeffs = product_expansion(pendant, pendant, sigma, basis, U)
    # empty triple: no path; cherry: only its centre; 2+1 triangle: every vertex
    assert coeffs == [0, Fraction(1, 3), 1]


def test_product_identity_and_symmetry():
    basis = admissible_graphs(BlowupProblem.of(parse_problem("R(K3)")), 4)
    sigma = FlagType(1, ())
    pendant = Flag(2, (0,), (0,))
    lone = Flag(2, (X,), (0,))
    unit = Flag(1, (), (0,))
    for f in (pendant, lone):
        got = product_expansion(f, unit, sigma, basis, U)
        want = []
        for B in basis:
            hits = sum(flag_at(B, (v,), (w,), U) == f for v in range(4) for w in range(4) if w != v)
            want.append(Fraction(hits, 12))
        assert got == want
    assert product_expansion(pendant, lone, sigma, basis, U) == product_expansion(lone, pendant, sigma, basis, U)
    with pytest.raises(ValueError):
        product_expansion(Flag(3, (0, 0, 0), (0,)), Flag(3, (0, 0, 0), (0,)), sigma, basis, U)


def test_block_coefficients_match_product_expansion():
    bp = BlowupProblem.of(parse_problem("R(K3)"))
    sdp = assemble_sdp(bp, 4)
    for blk in sdp.blocks:
        for i, j in itertools.combinations_with_replacement(range(len(blk.flags)), 2):
            direct = product_expansion(blk.flags[i], blk.flags[j], blk.sigma, sdp.basis, U)
            # block entries hold the pair share; the direct count sees one orientation
            stored = [c.get((i, j), 0) for c in blk.coeffs]
            if i == j:
                assert stored == direct
            else:
                other = product_expansion(blk.flags[j], blk.flags[i], blk.sigma, sdp.basis, U)
                assert [2 * s for s in stored] == [a + b for a, b in zip(direct, other)]


# ---------------------------------------------------------------- SDP


def test_sdp_shape_r33_n3():
    sdp = assemble_sdp(BlowupProblem.of(parse_problem("R(K3)")), 3)
    assert sdp.objective == [1, Fraction(1, 3), 0]
    assert len(sdp.blocks) == 1 and sdp.blocks[0].sigma.s == 1
    assert all(0 <= d <= 1 for d in sdp.objective)


def test_caps_and_errors():
    bp = BlowupProblem.of(parse_problem("OR(C3)"))
    with pytest.raises(ValueError):
        assemble_sdp(bp, 5)
    with pytest.raises(ValueError):
        assemble_sdp(bp, 1)
    # the all-non-edge graph is always admissible, so emptiness needs an extra exclusion
    base = parse_problem("R(K3)")
    empty3 = ColoredCompleteGraph(3, (X, X, X))
    no_empty = BlowupProblem.of(ProblemSpec(base.variant, base.g, auxiliary=(empty3,), name="noempty"))
    assert [g.colors for g in admissible_graphs(no_empty, 3)] == [(X, 0, 0), (0, 0, 1)]
    nothing = (empty3, ColoredCompleteGraph(3, (X, 0, 0)), ColoredCompleteGraph(3, (0, 0, 1)))
    with pytest.raises(EmptyBasis):
        assemble_sdp(BlowupProblem.of(ProblemSpec(base.variant, base.g, auxiliary=nothing, name="none")), 3)


def test_bound_from_delta():
    assert bound_from_delta(0.2, 1e-6) == 6
    assert bound_from_delta(0.0769, 1e-6) == 14
    for d in (0.0, -0.1, 1e-7):
        with pytest.raises(ValueError, match="no finite bound"):
            bound_from_delta(d, 1e-6)


def _dense_from_sdpa(text, x):
    """Evaluate F(x) = sum_i F_i x_i - F_0 per block from SDPA sparse text."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith('"')]
    m, nb = int(lines[0]), int(lines[1])
    sizes = [int(t) for t in lines[2].split()]
    c = [float(t) for t in lines[3].split()]
    assert len(c) == m == len(x) and nb == len(sizes)
    mats = [np.zeros((abs(s), abs(s))) for s in sizes]
    for ln in lines[4:]:
        k, b, i, j, v = ln.split()
        k, b, i, j, v = int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)
        w = -1.0 if k == 0 else x[k - 1]
        mats[b][i, j] += w * v
        if i != j:
            mats[b][j, i] += w * v
    return c, sizes, mats


@pytest.mark.parametrize("name,N,exact", [("R(K3)", 4, 6), ("ER(C3)", 4, 4), ("CR(3,3)", 4, 3), ("OR(C3)", 4, 6)])
def test_bounds_are_sound(name, N, exact):
    sdp = assemble_sdp(BlowupProblem.of(parse_problem(name)), N)
    sol = solve_sdp_cvxopt(sdp)
    chk = recheck(sdp, sol.x)
    assert chk.passes()
    rep = bound_report(sdp, sol)
    assert rep.bound is not None and rep.bound >= exact
    assert "float re-check passed" in rep.rigor
    # export evaluated independently: Q blocks PSD, LP block equals the slacks
    c, sizes, mats = _dense_from_sdpa(export_sdp(sdp), sol.x)
    assert c[0] == -1 and all(v == 0 for v in c[1:])
    assert sizes[-1] == -len(sdp.basis)
    for M in mats[:-1]:
        assert np.linalg.eigvalsh(M)[0] >= -1e-7
    assert np.allclose(np.diag(mats[-1]), np.diag(mats[-1]).clip(min=-1e-7))
    assert abs(np.diag(mats[-1]).min() - chk.min_slack) < 1e-9


def test_recheck_catches_overclaim():
    sdp = assemble_sdp(BlowupProblem.of(parse_problem("R(K3)")), 4)
    sol = solve_sdp_cvxopt(sdp)
    bumped = list(sol.x)
    bumped[0] += 0.05
    assert not recheck(sdp, bumped).passes()
    assert bound_report(sdp, type(sol)(bumped[0], bumped)).rigor.startswith("non-rigorous")


def test_parse_solution_formats():
    s = parse_solution("xVec = \n{0.2, 0.5,-1e-3}\nother stuff\n")
    assert s.delta == 0.2 and s.x == [0.2, 0.5, -0.001]
    s = parse_solution("\n0.125 1 2\n1 1 1 1 0.5\n")
    assert s.delta == 0.125 and len(s.x) == 3
    with pytest.raises(ValueError):
        parse_solution("\n\n")
