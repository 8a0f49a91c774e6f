import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import canonical_oracle, orderable_subset_dp, set_partitions
from ramseykit.graphs import ColoredCompleteGraph, GraphPattern, edge_pairs, num_edges
from ramseykit.patterns import (
    Kind,
    OrderabilityKind,
    PatternKind,
    check_witness,
    count_copies_of,
    criterion_rows,
    find_canonical_copy,
    find_monochromatic_copy,
    find_orderable_copy,
    find_rainbow_copy,
    is_canonically_colored,
    is_feasible,
    is_lower_lex,
    is_orderable,
    is_orderable_bruteforce,
    is_upper_lex,
    k33_minus_edge,
    ladder3,
    orderability_kind,
    score,
    violated_rows,
)
from ramseykit.problems import ProblemSpec, parse_problem


@st.composite
def pattern_and_colors(draw, max_m=6, ordered=False):
    m = draw(st.integers(2, max_m))
    pairs = list(edge_pairs(m))
    bits = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = tuple(p for p, b in zip(pairs, bits) if b) or (pairs[0],)
    pattern = GraphPattern(m, edges, ordered)
    cols = draw(st.lists(st.integers(0, 3), min_size=len(edges), max_size=len(edges)))
    return pattern, tuple(cols)


@settings(max_examples=300)
@given(pattern_and_colors(max_m=5, ordered=True))
def test_canonical_matches_pairwise_definition(pc):
    pattern, cols = pc
    assert is_canonically_colored(pattern, cols) == canonical_oracle(pattern, cols)


def test_lex_examples():
    p3 = GraphPattern.from_code(3, "111", True)  # edges 01, 02, 12
    assert is_lower_lex(p3, (0, 0, 1))
    assert not is_lower_lex(p3, (0, 0, 0))  # different smaller endpoints need different colors
    assert is_upper_lex(p3, (0, 1, 1))
    assert not is_canonically_colored(p3, (0, 1, 0))


@settings(max_examples=300, deadline=None)
@given(pattern_and_colors(max_m=6))
def test_greedy_orderable_matches_bruteforce(pc):
    pattern, cols = pc
    greedy = is_orderable(pattern, cols)
    brute = is_orderable_bruteforce(pattern, cols)
    assert (greedy is None) == (brute is None)
    assert (greedy is not None) == orderable_subset_dp(pattern, cols)
    if greedy is not None:
        assert check_witness(pattern, cols, greedy)


def test_orderable_examples():
    c3 = GraphPattern.complete(3)
    assert is_orderable(c3, (0, 0, 1)) is not None
    assert is_orderable(c3, (0, 1, 2)) is None
    c4 = GraphPattern.cycle(4)
    # proper 2-coloring of C4 is not orderable: the first vertex sees two colors
    assert is_orderable(c4, (0, 1, 1, 0)) is None


def test_orderable_exhaustive_small_kinds():
    for pattern in (GraphPattern.cycle(4), GraphPattern.complete(4), GraphPattern.complete_bipartite(2, 3)):
        for cols in set_partitions(pattern.num_edges):
            assert (is_orderable(pattern, cols) is None) == (is_orderable_bruteforce(pattern, cols) is None)


def test_rainbow_pigeonhole_and_detection():
    k3 = GraphPattern.complete(3)
    mono = ColoredCompleteGraph.monochromatic(5)
    assert find_rainbow_copy(mono, k3) is None
    rb = ColoredCompleteGraph.rainbow(4)
    phi = find_rainbow_copy(rb, k3)
    assert phi is not None and len(set(phi)) == 3
    assert find_monochromatic_copy(mono, k3) is not None


def test_canonical_copy_needs_ordered_pattern():
    with pytest.raises(ValueError):
        find_canonical_copy(ColoredCompleteGraph.monochromatic(3), GraphPattern.complete(3))
    with pytest.raises(ValueError):
        PatternKind(Kind.CANONICAL, GraphPattern.complete(3))


def test_copy_counts_on_monochromatic_host():
    k = ColoredCompleteGraph.monochromatic(5)
    assert count_copies_of(k, PatternKind(Kind.MONOCHROMATIC, GraphPattern.complete(3, True))) == 10
    assert count_copies_of(k, PatternKind(Kind.ORDERABLE, GraphPattern.cycle(4))) == 5 * 3


def test_orderability_kind_recognition():
    assert orderability_kind(GraphPattern.cycle(5)) is OrderabilityKind.CYCLE
    assert orderability_kind(GraphPattern.complete(4)) is OrderabilityKind.K4
    assert orderability_kind(GraphPattern.complete_bipartite(2, 3)) is OrderabilityKind.K23
    assert orderability_kind(GraphPattern.complete_bipartite(3, 3)) is OrderabilityKind.K33
    assert orderability_kind(ladder3()) is OrderabilityKind.L3
    assert orderability_kind(k33_minus_edge()) is OrderabilityKind.K33MINUS
    assert orderability_kind(GraphPattern.complete(5)) is None


def _terms(row):
    return row[0]


def _vertices(row, n):
    pairs = edge_pairs(n)
    vs = set()
    for (e, f), _ in row[0]:
        vs.update(pairs[e])
        vs.update(pairs[f])
    return vs


def test_k23_family_one_count():
    rows = criterion_rows(OrderabilityKind.K23, 5)
    three = [r for r in rows if len(_terms(r)) == 3 and r[1] == 1]
    assert len(three) == 5 * 4


def test_l3_family_two_distinctness():
    rows = criterion_rows(OrderabilityKind.L3, 6)
    two = [r for r in rows if len(_terms(r)) == 2]
    assert two
    for r in two:
        assert len(_vertices(r, 6)) >= 5


def test_k33_family_one_shape():
    rows = criterion_rows(OrderabilityKind.K33, 6)
    assert any(len(_terms(r)) == 6 and r[1] == 4 for r in rows)


def test_k4_rows_per_ordered_pair():
    rows = criterion_rows(OrderabilityKind.K4, 4)
    assert len(rows) == 12
    assert all(r[1] == 3 and len(_terms(r)) == 4 for r in rows)


def test_cycle_rows_cover_incident_pairs():
    rows = criterion_rows(OrderabilityKind.CYCLE, 4)
    assert len(rows) == 12
    assert all(r[1] == 0 for r in rows)


KINDS = [
    (GraphPattern.cycle(4), 4),
    (GraphPattern.cycle(4), 5),
    (GraphPattern.cycle(6), 6),
    (GraphPattern.complete(4), 4),
    (GraphPattern.complete(4), 5),
    (GraphPattern.complete_bipartite(2, 3), 5),
    (GraphPattern.complete_bipartite(2, 3), 6),
    (ladder3(), 6),
    (k33_minus_edge(), 6),
    (GraphPattern.complete_bipartite(2, 4), 6),
    (GraphPattern.complete_bipartite(3, 3), 6),
]


@pytest.mark.parametrize("pattern,n", KINDS, ids=[f"{p}-{n}" for p, n in KINDS])
def test_specialized_criterion_matches_generic(pattern, n):
    import random

    rnd = random.Random(7)
    E = num_edges(n)
    for trial in range(150):
        k = rnd.choice([2, 3, 4, E // 2, E])
        g = ColoredCompleteGraph(n, tuple(rnd.randrange(k) for _ in range(E))).normalized()
        generic = find_orderable_copy(g, pattern, "generic")
        special = find_orderable_copy(g, pattern, "specialized")
        assert (generic is None) == (special is None)
        if special is not None:
            cols = tuple(g.color(special[a], special[b]) for a, b in pattern.edges)
            assert is_orderable(pattern, cols) is not None


def test_cycle_criterion_is_properness():
    c5 = GraphPattern.cycle(5)
    proper = ColoredCompleteGraph.rainbow(5)
    assert find_orderable_copy(proper, c5, "specialized") is None
    # edges 01 and 02 share a color
    bad = ColoredCompleteGraph(5, (0, 0) + tuple(range(1, 9)))
    assert find_orderable_copy(bad, c5, "specialized") is not None


def test_violated_rows_zero_for_rainbow_host():
    rows = criterion_rows(OrderabilityKind.K33, 6)
    assert violated_rows(ColoredCompleteGraph.rainbow(6).colors, rows) == []


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=10, max_size=10))
def test_score_zero_iff_feasible(cols):
    g = ColoredCompleteGraph(5, tuple(cols)).normalized()
    for name in ("ER(C3)", "CR(3,4)", "OR(C3)"):
        p = parse_problem(name)
        if p.max_classes and g.num_classes > p.max_classes:
            continue
        assert (score(g, p) == 0) == is_feasible(g, p)
