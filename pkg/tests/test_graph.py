import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agrasst.graph import (
    EDGE,
    TRIANGLE,
    TWO_STAR,
    Graph,
    InvalidStatisticError,
    all_graphs,
    batch_conditioning_statistics,
    conditioning_statistic,
    conditioning_statistics,
    count_edges,
    count_triangles,
    count_two_stars,
    degree_histogram,
    degree_vector,
    flip_all,
    format_edge_list,
    injection_count,
    num_pairs,
    pair_index,
    pair_vertices,
    parse_edge_list,
    read_edge_list,
    relabel,
    scaled_subgraph_count,
    stack_bits,
    toggle,
    write_edge_list,
)
from agrasst.data import load_dataset, vertex_names
from agrasst.models import bernoulli_sample


@st.composite
def graphs(draw, min_n=2, max_n=7):
    n = draw(st.integers(min_n, max_n))
    bits = draw(st.lists(st.integers(0, 1), min_size=num_pairs(n), max_size=num_pairs(n)))
    return Graph(n, np.array(bits, dtype=np.uint8))


def brute_counts(g):
    A = g.adjacency()
    n = g.n
    edges = sum(A[i, j] for i in range(n) for j in range(i + 1, n))
    two = sum(A[v, a] * A[v, b] for v in range(n) for a in range(n) for b in range(a + 1, n) if a != v and b != v)
    tri = sum(A[i, j] * A[j, k] * A[i, k] for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n))
    return edges, two, tri


# -- pair indexing -------------------------------------------------------------


def test_pair_order_is_lexicographic():
    n = 4
    expected = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert [pair_vertices(s, n) for s in range(num_pairs(n))] == expected
    assert [pair_index(i, j, n) for i, j in expected] == list(range(6))


@given(st.integers(2, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, num_pairs(n) - 1))))
def test_pair_bijection(ns):
    n, s = ns
    i, j = pair_vertices(s, n)
    assert 0 <= i < j < n
    assert pair_index(i, j, n) == s


def test_pair_index_is_unordered_and_checked():
    assert pair_index(2, 1, 4) == pair_index(1, 2, 4)
    with pytest.raises(IndexError):
        pair_index(0, 4, 4)
    with pytest.raises(IndexError):
        pair_index(2, 2, 4)


# -- graph values ----------------------------------------------------------------


def test_bit_length_checked():
    with pytest.raises(ValueError):
        Graph(4, np.zeros(5, dtype=np.uint8))


def test_equality_and_hash():
    a = Graph.from_edges(4, [(0, 1), (2, 3)])
    b = Graph.from_edges(4, [(2, 3), (1, 0)])
    assert a == b and hash(a) == hash(b)
    assert a != Graph.from_edges(5, [(0, 1), (2, 3)])
    assert len({a, b}) == 1


def test_bits_are_read_only():
    g = Graph.empty(3)
    with pytest.raises(ValueError):
        g.bits[0] = 1


def test_toggle_examples():
    g = toggle(Graph.empty(3), 0, 1)
    assert g.edges() == [(0, 1)]
    k4 = Graph.complete(4)
    h = toggle(k4, 5, 0)
    assert count_edges(h) == 5
    assert (2, 3) not in h.edges()
    assert count_edges(k4) == 6  # input untouched


@given(graphs(), st.data())
def test_toggle_set_to_value(g, data):
    s = data.draw(st.integers(0, g.num_pairs - 1))
    before = g.bits.copy()
    h = toggle(toggle(g, s, 1), s, 0)
    assert h.bits[s] == 0
    mask = np.arange(g.num_pairs) != s
    assert np.array_equal(h.bits[mask], g.bits[mask])
    assert np.array_equal(g.bits, before)


def test_toggle_out_of_range():
    with pytest.raises(IndexError):
        toggle(Graph.empty(3), 3, 1)


def test_flip_all_rows_differ_in_one_entry():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])
    F = flip_all(g)
    assert F.shape == (6, 6)
    assert np.array_equal((F != g.bits).sum(axis=1), np.ones(6))
    assert np.array_equal(np.diag(F), 1 - g.bits)


# -- counts ----------------------------------------------------------------------


def test_count_examples():
    path = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert (count_edges(path), count_two_stars(path), count_triangles(path)) == (2, 1, 0)
    k4 = Graph.complete(4)
    assert (count_edges(k4), count_two_stars(k4), count_triangles(k4)) == (6, 12, 4)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_counts_match_triple_loop_exhaustively(n):
    for g in all_graphs(n):
        assert (count_edges(g), count_two_stars(g), count_triangles(g)) == brute_counts(g)


def test_er_mean_edge_count():
    sample = bernoulli_sample(20, 0.112, 5000, seed=0)
    mean = np.mean([count_edges(g) for g in sample])
    # binomial(190, 0.112) mean 21.28, standard error 4.35 / sqrt(5000) = 0.06
    assert abs(mean - 21.28) < 0.25


def test_degree_examples():
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert degree_vector(star).tolist() == [3, 1, 1, 1]
    assert degree_histogram(Graph.empty(4)).tolist() == [4, 0, 0, 0]


@given(graphs())
def test_degree_histogram_identities(g):
    h = degree_histogram(g)
    assert len(h) == g.n
    assert h.sum() == g.n
    assert (np.arange(g.n) * h).sum() == 2 * count_edges(g)


def test_karate_bundle():
    g = load_dataset("karate")
    assert g.n == 34
    assert count_edges(g) == 78
    assert degree_vector(g).sum() == 156


def test_florentine_bundle():
    g = load_dataset("florentine")
    names = vertex_names("florentine")
    assert g.n == 16 and len(names) == 16
    assert count_edges(g) == 20
    assert count_triangles(g) == 3
    assert "Medici" in names
    # Pucci married into none of the other families
    assert degree_vector(g)[names.index("Pucci")] == 0


# -- scaled subgraph counts --------------------------------------------------------


def manual_injections(pattern, g):
    """Edge-preserving injections by trying every vertex map."""
    count = 0
    P, A = pattern.adjacency(), g.adjacency()
    for image in itertools.permutations(range(g.n), pattern.n):
        if all(A[image[a], image[b]] for a, b in pattern.edges()):
            count += 1
    return count


def test_scaled_count_examples():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    assert scaled_subgraph_count(g, EDGE) == 6
    k3 = Graph.complete(3)
    assert injection_count(TRIANGLE, k3) == 6
    assert scaled_subgraph_count(k3, TRIANGLE) == pytest.approx(2.0)
    assert scaled_subgraph_count(Graph.empty(6), TRIANGLE) == 0


@settings(max_examples=40)
@given(graphs(min_n=3, max_n=6))
def test_injection_count_matches_permutation_oracle(g):
    for pattern in (EDGE, TWO_STAR, TRIANGLE):
        assert injection_count(pattern, g) == manual_injections(pattern, g)


@given(graphs(min_n=3, max_n=7))
def test_scaled_counts_relate_to_raw_counts(g):
    n = g.n
    assert scaled_subgraph_count(g, EDGE) == 2 * count_edges(g)
    assert scaled_subgraph_count(g, TWO_STAR) == pytest.approx(2 * count_two_stars(g) / n)
    assert scaled_subgraph_count(g, TRIANGLE) == pytest.approx(6 * count_triangles(g) / n)


def test_disconnected_pattern_rejected():
    two_edges = Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(InvalidStatisticError):
        scaled_subgraph_count(Graph.complete(5), two_edges)


# -- conditioning statistics ----------------------------------------------------------


def test_conditioning_examples():
    k3 = Graph.complete(3)
    s = pair_index(0, 1, 3)
    assert conditioning_statistic("tri", k3, s) == 1
    assert conditioning_statistic("edges", k3, s) == 2
    assert conditioning_statistic("bideg", Graph.complete(4), 0) == (2, 2)


def test_unknown_kind():
    with pytest.raises(InvalidStatisticError):
        conditioning_statistic("wedges", Graph.complete(3), 0)


def brute_statistic(kind, g, s):
    """Recompute t(x_{-s}) from the graph with entry s removed."""
    h = toggle(g, s, 0)
    i, j = pair_vertices(s, g.n)
    deg = degree_vector(h)
    lo, hi = sorted((int(deg[i]), int(deg[j])))
    A = h.adjacency()
    return {
        "edges": count_edges(h),
        "sumdeg": lo + hi,
        "bideg": (lo, hi),
        "d3": (count_edges(h), lo, hi),
        "tri": int((A[i] * A[j]).sum()),
    }[kind]


@settings(max_examples=60)
@given(graphs(), st.sampled_from(["edges", "sumdeg", "bideg", "d3", "tri"]), st.data())
def test_conditioning_matches_brute_force(g, kind, data):
    s = data.draw(st.integers(0, g.num_pairs - 1))
    assert conditioning_statistic(kind, g, s) == brute_statistic(kind, g, s)


@settings(max_examples=60)
@given(graphs(), st.sampled_from(["edges", "sumdeg", "bideg", "d3", "tri"]), st.data())
def test_conditioning_ignores_entry_s(g, kind, data):
    s = data.draw(st.integers(0, g.num_pairs - 1))
    v = conditioning_statistic(kind, g, s)
    assert v == conditioning_statistic(kind, toggle(g, s, 1), s) == conditioning_statistic(kind, toggle(g, s, 0), s)


def test_batch_statistics_match_single():
    sample = bernoulli_sample(7, 0.4, 12, seed=3)
    bits = stack_bits(sample)
    for kind in ("edges", "sumdeg", "bideg", "d3", "tri"):
        batch = batch_conditioning_statistics(kind, bits, 7)
        for g, row in zip(sample, batch):
            assert np.array_equal(row, conditioning_statistics(kind, g))


@given(graphs(min_n=3, max_n=6), st.data())
def test_statistics_equivariant_under_relabelling(g, data):
    perm = data.draw(st.permutations(range(g.n)))
    h = relabel(g, perm)
    for kind in ("edges", "sumdeg", "bideg", "tri"):
        before = sorted(map(tuple, np.atleast_2d(conditioning_statistics(kind, g).reshape(g.num_pairs, -1))))
        after = sorted(map(tuple, np.atleast_2d(conditioning_statistics(kind, h).reshape(h.num_pairs, -1))))
        assert before == after


# -- edge-list format ---------------------------------------------------------------


@given(graphs(min_n=1, max_n=9))
def test_edge_list_round_trip(g):
    assert parse_edge_list(format_edge_list(g)) == g


def test_parse_comments_and_blank_lines():
    text = "# a comment\n\nn 4\n0 1  # trailing\n\n2 3\n"
    assert parse_edge_list(text) == Graph.from_edges(4, [(0, 1), (2, 3)])


@pytest.mark.parametrize("text", ["0 1\n", "n 3\n1 0\n", "n 3\n0 3\n", "n 3\n0 1 2\n", ""])
def test_parse_rejects_malformed(text):
    with pytest.raises(ValueError):
        parse_edge_list(text)


def test_file_round_trip(tmp_path):
    g = load_dataset("florentine")
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    assert read_edge_list(path) == g


def test_stack_bits_rejects_mixed_n():
    with pytest.raises(ValueError):
        stack_bits([Graph.empty(3), Graph.empty(4)])
