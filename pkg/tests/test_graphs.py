import io
import random

import pytest
from hypothesis import given, settings, strategies as st

from rootsim.graphs import (
    CommGraph,
    GraphError,
    GraphSequence,
    causal_past,
    compound,
    compound_all,
    in_neighborhood,
    is_rooted,
    out_neighborhood,
    read_jsonl,
    root_components,
    single_root,
    star,
    write_jsonl,
)
from rootsim.verification import brute_force_roots, verify_root_computation

from conftest import random_graph, random_sequence


def g(n, edges):
    return CommGraph.make(n, edges)


class TestCommGraph:
    def test_self_loops_stripped(self):
        assert g(3, [(0, 0), (0, 1)]).edges == frozenset({(0, 1)})

    def test_invalid_vertex_rejected(self):
        with pytest.raises(GraphError):
            g(2, [(0, 5)])

    def test_immutable_and_hashable(self):
        assert len({g(2, [(0, 1)]), g(2, [(0, 1)])}) == 1


class TestNeighborhoods:
    def test_in_neighborhood_empty_graph_is_self(self):
        assert in_neighborhood(g(3, []), 0) == frozenset({0})

    def test_in_neighborhood_reads_edges(self):
        assert in_neighborhood(g(3, [(1, 0), (2, 0)]), 0) == frozenset({0, 1, 2})

    def test_in_neighborhood_star_leaf(self):
        assert in_neighborhood(star(1, 3), 0) == frozenset({0, 1})

    def test_out_neighborhood_star_center(self):
        assert out_neighborhood(star(0, 3), 0) == frozenset({0, 1, 2})

    def test_out_of_range_process(self):
        with pytest.raises(GraphError):
            in_neighborhood(g(2, []), 2)


class TestRootComponents:
    def test_edgeless_every_singleton(self):
        assert root_components(g(3, [])) == {
            frozenset({0}),
            frozenset({1}),
            frozenset({2}),
        }

    def test_chain_with_undepicted_broadcast(self):
        # Chain 0->1->2->3 where every chain member also points at the
        # remaining (undepicted) processes: the chain head is the only root.
        n = 6
        depicted = [0, 1, 2, 3]
        edges = {(depicted[i], depicted[i + 1]) for i in range(3)}
        edges |= {(u, v) for u in depicted for v in range(n) if v not in depicted}
        assert root_components(g(n, edges)) == {frozenset({0})}

    def test_two_disjoint_cycles(self):
        roots = root_components(g(4, [(0, 1), (1, 0), (2, 3), (3, 2)]))
        assert roots == {frozenset({0, 1}), frozenset({2, 3})}

    def test_is_rooted_star(self):
        assert is_rooted(star(0, 4))

    def test_is_rooted_edgeless_false(self):
        assert not is_rooted(g(3, []))

    def test_two_member_root(self):
        # 0 <-> 1 cycle feeding a chain: single root {0, 1}.
        graph = g(4, [(0, 1), (1, 0), (1, 2), (2, 3)])
        assert is_rooted(graph)
        assert single_root(graph) == frozenset({0, 1})

    def test_single_root_none_when_split(self):
        assert single_root(g(2, [])) is None

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_against_brute_force_enumeration(self, n):
        rng = random.Random(n)
        for _ in range(60):
            graph = random_graph(rng, n, rng.uniform(0.05, 0.6))
            assert verify_root_computation(graph)

    def test_brute_force_matches_example(self):
        graph = g(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
        assert brute_force_roots(graph) == root_components(graph)


class TestCompound:
    def test_identity_is_neutral(self):
        rng = random.Random(1)
        ident = g(4, [])
        for _ in range(20):
            graph = random_graph(rng, 4)
            assert compound(ident, graph) == graph
            assert compound(graph, ident) == graph

    def test_path_composition(self):
        result = compound(g(3, [(0, 1)]), g(3, [(1, 2)]))
        assert {(0, 2), (0, 1), (1, 2)} <= set(result.edges)

    def test_cycle_squared(self):
        cycle = g(3, [(0, 1), (1, 2), (2, 0)])
        sq = compound(cycle, cycle)
        # Every vertex reaches both its one-step and two-step successor.
        for v in range(3):
            assert (v, (v + 1) % 3) in sq.edges
            assert (v, (v + 2) % 3) in sq.edges

    def test_mismatched_sizes(self):
        with pytest.raises(GraphError):
            compound(g(2, []), g(3, []))

    def test_associative_on_random_triples(self):
        rng = random.Random(7)
        for _ in range(300):
            n = rng.randint(2, 6)
            a, b, c = (random_graph(rng, n) for _ in range(3))
            assert compound(compound(a, b), c) == compound(a, compound(b, c))

    def test_compound_matches_matrix_product(self):
        # Independent oracle: boolean adjacency product with forced diagonal.
        rng = random.Random(11)
        for _ in range(100):
            n = rng.randint(2, 5)
            g1, g2 = random_graph(rng, n), random_graph(rng, n)
            m1 = [[u == v or (u, v) in g1.edges for v in range(n)] for u in range(n)]
            m2 = [[u == v or (u, v) in g2.edges for v in range(n)] for u in range(n)]
            expect = {
                (u, v)
                for u in range(n)
                for v in range(n)
                if u != v and any(m1[u][k] and m2[k][v] for k in range(n))
            }
            assert compound(g1, g2).edges == frozenset(expect)

    def test_compound_all_star_chain(self):
        result = compound_all([star(0, 3), star(1, 3)])
        assert (0, 2) in result.edges  # 0 -> 1 -> 2 across the pair


class TestStar:
    def test_star_edges(self):
        assert star(0, 3).edges == frozenset({(0, 1), (0, 2)})

    def test_star_root(self):
        assert root_components(star(0, 3)) == {frozenset({0})}


class TestCausalPast:
    def test_same_round_is_self(self):
        seq = random_sequence(random.Random(0), 4, 5)
        assert causal_past(seq, 2, 3, 3) == frozenset({2})

    def test_single_star_round(self):
        seq = GraphSequence(3, (star(1, 3),))
        assert causal_past(seq, 0, 0, 1) == frozenset({0, 1})

    def test_chain_accumulates(self):
        chain = g(4, [(0, 1), (1, 2), (2, 3)])
        seq = GraphSequence(4, (chain, chain, chain))
        assert causal_past(seq, 3, 0, 3) == frozenset({0, 1, 2, 3})

    def test_bad_bounds(self):
        seq = random_sequence(random.Random(0), 3, 4)
        with pytest.raises(ValueError):
            causal_past(seq, 0, 3, 2)

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_monotone_and_reflexive(self, seed):
        rng = random.Random(seed)
        n = rng.randint(2, 5)
        seq = random_sequence(rng, n, 6)
        p = rng.randrange(n)
        a = rng.randint(0, 5)
        prev = None
        for b in range(a, 7):
            cp = causal_past(seq, p, a, min(b, 6))
            assert p in cp
            if prev is not None:
                assert prev <= cp
            prev = cp

    def test_matches_compound_definition(self):
        # CP(p, a, b) should equal IN_p of the compound of graphs a+1 .. b.
        rng = random.Random(3)
        for _ in range(50):
            n = rng.randint(2, 5)
            seq = random_sequence(rng, n, 6)
            a, b = sorted(rng.sample(range(0, 7), 2))
            p = rng.randrange(n)
            folded = compound_all([seq.graph(r) for r in range(a + 1, b + 1)] or [g(n, [])])
            assert causal_past(seq, p, a, b) == in_neighborhood(folded, p)


class TestSequenceSerialization:
    def test_round_trip(self):
        seq = random_sequence(random.Random(5), 4, 6)
        buf = io.StringIO()
        write_jsonl(seq, buf)
        buf.seek(0)
        back = read_jsonl(buf)
        assert back.n == seq.n and len(back) == len(seq)
        assert all(back.graph(r) == seq.graph(r) for r in range(1, 7))

    def test_parse_error_carries_line(self):
        buf = io.StringIO('{"n": 2, "rounds": 1}\nnot-json\n')
        with pytest.raises(GraphError) as err:
            read_jsonl(buf)
        assert "2" in str(err.value)

    def test_one_indexed_rounds(self):
        seq = GraphSequence(2, (g(2, [(0, 1)]), g(2, [(1, 0)])))
        assert seq.graph(1).edges == frozenset({(0, 1)})
        assert seq.graph(2).edges == frozenset({(1, 0)})
        with pytest.raises(GraphError):
            seq.graph(0)
