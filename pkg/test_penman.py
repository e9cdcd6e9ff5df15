import numpy as np
import pytest

from graphs.penman import (
    AmrEdge,
    AmrGraph,
    AmrNode,
    declaration_order,
    parse_penman,
    serialize_penman,
    split_records,
)
from stages.stage1_generate import random_graph
from utils.errors import ParseError, SerializeError, UsageError

MULTI_SENTENCE = (
    "(m / multi-sentence :snt1 (t / trust-01 :ARG2 (i / i)) "
    ":snt2 (g / good-02 :ARG1 (g2 / get-01 :ARG1 (t2 / thing :mod (t3 / this)) "
    ":time~e.10,12 (e / early :degree (m2 / most) :compared-to (p / possible-01 :ARG1 g2)) "
    ":ARG1-of (i2 / instead-of-91 :ARG2 (l / let-01 :ARG1 (w / worsen-01 :ARG1 t2 :mod (e2 / even))))) "
    ":degree~e.5 (m3 / more)))"
)


def _edge_set(graph, mapping=None):
    mapping = mapping or list(range(graph.n))
    return sorted((mapping[e.source], mapping[e.target], e.role) for e in graph.edges)


def assert_isomorphic(original: AmrGraph, parsed: AmrGraph):
    """Parsed node i is the i-th node declared when serializing the original."""
    order = declaration_order(original)
    assert parsed.n == original.n
    position = {old: new for new, old in enumerate(order)}
    for old, new in position.items():
        assert parsed.nodes[new].concept == original.nodes[old].concept
        if not original.nodes[old].constant:
            assert parsed.nodes[new].variable == original.nodes[old].variable
    assert _edge_set(parsed) == _edge_set(original, [position[i] for i in range(original.n)])
    assert parsed.root == position[original.root] == 0


class TestParsePenman:
    def test_single_child(self):
        g = parse_penman("(a / b :c (d / e))")
        assert g.n == 2
        assert g.edges == (AmrEdge(0, 1, "c"),)
        assert g.concepts == ["b", "e"]
        assert g.root == 0

    def test_reentrant_reference_adds_an_edge(self, want_graph):
        """A bare variable re-enters the node it names instead of creating one."""
        assert want_graph.n == 3
        assert _edge_set(want_graph) == [(0, 1, "ARG0"), (0, 2, "ARG1"), (2, 1, "ARG0")]
        assert want_graph.reentrant_variables() == ["b"]
        assert want_graph.reentrancies() == 1

    def test_reference_before_declaration(self):
        g = parse_penman("(a / x :ARG0 b :ARG1 (b / y))")
        assert _edge_set(g) == [(0, 1, "ARG0"), (0, 1, "ARG1")]

    def test_alignments_are_stripped(self):
        g = parse_penman("(t / time~e.10,12 :ARG0~e.5 (b / boy~e.3))")
        assert g.concepts == ["time", "boy"]
        assert g.edges[0].role == "ARG0"

    def test_constants_become_leaves(self):
        g = parse_penman('(n / name :op1 "Bob" :quant 5 :polarity -)')
        assert g.n == 4
        assert [node.constant for node in g.nodes] == [False, True, True, True]
        assert g.concepts[1:] == ['"Bob"', "5", "-"]

    def test_inverse_role_points_back_at_the_enclosing_node(self):
        g = parse_penman("(a / x :ARG1-of (b / y))")
        assert g.edges == (AmrEdge(1, 0, "ARG1"),)
        assert serialize_penman(g) == "(a / x :ARG1-of (b / y))"

    def test_of_roles_that_are_not_inverses(self):
        g = parse_penman("(a / x :consist-of (b / y))")
        assert g.edges == (AmrEdge(0, 1, "consist-of"),)

    def test_undeclared_word_is_a_constant(self):
        g = parse_penman("(g / go-02 :mode imperative :ARG0 (y / you))")
        assert g.n == 3
        assert g.nodes[1] == AmrNode(g.nodes[1].variable, "imperative", constant=True)
        assert g.edges[0] == AmrEdge(0, 1, "mode")
        assert serialize_penman(g) == "(g / go-02 :mode imperative :ARG0 (y / you))"

    def test_multi_sentence_reentrancies(self):
        g = parse_penman(MULTI_SENTENCE)
        assert set(g.reentrant_variables()) == {"t2", "g2"}
        # i2 attaches to g2 through :ARG1-of, a third incoming edge
        assert g.reentrancies() == 3
        assert g.n == 15


class TestParseErrors:
    def test_missing_close_paren(self):
        text = "(a / b :c (d / e)"
        with pytest.raises(ParseError, match="missing"):
            parse_penman(text)

    def test_extra_close_paren(self):
        with pytest.raises(ParseError, match="unbalanced"):
            parse_penman("(a / b))")

    def test_duplicate_variable(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_penman("(a / b :c (a / e))")

    def test_undeclared_reference(self):
        with pytest.raises(ParseError, match="undeclared"):
            parse_penman("(a / b :c z)")

    def test_undeclared_variable_shaped_reference(self):
        with pytest.raises(ParseError, match="undeclared"):
            parse_penman("(a / b :c x2)")

    def test_offset_counts_utf8_bytes(self):
        """'é' takes two bytes, so the reference at character 10 sits at byte 11."""
        with pytest.raises(ParseError) as info:
            parse_penman("(é / b :c z)")
        assert info.value.offset == 11

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse_penman("   ")


class TestAmrGraph:
    def test_disconnected_graph_rejected(self):
        nodes = (AmrNode("a", "x"), AmrNode("b", "y"))
        with pytest.raises(UsageError, match="connected"):
            AmrGraph(nodes, ())

    def test_inverse_role_on_a_variable_rejected(self):
        nodes = (AmrNode("a", "x"), AmrNode("b", "y"))
        with pytest.raises(UsageError, match="inverse role"):
            AmrGraph(nodes, (AmrEdge(0, 1, "ARG0-of"),))

    def test_permuted_keeps_structure(self, want_graph):
        p = want_graph.permuted([2, 0, 1])
        assert p.root == 2
        assert p.nodes[0].variable == "b"
        assert sorted((e.source, e.target) for e in p.edges) == [(1, 0), (2, 0), (2, 1)]


class TestSerializePenman:
    def test_declares_once_then_references(self, want_graph):
        assert serialize_penman(want_graph) == "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))"

    def test_multi_sentence_round_trip(self):
        g = parse_penman(MULTI_SENTENCE)
        assert_isomorphic(g, parse_penman(serialize_penman(g)))

    def test_node_behind_an_incoming_edge_uses_an_inverse_role(self):
        g = AmrGraph((AmrNode("a", "x"), AmrNode("b", "y")), (AmrEdge(1, 0, "ARG0"),), root=0)
        text = serialize_penman(g)
        assert text == "(a / x :ARG0-of (b / y))"
        assert_isomorphic(g, parse_penman(text))

    def test_root_with_only_incoming_edges_round_trips(self):
        g = parse_penman("(p / person :ARG0 (j / join-01))")
        moved = AmrGraph(g.nodes, g.edges, root=1)
        text = serialize_penman(moved)
        assert text == "(j / join-01 :ARG0-of (p / person))"
        assert_isomorphic(moved, parse_penman(text))

    def test_every_root_of_a_parsed_graph_round_trips(self):
        g = parse_penman(MULTI_SENTENCE)
        for root in range(g.n):
            if g.nodes[root].constant:
                continue
            moved = AmrGraph(g.nodes, g.edges, root=root)
            text = serialize_penman(moved)
            assert_isomorphic(moved, parse_penman(text))
            assert serialize_penman(parse_penman(text)) == text

    def test_role_without_an_inverse_form_fails(self):
        # consist-of is a plain role, so b cannot hang off a
        g = AmrGraph((AmrNode("a", "x"), AmrNode("b", "y")), (AmrEdge(1, 0, "consist"),), root=0)
        with pytest.raises(SerializeError):
            serialize_penman(g)

    def test_serialization_is_a_fixed_point(self):
        text = serialize_penman(parse_penman(MULTI_SENTENCE))
        assert serialize_penman(parse_penman(text)) == text

    def test_generated_graphs_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            g = random_graph(rng, 12)
            assert_isomorphic(g, parse_penman(serialize_penman(g)))

    @pytest.mark.slow
    def test_generated_graphs_round_trip_fuzz(self):
        for seed in range(10_000):
            g = random_graph(np.random.default_rng(seed), 15)
            assert_isomorphic(g, parse_penman(serialize_penman(g)))


class TestSplitRecords:
    def test_targets_and_blank_lines(self):
        text = "(a / b)\tb\n\n\n(c / d\n   :x (e / f))\td f\n\n(g / h)\n"
        assert split_records(text) == [("(a / b)", "b"), ("(c / d\n   :x (e / f))", "d f"), ("(g / h)", None)]
