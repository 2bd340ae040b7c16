from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from subweb_ltqp.bench import q_fixtures
from subweb_ltqp.sparql import (
    BGP, Cmp, Exists, QuerySyntaxError, SubSelect, TriplePattern, UnionP, UnsupportedFeature, Var,
    eval_ggp, eval_select, parse_group, parse_select, walk,
)
from subweb_ltqp.terms import IRI, Literal, Triple, XSD_INTEGER
from subweb_ltqp.webhost import fixture_path, load_usecase

from oracles import brute_force_bgp

E = "http://e.x/"


def iri(x):
    return IRI(E + x)


def test_q1_is_a_three_pattern_bgp():
    q = parse_select(q_fixtures()["Q1"])
    assert isinstance(q.where, BGP) and len(q.where.patterns) == 3


def test_q2_has_inequality_filter():
    q = parse_select(q_fixtures()["Q2"])
    cmps = [n for n in walk(q.where) if isinstance(n, Cmp)]
    assert [c.op for c in cmps] == ["!="]
    assert {c.left for c in cmps} | {c.right for c in cmps} == {Var("person1"), Var("person2")}


def test_q3_has_union_and_not_exists_subselect():
    q = parse_select(q_fixtures()["Q3"])
    nodes = list(walk(q.where))
    assert any(isinstance(n, UnionP) for n in nodes)
    ex = [n for n in nodes if isinstance(n, Exists)]
    assert len(ex) == 1 and ex[0].negated
    assert any(isinstance(n, SubSelect) for n in walk(ex[0].pattern))


def test_friends_query_over_whole_usecase():
    q = parse_select(fixture_path("friends.rq").read_text())
    table = eval_select(q, load_usecase().to_wold())
    assert len(table) == 5
    names = Counter(r[1].lexical for r in table.rows)
    assert names == Counter({"Ann": 1, "Felix": 1, "Bob": 2, "Mickey Mouse": 1})


def test_optional_keeps_unmatched_rows():
    g = {Triple(iri("a"), iri("p"), iri("b")), Triple(iri("c"), iri("p"), iri("d")),
         Triple(iri("b"), iri("q"), Literal("x"))}
    q = parse_select(f"SELECT ?s ?o ?x WHERE {{ ?s <{E}p> ?o OPTIONAL {{ ?o <{E}q> ?x }} }}")
    rows = set(eval_select(q, g).rows)
    assert rows == {(iri("a"), iri("b"), Literal("x")), (iri("c"), iri("d"), None)}


def test_optional_with_inner_filter_is_a_left_join_condition():
    g = {Triple(iri("a"), iri("p"), Literal("1", datatype=XSD_INTEGER)),
         Triple(iri("a"), iri("q"), Literal("2", datatype=XSD_INTEGER))}
    q = parse_select(f"SELECT ?x ?y WHERE {{ ?s <{E}p> ?x OPTIONAL {{ ?s <{E}q> ?y FILTER(?y = ?x) }} }}")
    assert eval_select(q, g).rows == [(Literal("1", datatype=XSD_INTEGER), None)]


def test_union_is_a_bag():
    g = {Triple(iri("a"), iri("p"), iri("b"))}
    q = parse_select(f"SELECT ?s WHERE {{ {{ ?s <{E}p> ?o }} UNION {{ ?s <{E}p> ?o }} }}")
    assert len(eval_select(q, g)) == 2
    q = parse_select(f"SELECT DISTINCT ?s WHERE {{ {{ ?s <{E}p> ?o }} UNION {{ ?s <{E}p> ?o }} }}")
    assert len(eval_select(q, g)) == 1


def test_not_exists_and_bound():
    g = {Triple(iri("a"), iri("p"), iri("b")), Triple(iri("c"), iri("p"), iri("d")),
         Triple(iri("b"), iri("q"), iri("z"))}
    q = parse_select(f"SELECT ?s WHERE {{ ?s <{E}p> ?o FILTER NOT EXISTS {{ ?o <{E}q> ?z }} }}")
    assert eval_select(q, g).rows == [(iri("c"),)]
    q = parse_select(f"SELECT ?s WHERE {{ ?s <{E}p> ?o FILTER(bound(?nope)) }}")
    assert len(eval_select(q, g)) == 0


def test_numeric_equality_is_by_value():
    g = {Triple(iri("a"), iri("p"), Literal("01", datatype=XSD_INTEGER))}
    q = parse_select(f"SELECT ?s WHERE {{ ?s <{E}p> ?o FILTER(?o = 1) }}")
    assert len(eval_select(q, g)) == 1


def test_errors_in_filters_drop_the_row():
    g = {Triple(iri("a"), iri("p"), Literal("x"))}
    q = parse_select(f"SELECT ?s WHERE {{ ?s <{E}p> ?o FILTER(?o < 3) }}")
    assert len(eval_select(q, g)) == 0


@pytest.mark.parametrize("text", [
    "SELECT * WHERE { GRAPH ?g { ?s ?p ?o } }",
    "SELECT * WHERE { ?s ?p ?o } LIMIT 3",
    "SELECT * WHERE { ?s <http://e.x/p>/<http://e.x/q> ?o }",
])
def test_unsupported_features_are_named(text):
    with pytest.raises(UnsupportedFeature):
        parse_select(text)


def test_syntax_error_has_position():
    with pytest.raises(QuerySyntaxError) as info:
        parse_select("SELECT ?s WHERE {\n  ?s ?p }")
    assert info.value.line == 2


def test_relative_iris_need_a_base():
    g = parse_group("{ <#it> ?p ?o }")
    (tp,) = g.patterns
    assert not isinstance(tp.s, IRI)
    g = parse_group("{ <#it> ?p ?o }", base="https://a.ex/doc")
    (tp,) = g.patterns
    assert tp.s == IRI("https://a.ex/doc#it")


def test_csv_and_text_outputs_are_sorted():
    q = parse_select(fixture_path("friends.rq").read_text())
    table = eval_select(q, load_usecase().to_wold())
    csv_lines = table.to_csv().splitlines()
    assert csv_lines[0] == "friend,name,email,picture"
    assert csv_lines[1].startswith("<http://dbpedia.org/resource/Mickey_Mouse>")
    assert csv_lines[1].endswith("NULL,NULL")
    assert table.to_text() == table.to_text()


# brute-force oracle for basic graph patterns

TERMS = [iri(x) for x in "abc"] + [Literal("1")]
VARS = [Var(x) for x in "xyz"]
slots = st.one_of(st.sampled_from(TERMS[:3]), st.sampled_from(VARS))
obj_slots = st.one_of(st.sampled_from(TERMS), st.sampled_from(VARS))
patterns = st.lists(st.builds(TriplePattern, slots, slots, obj_slots), min_size=1, max_size=3)
graphs = st.sets(st.builds(Triple, st.sampled_from(TERMS[:3]), st.sampled_from(TERMS[:3]),
                           st.sampled_from(TERMS)), max_size=10)


def _canon(rows):
    return sorted(tuple(sorted((k.name, repr(v)) for k, v in r.items())) for r in rows)


@settings(max_examples=300, deadline=None)
@given(patterns, graphs)
def test_bgp_matches_brute_force(pats, g):
    got = eval_ggp(BGP(tuple(pats)), frozenset(g))
    want = brute_force_bgp(pats, frozenset(g), lambda x: isinstance(x, Var))
    assert _canon(got) == _canon(want)


@settings(max_examples=200, deadline=None)
@given(patterns, patterns, graphs)
def test_union_matches_concatenation(left, right, g):
    node = UnionP(BGP(tuple(left)), BGP(tuple(right)))
    got = eval_ggp(node, frozenset(g))
    want = (brute_force_bgp(left, frozenset(g), lambda x: isinstance(x, Var))
            + brute_force_bgp(right, frozenset(g), lambda x: isinstance(x, Var)))
    assert _canon(got) == _canon(want)
