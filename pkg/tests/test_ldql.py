import random

import numpy as np
import pytest

from subweb_ltqp.ldql import (
    A, EPS, P, PLUS, Q, U1, U2, U3, WILD, Alt, ConstEncoding, EncodingClash,
    LdqlQuery, LinkPattern, LossyAllEncoding, Pat, PStarEncoding, Seq, Star,
    UnsupportedSpecShape, all_pstar_selector, check_capture, count_lpes, counterexample_wold,
    encode_cawold, enumerate_lpes, eval_ldql_query, eval_lpe, link_pattern_atoms, lp,
    lpe_subweb, random_cawold, refute_capture, size,
)
from subweb_ltqp.ldql import Test as Check
from subweb_ltqp.selectors import ConstantSelector
from subweb_ltqp.sparql import parse_select
from subweb_ltqp.subweb import SpecAnnotatedWold, SpecTuple, soi
from subweb_ltqp.terms import IRI, Literal, Triple
from subweb_ltqp.webhost import load_usecase
from subweb_ltqp.wold import Wold

from oracles import lpe_relation

FOAF = "http://xmlns.com/foaf/0.1/"
KINDS = {type(EPS): "eps", Pat: "pat", Seq: "seq", Alt: "alt", Star: "star", Check: "test"}
E = "https://l.ex/"


def test_link_pattern_slots():
    with pytest.raises(ValueError):
        LinkPattern("?", WILD, WILD)
    with pytest.raises(ValueError):
        LinkPattern(Literal("x"), WILD, WILD)
    assert str(lp(PLUS, FOAF + "knows", WILD)) == f"<+,<{FOAF}knows>,_>"


def test_knows_closure_over_usecase():
    w = load_usecase().to_wold()
    e = Star(lp(PLUS, FOAF + "knows", WILD))
    got = eval_lpe(e, w, IRI("https://uma.ex/#me"))
    assert got == {IRI("https://uma.ex/#me"), IRI("https://ann.ex/#me"), IRI("https://bob.ex/#me")}
    sub = lpe_subweb(e, w, [IRI("https://uma.ex/#me")])
    assert {d.id for d in sub.docs} == {"https://uma.ex/", "https://ann.ex/", "https://bob.ex/"}


def test_ldql_query_evaluates_over_reached_documents():
    w = load_usecase().to_wold()
    q = parse_select(f"SELECT ?n WHERE {{ ?x <{FOAF}name> ?n }}")
    e = Seq(EPS, lp(PLUS, FOAF + "knows", WILD))
    table = eval_ldql_query(LdqlQuery(e, q), w, [IRI("https://uma.ex/#me")])
    # Ann's own document has no name; Bob's calls her Felix
    assert {r[0].lexical for r in table.rows} == {"Bob", "Felix"}


def test_test_operator_checks_nonemptiness():
    w = load_usecase().to_wold()
    has_friends = Check(lp(PLUS, FOAF + "knows", WILD))
    assert eval_lpe(has_friends, w, IRI("https://uma.ex/#me")) == {IRI("https://uma.ex/#me")}
    assert eval_lpe(has_friends, w, IRI("https://bob.ex/#me")) == frozenset()


def test_enumeration_counts_and_sizes():
    atoms = [LinkPattern(A, A, WILD), LinkPattern(WILD, A, PLUS)]
    for n in range(1, 5):
        exprs = list(enumerate_lpes(atoms, n))
        assert len(exprs) == count_lpes(2, n) == len(set(exprs))
        assert max(size(e) for e in exprs) == n
    assert count_lpes(10, 6) == 144683


# random expressions against the matrix closure oracle

def random_lpe(rng, atoms, depth=3):
    if depth == 0 or rng.random() < 0.3:
        return EPS if rng.random() < 0.1 else Pat(rng.choice(atoms))
    k = rng.random()
    if k < 0.3:
        return Seq(random_lpe(rng, atoms, depth - 1), random_lpe(rng, atoms, depth - 1))
    if k < 0.55:
        return Alt(random_lpe(rng, atoms, depth - 1), random_lpe(rng, atoms, depth - 1))
    if k < 0.85:
        return Star(random_lpe(rng, atoms, depth - 1))
    return Check(random_lpe(rng, atoms, depth - 1))


def random_lpe_web(rng, n_docs=4):
    docs = [f"{E}{i}" for i in range(n_docs)]
    names = [IRI(d) for d in docs] + [IRI(d + "#x") for d in docs] + [IRI(E + "gone")]
    preds = [IRI(E + "p"), IRI(E + "q")]
    objs = names + [Literal("v")]
    w = Wold.hosted({d: {Triple(rng.choice(names), rng.choice(preds), rng.choice(objs))
                         for _ in range(rng.randint(0, 6))} for d in docs})
    slots = [WILD, PLUS, *preds, names[0], names[1]]
    atoms = [LinkPattern(rng.choice(slots), rng.choice(slots), rng.choice(slots + [Literal("v")]))
             for _ in range(6)] + [LinkPattern(PLUS, preds[0], WILD), LinkPattern(WILD, preds[1], PLUS)]
    return w, names, atoms


def check_lpe_oracle(instances: int, seed: int = 0) -> int:
    """Mismatches between eval_lpe and the boolean-matrix oracle."""
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(instances):
        w, names, atoms = random_lpe_web(rng)
        e = random_lpe(rng, atoms)
        universe = sorted(set(names) | {x for d in w.docs for t in w.data(d) for x in t
                                        if isinstance(x, IRI)}, key=str)
        rel = lpe_relation(e, w, universe, KINDS)
        for i, u in enumerate(universe):
            want = {universe[j] for j in np.nonzero(rel[i])[0]}
            if eval_lpe(e, w, u) != want:
                mismatches += 1
                break
    return mismatches


def test_eval_lpe_matches_matrix_oracle():
    assert check_lpe_oracle(150, seed=4) == 0


# encodings

def test_encoding_needs_unfiltered_with_subwebs_tuples():
    cw = counterexample_wold()
    d1 = cw.wold.adoc(U1)
    bad = SpecAnnotatedWold(cw.wold, {d1: (SpecTuple(ConstantSelector([U2]), False),)})
    with pytest.raises(UnsupportedSpecShape):
        encode_cawold(bad, ConstEncoding())
    with pytest.raises(UnsupportedSpecShape):
        encode_cawold(cw, ConstEncoding())


def test_encoding_clash_is_detected():
    w = Wold.hosted({E + "0": {Triple(IRI(E + "0"), A, IRI(E + "0"))}})
    cw = SpecAnnotatedWold(w, {})
    with pytest.raises(EncodingClash):
        encode_cawold(cw, ConstEncoding())


def test_counterexample_subweb_of_interest():
    cw = counterexample_wold(P)
    assert {d.id for d in soi(cw.wold.adoc(U1), cw).docs} == {U1.value, U2.value}
    cw = counterexample_wold(Q)
    assert {d.id for d in soi(cw.wold.adoc(U1), cw).docs} == {U1.value, U3.value}


def test_pstar_meta_captures_its_own_predicate_only():
    enc = PStarEncoding(P)
    assert check_capture(enc, enc.meta, counterexample_wold(P), U1).ok
    res = check_capture(LossyAllEncoding(), enc.meta, counterexample_wold(Q), U1)
    assert not res.ok
    assert res.witness() == {"extra": [U2.value], "missing": [U3.value], "data_mismatch": []}


@pytest.mark.parametrize("shape", ["const", "pstar"])
def test_capture_on_random_webs(shape):
    enc = ConstEncoding() if shape == "const" else PStarEncoding(P)
    rng = random.Random(8)
    for _ in range(40):
        cw = random_cawold(rng, shape)
        for u in sorted(cw.wold.adoc_map, key=str):
            assert check_capture(enc, enc.meta, cw, u).ok


def test_refutation_finds_a_meta_expression_when_one_exists():
    # positive control: the constant class is captured, and the search must see it
    rng = random.Random(1)
    webs = [random_cawold(rng, "const", max_docs=4) for _ in range(3)]
    webs = [cw for cw in webs if any(cw.specs.values())]
    points = sorted({IRI(d.id) for cw in webs[:1] for d in cw.wold.docs}, key=str)
    rep = refute_capture(ConstEncoding(), webs[:1], points, link_pattern_atoms({A}), max_nodes=3)
    assert not rep.refuted
    assert any(str(e) == str(ConstEncoding.meta) for e in rep.capturing)


def test_bounded_refutation_of_the_closure_class():
    webs = [counterexample_wold(P), counterexample_wold(Q)]
    rep = refute_capture(LossyAllEncoding(), webs, [U1, U2, U3], link_pattern_atoms({A}), max_nodes=5)
    assert rep.refuted and rep.expressions > 1000


def test_single_predicate_alone_is_not_a_counterexample():
    # with one predicate the fixed closure expression works, so both webs are needed
    rep = refute_capture(PStarEncoding(P), [counterexample_wold(P)], [U1, U2, U3],
                         link_pattern_atoms({A, P}), max_nodes=5)
    assert not rep.refuted


def test_all_pstar_selector_reaches_closure():
    cw = counterexample_wold(P)
    assert all_pstar_selector(P, U1)(cw.wold) == {U1, U2}
    assert all_pstar_selector(Q, U1)(cw.wold) == {U1, U3}


def test_random_cawolds_stay_small():
    rng = random.Random(3)
    for shape in ("const", "pstar"):
        for _ in range(100):
            cw = random_cawold(rng, shape)
            assert 1 <= len(cw.wold.docs) <= 8 and cw.wold.triple_count() <= 12
