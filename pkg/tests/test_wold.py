import pytest
from hypothesis import given, settings, strategies as st

from subweb_ltqp.terms import IRI, Triple
from subweb_ltqp.webhost import load_usecase
from subweb_ltqp.wold import (
    Document, ParentMismatch, Subweb, UnknownDocument, Wold, dataset_of, doc_iri_of, is_subweb,
    simpl, subweb_union,
)

E = "https://e.x/"
DOCS = [f"{E}d{i}" for i in range(4)]
TERMS = [IRI(d) for d in DOCS] + [IRI(d + "#x") for d in DOCS] + [IRI("https://else.x/y")]


@pytest.fixture(scope="module")
def usecase():
    return load_usecase().to_wold()


def test_fragment_stripping():
    assert doc_iri_of(IRI("https://ann.ex/#me")) == IRI("https://ann.ex/")
    assert doc_iri_of(IRI("https://ann.ex/")) == IRI("https://ann.ex/")


def test_usecase_web_shape(usecase):
    assert len(usecase.docs) == 7
    uma = usecase.adoc(IRI("https://uma.ex/#me"))
    assert uma == Document("https://uma.ex/")
    assert usecase.adoc(IRI("https://uma.ex/")) == uma
    assert len(usecase.data(uma)) == 6
    # the image is not an RDF document
    assert usecase.adoc(IRI("https://uma.ex/bob.jpg")) is None


def test_simpl_holds_one_document(usecase):
    d = Document("https://uma.ex/")
    s = simpl(d, usecase)
    assert s.docs == {d} and s.data(d) == usecase.data(d)
    assert is_subweb(s, usecase)
    with pytest.raises(UnknownDocument):
        simpl(Document("https://nowhere.ex/"), usecase)


def test_dataset_of_usecase(usecase):
    ds = dataset_of(usecase)
    assert len(ds.default) == usecase.triple_count()
    assert ds.named[IRI("https://ann.ex/#me")] == usecase.data(Document("https://ann.ex/"))


def test_union_of_different_parents_is_rejected(usecase):
    other = load_usecase().to_wold()
    a = simpl(Document("https://uma.ex/"), usecase)
    b = simpl(Document("https://uma.ex/"), other)
    with pytest.raises(ParentMismatch):
        subweb_union(a, b)


def test_dropping_a_triple_keeps_a_subweb(usecase):
    d = Document("https://ann.ex/")
    kept = sorted(usecase.data(d))[1:]
    s = Subweb.restrict(usecase, {d: kept})
    assert is_subweb(s, usecase)
    assert not is_subweb(usecase, s)


triples = st.builds(Triple, st.sampled_from(TERMS), st.sampled_from(TERMS[:4]), st.sampled_from(TERMS))
webs = st.fixed_dictionaries({d: st.sets(triples, max_size=5) for d in DOCS}).map(Wold.hosted)


@st.composite
def web_and_subwebs(draw, n=3):
    w = draw(webs)
    out = []
    for _ in range(n):
        chosen = draw(st.sets(st.sampled_from(sorted(w.docs, key=str))))
        data = {}
        for d in chosen:
            ts = sorted(w.data(d))
            data[d] = draw(st.sets(st.sampled_from(ts))) if ts else set()
        out.append(Subweb.restrict(w, data))
    return w, out


@settings(max_examples=150, deadline=None)
@given(web_and_subwebs())
def test_union_algebra(case):
    w, (a, b, c) = case
    assert subweb_union(a, b) == subweb_union(b, a)
    assert subweb_union(subweb_union(a, b), c) == subweb_union(a, subweb_union(b, c))
    assert subweb_union(a, a) == a
    assert subweb_union(a, Subweb.empty(w)) == a
    for s in (a, b, c, subweb_union(a, b, c)):
        assert is_subweb(s, w)


@settings(max_examples=150, deadline=None)
@given(web_and_subwebs(n=2))
def test_union_is_documentwise(case):
    w, (a, b) = case
    u = subweb_union(a, b)
    assert u.docs == a.docs | b.docs
    for d in u.docs:
        want = (a.data(d) if d in a.docs else set()) | (b.data(d) if d in b.docs else set())
        assert u.data(d) == want
