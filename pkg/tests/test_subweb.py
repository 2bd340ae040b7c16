import random

import pytest

from subweb_ltqp.selectors import IDENTITY, ConstantSelector, FunctionFilter, FunctionSelector
from subweb_ltqp.subweb import (
    EvalTrace, NonConvergence, SpecAnnotatedWold, SpecTuple, eval_specification,
    extract_annotations, seed_adopting_spec, soi,
)
from subweb_ltqp.terms import IRI, Triple
from subweb_ltqp.webhost import DocumentStore, load_usecase
from subweb_ltqp.wold import Document, Wold, is_subweb

from oracles import naive_spec_value, structural_soi

E = "https://r.ex/"
P = [IRI(E + p) for p in ("p", "q", "r")]
ME = {name: IRI(f"https://{name}.ex/#me") for name in ("uma", "ann", "bob")}


@pytest.fixture(scope="module")
def usecase():
    return extract_annotations(load_usecase().to_wold())


def _content(s):
    return {d.id: set(s.data(d)) for d in s.docs}


def test_usecase_annotations(usecase):
    w = usecase.wold
    counts = {d.id: len(usecase.spec(d)) for d in w.docs}
    assert counts["https://uma.ex/"] == 1 and counts["https://ann.ex/"] == 1
    assert sum(counts.values()) == 2
    assert usecase.errors == []


def test_usecase_subweb_of_interest(usecase):
    w = usecase.wold
    s = soi(Document("https://uma.ex/"), usecase)
    assert {d.id for d in s.docs} == {"https://uma.ex/", "https://ann.ex/", "https://bob.ex/",
                                      "https://corp.ex/ann/"}
    assert s.data(Document("https://uma.ex/")) == w.data(Document("https://uma.ex/"))
    for d in s.docs - {Document("https://uma.ex/")}:
        # everything else passed Uma's filter: a friend in subject position
        assert all(t.s in (ME["ann"], ME["bob"]) for t in s.data(d))
    corp = s.data(Document("https://corp.ex/ann/"))
    assert corp and all(t.s == ME["ann"] for t in corp)


def test_usecase_agrees_with_structural_recursion(usecase):
    specs = {d: tuple(usecase.spec(d)) for d in usecase.wold.docs}
    want = structural_soi(Document("https://uma.ex/"), specs, usecase.wold)
    assert _content(soi(Document("https://uma.ex/"), usecase)) == {d.id: ts for d, ts in want.items()}


def test_malformed_annotation_is_collected_not_raised():
    text = ('@prefix ex: <http://example.org/ns#> .\n'
            '<#it> ex:hasSpecification <#s> . <#s> ex:scope "FOLLOW nonsense"^^ex:SWSL .\n')
    store = DocumentStore.from_texts({"https://bad.ex/": text})
    cw = extract_annotations(store.to_wold())
    (d,) = cw.wold.docs
    assert cw.spec(d) == ()
    assert len(cw.errors) == 1 and cw.errors[0].document == d


def test_trace_reports_each_inclusion(usecase):
    trace = EvalTrace()
    eval_specification(seed_adopting_spec([IRI("https://uma.ex/")]), usecase, trace=trace)
    assert trace.iterations >= 1
    fields = [line.split("\t") for line in trace.lines]
    assert [f[2] for f in fields] == ["https://uma.ex/"]
    assert fields[0][3].startswith("kept=") and fields[0][4] == "dropped=0"


def test_iteration_cap_raises():
    # a ring where each document vouches for the next one
    n = 5
    graphs = {f"{E}{i}": {Triple(IRI(f"{E}{i}"), P[0], IRI(f"{E}{(i + 1) % n}"))} for i in range(n)}
    w = Wold.hosted(graphs)
    specs = {w.adoc(IRI(f"{E}{i}")): (SpecTuple(ConstantSelector([IRI(f"{E}{(i + 1) % n}")]), True),)
             for i in range(n)}
    cw = SpecAnnotatedWold(w, specs)
    theta = seed_adopting_spec([IRI(E + "0")])
    assert len(eval_specification(theta, cw).docs) == n
    with pytest.raises(NonConvergence):
        eval_specification(theta, cw, max_iterations=2)


# random annotated webs

def _pred_filter(allowed_by_u):
    return FunctionFilter(lambda s, u: {t for t in s if t.p in allowed_by_u.get(u, ())},
                          distributive=True, label="preds")


def _guarded_filter(guard, gated):
    # keep 'gated' triples only when S also holds a 'guard' triple: monotone, not distributive
    def fn(s, u):
        ok = any(t.p == guard for t in s)
        return {t for t in s if t.p != gated or ok}
    return FunctionFilter(fn, distributive=False, label="guarded")


def _link_selector(p):
    def fn(w):
        return {t.o for d in w.docs for t in w.data(d) if t.p == p and isinstance(t.o, IRI)}
    return FunctionSelector(fn, label=f"links[{p.value}]")


def random_annotated_web(rng: random.Random, n_docs=6, acyclic=False, distributive_only=False):
    docs = [f"{E}d{i}" for i in range(n_docs)]
    names = [IRI(d) for d in docs] + [IRI(d + "#x") for d in docs] + [IRI(E + "gone")]
    graphs = {d: {Triple(rng.choice(names), rng.choice(P), rng.choice(names))
                  for _ in range(rng.randint(0, 5))} for d in docs}
    w = Wold.hosted(graphs)
    specs = {}
    for i, d in enumerate(docs):
        tuples = []
        for _ in range(rng.choice((0, 1, 1, 2))):
            targets = names[:] if not acyclic else [IRI(x) for x in docs[i + 1:]]
            if not targets:
                break
            if rng.random() < 0.2 and not acyclic:
                sel = _link_selector(rng.choice(P))
            else:
                sel = ConstantSelector(rng.sample(targets, rng.randint(1, min(3, len(targets)))))
            kind = rng.random()
            if kind < 0.3:
                filt = IDENTITY
            elif kind < 0.7 or distributive_only:
                filt = _pred_filter({u: set(rng.sample(P, rng.randint(0, 3))) for u in names})
            else:
                filt = _guarded_filter(rng.choice(P), rng.choice(P))
            tuples.append(SpecTuple(sel, rng.random() < 0.7, filt))
        specs[w.adoc(IRI(d))] = tuple(tuples)
    return SpecAnnotatedWold(w, specs), names


def check_against_naive(n_webs: int, seed: int = 0) -> int:
    """Mismatches between the fixpoint engine and plain iteration on random webs."""
    rng = random.Random(seed)
    mismatches = 0
    for i in range(n_webs):
        cw, names = random_annotated_web(rng, distributive_only=(i % 2 == 0))
        theta = (SpecTuple(ConstantSelector(rng.sample(names, 2)), True, IDENTITY),)
        want = naive_spec_value(theta, cw.specs, cw.wold)
        got = _content(eval_specification(theta, cw))
        if got != {d.id: ts for d, ts in want.items()}:
            mismatches += 1
    return mismatches


def test_fixpoint_matches_naive_iteration():
    assert check_against_naive(60, seed=3) == 0


def test_acyclic_specs_match_structural_recursion():
    rng = random.Random(11)
    for _ in range(60):
        cw, _ = random_annotated_web(rng, acyclic=True)
        specs = dict(cw.specs)
        for d in sorted(cw.wold.docs, key=str):
            want = structural_soi(d, specs, cw.wold)
            assert _content(soi(d, cw)) == {x.id: ts for x, ts in want.items()}


def test_result_is_a_subweb_and_filters_shrink():
    rng = random.Random(2)
    for _ in range(40):
        cw, names = random_annotated_web(rng)
        for d in cw.wold.docs:
            s = soi(d, cw)
            assert is_subweb(s, cw.wold)
