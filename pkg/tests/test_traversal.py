import random

import pytest

from subweb_ltqp.sparql import parse_select
from subweb_ltqp.subweb import eval_specification, extract_annotations, seed_adopting_spec
from subweb_ltqp.terms import IRI, Triple
from subweb_ltqp.traversal import Criterion, guided_subweb, reachable_subweb, run_strategy
from subweb_ltqp.webhost import CachingFetcher, DocumentStore, StoreFetcher, load_usecase
from subweb_ltqp.wold import Subweb, subweb_union

from golden import ROWS, SEED, friends_query, run_usecase

E = "https://t.ex/"


@pytest.fixture(scope="module")
def runs():
    store = load_usecase()
    return run_usecase(lambda: CachingFetcher(StoreFetcher(store)))


def test_usecase_all_finds_every_row(runs):
    rows, n, stats = runs["all"]
    assert rows == set(ROWS.values()) and n == 5
    assert stats.docs_fetched == 7


def test_usecase_none_stays_home(runs):
    rows, n, stats = runs["none"]
    assert n == 0 and stats.links_followed == 0 and stats.fetch_attempts == 1


def test_usecase_match_misses_ann_details(runs):
    rows, _, _ = runs["match"]
    assert ROWS[1] not in rows and ROWS[4] not in rows
    assert {ROWS[2], ROWS[3], ROWS[5]} <= rows


def test_usecase_guided_is_precise(runs):
    rows, n, stats = runs["swsl"]
    assert rows == {ROWS[1], ROWS[2], ROWS[3]} and n == 3
    assert stats.fetch_attempts == 4 and stats.links_followed == 3


def test_link_counts_are_ordered(runs):
    links = {s: runs[s][2].links_followed for s in runs}
    assert links["none"] <= min(links["match"], links["swsl"])
    assert max(links["match"], links["swsl"]) <= links["all"]


def test_match_criterion_only_follows_matching_triples():
    crit = Criterion.match(friends_query())
    knows = IRI("http://xmlns.com/foaf/0.1/knows")
    t = Triple(IRI("https://uma.ex/#me"), knows, IRI("https://ann.ex/#me"))
    assert crit.links(t) == {IRI("https://uma.ex/#me"), IRI("https://ann.ex/#me"), knows}
    other = Triple(IRI("https://uma.ex/#me"), IRI("https://x.ex/p"), IRI("https://ann.ex/#me"))
    assert crit.links(other) == set()
    assert Criterion.none().links(t) == set()


def test_max_depth_limits_the_crawl():
    store = load_usecase()
    sub, stats = reachable_subweb(Criterion.all(), [SEED], StoreFetcher(store), max_depth=0)
    assert {d.id for d in sub.docs} == {SEED} and stats.links_followed == 0
    sub1, _ = reachable_subweb(Criterion.all(), [SEED], StoreFetcher(store), max_depth=1)
    assert {"https://ann.ex/", "https://bob.ex/"} <= {d.id for d in sub1.docs}
    assert "https://corp.ex/ann/" not in {d.id for d in sub1.docs}


def test_parallel_fetching_gives_the_same_result():
    store = load_usecase()
    q = friends_query()
    for strategy in ("all", "swsl"):
        a, sa = run_strategy(strategy, q, [SEED], StoreFetcher(store), parallelism=1)
        b, sb = run_strategy(strategy, q, [SEED], StoreFetcher(store), parallelism=8)
        assert sorted(a.sorted_rows(), key=repr) == sorted(b.sorted_rows(), key=repr)
        assert sa.counts() == sb.counts()


def test_bad_arguments():
    q = friends_query()
    with pytest.raises(ValueError):
        run_strategy("all", q, [], StoreFetcher(load_usecase()))
    with pytest.raises(ValueError):
        run_strategy("dfs", q, [SEED], StoreFetcher(load_usecase()))


def test_unreachable_seed_is_a_failure_not_an_error():
    q = parse_select("SELECT * WHERE { ?s ?p ?o }")
    table, stats = run_strategy("all", q, ["https://nowhere.ex/"], StoreFetcher(load_usecase()))
    assert len(table) == 0 and stats.failures == [("https://nowhere.ex/", "not_found")]


# guided traversal against eager evaluation on random published-spec webs

def random_published_web(rng: random.Random, n=6) -> DocumentStore:
    texts = {}
    for i in range(n):
        lines = ["@prefix ex: <http://example.org/ns#> .", "@prefix t: <https://t.ex/v#> ."]
        for _ in range(rng.randint(0, 4)):
            o = rng.choice([f"<{E}{j}#it>" for j in range(n + 1)] + ['"lit"'])
            lines.append(f"<#it> t:{rng.choice('pq')} {o} .")
        for k in range(rng.choice((0, 1, 1, 2))):
            spec = f"FOLLOW ?x {{ <#it> t:{rng.choice('pq')} ?x . }}"
            if rng.random() < 0.3:
                spec += " RECURSE"
            if rng.random() < 0.6:
                spec += " WITH SUBWEBS"
            if rng.random() < 0.6:
                spec += f" INCLUDE {{ ?x t:{rng.choice('pq')} ?o . }}"
            lines.append(f'<#it> ex:hasSpecification <#s{k}> . <#s{k}> ex:scope """{spec}"""^^ex:SWSL .')
        texts[f"{E}{i}"] = "\n".join(lines) + "\n"
    return DocumentStore.from_texts(texts)


def _content(s):
    return {d.id: set(s.data(d)) for d in s.docs}


def test_guided_traversal_matches_eager_evaluation():
    rng = random.Random(17)
    sizes = []
    for _ in range(60):
        store = random_published_web(rng)
        seeds = [IRI(f"{E}{rng.randrange(6)}")]
        cw = extract_annotations(store.to_wold())
        theta = seed_adopting_spec(seeds)
        part = eval_specification(theta, cw)
        own = Subweb.restrict(cw.wold, {cw.wold.adoc(s): cw.wold.data(cw.wold.adoc(s)) for s in seeds})
        want = _content(subweb_union(own, part))
        got, stats = guided_subweb(seeds, theta, StoreFetcher(store))
        assert _content(got) == want
        assert stats.docs_fetched >= len(want)
        sizes.append(len(want))
    # the sample must exercise multi-document results
    assert max(sizes) >= 4 and sum(n > 1 for n in sizes) > 20
