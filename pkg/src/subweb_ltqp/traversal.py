"""Link-traversal strategies: reachability criteria and specification-guided traversal.

Reachability traversal is a breadth-first crawl from the seeds. Each fetched
triple is shown to the criterion, which names the IRIs to dereference next:
none (``cNone``), all of them (``cAll``), or those of triples that match a
pattern of the query (``cMatch``). Guided traversal instead evaluates a
subweb specification over a web whose documents are fetched on first use.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .sparql import ResultTable, SelectQuery, PatternMatcher, eval_select, triple_patterns
from .subweb import (
    SpecAnnotatedWold, annotations_of, eval_specification, seed_adopting_spec,
)
from .terms import IRI, iris_of, triple_sort_key
from .webhost import FetchResult, Fetcher, is_dereferenceable
from .wold import Document, Subweb, Wold, doc_iri_of, subweb_union

log = logging.getLogger(__name__)

STRATEGIES = ("none", "all", "match", "swsl")


class Criterion:
    """A reachability criterion: which IRIs of a triple to dereference."""

    def __init__(self, kind: str, patterns: Iterable = ()):
        if kind not in ("none", "all", "match"):
            raise ValueError(f"unknown criterion {kind!r}")
        self.kind = kind
        self.patterns = tuple(dict.fromkeys(patterns))
        self._test = PatternMatcher(self.patterns)

    @classmethod
    def none(cls) -> "Criterion":
        return cls("none")

    @classmethod
    def all(cls) -> "Criterion":
        return cls("all")

    @classmethod
    def match(cls, query) -> "Criterion":
        """Criterion following the IRIs of triples that match any pattern of ``query``."""
        return cls("match", triple_patterns(query))

    def links(self, t) -> set:
        if self.kind == "none":
            return set()
        if self.kind == "all":
            return iris_of(t)
        if self._test(t):
            return iris_of(t)
        return set()

    def __repr__(self):
        return f"Criterion({self.kind})"


@dataclass
class TraversalStats:
    links_followed: int = 0
    fetch_attempts: int = 0
    docs_fetched: int = 0
    triples_collected: int = 0
    wall_times: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    def counts(self) -> dict:
        """The deterministic part of the statistics."""
        return {"links_followed": self.links_followed, "fetch_attempts": self.fetch_attempts,
                "docs_fetched": self.docs_fetched, "triples_collected": self.triples_collected}


def _fetch_all(fetcher: Fetcher, iris: list, parallelism: int) -> dict:
    if parallelism <= 1 or len(iris) <= 1:
        return {i: fetcher.fetch(i) for i in iris}
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return dict(zip(iris, pool.map(fetcher.fetch, iris)))


def _seed_docs(seeds: Iterable) -> list:
    out = set()
    for s in seeds:
        u = IRI(s) if isinstance(s, str) else s
        if is_dereferenceable(u):
            out.add(doc_iri_of(u).value)
    return sorted(out)


def reachable_subweb(criterion: Criterion, seeds: Iterable, fetcher: Fetcher,
                     max_depth: Optional[int] = None, parallelism: int = 1):
    """Crawl from ``seeds`` under ``criterion``.

    Every IRI is stripped of its fragment and dereferenced at most once; only
    http(s) IRIs are dereferenced. Levels are processed in lexicographic order.

    Returns:
        ``(subweb, stats)``; the subweb holds every fetched RDF document in full.
    """
    stats = TraversalStats()
    start = time.perf_counter()
    seeds = _seed_docs(seeds)
    visited = set(seeds)
    level = seeds
    depth = 0
    graphs: dict = {}
    prefixes: dict = {}
    while level:
        results = _fetch_all(fetcher, level, parallelism)
        nxt = set()
        for iri in level:
            r: FetchResult = results[iri]
            stats.fetch_attempts += 1
            if not r.ok:
                stats.failures.append((iri, r.status))
                stats.trace.append(f"fetch\t{iri}\t{r.status}")
                continue
            stats.docs_fetched += 1
            graphs[iri] = r.graph
            prefixes[iri] = r.prefixes
            stats.trace.append(f"fetch\t{iri}\tok")
            if max_depth is not None and depth >= max_depth:
                continue
            for t in sorted(r.graph, key=triple_sort_key):
                for u in sorted(criterion.links(t), key=lambda x: x.value):
                    if not is_dereferenceable(u):
                        continue
                    d = doc_iri_of(u).value
                    if d not in visited:
                        visited.add(d)
                        nxt.add(d)
                        stats.trace.append(f"follow\t{d}\tc{criterion.kind} from {iri}")
        level = sorted(nxt)
        depth += 1
    stats.links_followed = stats.fetch_attempts - len(seeds)
    root = Wold.hosted(graphs, prefixes)
    sub = Subweb.restrict(root, {d: root.data(d) for d in root.docs})
    stats.triples_collected = sub.triple_count()
    stats.wall_times["traversal_ms"] = (time.perf_counter() - start) * 1000
    return sub, stats


# --------------------------------------------------------------------------
# lazily fetched webs

class LazyWold:
    """Web view whose documents are fetched on first access.

    ``docs`` only lists documents fetched so far; ``adoc(u)`` fetches the
    fragmentless form of ``u`` and is undefined when that fetch fails.
    """

    def __init__(self, fetcher: Fetcher, stats: TraversalStats, parallelism: int = 1):
        self.fetcher = fetcher
        self.stats = stats
        self.parallelism = parallelism
        self._results: dict = {}
        self._docs: dict = {}

    def _record(self, iri: str, r: FetchResult) -> None:
        self._results[iri] = r
        self.stats.fetch_attempts += 1
        if r.ok:
            self.stats.docs_fetched += 1
            self._docs[iri] = Document(iri)
            self.stats.trace.append(f"fetch\t{iri}\tok")
        else:
            self.stats.failures.append((iri, r.status))
            self.stats.trace.append(f"fetch\t{iri}\t{r.status}")

    def prefetch(self, iris: Iterable) -> None:
        todo = sorted({doc_iri_of(u).value for u in iris if is_dereferenceable(u)}
                      - set(self._results))
        if not todo:
            return
        for iri, r in sorted(_fetch_all(self.fetcher, todo, self.parallelism).items()):
            self._record(iri, r)

    def _get(self, iri: str) -> FetchResult:
        if iri not in self._results:
            self._record(iri, self.fetcher.fetch(iri))
        return self._results[iri]

    def adoc(self, u: IRI) -> Optional[Document]:
        if not is_dereferenceable(u):
            return None
        iri = doc_iri_of(u).value
        return self._docs.get(iri) if self._get(iri).ok else None

    def data(self, d: Document) -> frozenset:
        return self._get(d.id).graph

    @property
    def docs(self) -> frozenset:
        return frozenset(self._docs.values())

    @property
    def prefixes(self) -> dict:
        return {d: self._results[i].prefixes for i, d in self._docs.items()}

    def snapshot(self) -> Wold:
        graphs = {i: self._results[i].graph for i in sorted(self._docs)}
        return Wold.hosted(graphs, {i: self._results[i].prefixes for i in graphs})


class LazyAnnotatedWold(SpecAnnotatedWold):
    """Annotated web over a :class:`LazyWold`; specifications are read on demand."""

    def __init__(self, fetcher: Fetcher, stats: TraversalStats, parallelism: int = 1):
        self.wold = LazyWold(fetcher, stats, parallelism)
        self.specs = {}
        self.errors = []
        self._snapshot = None

    def spec(self, d: Document) -> tuple:
        if d not in self.specs:
            tuples, errors = annotations_of(d, self.wold)
            self.specs[d] = tuples
            self.errors.extend(errors)
        return self.specs[d]

    def prefetch(self, iris: Iterable) -> None:
        self.wold.prefetch(iris)

    def materialized(self) -> Wold:
        snap = self.wold.snapshot()
        if self._snapshot is None or not self._snapshot.same_as(snap):
            self._snapshot = snap
        return self._snapshot


def guided_subweb(seeds: Iterable, agent_spec, fetcher: Fetcher, parallelism: int = 1,
                  max_iterations: Optional[int] = None):
    """Evaluate ``agent_spec`` while fetching only the documents it needs.

    The seeds' own documents are always part of the result. Published
    specifications are read from a document only when a ``WITH SUBWEBS``
    tuple reaches it.
    """
    stats = TraversalStats()
    start = time.perf_counter()
    seeds = [IRI(s) if isinstance(s, str) else s for s in seeds]
    cw = LazyAnnotatedWold(fetcher, stats, parallelism)
    seed_docs = {d for d in (cw.wold.adoc(s) for s in seeds) if d is not None}
    spec_part = eval_specification(agent_spec, cw, max_iterations=max_iterations)
    root = spec_part.root
    own = Subweb.restrict(root, {d: cw.wold.data(d) for d in seed_docs})
    sub = subweb_union(own, spec_part)
    stats.links_followed = stats.fetch_attempts - len(_seed_docs(seeds))
    stats.triples_collected = sub.triple_count()
    stats.wall_times["traversal_ms"] = (time.perf_counter() - start) * 1000
    return sub, stats


def run_strategy(strategy: str, query: SelectQuery, seeds: Iterable, fetcher: Fetcher,
                 agent_spec=None, max_depth: Optional[int] = None, parallelism: int = 1,
                 max_iterations: Optional[int] = None):
    """Build the strategy's subweb and evaluate ``query`` over it.

    ``swsl`` uses ``agent_spec`` when given and otherwise adopts the seeds'
    published specifications.

    Returns:
        ``(ResultTable, TraversalStats)``; ``wall_times`` has separate
        ``traversal_ms`` and ``eval_ms`` entries.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    if strategy == "swsl":
        spec = agent_spec if agent_spec is not None else seed_adopting_spec(seeds)
        sub, stats = guided_subweb(seeds, spec, fetcher, parallelism, max_iterations)
    elif strategy in ("none", "all", "match"):
        crit = Criterion.match(query) if strategy == "match" else Criterion(strategy)
        sub, stats = reachable_subweb(crit, seeds, fetcher, max_depth, parallelism)
    else:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    start = time.perf_counter()
    table: ResultTable = eval_select(query, sub)
    stats.wall_times["eval_ms"] = (time.perf_counter() - start) * 1000
    return table, stats
