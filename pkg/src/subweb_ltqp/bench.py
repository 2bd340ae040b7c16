"""Desk-scale benchmark: a generated social web, four queries, all strategies.

The generated web follows a small social-network schema. Every entity gets
its own document at ``https://snb.ex/<kind>/<n>`` describing ``<#it>``.
Person documents publish specifications expressing whom they trust: the
people they know, their city, the organisations they work or study at, and
the messages they like. Three profiles differ only in how much those person
filters let through:

* ``ssl``: friend data restricted to the friend as subject; city and
  organisation data restricted to that city or organisation.
* ``ssl1``: additionally keeps ``voc:isPartOf`` triples (the location chain).
* ``ssl2``: additionally keeps ``voc:hasOrganisation`` and ``foaf:name``
  triples in friend data.

The document data is identical across profiles.
"""
from __future__ import annotations

import csv
import io
import logging
import random
import statistics
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

from .sparql import parse_select
from .traversal import run_strategy
from .webhost import CachingFetcher, DocumentStore, Fetcher, StoreFetcher

log = logging.getLogger(__name__)

BASE = "https://snb.ex/"
VOC = "https://snb.ex/vocabulary#"
PROFILES = ("ssl", "ssl1", "ssl2")
STRATEGIES = ("none", "all", "match") + PROFILES
CSV_COLUMNS = ["query", "strategy", "links", "traversal_ms", "triples", "eval_ms",
               "results", "runs_ok", "runs_failed"]

QUERIES = {
    "Q1": """SELECT ?person ?country ?cont
WHERE {
  ?person voc:isLocatedIn ?city.
  ?city voc:isPartOf ?country.
  ?country voc:isPartOf ?cont.
}""",
    "Q2": """SELECT ?person1 ?person2 ?namecomp
WHERE {
  ?person1 voc:workAt ?c1.
  ?c1 voc:hasOrganisation ?comp1.

  ?person2 voc:workAt ?c2.
  ?c2 voc:hasOrganisation ?comp2.

  FILTER(?person1 != ?person2)

  ?comp1 foaf:name ?namecomp.
  ?comp2 foaf:name ?namecomp.
}""",
    "Q3": """SELECT ?forum ?creator
WHERE {
  {?forum voc:hasModerator ?creator.}
  UNION
  {?forum voc:hasMember ?creatorB.
   ?creatorB voc:hasPerson ?creator.}
  ?creator voc:hasInterest ?interest.

  FILTER (NOT EXISTS {
    SELECT ?tagForum WHERE {
      ?forum voc:hasTag ?tagForum.
      FILTER (
        bound(?interest) &&
        ?tagForum = ?interest )}})
}""",
    "Q4": """SELECT ?person ?creator ?city
WHERE {
  ?person voc:isLocatedIn ?city.
  ?person voc:likes ?message.
  ?message voc:hasComment ?comm.
  ?comm voc:hasCreator ?creator.
}""",
}

# which kind of document seeds each query
SEED_KIND = {"Q1": "persons", "Q2": "persons", "Q3": "forums", "Q4": "persons"}


def q_fixtures() -> dict:
    """The four benchmark queries as SPARQL text."""
    return dict(QUERIES)


class ConfigError(ValueError):
    pass


@dataclass
class WebGenConfig:
    seed: int = 42
    persons: int = 60
    cities: int = 8
    countries: int = 4
    continents: int = 2
    companies: int = 6
    universities: int = 4
    forums: int = 6
    tags: int = 10
    posts: int = 40
    comments: int = 60
    mean_friends: float = 4.0
    likes_per_person: int = 3

    def validate(self) -> None:
        for f in fields(self):
            if f.name != "seed" and getattr(self, f.name) < 0:
                raise ConfigError(f"{f.name} must be nonnegative")
        if self.countries > 0 and self.continents < 1:
            raise ConfigError("countries need at least one continent")
        if self.cities > 0 and self.countries < 1:
            raise ConfigError("cities need at least one country")
        if self.persons > 0 and (self.cities < 1 or self.companies < 1 or self.universities < 1):
            raise ConfigError("persons need a city, a company and a university")
        if self.universities > 0 and self.cities < 1:
            raise ConfigError("universities need a city")
        if self.companies > 0 and self.countries < 1:
            raise ConfigError("companies need a country")
        if (self.posts or self.comments or self.forums) and self.persons < 1:
            raise ConfigError("messages and forums need persons")
        if self.comments and not self.posts:
            raise ConfigError("comments need posts")

    @classmethod
    def from_mapping(cls, m: Mapping) -> "WebGenConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(m) - known
        if unknown:
            raise ConfigError(f"unknown web settings: {sorted(unknown)}")
        return cls(**m)


# --------------------------------------------------------------------------
# specifications

_FRIEND_PREDICATES = ["foaf:name", "voc:isLocatedIn", "voc:workAt", "voc:studyAt",
                      "voc:hasInterest", "foaf:knows"]
_INTERACTION = ("?s1 voc:hasCreator ?o1 . ?s2 voc:isLocatedIn ?o2 . "
                "?s3 voc:likes ?o3 . ?s4 voc:hasComment ?o4 .")


def _friend_template(profile: str) -> str:
    parts = [f"?friend {p} ?v{i} ." for i, p in enumerate(_FRIEND_PREDICATES)]
    if profile == "ssl1":
        parts.append("?x voc:isPartOf ?y .")
    if profile == "ssl2":
        parts.append("?a voc:hasOrganisation ?b . ?c foaf:name ?d .")
    return " ".join(parts)


def _chain(profile: str) -> str:
    return " ?x voc:isPartOf ?y ." if profile == "ssl1" else ""


def person_specs(profile: str) -> list:
    """Specifications published by every person document under ``profile``."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    chain = _chain(profile)
    return [
        "FOLLOW ?friend WITH SUBWEBS { <#it> foaf:knows ?friend . } "
        f"INCLUDE {{ {_friend_template(profile)} }}",
        "FOLLOW ?city WITH SUBWEBS { <#it> voc:isLocatedIn ?city . } "
        f"INCLUDE {{ ?city ?p ?o .{chain} }}",
        "FOLLOW ?org WITH SUBWEBS { <#it> voc:workAt ?w . ?w voc:hasOrganisation ?org . } "
        f"INCLUDE {{ ?org ?p ?o .{chain} }}",
        "FOLLOW ?org WITH SUBWEBS { <#it> voc:studyAt ?s . ?s voc:hasOrganisation ?org . } "
        f"INCLUDE {{ ?org ?p ?o .{chain} }}",
        "FOLLOW ?msg WITH SUBWEBS { <#it> voc:likes ?msg . } "
        f"INCLUDE {{ ?msg ?p ?o . {_INTERACTION} }}",
    ]


MESSAGE_SPECS = [
    "FOLLOW ?next WITH SUBWEBS { { <#it> voc:hasComment ?next . } UNION "
    "{ <#it> voc:hasCreator ?next . } } "
    f"INCLUDE {{ {_INTERACTION} }}",
]
COMMENT_SPECS = [
    "FOLLOW ?creator WITH SUBWEBS { <#it> voc:hasCreator ?creator . } "
    f"INCLUDE {{ {_INTERACTION} }}",
]
FORUM_SPECS = [
    "FOLLOW ?p { { <#it> voc:hasModerator ?p . } UNION "
    "{ <#it> voc:hasMember ?m . ?m voc:hasPerson ?p . } } INCLUDE { ?p ?q ?o . }",
]
CITY_SPECS = ["FOLLOW ?c WITH SUBWEBS { <#it> voc:isPartOf ?c . } INCLUDE { ?c ?p ?o . }"]
COUNTRY_SPECS = ["FOLLOW ?c { <#it> voc:isPartOf ?c . } INCLUDE { ?c ?p ?o . }"]


# --------------------------------------------------------------------------
# generation

_PREAMBLE = ("@prefix foaf: <http://xmlns.com/foaf/0.1/> .\n"
             "@prefix voc: <https://snb.ex/vocabulary#> .\n"
             "@prefix ex: <http://example.org/ns#> .\n\n")


def doc_iri(kind: str, i: int) -> str:
    return f"{BASE}{kind}/{i}"


def entity(kind: str, i: int) -> str:
    return f"<{doc_iri(kind, i)}#it>"


def _literal(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _spec_block(specs: Iterable[str]) -> str:
    lines = []
    for k, text in enumerate(specs):
        lines.append(f"<#it> ex:hasSpecification <#spec{k}> .\n"
                     f'<#spec{k}> ex:scope """{text}"""^^ex:SWSL .\n')
    return "".join(lines)


@dataclass
class GeneratedWeb:
    """Document texts per profile plus the seed pools used by the benchmark."""

    config: WebGenConfig
    texts: dict  # profile -> {iri: turtle text}
    kinds: dict  # kind -> list of document IRIs
    _stores: dict = field(default_factory=dict, repr=False)

    def store(self, profile: str = "ssl") -> DocumentStore:
        if profile not in self._stores:
            self._stores[profile] = DocumentStore.from_texts(self.texts[profile])
        return self._stores[profile]

    def doc_count(self) -> int:
        return len(self.texts["ssl"])

    def triple_count(self) -> int:
        return self.store("ssl").to_wold().triple_count()

    def write(self, out_dir) -> list:
        """Write one manifest per profile plus the documents; returns manifest paths."""
        out = Path(out_dir)
        written = []
        for profile in PROFILES:
            lines = [f"# generated social web, profile {profile}, seed {self.config.seed}\n"]
            for iri in sorted(self.texts[profile]):
                rel = Path(profile) / (iri[len(BASE):] + ".ttl")
                path = out / rel
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(self.texts[profile][iri], encoding="utf-8")
                lines.append(f"{iri}\t{rel.as_posix()}\tturtle\n")
            manifest = out / f"{profile}.manifest"
            manifest.write_text("".join(lines), encoding="utf-8")
            written.append(manifest)
        return written


def generate_web(cfg: WebGenConfig | None = None) -> GeneratedWeb:
    """Generate the annotated social web deterministically from ``cfg.seed``."""
    cfg = cfg or WebGenConfig()
    cfg.validate()
    rng = random.Random(cfg.seed)
    body: dict = {}  # iri -> data lines (profile independent)
    specs: dict = {}  # iri -> list of spec texts, or a profile key

    def add(kind, i, lines, spec=None):
        iri = doc_iri(kind, i)
        body[iri] = lines
        if spec is not None:
            specs[iri] = spec

    for i in range(cfg.continents):
        add("continents", i, [f"<#it> foaf:name {_literal(f'Continent {i}')} ."])
    for i in range(cfg.countries):
        add("countries", i, [f"<#it> foaf:name {_literal(f'Country {i}')} .",
                             f"<#it> voc:isPartOf {entity('continents', i % cfg.continents)} ."],
            COUNTRY_SPECS)
    city_country = [i % cfg.countries if i < cfg.countries else rng.randrange(cfg.countries)
                    for i in range(cfg.cities)]
    for i in range(cfg.cities):
        add("cities", i, [f"<#it> foaf:name {_literal(f'City {i}')} .",
                          f"<#it> voc:isPartOf {entity('countries', city_country[i])} ."],
            CITY_SPECS)
    for i in range(cfg.companies):
        add("companies", i, [f"<#it> foaf:name {_literal(f'Company {i}')} .",
                             f"<#it> voc:isLocatedIn {entity('countries', rng.randrange(cfg.countries))} ."])
    for i in range(cfg.universities):
        add("universities", i, [f"<#it> foaf:name {_literal(f'University {i}')} .",
                                f"<#it> voc:isLocatedIn {entity('cities', rng.randrange(cfg.cities))} ."])
    for i in range(cfg.tags):
        add("tags", i, [f"<#it> foaf:name {_literal(f'Tag {i}')} ."])

    # friendships: symmetric, about mean_friends per person
    friends = {i: set() for i in range(cfg.persons)}
    if cfg.persons > 1:
        edges = int(round(cfg.mean_friends * cfg.persons / 2))
        for _ in range(edges):
            a, b = rng.sample(range(cfg.persons), 2)
            friends[a].add(b)
            friends[b].add(a)

    creators_post = [rng.randrange(cfg.persons) for _ in range(cfg.posts)]
    comment_post = [rng.randrange(cfg.posts) for _ in range(cfg.comments)] if cfg.posts else []
    creators_comment = [rng.randrange(cfg.persons) for _ in range(cfg.comments)]
    messages = [("posts", i) for i in range(cfg.posts)] + [("comments", i) for i in range(cfg.comments)]

    for i in range(cfg.persons):
        lines = [f"<#it> foaf:name {_literal(f'Person {i}')} .",
                 f"<#it> voc:isLocatedIn {entity('cities', rng.randrange(cfg.cities))} ."]
        for j in sorted(friends[i]):
            lines.append(f"<#it> foaf:knows {entity('persons', j)} .")
        lines.append("<#it> voc:workAt _:work .")
        lines.append(f"_:work voc:hasOrganisation {entity('companies', rng.randrange(cfg.companies))} .")
        lines.append("<#it> voc:studyAt _:study .")
        lines.append(f"_:study voc:hasOrganisation {entity('universities', rng.randrange(cfg.universities))} .")
        if cfg.tags:
            for t in sorted(rng.sample(range(cfg.tags), min(cfg.tags, rng.randint(1, 3)))):
                lines.append(f"<#it> voc:hasInterest {entity('tags', t)} .")
        if messages:
            k = min(len(messages), cfg.likes_per_person)
            for kind, m in sorted(rng.sample(messages, k)):
                lines.append(f"<#it> voc:likes {entity(kind, m)} .")
        add("persons", i, lines, "person")

    for i in range(cfg.posts):
        lines = [f"<#it> voc:hasCreator {entity('persons', creators_post[i])} .",
                 f"<#it> voc:content {_literal(f'Post {i}')} ."]
        for c in range(cfg.comments):
            if comment_post[c] == i:
                lines.append(f"<#it> voc:hasComment {entity('comments', c)} .")
        add("posts", i, lines, MESSAGE_SPECS)
    for i in range(cfg.comments):
        add("comments", i, [f"<#it> voc:hasCreator {entity('persons', creators_comment[i])} .",
                            f"<#it> voc:content {_literal(f'Comment {i}')} ."], COMMENT_SPECS)

    for i in range(cfg.forums):
        lines = [f"<#it> voc:hasModerator {entity('persons', rng.randrange(cfg.persons))} ."]
        members = sorted(rng.sample(range(cfg.persons), min(cfg.persons, rng.randint(3, 8))))
        for k, p in enumerate(members):
            lines.append(f"<#it> voc:hasMember _:m{k} .")
            lines.append(f"_:m{k} voc:hasPerson {entity('persons', p)} .")
        if cfg.tags:
            for t in sorted(rng.sample(range(cfg.tags), min(cfg.tags, rng.randint(1, 3)))):
                lines.append(f"<#it> voc:hasTag {entity('tags', t)} .")
        for p in range(cfg.posts):
            if p % max(cfg.forums, 1) == i:
                lines.append(f"<#it> voc:containerOf {entity('posts', p)} .")
        add("forums", i, lines, FORUM_SPECS)

    texts = {}
    for profile in PROFILES:
        out = {}
        for iri, lines in body.items():
            spec = specs.get(iri)
            if spec == "person":
                spec = person_specs(profile)
            out[iri] = _PREAMBLE + "\n".join(lines) + "\n" + (_spec_block(spec) if spec else "")
        texts[profile] = out
    kinds: dict = {}
    for iri in sorted(body, key=lambda x: (x.rsplit("/", 1)[0], int(x.rsplit("/", 1)[1]))):
        kinds.setdefault(iri[len(BASE):].split("/")[0], []).append(iri)
    return GeneratedWeb(cfg, texts, kinds)


# --------------------------------------------------------------------------
# benchmark runs

@dataclass
class RunRecord:
    query: str
    strategy: str
    seed: str
    ok: bool
    links: int = 0
    triples: int = 0
    traversal_ms: float = 0.0
    eval_ms: float = 0.0
    results: int = 0
    result_set: frozenset = frozenset()
    error: str = ""


@dataclass
class BenchReport:
    runs: list

    def rows(self) -> list:
        """One aggregated row per (query, strategy), averaged over successful runs."""
        groups: dict = {}
        for r in self.runs:
            groups.setdefault((r.query, r.strategy), []).append(r)
        out = []
        order = {s: i for i, s in enumerate(STRATEGIES)}
        for (q, s), runs in sorted(groups.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], 99))):
            ok = [r for r in runs if r.ok]

            def avg(attr):
                return statistics.fmean(getattr(r, attr) for r in ok) if ok else float("nan")

            out.append({"query": q, "strategy": s, "links": avg("links"),
                        "traversal_ms": avg("traversal_ms"), "triples": avg("triples"),
                        "eval_ms": avg("eval_ms"), "results": avg("results"),
                        "runs_ok": len(ok), "runs_failed": len(runs) - len(ok)})
        return out

    def records(self, query: str, strategy: str) -> list:
        return [r for r in self.runs if r.query == query and r.strategy == strategy]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: (f"{v:.2f}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_text(self) -> str:
        rows = self.rows()
        header = CSV_COLUMNS
        cells = [[(f"{row[c]:.1f}" if isinstance(row[c], float) else str(row[c])) for c in header]
                 for row in rows]
        widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
                  for i, h in enumerate(header)]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)),
                 "  ".join("-" * w for w in widths)]
        lines += ["  ".join(c.rjust(w) if i >= 2 else c.ljust(w)
                            for i, (c, w) in enumerate(zip(r, widths))) for r in cells]
        return "\n".join(lines) + "\n"

    def counts(self) -> list:
        """Everything except wall times, for determinism checks."""
        return [(r.query, r.strategy, r.seed, r.ok, r.links, r.triples, r.results, r.result_set)
                for r in self.runs]


def pick_seeds(web: GeneratedWeb, query: str, n_seeds: int, seed: int) -> list:
    """Seed documents for ``query``; the same list serves every strategy."""
    pool = web.kinds.get(SEED_KIND[query], [])
    if not pool:
        return []
    rng = random.Random(f"{seed}:{query}")
    if n_seeds <= len(pool):
        return rng.sample(pool, n_seeds)
    return [rng.choice(pool) for _ in range(n_seeds)]


def store_fetchers(web: GeneratedWeb) -> dict:
    """One cached in-process fetcher per profile."""
    return {p: CachingFetcher(StoreFetcher(web.store(p))) for p in PROFILES}


def run_benchmark(web: GeneratedWeb, queries: Iterable[str] = ("Q1", "Q2", "Q3", "Q4"),
                  strategies: Iterable[str] = STRATEGIES, n_seeds: int = 12, seed: int = 7,
                  fetchers: Optional[Mapping[str, Fetcher]] = None, parallelism: int = 1,
                  progress: Optional[Callable[[str], None]] = None) -> BenchReport:
    """Run every (query, strategy, seed) combination.

    Args:
        web: the generated web.
        queries: query names from :func:`q_fixtures`.
        strategies: ``none``, ``all``, ``match`` and the profiles ``ssl``, ``ssl1``, ``ssl2``.
        n_seeds: seeds per query.
        seed: RNG seed for drawing seed documents.
        fetchers: fetcher per profile; reachability strategies use ``ssl``'s.
            Defaults to in-process fetchers.
        parallelism: fetch concurrency for reachability traversal.

    Failed runs are recorded and excluded from averages.
    """
    fetchers = dict(fetchers) if fetchers is not None else store_fetchers(web)
    parsed = {q: parse_select(QUERIES[q]) for q in queries}
    runs = []
    for q in queries:
        seeds = pick_seeds(web, q, n_seeds, seed)
        for strategy in strategies:
            if strategy in PROFILES:
                kind, fetcher = "swsl", fetchers[strategy]
            else:
                kind, fetcher = strategy, fetchers["ssl"]
            for s in seeds:
                try:
                    table, stats = run_strategy(kind, parsed[q], [s], fetcher,
                                                parallelism=parallelism)
                except Exception as exc:  # recorded, as a failed run
                    log.warning("%s/%s at %s failed: %s", q, strategy, s, exc)
                    runs.append(RunRecord(q, strategy, s, False, error=str(exc)))
                    continue
                runs.append(RunRecord(
                    q, strategy, s, True, stats.links_followed, stats.triples_collected,
                    stats.wall_times.get("traversal_ms", 0.0), stats.wall_times.get("eval_ms", 0.0),
                    len(table), table.as_set()))
            if progress:
                progress(f"{q} {strategy} done")
    return BenchReport(runs)


@dataclass
class BenchConfig:
    web: WebGenConfig = field(default_factory=WebGenConfig)
    queries: tuple = ("Q1", "Q2", "Q3", "Q4")
    strategies: tuple = STRATEGIES
    n_seeds: int = 12
    seed: int = 7
    transport: str = "store"
    parallelism: int = 1


def load_bench_config(path) -> BenchConfig:
    """Read a TOML file with optional ``[web]`` and ``[bench]`` tables."""
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return bench_config_from_mapping(data)


def bench_config_from_mapping(data: Mapping) -> BenchConfig:
    unknown = set(data) - {"web", "bench"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    web = WebGenConfig.from_mapping(data.get("web", {}))
    bench = dict(data.get("bench", {}))
    allowed = {f.name for f in fields(BenchConfig)} - {"web"}
    if set(bench) - allowed:
        raise ConfigError(f"unknown bench settings: {sorted(set(bench) - allowed)}")
    for key in ("queries", "strategies"):
        if key in bench:
            bench[key] = tuple(bench[key])
    cfg = BenchConfig(web=web, **bench)
    for q in cfg.queries:
        if q not in QUERIES:
            raise ConfigError(f"unknown query {q!r}")
    for s in cfg.strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}")
    if cfg.transport not in ("store", "http"):
        raise ConfigError("transport must be 'store' or 'http'")
    return cfg


def config_as_dict(cfg: BenchConfig) -> dict:
    out = asdict(cfg)
    out["queries"] = list(cfg.queries)
    out["strategies"] = list(cfg.strategies)
    return out
