"""Specification-annotated webs and the value of a subweb specification.

The value of a specification ``theta`` over an annotated web is::

    [[theta]] = U_{(sel, b, f) in theta} U_{u in sel(W)}
                  f(simpl(adoc(u)) | ([[theta_adoc(u)]] if b), u)

with ``f`` applied document by document. The definition refers to itself
through ``b``, and annotations may form cycles, so it is computed as a least
fixpoint: every document reachable through ``b = true`` edges gets an unknown
``X_d = [[theta_d]]``, all unknowns start empty, and the equations are
re-evaluated until nothing changes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .selectors import IDENTITY, ConstantSelector, Filter, SourceSelector
from .sparql import eval_select
from .terms import IRI, Literal
from .wold import Document, Subweb, UnknownDocument, Wold, simpl, subweb_union

log = logging.getLogger(__name__)

EX = "http://example.org/ns#"
HAS_SPECIFICATION = IRI(EX + "hasSpecification")
SCOPE = IRI(EX + "scope")
SWSL_DATATYPE = EX + "SWSL"


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int):
        super().__init__(f"no fixpoint after {iterations} iterations")
        self.iterations = iterations


class AnnotationError(Exception):
    def __init__(self, document: Document, cause: Exception):
        super().__init__(f"{document}: {cause}")
        self.document = document
        self.cause = cause


@dataclass(frozen=True, eq=False)
class SpecTuple:
    selector: SourceSelector
    with_subwebs: bool
    filter: Filter = IDENTITY
    label: str = ""

    def __iter__(self):
        return iter((self.selector, self.with_subwebs, self.filter))


def spec_tuple(selector, with_subwebs: bool, filt: Filter = IDENTITY, label: str = "") -> SpecTuple:
    return SpecTuple(selector, with_subwebs, filt, label or getattr(selector, "label", ""))


def seed_adopting_spec(seeds: Iterable) -> tuple:
    """Agent specification that takes the seeds and everything they vouch for."""
    return (SpecTuple(ConstantSelector(seeds), True, IDENTITY, "agent"),)


class SpecAnnotatedWold:
    """A web whose documents each carry a (possibly empty) specification."""

    def __init__(self, wold: Wold, specs: Mapping[Document, Iterable[SpecTuple]] | None = None,
                 errors: Iterable[AnnotationError] = ()):
        self.wold = wold
        self.specs = {d: tuple(ts) for d, ts in (specs or {}).items()}
        self.errors = list(errors)

    def spec(self, d: Document) -> tuple:
        return self.specs.get(d, ())

    def materialized(self) -> Wold:
        return self.wold


def document_iri(d: Document) -> IRI:
    return IRI(d.id)


def annotations_of(d: Document, w: Wold) -> tuple:
    """Parse the published specifications of one document.

    Returns ``(tuples, errors)``. Specification resources are found through
    ``ex:hasSpecification``; every ``ex:scope`` literal typed ``ex:SWSL`` is
    one tuple, applied with the document's IRI as its only seed.
    """
    from .swsl import parse_swsl, swsl_to_tuple

    data = w.data(d)
    spec_nodes = {t.o for t in data if t.p == HAS_SPECIFICATION}
    scopes = sorted(
        (t.s, t.o.lexical) for t in data
        if t.p == SCOPE and t.s in spec_nodes and isinstance(t.o, Literal)
        and t.o.datatype == SWSL_DATATYPE)
    prefixes = w.prefixes.get(d, {})
    ctx = document_iri(d)
    tuples, errors = [], []
    for i, (node, text) in enumerate(sorted(scopes, key=lambda x: (str(x[0]), x[1]))):
        try:
            spec = parse_swsl(text, prefixes)
        except SyntaxError as exc:
            errors.append(AnnotationError(d, exc))
            continue
        tuples.append(swsl_to_tuple(spec, [ctx], label=f"{d.id}[{i}]"))
    return tuple(tuples), errors


def extract_annotations(w: Wold) -> SpecAnnotatedWold:
    """Annotate every document of ``w`` with the specifications it publishes.

    Malformed specifications leave the document with an empty specification;
    the errors are collected on the result rather than raised.
    """
    specs, errors = {}, []
    for d in sorted(w.docs):
        tuples, errs = annotations_of(d, w)
        specs[d] = tuples
        errors.extend(errs)
        for e in errs:
            log.warning("ignoring specification: %s", e)
    return SpecAnnotatedWold(w, specs, errors)


# --------------------------------------------------------------------------
# fixpoint evaluation

@dataclass
class _Edge:
    """One ``u in sel(W)`` of one tuple: where it points and how it filters."""

    tuple_label: str
    u: IRI
    target: Document
    with_subwebs: bool
    filt: object
    distributive: bool


@dataclass
class EvalTrace:
    lines: list = field(default_factory=list)
    iterations: int = 0


def _edges(theta: Iterable[SpecTuple], cw) -> list:
    w = cw.wold
    out = []
    for tup in theta:
        selected = sorted(tup.selector(w), key=lambda i: i.value)
        if hasattr(cw, "prefetch"):
            cw.prefetch(selected)
        bound = tup.filter.bind(w)
        for u in selected:
            d = w.adoc(u)
            if d is None:
                continue
            out.append(_Edge(tup.label, u, d, tup.with_subwebs, bound,
                             tup.filter.distributive))
    return out


def _apply(edge: _Edge, parts: Mapping[Document, frozenset], into: dict) -> None:
    if edge.distributive and len(parts) > 1:
        # f(S) is a subset of S and distributes over union, so filter once
        everything = set().union(*parts.values())
        kept = edge.filt(everything, edge.u)
        for d, triples in parts.items():
            into.setdefault(d, set()).update(kept.intersection(triples))
        return
    for d, triples in parts.items():
        kept = edge.filt(triples, edge.u)
        bucket = into.setdefault(d, set())
        bucket.update(kept)


def _combine(edge: _Edge, w: Wold, x: Mapping) -> dict:
    """``simpl(adoc(u)) | (X_adoc(u) if b)`` as a ``{document: triples}`` map."""
    parts = {edge.target: set(w.data(edge.target))}
    if edge.with_subwebs:
        for d, ts in x.get(edge.target, {}).items():
            parts.setdefault(d, set()).update(ts)
    return parts


def eval_specification(theta: Iterable[SpecTuple], cw, max_iterations: Optional[int] = None,
                       trace: Optional[EvalTrace] = None) -> Subweb:
    """Compute the subweb a specification denotes over an annotated web.

    Args:
        theta: a specification, as an iterable of :class:`SpecTuple`.
        cw: the annotated web (eager or lazily fetched).
        max_iterations: fixpoint iteration cap; ``2 * |docs| + 2`` by default.
        trace: when given, receives one line per inclusion and the number of
            fixpoint rounds.

    Raises:
        NonConvergence: when the cap is reached before a fixpoint.
    """
    theta = tuple(theta)
    w = cw.wold
    top = _edges(theta, cw)

    # documents whose subweb of interest is needed, and their outgoing edges
    edges: dict = {}
    stack = sorted({e.target for e in top if e.with_subwebs})
    while stack:
        d = stack.pop()
        if d in edges:
            continue
        edges[d] = _edges(cw.spec(d), cw)
        stack.extend(e.target for e in edges[d] if e.with_subwebs and e.target not in edges)

    cap = max_iterations if max_iterations is not None else 2 * len(w.docs) + 2
    semi_naive = all(e.distributive for es in edges.values() for e in es)
    x: dict = {d: {} for d in edges}
    rounds = 0
    if edges:
        if semi_naive:
            rounds = _fixpoint_delta(edges, w, x, cap)
        else:
            rounds = _fixpoint_full(edges, w, x, cap)

    result: dict = {}
    for e in top:
        parts = _combine(e, w, x)
        if trace is not None:
            piece: dict = {}
            _apply(e, parts, piece)
            total = sum(len(ts) for ts in parts.values())
            kept = sum(len(ts) for ts in piece.values())
            trace.lines.append(f"{e.tuple_label}\t{e.u.value}\t{e.target.id}"
                               f"\tkept={kept}\tdropped={total - kept}")
        _apply(e, parts, result)
    if trace is not None:
        trace.iterations = rounds
    return Subweb.restrict(cw.materialized(), result)


def _fixpoint_full(edges: dict, w: Wold, x: dict, cap: int) -> int:
    rounds = 0
    while True:
        rounds += 1
        if rounds > cap:
            raise NonConvergence(cap)
        nxt = {}
        for d, es in edges.items():
            acc: dict = {}
            for e in es:
                _apply(e, _combine(e, w, x), acc)
            nxt[d] = acc
        if nxt == x:
            return rounds
        x.clear()
        x.update(nxt)


def _fixpoint_delta(edges: dict, w: Wold, x: dict, cap: int) -> int:
    # Round one: every document's own contribution, with all X_d still empty.
    delta: dict = {}
    for d, es in edges.items():
        acc: dict = {}
        for e in es:
            _apply(e, {e.target: w.data(e.target)}, acc)
        x[d] = acc
        delta[d] = {k: set(v) for k, v in acc.items()}
    rounds = 1
    while any(delta.values()):
        rounds += 1
        if rounds > cap:
            raise NonConvergence(cap)
        new_delta: dict = {}
        for d, es in edges.items():
            fresh: dict = {}
            for e in es:
                if not e.with_subwebs or not delta.get(e.target):
                    continue
                _apply(e, delta[e.target], fresh)
            diff = {}
            for doc, ts in fresh.items():
                # a newly reached document counts as news even when filtered to nothing
                if doc not in x[d]:
                    x[d][doc] = set(ts)
                    diff[doc] = set(ts)
                    continue
                new = ts - x[d][doc]
                if new:
                    x[d][doc].update(new)
                    diff[doc] = new
            new_delta[d] = diff
        delta = new_delta
    return rounds


def soi(d: Document, cw, **kw) -> Subweb:
    """Subweb of interest of ``d``: its own data plus what its specification denotes."""
    w = cw.wold
    if d not in w.docs:
        raise UnknownDocument(d)
    spec_part = eval_specification(cw.spec(d), cw, **kw)
    return subweb_union(simpl(d, spec_part.root), spec_part)


@dataclass(frozen=True)
class SpecAnnotatedQuery:
    query: object
    spec: tuple


def eval_annotated_query(q: SpecAnnotatedQuery, cw, **kw):
    """Evaluate the query over the subweb its specification denotes."""
    return eval_select(q.query, eval_specification(q.spec, cw, **kw))
