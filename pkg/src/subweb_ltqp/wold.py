"""Webs of Linked Data, subwebs, and the operations between them.

A :class:`Wold` is a finite set of documents, the triples each document
serves, and a partial map from IRIs to the document they dereference to.
A :class:`Subweb` restricts a parent web: fewer documents, fewer triples per
document, and the dereference map cut down to the kept documents.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional

from .terms import IRI, Triple, iris_of

EMPTY: frozenset = frozenset()


class UnknownDocument(KeyError):
    pass


class ParentMismatch(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Document:
    """Opaque document identity. In hosted webs ``id`` is the fragmentless IRI."""

    id: str

    def __str__(self) -> str:
        return self.id


def doc_iri_of(u: IRI) -> IRI:
    """The IRI of the document ``u`` dereferences to: ``u`` without its fragment."""
    value = u.value.split("#", 1)[0]
    return u if value == u.value else IRI(value)


@dataclass(frozen=True, eq=False)
class Wold:
    docs: frozenset
    data_map: Mapping[Document, frozenset]
    adoc_map: Mapping[IRI, Document]
    prefixes: Mapping[Document, Mapping[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "docs", frozenset(self.docs))
        object.__setattr__(self, "data_map", MappingProxyType(
            {d: frozenset(self.data_map.get(d, EMPTY)) for d in self.docs}))
        object.__setattr__(self, "adoc_map", MappingProxyType(dict(self.adoc_map)))

    @classmethod
    def hosted(cls, graphs: Mapping[str, Iterable[Triple]], prefixes=None) -> "Wold":
        """Build a web where documents are keyed by fragmentless IRIs.

        ``adoc`` is defined for every document IRI and for every IRI mentioned
        in any document whose fragmentless form names a document.
        """
        docs = {iri: Document(iri) for iri in graphs}
        data = {docs[iri]: frozenset(g) for iri, g in graphs.items()}
        adoc = {IRI(iri): d for iri, d in docs.items()}
        for g in data.values():
            for t in g:
                for u in iris_of(t):
                    d = docs.get(doc_iri_of(u).value)
                    if d is not None:
                        adoc[u] = d
        pref = {docs[iri]: p for iri, p in (prefixes or {}).items() if iri in docs}
        return cls(frozenset(docs.values()), data, adoc, pref)

    def data(self, d: Document) -> frozenset:
        try:
            return self.data_map[d]
        except KeyError:
            raise UnknownDocument(d) from None

    def adoc(self, u: IRI) -> Optional[Document]:
        return self.adoc_map.get(u)

    @property
    def root(self) -> "Wold":
        return self

    def triple_count(self) -> int:
        return sum(len(g) for g in self.data_map.values())

    def same_as(self, other: "Wold") -> bool:
        return (self.docs == other.docs and dict(self.data_map) == dict(other.data_map)
                and dict(self.adoc_map) == dict(other.adoc_map))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(docs={len(self.docs)}, triples={self.triple_count()})"


@dataclass(frozen=True, eq=False, repr=False)
class Subweb(Wold):
    parent: Optional[Wold] = None

    @classmethod
    def restrict(cls, parent: Wold, data: Mapping[Document, Iterable[Triple]]) -> "Subweb":
        """Subweb keeping exactly the documents in ``data`` with the given triples."""
        parent = parent.root
        docs = frozenset(data)
        adoc = {u: d for u, d in parent.adoc_map.items() if d in docs}
        return cls(docs, {d: frozenset(g) for d, g in data.items()}, adoc,
                   {d: p for d, p in parent.prefixes.items() if d in docs}, parent=parent)

    @classmethod
    def empty(cls, parent: Wold) -> "Subweb":
        return cls.restrict(parent, {})

    @property
    def root(self) -> Wold:
        return self.parent.root if self.parent is not None else self

    def content(self) -> dict:
        """``{document: triples}``; two subwebs of one parent are equal iff their contents are."""
        return dict(self.data_map)

    def __eq__(self, other):
        if not isinstance(other, Subweb):
            return NotImplemented
        return (self.root is other.root and self.docs == other.docs
                and dict(self.data_map) == dict(other.data_map)
                and dict(self.adoc_map) == dict(other.adoc_map))

    __hash__ = None


def simpl(d: Document, w: Wold) -> Subweb:
    """The subweb holding exactly document ``d`` with all of its data."""
    if d not in w.docs:
        raise UnknownDocument(d)
    return Subweb.restrict(w, {d: w.data(d)})


def subweb_union(*subwebs: Subweb, parent: Wold | None = None) -> Subweb:
    """Document-wise union; documents missing from one side count as empty."""
    roots = {id(s.root): s.root for s in subwebs}
    if parent is not None:
        roots.setdefault(id(parent.root), parent.root)
    if len(roots) > 1:
        raise ParentMismatch("subwebs restrict different webs")
    if not roots:
        raise ValueError("union of nothing needs an explicit parent")
    (root,) = roots.values()
    merged: dict[Document, set] = {}
    for s in subwebs:
        for d, g in s.data_map.items():
            merged.setdefault(d, set()).update(g)
    return Subweb.restrict(root, merged)


def is_subweb(candidate: Wold, w: Wold) -> bool:
    """Check the three defining conditions of a subweb of ``w``."""
    if not candidate.docs <= w.docs:
        return False
    if set(candidate.data_map) != set(candidate.docs):
        return False
    for d in candidate.docs:
        if not candidate.data_map[d] <= w.data(d):
            return False
    for u, d in candidate.adoc_map.items():
        if w.adoc(u) != d:
            return False
    for u, d in w.adoc_map.items():
        if d in candidate.docs and candidate.adoc_map.get(u) != d:
            return False
    return True


class Dataset(NamedTuple):
    default: frozenset
    named: Mapping[IRI, frozenset]


def dataset_of(s: Wold) -> Dataset:
    """Default graph = union of all data; one named graph per dereferenceable IRI."""
    default = frozenset().union(*s.data_map.values()) if s.data_map else frozenset()
    named = {u: s.data(d) for u, d in s.adoc_map.items() if d in s.docs}
    return Dataset(default, named)
