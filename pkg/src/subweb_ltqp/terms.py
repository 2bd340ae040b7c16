"""RDF terms and triples.

Terms are small frozen dataclasses so they hash, compare and sort cheaply.
Blank nodes carry the scope (document base) they were minted in, which keeps
labels from different documents apart without a global counter.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"

XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"
RDF_LANGSTRING = RDF + "langString"

NUMERIC_DATATYPES = frozenset({
    XSD_INTEGER, XSD_DECIMAL, XSD_DOUBLE, XSD + "float", XSD + "int",
    XSD + "long", XSD + "short", XSD + "nonNegativeInteger",
    XSD + "positiveInteger", XSD + "negativeInteger",
    XSD + "nonPositiveInteger",
})

# Prefixes every parser in the package falls back on.
COMMON_PREFIXES = {
    "rdf": RDF,
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "xsd": XSD,
    "foaf": "http://xmlns.com/foaf/0.1/",
    "ex": "http://example.org/ns#",
    "dbr": "http://dbpedia.org/resource/",
    "voc": "https://snb.ex/vocabulary#",
}


@dataclass(frozen=True, order=True)
class IRI:
    value: str

    def __str__(self) -> str:
        return f"<{self.value}>"

    def n3(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True, order=True)
class BNode:
    label: str
    scope: str = ""

    def __str__(self) -> str:
        return f"_:{self.label}"

    def n3(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True)
class Literal:
    lexical: str
    lang: Optional[str] = None
    datatype: Optional[str] = None

    def __post_init__(self):
        # xsd:string is the implicit datatype of plain literals
        if self.datatype == XSD_STRING:
            object.__setattr__(self, "datatype", None)
        if self.lang is not None:
            if self.datatype not in (None, RDF_LANGSTRING):
                raise ValueError("a literal cannot carry both a language tag and a datatype")
            object.__setattr__(self, "datatype", None)
            object.__setattr__(self, "lang", self.lang.lower())

    @property
    def is_numeric(self) -> bool:
        return self.datatype in NUMERIC_DATATYPES

    def numeric_value(self):
        if self.datatype in (XSD_DOUBLE, XSD + "float", XSD_DECIMAL):
            return float(self.lexical)
        return int(self.lexical)

    def n3(self) -> str:
        text = (self.lexical.replace("\\", "\\\\").replace('"', '\\"')
                .replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t"))
        out = f'"{text}"'
        if self.lang:
            out += "@" + self.lang
        elif self.datatype:
            out += f"^^<{self.datatype}>"
        return out

    def __str__(self) -> str:
        return self.n3()


Term = Union[IRI, BNode, Literal]


class Triple(NamedTuple):
    s: Union[IRI, BNode]
    p: IRI
    o: Term

    def n3(self) -> str:
        return f"{self.s.n3()} {self.p.n3()} {self.o.n3()} ."


_KIND_ORDER = {IRI: 0, BNode: 1, Literal: 2}


def term_sort_key(term) -> tuple:
    """Total order over terms (and None, which sorts first)."""
    if term is None:
        return (-1,)
    if isinstance(term, Literal):
        return (2, term.lexical, term.lang or "", term.datatype or "")
    if isinstance(term, BNode):
        return (1, term.scope, term.label)
    if isinstance(term, IRI):
        return (0, term.value)
    # variables and other pattern atoms
    return (3, str(term))


def triple_sort_key(t: Triple) -> tuple:
    return (term_sort_key(t.s), term_sort_key(t.p), term_sort_key(t.o))


def iris_of(t: Triple) -> set[IRI]:
    """IRIs occurring in any position of a triple."""
    return {x for x in t if isinstance(x, IRI)}
