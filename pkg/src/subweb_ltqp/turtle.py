"""A Turtle-subset reader and a canonical N-Triples writer.

Supported: ``@prefix``/``PREFIX``, ``@base``/``BASE``, the ``a`` keyword,
``;`` and ``,`` abbreviations, relative IRIs, blank node labels, short and
triple-quoted strings with language tags or datatypes, and bare numbers and
booleans. Collections and ``[ ]`` property lists are rejected. N-Triples is
a subset of this grammar, so the same reader accepts it.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from urllib.parse import urljoin, urlsplit

from .terms import (
    BNode, IRI, Literal, Triple, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE,
    XSD_INTEGER, RDF, term_sort_key, triple_sort_key,
)


class TurtleSyntaxError(SyntaxError):
    """Raised with a 1-based line and column of the offending token."""

    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnresolvableIri(ValueError):
    pass


_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def resolve_iri(ref: str, base: str | None) -> str:
    """Resolve ``ref`` against ``base`` (RFC 3986 section 5.2)."""
    if _IRI_FORBIDDEN.search(ref):
        raise UnresolvableIri(f"illegal character in IRI {ref!r}")
    if urlsplit(ref).scheme:
        return ref
    if not base or not urlsplit(base).scheme:
        raise UnresolvableIri(f"relative IRI {ref!r} without an absolute base")
    base = base.split("#", 1)[0]
    if ref == "":
        return base
    return urljoin(base, ref)


_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+|#[^\n]*"),
    ("IRIREF", r"<[^<>\n]*>"),
    ("LONG_STRING", r'"""(?:[^"\\]|\\.|"(?!""))*"""' + r"|'''(?:[^'\\]|\\.|'(?!''))*'''"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"' + r"|'(?:[^'\\\n\r]|\\.)*'"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DTYPE", r"\^\^"),
    ("BLANK", r"_:[A-Za-z0-9_](?:[\w\-.]*[\w\-])?"),
    ("NUMBER", r"[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.?\d+[eE][+-]?\d+|\d*\.\d+|\d+)"),
    ("PNAME", r"(?:[A-Za-z][\w\-.]*)?:(?:[\w\-:%](?:[\w\-.:%]*[\w\-:%])?)?"),
    ("NAME", r"[A-Za-z][A-Za-z0-9_]*"),
    ("PUNCT", r"[.;,\[\]()]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _TOKEN_SPEC))

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
            '"': '"', "'": "'", "\\": "\\"}


def unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        nxt = text[i + 1] if i + 1 < len(text) else ""
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt == "u":
            out.append(chr(int(text[i + 2:i + 6], 16)))
            i += 6
        elif nxt == "U":
            out.append(chr(int(text[i + 2:i + 10], 16)))
            i += 10
        else:
            raise ValueError(f"bad escape \\{nxt}")
    return "".join(out)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise TurtleSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "WS":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return tokens


@dataclass
class ParseResult:
    graph: frozenset
    prefixes: dict = field(default_factory=dict)
    base: str | None = None


class _Parser:
    def __init__(self, text: str, base: str | None, scope: str | None):
        self.tokens = tokenize(text)
        self.i = 0
        self.base = base
        self.scope = scope if scope is not None else (base or "")
        self.prefixes: dict[str, str] = {}
        self.triples: set[Triple] = set()
        self._anon = 0

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else Token("", "", 1, 0)
            raise TurtleSyntaxError(msg + " at end of input", last.line, last.col + len(last.text))
        raise TurtleSyntaxError(msg, tok.line, tok.col)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            self.error("unexpected end")
        self.i += 1
        return tok

    def expect_punct(self, ch):
        tok = self.next()
        if tok.kind != "PUNCT" or tok.text != ch:
            self.error(f"expected {ch!r}, found {tok.text!r}", tok)

    def parse(self) -> ParseResult:
        while self.peek() is not None:
            tok = self.peek()
            low = tok.text.lower()
            if tok.kind == "LANGTAG" and low in ("@prefix", "@base"):
                self.i += 1
                self.directive(low[1:])
                self.expect_punct(".")
            elif tok.kind == "NAME" and low in ("prefix", "base"):
                self.i += 1
                self.directive(low)
            else:
                self.triples_block()
                self.expect_punct(".")
        return ParseResult(frozenset(self.triples), dict(self.prefixes), self.base)

    def directive(self, which):
        if which == "prefix":
            tok = self.next()
            if tok.kind != "PNAME" or not tok.text.endswith(":"):
                self.error("expected a prefix name ending in ':'", tok)
            iri_tok = self.next()
            if iri_tok.kind != "IRIREF":
                self.error("expected an IRI", iri_tok)
            self.prefixes[tok.text[:-1]] = self.resolve(iri_tok.text[1:-1], iri_tok)
        else:
            iri_tok = self.next()
            if iri_tok.kind != "IRIREF":
                self.error("expected an IRI", iri_tok)
            self.base = self.resolve(iri_tok.text[1:-1], iri_tok)

    def resolve(self, ref, tok):
        try:
            return resolve_iri(ref, self.base)
        except UnresolvableIri as exc:
            raise UnresolvableIri(f"{exc} (line {tok.line}, column {tok.col})") from None

    def triples_block(self):
        tok = self.peek()
        if tok is not None and tok.kind == "PUNCT" and tok.text == "[":
            # "[ ... ] ." may stand alone
            subject = self.subject()
            nxt = self.peek()
            if nxt is not None and nxt.kind == "PUNCT" and nxt.text == ".":
                return
            self.predicate_object_list(subject)
            return
        subject = self.subject()
        self.predicate_object_list(subject)

    def anonymous(self):
        """Node for ``[ ... ]``; the opening bracket is already consumed."""
        self._anon += 1
        node = BNode(f"[{self._anon}]", self.scope)
        tok = self.peek()
        if not (tok is not None and tok.kind == "PUNCT" and tok.text == "]"):
            self.predicate_object_list(node)
        self.expect_punct("]")
        return node

    def predicate_object_list(self, subject):
        while True:
            pred = self.predicate()
            while True:
                self.triples.add(Triple(subject, pred, self.object()))
                tok = self.peek()
                if tok is not None and tok.kind == "PUNCT" and tok.text == ",":
                    self.i += 1
                    continue
                break
            tok = self.peek()
            if tok is not None and tok.kind == "PUNCT" and tok.text == ";":
                while tok is not None and tok.kind == "PUNCT" and tok.text == ";":
                    self.i += 1
                    tok = self.peek()
                if tok is None or (tok.kind == "PUNCT" and tok.text in ".]"):
                    return
                continue
            return

    def iri_token(self, tok) -> IRI:
        if tok.kind == "IRIREF":
            return IRI(self.resolve(tok.text[1:-1], tok))
        if tok.kind == "PNAME":
            prefix, local = tok.text.split(":", 1)
            if prefix not in self.prefixes:
                self.error(f"undeclared prefix {prefix!r}", tok)
            local = re.sub(r"\\(.)", r"\1", local)
            return IRI(self.resolve(self.prefixes[prefix] + local, tok))
        self.error(f"expected an IRI, found {tok.text!r}", tok)

    def subject(self):
        tok = self.next()
        if tok.kind == "BLANK":
            return BNode(tok.text[2:], self.scope)
        if tok.kind == "PUNCT" and tok.text == "[":
            return self.anonymous()
        if tok.kind == "PUNCT" and tok.text == "(":
            self.error("collections are not supported", tok)
        return self.iri_token(tok)

    def predicate(self):
        tok = self.next()
        if tok.kind == "NAME" and tok.text == "a":
            return IRI(RDF + "type")
        return self.iri_token(tok)

    def object(self):
        tok = self.next()
        if tok.kind == "BLANK":
            return BNode(tok.text[2:], self.scope)
        if tok.kind in ("STRING", "LONG_STRING"):
            quote = 3 if tok.kind == "LONG_STRING" else 1
            try:
                lexical = unescape(tok.text[quote:-quote])
            except ValueError as exc:
                self.error(str(exc), tok)
            nxt = self.peek()
            if nxt is not None and nxt.kind == "LANGTAG":
                self.i += 1
                return Literal(lexical, lang=nxt.text[1:])
            if nxt is not None and nxt.kind == "DTYPE":
                self.i += 1
                return Literal(lexical, datatype=self.iri_token(self.next()).value)
            return Literal(lexical)
        if tok.kind == "NUMBER":
            text = tok.text
            if "e" in text.lower():
                return Literal(text, datatype=XSD_DOUBLE)
            if "." in text:
                return Literal(text, datatype=XSD_DECIMAL)
            return Literal(text, datatype=XSD_INTEGER)
        if tok.kind == "NAME" and tok.text in ("true", "false"):
            return Literal(tok.text, datatype=XSD_BOOLEAN)
        if tok.kind == "PUNCT" and tok.text == "[":
            return self.anonymous()
        if tok.kind == "PUNCT" and tok.text == "(":
            self.error("collections are not supported", tok)
        return self.iri_token(tok)


def parse_turtle(text: str, base: str | None = None, scope: str | None = None) -> ParseResult:
    """Parse a document, returning its triples together with the prefixes it declared."""
    if base is not None and not urlsplit(base).scheme:
        raise UnresolvableIri(f"base {base!r} is not absolute")
    return _Parser(text, base, scope).parse()


def parse_document(text: str, base: str) -> frozenset:
    """Parse ``text`` into a set of triples, resolving relative IRIs against ``base``.

    Blank node labels are scoped to ``base``: the same label in two documents
    denotes two different nodes.
    """
    return parse_turtle(text, base).graph


_NT_LABEL = re.compile(r"[A-Za-z0-9_]([A-Za-z0-9_.-]*[A-Za-z0-9_-])?")


def canonical_bnode_labels(graph) -> dict:
    """Deterministic ``BNode -> label`` map for serialisation."""
    nodes = sorted({x for t in graph for x in (t.s, t.o) if isinstance(x, BNode)},
                   key=term_sort_key)
    scopes = {b.scope for b in nodes}
    if len(scopes) <= 1 and all(_NT_LABEL.fullmatch(b.label) for b in nodes):
        return {b: b.label for b in nodes}
    return {b: f"b{i}" for i, b in enumerate(nodes)}


def serialize_ntriples(graph) -> str:
    """Canonical N-Triples: one triple per line, sorted."""
    labels = canonical_bnode_labels(graph)

    def fmt(x):
        return f"_:{labels[x]}" if isinstance(x, BNode) else x.n3()

    lines = [f"{fmt(t.s)} {fmt(t.p)} {fmt(t.o)} ." for t in sorted(graph, key=triple_sort_key)]
    return "".join(line + "\n" for line in lines)
