"""Parser and evaluator for the SPARQL subset the engine needs.

Covered: ``PREFIX``/``BASE``, ``SELECT [DISTINCT] vars|*``, basic graph
patterns with ``;``/``,``/``a``, ``OPTIONAL``, ``UNION``, nested groups,
sub-selects and ``FILTER`` with comparisons, ``&&``/``||``/``!``,
``bound`` and ``[NOT] EXISTS``. Anything else is rejected with
:class:`UnsupportedFeature` rather than silently ignored.

Evaluation follows the SPARQL algebra with bag semantics. ``EXISTS`` uses
substitution semantics: the current row's bindings are visible everywhere
inside the nested pattern, sub-selects included.
"""
from __future__ import annotations

import csv
import io
import re
from collections import defaultdict
from dataclasses import dataclass, fields, replace
from typing import Iterable, Iterator, Mapping, Optional, Union

from .terms import (
    BNode, COMMON_PREFIXES, IRI, Literal, RDF, Triple, XSD_BOOLEAN, XSD_DECIMAL,
    XSD_DOUBLE, XSD_INTEGER, term_sort_key,
)
from .turtle import UnresolvableIri, resolve_iri, unescape
from .wold import Dataset, Wold, dataset_of


class QuerySyntaxError(SyntaxError):
    def __init__(self, msg: str, line: int = 0, column: int = 0, production: str = ""):
        where = f" (line {line}, column {column})" if line else ""
        ctx = f" in {production}" if production else ""
        super().__init__(f"{msg}{ctx}{where}")
        self.line = line
        self.column = column
        self.production = production


class UnsupportedFeature(QuerySyntaxError):
    def __init__(self, name: str, line: int = 0, column: int = 0):
        super().__init__(f"unsupported feature: {name}", line, column)
        self.feature = name


class EvaluationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# AST

@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class RelIRI:
    """A relative IRI reference kept unresolved until a base is known."""

    ref: str

    def __str__(self) -> str:
        return f"<{self.ref}>"


PatternTerm = Union[IRI, BNode, Literal, Var, RelIRI]


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def variables(self) -> set:
        return {x for x in self if isinstance(x, Var)}

    def __str__(self) -> str:
        return " ".join(x.n3() if hasattr(x, "n3") else str(x) for x in self) + " ."


@dataclass(frozen=True)
class BGP:
    patterns: tuple = ()


@dataclass(frozen=True)
class Join:
    left: object
    right: object


@dataclass(frozen=True)
class Optional_:
    left: object
    right: object
    expr: object = None


@dataclass(frozen=True)
class UnionP:
    left: object
    right: object


@dataclass(frozen=True)
class FilterP:
    expr: object
    pattern: object


@dataclass(frozen=True)
class SubSelect:
    variables: tuple
    pattern: object
    distinct: bool = False


# expressions
@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Bound:
    var: Var


@dataclass(frozen=True)
class Exists:
    pattern: object
    negated: bool = False


@dataclass(frozen=True)
class SelectQuery:
    variables: tuple
    where: object
    distinct: bool = False
    star: bool = False
    prefixes: tuple = ()

    def projection(self) -> tuple:
        return self.variables if not self.star else tuple(in_scope_vars(self.where))


_AST_NODES = (TriplePattern, BGP, Join, Optional_, UnionP, FilterP, SubSelect,
              Cmp, And, Or, Not, Bound, Exists, SelectQuery)


def walk(node) -> Iterator:
    """Pre-order traversal over AST nodes (tuples are flattened)."""
    if isinstance(node, tuple):
        for x in node:
            yield from walk(x)
        return
    yield node
    if isinstance(node, _AST_NODES):
        for f in fields(node):
            yield from walk(getattr(node, f.name))


def transform(node, fn):
    """Rebuild ``node`` bottom-up, applying ``fn`` to every leaf term."""
    if isinstance(node, tuple):
        return tuple(transform(x, fn) for x in node)
    if isinstance(node, _AST_NODES):
        changes = {f.name: transform(getattr(node, f.name), fn) for f in fields(node)}
        return replace(node, **changes)
    return fn(node)


def triple_patterns(node) -> list:
    return [n for n in walk(node) if isinstance(n, TriplePattern)]


def in_scope_vars(node) -> list:
    seen: dict = {}
    for n in walk(node):
        if isinstance(n, TriplePattern):
            for x in n:
                if isinstance(x, Var):
                    seen.setdefault(x, None)
        elif isinstance(n, SubSelect):
            for v in n.variables:
                seen.setdefault(v, None)
    return list(seen)


def resolve_relative(node, base: str):
    """Replace every :class:`RelIRI` under ``node`` with an IRI resolved against ``base``."""
    def fn(x):
        if isinstance(x, RelIRI):
            return IRI(resolve_iri(x.ref, base))
        return x
    return transform(node, fn)


def has_relative(node) -> bool:
    return any(isinstance(x, RelIRI) for x in walk(node) if not isinstance(x, _AST_NODES)) or any(
        isinstance(x, RelIRI) for tp in triple_patterns(node) for x in tp)


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+|#[^\n]*"),
    ("IRIREF", r"<[^<>\"{}|^`\\\x00-\x20]*>"),
    ("LONG_STRING", r'"""(?:[^"\\]|\\.|"(?!""))*"""' + r"|'''(?:[^'\\]|\\.|'(?!''))*'''"),
    ("STRING", r'"(?:[^"\\\n\r]|\\.)*"' + r"|'(?:[^'\\\n\r]|\\.)*'"),
    ("VAR", r"[?$][A-Za-z0-9_]+"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("DTYPE", r"\^\^"),
    ("BLANK", r"_:[A-Za-z0-9_](?:[\w\-.]*[\w\-])?"),
    ("NUMBER", r"(?:\d+\.\d*[eE][+-]?\d+|\.?\d+[eE][+-]?\d+|\d*\.\d+|\d+)"),
    ("PNAME", r"(?:[A-Za-z][\w\-.]*)?:(?:[\w\-:%](?:[\w\-.:%]*[\w\-:%])?)?"),
    ("NAME", r"[A-Za-z][A-Za-z0-9_]*"),
    ("OP", r"&&|\|\||!=|<=|>=|[=<>!|/^+\-]"),
    ("PUNCT", r"[{}().;,*\[\]]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))

_UNSUPPORTED_KEYWORDS = {
    "GRAPH", "SERVICE", "MINUS", "BIND", "VALUES", "ORDER", "LIMIT", "OFFSET",
    "GROUP", "HAVING", "CONSTRUCT", "ASK", "DESCRIBE", "FROM", "REDUCED",
}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        chunk = m.group()
        if m.lastgroup != "WS":
            out.append(_Tok(m.lastgroup, chunk, line, pos - line_start + 1))
        n = chunk.count("\n")
        if n:
            line += n
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    return out


class Parser:
    """Recursive-descent parser shared by queries and subweb specifications.

    With ``base=None`` relative IRIs are kept as :class:`RelIRI` nodes.
    """

    def __init__(self, text: str, prefixes: Mapping[str, str] | None = None,
                 base: str | None = None):
        self.toks = _tokenize(text)
        self.i = 0
        self.prefixes = dict(COMMON_PREFIXES if prefixes is None else prefixes)
        self.base = base
        self.production = "query"

    # token helpers
    def peek(self, k: int = 0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def error(self, msg, tok=None):
        tok = tok if tok is not None else self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("", "", 1, 1)
            raise QuerySyntaxError(msg + " at end of input", last.line,
                                   last.col + len(last.text), self.production)
        raise QuerySyntaxError(msg, tok.line, tok.col, self.production)

    def next(self):
        tok = self.peek()
        if tok is None:
            self.error("unexpected end")
        self.i += 1
        return tok

    def is_kw(self, word, k=0) -> bool:
        tok = self.peek(k)
        return tok is not None and tok.kind == "NAME" and tok.text.upper() == word

    def is_punct(self, ch, k=0) -> bool:
        tok = self.peek(k)
        return tok is not None and tok.kind in ("PUNCT", "OP") and tok.text == ch

    def expect_kw(self, word):
        tok = self.next()
        if tok.kind != "NAME" or tok.text.upper() != word:
            self.error(f"expected {word}, found {tok.text!r}", tok)

    def expect(self, ch):
        tok = self.next()
        if tok.kind not in ("PUNCT", "OP") or tok.text != ch:
            self.error(f"expected {ch!r}, found {tok.text!r}", tok)

    def check_unsupported(self):
        tok = self.peek()
        if tok is not None and tok.kind == "NAME" and tok.text.upper() in _UNSUPPORTED_KEYWORDS:
            raise UnsupportedFeature(tok.text.upper(), tok.line, tok.col)

    # prologue and query
    def prologue(self):
        while True:
            if self.is_kw("PREFIX"):
                self.next()
                tok = self.next()
                if tok.kind != "PNAME" or not tok.text.endswith(":"):
                    self.error("expected a prefix name", tok)
                iri = self.next()
                if iri.kind != "IRIREF":
                    self.error("expected an IRI", iri)
                self.prefixes[tok.text[:-1]] = self.iri_value(iri)
            elif self.is_kw("BASE"):
                self.next()
                iri = self.next()
                if iri.kind != "IRIREF":
                    self.error("expected an IRI", iri)
                self.base = self.iri_value(iri)
            else:
                return

    def select_query(self) -> SelectQuery:
        self.prologue()
        self.check_unsupported()
        self.expect_kw("SELECT")
        variables, distinct, star = self.select_clause()
        self.check_unsupported()
        if self.is_kw("WHERE"):
            self.next()
        where = self.group()
        self.check_unsupported()
        if not self.at_end():
            self.error(f"unexpected {self.peek().text!r} after query")
        return SelectQuery(variables, where, distinct, star, tuple(sorted(self.prefixes.items())))

    def select_clause(self):
        distinct = False
        if self.is_kw("DISTINCT"):
            self.next()
            distinct = True
        self.check_unsupported()
        if self.is_punct("*"):
            self.next()
            return (), distinct, True
        variables = []
        while self.peek() is not None and self.peek().kind == "VAR":
            variables.append(Var(self.next().text[1:]))
        if self.is_punct("("):
            raise UnsupportedFeature("projection expressions", self.peek().line, self.peek().col)
        if not variables:
            self.error("expected projection variables")
        return tuple(variables), distinct, False

    # group graph patterns
    def group(self):
        """Parse ``{ ... }`` into an algebra expression."""
        self.expect("{")
        if self.is_kw("SELECT"):
            self.next()
            variables, distinct, star = self.select_clause()
            if self.is_kw("WHERE"):
                self.next()
            inner = self.group()
            self.check_unsupported()
            self.expect("}")
            if star:
                variables = tuple(in_scope_vars(inner))
            return SubSelect(variables, inner, distinct)
        current = None
        pending_triples: list = []
        filters: list = []

        def flush():
            nonlocal current, pending_triples
            if pending_triples:
                bgp = BGP(tuple(pending_triples))
                current = bgp if current is None else _join(current, bgp)
                pending_triples = []

        while not self.is_punct("}"):
            if self.at_end():
                self.error("unterminated group pattern")
            self.check_unsupported()
            if self.is_kw("OPTIONAL"):
                self.next()
                flush()
                inner = self.group()
                expr = None
                if isinstance(inner, FilterP):
                    expr, inner = inner.expr, inner.pattern
                current = Optional_(current if current is not None else BGP(), inner, expr)
            elif self.is_kw("FILTER"):
                self.next()
                filters.append(self.constraint())
            elif self.is_punct("{"):
                flush()
                sub = self.group()
                while self.is_kw("UNION"):
                    self.next()
                    sub = UnionP(sub, self.group())
                current = sub if current is None else Join(current, sub)
            else:
                pending_triples.extend(self.triples_same_subject())
            if self.is_punct("."):
                self.next()
        self.expect("}")
        flush()
        if current is None:
            current = BGP()
        for expr in filters:
            current = FilterP(expr, current)
        return current

    def triples_same_subject(self) -> list:
        subject = self.term(position="subject")
        out = []
        while True:
            pred = self.verb()
            while True:
                out.append(TriplePattern(subject, pred, self.term(position="object")))
                if self.is_punct(","):
                    self.next()
                    continue
                break
            if self.is_punct(";"):
                while self.is_punct(";"):
                    self.next()
                if self.is_punct(".") or self.is_punct("}") or self.at_end():
                    return out
                continue
            if self.peek() is not None and self.peek().kind == "OP" and self.peek().text in "/|^+*":
                raise UnsupportedFeature("property paths", self.peek().line, self.peek().col)
            return out

    def verb(self):
        tok = self.peek()
        if tok is not None and tok.kind == "NAME" and tok.text == "a":
            self.next()
            return IRI(RDF + "type")
        if tok is not None and tok.kind == "OP" and tok.text in "^!(":
            raise UnsupportedFeature("property paths", tok.line, tok.col)
        term = self.term(position="predicate")
        if isinstance(term, (Literal, BNode)):
            self.error("a predicate must be an IRI or a variable", tok)
        nxt = self.peek()
        if nxt is not None and nxt.kind == "OP" and nxt.text in "/|*+":
            raise UnsupportedFeature("property paths", nxt.line, nxt.col)
        return term

    def iri_value(self, tok) -> str:
        ref = tok.text[1:-1]
        try:
            return resolve_iri(ref, self.base)
        except UnresolvableIri:
            if self.base is None and not _IRI_ILLEGAL.search(ref):
                return ref
            raise

    def iri_term(self, tok):
        if tok.kind == "IRIREF":
            ref = tok.text[1:-1]
            if _IRI_ILLEGAL.search(ref):
                raise UnresolvableIri(f"illegal character in IRI {ref!r}")
            if re.match(r"^[A-Za-z][A-Za-z0-9+.\-]*:", ref):
                return IRI(ref)
            if self.base is None:
                return RelIRI(ref)
            return IRI(resolve_iri(ref, self.base))
        if tok.kind == "PNAME":
            prefix, local = tok.text.split(":", 1)
            if prefix not in self.prefixes:
                self.error(f"undeclared prefix {prefix!r}", tok)
            return IRI(self.prefixes[prefix] + local)
        self.error(f"expected an IRI, found {tok.text!r}", tok)

    def term(self, position="object"):
        tok = self.next()
        if tok.kind == "VAR":
            return Var(tok.text[1:])
        if tok.kind in ("IRIREF", "PNAME"):
            return self.iri_term(tok)
        if tok.kind == "BLANK":
            # blank nodes in patterns behave like undistinguished variables
            return Var("_bnode_" + tok.text[2:])
        if tok.kind == "PUNCT" and tok.text in "[(":
            raise UnsupportedFeature("blank node property lists and collections", tok.line, tok.col)
        if position == "subject" and tok.kind in ("STRING", "LONG_STRING", "NUMBER"):
            self.error("a literal cannot be a subject", tok)
        lit = self.literal(tok)
        if lit is None:
            self.error(f"unexpected {tok.text!r}", tok)
        return lit

    def literal(self, tok):
        if tok.kind in ("STRING", "LONG_STRING"):
            q = 3 if tok.kind == "LONG_STRING" else 1
            lexical = unescape(tok.text[q:-q])
            nxt = self.peek()
            if nxt is not None and nxt.kind == "LANGTAG":
                self.next()
                return Literal(lexical, lang=nxt.text[1:])
            if nxt is not None and nxt.kind == "DTYPE":
                self.next()
                dt = self.iri_term(self.next())
                return Literal(lexical, datatype=dt.value if isinstance(dt, IRI) else dt.ref)
            return Literal(lexical)
        if tok.kind == "NUMBER":
            t = tok.text
            dt = XSD_DOUBLE if "e" in t.lower() else XSD_DECIMAL if "." in t else XSD_INTEGER
            return Literal(t, datatype=dt)
        if tok.kind == "NAME" and tok.text in ("true", "false"):
            return Literal(tok.text, datatype=XSD_BOOLEAN)
        return None

    # construct templates
    def construct_template(self) -> tuple:
        self.expect("{")
        out = []
        while not self.is_punct("}"):
            if self.at_end():
                self.error("unterminated template")
            if self.is_kw("FILTER") or self.is_kw("OPTIONAL") or self.is_punct("{"):
                self.error("templates may only contain triple patterns")
            out.extend(self.triples_same_subject())
            if self.is_punct("."):
                self.next()
        self.expect("}")
        return tuple(out)

    # expressions
    def constraint(self):
        if self.is_punct("("):
            self.next()
            expr = self.expression()
            self.expect(")")
            return expr
        if self.is_kw("BOUND"):
            return self.primary()
        if self.is_kw("NOT") or self.is_kw("EXISTS"):
            return self.primary()
        self.error("expected a bracketed constraint")

    def expression(self):
        left = self.conjunction()
        while self.is_punct("||"):
            self.next()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self):
        left = self.relational()
        while self.is_punct("&&"):
            self.next()
            left = And(left, self.relational())
        return left

    def relational(self):
        left = self.unary()
        tok = self.peek()
        if tok is not None and tok.kind == "OP" and tok.text in ("=", "!=", "<", ">", "<=", ">="):
            self.next()
            return Cmp(tok.text, left, self.unary())
        return left

    def unary(self):
        if self.is_punct("!"):
            self.next()
            return Not(self.unary())
        return self.primary()

    def primary(self):
        tok = self.peek()
        if tok is None:
            self.error("expected an expression")
        if tok.kind in ("PUNCT", "OP") and tok.text == "(":
            self.next()
            expr = self.expression()
            self.expect(")")
            return expr
        if tok.kind == "NAME":
            word = tok.text.upper()
            if word == "BOUND":
                self.next()
                self.expect("(")
                v = self.next()
                if v.kind != "VAR":
                    self.error("bound() takes a variable", v)
                self.expect(")")
                return Bound(Var(v.text[1:]))
            if word == "NOT":
                self.next()
                self.expect_kw("EXISTS")
                return Exists(self.group(), negated=True)
            if word == "EXISTS":
                self.next()
                return Exists(self.group())
            if word not in ("TRUE", "FALSE"):
                raise UnsupportedFeature(f"function {tok.text}", tok.line, tok.col)
        return self.term()


_IRI_ILLEGAL = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def _join(left, right):
    # adjacent basic graph patterns collapse into one
    if isinstance(left, BGP) and isinstance(right, BGP):
        return BGP(left.patterns + right.patterns)
    if isinstance(left, FilterP):
        return Join(left, right)
    return Join(left, right)


def parse_select(text: str, prefixes: Mapping[str, str] | None = None,
                 base: str | None = None) -> SelectQuery:
    """Parse a SELECT query of the supported subset."""
    return Parser(text, prefixes, base).select_query()


def parse_group(text: str, prefixes=None, base=None):
    """Parse a standalone ``{ ... }`` group graph pattern."""
    p = Parser(text, prefixes, base)
    g = p.group()
    if not p.at_end():
        p.error("trailing input after group")
    return g


# --------------------------------------------------------------------------
# evaluation

class TripleIndex:
    """Subject/predicate/object lookup tables over a triple set."""

    def __init__(self, triples: Iterable[Triple]):
        self.triples = frozenset(triples)
        self.by_s = defaultdict(list)
        self.by_p = defaultdict(list)
        self.by_o = defaultdict(list)
        for t in self.triples:
            self.by_s[t.s].append(t)
            self.by_p[t.p].append(t)
            self.by_o[t.o].append(t)

    def candidates(self, s, p, o) -> Iterable[Triple]:
        options = []
        if s is not None:
            options.append(self.by_s.get(s, ()))
        if p is not None:
            options.append(self.by_p.get(p, ()))
        if o is not None:
            options.append(self.by_o.get(o, ()))
        if not options:
            return self.triples
        return min(options, key=len)


def _subst(x, row):
    if isinstance(x, Var):
        return row.get(x, x)
    return x


def match_pattern(pattern: TriplePattern, t: Triple, row: Mapping | None = None) -> Optional[dict]:
    """Bindings extending ``row`` under which ``pattern`` matches ``t``, or None."""
    out = dict(row) if row else {}
    for x, v in zip(pattern, t):
        if isinstance(x, Var):
            bound = out.get(x)
            if bound is None:
                out[x] = v
            elif bound != v:
                return None
        elif isinstance(x, RelIRI):
            return None
        elif x != v:
            return None
    return out


def pattern_matches(pattern: TriplePattern, t: Triple) -> bool:
    return match_pattern(pattern, t) is not None


class PatternMatcher:
    """Tests triples against a fixed set of triple patterns.

    Patterns without repeated variables are grouped by which positions are
    constant, so a test is one set lookup per group.
    """

    def __init__(self, patterns: Iterable[TriplePattern]):
        groups: dict = {}
        self.general = []
        self.never = True
        for pattern in patterns:
            tp = tuple(pattern)
            if any(isinstance(x, RelIRI) for x in tp):
                continue
            self.never = False
            names = [x for x in tp if isinstance(x, Var)]
            if len(names) != len(set(names)):
                self.general.append(pattern)
                continue
            mask = tuple(i for i, x in enumerate(tp) if not isinstance(x, Var))
            groups.setdefault(mask, set()).add(tuple(tp[i] for i in mask))
        self.groups = list(groups.items())
        self._seen: dict = {}

    def __call__(self, t: Triple) -> bool:
        hit = self._seen.get(t)
        if hit is None:
            hit = self._seen[t] = self._test(t)
        return hit

    def _test(self, t: Triple) -> bool:
        for mask, keys in self.groups:
            if tuple(t[i] for i in mask) in keys:
                return True
        return any(match_pattern(tp, t) is not None for tp in self.general)


def _eval_bgp(patterns, index: TripleIndex, env: Mapping) -> list:
    rows = [dict(env)]
    remaining = list(patterns)
    while remaining and rows:
        sample = rows[0]

        def boundness(tp):
            return sum(1 for x in tp if not isinstance(x, Var) or x in sample)

        remaining.sort(key=boundness, reverse=True)
        tp = remaining.pop(0)
        nxt = []
        for row in rows:
            s, p, o = (_subst(x, row) for x in tp)
            key = [None if isinstance(x, Var) else x for x in (s, p, o)]
            for t in index.candidates(*key):
                m = match_pattern(TriplePattern(s, p, o), t, row)
                if m is not None:
                    nxt.append(m)
        rows = nxt
    return rows if not remaining else []


def compatible(a: Mapping, b: Mapping) -> bool:
    if len(a) > len(b):
        a, b = b, a
    return all(b.get(k, v) == v for k, v in a.items())


def _join_rows(left: list, right: list) -> list:
    if not left or not right:
        return []
    common = set(left[0]).intersection(*left[1:]) & set(right[0]).intersection(*right[1:])
    keys = sorted(common)
    table = defaultdict(list)
    for r in right:
        table[tuple(r[k] for k in keys)].append(r)
    out = []
    for l in left:
        for r in table.get(tuple(l[k] for k in keys), ()):
            if compatible(l, r):
                merged = dict(l)
                merged.update(r)
                out.append(merged)
    return out


class _ExprError(Exception):
    pass


def _value(expr, row, ctx):
    if isinstance(expr, Var):
        if expr not in row:
            raise _ExprError(f"unbound {expr}")
        return row[expr]
    if isinstance(expr, (IRI, Literal, BNode)):
        return expr
    return Literal("true" if _ebv(expr, row, ctx) else "false", datatype=XSD_BOOLEAN)


def _ebv_term(term) -> bool:
    if isinstance(term, Literal):
        if term.datatype == XSD_BOOLEAN:
            return term.lexical in ("true", "1")
        if term.is_numeric:
            try:
                return term.numeric_value() != 0
            except ValueError:
                return False
        if term.datatype is None:
            return term.lexical != ""
    raise _ExprError("no effective boolean value")


def terms_equal(a, b) -> bool:
    """RDF term equality with numeric literals compared by value."""
    if isinstance(a, Literal) and isinstance(b, Literal):
        if a.is_numeric and b.is_numeric:
            try:
                return a.numeric_value() == b.numeric_value()
            except ValueError:
                raise _ExprError("malformed numeric literal") from None
        return (a.lexical, a.lang, a.datatype) == (b.lexical, b.lang, b.datatype)
    return a == b


def _compare(op, a, b) -> bool:
    if op == "=":
        return terms_equal(a, b)
    if op == "!=":
        return not terms_equal(a, b)
    if isinstance(a, Literal) and isinstance(b, Literal):
        if a.is_numeric and b.is_numeric:
            x, y = a.numeric_value(), b.numeric_value()
        elif a.datatype is None and b.datatype is None and not a.lang and not b.lang:
            x, y = a.lexical, b.lexical
        else:
            raise _ExprError("incomparable literals")
        return {"<": x < y, ">": x > y, "<=": x <= y, ">=": x >= y}[op]
    raise _ExprError("ordering is only defined on literals")


def _ebv(expr, row, ctx) -> bool:
    """Effective boolean value; raises _ExprError for SPARQL type errors."""
    if isinstance(expr, And):
        try:
            left = _ebv(expr.left, row, ctx)
        except _ExprError:
            if _ebv(expr.right, row, ctx) is False:
                return False
            raise
        return left and _ebv(expr.right, row, ctx)
    if isinstance(expr, Or):
        try:
            left = _ebv(expr.left, row, ctx)
        except _ExprError:
            if _ebv(expr.right, row, ctx) is True:
                return True
            raise
        return left or _ebv(expr.right, row, ctx)
    if isinstance(expr, Not):
        return not _ebv(expr.arg, row, ctx)
    if isinstance(expr, Bound):
        return expr.var in row
    if isinstance(expr, Cmp):
        return _compare(expr.op, _value(expr.left, row, ctx), _value(expr.right, row, ctx))
    if isinstance(expr, Exists):
        found = bool(_eval(expr.pattern, ctx, row))
        return not found if expr.negated else found
    if isinstance(expr, (Var, IRI, Literal, BNode)):
        return _ebv_term(_value(expr, row, ctx))
    raise EvaluationError(f"malformed expression {expr!r}")


def _passes(expr, row, ctx) -> bool:
    try:
        return _ebv(expr, row, ctx) is True
    except _ExprError:
        return False


def _eval(node, ctx: TripleIndex, env: Mapping) -> list:
    if isinstance(node, BGP):
        return _eval_bgp(node.patterns, ctx, env)
    if isinstance(node, Join):
        return _join_rows(_eval(node.left, ctx, env), _eval(node.right, ctx, env))
    if isinstance(node, Optional_):
        left = _eval(node.left, ctx, env)
        right = _eval(node.right, ctx, env)
        out = []
        for l in left:
            extended = False
            for r in right:
                if compatible(l, r):
                    merged = dict(l)
                    merged.update(r)
                    if node.expr is None or _passes(node.expr, merged, ctx):
                        out.append(merged)
                        extended = True
            if not extended:
                out.append(l)
        return out
    if isinstance(node, UnionP):
        return _eval(node.left, ctx, env) + _eval(node.right, ctx, env)
    if isinstance(node, FilterP):
        return [r for r in _eval(node.pattern, ctx, env) if _passes(node.expr, r, ctx)]
    if isinstance(node, SubSelect):
        rows = _eval(node.pattern, ctx, env)
        keep = set(node.variables) | set(env)
        projected = [{k: v for k, v in r.items() if k in keep} for r in rows]
        if node.distinct:
            projected = _distinct(projected)
        return projected
    raise EvaluationError(f"cannot evaluate {node!r}")


def _distinct(rows: list) -> list:
    seen = set()
    out = []
    for r in rows:
        key = frozenset(r.items())
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def _as_index(ds) -> TripleIndex:
    if isinstance(ds, TripleIndex):
        return ds
    if isinstance(ds, Dataset):
        return TripleIndex(ds.default)
    if isinstance(ds, Wold):
        return TripleIndex(dataset_of(ds).default)
    return TripleIndex(ds)


def eval_ggp(g, ds, env: Mapping | None = None) -> list:
    """Evaluate a group graph pattern against the default graph of ``ds``.

    ``ds`` may be a :class:`Dataset`, a web, a triple set or a prebuilt
    :class:`TripleIndex`. Returns a bag (list) of solution mappings; the
    bindings of ``env`` are substituted into the pattern and kept in every row.
    """
    return _eval(g, _as_index(ds), dict(env or {}))


# --------------------------------------------------------------------------
# results

@dataclass
class ResultTable:
    variables: tuple
    rows: list

    @classmethod
    def from_mappings(cls, variables, mappings, distinct=False) -> "ResultTable":
        rows = [tuple(m.get(v) for v in variables) for m in mappings]
        if distinct:
            rows = list(dict.fromkeys(rows))
        return cls(tuple(variables), rows)

    def __len__(self) -> int:
        return len(self.rows)

    def as_set(self) -> frozenset:
        return frozenset(self.rows)

    def sorted_rows(self) -> list:
        return sorted(self.rows, key=lambda r: tuple(term_sort_key(x) for x in r))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([v.name for v in self.variables])
        for row in self.sorted_rows():
            writer.writerow(["NULL" if x is None else x.n3() for x in row])
        return buf.getvalue()

    def to_text(self) -> str:
        """Deterministic, sorted, column-aligned rendering."""
        header = [str(v) for v in self.variables]
        body = [["NULL" if x is None else x.n3() for x in row] for row in self.sorted_rows()]
        widths = [max([len(h)] + [len(r[i]) for r in body]) for i, h in enumerate(header)]

        def line(cells):
            return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

        out = [line(header), "-+-".join("-" * w for w in widths)]
        out.extend(line(r) for r in body)
        return "\n".join(out) + "\n"


def eval_select(q: SelectQuery, s) -> ResultTable:
    """Evaluate ``q`` over the dataset built from web/subweb ``s`` (or a triple set)."""
    rows = eval_ggp(q.where, s)
    return ResultTable.from_mappings(q.projection(), rows, distinct=q.distinct)


def instantiate_template(template: Iterable[TriplePattern], mu: Mapping) -> list:
    """Substitute the bindings of ``mu`` into each template pattern."""
    return [TriplePattern(*(_subst(x, mu) for x in tp)) for tp in template]
