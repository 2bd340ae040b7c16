"""The subweb specification language: parsing and denotation.

A specification reads::

    FOLLOW ?v1 ... ?vn { G1 } [RECURSE [m]] [WITH SUBWEBS]
        [INCLUDE { C } [WHERE { G2 }]]

``WITH SUBWEBS`` is also accepted directly after the variable list, which is
where published specifications tend to put it. Relative IRIs stay unresolved
in the AST; each application resolves them against the IRI it runs at.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from .selectors import IDENTITY, Filter, SourceSelector
from .sparql import (
    BGP, Parser, QuerySyntaxError, TriplePattern, Var, eval_ggp, in_scope_vars,
    PatternMatcher, instantiate_template, resolve_relative,
)
from .terms import IRI
from .wold import Wold

UNBOUNDED = "unbounded"


class SwslSyntaxError(QuerySyntaxError):
    pass


@dataclass(frozen=True)
class SwslSpec:
    """Parsed specification.

    Attributes:
        variables: the FOLLOW variables, in order.
        pattern: the sources pattern ``G1``.
        recurse: ``None``, ``"unbounded"`` or a positive depth.
        with_subwebs: whether selected documents bring their own subwebs.
        template: the INCLUDE template, or ``None`` when nothing is filtered.
        where: the WHERE pattern; an empty pattern when only INCLUDE was given.
    """

    variables: tuple
    pattern: object
    recurse: Union[None, str, int] = None
    with_subwebs: bool = False
    template: Optional[tuple] = None
    where: Optional[object] = None
    text: str = ""

    @property
    def has_filter(self) -> bool:
        return self.template is not None

    @property
    def template_only(self) -> bool:
        return self.template is not None and self.where == BGP()

    def normalized(self) -> str:
        """Canonical rendering with the INCLUDE sugar expanded."""
        parts = ["FOLLOW " + " ".join(str(v) for v in self.variables)]
        parts.append("{ " + render_pattern(self.pattern) + " }")
        if self.recurse == UNBOUNDED:
            parts.append("RECURSE")
        elif self.recurse is not None:
            parts.append(f"RECURSE {self.recurse}")
        if self.with_subwebs:
            parts.append("WITH SUBWEBS")
        if self.template is not None:
            parts.append("INCLUDE { " + " ".join(_render_tp(tp) for tp in self.template) + " }")
            where = render_pattern(self.where)
            parts.append("WHERE { " + where + " }" if where else "WHERE { }")
        return " ".join(parts)


def _render_term(x) -> str:
    return x.n3() if hasattr(x, "n3") else str(x)


def _render_tp(tp: TriplePattern) -> str:
    return " ".join(_render_term(x) for x in tp) + " ."


def render_pattern(node) -> str:
    """Compact SPARQL rendering of a group pattern AST; it parses back to the same AST."""
    from . import sparql as q

    if isinstance(node, q.BGP):
        return " ".join(_render_tp(tp) for tp in node.patterns)
    if isinstance(node, q.Join):
        return f"{render_pattern(node.left)} {{ {render_pattern(node.right)} }}"
    if isinstance(node, q.UnionP):
        return f"{{ {render_pattern(node.left)} }} UNION {{ {render_pattern(node.right)} }}"
    if isinstance(node, q.Optional_):
        inner = render_pattern(node.right)
        if node.expr is not None:
            inner += f" FILTER({render_expr(node.expr)})"
        return f"{render_pattern(node.left)} OPTIONAL {{ {inner} }}".lstrip()
    if isinstance(node, q.FilterP):
        return f"{render_pattern(node.pattern)} FILTER({render_expr(node.expr)})".lstrip()
    if isinstance(node, q.SubSelect):
        vs = " ".join(str(v) for v in node.variables)
        distinct = "DISTINCT " if node.distinct else ""
        return f"{{ SELECT {distinct}{vs} WHERE {{ {render_pattern(node.pattern)} }} }}"
    raise TypeError(f"cannot render {node!r}")


def render_expr(e) -> str:
    from . import sparql as q

    if isinstance(e, q.Cmp):
        return f"({render_expr(e.left)} {e.op} {render_expr(e.right)})"
    if isinstance(e, q.And):
        return f"({render_expr(e.left)} && {render_expr(e.right)})"
    if isinstance(e, q.Or):
        return f"({render_expr(e.left)} || {render_expr(e.right)})"
    if isinstance(e, q.Not):
        return f"!{render_expr(e.arg)}"
    if isinstance(e, q.Bound):
        return f"bound({e.var})"
    if isinstance(e, q.Exists):
        kw = "NOT EXISTS" if e.negated else "EXISTS"
        return f"{kw} {{ {render_pattern(e.pattern)} }}"
    return _render_term(e)


def parse_swsl(text: str, prefixes: Mapping[str, str] | None = None) -> SwslSpec:
    """Parse a specification string.

    Args:
        text: specification source.
        prefixes: prefix declarations in effect, e.g. those of the document
            that published the text. Defaults to the common ones.

    Raises:
        SwslSyntaxError: with the grammar production being parsed.
    """
    try:
        return _SwslParser(text, prefixes).spec(text)
    except SwslSyntaxError:
        raise
    except QuerySyntaxError as exc:
        err = SwslSyntaxError(str(exc))
        err.line, err.column, err.production = exc.line, exc.column, exc.production
        raise err from None


class _SwslParser(Parser):
    def __init__(self, text, prefixes):
        from .terms import COMMON_PREFIXES

        merged = dict(COMMON_PREFIXES)
        merged.update(prefixes or {})
        super().__init__(text, merged, base=None)

    def with_subwebs(self) -> bool:
        if self.is_kw("WITH"):
            self.next()
            self.expect_kw("SUBWEBS")
            return True
        return False

    def spec(self, text: str) -> SwslSpec:
        self.prologue()
        self.production = "start"
        self.expect_kw("FOLLOW")
        self.production = "variables"
        variables = []
        while self.peek() is not None and self.peek().kind == "VAR":
            variables.append(Var(self.next().text[1:]))
        if not variables:
            self.error("expected at least one variable after FOLLOW")
        with_subwebs = self.with_subwebs()
        self.production = "sources"
        pattern = self.group()
        scope = set(in_scope_vars(pattern))
        for v in variables:
            if v not in scope:
                self.error(f"variable {v} does not occur in the sources pattern")
        recurse = None
        if self.is_kw("RECURSE"):
            self.production = "recurse"
            self.next()
            tok = self.peek()
            if tok is not None and tok.kind == "NUMBER":
                self.next()
                if not tok.text.isdigit():
                    self.error("recursion depth must be a nonnegative integer", tok)
                depth = int(tok.text)
                recurse = depth if depth > 0 else None
            else:
                recurse = UNBOUNDED
        if self.with_subwebs():
            if with_subwebs:
                self.error("WITH SUBWEBS given twice")
            with_subwebs = True
        template = where = None
        if self.is_kw("INCLUDE"):
            self.production = "filter"
            self.next()
            template = self.construct_template()
            where = BGP()
            if self.is_kw("WHERE"):
                self.next()
                where = self.group()
        if not self.at_end():
            self.production = "start"
            self.error(f"unexpected {self.peek().text!r}")
        return SwslSpec(tuple(variables), pattern, recurse, with_subwebs, template, where, text)


# --------------------------------------------------------------------------
# denotation

def _as_iri(x) -> IRI:
    return IRI(x) if isinstance(x, str) else x


def source_bindings(spec: SwslSpec, seeds: Iterable, w: Wold) -> dict:
    """Run the sources clause and record where each selected IRI came from.

    Returns ``{selected IRI: [(context IRI, solution mapping), ...]}`` in a
    deterministic order. Without RECURSE the pattern runs once per seed; with
    it, every newly selected IRI becomes a context for the next level, up to
    the given depth.
    """
    provenance: dict = {}
    contexts = sorted({_as_iri(s) for s in seeds}, key=lambda i: i.value)
    visited = set(contexts)
    level = 0
    while contexts:
        fresh = []
        for ctx in contexts:
            d = w.adoc(ctx)
            if d is None:
                continue
            try:
                pattern = resolve_relative(spec.pattern, ctx.value)
            except ValueError:
                continue
            for mu in eval_ggp(pattern, w.data(d)):
                for v in spec.variables:
                    val = mu.get(v)
                    if isinstance(val, IRI):
                        provenance.setdefault(val, []).append((ctx, mu))
                        if val not in visited:
                            visited.add(val)
                            fresh.append(val)
        if spec.recurse is None:
            break
        if spec.recurse != UNBOUNDED and level >= spec.recurse:
            break
        level += 1
        contexts = sorted(fresh, key=lambda i: i.value)
    return provenance


def eval_source_selector(spec: SwslSpec, seeds: Iterable, w: Wold) -> frozenset:
    return frozenset(source_bindings(spec, seeds, w))


def _keep(triples: Iterable, patterns) -> set:
    test = patterns if isinstance(patterns, PatternMatcher) else PatternMatcher(patterns)
    if test.never:
        return set()
    return {t for t in triples if test(t)}


def eval_filter(spec: SwslSpec, seeds: Iterable, w: Wold):
    """Return ``f(S, v)`` for this specification applied at ``seeds`` over ``w``."""
    if spec.template is None:
        return lambda s, v: frozenset(s)
    provenance = source_bindings(spec, seeds, w)
    static: dict = {}

    def patterns_for_static(v: IRI) -> PatternMatcher:
        # with an empty WHERE the instantiated template only depends on v
        if v not in static:
            out = []
            for ctx, mu1 in provenance.get(v, ()):
                tmpl = resolve_relative(spec.template, ctx.value)
                out.extend(instantiate_template(tmpl, mu1))
            static[v] = PatternMatcher(out)
        return static[v]

    template_only = spec.template_only

    def f(s, v) -> frozenset:
        s = frozenset(s)
        v = _as_iri(v)
        if template_only:
            return frozenset(_keep(s, patterns_for_static(v)))
        kept: set = set()
        for ctx, mu1 in provenance.get(v, ()):
            tmpl = instantiate_template(resolve_relative(spec.template, ctx.value), mu1)
            where = resolve_relative(spec.where, ctx.value)
            patterns = []
            for mu2 in eval_ggp(where, s, env=mu1):
                patterns.extend(instantiate_template(tmpl, mu2))
            kept |= _keep(s - kept, patterns)
        return frozenset(kept)

    return f


class SwslSelector(SourceSelector):
    """Source selector defined by a parsed specification and its seeds."""

    def __init__(self, spec: SwslSpec, seeds: Iterable):
        self.spec = spec
        self.seeds = frozenset(_as_iri(s) for s in seeds)
        self.label = "swsl@" + ",".join(sorted(s.value for s in self.seeds))

    def __call__(self, w: Wold) -> frozenset:
        return eval_source_selector(self.spec, self.seeds, w)


class SwslFilter(Filter):
    """Filter defined by the INCLUDE/WHERE clause of a specification."""

    def __init__(self, spec: SwslSpec, seeds: Iterable):
        self.spec = spec
        self.seeds = frozenset(_as_iri(s) for s in seeds)
        self.distributive = spec.template_only
        self.label = "include"

    def bind(self, w: Wold):
        return eval_filter(self.spec, self.seeds, w)


def swsl_to_tuple(spec: SwslSpec, seeds: Iterable, context=None, label: str = ""):
    """Turn a specification into a ``(selector, with_subwebs, filter)`` tuple.

    ``context`` is accepted for symmetry with published specifications; the
    seeds double as the base IRIs for relative references.
    """
    from .subweb import SpecTuple

    seeds = list(seeds) if context is None else [context] if not seeds else list(seeds)
    selector = SwslSelector(spec, seeds)
    filt = SwslFilter(spec, seeds) if spec.has_filter else IDENTITY
    return SpecTuple(selector, spec.with_subwebs, filt, label or selector.label)
