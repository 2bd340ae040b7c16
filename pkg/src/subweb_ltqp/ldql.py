"""Link path expressions, LDQL queries, and encodings of specifications into data.

A link pattern is a triple of slots, each an IRI, a literal (object slot
only), ``_`` or ``+``. Matched against a triple in the context of an IRI
``c``, it yields every IRI sitting in a ``_`` slot, provided every other slot
agrees: constants must be equal and ``+`` must be ``c``.

Link path expressions combine patterns with ``/`` (sequence), ``|``
(alternative), ``*`` (closure) and ``[e]`` (test). The encoding part turns a
specification-annotated web into a plain web carrying extra "meta" triples,
so that a single path expression can try to reproduce every subweb of
interest; :func:`check_capture` decides whether it does.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .selectors import IDENTITY, ConstantSelector, SourceSelector
from .sparql import ResultTable, SelectQuery, eval_select
from .subweb import SpecAnnotatedWold, SpecTuple, soi
from .terms import IRI, Literal, Triple
from .wold import Subweb, Wold

WILD = "_"
PLUS = "+"
ENC_NS = "urn:swt:enc#"

Slot = Union[IRI, Literal, str]


class UnsupportedSpecShape(ValueError):
    pass


class EncodingClash(ValueError):
    """A reserved encoding IRI already occurs in the web being encoded."""


@dataclass(frozen=True)
class LinkPattern:
    s: Slot
    p: Slot
    o: Slot

    def __post_init__(self):
        for i, x in enumerate((self.s, self.p, self.o)):
            if isinstance(x, str) and x not in (WILD, PLUS):
                raise ValueError(f"bad link pattern slot {x!r}")
            if isinstance(x, Literal) and i != 2:
                raise ValueError("literals may only appear in the object slot")

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def __str__(self) -> str:
        return "<" + ",".join(x if isinstance(x, str) else x.n3() for x in self) + ">"


# AST ------------------------------------------------------------------------

@dataclass(frozen=True)
class Eps:
    def __str__(self):
        return "eps"


@dataclass(frozen=True)
class Pat:
    lp: LinkPattern

    def __str__(self):
        return str(self.lp)


@dataclass(frozen=True)
class Seq:
    left: object
    right: object

    def __str__(self):
        return f"({self.left}/{self.right})"


@dataclass(frozen=True)
class Alt:
    left: object
    right: object

    def __str__(self):
        return f"({self.left}|{self.right})"


@dataclass(frozen=True)
class Star:
    arg: object

    def __str__(self):
        return f"{self.arg}*"


@dataclass(frozen=True)
class Test:
    arg: object

    def __str__(self):
        return f"[{self.arg}]"


Lpe = Union[Eps, Pat, Seq, Alt, Star, Test]
EPS = Eps()


def lp(s, p, o) -> Pat:
    """Shorthand: ``lp("+", IRI(...), "_")``; plain strings other than ``_``/``+`` become IRIs."""
    def slot(x):
        if isinstance(x, str) and x not in (WILD, PLUS):
            return IRI(x)
        return x
    return Pat(LinkPattern(slot(s), slot(p), slot(o)))


def size(e) -> int:
    """Number of AST nodes."""
    if isinstance(e, (Eps, Pat)):
        return 1
    if isinstance(e, (Star, Test)):
        return 1 + size(e.arg)
    return 1 + size(e.left) + size(e.right)


# evaluation -------------------------------------------------------------------

def match_link_pattern(pattern: LinkPattern, t: Triple, ctx: IRI) -> set:
    """IRIs produced by matching ``pattern`` against ``t`` in context ``ctx``."""
    for slot, x in zip(pattern, t):
        if slot == WILD:
            continue
        if slot == PLUS:
            if x != ctx:
                return set()
        elif slot != x:
            return set()
    return {x for slot, x in zip(pattern, t) if slot == WILD and isinstance(x, IRI)}


class _Evaluator:
    def __init__(self, w: Wold):
        self.w = w
        self.memo: dict = {}

    def pattern(self, pattern: LinkPattern, u: IRI) -> frozenset:
        d = self.w.adoc(u)
        if d is None:
            return frozenset()
        out = set()
        for t in self.w.data(d):
            out |= match_link_pattern(pattern, t, u)
        return frozenset(out)

    def eval(self, e, u: IRI) -> frozenset:
        key = (e, u)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if isinstance(e, Eps):
            res = frozenset({u})
        elif isinstance(e, Pat):
            res = self.pattern(e.lp, u)
        elif isinstance(e, Seq):
            res = frozenset().union(*(self.eval(e.right, v) for v in self.eval(e.left, u)))
        elif isinstance(e, Alt):
            res = self.eval(e.left, u) | self.eval(e.right, u)
        elif isinstance(e, Star):
            seen = {u}
            work = [u]
            while work:
                v = work.pop()
                for x in self.eval(e.arg, v):
                    if x not in seen:
                        seen.add(x)
                        work.append(x)
            res = frozenset(seen)
        elif isinstance(e, Test):
            res = frozenset({u}) if self.eval(e.arg, u) else frozenset()
        else:
            raise TypeError(f"not a link path expression: {e!r}")
        self.memo[key] = res
        return res


def eval_lpe(e, w: Wold, u: IRI) -> frozenset:
    """Value of ``e`` over ``w`` at ``u``: a set of IRIs."""
    return _Evaluator(w).eval(e, IRI(u) if isinstance(u, str) else u)


@dataclass(frozen=True)
class LdqlQuery:
    lpe: object
    query: SelectQuery


def lpe_subweb(e, w: Wold, seeds: Iterable) -> Subweb:
    """Union of ``simpl(adoc(v))`` for every ``v`` the expression reaches from a seed."""
    ev = _Evaluator(w)
    docs = set()
    for s in seeds:
        for v in ev.eval(e, IRI(s) if isinstance(s, str) else s):
            d = w.adoc(v)
            if d is not None:
                docs.add(d)
    return Subweb.restrict(w, {d: w.data(d) for d in docs})


def eval_ldql_query(q: LdqlQuery, w: Wold, seeds: Iterable) -> ResultTable:
    return eval_select(q.query, lpe_subweb(q.lpe, w, seeds))


class AllPStarSelector(SourceSelector):
    """Selects everything reachable from ``u`` along ``p`` links (``u`` included)."""

    def __init__(self, p: IRI, u: IRI):
        self.p = p
        self.u = u
        self.expr = Star(Pat(LinkPattern(PLUS, p, WILD)))
        self.label = f"all[{p.value}*,{u.value}]"

    def __call__(self, w: Wold) -> frozenset:
        return eval_lpe(self.expr, w, self.u)


def all_pstar_selector(p, u) -> AllPStarSelector:
    return AllPStarSelector(IRI(p) if isinstance(p, str) else p, IRI(u) if isinstance(u, str) else u)


# encodings ----------------------------------------------------------------------

A = IRI(ENC_NS + "a")
B = IRI(ENC_NS + "b")


class Encoding:
    """Maps selectors of one class to meta triples and fixes the meta expression."""

    name = "encoding"
    alphabet: frozenset = frozenset()
    meta: object = None

    def encode(self, selector: SourceSelector) -> frozenset:
        raise NotImplementedError


class ConstEncoding(Encoding):
    """Constant selectors: one ``(a, a, u)`` triple per selected IRI; meta ``<a,a,_>*``."""

    name = "const"
    alphabet = frozenset({A})
    meta = Star(Pat(LinkPattern(A, A, WILD)))

    def encode(self, selector):
        if not isinstance(selector, ConstantSelector):
            raise UnsupportedSpecShape(f"{selector!r} is not a constant selector")
        return frozenset(Triple(A, A, u) for u in selector.iris)


class PStarEncoding(Encoding):
    """Closure selectors over one fixed predicate ``p``.

    ``all[p*, u]`` becomes ``(a, a, u)``; the meta expression is
    ``(<a,a,_> / <+,p,_>*)*``.
    """

    name = "pstar"
    alphabet = frozenset({A})

    def __init__(self, p):
        self.p = IRI(p) if isinstance(p, str) else p
        self.meta = Star(Seq(Pat(LinkPattern(A, A, WILD)), Star(Pat(LinkPattern(PLUS, self.p, WILD)))))

    def encode(self, selector):
        if not isinstance(selector, AllPStarSelector) or selector.p != self.p:
            raise UnsupportedSpecShape(f"{selector!r} is not an all[{self.p.value}*, u] selector")
        return frozenset({Triple(A, A, selector.u)})


class AllEncoding(Encoding):
    """Closure selectors over any predicate, as a pair of meta triples.

    ``all[p*, u]`` becomes ``(a, a, u)`` and ``(a, b, p)``. No fixed meta
    expression is attached; refutation searches look for one.
    """

    name = "all"
    alphabet = frozenset({A, B})

    def __init__(self, meta=None):
        self.meta = meta

    def encode(self, selector):
        if not isinstance(selector, AllPStarSelector):
            raise UnsupportedSpecShape(f"{selector!r} is not an all[p*, u] selector")
        return frozenset({Triple(A, A, selector.u), Triple(A, B, selector.p)})


class LossyAllEncoding(AllEncoding):
    """``all[p*, u]`` becomes only ``(a, a, u)``: the closure encoding with ``p`` forgotten."""

    name = "all-lossy"
    alphabet = frozenset({A})

    def encode(self, selector):
        if not isinstance(selector, AllPStarSelector):
            raise UnsupportedSpecShape(f"{selector!r} is not an all[p*, u] selector")
        return frozenset({Triple(A, A, selector.u)})


def _mentioned_iris(w: Wold) -> set:
    out = set(w.adoc_map)
    for g in w.data_map.values():
        for t in g:
            out.update(x for x in t if isinstance(x, IRI))
            out.update(IRI(x.datatype) for x in t if isinstance(x, Literal) and x.datatype)
    return out


def encode_cawold(cw: SpecAnnotatedWold, enc: Encoding) -> Wold:
    """Plain web whose documents additionally carry their encoded specifications.

    Raises:
        UnsupportedSpecShape: a tuple is not ``(selector, True, identity)`` or
            its selector lies outside the encoding's class.
        EncodingClash: an encoding IRI already occurs in the web.
    """
    w = cw.wold
    clash = _mentioned_iris(w) & set(enc.alphabet)
    if clash:
        raise EncodingClash(f"reserved IRIs already used: {sorted(i.value for i in clash)}")
    data = {}
    for d in w.docs:
        extra = set()
        for tup in cw.spec(d):
            if not tup.with_subwebs or not tup.filter.is_identity:
                raise UnsupportedSpecShape("encodings need tuples of the form (selector, true, identity)")
            extra |= enc.encode(tup.selector)
        data[d] = w.data(d) | extra
    return Wold(w.docs, data, w.adoc_map, w.prefixes)


@dataclass
class CaptureResult:
    ok: bool
    extra: frozenset = frozenset()
    missing: frozenset = frozenset()
    data_mismatch: frozenset = frozenset()

    def __bool__(self):
        return self.ok

    def witness(self) -> dict:
        return {"extra": sorted(d.id for d in self.extra),
                "missing": sorted(d.id for d in self.missing),
                "data_mismatch": sorted(d.id for d in self.data_mismatch)}


def compare_subwebs(got: Subweb, want: Subweb) -> CaptureResult:
    extra = frozenset(got.docs - want.docs)
    missing = frozenset(want.docs - got.docs)
    mismatch = frozenset(d for d in got.docs & want.docs if got.data(d) != want.data(d))
    return CaptureResult(not (extra or missing or mismatch), extra, missing, mismatch)


def check_capture(enc: Encoding, e_meta, cw: SpecAnnotatedWold, u, encoded: Optional[Wold] = None,
                  expected: Optional[Subweb] = None) -> CaptureResult:
    """Does ``e_meta`` over the encoded web reproduce the subweb of interest at ``u``?

    The documents reached by ``e_meta`` are taken from the original web,
    without the meta triples, and compared with ``soi(adoc(u))``.
    """
    u = IRI(u) if isinstance(u, str) else u
    w = cw.wold
    d = w.adoc(u)
    if d is None:
        raise ValueError(f"{u.value} does not dereference in this web")
    encoded = encoded if encoded is not None else encode_cawold(cw, enc)
    reached = {x for x in (encoded.adoc(v) for v in eval_lpe(e_meta, encoded, u)) if x is not None}
    got = Subweb.restrict(w, {x: w.data(x) for x in reached})
    want = expected if expected is not None else soi(d, cw)
    return compare_subwebs(got, want)


# the counterexample web ----------------------------------------------------------

CX = "https://cx.ex/"
U1, U2, U3 = IRI(CX + "u1"), IRI(CX + "u2"), IRI(CX + "u3")
P, Q = IRI(CX + "p"), IRI(CX + "q")


def counterexample_wold(predicate: IRI = P) -> SpecAnnotatedWold:
    """Three documents; ``d1`` links to ``u2`` by ``p`` and to ``u3`` by ``q``.

    ``d1`` asks for the closure along ``predicate`` from ``u1``; ``d2`` and
    ``d3`` are empty and unannotated. With the default predicate the subweb
    of interest of ``d1`` is ``{d1, d2}``.
    """
    w = Wold.hosted({U1.value: {Triple(U1, P, U2), Triple(U1, Q, U3)},
                     U2.value: set(), U3.value: set()})
    d1 = w.adoc(U1)
    spec = (SpecTuple(all_pstar_selector(predicate, U1), True, IDENTITY, "d1"),)
    return SpecAnnotatedWold(w, {d: (spec if d == d1 else ()) for d in w.docs})


# enumeration ----------------------------------------------------------------------

def enumerate_lpes(atoms: Iterable, max_nodes: int, cap: int = 8) -> Iterator:
    """Every expression with at most ``max_nodes`` AST nodes over ``atoms``.

    ``atoms`` are link patterns (or ready-made ``Pat`` leaves). Expressions are
    produced in order of size and each AST appears once.
    """
    if max_nodes > cap:
        raise ValueError(f"max_nodes {max_nodes} exceeds the cap {cap}")
    leaves = [EPS] + [a if isinstance(a, Pat) else Pat(a) for a in dict.fromkeys(atoms)]
    by_size: dict = {1: leaves}
    yield from leaves
    for n in range(2, max_nodes + 1):
        level = []
        for e in by_size[n - 1]:
            level.append(Star(e))
            level.append(Test(e))
        for k in range(1, n - 1):
            for l, r in itertools.product(by_size[k], by_size[n - 1 - k]):
                level.append(Seq(l, r))
                level.append(Alt(l, r))
        by_size[n] = level
        yield from level


def count_lpes(n_atoms: int, max_nodes: int) -> int:
    """Number of expressions :func:`enumerate_lpes` yields, by the size recurrence."""
    counts = {1: n_atoms + 1}
    for n in range(2, max_nodes + 1):
        counts[n] = 2 * counts[n - 1] + 2 * sum(counts[k] * counts[n - 1 - k] for k in range(1, n - 1))
    return sum(counts[n] for n in range(1, max_nodes + 1))


# bounded refutation ----------------------------------------------------------------

def link_pattern_atoms(slot_values: Iterable) -> list:
    """All link patterns whose slots come from ``slot_values`` (``_`` and ``+`` included)."""
    values = [WILD, PLUS] + sorted(set(slot_values) - {WILD, PLUS}, key=str)
    return [LinkPattern(s, p, o) for s, p, o in itertools.product(values, repeat=3)]


@dataclass
class RefutationReport:
    atoms: int
    distinct_atoms: int
    expressions: int
    max_nodes: int
    capturing: list

    @property
    def refuted(self) -> bool:
        return not self.capturing


class _Case:
    """One annotated web of the class, prepared for matrix evaluation."""

    def __init__(self, cw: SpecAnnotatedWold, enc: Encoding, points: Iterable):
        import numpy as np

        self.cw = cw
        self.encoded = encode_cawold(cw, enc)
        self.points = [IRI(p) if isinstance(p, str) else p for p in points]
        universe = set(self.points)
        for g in self.encoded.data_map.values():
            universe.update(x for t in g for x in t if isinstance(x, IRI))
        self.universe = sorted(universe, key=lambda i: i.value)
        self.index = {u: i for i, u in enumerate(self.universe)}
        n = len(self.universe)
        self.doc_of = [self.encoded.adoc(u) for u in self.universe]
        self.want = []
        for p in self.points:
            want = soi(cw.wold.adoc(p), cw)
            for d in want.docs:
                if want.data(d) != cw.wold.data(d):
                    raise UnsupportedSpecShape("refutation needs unfiltered subwebs of interest")
            self.want.append(frozenset(want.docs))
        self.np = np
        self.eye = np.eye(n, dtype=bool)

    def atom(self, pattern: LinkPattern):
        m = self.np.zeros((len(self.universe),) * 2, dtype=bool)
        for i, u in enumerate(self.universe):
            d = self.encoded.adoc(u)
            if d is None:
                continue
            for t in self.encoded.data(d):
                for v in match_link_pattern(pattern, t, u):
                    m[i, self.index[v]] = True
        return m

    def captures(self, m) -> bool:
        for p, want in zip(self.points, self.want):
            row = m[self.index[p]]
            got = {self.doc_of[j] for j in row.nonzero()[0]} - {None}
            if got != want:
                return False
        return True


def _closure(np, eye, m):
    r = eye | m
    while True:
        nxt = r | ((r.astype(np.uint8) @ r.astype(np.uint8)) > 0)
        if (nxt == r).all():
            return r
        r = nxt


def refute_capture(enc: Encoding, webs: Iterable[SpecAnnotatedWold], points: Iterable,
                   atoms: Iterable[LinkPattern], max_nodes: int = 6) -> RefutationReport:
    """Search every expression up to ``max_nodes`` nodes for one capturing all ``webs``.

    Each expression is evaluated compositionally as a boolean relation over
    the IRIs of the encoded webs. Atoms that denote the same relation on every
    web are interchangeable in any expression, so only one representative of
    each is kept; this does not change which relations are reachable.

    Returns:
        a report listing the capturing expressions found (ideally none).
    """
    cases = [_Case(cw, enc, points) for cw in webs]
    np = cases[0].np
    atoms = list(dict.fromkeys(atoms))
    reps: dict = {}
    for a in atoms:
        value = tuple(c.atom(a) for c in cases)
        key = b"".join(v.tobytes() for v in value)
        reps.setdefault(key, (Pat(a), value))
    leaves = [(EPS, tuple(c.eye.copy() for c in cases))] + list(reps.values())

    def seq(x, y):
        return tuple((a.astype(np.uint8) @ b.astype(np.uint8)) > 0 for a, b in zip(x, y))

    def alt(x, y):
        return tuple(a | b for a, b in zip(x, y))

    def star(x):
        return tuple(_closure(np, c.eye, a) for c, a in zip(cases, x))

    def test(x):
        return tuple(c.eye & a.any(axis=1)[:, None] for c, a in zip(cases, x))

    by_size = {1: leaves}
    capturing = []
    count = 0

    def check(level):
        nonlocal count
        for e, value in level:
            count += 1
            if all(c.captures(v) for c, v in zip(cases, value)):
                capturing.append(e)

    check(leaves)
    for n in range(2, max_nodes + 1):
        level = []
        for e, v in by_size[n - 1]:
            level.append((Star(e), star(v)))
            level.append((Test(e), test(v)))
        for k in range(1, n - 1):
            for (l, lv), (r, rv) in itertools.product(by_size[k], by_size[n - 1 - k]):
                level.append((Seq(l, r), seq(lv, rv)))
                level.append((Alt(l, r), alt(lv, rv)))
        by_size[n] = level
        check(level)
    return RefutationReport(len(atoms), len(reps), count, max_nodes, capturing)


# random annotated webs -------------------------------------------------------------

RANDOM_NS = "https://r.ex/"


def random_cawold(rng, shape: str, max_docs: int = 8, p: IRI = P,
                  max_triples: int = 12) -> SpecAnnotatedWold:
    """A random annotated web whose specifications all belong to one class.

    Args:
        rng: a ``random.Random``.
        shape: ``"const"`` for constant selectors or ``"pstar"`` for
            ``all[p*, u]`` selectors over the fixed predicate ``p``.
        max_docs: upper bound on the number of documents (at least one).
        p: the closure predicate for ``"pstar"``.
        max_triples: upper bound on the triples of the whole web.

    Documents link to each other and to fragment IRIs using ``p`` and two
    other predicates; some IRIs do not dereference.
    """
    if shape not in ("const", "pstar"):
        raise ValueError(f"unknown selector class {shape!r}")
    n = rng.randint(1, max_docs)
    docs = [IRI(f"{RANDOM_NS}d{i}") for i in range(n)]
    names = docs + [IRI(f"{d.value}#x") for d in docs] + [IRI(RANDOM_NS + "gone")]
    preds = [p, IRI(RANDOM_NS + "q"), IRI(RANDOM_NS + "r")]
    graphs = {}
    budget = max_triples
    for d in rng.sample(docs, n):
        subjects = [d, IRI(d.value + "#x")]
        graphs[d.value] = {Triple(rng.choice(subjects + names), rng.choice(preds), rng.choice(names))
                           for _ in range(min(budget, rng.randint(0, 5)))}
        budget -= len(graphs[d.value])
    graphs = {d.value: graphs[d.value] for d in docs}
    w = Wold.hosted(graphs)
    specs = {}
    for d in w.docs:
        tuples = []
        for _ in range(rng.choice((0, 0, 1, 1, 2))):
            if shape == "const":
                sel = ConstantSelector(rng.sample(names, rng.randint(0, 3)))
            else:
                sel = all_pstar_selector(p, rng.choice(names))
            tuples.append(SpecTuple(sel, True, IDENTITY, sel.label))
        specs[d] = tuple(tuples)
    return SpecAnnotatedWold(w, specs)
