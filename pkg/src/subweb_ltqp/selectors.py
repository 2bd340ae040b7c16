"""Source selectors and filters, the two halves of a specification tuple.

A source selector maps a web to a set of IRIs. A filter maps a triple set and
a context IRI to a subset of that triple set; it is bound to a web first so
that filters whose behaviour depends on how the IRI was selected (SWSL
filters) can look that up once.
"""
from __future__ import annotations

from typing import Callable, Iterable

from .terms import IRI
from .wold import Wold

BoundFilter = Callable[[frozenset, IRI], frozenset]


class SourceSelector:
    """Base class: ``selector(w)`` returns a frozenset of IRIs."""

    label = "selector"

    def __call__(self, w: Wold) -> frozenset:
        raise NotImplementedError


class ConstantSelector(SourceSelector):
    """Selects the same IRIs on every web."""

    def __init__(self, iris: Iterable):
        self.iris = frozenset(IRI(x) if isinstance(x, str) else x for x in iris)
        self.label = "const{" + ",".join(sorted(i.value for i in self.iris)) + "}"

    def __call__(self, w: Wold) -> frozenset:
        return self.iris

    def __eq__(self, other):
        return isinstance(other, ConstantSelector) and other.iris == self.iris

    def __hash__(self):
        return hash(("const", self.iris))

    def __repr__(self):
        return f"ConstantSelector({sorted(i.value for i in self.iris)})"


class FunctionSelector(SourceSelector):
    def __init__(self, fn: Callable[[Wold], Iterable[IRI]], label: str = "fn"):
        self.fn = fn
        self.label = label

    def __call__(self, w: Wold) -> frozenset:
        return frozenset(self.fn(w))


class Filter:
    """Base class for filters.

    ``distributive`` promises ``f(S1 | S2, u) == f(S1, u) | f(S2, u)``, which
    lets the fixpoint engine feed it only newly derived triples.
    """

    distributive = False
    is_identity = False
    label = "filter"

    def bind(self, w: Wold) -> BoundFilter:
        raise NotImplementedError


class IdentityFilter(Filter):
    distributive = True
    is_identity = True
    label = "id"

    def bind(self, w: Wold) -> BoundFilter:
        return lambda s, u: frozenset(s)

    def __eq__(self, other):
        return isinstance(other, IdentityFilter)

    def __hash__(self):
        return hash("identity-filter")

    def __repr__(self):
        return "IdentityFilter()"


IDENTITY = IdentityFilter()


class FunctionFilter(Filter):
    """Wrap a plain ``fn(S, u) -> triples``; the result is clipped to ``S``."""

    def __init__(self, fn: Callable[[frozenset, IRI], Iterable], distributive: bool = False,
                 label: str = "fn"):
        self.fn = fn
        self.distributive = distributive
        self.label = label

    def bind(self, w: Wold) -> BoundFilter:
        fn = self.fn
        return lambda s, u: frozenset(fn(s, u)) & frozenset(s)
