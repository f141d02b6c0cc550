"""
Core data model: terms, sorts, contexts, rules and languages.

Everything here is immutable and safe to share between threads. Constructor
applications always carry their FULL argument list, one argument per entry of
the constructor's rule context, in context order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import ClassVar, Iterator, Mapping, Union

from services.errors import DuplicateName

logger = logging.getLogger(__name__)


# --- Terms and sorts ---

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=False)
class Con:
    head: str
    args: tuple = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, 'args', tuple(self.args))
        object.__setattr__(self, '_hash', hash(('con', self.head, self.args)))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Con):
            return NotImplemented
        return self._hash == other._hash and self.head == other.head and self.args == other.args

    def __str__(self):
        if not self.args:
            return self.head
        return f"({self.head} {' '.join(str(a) for a in self.args)})"


@dataclass(frozen=True, eq=False)
class Sort:
    head: str
    args: tuple = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, 'args', tuple(self.args))
        object.__setattr__(self, '_hash', hash(('sort', self.head, self.args)))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Sort):
            return NotImplemented
        return self._hash == other._hash and self.head == other.head and self.args == other.args

    def __str__(self):
        if not self.args:
            return self.head
        return f"({self.head} {' '.join(str(a) for a in self.args)})"


Term = Union[Var, Con]
Ctx = tuple  # tuple[tuple[str, Sort], ...], oldest entry first
MetaSubst = Mapping[str, Term]


# --- Rules ---

@dataclass(frozen=True)
class SortRule:
    ctx: Ctx = ()
    explicit_args: tuple = ()
    kind: ClassVar[str] = 'sort'


@dataclass(frozen=True)
class TermRule:
    ctx: Ctx
    explicit_args: tuple
    sort: Sort
    kind: ClassVar[str] = 'term'


@dataclass(frozen=True)
class SortEqRule:
    ctx: Ctx
    lhs: Sort
    rhs: Sort
    kind: ClassVar[str] = 'sort_eq'


@dataclass(frozen=True)
class TermEqRule:
    ctx: Ctx
    lhs: Term
    rhs: Term
    sort: Sort
    kind: ClassVar[str] = 'term_eq'


Rule = Union[SortRule, TermRule, SortEqRule, TermEqRule]


@dataclass(frozen=True, eq=False)
class Lang:
    """An ordered, name-keyed rule list, oldest rule first."""

    rules: tuple = ()

    def __post_init__(self):
        if not isinstance(self.rules, tuple):
            object.__setattr__(self, 'rules', tuple(self.rules))
        index = {}
        for position, (name, _rule) in enumerate(self.rules):
            if name in index:
                raise DuplicateName(name)
            index[name] = position
        object.__setattr__(self, '_index', index)
        object.__setattr__(self, '_hash', hash(self.rules))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Lang):
            return NotImplemented
        return self._hash == other._hash and self.rules == other.rules

    def __len__(self):
        return len(self.rules)

    def __iter__(self) -> Iterator[tuple[str, Rule]]:
        return iter(self.rules)

    def __contains__(self, name):
        return name in self._index

    def __getitem__(self, name) -> Rule:
        return self.rules[self._index[name]][1]

    def get(self, name, default=None):
        position = self._index.get(name)
        if position is None:
            return default
        return self.rules[position][1]

    def names(self) -> tuple:
        return tuple(name for name, _ in self.rules)

    def position(self, name) -> int:
        return self._index[name]

    def prefix(self, name) -> Lang:
        """The rules strictly before `name`."""
        return Lang(self.rules[:self._index[name]])

    def term_eqs(self) -> list[tuple[str, TermEqRule]]:
        return [(n, r) for n, r in self.rules if isinstance(r, TermEqRule)]

    def sort_eqs(self) -> list[tuple[str, SortEqRule]]:
        return [(n, r) for n, r in self.rules if isinstance(r, SortEqRule)]


EMPTY_LANG = Lang(())


# --- Context helpers ---

def ctx_names(ctx: Ctx) -> tuple:
    return tuple(name for name, _ in ctx)


def ctx_lookup(ctx: Ctx, name: str) -> Sort | None:
    for entry, sort in ctx:
        if entry == name:
            return sort
    return None


def format_ctx(ctx: Ctx) -> str:
    return ' '.join(f"({name} {sort})" for name, sort in ctx)


# --- Operations ---

def apply_subst(gamma: MetaSubst, x):
    """Substitute metavariables in a term, sort or context. Unmapped Vars stay put."""
    if not gamma:
        return x
    if isinstance(x, Var):
        return gamma.get(x.name, x)
    if isinstance(x, Con):
        new_args = tuple(apply_subst(gamma, a) for a in x.args)
        if all(n is o for n, o in zip(new_args, x.args)):
            return x
        return Con(x.head, new_args)
    if isinstance(x, Sort):
        new_args = tuple(apply_subst(gamma, a) for a in x.args)
        if all(n is o for n, o in zip(new_args, x.args)):
            return x
        return Sort(x.head, new_args)
    if isinstance(x, tuple):
        return tuple((name, apply_subst(gamma, sort)) for name, sort in x)
    raise TypeError(f"cannot substitute into {type(x).__name__}")


def compose_subst(outer: MetaSubst, inner: MetaSubst) -> dict:
    """The substitution x -> outer(inner(x))."""
    composed = {name: apply_subst(outer, term) for name, term in inner.items()}
    for name, term in outer.items():
        composed.setdefault(name, term)
    return composed


def structural_eq(a, b) -> bool:
    return a == b


def free_vars(x) -> set:
    found = set()
    _collect_vars(x, found)
    return found


def _collect_vars(x, found):
    if isinstance(x, Var):
        found.add(x.name)
    elif isinstance(x, (Con, Sort)):
        for a in x.args:
            _collect_vars(a, found)
    elif isinstance(x, tuple):
        for _name, sort in x:
            _collect_vars(sort, found)


def var_occurrences(x, counts: dict | None = None) -> dict:
    """Occurrence count of each metavariable."""
    counts = {} if counts is None else counts
    if isinstance(x, Var):
        counts[x.name] = counts.get(x.name, 0) + 1
    elif isinstance(x, (Con, Sort)):
        for a in x.args:
            var_occurrences(a, counts)
    return counts


def heads(x) -> set:
    """Constructor and sort names mentioned anywhere in x (term, sort, ctx or rule)."""
    found = set()
    _collect_heads(x, found)
    return found


def _collect_heads(x, found):
    if isinstance(x, (Con, Sort)):
        found.add(x.head)
        for a in x.args:
            _collect_heads(a, found)
    elif isinstance(x, tuple):
        for _name, sort in x:
            _collect_heads(sort, found)
    elif isinstance(x, (SortRule, TermRule, SortEqRule, TermEqRule)):
        _collect_heads(x.ctx, found)
        for attr in ('sort', 'lhs', 'rhs'):
            part = getattr(x, attr, None)
            if part is not None:
                _collect_heads(part, found)


def term_size(x) -> int:
    if isinstance(x, (Con, Sort)):
        return 1 + sum(term_size(a) for a in x.args)
    return 1


def lang_append(base: Lang, ext: Lang) -> Lang:
    return Lang(base.rules + ext.rules)


def lang_subset(a: Lang, b: Lang) -> bool:
    """Unordered inclusion: every (name, rule) of a occurs in b."""
    for name, rule in a:
        if b.get(name) != rule:
            return False
    return True
