"""
Type checking and elaboration for GAT languages.

The checker works on fully explicit terms and reports problems through a
WfReport. The elaborator turns surface s-expressions (implicit arguments
omitted) into fully explicit terms by first-order unification, then re-checks
the result.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

from services.errors import (
    GatError, UnknownHead, ArityMismatch, SortMismatch, UnsolvedImplicit,
)
from services.kernel import (
    Var, Con, Sort, Lang, Ctx, SortRule, TermRule, SortEqRule, TermEqRule,
    apply_subst, ctx_names, ctx_lookup, free_vars,
)
from services import settings

logger = logging.getLogger(__name__)

HOLE_PREFIX = '?'


@dataclass
class WfReport:
    diagnostics: list = field(default_factory=list)    # [(location, message)]
    conversions: list = field(default_factory=list)    # [(location, SortEqProof)]

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def error(self, location, message):
        self.diagnostics.append((location, str(message)))

    def extend(self, other: WfReport):
        self.diagnostics.extend(other.diagnostics)
        self.conversions.extend(other.conversions)
        return self


# --- Checker ---

SORT_CACHE_SIZE = 4096


class Checker:
    """Checks explicit terms against one language. Safe to share between threads."""

    def __init__(self, lang: Lang):
        self.lang = lang
        self._sorts = {}

    def _conversion_config(self):
        from services.rewrite import RewriteConfig
        return RewriteConfig(fuel=settings.get_conversion_fuel(), verify=False)

    def convertible(self, ctx: Ctx, got: Sort, expected: Sort):
        """A sort equality proof between got and expected, or None."""
        from services.rewrite import normalize_sort
        from services.proofkit import Sym, Trans
        from services.errors import FuelExhausted
        cfg = self._conversion_config()
        try:
            left = normalize_sort(self.lang, ctx, got, cfg)
            right = normalize_sort(self.lang, ctx, expected, cfg)
        except FuelExhausted:
            return None
        if left.normal_form != right.normal_form:
            return None
        return Trans(left.certificate, Sym(right.certificate))

    def infer(self, ctx: Ctx, t, conversions: list, location: str):
        if isinstance(t, Var):
            sort = ctx_lookup(ctx, t.name)
            if sort is None:
                raise GatError(f"unbound metavariable '{t.name}'", location)
            return sort
        if not isinstance(t, Con):
            raise GatError(f"expected a term, got {type(t).__name__}", location)
        key = (ctx, t)
        cached = self._sorts.get(key)
        if cached is not None:
            return cached
        rule = self.lang.get(t.head)
        if not isinstance(rule, TermRule):
            raise UnknownHead(t.head, location)
        if len(t.args) != len(rule.ctx):
            raise ArityMismatch(t.head, len(rule.ctx), len(t.args), location)
        before = len(conversions)
        gamma = {}
        for (name, declared), arg in zip(rule.ctx, t.args):
            self.check(ctx, arg, apply_subst(gamma, declared), conversions, f"{location}/{t.head}.{name}")
            gamma[name] = arg
        sort = apply_subst(gamma, rule.sort)
        if len(conversions) == before:
            if len(self._sorts) >= SORT_CACHE_SIZE:
                self._sorts.clear()
            self._sorts[key] = sort
        return sort

    def check(self, ctx: Ctx, t, expected: Sort, conversions: list, location: str):
        got = self.infer(ctx, t, conversions, location)
        if got == expected:
            return
        proof = self.convertible(ctx, got, expected)
        if proof is None:
            raise SortMismatch(expected, got, location)
        conversions.append((location, proof))

    def check_sort(self, ctx: Ctx, s, conversions: list, location: str):
        if not isinstance(s, Sort):
            raise GatError(f"expected a sort, got {s}", location)
        rule = self.lang.get(s.head)
        if not isinstance(rule, SortRule):
            raise UnknownHead(s.head, location)
        if len(s.args) != len(rule.ctx):
            raise ArityMismatch(s.head, len(rule.ctx), len(s.args), location)
        gamma = {}
        for (name, declared), arg in zip(rule.ctx, s.args):
            self.check(ctx, arg, apply_subst(gamma, declared), conversions, f"{location}/{s.head}.{name}")
            gamma[name] = arg

    def check_ctx(self, ctx: Ctx, conversions: list, location: str):
        seen = set()
        for position, (name, sort) in enumerate(ctx):
            if name in seen:
                raise GatError(f"duplicate context name '{name}'", location)
            seen.add(name)
            self.check_sort(ctx[:position], sort, conversions, f"{location}.{name}")


@lru_cache(maxsize=128)
def checker_for(lang: Lang) -> Checker:
    return Checker(lang)


def _run(report: WfReport, location: str, fn, *args):
    try:
        fn(*args, report.conversions, location)
    except GatError as e:
        report.error(e.location or location, e.message)
    return report


def check_term(lang: Lang, ctx: Ctx, t, s: Sort, location: str = 'term') -> WfReport:
    return _run(WfReport(), location, checker_for(lang).check, ctx, t, s)


def wf_sort(lang: Lang, ctx: Ctx, s: Sort, location: str = 'sort') -> WfReport:
    return _run(WfReport(), location, checker_for(lang).check_sort, ctx, s)


def wf_ctx(lang: Lang, ctx: Ctx, location: str = 'ctx') -> WfReport:
    return _run(WfReport(), location, checker_for(lang).check_ctx, ctx)


def infer_sort(lang: Lang, ctx: Ctx, t) -> Sort:
    """The sort of t, raising on ill-typed terms."""
    return checker_for(lang).infer(ctx, t, [], 'term')


def wf_rule(prefix: Lang, name: str, rule) -> WfReport:
    report = WfReport()
    checker = checker_for(prefix)
    for reserved in reserved_names(rule.ctx):
        report.error(f"{name}.ctx", f"names starting with '{HOLE_PREFIX}' are reserved: {reserved}")
    _run(report, f"{name}.ctx", checker.check_ctx, rule.ctx)
    if not report.ok:
        return report
    names = ctx_names(rule.ctx)
    if isinstance(rule, (SortRule, TermRule)):
        positions = [names.index(a) if a in names else -1 for a in rule.explicit_args]
        if -1 in positions or positions != sorted(set(positions)):
            report.error(name, "explicit arguments must be context names in context order")
    if isinstance(rule, TermRule):
        _run(report, f"{name}.sort", checker.check_sort, rule.ctx, rule.sort)
    elif isinstance(rule, SortEqRule):
        _run(report, f"{name}.lhs", checker.check_sort, rule.ctx, rule.lhs)
        _run(report, f"{name}.rhs", checker.check_sort, rule.ctx, rule.rhs)
    elif isinstance(rule, TermEqRule):
        _run(report, f"{name}.sort", checker.check_sort, rule.ctx, rule.sort)
        if report.ok:
            _run(report, f"{name}.lhs", checker.check, rule.ctx, rule.lhs, rule.sort)
            _run(report, f"{name}.rhs", checker.check, rule.ctx, rule.rhs, rule.sort)
    return report


def wf_lang(lang: Lang, base: Lang | None = None) -> WfReport:
    """Check every rule of lang under its strict prefix (preceded by base, if given)."""
    report = WfReport()
    prior = base.rules if base is not None else ()
    for position, (name, rule) in enumerate(lang.rules):
        report.extend(wf_rule(Lang(prior + lang.rules[:position]), name, rule))
    if report.ok:
        logger.debug(f"Language of {len(lang)} rules is well-formed")
    return report


def erase(lang: Lang, t):
    """Drop implicit arguments: the surface form elaborate() accepts back."""
    from services.sexpr import SList
    if isinstance(t, Var):
        return t.name
    rule = lang.get(t.head)
    if rule is None or not isinstance(rule, (TermRule, SortRule)):
        raise UnknownHead(t.head)
    names = ctx_names(rule.ctx)
    explicit = [erase(lang, t.args[names.index(a)]) for a in rule.explicit_args]
    if not explicit:
        return t.head
    return SList([t.head] + explicit)


# --- Elaboration ---

def reserved_names(ctx: Ctx) -> list:
    return [name for name in ctx_names(ctx) if name.startswith(HOLE_PREFIX)]


def is_hole(x) -> bool:
    return isinstance(x, Var) and x.name.startswith(HOLE_PREFIX)


class _Elaboration:
    def __init__(self, lang: Lang, ctx: Ctx, location: str):
        self.lang = lang
        self.ctx = ctx
        self.names = set(ctx_names(ctx))
        self.location = location
        self.solutions = {}
        self.origins = {}
        self.deferred = []

    def fresh(self, origin: str) -> Var:
        hole = Var(f"{HOLE_PREFIX}{len(self.origins)}")
        self.origins[hole.name] = origin
        return hole

    def zonk(self, x):
        if isinstance(x, Var):
            if x.name in self.solutions:
                solved = self.zonk(self.solutions[x.name])
                self.solutions[x.name] = solved
                return solved
            return x
        if isinstance(x, (Con, Sort)):
            args = tuple(self.zonk(a) for a in x.args)
            return type(x)(x.head, args)
        return x

    def _occurs(self, name, t) -> bool:
        return name in free_vars(t)

    def _unify(self, a, b) -> bool:
        a, b = self.zonk(a), self.zonk(b)
        if a == b:
            return True
        if is_hole(a):
            if self._occurs(a.name, b):
                return False
            self.solutions[a.name] = b
            return True
        if is_hole(b):
            return self._unify(b, a)
        if type(a) is not type(b) or isinstance(a, Var):
            return False
        if a.head != b.head or len(a.args) != len(b.args):
            return False
        return all(self._unify(x, y) for x, y in zip(a.args, b.args))

    def unify(self, a, b) -> bool:
        snapshot = dict(self.solutions)
        if self._unify(a, b):
            return True
        self.solutions = snapshot
        return False

    def expect(self, got, expected, location):
        if expected is None or self.unify(got, expected):
            return
        self.deferred.append((got, expected, location))

    def _split(self, surface, location):
        from services.sexpr import SList
        if isinstance(surface, str):
            return str(surface), ()
        if isinstance(surface, SList) or isinstance(surface, tuple):
            if not surface or not isinstance(surface[0], str):
                raise GatError(f"malformed term {surface}", location)
            return str(surface[0]), tuple(surface[1:])
        raise GatError(f"malformed term {surface!r}", location)

    def _explicit(self, rule, head, args, location):
        names = ctx_names(rule.ctx)
        if len(args) == len(rule.explicit_args):
            return rule.explicit_args
        if len(args) == len(names):
            return names
        raise ArityMismatch(head, len(rule.explicit_args), len(args), location)

    def term(self, surface, expected, location):
        head, args = self._split(surface, location)
        if not args and head in self.names and not isinstance(surface, tuple):
            var = Var(head)
            self.expect(ctx_lookup(self.ctx, head), expected, location)
            return var
        rule = self.lang.get(head)
        if not isinstance(rule, TermRule):
            raise UnknownHead(head, location)
        explicit = self._explicit(rule, head, args, location)
        holes = {name: self.fresh(f"{head}.{name}") for name in ctx_names(rule.ctx)}
        self.expect(apply_subst(holes, rule.sort), expected, location)
        for name, arg in zip(explicit, args):
            declared = self.zonk(apply_subst(holes, ctx_lookup(rule.ctx, name)))
            t = self.term(arg, declared, f"{location}/{head}.{name}")
            if not self.unify(holes[name], t):
                self.deferred.append((holes[name], t, f"{location}/{head}.{name}"))
        return Con(head, tuple(holes[name] for name in ctx_names(rule.ctx)))

    def sort(self, surface, location):
        head, args = self._split(surface, location)
        rule = self.lang.get(head)
        if not isinstance(rule, SortRule):
            raise UnknownHead(head, location)
        explicit = self._explicit(rule, head, args, location)
        holes = {name: self.fresh(f"{head}.{name}") for name in ctx_names(rule.ctx)}
        for name, arg in zip(explicit, args):
            declared = self.zonk(apply_subst(holes, ctx_lookup(rule.ctx, name)))
            t = self.term(arg, declared, f"{location}/{head}.{name}")
            if not self.unify(holes[name], t):
                self.deferred.append((holes[name], t, f"{location}/{head}.{name}"))
        return Sort(head, tuple(holes[name] for name in ctx_names(rule.ctx)))

    def settle(self):
        """Retry deferred constraints until none makes progress, then decide the rest by conversion."""
        progress = True
        while self.deferred and progress:
            progress = False
            pending, self.deferred = self.deferred, []
            for a, b, location in pending:
                if self.unify(a, b):
                    progress = True
                else:
                    self.deferred.append((a, b, location))
        for a, b, location in self.deferred:
            a, b = self.zonk(a), self.zonk(b)
            if any(n.startswith(HOLE_PREFIX) for n in free_vars(a) | free_vars(b)):
                continue
            if not self._convertible(a, b):
                raise SortMismatch(b, a, location)

    def _convertible(self, a, b) -> bool:
        if isinstance(a, Sort):
            return checker_for(self.lang).convertible(self.ctx, a, b) is not None
        from services.rewrite import RewriteConfig, join
        cfg = RewriteConfig(fuel=settings.get_conversion_fuel(), verify=False)
        return join(self.lang, self.ctx, a, b, cfg) is not None

    def finish(self, x):
        self.settle()
        x = self.zonk(x)
        unsolved = sorted(n for n in free_vars(x) if n.startswith(HOLE_PREFIX))
        if unsolved:
            raise UnsolvedImplicit([self.origins[n] for n in unsolved], self.location)
        return x


def elaborate(lang: Lang, ctx: Ctx, surface, expected: Sort | None = None, location: str = 'term'):
    """Surface term -> explicit term, checked against expected when given."""
    job = _Elaboration(lang, ctx, location)
    t = job.finish(job.term(surface, expected, location))
    checker = checker_for(lang)
    if expected is not None:
        checker.check(ctx, t, expected, [], location)
    else:
        checker.infer(ctx, t, [], location)
    return t


def elaborate_sort(lang: Lang, ctx: Ctx, surface, location: str = 'sort') -> Sort:
    job = _Elaboration(lang, ctx, location)
    s = job.finish(job.sort(surface, location))
    checker_for(lang).check_sort(ctx, s, [], location)
    return s


def elaborate_ctx(lang: Lang, entries, location: str = 'ctx') -> Ctx:
    ctx = ()
    for name, surface in entries:
        ctx = ctx + ((name, elaborate_sort(lang, ctx, surface, f"{location}.{name}")),)
    return ctx


