"""
Fuel-bounded innermost rewriting with equality certificates.

Term equations are read left to right. Every normalization returns a
certificate proving input = normal form, built from Cong, Axiom and Trans.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from services.errors import GatError, FuelExhausted
from services.kernel import (
    Var, Con, Sort, Lang, Ctx, TermRule, TermEqRule, SortEqRule,
    apply_subst, ctx_names, free_vars, var_occurrences, term_size,
)
from services.proofkit import Refl, Sym, Trans, Cong, Axiom, trans_chain, check_eq, check_sort_eq
from services import settings

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RewriteConfig:
    fuel: int = field(default_factory=settings.get_fuel)
    filter: Callable | None = None       # (name, TermEqRule) -> bool
    forward_only: bool = True
    verify: bool = True

    def __post_init__(self):
        if self.fuel < 1:
            raise ValueError(f"fuel must be positive, got {self.fuel}")


@dataclass(frozen=True)
class RewriteResult:
    normal_form: object
    certificate: object
    steps_used: int
    complete: bool = True


def explicit_occurrences(lang: Lang, x, counts: dict | None = None) -> dict:
    """Occurrence count of each metavariable in the explicit argument positions of x."""
    counts = {} if counts is None else counts
    if isinstance(x, Var):
        counts[x.name] = counts.get(x.name, 0) + 1
    elif isinstance(x, Con):
        rule = lang.get(x.head)
        if not isinstance(rule, TermRule):
            return var_occurrences(x, counts)
        for (name, _), a in zip(rule.ctx, x.args):
            if name in rule.explicit_args:
                explicit_occurrences(lang, a, counts)
    return counts


@lru_cache(maxsize=64)
def nonduplicating(lang: Lang) -> Callable:
    """
    The filter keeping equations of lang whose right side repeats no
    metavariable more often than the left. Implicit arguments do not count.
    """
    def keep(name: str, rule) -> bool:
        left = explicit_occurrences(lang, rule.lhs)
        right = explicit_occurrences(lang, rule.rhs)
        return all(count <= left.get(var, 0) for var, count in right.items())
    return keep


def match_pattern(pattern, subject, gamma: dict | None = None) -> dict | None:
    gamma = {} if gamma is None else gamma
    if isinstance(pattern, Var):
        bound = gamma.get(pattern.name)
        if bound is None:
            gamma[pattern.name] = subject
            return gamma
        return gamma if bound == subject else None
    if type(pattern) is not type(subject):
        return None
    if pattern.head != subject.head or len(pattern.args) != len(subject.args):
        return None
    for p, s in zip(pattern.args, subject.args):
        if match_pattern(p, s, gamma) is None:
            return None
    return gamma


def _usable(rule) -> bool:
    if isinstance(rule.lhs, Var):
        return False
    return set(ctx_names(rule.ctx)) <= free_vars(rule.lhs)


@lru_cache(maxsize=256)
def _indexed_rules(lang: Lang, rule_filter, forward_only: bool):
    """head -> [(name, rule, reversed)] in language order."""
    index = {}
    for name, rule in lang.term_eqs():
        if rule_filter is not None and not rule_filter(name, rule):
            continue
        if _usable(rule):
            index.setdefault(rule.lhs.head, []).append((name, rule, False))
    if not forward_only:
        for name, rule in lang.term_eqs():
            if rule_filter is not None and not rule_filter(name, rule):
                continue
            flipped = TermEqRule(rule.ctx, rule.rhs, rule.lhs, rule.sort)
            if _usable(flipped) and term_size(rule.rhs) > term_size(rule.lhs):
                index.setdefault(flipped.lhs.head, []).append((name, flipped, True))
    return index


def rules_for(lang: Lang, cfg: RewriteConfig) -> list:
    """The (name, rule) pairs normalize() may fire, in language order."""
    index = _indexed_rules(lang, cfg.filter, cfg.forward_only)
    picked = [(name, rule) for entries in index.values() for name, rule, flipped in entries if not flipped]
    order = {name: position for position, name in enumerate(lang.names())}
    return sorted(picked, key=lambda pair: order[pair[0]])


class _Normalizer:
    def __init__(self, lang: Lang, cfg: RewriteConfig):
        self.lang = lang
        self.cfg = cfg
        self.index = _indexed_rules(lang, cfg.filter, cfg.forward_only)
        self.fuel = cfg.fuel
        self.steps = 0
        self.exhausted = False
        self.memo = {}

    def _step(self, t):
        for name, rule, flipped in self.index.get(t.head, ()):
            gamma = match_pattern(rule.lhs, t)
            if gamma is None:
                continue
            logger.debug(f"Rewrite by {name}")
            inst = tuple((var, gamma[var]) for var in ctx_names(rule.ctx))
            proof = Sym(Axiom(name, inst)) if flipped else Axiom(name, inst)
            return apply_subst(gamma, rule.rhs), proof
        return None

    def term(self, t):
        """(normal form, proof or None for reflexivity)."""
        if not isinstance(t, Con):
            return t, None
        if t in self.memo:
            return self.memo[t]
        current, chain = t, []
        while True:
            args, proofs, changed = [], [], False
            for a in current.args:
                nf, proof = self.term(a)
                args.append(nf)
                proofs.append(proof if proof is not None else Refl(a))
                changed = changed or proof is not None
            if changed:
                chain.append(Cong(current.head, tuple(proofs)))
                current = Con(current.head, tuple(args))
            step = self._step(current)
            if step is None:
                break
            if self.fuel <= 0:
                self.exhausted = True
                break
            current, proof = step
            chain.append(proof)
            self.fuel -= 1
            self.steps += 1
            if not isinstance(current, Con):
                break
        result = (current, trans_chain(chain))
        if not self.exhausted:
            self.memo[t] = result
        return result

    def sort(self, s: Sort):
        current, chain = s, []
        while True:
            args, proofs, changed = [], [], False
            for a in current.args:
                nf, proof = self.term(a)
                args.append(nf)
                proofs.append(proof if proof is not None else Refl(a))
                changed = changed or proof is not None
            if changed:
                chain.append(Cong(current.head, tuple(proofs)))
                current = Sort(current.head, tuple(args))
            fired = None
            for name, rule in self.lang.sort_eqs():
                gamma = match_pattern(rule.lhs, current)
                if gamma is not None and set(ctx_names(rule.ctx)) <= set(gamma):
                    inst = tuple((var, gamma[var]) for var in ctx_names(rule.ctx))
                    fired = (apply_subst(gamma, rule.rhs), Axiom(name, inst))
                    break
            if fired is None:
                break
            if self.fuel <= 0:
                self.exhausted = True
                break
            current, proof = fired
            chain.append(proof)
            self.fuel -= 1
            self.steps += 1
        return current, trans_chain(chain)


def _finish(lang, ctx, start, nf, proof, normalizer, cfg, checker):
    certificate = proof if proof is not None else Refl(start)
    result = RewriteResult(nf, certificate, normalizer.steps, not normalizer.exhausted)
    if cfg.verify and proof is not None:
        proved = checker(lang, ctx, certificate)
        if proved[0] != start or proved[1] != nf:
            raise GatError(f"rewrite certificate does not prove {start} = {nf}")
    if normalizer.exhausted:
        logger.warning(f"Fuel exhausted after {normalizer.steps} steps")
        raise FuelExhausted(result)
    return result


def normalize(lang: Lang, ctx: Ctx, t, cfg: RewriteConfig | None = None) -> RewriteResult:
    cfg = cfg or RewriteConfig()
    normalizer = _Normalizer(lang, cfg)
    nf, proof = normalizer.term(t)
    return _finish(lang, ctx, t, nf, proof, normalizer, cfg, check_eq)


def normalize_sort(lang: Lang, ctx: Ctx, s: Sort, cfg: RewriteConfig | None = None) -> RewriteResult:
    cfg = cfg or RewriteConfig()
    normalizer = _Normalizer(lang, cfg)
    nf, proof = normalizer.sort(s)
    return _finish(lang, ctx, s, nf, proof, normalizer, cfg, check_sort_eq)


def join(lang: Lang, ctx: Ctx, a, b, cfg: RewriteConfig | None = None):
    """A proof of a = b through a common normal form, or None."""
    cfg = cfg or RewriteConfig()
    quiet = RewriteConfig(cfg.fuel, cfg.filter, cfg.forward_only, verify=False)
    try:
        left = normalize(lang, ctx, a, quiet)
        right = normalize(lang, ctx, b, quiet)
    except FuelExhausted:
        return None
    if left.normal_form != right.normal_form:
        return None
    proof = Trans(left.certificate, Sym(right.certificate))
    if cfg.verify:
        lhs, rhs, _ = check_eq(lang, ctx, proof)
        if lhs != a or rhs != b:
            raise GatError(f"join certificate does not prove {a} = {b}")
    return proof


def partial_eval(lang: Lang, ctx: Ctx, t, cfg: RewriteConfig | None = None) -> RewriteResult:
    cfg = cfg or RewriteConfig()
    if cfg.filter is None:
        cfg = RewriteConfig(cfg.fuel, nonduplicating(lang), cfg.forward_only, cfg.verify)
    return normalize(lang, ctx, t, cfg)


def _step_at(index, t):
    if not isinstance(t, Con):
        return None
    for position, a in enumerate(t.args):
        found = _step_at(index, a)
        if found is not None:
            new, proof, name = found
            args = t.args[:position] + (new,) + t.args[position + 1:]
            proofs = tuple(proof if i == position else Refl(b) for i, b in enumerate(t.args))
            return Con(t.head, args), Cong(t.head, proofs), name
    for name, rule, flipped in index.get(t.head, ()):
        gamma = match_pattern(rule.lhs, t)
        if gamma is None:
            continue
        inst = tuple((var, gamma[var]) for var in ctx_names(rule.ctx))
        proof = Sym(Axiom(name, inst)) if flipped else Axiom(name, inst)
        return apply_subst(gamma, rule.rhs), proof, name
    return None


def step(lang: Lang, t, cfg: RewriteConfig | None = None):
    """One leftmost-innermost step: (result, proof of t = result, rule name), or None at a normal form."""
    cfg = cfg or RewriteConfig()
    found = _step_at(_indexed_rules(lang, cfg.filter, cfg.forward_only), t)
    if found is not None:
        logger.debug(f"Step by {found[2]}")
    return found
