"""
Equality proofs and their checker.

A proof tree is built from Refl, Sym, Trans, Cong, Axiom and ConvSort nodes.
The same node classes prove sort equalities: a Cong whose head is a sort rule
builds a sort equality out of term proofs.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass

from services.errors import (
    GatError, UnknownRule, UnknownHead, ArityMismatch, BadAxiomInstance,
    EndpointMismatch, IllTypedRefl,
)
from services.kernel import (
    Var, Con, Sort, Lang, Ctx, TermRule, SortRule, TermEqRule, SortEqRule,
    apply_subst, ctx_names,
)
from services.elaborator import checker_for, elaborate, elaborate_sort

logger = logging.getLogger(__name__)


# --- Proof nodes ---

@dataclass(frozen=True)
class Refl:
    term: object


@dataclass(frozen=True)
class Sym:
    proof: object


@dataclass(frozen=True)
class Trans:
    first: object
    second: object


@dataclass(frozen=True)
class Cong:
    head: str
    args: tuple

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, 'args', tuple(self.args))


@dataclass(frozen=True)
class Axiom:
    rule: str
    inst: tuple        # ((name, term), ...) in the rule's context order

    def __post_init__(self):
        if isinstance(self.inst, dict):
            object.__setattr__(self, 'inst', tuple(self.inst.items()))

    @property
    def subst(self) -> dict:
        return dict(self.inst)


@dataclass(frozen=True)
class ConvSort:
    sort_proof: object
    proof: object


EqProof = Refl | Sym | Trans | Cong | Axiom | ConvSort


def trans_chain(proofs) -> object | None:
    """Compose proofs left to right, dropping Refl steps. Keeps the tree balanced."""
    steps = [p for p in proofs if p is not None and not isinstance(p, Refl)]
    if not steps:
        return None
    while len(steps) > 1:
        paired = [Trans(steps[i], steps[i + 1]) for i in range(0, len(steps) - 1, 2)]
        if len(steps) % 2:
            paired.append(steps[-1])
        steps = paired
    return steps[0]


# --- Checking ---

class _ProofChecker:
    def __init__(self, lang: Lang, ctx: Ctx):
        self.lang = lang
        self.ctx = ctx
        self.checker = checker_for(lang)
        self._seen = {}

    def _sort_of(self, t, location):
        return self.checker.infer(self.ctx, t, [], location)

    def _check(self, t, s, location):
        self.checker.check(self.ctx, t, s, [], location)

    def _instance(self, rule, name, inst):
        gamma = dict(inst)
        names = ctx_names(rule.ctx)
        if len(gamma) != len(inst) or set(gamma) != set(names):
            raise BadAxiomInstance(
                f"instance of '{name}' must bind exactly {', '.join(names) or 'nothing'}")
        for var, declared in rule.ctx:
            try:
                self._check(gamma[var], apply_subst(gamma, declared), f"axiom {name}.{var}")
            except GatError as e:
                raise BadAxiomInstance(f"instance of '{name}' is ill-typed at {var}: {e.message}")
        return gamma

    def eq(self, p):
        key = id(p)
        if key in self._seen:
            return self._seen[key][1]
        result = self._eq(p)
        self._seen[key] = (p, result)
        return result

    def _eq(self, p):
        if isinstance(p, Refl):
            try:
                sort = self._sort_of(p.term, 'refl')
            except GatError as e:
                raise IllTypedRefl(f"refl of an ill-typed term: {e.message}")
            return p.term, p.term, sort
        if isinstance(p, Sym):
            a, b, sort = self.eq(p.proof)
            return b, a, sort
        if isinstance(p, Trans):
            a, b, sort = self.eq(p.first)
            b2, c, _ = self.eq(p.second)
            if b != b2:
                raise EndpointMismatch(f"trans endpoints differ: {b} vs {b2}")
            return a, c, sort
        if isinstance(p, Cong):
            rule = self.lang.get(p.head)
            if not isinstance(rule, TermRule):
                raise UnknownHead(p.head)
            if len(p.args) != len(rule.ctx):
                raise ArityMismatch(p.head, len(rule.ctx), len(p.args))
            sides = [self.eq(q) for q in p.args]
            lhs = Con(p.head, tuple(a for a, _, _ in sides))
            rhs = Con(p.head, tuple(b for _, b, _ in sides))
            sort = self._sort_of(lhs, f"cong {p.head}")
            self._check(rhs, sort, f"cong {p.head}")
            return lhs, rhs, sort
        if isinstance(p, Axiom):
            rule = self.lang.get(p.rule)
            if not isinstance(rule, TermEqRule):
                raise UnknownRule(p.rule)
            gamma = self._instance(rule, p.rule, p.inst)
            return apply_subst(gamma, rule.lhs), apply_subst(gamma, rule.rhs), apply_subst(gamma, rule.sort)
        if isinstance(p, ConvSort):
            a, b, sort = self.eq(p.proof)
            s1, s2 = self.sort_eq(p.sort_proof)
            if sort != s1:
                raise EndpointMismatch(f"conversion starts at {s1}, proof is at sort {sort}")
            return a, b, s2
        raise GatError(f"not a proof: {p!r}")

    def sort_eq(self, p):
        if isinstance(p, Refl):
            if not isinstance(p.term, Sort):
                raise IllTypedRefl(f"sort refl of a term: {p.term}")
            try:
                self.checker.check_sort(self.ctx, p.term, [], 'refl')
            except GatError as e:
                raise IllTypedRefl(f"refl of an ill-formed sort: {e.message}")
            return p.term, p.term
        if isinstance(p, Sym):
            a, b = self.sort_eq(p.proof)
            return b, a
        if isinstance(p, Trans):
            a, b = self.sort_eq(p.first)
            b2, c = self.sort_eq(p.second)
            if b != b2:
                raise EndpointMismatch(f"trans endpoints differ: {b} vs {b2}")
            return a, c
        if isinstance(p, Cong):
            rule = self.lang.get(p.head)
            if not isinstance(rule, SortRule):
                raise UnknownHead(p.head)
            if len(p.args) != len(rule.ctx):
                raise ArityMismatch(p.head, len(rule.ctx), len(p.args))
            sides = [self.eq(q) for q in p.args]
            lhs = Sort(p.head, tuple(a for a, _, _ in sides))
            rhs = Sort(p.head, tuple(b for _, b, _ in sides))
            self.checker.check_sort(self.ctx, lhs, [], f"cong {p.head}")
            self.checker.check_sort(self.ctx, rhs, [], f"cong {p.head}")
            return lhs, rhs
        if isinstance(p, Axiom):
            rule = self.lang.get(p.rule)
            if not isinstance(rule, SortEqRule):
                raise UnknownRule(p.rule)
            gamma = self._instance(rule, p.rule, p.inst)
            return apply_subst(gamma, rule.lhs), apply_subst(gamma, rule.rhs)
        raise GatError(f"not a sort proof: {p!r}")


def check_eq(lang: Lang, ctx: Ctx, p) -> tuple:
    """(lhs, rhs, sort) proved by p, or raise."""
    return _ProofChecker(lang, ctx).eq(p)


def check_sort_eq(lang: Lang, ctx: Ctx, p) -> tuple:
    return _ProofChecker(lang, ctx).sort_eq(p)


# --- Operations on proofs ---

def subst_into_proof(gamma, p):
    if not gamma:
        return p
    if isinstance(p, Refl):
        return Refl(apply_subst(gamma, p.term))
    if isinstance(p, Sym):
        return Sym(subst_into_proof(gamma, p.proof))
    if isinstance(p, Trans):
        return Trans(subst_into_proof(gamma, p.first), subst_into_proof(gamma, p.second))
    if isinstance(p, Cong):
        return Cong(p.head, tuple(subst_into_proof(gamma, q) for q in p.args))
    if isinstance(p, Axiom):
        return Axiom(p.rule, tuple((name, apply_subst(gamma, t)) for name, t in p.inst))
    if isinstance(p, ConvSort):
        return ConvSort(subst_into_proof(gamma, p.sort_proof), subst_into_proof(gamma, p.proof))
    raise GatError(f"not a proof: {p!r}")


def proof_size(p) -> int:
    if isinstance(p, Refl):
        return 1
    if isinstance(p, Sym):
        return 1 + proof_size(p.proof)
    if isinstance(p, Trans):
        return 1 + proof_size(p.first) + proof_size(p.second)
    if isinstance(p, Cong):
        return 1 + sum(proof_size(q) for q in p.args)
    if isinstance(p, ConvSort):
        return 1 + proof_size(p.sort_proof) + proof_size(p.proof)
    return 1


def axioms_used(p, found: set | None = None) -> set:
    found = set() if found is None else found
    if isinstance(p, Axiom):
        found.add(p.rule)
    elif isinstance(p, Sym):
        axioms_used(p.proof, found)
    elif isinstance(p, Trans):
        axioms_used(p.first, found)
        axioms_used(p.second, found)
    elif isinstance(p, Cong):
        for q in p.args:
            axioms_used(q, found)
    elif isinstance(p, ConvSort):
        axioms_used(p.sort_proof, found)
        axioms_used(p.proof, found)
    return found


def term_to_json(t):
    """Vars become strings; constructor and sort applications become [head, args...]."""
    if isinstance(t, Var):
        return t.name
    return [t.head] + [term_to_json(a) for a in t.args]


def proof_to_json(p):
    if isinstance(p, Refl):
        return ['refl', term_to_json(p.term)]
    if isinstance(p, Sym):
        return ['sym', proof_to_json(p.proof)]
    if isinstance(p, Trans):
        return ['trans', proof_to_json(p.first), proof_to_json(p.second)]
    if isinstance(p, Cong):
        return ['cong', p.head] + [proof_to_json(q) for q in p.args]
    if isinstance(p, Axiom):
        return ['axiom', p.rule] + [[name, term_to_json(t)] for name, t in p.inst]
    if isinstance(p, ConvSort):
        return ['conv', proof_to_json(p.sort_proof), proof_to_json(p.proof)]
    raise GatError(f"not a proof: {p!r}")


def proof_digest(p) -> str:
    canonical = json.dumps(proof_to_json(p), separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


# --- Surface proofs (.gatpf) ---

def elaborate_proof(lang: Lang, ctx: Ctx, surface, expected: Sort | None = None, location: str = 'proof'):
    """
    Surface proof tree -> proof.

    (refl t) (sym p) (trans p q ...) (cong head p ...) (axiom rule (x t) ...)
    (conv sort-proof p). Cong takes one proof per context entry of head; refl
    terms inside a cong are elaborated at the declared sort of their position.
    """
    if isinstance(surface, str) or not surface:
        raise GatError(f"malformed proof {surface}", location)
    tag, rest = surface[0], tuple(surface[1:])
    if tag == 'refl' and len(rest) == 1:
        return Refl(elaborate(lang, ctx, rest[0], expected, location))
    if tag == 'sym' and len(rest) == 1:
        return Sym(elaborate_proof(lang, ctx, rest[0], expected, location))
    if tag == 'trans' and len(rest) >= 2:
        parts = [elaborate_proof(lang, ctx, q, expected, location) for q in rest]
        proof = parts[-1]
        for q in reversed(parts[:-1]):
            proof = Trans(q, proof)
        return proof
    if tag == 'cong' and rest:
        head = str(rest[0])
        rule = lang.get(head)
        if not isinstance(rule, (TermRule, SortRule)):
            raise UnknownHead(head, location)
        if len(rest) - 1 != len(rule.ctx):
            raise ArityMismatch(head, len(rule.ctx), len(rest) - 1, location)
        gamma, args = {}, []
        for (name, declared), q in zip(rule.ctx, rest[1:]):
            sub = elaborate_proof(lang, ctx, q, apply_subst(gamma, declared), f"{location}/{head}.{name}")
            gamma[name] = check_eq(lang, ctx, sub)[0]
            args.append(sub)
        return Cong(head, tuple(args))
    if tag == 'axiom' and rest:
        name = str(rest[0])
        rule = lang.get(name)
        if not isinstance(rule, (TermEqRule, SortEqRule)):
            raise UnknownRule(name, location)
        given = {}
        for binding in rest[1:]:
            if isinstance(binding, str) or len(binding) != 2:
                raise GatError("axiom instances look like (x <term>)", location)
            given[str(binding[0])] = binding[1]
        gamma = {}
        for var, declared in rule.ctx:
            if var not in given:
                raise BadAxiomInstance(f"instance of '{name}' is missing {var}", location)
            gamma[var] = elaborate(lang, ctx, given[var], apply_subst(gamma, declared), f"{location}/{name}.{var}")
        extra = set(given) - set(gamma)
        if extra:
            raise BadAxiomInstance(f"instance of '{name}' binds unknown names {sorted(extra)}", location)
        return Axiom(name, tuple((var, gamma[var]) for var, _ in rule.ctx))
    if tag == 'conv' and len(rest) == 2:
        return ConvSort(elaborate_sort_proof(lang, ctx, rest[0], location),
                        elaborate_proof(lang, ctx, rest[1], None, location))
    raise GatError(f"malformed proof node ({tag} ...)", location)


def elaborate_sort_proof(lang: Lang, ctx: Ctx, surface, location: str = 'proof'):
    if isinstance(surface, str) or not surface:
        raise GatError(f"malformed sort proof {surface}", location)
    tag, rest = surface[0], tuple(surface[1:])
    if tag == 'refl' and len(rest) == 1:
        return Refl(elaborate_sort(lang, ctx, rest[0], location))
    if tag == 'sym' and len(rest) == 1:
        return Sym(elaborate_sort_proof(lang, ctx, rest[0], location))
    if tag == 'trans' and len(rest) >= 2:
        parts = [elaborate_sort_proof(lang, ctx, q, location) for q in rest]
        proof = parts[-1]
        for q in reversed(parts[:-1]):
            proof = Trans(q, proof)
        return proof
    return elaborate_proof(lang, ctx, surface, None, location)
