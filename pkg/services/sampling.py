"""
Seeded generators for the property suites and demos.

Everything takes an explicit random.Random so a fixed seed gives the same
terms, programs, proofs and mutations on every run.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from services.errors import GatError
from services.kernel import Var, Con, Sort, Lang, Ctx, TermRule, ctx_names
from services.proofkit import Refl, Sym, Trans, Cong, Axiom, check_eq
from services.rewrite import match_pattern

logger = logging.getLogger(__name__)

MUTANT = 'mutant'


def rng_for(seed: int) -> random.Random:
    return random.Random(seed)


# --- Corpus terms ---

@dataclass(frozen=True)
class Sample:
    rule: str
    ctx: Ctx
    term: object
    sort: Sort


def corpus_terms(lang: Lang) -> list:
    """Both sides of every term equation of lang, in the equation's context."""
    samples = []
    for name, rule in lang.term_eqs():
        for side in (rule.lhs, rule.rhs):
            if isinstance(side, Con):
                samples.append(Sample(name, rule.ctx, side, rule.sort))
    return samples


def subterms(t, found: list | None = None) -> list:
    found = [] if found is None else found
    if isinstance(t, Con):
        found.append(t)
        for a in t.args:
            subterms(a, found)
    return found


def random_subst(rng: random.Random, names, pool) -> dict:
    """Any term for any name; compilation commutes with substitution regardless of sorts."""
    return {name: rng.choice(pool) for name in names}


# --- Programs (surface syntax) ---

def bool_var(index: int):
    x = 'hd'
    for _ in range(index):
        x = ('val_subst', 'wkn', x)
    return x


def bool_value(rng: random.Random, scope: int):
    choices = ['true', 'false'] + [bool_var(i) for i in range(scope)]
    return rng.choice(choices)


def bool_program(rng: random.Random, depth: int = 3, scope: int = 0):
    """A closed call-by-value program of type bool over `scope` bound booleans."""
    if depth <= 0:
        return ('ret', bool_value(rng, scope))
    move = rng.choice(('ret', 'if', 'app', 'app'))
    if move == 'ret':
        return ('ret', bool_value(rng, scope))
    if move == 'if':
        return ('if', bool_value(rng, scope),
                bool_program(rng, depth - 1, scope), bool_program(rng, depth - 1, scope))
    body = bool_program(rng, depth - 1, scope + 1)
    return ('app', ('ret', ('lambda', 'bool', body)), ('ret', bool_value(rng, scope)))


def numeral(n: int):
    x = '0'
    for _ in range(n):
        x = ('S', x)
    return x


def arith_value(rng: random.Random, depth: int = 2):
    if depth <= 0 or rng.random() < 0.3:
        return ('nv', numeral(rng.randint(0, 3)))
    return ('vplus', arith_value(rng, depth - 1), arith_value(rng, depth - 1))


# --- Proofs ---

def _wrap_in_constructor(rng, lang, ctx, p, lhs, rhs, sort):
    """Cong over a constructor whose last argument has `sort`, the others fixed by it."""
    options = []
    for name, rule in lang:
        if not isinstance(rule, TermRule) or not rule.ctx:
            continue
        last, declared = rule.ctx[-1]
        gamma = match_pattern(declared, sort)
        if gamma is None or not all(x in gamma for x in ctx_names(rule.ctx[:-1])):
            continue
        options.append((name, rule, gamma))
    rng.shuffle(options)
    for name, rule, gamma in options:
        args = tuple(Refl(gamma[x]) for x in ctx_names(rule.ctx[:-1])) + (p,)
        wrapped = Cong(name, args)
        try:
            a, b, s = check_eq(lang, ctx, wrapped)
        except GatError:
            continue
        return wrapped, a, b, s
    return None


def random_proof(rng: random.Random, lang: Lang, depth: int = 4, rules=None):
    """(ctx, proof, lhs, rhs): an accepted proof of depth at most `depth` built around one axiom."""
    name, rule = rng.choice(rules if rules is not None else lang.term_eqs())
    ctx = rule.ctx
    p = Axiom(name, tuple((x, Var(x)) for x in ctx_names(ctx)))
    lhs, rhs, sort = rule.lhs, rule.rhs, rule.sort
    level = 1
    while level < depth:
        move = rng.choice(('sym', 'refl_left', 'refl_right', 'loop', 'cong', 'stop'))
        if move == 'stop':
            break
        if move == 'sym':
            p, lhs, rhs = Sym(p), rhs, lhs
        elif move == 'refl_left':
            p = Trans(Refl(lhs), p)
        elif move == 'refl_right':
            p = Trans(p, Refl(rhs))
        elif move == 'loop' and level + 2 <= depth:
            p, rhs = Trans(p, Sym(p)), lhs
            level += 1
        elif move == 'cong':
            wrapped = _wrap_in_constructor(rng, lang, ctx, p, lhs, rhs, sort)
            if wrapped is None:
                continue
            p, lhs, rhs, sort = wrapped
        else:
            continue
        level += 1
    return ctx, p, lhs, rhs


# --- Mutations ---

def _nodes(p, path=()):
    yield path, p
    if isinstance(p, Sym):
        yield from _nodes(p.proof, path + (('proof', None),))
    elif isinstance(p, Trans):
        yield from _nodes(p.first, path + (('first', None),))
        yield from _nodes(p.second, path + (('second', None),))
    elif isinstance(p, Cong):
        for i, q in enumerate(p.args):
            yield from _nodes(q, path + (('args', i),))


def _replace(p, path, new):
    if not path:
        return new
    (field, index), rest = path[0], path[1:]
    if isinstance(p, Sym):
        return Sym(_replace(p.proof, rest, new))
    if isinstance(p, Trans):
        if field == 'first':
            return Trans(_replace(p.first, rest, new), p.second)
        return Trans(p.first, _replace(p.second, rest, new))
    args = list(p.args)
    args[index] = _replace(args[index], rest, new)
    return Cong(p.head, tuple(args))


def mutation_sites(lang: Lang, ctx: Ctx, p) -> list:
    """(kind, path) for every node a single mutation can change."""
    sites = []
    for path, node in _nodes(p):
        if isinstance(node, Axiom):
            sites.append(('rename', path))
            if node.inst:
                sites.append(('inst', path))
        elif isinstance(node, Cong):
            sites.append(('head', path))
        elif isinstance(node, Trans) and node.first != node.second:
            try:
                a, c, _ = check_eq(lang, ctx, node)
            except GatError:
                continue
            if a != c:
                sites.append(('swap', path))
    return sites


def _node_at(p, path):
    for path_here, node in _nodes(p):
        if path_here == path:
            return node
    raise KeyError(path)


def mutate_proof(rng: random.Random, lang: Lang, ctx: Ctx, p):
    """One single-node mutation of p, or None when p has no mutable node."""
    sites = mutation_sites(lang, ctx, p)
    if not sites:
        return None
    kind, path = rng.choice(sites)
    node = _node_at(p, path)
    if kind == 'rename':
        others = [name for name, _ in lang.term_eqs() if name != node.rule]
        new = Axiom(rng.choice(others) if others else MUTANT, node.inst)
    elif kind == 'inst':
        position = rng.randrange(len(node.inst))
        var, current = node.inst[position]
        candidates = [Var(x) for x in ctx_names(ctx)] + [t for _, t in node.inst]
        candidates = [t for t in candidates if t != current] or [Con(MUTANT, ())]
        inst = list(node.inst)
        inst[position] = (var, rng.choice(candidates))
        new = Axiom(node.rule, tuple(inst))
    elif kind == 'head':
        others = [name for name, rule in lang
                  if isinstance(rule, TermRule) and len(rule.ctx) == len(node.args) and name != node.head]
        new = Cong(rng.choice(others) if others else MUTANT, node.args)
    else:
        new = Trans(node.second, node.first)
    return _replace(p, path, new)
