"""
Generators over languages: substitution equations, evaluation contexts and
parameterization by an extra context entry.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from services.errors import NotASubstLanguage, BadSpec, ChecksFailed
from services.kernel import (
    Var, Con, Sort, Lang, SortRule, TermRule, SortEqRule, TermEqRule,
    apply_subst, ctx_names, free_vars, heads,
)
from services.elaborator import WfReport, elaborate, wf_lang
from services.translate import Compiler

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubstCalculus:
    """Names of the substitution-calculus constructors the generators build with."""
    env: str = 'env'
    sub: str = 'sub'
    ext: str = 'ext'
    cmp: str = 'cmp'
    wkn: str = 'wkn'
    snoc: str = 'snoc'
    hd: str = 'hd'
    exp: str = 'exp'
    val: str = 'val'
    ret: str = 'ret'
    ectx: str = 'ectx'
    hole: str = 'hole'
    plug: str = 'plug'
    subst_suffix: str = '_subst'

    def subst_op(self, sort_head: str) -> str:
        return f"{sort_head}{self.subst_suffix}"


DEFAULT_CALCULUS = SubstCalculus()


def _fresh(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


# --- Substitution equations ---

@dataclass(frozen=True)
class BinderShape:
    """For each argument of a term rule, the types its context extends the rule's context by (None: not under it)."""
    rule: str
    context_var: str
    arguments: tuple     # ((name, (A1, ..., Ak) | None), ...)


def binder_shape(lang: Lang, name: str, names: SubstCalculus = DEFAULT_CALCULUS) -> BinderShape:
    rule = lang.get(name)
    if not isinstance(rule, TermRule):
        raise BadSpec(f"'{name}' is not a term constructor")
    if not rule.sort.args or not isinstance(rule.sort.args[0], Var):
        raise NotASubstLanguage(f"the sort of '{name}' is not over a context variable", name)
    gamma = rule.sort.args[0].name
    arguments = []
    for x, sort in rule.ctx:
        if gamma not in free_vars(sort) or x == gamma:
            arguments.append((x, None))
            continue
        chain, env = [], sort.args[0] if sort.args else None
        while isinstance(env, Con) and env.head == names.ext and len(env.args) == 2:
            chain.append(env.args[1])
            env = env.args[0]
        if env != Var(gamma):
            raise NotASubstLanguage(f"argument {x} of '{name}' is not under the context {gamma}", name)
        arguments.append((x, tuple(reversed(chain))))
    return BinderShape(name, gamma, tuple(arguments))


def _require(lang: Lang, names, what):
    missing = [n for n in names if n not in lang]
    if missing:
        raise NotASubstLanguage(f"{what} needs {', '.join(missing)}")


def _lifted(g, depth: int, names: SubstCalculus):
    for _ in range(depth):
        g = (names.snoc, (names.cmp, names.wkn, g), names.hd)
    return g


def gen_subst_eqs(lang: Lang, rule_name: str, names: SubstCalculus = DEFAULT_CALCULUS) -> list:
    """
    The equation pushing a substitution through constructor rule_name.

    For c over context G the result is `<c>-subst`, with a fresh G' and
    g : sub G' G inserted right after G:
        S_subst g (c ... x ...) = c ... (T_subst (lift^k g) x) ...
    where x lives k context extensions below G.
    """
    _require(lang, (names.sub, names.cmp, names.wkn, names.snoc, names.hd), f"substitution for '{rule_name}'")
    rule = lang.get(rule_name)
    shape = binder_shape(lang, rule_name, names)
    result_op = names.subst_op(rule.sort.head)
    _require(lang, (result_op,), f"substitution for '{rule_name}'")
    gamma = shape.context_var
    taken = set(ctx_names(rule.ctx))
    g_target = _fresh(f"{gamma}'", taken)
    g_sub = _fresh('g', taken | {g_target})

    ctx = []
    for x, sort in rule.ctx:
        ctx.append((x, sort))
        if x == gamma:
            ctx.append((g_target, Sort(names.env)))
            ctx.append((g_sub, Sort(names.sub, (Var(g_target), Var(gamma)))))
    ctx = tuple(ctx)

    rhs_args = []
    for x, chain in shape.arguments:
        if x == gamma:
            rhs_args.append(g_target)
        elif chain is None:
            rhs_args.append(x)
        else:
            sort = dict(rule.ctx)[x]
            op = names.subst_op(sort.head)
            _require(lang, (op,), f"argument {x} of '{rule_name}'")
            rhs_args.append((op, _lifted(g_sub, len(chain), names), x))
    lhs_surface = (result_op, g_sub, (rule_name,) + tuple(ctx_names(rule.ctx)))
    rhs_surface = (rule_name,) + tuple(rhs_args)
    eq_sort = apply_subst({gamma: Var(g_target)}, rule.sort)
    eq_name = f"{rule_name}-subst"
    lhs = elaborate(lang, ctx, lhs_surface, eq_sort, f"{eq_name}.lhs")
    rhs = elaborate(lang, ctx, rhs_surface, eq_sort, f"{eq_name}.rhs")
    logger.debug(f"Generated {eq_name}")
    return [(eq_name, TermEqRule(ctx, lhs, rhs, eq_sort))]


# --- Evaluation contexts ---

EVAL_CTX, EXPR, VALUE = 'E', 'e', 'v'


@dataclass(frozen=True)
class EvalCtxEntry:
    name: str
    base: str
    kinds: tuple          # one of E / e / v per explicit argument of base

    @property
    def hole_position(self) -> int:
        return self.kinds.index(EVAL_CTX)


@dataclass(frozen=True)
class EvalCtxSpec:
    entries: tuple = ()


def gen_eval_ctx(lang: Lang, spec: EvalCtxSpec, names: SubstCalculus = DEFAULT_CALCULUS) -> list:
    """Per entry, the context former `<name>` and its plug equation `<name>-plug`."""
    if not spec.entries:
        return []
    missing = [n for n in (names.ectx, names.hole, names.plug, names.ret) if n not in lang]
    if missing:
        raise BadSpec(f"evaluation contexts need {', '.join(missing)}")
    ectx_rule = lang[names.ectx]
    if not isinstance(ectx_rule, SortRule) or len(ectx_rule.ctx) != 3:
        raise BadSpec(f"'{names.ectx}' must be a sort over a context and two types")
    ty_sort = ectx_rule.ctx[1][1]
    generated = []
    for entry in spec.entries:
        generated += _eval_ctx_entry(lang, entry, ty_sort, names)
    return generated


def _eval_ctx_entry(lang, entry: EvalCtxEntry, ty_sort, names):
    base = lang.get(entry.base)
    if not isinstance(base, TermRule):
        raise BadSpec(f"'{entry.base}' is not a term constructor", entry.name)
    if base.sort.head != names.exp or not isinstance(base.sort.args[0], Var):
        raise BadSpec(f"'{entry.base}' does not build an expression over a context variable", entry.name)
    if len(entry.kinds) != len(base.explicit_args):
        raise BadSpec(f"'{entry.base}' takes {len(base.explicit_args)} explicit arguments, "
                      f"the entry gives {len(entry.kinds)}", entry.name)
    if entry.kinds.count(EVAL_CTX) != 1:
        raise BadSpec("exactly one position must be the hole", entry.name)
    gamma = base.sort.args[0]
    result_ty = base.sort.args[1]
    kind_of = dict(zip(base.explicit_args, entry.kinds))
    taken = set(ctx_names(base.ctx))
    x_ty = _fresh('X', taken)
    e_ctx = _fresh('E', taken | {x_ty})
    plugged = _fresh('x', taken | {x_ty, e_ctx})

    ctx, explicit, hole_ty = [], [], None
    for x, sort in base.ctx:
        kind = kind_of.get(x)
        if kind in (EVAL_CTX, VALUE) and (sort.head != names.exp or sort.args[0] != gamma):
            raise BadSpec(f"argument {x} of '{entry.base}' is not an expression over {gamma}", entry.name)
        if kind == EVAL_CTX:
            hole_ty = sort.args[1]
            ctx.append((x_ty, ty_sort))
            ctx.append((e_ctx, Sort(names.ectx, (gamma, Var(x_ty), hole_ty))))
            explicit.append(e_ctx)
            continue
        if kind == VALUE:
            sort = Sort(names.val, sort.args)
        ctx.append((x, sort))
        if kind is not None:
            explicit.append(x)
    ctx = tuple(ctx)
    former = TermRule(ctx, tuple(explicit), Sort(names.ectx, (gamma, Var(x_ty), result_ty)))

    plug_ctx = ctx + ((plugged, Sort(names.exp, (gamma, Var(x_ty)))),)
    former_term = Con(entry.name, tuple(Var(x) for x in ctx_names(ctx)))
    lhs = Con(names.plug, (gamma, Var(x_ty), result_ty, former_term, Var(plugged)))
    args = []
    for x, sort in base.ctx:
        kind = kind_of.get(x)
        if kind == EVAL_CTX:
            args.append(Con(names.plug, (gamma, Var(x_ty), hole_ty, Var(e_ctx), Var(plugged))))
        elif kind == VALUE:
            args.append(Con(names.ret, (gamma, sort.args[1], Var(x))))
        else:
            args.append(Var(x))
    rhs = Con(entry.base, tuple(args))
    plug_eq = TermEqRule(plug_ctx, lhs, rhs, base.sort)
    logger.debug(f"Generated evaluation context {entry.name}")
    return [(entry.name, former), (f"{entry.name}-plug", plug_eq)]


# --- Parameterization ---

@dataclass(frozen=True)
class ParamSpec:
    param: str
    param_sort: Sort
    marked: frozenset = frozenset()
    positions: dict = field(default_factory=dict, hash=False, compare=False)

    def position(self, rule_name: str) -> int:
        return self.positions.get(rule_name, 0)


def _gains_param(spec: ParamSpec, name, rule) -> bool:
    if name in spec.marked:
        return True
    return isinstance(rule, (TermEqRule, SortEqRule)) and bool(heads(rule) & spec.marked)


def param_checks(spec: ParamSpec, lang: Lang) -> WfReport:
    report = WfReport()
    for name in sorted(spec.marked):
        rule = lang.get(name)
        if rule is None:
            report.error(name, "marked name is not a rule of the language")
        elif isinstance(rule, (TermEqRule, SortEqRule)):
            report.error(name, "equations cannot be marked; they follow the heads they mention")
    head = spec.param_sort.head
    if not isinstance(lang.get(head), SortRule):
        report.error(spec.param, f"parameter sort '{head}' is not declared")
    elif head in spec.marked:
        report.error(spec.param, f"parameter sort '{head}' cannot itself be marked")
    if free_vars(spec.param_sort):
        report.error(spec.param, "the parameter sort must be closed")
    for name, index in sorted(spec.positions.items()):
        rule = lang.get(name)
        if name not in spec.marked or rule is None:
            report.error(name, "insertion position given for an unmarked rule")
        elif not 0 <= index <= len(rule.ctx):
            report.error(name, f"insertion position {index} is outside 0..{len(rule.ctx)}")
    for name, rule in lang:
        if name in spec.marked or isinstance(rule, (TermEqRule, SortEqRule)):
            if _gains_param(spec, name, rule) and spec.param in ctx_names(rule.ctx):
                report.error(name, f"parameter name '{spec.param}' is already a context name")
            continue
        for used in sorted(heads(rule) & spec.marked):
            report.error(name, f"unmarked rule depends on marked '{used}'")
    return report


def thread_param(spec: ParamSpec, x, param=None):
    """Add the parameter argument to every occurrence of a marked head in x."""
    param = Var(spec.param) if param is None else param
    if isinstance(x, (Con, Sort)):
        args = tuple(thread_param(spec, a, param) for a in x.args)
        if x.head in spec.marked:
            at = spec.position(x.head)
            args = args[:at] + (param,) + args[at:]
        return type(x)(x.head, args)
    if isinstance(x, tuple):
        return tuple((name, thread_param(spec, sort, param)) for name, sort in x)
    return x


def _parameterize_rule(spec: ParamSpec, name, rule):
    ctx = thread_param(spec, rule.ctx)
    if _gains_param(spec, name, rule):
        at = spec.position(name) if name in spec.marked else 0
        ctx = ctx[:at] + ((spec.param, spec.param_sort),) + ctx[at:]
    if isinstance(rule, SortRule):
        return SortRule(ctx, rule.explicit_args)
    if isinstance(rule, TermRule):
        return TermRule(ctx, rule.explicit_args, thread_param(spec, rule.sort))
    if isinstance(rule, SortEqRule):
        return SortEqRule(ctx, thread_param(spec, rule.lhs), thread_param(spec, rule.rhs))
    return TermEqRule(ctx, thread_param(spec, rule.lhs), thread_param(spec, rule.rhs),
                      thread_param(spec, rule.sort))


def parameterize_lang(spec: ParamSpec, lang: Lang) -> Lang:
    report = param_checks(spec, lang)
    if not report.ok:
        raise ChecksFailed(report.diagnostics)
    if not spec.marked:
        return lang
    out = Lang(tuple((name, _parameterize_rule(spec, name, rule)) for name, rule in lang))
    wf = wf_lang(out)
    if not wf.ok:
        raise ChecksFailed(wf.diagnostics)
    logger.info(f"Parameterized {len(spec.marked)} of {len(lang)} rules by {spec.param}")
    return out


def parameterize_compiler(spec_s: ParamSpec, spec_t: ParamSpec, cmp, source: Lang, target: Lang):
    """
    Thread the parameter through a compiler whose source and target were
    parameterized alike. source and target are the languages before
    parameterization; both specs must pass param_checks against them.
    """
    diagnostics = param_checks(spec_s, source).diagnostics + param_checks(spec_t, target).diagnostics
    if diagnostics:
        raise ChecksFailed(diagnostics)
    if not spec_s.marked and not spec_t.marked:
        return cmp
    if spec_s.param != spec_t.param:
        raise ChecksFailed([('parameterize', f"parameter names differ: {spec_s.param} vs {spec_t.param}")])
    problems, cases = [], []
    for name, case in cmp.cases:
        out = thread_param(spec_t, case.out)
        params = tuple(case.params)
        if name in spec_s.marked:
            if spec_s.param in params:
                problems.append((name, f"parameter name '{spec_s.param}' is already a case parameter"))
            at = spec_s.position(name)
            params = params[:at] + (spec_s.param,) + params[at:]
        elif heads(case.out) & spec_t.marked:
            problems.append((name, "case of an unmarked rule uses marked target constructors"))
        cases.append((name, type(case)(params, out)))
    if problems:
        raise ChecksFailed(problems)
    return Compiler(tuple(cases))