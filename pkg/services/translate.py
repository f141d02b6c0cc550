"""
Compilers between languages and their preservation obligations.

A compiler maps every sort and term rule of its source to a case: a sort or
term over the target whose free metavariables are the case parameters (the
source rule's context names). Equations get no case; they become obligations.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from services.errors import GatError, MissingCase, DuplicateCase, NotASubset, ChecksFailed, FuelExhausted
from services.kernel import (
    Var, Con, Sort, Lang, Ctx, SortRule, TermRule, SortEqRule, TermEqRule,
    apply_subst, ctx_names, free_vars, lang_subset,
)
from services.elaborator import checker_for, wf_lang
from services.proofkit import (
    Refl, Sym, Trans, Cong, Axiom, ConvSort, check_eq, subst_into_proof,
    proof_digest, elaborate_proof,
)
from services.rewrite import RewriteConfig, join, normalize, normalize_sort

logger = logging.getLogger(__name__)

AUTO = 'Auto'
MANUAL = 'Manual'
OPEN = 'Open'


# --- Compilers ---

@dataclass(frozen=True)
class SortCase:
    params: tuple
    out: Sort


@dataclass(frozen=True)
class TermCase:
    params: tuple
    out: object


@dataclass(frozen=True, eq=False)
class Compiler:
    """Ordered (rule name, case) pairs."""

    cases: tuple = ()

    def __post_init__(self):
        if not isinstance(self.cases, tuple):
            object.__setattr__(self, 'cases', tuple(self.cases))
        index = {}
        for name, _case in self.cases:
            if name in index:
                raise DuplicateCase(name)
            index[name] = len(index)
        object.__setattr__(self, '_index', index)

    def __eq__(self, other):
        return isinstance(other, Compiler) and self.cases == other.cases

    def __hash__(self):
        return hash(self.cases)

    def __len__(self):
        return len(self.cases)

    def __contains__(self, name):
        return name in self._index

    def get(self, name, default=None):
        position = self._index.get(name)
        return default if position is None else self.cases[position][1]

    def names(self) -> tuple:
        return tuple(name for name, _ in self.cases)


def compile(cmp: Compiler, x):
    """Translate a term, sort or context."""
    if isinstance(x, Var):
        return x
    if isinstance(x, (Con, Sort)):
        case = cmp.get(x.head)
        wanted = TermCase if isinstance(x, Con) else SortCase
        if not isinstance(case, wanted):
            raise MissingCase(x.head)
        gamma = {p: compile(cmp, a) for p, a in zip(case.params, x.args)}
        return apply_subst(gamma, case.out)
    if isinstance(x, tuple):
        return tuple((name, compile(cmp, sort)) for name, sort in x)
    raise GatError(f"cannot compile {type(x).__name__}")


def id_compiler(lang: Lang) -> Compiler:
    cases = []
    for name, rule in lang:
        params = ctx_names(rule.ctx)
        if isinstance(rule, SortRule):
            cases.append((name, SortCase(params, Sort(name, tuple(Var(p) for p in params)))))
        elif isinstance(rule, TermRule):
            cases.append((name, TermCase(params, Con(name, tuple(Var(p) for p in params)))))
    return Compiler(tuple(cases))


def concat_compilers(cmp: Compiler, ext: Compiler) -> Compiler:
    for name in ext.names():
        if name in cmp:
            raise DuplicateCase(name)
    return Compiler(cmp.cases + ext.cases)


def vcompose(g: Compiler, f: Compiler) -> Compiler:
    """The compiler g after f: each case of f pushed through g."""
    cases = []
    for name, case in f.cases:
        cases.append((name, type(case)(case.params, compile(g, case.out))))
    return Compiler(tuple(cases))


# --- Obligations ---

@dataclass(frozen=True)
class Obligation:
    kind: str               # 'wf_sort' | 'wf_term' | 'term_eq' | 'sort_eq'
    source_rule: str
    target_ctx: Ctx
    payload: tuple
    problem: str | None = None


@dataclass(frozen=True)
class DischargeEntry:
    rule: str
    kind: str
    status: str
    proof: object = None
    steps: int = 0
    digest: str | None = None
    message: str | None = None


@dataclass
class DischargeReport:
    entries: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return all(e.status == AUTO for e in self.entries)

    @property
    def open_count(self) -> int:
        return sum(1 for e in self.entries if e.status == OPEN)

    @property
    def manual_rules(self) -> tuple:
        return tuple(e.rule for e in self.entries if e.status == MANUAL)

    @property
    def open_rules(self) -> tuple:
        return tuple(e.rule for e in self.entries if e.status == OPEN)

    def entry(self, rule):
        for e in self.entries:
            if e.rule == rule:
                return e
        return None

    def status_of(self, rule):
        e = self.entry(rule)
        return None if e is None else e.status

    def counts(self) -> dict:
        counts = {AUTO: 0, MANUAL: 0, OPEN: 0}
        for e in self.entries:
            counts[e.status] += 1
        return counts


def _case_matches(name, rule, case) -> str | None:
    wanted = SortCase if isinstance(rule, SortRule) else TermCase
    if not isinstance(case, wanted):
        return f"case for '{name}' has the wrong kind"
    if tuple(case.params) != ctx_names(rule.ctx):
        return f"case for '{name}' must take parameters ({' '.join(ctx_names(rule.ctx))})"
    return None


def obligations(cmp_pre: Compiler, cmp: Compiler, target: Lang, source: Lang) -> list:
    """
    One obligation per source rule; rule k is compiled with cmp_pre and the
    cases before it. A constructor without a case raises MissingCase.
    """
    obls = []
    seen = Compiler(cmp_pre.cases)
    for name, rule in source:
        case = cmp.get(name) if isinstance(rule, (SortRule, TermRule)) else None
        if case is None and isinstance(rule, (SortRule, TermRule)):
            raise MissingCase(name, name)
        try:
            ctx = compile(seen, rule.ctx)
            if isinstance(rule, SortRule):
                problem = _case_matches(name, rule, case)
                obls.append(Obligation('wf_sort', name, ctx, (case.out,), problem))
            elif isinstance(rule, TermRule):
                problem = _case_matches(name, rule, case)
                obls.append(Obligation('wf_term', name, ctx, (case.out, compile(seen, rule.sort)), problem))
            elif isinstance(rule, SortEqRule):
                obls.append(Obligation('sort_eq', name, ctx, (compile(seen, rule.lhs), compile(seen, rule.rhs))))
            else:
                obls.append(Obligation('term_eq', name, ctx, (compile(seen, rule.lhs), compile(seen, rule.rhs),
                                                              compile(seen, rule.sort))))
        except MissingCase:
            raise
        except GatError as e:
            kind = {'sort': 'wf_sort', 'term': 'wf_term', 'sort_eq': 'sort_eq', 'term_eq': 'term_eq'}[rule.kind]
            obls.append(Obligation(kind, name, (), (), str(e)))
        if case is not None:
            seen = Compiler(seen.cases + ((name, case),))
    return obls


def _manual(target, obl, surface_or_proof, cfg):
    lhs, rhs, sort = obl.payload
    proof = surface_or_proof
    if not isinstance(proof, (Refl, Sym, Trans, Cong, Axiom, ConvSort)):
        proof = elaborate_proof(target, obl.target_ctx, surface_or_proof, sort, f"proof {obl.source_rule}")
    a, b, _ = check_eq(target, obl.target_ctx, proof)
    into = join(target, obl.target_ctx, lhs, a, cfg)
    out = join(target, obl.target_ctx, b, rhs, cfg)
    if into is None or out is None:
        return None
    composed = Trans(into, Trans(proof, out))
    proved = check_eq(target, obl.target_ctx, composed)
    if proved[0] != lhs or proved[1] != rhs:
        return None
    return composed


def discharge_one(obl: Obligation, target: Lang, manual_proofs: dict, cfg: RewriteConfig) -> DischargeEntry:
    name, kind = obl.source_rule, obl.kind
    if obl.problem:
        return DischargeEntry(name, kind, OPEN, message=obl.problem)
    checker = checker_for(target)
    try:
        checker.check_ctx(obl.target_ctx, [], f"{name}.ctx")
        if kind == 'wf_sort':
            checker.check_sort(obl.target_ctx, obl.payload[0], [], name)
            return DischargeEntry(name, kind, AUTO)
        if kind == 'wf_term':
            checker.check(obl.target_ctx, obl.payload[0], obl.payload[1], [], name)
            return DischargeEntry(name, kind, AUTO)
        if kind == 'sort_eq':
            left = normalize_sort(target, obl.target_ctx, obl.payload[0], cfg)
            right = normalize_sort(target, obl.target_ctx, obl.payload[1], cfg)
            if left.normal_form == right.normal_form:
                proof = Trans(left.certificate, Sym(right.certificate))
                return DischargeEntry(name, kind, AUTO, proof, left.steps_used + right.steps_used,
                                      proof_digest(proof))
            return DischargeEntry(name, kind, OPEN, message="sorts do not join")
        lhs, rhs, _sort = obl.payload
        checker.check(obl.target_ctx, lhs, _sort, [], f"{name}.lhs")
        checker.check(obl.target_ctx, rhs, _sort, [], f"{name}.rhs")
    except FuelExhausted as e:
        return DischargeEntry(name, kind, OPEN, steps=e.result.steps_used, message=str(e))
    except GatError as e:
        return DischargeEntry(name, kind, OPEN, message=str(e))

    message = "normal forms differ"
    try:
        left = normalize(target, obl.target_ctx, lhs, RewriteConfig(cfg.fuel, cfg.filter, cfg.forward_only, False))
        right = normalize(target, obl.target_ctx, rhs, RewriteConfig(cfg.fuel, cfg.filter, cfg.forward_only, False))
        steps = left.steps_used + right.steps_used
        if left.normal_form == right.normal_form:
            proof = Trans(left.certificate, Sym(right.certificate))
            if cfg.verify:
                check_eq(target, obl.target_ctx, proof)
            return DischargeEntry(name, kind, AUTO, proof, steps, proof_digest(proof))
        message = f"normal forms differ: {left.normal_form} vs {right.normal_form}"
    except FuelExhausted as e:
        steps = e.result.steps_used
        message = str(e)
    except GatError as e:
        steps = 0
        message = str(e)

    if name in manual_proofs:
        try:
            proof = _manual(target, obl, manual_proofs[name], cfg)
        except GatError as e:
            return DischargeEntry(name, kind, OPEN, steps=steps, message=f"manual proof rejected: {e}")
        if proof is not None:
            return DischargeEntry(name, kind, MANUAL, proof, steps, proof_digest(proof))
        message = "manual proof does not connect to the obligation"
    return DischargeEntry(name, kind, OPEN, steps=steps, message=message)


def discharge(obls: list, target: Lang, manual_proofs: dict | None = None,
              cfg: RewriteConfig | None = None, jobs: int = 1) -> DischargeReport:
    manual_proofs = manual_proofs or {}
    cfg = cfg or RewriteConfig()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(lambda o: discharge_one(o, target, manual_proofs, cfg), obls))
    else:
        entries = [discharge_one(o, target, manual_proofs, cfg) for o in obls]
    report = DischargeReport(entries)
    counts = report.counts()
    logger.info(f"Discharged {len(entries)} obligations: {counts[AUTO]} auto, "
                f"{counts[MANUAL]} manual, {counts[OPEN]} open")
    return report


def extend_report(base: DischargeReport, ext: DischargeReport) -> DischargeReport:
    return DischargeReport(list(base.entries) + list(ext.entries))


def report_proofs(report: DischargeReport) -> dict:
    return {e.rule: e.proof for e in report.entries if e.proof is not None and e.kind == 'term_eq'}


def embed_target(cmp: Compiler, target: Lang, bigger: Lang, report: DischargeReport | None = None,
                 obls: list | None = None):
    """
    Reuse cmp with the larger target. Returns (cmp, replayed report); every
    stored proof is re-checked under the larger language as the same object.
    Without obls there are no contexts to re-check in, and report comes back
    as given.
    """
    if not lang_subset(target, bigger):
        missing = [name for name, rule in target if bigger.get(name) != rule]
        raise NotASubset(f"target rules missing from the new target: {', '.join(missing[:5])}")
    wf = wf_lang(bigger)
    if not wf.ok:
        raise ChecksFailed(wf.diagnostics)
    if report is None or obls is None:
        return cmp, report
    ctxs = {o.source_rule: o.target_ctx for o in obls}
    for e in report.entries:
        if e.proof is None or e.rule not in ctxs:
            continue
        check_eq(bigger, ctxs[e.rule], e.proof)
    logger.info(f"Replayed {len(report.entries)} obligations under a target of {len(bigger)} rules")
    return cmp, DischargeReport(list(report.entries))


# --- Proof transport ---

def _lift(out, params, proofs):
    """Congruence over a case output, given one proof per parameter."""
    if isinstance(out, Var):
        return proofs[out.name]
    if not (free_vars(out) & set(params)):
        return Refl(out)
    return Cong(out.head, tuple(_lift(a, params, proofs) for a in out.args))


def transport_proof(cmp: Compiler, proofs_by_rule: dict, p, target: Lang | None = None):
    """Map a source proof to a proof between the compiled endpoints."""
    if isinstance(p, Refl):
        return Refl(compile(cmp, p.term))
    if isinstance(p, Sym):
        return Sym(transport_proof(cmp, proofs_by_rule, p.proof, target))
    if isinstance(p, Trans):
        return Trans(transport_proof(cmp, proofs_by_rule, p.first, target),
                     transport_proof(cmp, proofs_by_rule, p.second, target))
    if isinstance(p, Cong):
        case = cmp.get(p.head)
        if case is None:
            raise MissingCase(p.head)
        proofs = {param: transport_proof(cmp, proofs_by_rule, q, target) for param, q in zip(case.params, p.args)}
        return _lift(case.out, case.params, proofs)
    if isinstance(p, Axiom):
        gamma = {name: compile(cmp, t) for name, t in p.inst}
        if p.rule in proofs_by_rule:
            return subst_into_proof(gamma, proofs_by_rule[p.rule])
        if target is not None and isinstance(target.get(p.rule), (TermEqRule, SortEqRule)):
            return Axiom(p.rule, tuple(gamma.items()))
        raise GatError(f"no discharged proof for '{p.rule}'")
    if isinstance(p, ConvSort):
        return ConvSort(transport_proof(cmp, proofs_by_rule, p.sort_proof, target),
                        transport_proof(cmp, proofs_by_rule, p.proof, target))
    raise GatError(f"not a proof: {p!r}")


def nontriviality_check(cmp: Compiler, target: Lang, a, b, cfg: RewriteConfig | None = None,
                        ctx: Ctx = ()) -> bool | None:
    """
    True when the images of a and b stay distinct after normalization, False
    when they collapse, None when either side runs out of fuel.
    """
    cfg = cfg or RewriteConfig()
    ctx_t = compile(cmp, ctx)
    try:
        left = normalize(target, ctx_t, compile(cmp, a), cfg)
        right = normalize(target, ctx_t, compile(cmp, b), cfg)
    except FuelExhausted as e:
        logger.warning(f"Nontriviality of {a} vs {b} is inconclusive: {e}")
        return None
    distinct = left.normal_form != right.normal_form
    logger.info(f"Nontriviality of {a} vs {b}: {'distinct' if distinct else 'collapsed'}")
    return distinct
