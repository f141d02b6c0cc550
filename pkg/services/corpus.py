"""
The corpus manifest runner and the end-to-end demos.

corpus/manifest.gat lists every language, pass and demo with the status it
must reach. run_corpus() checks each entry in manifest order, which is
dependency order, and reports one CorpusResult per entry.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass

from services.errors import GatError, FuelExhausted, Stuck
from services.kernel import Con, Sort, Lang
from services.sexpr import dumps, to_plain
from services.elaborator import wf_lang, checker_for, elaborate, elaborate_sort, elaborate_ctx, erase
from services.proofkit import check_eq
from services.rewrite import RewriteConfig, RewriteResult, normalize, step
from services.translate import (
    DischargeReport, compile, vcompose, obligations, discharge, nontriviality_check,
)
from services.workspace import Workspace, CompiledPass, merge_compilers, GAT_SUFFIX

logger = logging.getLogger(__name__)

DIVERGENCE_FUEL = 300


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    kind: str               # 'language' | 'pass' | 'param-pass' | 'demo'
    path: str | None
    expected: tuple         # each item an atom or an (atom, args...) tuple
    options: tuple = ()

    def option(self, key, default=None):
        for opt in self.options:
            if isinstance(opt, tuple) and opt and opt[0] == key:
                return tuple(opt[1:])
        return default


@dataclass(frozen=True)
class CorpusResult:
    entry: CorpusEntry
    ok: bool
    message: str = ''


def load_corpus(root: str | None = None) -> tuple:
    """(workspace, entries): every corpus file loaded, entries in manifest order."""
    ws = Workspace(root).load_corpus()
    entries = []
    for decl, _path in ws.entries:
        options = to_plain(tuple(decl.options))
        path = None
        fixture = decl.option('file')
        if fixture:
            path = os.path.join(ws.root, str(fixture[0]) + GAT_SUFFIX)
            ws.load_file(path)
        elif decl.kind in ('language', 'pass'):
            path = ws.path_of(decl.name)
        expected = to_plain(decl.option('expect', ()))
        entries.append(CorpusEntry(decl.name, decl.kind, path, expected, options))
    logger.info(f"Loaded corpus manifest with {len(entries)} entries")
    return ws, entries


# --- Passes ---

def pass_obligations(cp: CompiledPass) -> list:
    return obligations(cp.pre, cp.cases, cp.target, cp.source_ext)


def discharge_pass(ws: Workspace, cp: CompiledPass, cfg: RewriteConfig | None = None, jobs: int = 1,
                   proof_dir: str | None = None) -> tuple:
    """(obligations, DischargeReport) for one pass, with its manual proofs."""
    obls = pass_obligations(cp)
    return obls, discharge(obls, cp.target, ws.proofs_for(cp.name, proof_dir), cfg, jobs)


def _status_problems(expected: tuple, report: DischargeReport) -> list:
    problems = []
    for item in expected:
        head, args = (item[0], item[1:]) if isinstance(item, tuple) else (item, ())
        if head == 'clean' and not report.clean:
            problems.append(f"expected clean, got {report.counts()} (open: {', '.join(report.open_rules)}; "
                            f"manual: {', '.join(report.manual_rules)})")
        elif head == 'manual':
            if report.open_count or set(report.manual_rules) != set(args):
                problems.append(f"expected manual {list(args)}, got manual {list(report.manual_rules)} "
                                f"and open {list(report.open_rules)}")
        elif head == 'manual-permitted':
            extra = set(report.manual_rules) - set(args)
            if report.open_count or extra:
                problems.append(f"unexpected manual {sorted(extra)} or open {list(report.open_rules)}")
        elif head == 'open' and report.open_count != int(args[0]):
            problems.append(f"expected {args[0]} open, got {report.open_count}: {list(report.open_rules)}")
    return problems


def _probe(cp: CompiledPass, probe: tuple, cfg: RewriteConfig) -> bool | None:
    ctx_form, sort_form, a, b = probe
    ctx = elaborate_ctx(cp.source, [(x, s) for x, s in ctx_form[1:]], 'probe.ctx')
    sort = elaborate_sort(cp.source, ctx, sort_form, 'probe.sort')
    left = elaborate(cp.source, ctx, a, sort, 'probe.lhs')
    right = elaborate(cp.source, ctx, b, sort, 'probe.rhs')
    return nontriviality_check(cp.compiler, cp.target, left, right, cfg, ctx)


def _check_pass(ws, entry: CorpusEntry, cp: CompiledPass, cfg, jobs) -> CorpusResult:
    _, report = discharge_pass(ws, cp, cfg, jobs)
    problems = _status_problems(entry.expected, report)
    probe = entry.option('probe')
    if probe:
        distinct = _probe(cp, probe, cfg)
        collapses = 'nontrivial-fails' in entry.expected
        if distinct is None:
            problems.append("nontriviality check ran out of fuel")
        elif distinct == collapses:
            problems.append("probe collapsed" if not distinct else "probe expected to collapse stayed distinct")
    counts = report.counts()
    summary = f"{counts['Auto']} auto, {counts['Manual']} manual, {counts['Open']} open"
    return CorpusResult(entry, not problems, '; '.join(problems) or summary)


def run_entry(ws: Workspace, entry: CorpusEntry, cfg: RewriteConfig | None = None, jobs: int = 1) -> CorpusResult:
    cfg = cfg or RewriteConfig()
    try:
        if entry.kind == 'language':
            report = wf_lang(ws.language(entry.name))
            message = '; '.join(f"{loc}: {msg}" for loc, msg in report.diagnostics[:3])
            return CorpusResult(entry, report.ok, message or f"{len(ws.language(entry.name))} rules")
        if entry.kind == 'pass':
            return _check_pass(ws, entry, ws.compiled(entry.name), cfg, jobs)
        if entry.kind == 'param-pass':
            cp = ws.param_pass(entry.name, entry.option('compiler')[0], entry.option('source')[0],
                               entry.option('target')[0])
            return _check_pass(ws, entry, cp, cfg, jobs)
        if entry.kind == 'demo':
            ok, details = run_demo(ws, entry.name, cfg)
            return CorpusResult(entry, ok, details.get('message', ''))
    except GatError as e:
        logger.warning(f"Corpus entry {entry.name} failed: {e}")
        return CorpusResult(entry, False, str(e))
    return CorpusResult(entry, False, f"unknown entry kind '{entry.kind}'")


def run_corpus(ws: Workspace, entries: list, cfg: RewriteConfig | None = None, jobs: int = 1,
               only: str | None = None) -> list:
    results = []
    for entry in entries:
        if only and entry.name != only:
            continue
        result = run_entry(ws, entry, cfg, jobs)
        logger.info(f"{entry.kind} {entry.name}: {'ok' if result.ok else 'FAILED'} {result.message}")
        results.append(result)
    return results


# --- Helpers shared by the demos ---

def surface(lang: Lang, t) -> str:
    return dumps(erase(lang, t))


def nat_value(t):
    """The number a closed 0/S numeral denotes, or None."""
    count = 0
    while isinstance(t, Con) and t.head == 'S':
        t, count = t.args[-1], count + 1
    return count if isinstance(t, Con) and t.head == '0' else None


def ground_value(v) -> bool:
    if not isinstance(v, Con):
        return False
    if v.head in ('true', 'false'):
        return True
    return v.head == 'nv' and nat_value(v.args[-1]) is not None


def related(source_value, target_value) -> bool:
    """true ~ nv 1, false ~ nv 0, nv n ~ nv n."""
    if not (isinstance(target_value, Con) and target_value.head == 'nv'):
        return False
    n = nat_value(target_value.args[-1])
    if source_value.head == 'true':
        return n == 1
    if source_value.head == 'false':
        return n == 0
    return source_value.head == 'nv' and nat_value(source_value.args[-1]) == n


def _returned(t):
    """The value v of `ret v`, or None."""
    if isinstance(t, Con) and t.head == 'ret':
        return t.args[-1]
    return None


def _jumped(t):
    """The value v of `jmp hd v`, or None."""
    if isinstance(t, Con) and t.head == 'jmp' and isinstance(t.args[2], Con) and t.args[2].head == 'hd':
        return t.args[-1]
    return None


def closed_exp_sort(lang: Lang, ty) -> Sort:
    return elaborate_sort(lang, (), ('exp', 'emp', ty), 'program.sort')


# --- Cross-language correctness for booleans ---

@dataclass(frozen=True)
class CrossResult:
    value: str
    source_nf: object
    target_nf: object
    expected_nf: object
    agrees: bool


def cps_bool_setup(ws: Workspace) -> tuple:
    source = ws.languages(['stlc', 'bool'])
    cmp = merge_compilers([ws.compiled('cps_stlc').compiler, ws.compiled('cps_bool').compiler])
    return source, cmp, ws.language('cps_nat')


def demo_cps_cross(ws: Workspace, program, cfg: RewriteConfig | None = None) -> CrossResult:
    """
    Run a closed boolean program on both sides of the CPS pass. The source
    must normalize to ret b; the compiled program and the compiled ret b must
    both normalize to a jump to the top continuation with nv 1 or nv 0.
    """
    source, cmp, target = cps_bool_setup(ws)
    sort = closed_exp_sort(source, 'bool')
    term = elaborate(source, (), program, sort, 'program')
    source_nf = normalize(source, (), term, cfg).normal_form
    value = _returned(source_nf)
    if value is None or value.head not in ('true', 'false'):
        raise Stuck(f"program does not reach a boolean: {surface(source, source_nf)}")
    sort_t = compile(cmp, sort)
    target_nf = normalize(target, (), compile(cmp, term), cfg).normal_form
    value_nf = normalize(target, (), compile(cmp, source_nf), cfg).normal_form
    number = ('S', '0') if value.head == 'true' else '0'
    expected = elaborate(target, (), ('jmp', 'hd', ('nv', number)), sort_t, 'expected')
    agrees = target_nf == value_nf == expected
    logger.info(f"Cross-language run of {dumps(program)}: {value.head}, target {'agrees' if agrees else 'differs'}")
    return CrossResult(value.head, source_nf, target_nf, expected, agrees)


# --- Small-step bridge ---

@dataclass(frozen=True)
class Run:
    final: object
    axioms: tuple

    @property
    def steps(self) -> int:
        return len(self.axioms)


@dataclass(frozen=True)
class BridgeResult:
    source: Run
    target: Run
    source_value: object
    target_value: object
    related: bool


def op_bridge_setup(ws: Workspace) -> tuple:
    source = ws.languages(['stlc', 'bool', 'natv', 'rec'])
    cmp = merge_compilers([ws.compiled(n).compiler for n in ('cps_rec', 'cps_bool', 'cps_natv')])
    return source, cmp, ws.languages(['cont_rec', 'cps_nat'])


def run_steps(lang: Lang, t, done, cfg: RewriteConfig | None = None) -> Run:
    """Step t with the oriented equations of lang until done(t); every step is re-checked."""
    cfg = cfg or RewriteConfig()
    axioms = []
    while not done(t):
        if len(axioms) >= cfg.fuel:
            raise FuelExhausted(RewriteResult(t, None, len(axioms), False))
        found = step(lang, t, cfg)
        if found is None:
            raise Stuck(f"no rule applies to {t}")
        new, proof, name = found
        lhs, rhs, _ = check_eq(lang, (), proof)
        if lhs != t or rhs != new:
            raise GatError(f"step by {name} does not prove its own endpoints")
        t = new
        axioms.append(name)
    return Run(t, tuple(axioms))


def demo_op_bridge(ws: Workspace, program, ty, cfg: RewriteConfig | None = None) -> BridgeResult:
    """
    Small-step both sides: the source until it returns a ground value, the
    compiled program until it jumps to the top continuation with one. The two
    values must be related. Diverging programs raise FuelExhausted.
    """
    source, cmp, target = op_bridge_setup(ws)
    sort = closed_exp_sort(source, ty)
    term = elaborate(source, (), program, sort, 'program')
    src = run_steps(source, term, lambda t: ground_value(_returned(t)), cfg)
    tgt = run_steps(target, compile(cmp, term), lambda t: ground_value(_jumped(t)), cfg)
    source_value, target_value = _returned(src.final), _jumped(tgt.final)
    ok = related(source_value, target_value)
    logger.info(f"Bridge run: {src.steps} source steps, {tgt.steps} target steps, "
                f"{'related' if ok else 'unrelated'}")
    return BridgeResult(src, tgt, source_value, target_value, ok)


# --- Vertical composition down to closures ---

@dataclass(frozen=True)
class PipelineResult:
    composed: object
    sequential: object
    sort: Sort
    equal: bool
    wf: bool


def pipeline_setup(ws: Workspace) -> tuple:
    source = ws.languages(['state', 'rec', 'bool'])
    cps_full = merge_compilers([ws.compiled(n).compiler for n in ('cps_state', 'cps_rec', 'cps_bool')])
    cc_full = merge_compilers([ws.compiled(n).compiler for n in ('cc_rec', 'cc_heap')])
    return source, cps_full, cc_full, ws.language('clo_full')


def demo_pipeline(ws: Workspace, program, ty='bool') -> PipelineResult:
    source, cps_full, cc_full, target = pipeline_setup(ws)
    sort = closed_exp_sort(source, ty)
    term = elaborate(source, (), program, sort, 'program')
    composed = compile(vcompose(cc_full, cps_full), term)
    sequential = compile(cc_full, compile(cps_full, term))
    sort_t = compile(cc_full, compile(cps_full, sort))
    wf = True
    try:
        checker_for(target).check((), composed, sort_t, [], 'pipeline')
    except GatError as e:
        logger.warning(f"Pipeline output is not well-formed: {e}")
        wf = False
    return PipelineResult(composed, sequential, sort_t, composed == sequential, wf)


# --- IMP ---

@dataclass(frozen=True)
class ImpResult:
    compiled: object
    normal_form: object
    sort: Sort


def demo_imp(ws: Workspace, stmt, cfg: RewriteConfig | None = None) -> ImpResult:
    cp = ws.compiled('imp_pass')
    sort = Sort('stmt')
    term = elaborate(cp.source, (), stmt, sort, 'stmt')
    compiled = compile(cp.compiler, term)
    sort_t = compile(cp.compiler, sort)
    checker_for(cp.target).check((), compiled, sort_t, [], 'imp')
    nf = normalize(cp.target, (), compiled, cfg).normal_form
    return ImpResult(compiled, nf, sort_t)


def link_glue(imp_block, fun_block):
    """Run the IMP block, then the functional block, under the outer continuation."""
    return ('blk_subst',
            ('snoc', 'wkn',
             ('cont', 'unit', ('blk_subst', ('snoc', ('cmp', 'wkn', 'wkn'), ('val_subst', 'wkn', 'hd')), fun_block))),
            imp_block)


def demo_link(ws: Workspace, stmt=('assign', '0', ('anum', ('S', '0'))), program=('ret', 'tt')):
    """Glue a compiled IMP statement and a compiled state-language term; the result must check."""
    imp = ws.compiled('imp_pass')
    state = ws.compiled('cps_state')
    target = ws.language('imp_target')
    s = compile(imp.compiler, elaborate(imp.source, (), stmt, Sort('stmt'), 'stmt'))
    f_sort = closed_exp_sort(state.source, 'unit')
    f = compile(state.compiler, elaborate(state.source, (), program, f_sort, 'program'))
    sort_t = compile(imp.compiler, Sort('stmt'))
    glued = elaborate(target, (), link_glue(erase(target, s), erase(target, f)), sort_t, 'link')
    checker_for(target).check((), glued, sort_t, [], 'link')
    return glued, sort_t


# --- Canned runs ---

def _bool_program_app():
    return ('app', ('ret', ('lambda', 'bool', ('if', 'hd', ('ret', 'false'), ('ret', 'true')))), ('ret', 'true'))


def _diverging_program():
    body = ('app', ('ret', ('val_subst', 'wkn', 'hd')), ('ret', 'hd'))
    return ('app', ('ret', ('fix', 'bool', 'bool', body)), ('ret', 'false'))


def _cross(ws, cfg):
    _, _, target = cps_bool_setup(ws)
    runs = {}
    ok = True
    for label, program, value in (('true', ('ret', 'true'), 'true'), ('false', ('ret', 'false'), 'false'),
                                  ('app', _bool_program_app(), 'false')):
        result = demo_cps_cross(ws, program, cfg)
        runs[label] = {'value': result.value, 'target': surface(target, result.target_nf), 'agrees': result.agrees}
        ok = ok and result.agrees and result.value == value
    return ok, {'runs': runs}


def _bridge(ws, cfg):
    runs = {}
    ok = True
    for label, program, ty in (('if', ('if', 'true', ('ret', ('nv', '0')), ('ret', ('nv', ('S', '0')))), 'natT'),
                               ('arith', ('ret', ('vplus', ('nv', ('S', '0')), ('nv', ('S', ('S', '0'))))), 'natT'),
                               ('app', _bool_program_app(), 'bool')):
        result = demo_op_bridge(ws, program, ty, cfg)
        runs[label] = {'source_steps': list(result.source.axioms), 'target_steps': result.target.steps,
                       'related': result.related}
        ok = ok and result.related
    try:
        demo_op_bridge(ws, _diverging_program(), 'bool', RewriteConfig(fuel=DIVERGENCE_FUEL))
        runs['diverging'] = {'fuel_exhausted': False}
        ok = False
    except FuelExhausted as e:
        runs['diverging'] = {'fuel_exhausted': True, 'steps': e.result.steps_used}
    return ok, {'runs': runs}


def _pipeline(ws, cfg):
    runs = {}
    ok = True
    for label, program in (('ret', ('ret', 'true')), ('app', _bool_program_app())):
        result = demo_pipeline(ws, program)
        runs[label] = {'equal': result.equal, 'wf': result.wf}
        ok = ok and result.equal and result.wf
    return ok, {'runs': runs}


def _imp(ws, cfg):
    result = demo_imp(ws, 'skip', cfg)
    target = ws.language('imp_target')
    expected = elaborate(target, (), ('jmp', 'hd', 'tt'), result.sort, 'expected')
    return result.normal_form == expected, {'normal_form': surface(target, result.normal_form)}


def _link(ws, cfg):
    glued, _ = demo_link(ws)
    return True, {'linked': surface(ws.language('imp_target'), glued)}


DEMOS = {
    'cps_cross': _cross,
    'op_bridge': _bridge,
    'pipeline': _pipeline,
    'imp': _imp,
    'link': _link,
}


def run_demo(ws: Workspace, name: str, cfg: RewriteConfig | None = None) -> tuple:
    """(ok, details) for one named demo with its built-in inputs."""
    runner = DEMOS.get(name)
    if runner is None:
        raise GatError(f"unknown demo '{name}' (known: {', '.join(DEMOS)})")
    try:
        ok, details = runner(ws, cfg or RewriteConfig())
    except (Stuck, FuelExhausted) as e:
        return False, {'message': str(e)}
    details.setdefault('message', 'ok' if ok else 'demo check failed')
    return ok, details
