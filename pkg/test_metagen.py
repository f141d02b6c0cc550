import pytest

from services.errors import BadSpec, ChecksFailed, NotASubstLanguage
from services.kernel import Var, Con, Sort, apply_subst
from services.elaborator import wf_lang
from services.metagen import (
    EvalCtxEntry, EvalCtxSpec, ParamSpec, gen_subst_eqs, gen_eval_ctx, param_checks, parameterize_lang,
    parameterize_compiler, thread_param,
)
from services.translate import compile
from services.sampling import rng_for, corpus_terms, subterms, random_subst
from services.corpus import discharge_pass

EVALCTX_RULES = ('Eapp_l', 'Eapp_l-plug', 'Eapp_r', 'Eapp_r-plug')
TENV = Sort('tenv')


@pytest.mark.parametrize('rule', ['lambda-subst', 'app-subst'])
def test_generated_substitution_equations_match_handwritten(ws, rule):
    assert ws.own_rules('stlc')[rule] == ws.own_rules('stlc_subst_expected')[rule]


def test_gen_subst_eqs_inserts_target_env_after_context(ws):
    stlc = ws.language('stlc')
    ((name, rule),) = gen_subst_eqs(stlc.prefix('lambda-subst'), 'lambda')
    assert name == 'lambda-subst'
    assert rule == stlc['lambda-subst']
    assert [x for x, _ in rule.ctx] == ['G', "G'", 'g', 'A', 'B', 'e']
    assert dict(rule.ctx)['g'] == Sort('sub', (Var("G'"), Var('G')))


def test_gen_subst_eqs_needs_a_substitution_calculus(ws):
    with pytest.raises(NotASubstLanguage):
        gen_subst_eqs(ws.language('nat'), 'S')


def test_generated_evaluation_contexts_match_handwritten(ws):
    generated = ws.own_rules('evalctx')
    expected = ws.own_rules('evalctx_app_expected')
    for rule in EVALCTX_RULES:
        assert generated[rule] == expected[rule], rule
    assert [n for n in generated.names() if n in EVALCTX_RULES] == list(EVALCTX_RULES)


def test_gen_eval_ctx_direct(ws):
    base = ws.language('evalctx').prefix('Eapp_l')
    rules = gen_eval_ctx(base, EvalCtxSpec((EvalCtxEntry('Eapp_l', 'app', ('E', 'e')),)))
    assert [name for name, _ in rules] == ['Eapp_l', 'Eapp_l-plug']
    assert gen_eval_ctx(base, EvalCtxSpec()) == []


def test_gen_eval_ctx_rejects_bad_entries(ws):
    base = ws.language('evalctx').prefix('Eapp_l')
    with pytest.raises(BadSpec):
        gen_eval_ctx(base, EvalCtxSpec((EvalCtxEntry('Ebad', 'app', ('E', 'E')),)))
    with pytest.raises(BadSpec):
        gen_eval_ctx(base, EvalCtxSpec((EvalCtxEntry('Ebad', 'app', ('E',)),)))
    with pytest.raises(BadSpec):
        gen_eval_ctx(base, EvalCtxSpec((EvalCtxEntry('Ebad', 'lambda', ('e', 'E')),)))
    with pytest.raises(BadSpec):
        gen_eval_ctx(ws.language('stlc'), EvalCtxSpec((EvalCtxEntry('Eapp_l', 'app', ('E', 'e')),)))


def test_parameterized_substitution_calculus_is_well_formed(ws):
    spec = ws.param_spec('subst_d')
    source = ws.languages(['tyenv', 'subst'])
    assert param_checks(spec, source).ok
    lang = parameterize_lang(spec, source)
    assert wf_lang(lang).ok
    assert lang['id'].ctx[0] == ('D', TENV)
    assert lang['emp'] == source['emp']
    assert ('D', TENV) in lang['exp_subst_ret'].ctx
    assert ws.language('subst_d') == lang


def test_parameterized_cps_pass_discharges_clean(ws):
    cp = ws.param_pass('cps_subst_d', 'cps_subst', 'subst_d', 'cps_d')
    _, report = discharge_pass(ws, cp)
    assert report.clean, report.counts()


def test_param_checks_report_problems(ws):
    source = ws.languages(['tyenv', 'subst'])
    dangling = param_checks(ParamSpec('D', TENV, frozenset({'val'})), source)
    assert not dangling.ok
    assert any(loc == 'val_subst' for loc, _ in dangling.diagnostics)
    eq_marked = param_checks(ParamSpec('D', TENV, frozenset({'id_right'})), source)
    assert any(loc == 'id_right' for loc, _ in eq_marked.diagnostics)
    unknown_sort = param_checks(ParamSpec('D', Sort('nope'), frozenset()), source)
    assert not unknown_sort.ok
    with pytest.raises(ChecksFailed):
        parameterize_lang(ParamSpec('D', TENV, frozenset({'val'})), source)


def test_thread_param(ws):
    spec = ws.param_spec('subst_d')
    t = Con('val_subst', (Var('G'), Var("G'"), Con('id', (Var('G'),)), Var('A'), Var('v')))
    threaded = thread_param(spec, t)
    assert threaded.args[0] == Var('D')
    assert threaded.args[3] == Con('id', (Var('D'), Var('G')))
    assert thread_param(spec, Con('emp')) == Con('emp')


def test_parameter_names_must_agree(ws):
    cmp = ws.compiled('cps_subst').compiler
    source, target = ws.languages(['tyenv', 'subst']), ws.languages(['tyenv', 'cps_lang'])
    spec_s = ws.param_spec('subst_d')
    other = ParamSpec('T', TENV, ws.param_spec('cps_d').marked)
    with pytest.raises(ChecksFailed):
        parameterize_compiler(spec_s, other, cmp, source, target)
    assert parameterize_compiler(ParamSpec('D', TENV), ParamSpec('D', TENV), cmp, source, target) is cmp


def test_parameterize_compiler_runs_the_checks(ws):
    cmp = ws.compiled('cps_subst').compiler
    source, target = ws.languages(['tyenv', 'subst']), ws.languages(['tyenv', 'cps_lang'])
    spec_t = ws.param_spec('cps_d')
    with pytest.raises(ChecksFailed) as info:
        parameterize_compiler(ParamSpec('D', TENV, frozenset({'val'})), spec_t, cmp, source, target)
    assert any(loc == 'val_subst' for loc, _ in info.value.diagnostics)
    with pytest.raises(ChecksFailed):
        parameterize_compiler(ParamSpec('D', Sort('nope')), ParamSpec('D', TENV), cmp, source, target)


def test_param_checks_accept_nothing_or_everything_marked(ws):
    source = ws.languages(['tyenv', 'subst'])
    assert param_checks(ParamSpec('D', TENV, frozenset()), source).ok
    everything = frozenset(name for name, rule in source
                           if rule.kind in ('sort', 'term') and name != 'tenv')
    assert param_checks(ParamSpec('D', TENV, everything), source).ok
    lang = parameterize_lang(ParamSpec('D', TENV, everything), source)
    assert wf_lang(lang).ok


def test_parameterized_compiler_commutes_with_threading(ws):
    base = ws.compiled('cps_subst')
    threaded = ws.param_pass('cps_subst_d', 'cps_subst', 'subst_d', 'cps_d').compiler
    spec_s, spec_t = ws.param_spec('subst_d'), ws.param_spec('cps_d')
    samples = corpus_terms(base.source)
    pool = [t for s in samples for t in subterms(s.term)]
    rng = rng_for(37)
    for _ in range(150):
        sample = rng.choice(samples)
        gamma = random_subst(rng, [name for name, _ in sample.ctx], pool)
        t = apply_subst(gamma, sample.term)
        assert compile(threaded, thread_param(spec_s, t)) == thread_param(spec_t, compile(base.compiler, t))
