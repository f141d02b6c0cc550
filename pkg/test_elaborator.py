import os

import pytest

from services import settings, elaborator
from services.errors import GatError, UnknownHead, ArityMismatch, SortMismatch, UnsolvedImplicit
from services.dsl import parse_file, EntryDecl
from services.kernel import Var, Con, Sort, Lang, SortRule, TermRule, lang_append
from services.elaborator import (
    Checker, wf_lang, checker_for, check_term, wf_sort, wf_ctx, infer_sort, elaborate, elaborate_sort, elaborate_ctx, erase,
)
from services.proofkit import Refl, check_sort_eq
from services.sampling import rng_for, corpus_terms, subterms
from services.corpus import closed_exp_sort

NAT = Sort('nat')
ZERO = Con('0')

MANIFEST = parse_file(os.path.join(settings.get_corpus_dir(), 'manifest.gat'))
LANGUAGES = [d.name for d in MANIFEST.declarations if isinstance(d, EntryDecl) and d.kind == 'language']


@pytest.mark.parametrize('name', LANGUAGES)
def test_corpus_language_is_well_formed(ws, name):
    report = wf_lang(ws.language(name))
    assert report.ok, report.diagnostics


def test_vector_append_checks_through_addition(ws):
    lang = ws.language('nat_vec')
    report = wf_lang(lang)
    assert report.ok
    used = [(loc, p) for loc, p in report.conversions if loc.startswith('app-cons')]
    assert used
    assert any(not isinstance(p, Refl) for _, p in used)
    for loc, proof in used:
        rule = lang['app-cons']
        lhs, rhs = check_sort_eq(lang, rule.ctx, proof)
        assert lhs != rhs


def test_elaboration_inserts_implicit_arguments(ws):
    lang = ws.language('nat_vec')
    t = elaborate(lang, (), ('cons', '0', 'nil'))
    assert t == Con('cons', (ZERO, ZERO, Con('nil')))
    assert infer_sort(lang, (), t) == Sort('vec', (Con('S', (ZERO,)),))
    assert erase(lang, t) == ('cons', '0', 'nil')


def test_elaboration_uses_context_names(ws):
    lang = ws.language('nat')
    ctx = elaborate_ctx(lang, [('n', 'nat')])
    assert ctx == (('n', NAT),)
    assert elaborate(lang, ctx, ('+', 'n', '0')) == Con('+', (Var('n'), ZERO))


def test_closed_program_elaborates_against_its_sort(ws):
    lang = ws.languages(['stlc', 'bool'])
    sort = closed_exp_sort(lang, 'bool')
    assert sort == Sort('exp', (Con('emp'), Con('bool')))
    program = ('app', ('ret', ('lambda', 'bool', ('ret', 'hd'))), ('ret', 'true'))
    t = elaborate(lang, (), program, sort)
    assert check_term(lang, (), t, sort).ok
    assert erase(lang, t) == program


def test_unsolved_implicit_is_reported(ws):
    with pytest.raises(UnsolvedImplicit):
        elaborate(ws.language('vsubst'), (), 'id')


def test_elaboration_errors(ws):
    nat = ws.language('nat')
    with pytest.raises(UnknownHead):
        elaborate(nat, (), ('foo', '0'))
    with pytest.raises(ArityMismatch):
        elaborate(nat, (), ('S', '0', '0'))
    with pytest.raises(GatError):
        elaborate(ws.language('nat_vec'), (), ('cons', 'nil', 'nil'))


def test_check_term_reports_instead_of_raising(ws):
    lang = ws.language('nat_vec')
    good = Con('+', (ZERO, ZERO))
    assert check_term(lang, (), good, NAT).ok
    report = check_term(lang, (), good, Sort('vec', (ZERO,)), 'sample')
    assert not report.ok
    assert report.diagnostics[0][0].startswith('sample')


def test_explicit_sort_mismatch_raises(ws):
    lang = ws.language('nat_vec')
    with pytest.raises(SortMismatch):
        checker_for(lang).check((), Con('nil'), Sort('vec', (Con('S', (ZERO,)),)), [], 'nil')


def test_sorts_and_contexts(ws):
    lang = ws.language('nat_vec')
    vec = elaborate_sort(lang, (('n', NAT),), ('vec', 'n'))
    assert vec == Sort('vec', (Var('n'),))
    assert wf_sort(lang, (('n', NAT),), vec).ok
    assert not wf_sort(lang, (), vec).ok
    assert wf_ctx(lang, (('n', NAT), ('v', vec))).ok
    assert not wf_ctx(lang, (('v', vec),)).ok


def test_rule_using_a_later_sort_is_rejected():
    lang = Lang((
        ('t', TermRule((), (), Sort('s'))),
        ('s', SortRule()),
    ))
    report = wf_lang(lang)
    assert not report.ok
    assert report.diagnostics[0][0].startswith('t')


def test_extension_checked_against_base(ws):
    base = ws.language('nat')
    ext = Lang((('double', TermRule((('n', NAT),), ('n',), NAT)),))
    assert wf_lang(ext, base).ok
    assert not wf_lang(ext).ok


SAMPLED_LANGUAGES = ('nat_vec', 'stlc', 'bool', 'natv', 'evalctx', 'cps_lang')


def _samples(ws, seed, count):
    rng = rng_for(seed)
    pool = [(name, sample) for name in SAMPLED_LANGUAGES for sample in corpus_terms(ws.language(name))]
    return rng.sample(pool, min(count, len(pool)))


def test_erase_then_elaborate_round_trips(ws):
    for name, sample in _samples(ws, 29, 80):
        lang = ws.language(name)
        surface = erase(lang, sample.term)
        t = elaborate(lang, sample.ctx, surface, sample.sort)
        assert erase(lang, t) == surface
        assert check_term(lang, sample.ctx, t, sample.sort).ok


def test_inferred_sort_checks(ws):
    for name, sample in _samples(ws, 31, 80):
        lang = ws.language(name)
        assert check_term(lang, sample.ctx, sample.term, sample.sort).ok
        for t in subterms(sample.term):
            assert check_term(lang, sample.ctx, t, infer_sort(lang, sample.ctx, t)).ok


@pytest.mark.parametrize('name, extension', [('stlc', 'bool'), ('bool', 'stlc'), ('natv', 'nat_vec')])
def test_checking_survives_language_extension(ws, name, extension):
    lang = ws.language(name)
    bigger = lang_append(lang, ws.own_rules(extension))
    for sample in corpus_terms(lang):
        assert check_term(lang, sample.ctx, sample.term, sample.sort).ok
        assert check_term(bigger, sample.ctx, sample.term, sample.sort).ok


def test_sort_cache_is_bounded(ws, monkeypatch):
    monkeypatch.setattr(elaborator, 'SORT_CACHE_SIZE', 8)
    lang = ws.language('stlc')
    checker = Checker(lang)
    seen = 0
    for sample in corpus_terms(lang):
        for t in subterms(sample.term):
            checker.infer(sample.ctx, t, [], 'term')
            seen += 1
            assert len(checker._sorts) <= 8
    assert seen > 8
