import pytest

from services.errors import FuelExhausted
from services.kernel import Var, Con, Sort
from services.proofkit import Refl, Axiom, check_eq, axioms_used
from services.rewrite import (
    RewriteConfig, match_pattern, normalize, normalize_sort, join, partial_eval, step, nonduplicating, rules_for,
)
from services.sampling import rng_for, corpus_terms, subterms

NAT = Sort('nat')
ZERO = Con('0')
ONE = Con('S', (ZERO,))
n = Var('n')

PARTIAL_EVAL_LANGUAGES = ('nat_vec', 'stlc', 'bool', 'natv', 'evalctx', 'cps_lang', 'clo_lang')


def S(x):
    return Con('S', (x,))


def plus(a, b):
    return Con('+', (a, b))


def test_match_pattern():
    assert match_pattern(plus(ZERO, n), plus(ZERO, ONE)) == {'n': ONE}
    assert match_pattern(plus(ZERO, n), plus(ONE, ZERO)) is None
    assert match_pattern(plus(n, n), plus(ZERO, ZERO)) == {'n': ZERO}
    assert match_pattern(plus(n, n), plus(ZERO, ONE)) is None
    assert match_pattern(Sort('vec', (n,)), Sort('vec', (ONE,))) == {'n': ONE}
    assert match_pattern(Sort('vec', (n,)), Con('vec', (ONE,))) is None


def test_normalize_addition(ws):
    nat = ws.language('nat')
    t = plus(ZERO, plus(ONE, ZERO))
    result = normalize(nat, (), t, RewriteConfig(fuel=100))
    assert result.normal_form == ONE
    assert result.steps_used == 3
    assert result.complete
    assert check_eq(nat, (), result.certificate) == (t, ONE, NAT)


def test_normal_form_has_reflexive_certificate(ws):
    result = normalize(ws.language('nat'), (), S(ONE))
    assert result.normal_form == S(ONE)
    assert result.certificate == Refl(S(ONE))
    assert result.steps_used == 0


def test_fuel_exhaustion_keeps_the_partial_result(ws):
    nat = ws.language('nat')
    t = plus(ZERO, plus(ONE, ZERO))
    with pytest.raises(FuelExhausted) as info:
        normalize(nat, (), t, RewriteConfig(fuel=1))
    partial = info.value.result
    assert not partial.complete
    assert partial.steps_used == 1
    assert check_eq(nat, (), partial.certificate)[:2] == (t, partial.normal_form)


def test_fuel_must_be_positive():
    with pytest.raises(ValueError):
        RewriteConfig(fuel=0)


def test_normalize_is_deterministic(ws):
    lang = ws.language('stlc')
    for sample in corpus_terms(lang)[:20]:
        first = normalize(lang, sample.ctx, sample.term, RewriteConfig(fuel=500))
        second = normalize(lang, sample.ctx, sample.term, RewriteConfig(fuel=500))
        assert first == second


def test_normalize_sort(ws):
    lang = ws.language('nat_vec')
    result = normalize_sort(lang, (), Sort('vec', (plus(ZERO, ONE),)))
    assert result.normal_form == Sort('vec', (ONE,))


def test_join(ws):
    nat = ws.language('nat')
    ctx = (('n', NAT),)
    proof = join(nat, ctx, plus(ZERO, n), n)
    assert check_eq(nat, ctx, proof)[:2] == (plus(ZERO, n), n)
    assert check_eq(nat, (), join(nat, (), ONE, ONE))[:2] == (ONE, ONE)
    assert join(nat, (), ZERO, ONE) is None


def test_single_step(ws):
    nat = ws.language('nat')
    new, proof, name = step(nat, plus(ONE, ZERO))
    assert new == S(plus(ZERO, ZERO))
    assert name == 'plus-succ'
    assert isinstance(proof, Axiom)
    assert step(nat, ONE) is None


def test_duplicating_rule_is_filtered(ws):
    lang = ws.language('vsubst')
    rule = lang['cmp_snoc']
    keep = nonduplicating(lang)
    assert not keep('cmp_snoc', rule)
    assert keep('id_right', lang['id_right'])
    assert nonduplicating(lang) is keep
    assert 'cmp_snoc' not in [name for name, _ in rules_for(lang, RewriteConfig(filter=keep))]
    assert partial_eval(lang, rule.ctx, rule.lhs).normal_form == rule.lhs
    assert normalize(lang, rule.ctx, rule.lhs).normal_form == rule.rhs


def test_beta_survives_the_default_filter(ws):
    lang = ws.language('stlc')
    beta = lang['beta']
    assert nonduplicating(lang)('beta', beta)
    result = partial_eval(lang, beta.ctx, beta.lhs)
    assert 'beta' in axioms_used(result.certificate)
    assert result.normal_form == normalize(lang, beta.ctx, beta.lhs).normal_form


def _term_pool(ws):
    pool, seen = [], set()
    for name in PARTIAL_EVAL_LANGUAGES:
        lang = ws.language(name)
        for sample in corpus_terms(lang):
            for t in subterms(sample.term):
                if (name, sample.ctx, t) not in seen:
                    seen.add((name, sample.ctx, t))
                    pool.append((name, sample.ctx, t))
    return pool


def test_partial_evaluation_over_corpus_terms(ws):
    rng = rng_for(3)
    pool = _term_pool(ws)
    assert len(pool) >= 100
    cfg = RewriteConfig(fuel=2000)
    for name, ctx, t in rng.sample(pool, 100):
        lang = ws.language(name)
        duplicating = {rule_name for rule_name, rule in lang.term_eqs() if not nonduplicating(lang)(rule_name, rule)}
        result = partial_eval(lang, ctx, t, cfg)
        lhs, rhs, _ = check_eq(lang, ctx, result.certificate)
        assert (lhs, rhs) == (t, result.normal_form)
        assert not axioms_used(result.certificate) & duplicating
        again = partial_eval(lang, ctx, result.normal_form, cfg)
        assert again.normal_form == result.normal_form
        assert again.steps_used == 0


def test_fuel_equal_to_the_steps_needed_completes(ws):
    nat = ws.language('nat')
    result = normalize(nat, (), plus(ZERO, ZERO), RewriteConfig(fuel=1))
    assert result.normal_form == ZERO
    assert result.complete
    assert result.steps_used == 1
    t = plus(ZERO, plus(ONE, ZERO))
    assert normalize(nat, (), t, RewriteConfig(fuel=3)).complete
    with pytest.raises(FuelExhausted):
        normalize(nat, (), t, RewriteConfig(fuel=2))


def test_sort_fuel_equal_to_the_steps_needed_completes(ws):
    lang = ws.language('nat_vec')
    result = normalize_sort(lang, (), Sort('vec', (plus(ZERO, ONE),)), RewriteConfig(fuel=1))
    assert result.normal_form == Sort('vec', (ONE,))
    assert result.complete
    assert result.steps_used == 1


def test_filtered_rewriting_replays_without_the_filter(ws):
    rng = rng_for(17)
    pool = _term_pool(ws)
    for name, ctx, t in rng.sample(pool, 60):
        lang = ws.language(name)
        keep = nonduplicating(lang)
        filtered = RewriteConfig(filter=keep)
        everything = {rule_name for rule_name, _ in rules_for(lang, RewriteConfig())}
        kept = {rule_name for rule_name, _ in rules_for(lang, filtered)}
        assert kept <= everything
        assert all(keep(rule_name, lang[rule_name]) for rule_name in kept)
        current = t
        for _ in range(50):
            found = step(lang, current, filtered)
            if found is None:
                break
            new, proof, rule_name = found
            assert rule_name in everything
            assert step(lang, current) is not None
            assert check_eq(lang, ctx, proof)[:2] == (current, new)
            current = new
