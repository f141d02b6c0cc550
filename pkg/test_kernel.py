import pytest

from services.errors import DuplicateName
from services.kernel import (
    Var, Con, Sort, Lang, SortRule, TermRule, TermEqRule, EMPTY_LANG,
    apply_subst, compose_subst, free_vars, var_occurrences, heads, term_size,
    lang_append, lang_subset, ctx_lookup,
)
from services.sampling import rng_for

NAT = Sort('nat')
ZERO = Con('0')
n, m = Var('n'), Var('m')


def S(x):
    return Con('S', (x,))


def plus(a, b):
    return Con('+', (a, b))


NAT_LANG = Lang((
    ('nat', SortRule()),
    ('0', TermRule((), (), NAT)),
    ('S', TermRule((('n', NAT),), ('n',), NAT)),
    ('+', TermRule((('n', NAT), ('m', NAT)), ('n', 'm'), NAT)),
    ('plus-zero', TermEqRule((('n', NAT),), plus(ZERO, n), n, NAT)),
    ('plus-succ', TermEqRule((('n', NAT), ('m', NAT)), plus(S(n), m), S(plus(n, m)), NAT)),
))


def test_corpus_nat_matches_hand_built_language(ws):
    assert ws.language('nat') == NAT_LANG
    assert len(ws.language('nat')) == 6


def test_duplicate_rule_name_rejected():
    with pytest.raises(DuplicateName):
        Lang((('nat', SortRule()), ('nat', SortRule())))


def test_lang_lookup_and_order():
    assert NAT_LANG.names()[:2] == ('nat', '0')
    assert NAT_LANG.position('+') == 3
    assert 'S' in NAT_LANG and 'vec' not in NAT_LANG
    assert NAT_LANG.get('vec') is None
    assert [name for name, _ in NAT_LANG.term_eqs()] == ['plus-zero', 'plus-succ']
    assert NAT_LANG.sort_eqs() == []
    assert NAT_LANG.prefix('+') == Lang(NAT_LANG.rules[:3])
    assert len(EMPTY_LANG) == 0


def test_apply_subst_replaces_only_mapped_vars():
    t = plus(n, S(m))
    assert apply_subst({'n': ZERO}, t) == plus(ZERO, S(m))
    assert apply_subst({}, t) is t
    assert apply_subst({'k': ZERO}, t) == t


def test_apply_subst_into_ctx_and_sort():
    vec = Sort('vec', (n,))
    assert apply_subst({'n': ZERO}, vec) == Sort('vec', (ZERO,))
    ctx = (('v', vec),)
    assert apply_subst({'n': S(ZERO)}, ctx) == (('v', Sort('vec', (S(ZERO),))),)
    assert ctx_lookup(ctx, 'v') == vec
    assert ctx_lookup(ctx, 'w') is None


def test_compose_subst_applies_outer_after_inner():
    composed = compose_subst({'m': ZERO}, {'n': S(m)})
    assert composed == {'n': S(ZERO), 'm': ZERO}
    t = plus(n, m)
    assert apply_subst(composed, t) == apply_subst({'m': ZERO}, apply_subst({'n': S(m)}, t))


def test_term_queries():
    t = plus(S(n), plus(n, m))
    assert free_vars(t) == {'n', 'm'}
    assert var_occurrences(t) == {'n': 2, 'm': 1}
    assert heads(t) == {'+', 'S'}
    assert term_size(t) == 6
    assert heads(NAT_LANG['plus-succ']) == {'nat', '+', 'S'}


def test_structural_equality_and_hashing():
    assert plus(n, ZERO) == plus(Var('n'), Con('0', ()))
    assert len({plus(n, ZERO), plus(n, ZERO)}) == 1
    assert Con('nat') != Sort('nat')


def test_lang_append_and_subset():
    base = NAT_LANG.prefix('plus-zero')
    ext = Lang(NAT_LANG.rules[4:])
    assert lang_append(base, ext) == NAT_LANG
    assert lang_subset(base, NAT_LANG)
    assert not lang_subset(NAT_LANG, base)
    with pytest.raises(DuplicateName):
        lang_append(NAT_LANG, base)


def _random_nat(rng, depth, names):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([ZERO, *(Var(x) for x in names)])
    if rng.random() < 0.5:
        return S(_random_nat(rng, depth - 1, names))
    return plus(_random_nat(rng, depth - 1, names), _random_nat(rng, depth - 1, names))


def test_composed_substitution_on_random_terms():
    rng = rng_for(23)
    names = ('n', 'm', 'k')
    for _ in range(200):
        t = _random_nat(rng, 4, names)
        outer = {x: _random_nat(rng, 2, names) for x in rng.sample(names, rng.randint(0, 3))}
        inner = {x: _random_nat(rng, 2, names) for x in rng.sample(names, rng.randint(0, 3))}
        assert apply_subst(compose_subst(outer, inner), t) == apply_subst(outer, apply_subst(inner, t))


def test_subset_ignores_order_and_is_transitive(ws):
    reordered = Lang(tuple(reversed(NAT_LANG.rules)))
    assert lang_subset(reordered, NAT_LANG) and lang_subset(NAT_LANG, reordered)
    small = ws.languages(['subst', 'bool'])
    big = ws.languages(['subst', 'stlc', 'bool'])
    bigger = lang_append(big, ws.own_rules('natv'))
    assert lang_subset(small, big)
    assert lang_subset(big, bigger)
    assert lang_subset(small, bigger)
    assert not lang_subset(big, small)
