import os

import pytest

from services import settings
from services.errors import FuelExhausted, GatError
from services.dsl import parse_file, EntryDecl
from services.kernel import Var, Con
from services.elaborator import elaborate, check_term
from services.rewrite import RewriteConfig
from services.sampling import rng_for, bool_program, arith_value
from services.corpus import (
    DEMOS, DIVERGENCE_FUEL, run_entry, run_corpus, run_demo, demo_cps_cross, demo_op_bridge, demo_imp, demo_link,
    nat_value, related, _diverging_program, _bool_program_app,
)

MANIFEST = parse_file(os.path.join(settings.get_corpus_dir(), 'manifest.gat'))
ENTRY_NAMES = [d.name for d in MANIFEST.declarations if isinstance(d, EntryDecl)]


def _entry(entries, name):
    return next(e for e in entries if e.name == name)


@pytest.mark.parametrize('name', ENTRY_NAMES)
def test_manifest_entry_reaches_its_status(ws, entries, name):
    result = run_entry(ws, _entry(entries, name))
    assert result.ok, result.message


def test_manifest_order_is_preserved(entries):
    assert [e.name for e in entries] == ENTRY_NAMES
    assert _entry(entries, 'unit_collapse').path.endswith(os.path.join('fixtures', 'unit_collapse.gat'))


def test_run_corpus_only_selects_one_entry(ws, entries):
    results = run_corpus(ws, entries, only='nat')
    assert [r.entry.name for r in results] == ['nat']
    assert results[0].ok


@pytest.mark.parametrize('value', ['true', 'false'])
def test_booleans_reach_the_top_continuation(ws, value):
    result = demo_cps_cross(ws, ('ret', value))
    assert result.value == value
    assert result.agrees
    assert result.target_nf == result.expected_nf


def test_random_boolean_programs_agree_across_cps(ws):
    rng = rng_for(17)
    for _ in range(20):
        program = bool_program(rng, depth=3)
        result = demo_cps_cross(ws, program)
        assert result.agrees, program


def test_small_step_bridge_relates_values(ws):
    result = demo_op_bridge(ws, _bool_program_app(), 'bool')
    assert result.related
    assert result.source_value.head == 'false'
    assert nat_value(result.target_value.args[-1]) == 0
    assert 'beta' in result.source.axioms


def test_small_step_bridge_on_arithmetic(ws):
    rng = rng_for(19)
    for _ in range(5):
        result = demo_op_bridge(ws, ('ret', arith_value(rng)), 'natT')
        assert result.related


def test_diverging_program_runs_out_of_fuel(ws):
    with pytest.raises(FuelExhausted):
        demo_op_bridge(ws, _diverging_program(), 'bool', RewriteConfig(fuel=DIVERGENCE_FUEL))


def test_relation_between_source_and_target_values():
    G = Var('G')
    one = Con('nv', (G, Con('S', (Con('0'),))))
    zero = Con('nv', (G, Con('0')))
    assert related(Con('true', (G,)), one)
    assert related(Con('false', (G,)), zero)
    assert not related(Con('true', (G,)), zero)
    assert related(one, one)
    assert not related(Con('true', (G,)), Con('tt', (G,)))


def test_imp_skip_jumps_with_unit(ws):
    result = demo_imp(ws, 'skip')
    target = ws.language('imp_target')
    expected = elaborate(target, (), ('jmp', 'hd', 'tt'), result.sort)
    assert result.normal_form == expected


def test_imp_and_functional_code_link(ws):
    glued, sort = demo_link(ws)
    assert check_term(ws.language('imp_target'), (), glued, sort).ok


@pytest.mark.parametrize('name', sorted(DEMOS))
def test_demo_succeeds(ws, name):
    ok, details = run_demo(ws, name)
    assert ok, details


def test_unknown_demo(ws):
    with pytest.raises(GatError):
        run_demo(ws, 'nope')
