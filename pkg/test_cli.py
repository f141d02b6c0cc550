import json
import os

import pytest

from gatforge import run_cli, EXIT_OK, EXIT_FAILED
from services import settings
from services.dsl import parse_file, LangDecl, CompilerDecl
from services.elaborator import wf_lang
from services.reports import strip_volatile
from services.workspace import Workspace

CORPUS = settings.get_corpus_dir()


def _path(*parts):
    return os.path.join(CORPUS, *parts)


def _report(capsys):
    return json.loads(capsys.readouterr().out)


def test_check_well_formed_file(capsys):
    assert run_cli(['check', _path('nat_vec')]) == EXIT_OK
    report = _report(capsys)
    assert report['kind'] == 'check'
    assert report['ok']
    assert [entry['language'] for entry in report['languages']] == ['nat_vec']


def test_check_unknown_name_fails(capsys):
    assert run_cli(['check', 'no_such_language']) == EXIT_FAILED
    assert 'no_such_language' in capsys.readouterr().err


def test_check_report_is_deterministic(tmp_path):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    assert run_cli(['check', _path('nat_vec'), '--json', str(first)]) == EXIT_OK
    assert run_cli(['check', _path('nat_vec'), '--json', str(second)]) == EXIT_OK
    a = json.loads(first.read_text(encoding='utf-8'))
    b = json.loads(second.read_text(encoding='utf-8'))
    assert 'timestamp' in a
    assert strip_volatile(a) == strip_volatile(b)


def test_discharge_clean_pass(capsys):
    assert run_cli(['discharge', 'cps_subst']) == EXIT_OK
    report = _report(capsys)
    assert report['clean']
    assert report['pass'] == 'cps_subst'


def test_discharge_broken_pass_exits_nonzero(capsys):
    assert run_cli(['discharge', _path('fixtures', 'cps_bool_broken')]) == EXIT_FAILED
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report['counts']['Open'] == 1
    assert 'if_false' in captured.err


def test_obligations_listing(capsys):
    assert run_cli(['obligations', 'cps_stlc']) == EXIT_OK
    report = _report(capsys)
    rules = [o['rule'] for o in report['obligations']]
    assert report['count'] == len(rules)
    assert 'beta' in rules


def test_normalize_prints_certificate(capsys):
    assert run_cli(['normalize', 'nat', '(+ 0 (+ (S 0) 0))']) == EXIT_OK
    report = _report(capsys)
    assert report['surface'] == '(S 0)'
    assert report['steps'] == 3
    assert report['complete']
    assert report['certificate'] is not None


def test_normalize_out_of_fuel(capsys):
    assert run_cli(['normalize', 'nat', '(+ 0 (+ (S 0) 0))', '--fuel', '1']) == EXIT_FAILED
    captured = capsys.readouterr()
    assert not json.loads(captured.out)['complete']
    assert captured.err


def test_elaboration_error_exits_nonzero(capsys):
    assert run_cli(['elab', 'nat', '(S no_such_constructor)']) == EXIT_FAILED
    assert capsys.readouterr().err


def test_compile_boolean(capsys):
    assert run_cli(['compile', 'cps_bool', '(ret true)', '--sort', '(exp G bool)', '--ctx', '(ctx (G env))']) == EXIT_OK
    report = _report(capsys)
    assert report['pass'] == 'cps_bool'
    assert 'S' in report['surface']


def test_compose_writes_a_compiler(tmp_path):
    out = tmp_path / 'composed.gat'
    assert run_cli(['compose', 'cc', 'cps_stlc', '-o', str(out)]) == EXIT_OK
    (decl,) = parse_file(str(out)).declarations
    assert isinstance(decl, CompilerDecl)
    assert decl.name == 'cc_after_cps_stlc'
    assert decl.target == 'clo_lang'
    assert 'lambda' in [case.rule for case in decl.cases]


def test_concat_languages(ws, tmp_path):
    out = tmp_path / 'natbool.gat'
    assert run_cli(['concat', 'nat', 'bool', '-o', str(out), '--name', 'natbool']) == EXIT_OK
    (decl,) = parse_file(str(out)).declarations
    assert isinstance(decl, LangDecl)
    assert [item.name for item in decl.items] == list(ws.languages(['nat', 'bool']).names())


def test_concat_mixed_kinds_fails(tmp_path, capsys):
    assert run_cli(['concat', 'nat', 'cps_bool', '-o', str(tmp_path / 'x.gat')]) == EXIT_FAILED
    assert 'both be languages' in capsys.readouterr().err


def test_parameterize_writes_a_well_formed_language(ws, tmp_path):
    out = tmp_path / 'subst_D.gat'
    assert run_cli(['parameterize', 'subst_d', 'subst', '-o', str(out)]) == EXIT_OK
    fresh = Workspace(str(tmp_path))
    fresh.load_file(str(out))
    lang = fresh.language('subst_D')
    assert wf_lang(lang).ok
    assert lang.names() == ws.language('subst_d').names()


def test_parameterize_needs_a_param_declaration(tmp_path, capsys):
    assert run_cli(['parameterize', 'nat', 'subst', '-o', str(tmp_path / 'x.gat')]) == EXIT_FAILED
    assert 'parameterize' in capsys.readouterr().err


def test_corpus_only(capsys):
    assert run_cli(['corpus', '--only', 'nat']) == EXIT_OK
    report = _report(capsys)
    assert [entry['name'] for entry in report['entries']] == ['nat']


def test_demo_report(capsys):
    assert run_cli(['demo', 'cps_cross']) == EXIT_OK
    report = _report(capsys)
    assert report['demo'] == 'cps_cross'
    assert report['ok']


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        run_cli(['frobnicate'])
