"""
Command-line entry point.

    python gatforge.py check corpus/nat_vec
    python gatforge.py discharge corpus/cps_stlc --jobs 4
    python gatforge.py normalize stlc+bool "(app (ret (lambda bool (ret hd))) (ret true))" --sort "(exp emp bool)"

Reports go to stdout (or --json PATH), diagnostics to stderr. The exit code
is 0 exactly when there are no diagnostics and no Open obligations.
"""
import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from services import settings
from services.errors import GatError, FuelExhausted, ChecksFailed
from services.dsl import ParamDecl, SourceFile, print_source
from services.sexpr import read_one, to_plain
from services.elaborator import WfReport, wf_lang, elaborate, elaborate_sort, elaborate_ctx, infer_sort
from services.rewrite import RewriteConfig, normalize, nonduplicating
from services.proofkit import proof_to_json
from services.translate import compile, vcompose, concat_compilers, AUTO
from services.metagen import param_checks, parameterize_lang
from services.workspace import Workspace, GAT_SUFFIX, lang_decl, compiler_decl, merge_compilers
from services.corpus import load_corpus, run_corpus, run_demo, discharge_pass, pass_obligations, DEMOS
from services import reports

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1


# --- Helpers ---

def _workspace(args) -> Workspace:
    return Workspace(args.corpus).load_corpus()


def _resolve(ws: Workspace, arg: str):
    """(name, path): a declaration name, loading arg first when it is a .gat file."""
    path = arg if arg.endswith(GAT_SUFFIX) else arg + GAT_SUFFIX
    if os.path.isfile(path):
        ws.load_file(path)
        return os.path.splitext(os.path.basename(path))[0], path
    return os.path.basename(arg), None


def _lang(ws: Workspace, spec: str):
    """A language name, or several joined with '+'."""
    return ws.languages(spec.split('+'))


def _surface(text: str):
    return to_plain(read_one(text))


def _ctx(lang, text):
    if not text:
        return ()
    form = _surface(text)
    entries = form[1:] if form and form[0] == 'ctx' else form
    return elaborate_ctx(lang, [(name, sort) for name, sort in entries])


def _config(args, nondup_in=None) -> RewriteConfig:
    """nondup_in: restrict rewriting to the non-duplicating equations of this language."""
    fuel = args.fuel or settings.get_fuel()
    return RewriteConfig(fuel, nonduplicating(nondup_in) if nondup_in is not None else None)


def _emit(args, report: dict):
    text = reports.dumps_report(report)
    if args.json:
        with open(args.json, 'w', encoding='utf-8') as f:
            f.write(text + '\n')
        logger.info(f"Wrote {report['kind']} report to {args.json}")
    else:
        print(text)


def _write(path: str, decl):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(print_source(SourceFile(path, (decl,))))
    logger.info(f"Wrote {decl.name} to {path}")


def _diagnose(location, message):
    print(f"{location}: {message}", file=sys.stderr)


# --- Subcommands ---

def _checked(ws: Workspace, name: str) -> WfReport:
    report = WfReport()
    try:
        if ws.is_compiler(name):
            ws.compiled(name)
        else:
            report = wf_lang(ws.language(name))
    except GatError as e:
        report.error(e.location or name, e.message)
    logger.info(f"Checked {name}: {'ok' if report.ok else f'{len(report.diagnostics)} diagnostics'}")
    return report


def cmd_check(args) -> int:
    ws = _workspace(args)
    name, path = _resolve(ws, args.target)
    if path is not None:
        names = [d.name for d in ws.declared_in(path)]
    else:
        names = [name]
    results = [(n, _checked(ws, n)) for n in names]
    for n, report in results:
        for location, message in report.diagnostics:
            _diagnose(location, message)
    _emit(args, reports.check_report(results))
    return EXIT_OK if all(r.ok for _, r in results) else EXIT_FAILED


def cmd_elab(args) -> int:
    ws = _workspace(args)
    lang = _lang(ws, args.lang)
    ctx = _ctx(lang, args.ctx)
    sort = elaborate_sort(lang, ctx, _surface(args.sort)) if args.sort else None
    term = elaborate(lang, ctx, _surface(args.term), sort)
    _emit(args, reports.term_report('elab', lang, term, sort or infer_sort(lang, ctx, term)))
    return EXIT_OK


def cmd_normalize(args) -> int:
    ws = _workspace(args)
    lang = _lang(ws, args.lang)
    ctx = _ctx(lang, args.ctx)
    sort = elaborate_sort(lang, ctx, _surface(args.sort)) if args.sort else None
    term = elaborate(lang, ctx, _surface(args.term), sort)
    cfg = _config(args, lang if args.filter == 'nondup' else None)
    try:
        result = normalize(lang, ctx, term, cfg)
    except FuelExhausted as e:
        _diagnose('normalize', str(e))
        result = e.result
    _emit(args, reports.term_report('normalize', lang, result.normal_form,
                                    steps=result.steps_used, complete=result.complete,
                                    certificate=proof_to_json(result.certificate)
                                    if result.certificate is not None else None))
    return EXIT_OK if result.complete else EXIT_FAILED


def cmd_compile(args) -> int:
    ws = _workspace(args)
    name, _ = _resolve(ws, args.pass_name)
    cp = ws.compiled(name)
    ctx = _ctx(cp.source, args.ctx)
    sort = elaborate_sort(cp.source, ctx, _surface(args.sort)) if args.sort else None
    term = elaborate(cp.source, ctx, _surface(args.term), sort)
    sort = sort or infer_sort(cp.source, ctx, term)
    _emit(args, reports.term_report('compile', cp.target, compile(cp.compiler, term),
                                    compile(cp.compiler, sort), **{'pass': name}))
    return EXIT_OK


def cmd_obligations(args) -> int:
    ws = _workspace(args)
    name, _ = _resolve(ws, args.pass_name)
    obls = pass_obligations(ws.compiled(name))
    for o in obls:
        if o.problem:
            _diagnose(o.source_rule, o.problem)
    _emit(args, reports.obligations_report(name, obls))
    return EXIT_OK if not any(o.problem for o in obls) else EXIT_FAILED


def cmd_discharge(args) -> int:
    ws = _workspace(args)
    name, _ = _resolve(ws, args.pass_name)
    cp = ws.compiled(name)
    jobs = args.jobs or settings.get_jobs()
    _, report = discharge_pass(ws, cp, _config(args), jobs, args.proofs)
    for e in report.entries:
        if e.status != AUTO:
            _diagnose(e.rule, f"{e.status}{': ' + e.message if e.message else ''}")
    _emit(args, reports.discharge_report(name, report))
    return EXIT_OK if report.open_count == 0 else EXIT_FAILED


def cmd_compose(args) -> int:
    ws = _workspace(args)
    g_name, _ = _resolve(ws, args.g)
    f_name, _ = _resolve(ws, args.f)
    g, f = ws.compiled(g_name), ws.compiled(f_name)
    g_decl, f_decl = ws.declaration(g_name), ws.declaration(f_name)
    name = args.name or f"{g_name}_after_{f_name}"
    composed = vcompose(g.compiler, f.compiler)
    _write(args.output, compiler_decl(name, composed, ws.linearize(f_decl.sources), g_decl.target, g.target))
    return EXIT_OK


def cmd_concat(args) -> int:
    ws = _workspace(args)
    a, _ = _resolve(ws, args.a)
    b, _ = _resolve(ws, args.b)
    name = args.name or f"{a}_{b}"
    if ws.is_language(a) and ws.is_language(b):
        _write(args.output, lang_decl(name, ws.languages([a, b])))
        return EXIT_OK
    if ws.is_compiler(a) and ws.is_compiler(b):
        first, second = ws.compiled(a), ws.compiled(b)
        a_decl, b_decl = ws.declaration(a), ws.declaration(b)
        if args.strict:
            merged = concat_compilers(first.compiler, second.compiler)
        else:
            merged = merge_compilers([first.compiler, second.compiler])
        sources = ws.linearize(list(a_decl.sources) + list(b_decl.sources))
        _write(args.output, compiler_decl(name, merged, sources, b_decl.target, second.target))
        return EXIT_OK
    _diagnose('concat', f"'{a}' and '{b}' must both be languages or both be compilers")
    return EXIT_FAILED


def cmd_parameterize(args) -> int:
    ws = _workspace(args)
    spec_decl = ws.declaration(args.spec)
    if not isinstance(spec_decl, ParamDecl):
        _diagnose(args.spec, "not a @parameterize declaration")
        return EXIT_FAILED
    spec = ws.param_spec(args.spec)
    lang_name, _ = _resolve(ws, args.lang)
    lang = ws.languages(list(spec_decl.sources) + [lang_name])
    checks = param_checks(spec, lang)
    if not checks.ok:
        for location, message in checks.diagnostics:
            _diagnose(location, message)
        raise ChecksFailed(checks.diagnostics, args.spec)
    result = parameterize_lang(spec, lang)
    _write(args.output, lang_decl(args.name or f"{lang_name}_{spec.param}", result))
    return EXIT_OK


def cmd_demo(args) -> int:
    ws = _workspace(args)
    ok, details = run_demo(ws, args.demo, _config(args))
    _emit(args, reports.demo_report(args.demo, ok, details))
    if not ok:
        _diagnose(args.demo, details.get('message', 'demo failed'))
    return EXIT_OK if ok else EXIT_FAILED


def cmd_corpus(args) -> int:
    ws, entries = load_corpus(args.corpus)
    results = run_corpus(ws, entries, _config(args), args.jobs or settings.get_jobs(), args.only)
    for r in results:
        if not r.ok:
            _diagnose(r.entry.name, r.message)
    _emit(args, reports.corpus_report(results))
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAILED


# --- Parser ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', metavar='PATH', default=None, help='write the report here instead of stdout')
    common.add_argument('--fuel', type=int, default=None)
    common.add_argument('--jobs', type=int, default=None)
    common.add_argument('--corpus', default=None, help='corpus directory')
    common.add_argument('--verbose', '-v', action='store_true')

    parser = argparse.ArgumentParser(prog='gatforge', description='GAT language and compiler workbench')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('check', parents=[common], help='well-formedness of a .gat file or language')
    p.add_argument('target')
    p.set_defaults(func=cmd_check)

    for command, func, helptext in (('elab', cmd_elab, 'elaborate a surface term'),
                                    ('normalize', cmd_normalize, 'normalize a term with its certificate')):
        p = sub.add_parser(command, parents=[common], help=helptext)
        p.add_argument('lang', help="language name, or several joined with '+'")
        p.add_argument('term')
        p.add_argument('--sort', default=None)
        p.add_argument('--ctx', default=None, help='(ctx (x <sort>) ...)')
        if command == 'normalize':
            p.add_argument('--filter', choices=('all', 'nondup'), default='all')
        p.set_defaults(func=func)

    p = sub.add_parser('compile', parents=[common], help='compile a source term through a pass')
    p.add_argument('pass_name', metavar='pass')
    p.add_argument('term')
    p.add_argument('--sort', default=None)
    p.add_argument('--ctx', default=None)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser('obligations', parents=[common], help="list a pass's obligations")
    p.add_argument('pass_name', metavar='pass')
    p.set_defaults(func=cmd_obligations)

    p = sub.add_parser('discharge', parents=[common], help="discharge a pass's obligations")
    p.add_argument('pass_name', metavar='pass')
    p.add_argument('--proofs', default=None, help='directory of .gatpf manual proofs')
    p.set_defaults(func=cmd_discharge)

    p = sub.add_parser('compose', parents=[common], help='vertical composition g after f')
    p.add_argument('g')
    p.add_argument('f')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--name', default=None)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser('concat', parents=[common], help='concatenate two languages or two compilers')
    p.add_argument('a')
    p.add_argument('b')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--name', default=None)
    p.add_argument('--strict', action='store_true', help='reject shared compiler cases')
    p.set_defaults(func=cmd_concat)

    p = sub.add_parser('parameterize', parents=[common], help='thread a parameter through a language')
    p.add_argument('spec', help='a @parameterize declaration')
    p.add_argument('lang')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--name', default=None)
    p.set_defaults(func=cmd_parameterize)

    p = sub.add_parser('demo', parents=[common], help='run an end-to-end demo')
    p.add_argument('demo', choices=sorted(DEMOS))
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser('corpus', parents=[common], help='run the corpus manifest')
    p.add_argument('--only', default=None, help='run a single entry')
    p.set_defaults(func=cmd_corpus)
    return parser


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        return args.func(args)
    except ChecksFailed:
        return EXIT_FAILED
    except GatError as e:
        _diagnose(e.location or args.command, e.message)
        return EXIT_FAILED
    except OSError as e:
        _diagnose(args.command, str(e))
        return EXIT_FAILED


def main():
    load_dotenv()
    logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
    sys.exit(run_cli())


if __name__ == '__main__':
    main()
