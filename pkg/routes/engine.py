import logging
import threading

from flask import Blueprint, request, jsonify, current_app

from services.errors import GatError, FuelExhausted
from services.sexpr import read_one, to_plain
from services.dsl import LangDecl, ParamDecl, CompilerDecl
from services.elaborator import WfReport, wf_lang, elaborate, elaborate_sort, elaborate_ctx, infer_sort
from services.rewrite import RewriteConfig, normalize, nonduplicating
from services.translate import compile
from services.workspace import Workspace
from services.corpus import discharge_pass
from services import reports, settings

engine_bp = Blueprint('engine', __name__)
logger = logging.getLogger(__name__)

MAX_FUEL = 100_000
_lock = threading.Lock()

# --- Helpers ---


def workspace() -> Workspace:
    """The corpus workspace shared by every request of this app."""
    with _lock:
        ws = current_app.extensions.get('gatforge')
        if ws is None:
            ws = Workspace(current_app.config['GATFORGE_CORPUS']).load_corpus()
            current_app.extensions['gatforge'] = ws
            logger.info(f"Loaded corpus from {ws.root}")
        return ws


def _surface(data, key, required=True):
    text = data.get(key)
    if text is None:
        if required:
            raise GatError(f"'{key}' is required")
        return None
    if not isinstance(text, str):
        raise GatError(f"'{key}' must be a string")
    return to_plain(read_one(text))


def _ctx(lang, data):
    form = _surface(data, 'ctx', required=False)
    if not form:
        return ()
    entries = form[1:] if form[0] == 'ctx' else form
    return elaborate_ctx(lang, [(name, sort) for name, sort in entries])


def _fuel(data) -> int:
    fuel = data.get('fuel', settings.get_fuel())
    if not isinstance(fuel, int) or not 1 <= fuel <= MAX_FUEL:
        raise GatError(f"fuel must be an integer between 1 and {MAX_FUEL}")
    return fuel


def _error(e: GatError):
    logger.warning(f"Rejected request to {request.path}: {e}")
    return jsonify({'error': str(e)}), 400


# --- Engine API ---

@engine_bp.route('/api/check', methods=['POST'])
def check_api():
    data = request.json or {}
    source = data.get('source')
    if not isinstance(source, str) or not source.strip():
        return jsonify({'error': "'source' is required"}), 400
    ws = Workspace(current_app.config['GATFORGE_CORPUS']).load_corpus()
    results = []
    try:
        sf = ws.load_text(source, 'request.gat')
    except GatError as e:
        return _error(e)
    for decl in sf.declarations:
        if not isinstance(decl, (LangDecl, ParamDecl, CompilerDecl)):
            continue
        report = WfReport()
        try:
            if isinstance(decl, CompilerDecl):
                ws.compiled(decl.name)
            else:
                report = wf_lang(ws.language(decl.name))
        except GatError as e:
            report.error(e.location or decl.name, e.message)
        results.append((decl.name, report))
    return jsonify(reports.check_report(results))


@engine_bp.route('/api/normalize', methods=['POST'])
def normalize_api():
    data = request.json or {}
    try:
        names = data.get('lang')
        if not isinstance(names, str) or not names:
            raise GatError("'lang' is required")
        lang = workspace().languages(names.split('+'))
        ctx = _ctx(lang, data)
        sort_form = _surface(data, 'sort', required=False)
        sort = elaborate_sort(lang, ctx, sort_form) if sort_form else None
        term = elaborate(lang, ctx, _surface(data, 'term'), sort)
        cfg = RewriteConfig(_fuel(data), nonduplicating(lang) if data.get('filter') == 'nondup' else None)
        try:
            result = normalize(lang, ctx, term, cfg)
        except FuelExhausted as e:
            result = e.result
    except GatError as e:
        return _error(e)
    return jsonify(reports.term_report('normalize', lang, result.normal_form,
                                       steps=result.steps_used, complete=result.complete))


@engine_bp.route('/api/compile', methods=['POST'])
def compile_api():
    data = request.json or {}
    try:
        name = data.get('pass')
        if not isinstance(name, str) or not name:
            raise GatError("'pass' is required")
        cp = workspace().compiled(name)
        ctx = _ctx(cp.source, data)
        sort_form = _surface(data, 'sort', required=False)
        sort = elaborate_sort(cp.source, ctx, sort_form) if sort_form else None
        term = elaborate(cp.source, ctx, _surface(data, 'term'), sort)
        sort = sort or infer_sort(cp.source, ctx, term)
        compiled, compiled_sort = compile(cp.compiler, term), compile(cp.compiler, sort)
    except GatError as e:
        return _error(e)
    return jsonify(reports.term_report('compile', cp.target, compiled, compiled_sort, **{'pass': name}))


@engine_bp.route('/api/discharge/<pass_name>')
def discharge_api(pass_name):
    ws = workspace()
    try:
        _, report = discharge_pass(ws, ws.compiled(pass_name))
    except GatError as e:
        return _error(e)
    return jsonify(reports.discharge_report(pass_name, report))
