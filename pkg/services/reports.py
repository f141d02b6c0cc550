"""
JSON reports shared by the CLI and the HTTP API.

Every report carries "schema" and "timestamp"; apart from the timestamp the
output is a pure function of its input, with keys sorted on dump.
"""
import json
import logging
from datetime import datetime, timezone

from services.errors import GatError
from services.kernel import Lang
from services.sexpr import dumps
from services.elaborator import WfReport, erase
from services.proofkit import proof_to_json, term_to_json
from services.translate import DischargeReport, Obligation

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
VOLATILE_KEYS = ('timestamp',)


def _envelope(kind: str, body: dict) -> dict:
    report = {
        'schema': SCHEMA_VERSION,
        'kind': kind,
        'timestamp': datetime.now(timezone.utc).isoformat(),
    }
    report.update(body)
    return report


def wf_report(name: str, report: WfReport) -> dict:
    return _envelope('wf', {
        'language': name,
        'ok': report.ok,
        'diagnostics': [{'location': loc, 'message': msg} for loc, msg in report.diagnostics],
        'conversions': [{'location': loc, 'proof': proof_to_json(p)} for loc, p in report.conversions],
    })


def check_report(results: list) -> dict:
    """results: [(language name, WfReport)]"""
    languages = [wf_report(name, r) for name, r in results]
    for entry in languages:
        entry.pop('schema')
        entry.pop('timestamp')
    return _envelope('check', {'ok': all(r.ok for _, r in results), 'languages': languages})


def obligation_json(obl: Obligation) -> dict:
    return {
        'rule': obl.source_rule,
        'kind': obl.kind,
        'ctx': [[name, term_to_json(sort)] for name, sort in obl.target_ctx],
        'payload': [term_to_json(x) for x in obl.payload],
        'problem': obl.problem,
    }


def obligations_report(pass_name: str, obls: list) -> dict:
    return _envelope('obligations', {
        'pass': pass_name,
        'count': len(obls),
        'obligations': [obligation_json(o) for o in obls],
    })


def discharge_report(pass_name: str, report: DischargeReport) -> dict:
    entries = []
    for e in report.entries:
        entries.append({
            'rule': e.rule,
            'kind': e.kind,
            'status': e.status,
            'steps': e.steps,
            'digest': e.digest,
            'proof': proof_to_json(e.proof) if e.proof is not None else None,
            'message': e.message,
        })
    return _envelope('discharge', {
        'pass': pass_name,
        'clean': report.clean,
        'counts': report.counts(),
        'entries': entries,
    })


def term_report(kind: str, lang: Lang, term, sort=None, **extra) -> dict:
    body = {'term': term_to_json(term), 'surface': _surface(lang, term)}
    if sort is not None:
        body['sort'] = term_to_json(sort)
    body.update(extra)
    return _envelope(kind, body)


def _surface(lang, t):
    try:
        return dumps(erase(lang, t))
    except GatError:
        return None


def demo_report(name: str, ok: bool, details: dict) -> dict:
    return _envelope('demo', {'demo': name, 'ok': ok, 'details': details})


def corpus_report(results: list) -> dict:
    """results: [CorpusResult]"""
    return _envelope('corpus', {
        'ok': all(r.ok for r in results),
        'entries': [{'name': r.entry.name, 'kind': r.entry.kind, 'expected': list(r.entry.expected),
                     'ok': r.ok, 'message': r.message} for r in results],
    })


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE_KEYS}
