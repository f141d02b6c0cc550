from flask import Blueprint

from routes.engine import workspace

main_bp = Blueprint('main', __name__)


@main_bp.route('/health')
def health():
    ws = workspace()
    return {"status": "healthy", "corpus_entries": len(ws.entries),
            "languages": len(ws.language_names()), "compilers": len(ws.compiler_names())}
