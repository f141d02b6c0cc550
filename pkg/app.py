import os
import logging
from flask import Flask, jsonify
from flask_cors import CORS
from flask_limiter import Limiter
from flask_limiter.util import get_remote_address
from dotenv import load_dotenv

from services import settings
from routes.main import main_bp
from routes.engine import engine_bp

# Configure Logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

load_dotenv()


# App Factory
def create_app(config: dict | None = None):
    app = Flask(__name__)

    # Configuration
    app.config['SECRET_KEY'] = os.getenv('FLASK_SECRET_KEY', 'dev_key')
    app.config['GATFORGE_CORPUS'] = settings.get_corpus_dir()
    app.config['RATELIMIT_ENABLED'] = True
    if config:
        app.config.update(config)

    # Extensions
    CORS(app, resources={r"/api/*": {"origins": "*"}})

    Limiter(
        get_remote_address,
        app=app,
        default_limits=["200 per day", "50 per hour"],
        storage_uri="memory://"
    )

    # Blueprints
    app.register_blueprint(main_bp)
    app.register_blueprint(engine_bp)

    @app.route('/api/docs')
    def api_docs():
        return jsonify({
            'version': '1.0.0',
            'endpoints': {
                '/api/check': 'POST - Well-formedness of {"source"} DSL text',
                '/api/normalize': 'POST - Normalize {"lang", "term", "sort"?, "ctx"?, "fuel"?, "filter"?}',
                '/api/compile': 'POST - Compile {"pass", "term", "sort"?, "ctx"?}',
                '/api/discharge/<pass>': 'GET - Discharge report of a corpus pass',
                '/health': 'GET - System Health'
            }
        })

    logger.info(f"App ready with corpus {app.config['GATFORGE_CORPUS']}")
    return app


app = create_app()

if __name__ == '__main__':
    port = int(os.getenv('SERVER_PORT', 5000))
    app.run(host='0.0.0.0', port=port, debug=True)
