import pytest

from services.corpus import load_corpus


@pytest.fixture(scope='session')
def corpus():
    return load_corpus()


@pytest.fixture(scope='session')
def ws(corpus):
    return corpus[0]


@pytest.fixture(scope='session')
def entries(corpus):
    return corpus[1]


@pytest.fixture(scope='session')
def client():
    from app import create_app
    app = create_app({'TESTING': True, 'RATELIMIT_ENABLED': False})
    return app.test_client()
