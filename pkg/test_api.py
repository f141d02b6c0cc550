NAT_SOURCE = """
(lang tiny
  (sort nat)
  (term z nat)
  (term s (ctx (n nat)) nat))
"""

BAD_SOURCE = """
(lang tiny
  (sort nat)
  (term s (ctx (n nat)) vec))
"""


def test_health_check(client):
    response = client.get('/health')
    assert response.status_code == 200
    data = response.get_json()
    assert data['status'] == 'healthy'
    assert data['compilers'] > 0


def test_api_docs(client):
    response = client.get('/api/docs')
    assert response.status_code == 200
    assert '/api/normalize' in response.get_json()['endpoints']


def test_check_valid_source(client):
    response = client.post('/api/check', json={'source': NAT_SOURCE})
    assert response.status_code == 200
    data = response.get_json()
    assert data['ok']
    assert [entry['language'] for entry in data['languages']] == ['tiny']


def test_check_invalid_source(client):
    response = client.post('/api/check', json={'source': BAD_SOURCE})
    assert response.status_code == 200
    data = response.get_json()
    assert not data['ok']
    assert data['languages'][0]['diagnostics']


def test_check_unparsable_source(client):
    response = client.post('/api/check', json={'source': '(lang tiny'})
    assert response.status_code == 400
    assert 'error' in response.get_json()


def test_check_requires_source(client):
    response = client.post('/api/check', json={})
    assert response.status_code == 400


def test_normalize(client):
    response = client.post('/api/normalize', json={'lang': 'nat', 'term': '(+ 0 (+ (S 0) 0))'})
    assert response.status_code == 200
    data = response.get_json()
    assert data['surface'] == '(S 0)'
    assert data['steps'] == 3
    assert data['complete']


def test_normalize_reports_partial_result(client):
    response = client.post('/api/normalize', json={'lang': 'nat', 'term': '(+ 0 (+ (S 0) 0))', 'fuel': 1})
    assert response.status_code == 200
    assert not response.get_json()['complete']


def test_normalize_rejects_bad_fuel(client):
    response = client.post('/api/normalize', json={'lang': 'nat', 'term': '0', 'fuel': 0})
    assert response.status_code == 400
    assert 'fuel' in response.get_json()['error']


def test_normalize_unknown_language(client):
    response = client.post('/api/normalize', json={'lang': 'nope', 'term': '0'})
    assert response.status_code == 400


def test_compile(client):
    response = client.post('/api/compile', json={
        'pass': 'cps_bool', 'term': '(ret false)', 'sort': '(exp G bool)', 'ctx': '(ctx (G env))',
    })
    assert response.status_code == 200
    data = response.get_json()
    assert data['pass'] == 'cps_bool'
    assert 'sort' in data


def test_compile_requires_pass(client):
    response = client.post('/api/compile', json={'term': '(ret true)'})
    assert response.status_code == 400


def test_discharge(client):
    response = client.get('/api/discharge/cps_subst')
    assert response.status_code == 200
    data = response.get_json()
    assert data['clean']
    assert data['counts']['Open'] == 0


def test_discharge_unknown_pass(client):
    response = client.get('/api/discharge/nope')
    assert response.status_code == 400
