import json
import urllib.error
import urllib.request

import numpy as np
import pytest


def wave_params(out_dir, **over):
    raw = {
        "flesh::thorns": "wave",
        "grid::npoints": "16",
        "grid::periodic": "true",
        "driver::nranks": "2",
        "mol::scheme": "rk4",
        "wave::initial_data": "plane",
        "io::out_dir": str(out_dir),
    }
    raw.update({k: str(v) for k, v in over.items()})
    return raw


def owned_concat(sim, group, var, tl=0):
    """Every owned value of every block (all levels), rank/level ordered."""
    parts = []
    for b in sim.driver.blocks:
        parts.append(b.var(group, var, tl)[b.owned].ravel())
    return np.concatenate(parts)


def http_get(url, timeout=10):
    try:
        with urllib.request.urlopen(url, timeout=timeout) as r:
            return r.status, json.loads(r.read()), dict(r.headers)
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read()), dict(e.headers)


def http_post(url, body, timeout=10):
    data = body if isinstance(body, bytes) else json.dumps(body).encode()
    req = urllib.request.Request(
        url, data=data, headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
