import json
from pathlib import Path

import pytest

from hpqc_aka.providers import available_backends, get_provider

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def acvp():
    return json.loads((DATA / "mlkem768_acvp.json").read_text())


@pytest.fixture(scope="session")
def scalars():
    out = {}
    for line in (DATA / "scalars.txt").read_text().splitlines():
        name, value = line.split()
        out[name] = bytes.fromhex(value)
    return out


@pytest.fixture(params=available_backends())
def provider(request):
    return get_provider(request.param)
