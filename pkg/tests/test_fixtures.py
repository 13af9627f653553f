import json

import pytest

from martcob import fixtures as F
from martcob.serialize import (
    decomposition_from_json, function_from_json, function_to_json,
    system_from_json, system_to_json,
)


def test_shipped_files_are_current():
    for name, text in F.render_fixture_files().items():
        assert F.fixture_path(name.removesuffix(".json")).read_text() == text, name


@pytest.mark.parametrize("name", F.SYSTEM_NAMES)
def test_system_roundtrip(name):
    s = F.load_system(name)
    assert s == F.build_system(name)
    assert system_from_json(system_to_json(s)) == s


def test_function_roundtrip(b2xb2):
    f = F.f_example_d2(b2xb2)
    assert function_from_json(b2xb2, json.loads(json.dumps(function_to_json(f)))) == f


def test_decomposition_fixture_loads():
    system, f, g, H, A = decomposition_from_json(json.loads(F.fixture_path("decomp_b2_pair").read_text()))
    assert system.d == 1
    assert sorted(A) == [0, 1]
