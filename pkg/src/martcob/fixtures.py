"""Shipped testbeds: B2, B2xB2, M3, M3xB2 and the functions used in the examples."""
from fractions import Fraction
from importlib import resources
import json

from .decomposition import decompose
from .poisson import solve_direct
from .serialize import (decomposition_to_json, dumps, function_from_json,
                        function_to_json, system_from_json, system_to_json)
from .space import cylinder, make_factor, make_system

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)

SYSTEM_NAMES = ("b2", "b2xb2", "m3", "m3xb2")


def coin():
    return make_factor("bernoulli", {"probs": ["1/2", "1/2"]})


def markov3():
    """Two-state chain ``Q = [[1/2, 1/2], [1/4, 3/4]]`` with ``pi = (1/3, 2/3)``."""
    return make_factor("markov", {"Q": [["1/2", "1/2"], ["1/4", "3/4"]]})


def B2():
    return make_system([coin()])


def B2xB2():
    return make_system([coin(), coin()])


def M3():
    return make_system([markov3()])


def M3xB2():
    return make_system([markov3(), coin()])


def build_system(name):
    return {"b2": B2, "b2xb2": B2xB2, "m3": M3, "m3xb2": M3xB2}[name]()


def f_centered(system=None):
    """``x0 - 1/2`` on B2."""
    return cylinder(system or B2(), (1,), lambda x: x[0] - HALF)


def f_pair(system=None):
    """``x0 x1 - 1/4`` on B2."""
    return cylinder(system or B2(), (2,), lambda x: x[0] * x[1] - QUARTER)


def f_example_d2(system=None):
    """``(x0 x1 - 1/4)(y0 - 1/2)`` on B2xB2."""
    return cylinder(system or B2xB2(), (2, 1), lambda x, y: (x[0] * x[1] - QUARTER) * (y[0] - HALF))


FUNCTIONS = {
    "b2_centered": ("b2", f_centered),
    "b2_pair": ("b2", f_pair),
    "b2xb2_example": ("b2xb2", f_example_d2),
}

DECOMPOSITIONS = {"decomp_b2_pair": "b2_pair", "decomp_b2xb2_example": "b2xb2_example"}


def _read(name):
    return json.loads(fixture_path(name).read_text())


def fixture_path(name):
    return resources.files(__package__).joinpath("fixtures").joinpath(f"{name}.json")


def load_system(name):
    return system_from_json(_read(name))


def load_function(name):
    sys_name, _ = FUNCTIONS[name]
    return function_from_json(load_system(sys_name), _read(name))


def load_decomposition(name):
    return _read(name)


def render_fixture_files():
    """Map of fixture file name to JSON text, regenerated from the builders."""
    out = {}
    for name in SYSTEM_NAMES:
        out[f"{name}.json"] = dumps(system_to_json(build_system(name)))
    for name, (sys_name, builder) in FUNCTIONS.items():
        out[f"{name}.json"] = dumps(function_to_json(builder(build_system(sys_name))))
    for name, fname in DECOMPOSITIONS.items():
        sys_name, builder = FUNCTIONS[fname]
        f = builder(build_system(sys_name))
        out[f"{name}.json"] = dumps(decomposition_to_json(decompose(f, solve_direct(f).solution)))
    return out


def write_fixture_files(directory):
    import os
    for fname, text in render_fixture_files().items():
        with open(os.path.join(directory, fname), "w", encoding="utf-8") as fh:
            fh.write(text)
