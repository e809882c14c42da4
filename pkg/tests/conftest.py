import os

import numpy as np
import pytest

from bethe_flow.lattice import VariableSpec, build_lattice

MODELS_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'models')


def binary(*ids):
    return [VariableSpec(i, 2) for i in ids]


@pytest.fixture
def diamond():
    """{1,2} and {2,3} meeting in {2}; a tree"""
    return build_lattice([(1, 2), (2, 3)], binary(1, 2, 3))


@pytest.fixture
def triangle_loop():
    return build_lattice([(1, 2), (2, 3), (1, 3)], binary(1, 2, 3))


@pytest.fixture
def boolean_cube():
    """Every subset of three binary variables"""
    return build_lattice([(1, 2, 3), (1, 2), (1, 3), (2, 3), (1,), (2,), (3,)], binary(1, 2, 3))


@pytest.fixture
def ternary_chain():
    return build_lattice([(1, 2), (2, 3)], [VariableSpec(i, 3) for i in (1, 2, 3)])


@pytest.fixture
def empty_lattice():
    return build_lattice([], [])


@pytest.fixture(params=['diamond', 'triangle_loop', 'boolean_cube', 'ternary_chain'])
def fixture_lattice(request):
    return request.getfixturevalue(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def model_path():
    return lambda name: os.path.join(MODELS_DIR, f"{name}.json")
