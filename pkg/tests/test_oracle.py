import math

import numpy as np
import pytest

from bethe_flow import settings
from bethe_flow.energy import gibbs_free_energy
from bethe_flow.errors import NonPositiveBelief, TooLarge
from bethe_flow.fields import ObservableField0, Tensor, consistency_residual
from bethe_flow.lattice import EMPTY, Region, VariableSpec, build_lattice
from bethe_flow.oracle import (exact_log_marginal_field, exact_marginal_densities, exact_marginal_field,
                               global_free_energy, global_gibbs, is_tree_like)

R = Region.of


def test_zero_potential_gives_uniform_state(triangle_loop):
    g = global_gibbs(ObservableField0.zeros(triangle_loop))
    assert np.allclose(g.tensor.values, 1 / 8)
    assert g.log_partition == pytest.approx(math.log(8))
    p = exact_marginal_field(g, triangle_loop)
    assert np.allclose(p[R([1, 2])].values, .25)


def test_single_binary_variable():
    lattice = build_lattice([(1,)], [VariableSpec(1, 2)])
    h = ObservableField0(lattice, {R([1]): Tensor(R([1]), np.array([0.0, math.log(3)]))})
    g = global_gibbs(h)
    assert np.allclose(g.tensor.values, [.75, .25])
    assert global_free_energy(g) == pytest.approx(-math.log(4 / 3))


def test_free_energy_identity(fixture_lattice, rng):
    g = global_gibbs(ObservableField0.random(fixture_lattice, rng))
    assert gibbs_free_energy(g.tensor, g.hamiltonian) == pytest.approx(-g.log_partition, abs=1e-12)
    assert np.all(g.tensor.values > 0)
    assert g.tensor.total() == pytest.approx(1.0, abs=1e-12)


def test_exact_marginals_are_consistent(fixture_lattice, rng):
    g = global_gibbs(ObservableField0.random(fixture_lattice, rng, scale=2.0))
    assert consistency_residual(exact_marginal_field(g, fixture_lattice)) <= 1e-12


def test_size_guard(diamond, monkeypatch):
    monkeypatch.setattr(settings, 'ORACLE_MAX_STATES', 4)
    with pytest.raises(TooLarge):
        global_gibbs(ObservableField0.zeros(diamond))


def test_tree_likeness(diamond, triangle_loop, empty_lattice, ternary_chain):
    assert is_tree_like(diamond)
    assert is_tree_like(ternary_chain)
    assert not is_tree_like(triangle_loop)
    assert is_tree_like(empty_lattice)


def test_disjoint_regions_are_tree_like():
    lattice = build_lattice([(1, 2), (3, 4)], [VariableSpec(i, 2) for i in (1, 2, 3, 4)])
    assert lattice.regions[-1] == EMPTY
    assert is_tree_like(lattice)


def test_marginals_below_the_float_range(diamond):
    h = ObservableField0(diamond, {R([1, 2]): Tensor(R([1, 2]), np.array([[0.0, 800.0], [0.0, 0.0]]))})
    g = global_gibbs(h)
    p = exact_marginal_densities(g, diamond)
    assert p[R([1, 2])].values[0, 1] == 0.0
    assert p[R([1, 2])].values[0, 0] == pytest.approx(1 / 3)
    log_p = exact_log_marginal_field(g, diamond)
    assert log_p[R([1, 2])].values[0, 1] == pytest.approx(-800 - math.log(3))
    assert log_p.is_finite()
    with pytest.raises(NonPositiveBelief):
        exact_marginal_field(g, diamond)
