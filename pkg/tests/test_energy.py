import math

import numpy as np
import pytest

from bethe_flow.algebra import ScalarField0, act_left, zeta
from bethe_flow.energy import (bethe_free_energy, criticality_residual, energy_report, entropy,
                               free_energy_summands, gibbs_free_energy, projected_gradient_norm)
from bethe_flow.errors import NonPositiveBelief, NotAProbability, ShapeMismatch
from bethe_flow.fields import (DensityField0, FluxField1, ObservableField0, StatField, Tensor, boundary1, gibbs_state,
                               zeta_action_obs)
from bethe_flow.lattice import EMPTY, Region
from bethe_flow.oracle import exact_marginal_field, global_gibbs

R = Region.of
CARDS = {1: 2, 2: 2}


def _exact(lattice, rng):
    h = ObservableField0.random(lattice, rng)
    g = global_gibbs(h)
    return h, g, exact_marginal_field(g, lattice)


def test_entropy_values():
    assert entropy(Tensor.constant(R([1, 2]), CARDS, .25)) == pytest.approx(math.log(4))
    assert entropy(Tensor(R([1]), np.array([1.0, 0.0]))) == 0.0
    assert entropy(Tensor(R([1]), np.array([.75, .25]))) == pytest.approx(0.5623351, abs=1e-7)


def test_entropy_refuses_non_probabilities():
    with pytest.raises(NotAProbability):
        entropy(Tensor(R([1]), np.array([.5, .6])))
    with pytest.raises(NotAProbability):
        entropy(Tensor(R([1]), np.array([1.5, -.5])))


def test_gibbs_free_energy_minimum(rng):
    H = Tensor.random(R([1, 2]), CARDS, rng)
    at_gibbs = gibbs_free_energy(gibbs_state(H), H)
    assert at_gibbs == pytest.approx(-np.log(np.exp(-H.values).sum()), abs=1e-12)
    for _ in range(20):
        w = rng.random(4) + 1e-3
        p = Tensor(R([1, 2]), (w / w.sum()).reshape(2, 2))
        assert gibbs_free_energy(p, H) >= at_gibbs


def test_gibbs_free_energy_of_uniform_at_zero_energy():
    H = Tensor.zeros(R([1, 2]), CARDS)
    assert gibbs_free_energy(Tensor.constant(R([1, 2]), CARDS, .25), H) == pytest.approx(-math.log(4))
    with pytest.raises(ShapeMismatch):
        gibbs_free_energy(Tensor.constant(R([1]), CARDS, .5), H)


def test_bethe_free_energy_on_trivial_lattice(empty_lattice):
    p = StatField.uniform(empty_lattice)
    assert bethe_free_energy(p, ObservableField0.zeros(empty_lattice)) == 0.0


def test_bethe_is_exact_on_the_diamond(diamond, rng):
    for _ in range(5):
        h, g, p = _exact(diamond, rng)
        assert bethe_free_energy(p, zeta_action_obs(h)) == pytest.approx(-g.log_partition, abs=1e-8)


def test_bethe_gap_on_the_loop_is_reported(triangle_loop, rng):
    h, g, p = _exact(triangle_loop, rng)
    report = energy_report(p, zeta_action_obs(h), g.log_partition)
    assert math.isfinite(report.bethe_gap)
    assert report.bethe_gap == pytest.approx(-g.log_partition - report.bethe_free_energy)


def test_free_energy_summands_on_diamond(diamond):
    F = ScalarField0(diamond, {R([1, 2]): 2, R([2, 3]): 3, R([2]): 1, EMPTY: 0})
    f = free_energy_summands(F)
    assert [f[r] for r in diamond.regions] == [1, 2, 1, 0]
    assert act_left(zeta(diamond), f) == F
    assert free_energy_summands(ScalarField0(diamond)) == ScalarField0(diamond)


def test_free_energy_summands_reconstruct(triangle_loop, rng):
    F = ScalarField0(triangle_loop, {r: float(rng.standard_normal()) for r in triangle_loop.regions})
    back = act_left(zeta(triangle_loop), free_energy_summands(F))
    assert all(abs(back[r] - F[r]) < 1e-12 for r in triangle_loop.regions)


def test_energy_report_parts_add_up(diamond, rng):
    h, g, p = _exact(diamond, rng)
    report = energy_report(p, zeta_action_obs(h), g.log_partition)
    c = {'{1,2}': 1, '{2,3}': 1, '{2}': -1, '∅': 0}
    total = sum(c[name] * value for name, value in report.gibbs_free_energy.items())
    assert report.bethe_free_energy == pytest.approx(total, abs=1e-12)
    assert report.bethe_gap == pytest.approx(0.0, abs=1e-8)
    assert [r['region'] for r in report.to_dict()['regions']] == list(c)


def test_criticality_at_exact_marginals_of_a_tree(diamond, rng):
    h, g, p = _exact(diamond, rng)
    H = zeta_action_obs(h)
    assert criticality_residual(p, H) <= 1e-7
    assert projected_gradient_norm(p, H) <= 1e-4


def test_criticality_detects_a_perturbed_consistent_field(diamond, rng):
    h, g, p = _exact(diamond, rng)
    _, _, other = _exact(diamond, rng)
    H = zeta_action_obs(h)
    assert criticality_residual(other, H) > 1e-3
    assert projected_gradient_norm(other, H) > 1e-4


def test_criticality_of_inconsistent_beliefs(diamond, rng):
    tensors = {}
    for r in diamond.regions:
        w = rng.random(diamond.shape(r)) + .1
        tensors[r] = Tensor(r, w / w.sum())
    p = StatField(diamond, tensors)
    assert criticality_residual(p, ObservableField0.zeros(diamond)) > 0.0


def test_criticality_ignores_boundaries_in_the_hamiltonian(triangle_loop, rng):
    h, g, p = _exact(triangle_loop, rng)
    H = zeta_action_obs(h)
    shifted = H + zeta_action_obs(boundary1(FluxField1.random(triangle_loop, rng)))
    assert criticality_residual(p, shifted) == pytest.approx(criticality_residual(p, H), abs=1e-9)


def test_criticality_refuses_zero_beliefs(diamond):
    p = DensityField0(diamond, {r: Tensor.constant(r, diamond.cardinalities, 0.0) for r in diamond.regions})
    with pytest.raises(NonPositiveBelief):
        criticality_residual(p, ObservableField0.zeros(diamond))
