import numpy as np
import pytest
from hypothesis import given, settings

from bethe_flow.decomposition import (build_interaction_spaces, gauss_cone, gauss_subsystem, global_sum,
                                      homology_equivalent, interaction_component, mobius_weighted, project,
                                      reconstruction_flux)
from bethe_flow.errors import LatticeMismatch
from bethe_flow.fields import FluxField1, ObservableField0, Tensor, boundary1, extend
from bethe_flow.lattice import EMPTY, Region, VariableSpec, build_lattice
from strategies import lattices, seeds

R = Region.of


def test_small_interaction_spaces(diamond):
    basis = build_interaction_spaces(diamond)
    assert basis.dim(EMPTY) == 1
    assert basis.dim(R([2])) == 1
    assert abs(basis.vectors(R([2]))[0].values @ np.array([1.0, 1.0])) < 1e-12
    assert basis.dim(R([1, 2])) == 2
    assert basis.dim(R([2, 3])) == 2


def test_basis_is_orthonormal_and_orthogonal_to_subregions(ternary_chain):
    basis = build_interaction_spaces(ternary_chain)
    cards = ternary_chain.cardinalities
    for a in ternary_chain.regions:
        Z = basis.bases[a]
        assert np.allclose(Z.T @ Z, np.eye(Z.shape[1]), atol=1e-12)
        for b in ternary_chain.below(a):
            for k in range(ternary_chain.size(b)):
                e = np.zeros(ternary_chain.size(b))
                e[k] = 1.0
                ext = extend(Tensor(b, e.reshape(ternary_chain.shape(b))), a, cards).values.ravel()
                assert np.max(np.abs(Z.T @ ext), initial=0.0) < 1e-10


def test_dimension_identity(fixture_lattice):
    basis = build_interaction_spaces(fixture_lattice)
    for a in fixture_lattice.regions:
        total, size = basis.dimension_identity(a)
        assert total == size


def test_pure_interaction_projects_to_itself(triangle_loop):
    basis = build_interaction_spaces(triangle_loop)
    a = R([1, 3])
    u = interaction_component(basis, a)
    result = project(u, basis)
    assert result[a].allclose(u[a], atol=1e-12)
    assert all(t.sup_norm() < 1e-12 for b, t in result.items() if b != a)
    assert basis.in_span(result[a])


def test_projection_of_zero(diamond):
    assert project(ObservableField0.zeros(diamond)).sup_norm() == 0.0


def test_basis_from_another_lattice_is_refused(diamond, triangle_loop):
    with pytest.raises(LatticeMismatch):
        project(ObservableField0.zeros(diamond), build_interaction_spaces(triangle_loop))


def test_global_sum_of_scalar_at_empty(diamond):
    u = ObservableField0(diamond, {EMPTY: Tensor(EMPTY, np.array(2.5))})
    total = global_sum(u)
    assert total.region == diamond.omega
    assert np.all(total.values == 2.5)


def test_projection_kills_boundaries(fixture_lattice, rng):
    basis = build_interaction_spaces(fixture_lattice)
    for _ in range(100):
        phi = FluxField1.random(fixture_lattice, rng)
        assert project(boundary1(phi), basis).sup_norm() <= 1e-10


def test_reconstruction_flux_inverts_boundary(fixture_lattice, rng):
    basis = build_interaction_spaces(fixture_lattice)
    for _ in range(20):
        u = ObservableField0.random(fixture_lattice, rng)
        u = u - project(u, basis).as_field()
        assert project(u, basis).sup_norm() <= 1e-9
        assert global_sum(u).sup_norm() <= 1e-9
        phi = reconstruction_flux(u, basis)
        assert (boundary1(phi) + u).sup_norm() <= 1e-9


def test_homology_equivalence(triangle_loop, rng):
    basis = build_interaction_spaces(triangle_loop)
    u = ObservableField0.random(triangle_loop, rng)
    phi = FluxField1.random(triangle_loop, rng)
    assert homology_equivalent(u, u + boundary1(phi), basis)
    assert not homology_equivalent(u, u + interaction_component(basis, R([1, 2])), basis)


def test_constants_are_equivalent_modulo_constants(diamond, rng):
    u = ObservableField0.random(diamond, rng)
    shifted = u._like({k: t + 3.0 for k, t in u.items()})
    assert not homology_equivalent(u, shifted)
    assert homology_equivalent(u, shifted, modulo_constants=True)


def test_mobius_weighted_field_has_the_same_class(fixture_lattice, rng):
    basis = build_interaction_spaces(fixture_lattice)
    for _ in range(20):
        v = ObservableField0.random(fixture_lattice, rng)
        assert project(v, basis).sup_distance(project(mobius_weighted(v), basis)) <= 1e-9


def test_gauss_formulas(fixture_lattice, rng):
    for _ in range(100):
        phi = FluxField1.random(fixture_lattice, rng)
        for a in fixture_lattice.regions:
            lhs, rhs = gauss_subsystem(phi, a)
            assert (lhs - rhs).sup_norm() <= 1e-10
            lhs, rhs = gauss_cone(phi, a)
            assert (lhs - rhs).sup_norm() <= 1e-10


@given(lattices(), seeds)
@settings(max_examples=30, deadline=None)
def test_global_sum_vanishes_on_boundaries(lattice, seed):
    rng = np.random.default_rng(seed)
    assert global_sum(boundary1(FluxField1.random(lattice, rng))).sup_norm() <= 1e-9


def test_binary_singleton_basis():
    lattice = build_lattice([(4,)], [VariableSpec(4, 2)])
    v = build_interaction_spaces(lattice).vectors(R([4]))[0].values
    assert np.allclose(np.abs(v), [2 ** -0.5, 2 ** -0.5])
    assert v[0] == pytest.approx(-v[1])
