"""
Interaction decomposition A_a = ⊕_{b ⊆ a} z_b and the homology of observable fields.

Each z_a is the orthogonal complement, under the counting inner product, of
the boundary observables b_a spanned by extensions from strict subregions of a
in the lattice. With that choice the copies j(z_b) inside A_a are mutually
orthogonal, so the coherent projector P^{ba} is an orthogonal projection:

    P^{ba}(u_a) = Z_b Z_bᵀ Σ^{ba}(u_a) / |E_{a∖b}|
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Tuple

import numpy as np
from scipy.linalg import null_space

from . import settings
from .algebra import mobius_numbers
from .errors import LatticeMismatch, TooLarge
from .fields import (FluxField1, ObservableField0, Tensor, boundary1, extend, marginal,
                     weighted, zeta_action_obs)
from .lattice import Region, RegionLattice, coboundary_down, coboundary_up, cone_up, subsystem

logger = logging.getLogger(__name__)

HOMOLOGY_TOLERANCE = 1e-9


def _extension_matrix(b: Region, a: Region, lattice: RegionLattice) -> np.ndarray:
    """Columns are the extensions to E_a of the standard basis of E_b"""
    size_b = lattice.size(b)
    basis = np.eye(size_b).reshape(lattice.shape(b) + (size_b,))
    # trailing axis carries the column index through the broadcast
    shape = tuple(lattice.cardinalities[i] if i in b else 1 for i in a) + (size_b,)
    full = np.broadcast_to(basis.reshape(shape), lattice.shape(a) + (size_b,))
    return full.reshape(lattice.size(a), size_b)


@dataclass(frozen=True, eq=False)
class InteractionBasis:
    lattice: RegionLattice
    # per region: |E_a| x dim z_a matrix with orthonormal columns
    bases: Dict[Region, np.ndarray]

    def dim(self, a: Region) -> int:
        return self.bases[self.lattice.require(a)].shape[1]

    def vectors(self, a: Region) -> List[Tensor]:
        Z = self.bases[self.lattice.require(a)]
        shape = self.lattice.shape(a)
        return [Tensor(a, Z[:, k].reshape(shape)) for k in range(Z.shape[1])]

    def dimension_identity(self, a: Region) -> Tuple[int, int]:
        """(Σ_{b ⊆ a} dim z_b, |E_a|); equal by the interaction decomposition"""
        return sum(self.dim(b) for b in subsystem(self.lattice, a)), self.lattice.size(a)

    def project_local(self, u_a: Tensor, b: Region) -> Tensor:
        """P^{ba}(u_a) as a tensor on E_b lying in z_b"""
        Z = self.bases[self.lattice.require(b)]
        fiber = self.lattice.size(u_a.region) // self.lattice.size(b)
        m = marginal(u_a, b).values.ravel()
        return Tensor(b, (Z @ (Z.T @ m) / fiber).reshape(self.lattice.shape(b)))

    def in_span(self, t: Tensor, tolerance: float = 1e-10) -> bool:
        Z = self.bases[self.lattice.require(t.region)]
        v = t.values.ravel()
        return bool(np.max(np.abs(v - Z @ (Z.T @ v)), initial=0.0) <= tolerance)


@lru_cache(maxsize=32)
def build_interaction_spaces(lattice: RegionLattice) -> InteractionBasis:
    logger.info(f"=== Building interaction subspaces for {len(lattice)} regions ===")
    bases = {}
    for a in lattice.regions:
        below = lattice.below(a)
        if not below:
            bases[a] = np.eye(lattice.size(a))
            continue
        B = np.hstack([_extension_matrix(b, a, lattice) for b in below])
        bases[a] = null_space(B.T, rcond=settings.RANK_TOLERANCE)
        logger.debug(f"dim z{a} = {bases[a].shape[1]} of |E| = {lattice.size(a)}")
    return InteractionBasis(lattice, bases)


class ProjectionResult:
    """Per region b, the component P^b(u) in z_b"""

    def __init__(self, lattice: RegionLattice, components: Mapping[Region, Tensor]):
        self.lattice = lattice
        self.components: Dict[Region, Tensor] = dict(components)

    def __getitem__(self, b: Region) -> Tensor:
        return self.components[b]

    def items(self):
        return self.components.items()

    def sup_distance(self, other: 'ProjectionResult', skip_empty: bool = False) -> float:
        return max(((t - other.components[b]).sup_norm() for b, t in self.items()
                    if not (skip_empty and len(b) == 0)), default=0.0)

    def sup_norm(self, skip_empty: bool = False) -> float:
        return max((t.sup_norm() for b, t in self.items()
                    if not (skip_empty and len(b) == 0)), default=0.0)

    def as_field(self) -> ObservableField0:
        return ObservableField0(self.lattice, self.components)


def _basis_for(u: ObservableField0, basis: InteractionBasis = None) -> InteractionBasis:
    if basis is None:
        return build_interaction_spaces(u.lattice)
    if basis.lattice is not u.lattice and basis.lattice != u.lattice:
        raise LatticeMismatch("Interaction basis was built for another lattice")
    return basis


def project(u: ObservableField0, basis: InteractionBasis = None) -> ProjectionResult:
    """P^b(u) = Σ_{a ⊇ b} P^{ba}(u_a)"""
    basis = _basis_for(u, basis)
    lattice = u.lattice
    out = {}
    for b in lattice.regions:
        acc = np.zeros(lattice.shape(b))
        for a in cone_up(lattice, b):
            acc += basis.project_local(u[a], b).values
        out[b] = Tensor(b, acc)
    return ProjectionResult(lattice, out)


def reconstruction_flux(u: ObservableField0, basis: InteractionBasis = None) -> FluxField1:
    """φ_ab = P^{ba}(u_a); its boundary is P(u) - u"""
    basis = _basis_for(u, basis)
    return FluxField1(u.lattice, {(a, b): basis.project_local(u[a], b) for a, b in u.lattice.arrows})


def interaction_component(basis: InteractionBasis, a: Region, k: int = 0) -> ObservableField0:
    """Field holding the k-th basis vector of z_a at a and zero elsewhere"""
    return ObservableField0(basis.lattice, {a: basis.vectors(a)[k]})


def global_sum(u: ObservableField0) -> Tensor:
    """ζ_Ω(u) = Σ_a j(u_a) on the full configuration space"""
    lattice = u.lattice
    omega = lattice.omega
    size = lattice.size(omega)
    if size > settings.ORACLE_MAX_STATES:
        raise TooLarge(size, settings.ORACLE_MAX_STATES)
    acc = np.zeros(lattice.shape(omega))
    for a in lattice.regions:
        acc += extend(u[a], omega, lattice.cardinalities).values
    return Tensor(omega, acc)


def homology_equivalent(u: ObservableField0, v: ObservableField0, basis: InteractionBasis = None,
                        tolerance: float = HOMOLOGY_TOLERANCE, modulo_constants: bool = False) -> bool:
    """
    True iff u - v lies in the image of the boundary, or in Im ∂ + R_0 when
    modulo_constants is set (constants only reach the ∅ component).
    """
    basis = _basis_for(u, basis)
    return project(u, basis).sup_distance(project(v, basis), skip_empty=modulo_constants) <= tolerance


def mobius_weighted(v: ObservableField0) -> ObservableField0:
    """c_b (ζ·v)_b, the field whose homology class matches v's"""
    return weighted(zeta_action_obs(v), mobius_numbers(v.lattice))


def gauss_subsystem(phi: FluxField1, a: Region) -> Tuple[Tensor, Tensor]:
    """
    Both sides of Σ_{b ∈ Λ^a} (∂φ)_b = Σ_{δΛ^a} φ, extended to E_a.
    """
    lattice = phi.lattice
    cards = lattice.cardinalities
    d = boundary1(phi)
    lhs = Tensor.zeros(a, cards)
    for b in subsystem(lattice, a):
        lhs = lhs + extend(d[b], a, cards)
    rhs = Tensor.zeros(a, cards)
    for x, y in coboundary_down(lattice, a):
        rhs = rhs + extend(phi[(x, y)], a, cards)
    return lhs, rhs


def gauss_cone(phi: FluxField1, b: Region) -> Tuple[Tensor, Tensor]:
    """
    Both sides of the Gauss formula on the cone V_b, as global observables.

    Arrows of δV_b leave the cone, so their flux enters the sum with a minus
    sign: Σ_{a ∈ V_b} (∂φ)_a = -Σ_{δV_b} φ.
    """
    lattice = phi.lattice
    cards = lattice.cardinalities
    omega = lattice.omega
    d = boundary1(phi)
    lhs = Tensor.zeros(omega, cards)
    for a in cone_up(lattice, b):
        lhs = lhs + extend(d[a], omega, cards)
    rhs = Tensor.zeros(omega, cards)
    for x, y in coboundary_up(lattice, b):
        rhs = rhs - extend(phi[(x, y)], omega, cards)
    return lhs, rhs
