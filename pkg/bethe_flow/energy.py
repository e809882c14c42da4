import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.linalg import null_space
from scipy.special import entr

from .algebra import ScalarField0, act_left, mobius, mobius_numbers
from .decomposition import InteractionBasis, project
from .errors import NonPositiveBelief, NotAProbability, ShapeMismatch
from .fields import DensityField0, ObservableField0, Tensor, log_field, weighted
from .lattice import RegionLattice

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9


def _check_probability(p: Tensor) -> None:
    if np.any(p.values < 0):
        raise NotAProbability(f"Distribution on {p.region} has negative entries")
    if abs(p.total() - 1.0) > PROBABILITY_TOLERANCE:
        raise NotAProbability(f"Distribution on {p.region} sums to {p.total()!r}")


def entropy(p: Tensor) -> float:
    """Shannon entropy in nats, with 0 ln 0 = 0"""
    _check_probability(p)
    return float(entr(p.values).sum())


def gibbs_free_energy(p: Tensor, H: Tensor) -> float:
    """F(p, H) = E_p[H] - S(p)"""
    if p.region != H.region or p.shape != H.shape:
        raise ShapeMismatch(f"Belief on {p.region} does not match hamiltonian on {H.region}")
    return p.dot(H) - entropy(p)


def _check_fields(p: DensityField0, H: ObservableField0) -> None:
    if p.lattice != H.lattice:
        raise ShapeMismatch("Beliefs and hamiltonians are defined on different lattices")


def bethe_free_energy(p: DensityField0, H: ObservableField0, c: Optional[ScalarField0] = None) -> float:
    """F_B(p, H) = Σ_b c_b F_b(p_b, H_b)"""
    _check_fields(p, H)
    c = c if c is not None else mobius_numbers(p.lattice)
    total = 0.0
    for b in p.lattice.regions:
        if c[b]:
            total += c[b] * gibbs_free_energy(p[b], H[b])
    return total


def free_energy_summands(F: ScalarField0) -> ScalarField0:
    """f_b = Σ_{c ⊆ b} μ_bc F_c"""
    return act_left(mobius(F.lattice), F)


def criticality_residual(p: DensityField0, H: ObservableField0, basis: InteractionBasis = None,
                         log_p: Optional[ObservableField0] = None) -> float:
    """
    Largest interaction component, away from ∅, of r = c (H + ln p).

    Zero exactly when r ∈ Im ∂ + R_0(X), i.e. when a consistent p is a
    constrained critical point of the Bethe free energy F_B^H. Pass log_p when
    ln p is known on the log scale; p may then hold entries that underflowed.
    """
    _check_fields(p, H)
    if log_p is None:
        log_p = log_field(p)
    elif log_p.lattice != p.lattice:
        raise ShapeMismatch("Log beliefs and beliefs are defined on different lattices")
    r = weighted(H + log_p, mobius_numbers(p.lattice))
    return project(r, basis).sup_norm(skip_empty=True)


def _local_free_energy(values: np.ndarray, H: np.ndarray) -> float:
    return float(np.sum(values * H) - entr(values).sum())


def consistency_tangent_basis(lattice: RegionLattice) -> np.ndarray:
    """
    Orthonormal basis of {δp : dδp = 0, Σ δp_b = 0 for every b} in the
    concatenated flat coordinates of all regions, in lattice order.
    """
    offsets = {}
    n = 0
    for r in lattice.regions:
        offsets[r] = n
        n += lattice.size(r)
    rows = []
    for a, b in lattice.arrows:
        size_b = lattice.size(b)
        # marginal of the flat a-block onto b, as a matrix
        shape_a = lattice.shape(a)
        idx = np.arange(lattice.size(a)).reshape(shape_a)
        axes = tuple(k for k, i in enumerate(a) if i not in b)
        kept = [k for k in range(len(a)) if k not in axes]
        moved = np.moveaxis(idx, kept, list(range(len(kept)))).reshape(size_b, -1)
        for xb in range(size_b):
            row = np.zeros(n)
            row[offsets[b] + xb] = 1.0
            row[offsets[a] + moved[xb]] -= 1.0
            rows.append(row)
    for r in lattice.regions:
        row = np.zeros(n)
        row[offsets[r]:offsets[r] + lattice.size(r)] = 1.0
        rows.append(row)
    return null_space(np.array(rows))


def projected_gradient_norm(p: DensityField0, H: ObservableField0, step: float = 1e-5) -> float:
    """
    Central-difference gradient of F_B^H, projected on the tangent space of
    consistent normalized fields; Euclidean norm.
    """
    _check_fields(p, H)
    lattice = p.lattice
    c = mobius_numbers(lattice)
    grad = []
    for r in lattice.regions:
        values = p[r].values.ravel().copy()
        h = H[r].values.ravel()
        g = np.zeros_like(values)
        if c[r]:
            for k in range(values.size):
                old = values[k]
                values[k] = old + step
                up = _local_free_energy(values, h)
                values[k] = old - step
                down = _local_free_energy(values, h)
                values[k] = old
                g[k] = c[r] * (up - down) / (2 * step)
        grad.append(g - g.mean())
    grad = np.concatenate(grad)
    N = consistency_tangent_basis(lattice)
    return float(np.linalg.norm(N @ (N.T @ grad)))


@dataclass
class EnergyReport:
    gibbs_free_energy: Dict[str, float]
    entropy: Dict[str, float]
    summands: Dict[str, float]
    bethe_free_energy: float
    criticality_residual: float
    log_partition: Optional[float] = None

    @property
    def bethe_gap(self) -> Optional[float]:
        """Global free energy minus the Bethe approximation"""
        if self.log_partition is None:
            return None
        return -self.log_partition - self.bethe_free_energy

    def to_dict(self) -> Dict:
        return {
            'bethe_free_energy': self.bethe_free_energy,
            'criticality_residual': self.criticality_residual,
            'log_partition': self.log_partition,
            'bethe_gap': self.bethe_gap,
            'regions': [
                {'region': name,
                 'gibbs_free_energy': self.gibbs_free_energy[name],
                 'entropy': self.entropy[name],
                 'summand': self.summands[name]}
                for name in self.gibbs_free_energy
            ],
        }


def energy_report(p: DensityField0, H: ObservableField0, log_partition: Optional[float] = None,
                  log_p: Optional[ObservableField0] = None) -> EnergyReport:
    _check_fields(p, H)
    lattice = p.lattice
    local = ScalarField0(lattice, {b: gibbs_free_energy(p[b], H[b]) for b in lattice.regions})
    summands = free_energy_summands(local)
    bethe = bethe_free_energy(p, H)
    try:
        residual = criticality_residual(p, H, log_p=log_p)
    except NonPositiveBelief as e:
        logger.warning(f"Criticality residual skipped: {e}")
        residual = float('nan')
    return EnergyReport(
        gibbs_free_energy={str(b): local[b] for b in lattice.regions},
        entropy={str(b): entropy(p[b]) for b in lattice.regions},
        summands={str(b): summands[b] for b in lattice.regions},
        bethe_free_energy=bethe,
        criticality_residual=residual,
        log_partition=log_partition,
    )
