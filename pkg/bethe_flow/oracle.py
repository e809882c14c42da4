"""Brute-force exact inference on E_Ω. Only meant for verification at desk scale."""
import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.special import logsumexp

from .decomposition import global_sum
from .fields import BeliefField, ObservableField0, StatField, Tensor, gibbs_state
from .lattice import RegionLattice, pairwise_intersections

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GlobalState:
    tensor: Tensor          # p_Ω
    log_partition: float    # ln Σ e^{-H_Ω}
    hamiltonian: Tensor     # H_Ω

    @property
    def free_energy(self) -> float:
        return -self.log_partition


def global_gibbs(h: ObservableField0) -> GlobalState:
    """H_Ω = Σ_a j(h_a), p_Ω = [e^{-H_Ω}]; raises TooLarge past the configured size guard"""
    H = global_sum(h)
    log_z = float(logsumexp(-H.values))
    logger.debug(f"Global Gibbs state over {H.size} configurations, ln Z = {log_z:.6f}")
    return GlobalState(gibbs_state(H), log_z, H)


def global_free_energy(g: GlobalState) -> float:
    return g.free_energy


def exact_log_marginal_field(g: GlobalState, lattice: RegionLattice) -> ObservableField0:
    """ln of the marginals of p_Ω, summed on the log scale"""
    log_p = -g.hamiltonian.values - g.log_partition
    omega = g.hamiltonian.region
    tensors = {}
    for a in lattice.regions:
        axes = tuple(k for k, i in enumerate(omega) if i not in a)
        tensors[a] = Tensor(a, logsumexp(log_p, axis=axes) if axes else log_p)
    return ObservableField0(lattice, tensors)


def exact_marginal_densities(g: GlobalState, lattice: RegionLattice) -> BeliefField:
    """Marginals of p_Ω; entries below the float range come out as 0"""
    return BeliefField(lattice, {k: Tensor(k[-1], np.exp(t.values))
                                 for k, t in exact_log_marginal_field(g, lattice).items()})


def exact_marginal_field(g: GlobalState, lattice: RegionLattice) -> StatField:
    """Marginals of p_Ω on every region; consistent by construction"""
    return StatField(lattice, exact_marginal_densities(g, lattice).tensors)


def is_tree_like(lattice: RegionLattice) -> bool:
    """
    Acyclicity of the bipartite graph linking maximal regions to their
    non-empty pairwise intersections. Sufficient-only heuristic; advisory.
    """
    graph = nx.Graph()
    maximal = lattice.maximal_regions
    graph.add_nodes_from(('max', r) for r in maximal)
    for a, b, c in pairwise_intersections(maximal):
        if len(c) == 0:
            continue
        graph.add_edge(('max', a), ('cap', c))
        graph.add_edge(('max', b), ('cap', c))
    return nx.is_forest(graph)
