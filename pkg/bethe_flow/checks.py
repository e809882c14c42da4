"""
Randomized invariant battery run by `bethe-flow check`.

Each check draws fresh random fields from the seeded generator and returns the
worst error it saw. The invariants are universal, so the seed moves the worst
values but never the verdicts.
"""
import logging
from typing import Callable, List, Tuple

import numpy as np

from .algebra import convolve, identity, mobius, mobius_numbers, zeta
from .decomposition import (build_interaction_spaces, gauss_cone, gauss_subsystem, global_sum, mobius_weighted,
                            project, reconstruction_flux)
from .dynamics import effective_energy
from .errors import TooLarge
from .fields import (DensityField0, Field2, FluxField1, ObservableField0, Tensor, boundary1, boundary2,
                     differential0, dot, gibbs_state, marginal)
from .lattice import RegionLattice, nerve
from .reports import CheckReport, CheckResult

logger = logging.getLogger(__name__)

Check = Callable[[RegionLattice, np.random.Generator, int], float]


def check_mobius_inversion(lattice, rng, trials) -> float:
    mu, z, one = mobius(lattice), zeta(lattice), identity(lattice)
    exact = convolve(mu, z) == one and convolve(z, mu) == one
    c = mobius_numbers(lattice)
    sums = all(sum(c[a] for a in lattice.above(b, strict=False)) == 1 for b in lattice.regions)
    return 0.0 if exact and sums else 1.0


def check_boundary_squared(lattice, rng, trials) -> float:
    if not any(len(ch) == 3 for ch in nerve(lattice, 2)):
        return 0.0
    return max(boundary1(boundary2(Field2.random(lattice, rng))).sup_norm() for _ in range(trials))


def check_adjointness(lattice, rng, trials) -> float:
    worst = 0.0
    for _ in range(trials):
        omega = DensityField0.random(lattice, rng)
        phi = FluxField1.random(lattice, rng)
        worst = max(worst, abs(dot(differential0(omega), phi) - dot(omega, boundary1(phi))))
    return worst


def check_gauss_subsystem(lattice, rng, trials) -> float:
    worst = 0.0
    for _ in range(trials):
        phi = FluxField1.random(lattice, rng)
        for a in lattice.regions:
            lhs, rhs = gauss_subsystem(phi, a)
            worst = max(worst, (lhs - rhs).sup_norm())
    return worst


def check_gauss_cone(lattice, rng, trials) -> float:
    worst = 0.0
    for _ in range(trials):
        phi = FluxField1.random(lattice, rng)
        for b in lattice.regions:
            lhs, rhs = gauss_cone(phi, b)
            worst = max(worst, (lhs - rhs).sup_norm())
    return worst


def check_dimension_identity(lattice, rng, trials) -> float:
    basis = build_interaction_spaces(lattice)
    return float(max(abs(total - size) for total, size in
                     (basis.dimension_identity(a) for a in lattice.regions)))


def check_projection_kills_boundaries(lattice, rng, trials) -> float:
    basis = build_interaction_spaces(lattice)
    return max(project(boundary1(FluxField1.random(lattice, rng)), basis).sup_norm() for _ in range(trials))


def check_exactness_reconstruction(lattice, rng, trials) -> float:
    basis = build_interaction_spaces(lattice)
    worst = 0.0
    for _ in range(trials):
        u = ObservableField0.random(lattice, rng)
        u = u - project(u, basis).as_field()
        phi = reconstruction_flux(u, basis)
        worst = max(worst, (boundary1(phi) + u).sup_norm())
    return worst


def check_mobius_weighted_class(lattice, rng, trials) -> float:
    basis = build_interaction_spaces(lattice)
    worst = 0.0
    for _ in range(trials):
        v = ObservableField0.random(lattice, rng)
        worst = max(worst, project(v, basis).sup_distance(project(mobius_weighted(v), basis)))
    return worst


def check_global_sum_of_boundaries(lattice, rng, trials) -> float:
    return max(global_sum(boundary1(FluxField1.random(lattice, rng))).sup_norm() for _ in range(trials))


def check_effective_energy(lattice, rng, trials) -> float:
    cards = lattice.cardinalities
    worst = 0.0
    for _ in range(trials):
        for a, b in lattice.arrows:
            U = Tensor.random(a, cards, rng)
            lhs = marginal(gibbs_state(U), b)
            rhs = gibbs_state(effective_energy(U, b))
            worst = max(worst, (lhs - rhs).sup_norm())
            for c in lattice.between(a, b):
                through = effective_energy(effective_energy(U, c), b)
                worst = max(worst, (through - effective_energy(U, b)).sup_norm())
    return worst


CHECKS: List[Tuple[str, Check, float]] = [
    ('mobius_inversion', check_mobius_inversion, 0.0),
    ('boundary_squared', check_boundary_squared, 1e-10),
    ('adjointness', check_adjointness, 1e-10),
    ('gauss_subsystem', check_gauss_subsystem, 1e-10),
    ('gauss_cone', check_gauss_cone, 1e-10),
    ('dimension_identity', check_dimension_identity, 0.0),
    ('projection_kills_boundaries', check_projection_kills_boundaries, 1e-10),
    ('exactness_reconstruction', check_exactness_reconstruction, 1e-9),
    ('mobius_weighted_class', check_mobius_weighted_class, 1e-9),
    ('global_sum_of_boundaries', check_global_sum_of_boundaries, 1e-9),
    ('effective_energy', check_effective_energy, 1e-10),
]


def run_checks(lattice: RegionLattice, seed: int, trials: int = 10, model: str = 'model') -> CheckReport:
    logger.info(f"=== Checking invariants on {model} (seed {seed}, {trials} trials) ===")
    rng = np.random.default_rng(seed)
    report = CheckReport(model=model, seed=seed, trials=trials)
    for name, check, tolerance in CHECKS:
        try:
            worst = float(check(lattice, rng, trials))
        except TooLarge as e:
            logger.warning(f"{name} skipped: {e}")
            report.results.append(CheckResult(name, True, 0.0, tolerance, skipped=True, detail=str(e)))
            continue
        passed = worst <= tolerance
        if not passed:
            logger.warning(f"{name} failed: worst error {worst:.3e} > {tolerance:.1e}")
        report.results.append(CheckResult(name, passed, worst, tolerance))
    return report
