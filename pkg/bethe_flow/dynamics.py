"""
Belief propagation as the transport equation u̇ = ∂Φ(u).

Potential form integrates u directly; message form integrates the log-messages
φ and reads u = h + ∂φ off them. Both use the explicit Euler scheme
u ← u + τ Ξ(u); τ = 1 is the classical sum-product rule.
"""
import logging
from dataclasses import dataclass, field
from numbers import Real
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from . import settings
from .algebra import ScalarField0, mobius_numbers
from .decomposition import global_sum, homology_equivalent
from .energy import criticality_residual
from .errors import DidNotConverge, InvalidConfiguration, NotASubregion, NumericalOverflow
from .fields import (FluxField1, ObservableField0, StatField, Tensor, belief_field, boundary1, consistency_residual,
                     extend, gibbs_field, log_gibbs_field, marginal, mobius_action_obs, normalize_field,
                     zeta_action_obs)
from .lattice import Region, RegionLattice, coboundary_down

logger = logging.getLogger(__name__)

FORMS = ('potential', 'message')
SCHEDULES = ('synchronous', 'sequential')


@dataclass
class FlowConfig:
    tau: float = 1.0
    max_steps: int = 10000
    tolerance: float = 1e-10
    normalize: bool = True
    form: str = 'potential'
    schedule: str = 'synchronous'

    def __post_init__(self):
        for name in ('tau', 'tolerance', 'max_steps'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Real):
                raise InvalidConfiguration(f"{name} must be a number, got {value!r}")
            if not np.isfinite(value):
                raise InvalidConfiguration(f"{name} must be finite, got {value!r}")
        if not isinstance(self.normalize, bool):
            raise InvalidConfiguration(f"normalize must be true or false, got {self.normalize!r}")
        for name in ('form', 'schedule'):
            if not isinstance(getattr(self, name), str):
                raise InvalidConfiguration(f"{name} must be a string, got {getattr(self, name)!r}")
        if not self.tau > 0:
            raise InvalidConfiguration(f"tau must be positive, got {self.tau}")
        if not self.tolerance > 0:
            raise InvalidConfiguration(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 0:
            raise InvalidConfiguration(f"max_steps must be a non-negative integer, got {self.max_steps}")
        if self.form not in FORMS:
            raise InvalidConfiguration(f"form must be one of {FORMS}, got {self.form!r}")
        if self.schedule not in SCHEDULES:
            raise InvalidConfiguration(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        self.max_steps = int(self.max_steps)

    def to_dict(self) -> Dict:
        return {
            'tau': self.tau,
            'max_steps': self.max_steps,
            'tolerance': self.tolerance,
            'normalize': self.normalize,
            'form': self.form,
            'schedule': self.schedule,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'FlowConfig':
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass
class FlowState:
    h: ObservableField0
    u: ObservableField0
    phi: Optional[FluxField1] = None   # message form only
    step: int = 0
    residual: float = float('inf')

    @property
    def lattice(self) -> RegionLattice:
        return self.u.lattice


@dataclass
class TraceRecord:
    step: int
    residual: float
    consistency: float
    conserved_drift: Optional[float] = None


@dataclass
class FlowTrace:
    records: List[TraceRecord] = field(default_factory=list)
    converged: bool = False
    initial_conserved: Optional[Tensor] = None

    def append(self, record: TraceRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise ValueError(f"Trace steps must increase, got {record.step} after {self.records[-1].step}")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    @property
    def steps(self) -> int:
        return self.records[-1].step if self.records else 0

    @property
    def max_conserved_drift(self) -> Optional[float]:
        drifts = [r.conserved_drift for r in self.records if r.conserved_drift is not None]
        return max(drifts) if drifts else None


# --- effective energy and the vector field ------------------------------------

def effective_energy(U: Tensor, b: Region) -> Tensor:
    """F^{ba}(U_a) = -ln Σ^{ba}(e^{-U_a}), via a max-shifted logsumexp"""
    if not b <= U.region:
        raise NotASubregion(b, U.region)
    if b == U.region:
        return U
    axes = tuple(k for k, i in enumerate(U.region) if i not in b)
    return Tensor(b, -logsumexp(-U.values, axis=axes))


def effective_gradient(H: ObservableField0) -> FluxField1:
    """∇F(H)_ab = H_b - F^{ba}(H_a)"""
    lattice = H.lattice
    return FluxField1(lattice, {(a, b): H[b] - effective_energy(H[a], b) for a, b in lattice.arrows})


def phi_arrow(h: ObservableField0, a: Region, b: Region) -> Tensor:
    """Φ_ab(h) = F^{ba}(Σ_{b' ∈ Λ^a ∖ Λ^b} h_b')"""
    lattice = h.lattice
    cards = lattice.cardinalities
    acc = np.zeros(lattice.shape(a))
    for r in lattice.below(a, strict=False):
        if not r <= b:
            acc += extend(h[r], a, cards).values
    return effective_energy(Tensor(a, acc), b)


def phi_field(h: ObservableField0) -> FluxField1:
    lattice = h.lattice
    return FluxField1(lattice, {(a, b): phi_arrow(h, a, b) for a, b in lattice.arrows})


def xi(u: ObservableField0) -> ObservableField0:
    """Ξ = ∂Φ"""
    return boundary1(phi_field(u))


def xi_hamiltonian(H: ObservableField0) -> ObservableField0:
    """The same vector field read on local hamiltonians: ζ Ξ(μ H)"""
    return zeta_action_obs(xi(mobius_action_obs(H)))


def transport(h: ObservableField0, phi: FluxField1) -> ObservableField0:
    """T_h(φ) = h + ∂φ"""
    return h + boundary1(phi)


def beliefs(u: ObservableField0) -> StatField:
    """q_a = [e^{-(ζ u)_a}]"""
    return gibbs_field(zeta_action_obs(u))


# --- integration ----------------------------------------------------------------

def initial_state(h: ObservableField0, config: FlowConfig, phi: Optional[FluxField1] = None) -> FlowState:
    if config.form == 'message':
        phi = phi if phi is not None else FluxField1.zeros(h.lattice)
        return FlowState(h=h, u=transport(h, phi), phi=phi)
    u = h if phi is None else transport(h, phi)
    return FlowState(h=h, u=normalize_field(u) if config.normalize else u)


def _push_arrow(acc: Dict[Region, np.ndarray], a: Region, b: Region, t: Tensor, cards) -> None:
    # boundary of a flux supported on the single arrow a > b
    acc[b] += t.values
    acc[a] -= extend(t, a, cards).values


def _sequential_sweep(state: FlowState, tau: float) -> Tuple[ObservableField0, Optional[FluxField1]]:
    lattice = state.lattice
    cards = lattice.cardinalities
    u = {r: state.u[r].values.copy() for r in lattice.regions}
    phi = {k: t.values.copy() for k, t in state.phi.items()} if state.phi is not None else None
    for a, b in lattice.arrows:
        current = ObservableField0(lattice, {r: Tensor(r, v) for r, v in u.items()})
        delta = phi_arrow(current, a, b) * tau
        _push_arrow(u, a, b, delta, cards)
        if phi is not None:
            phi[(a, b)] += delta.values
    new_phi = FluxField1(lattice, {k: Tensor(k[-1], v) for k, v in phi.items()}) if phi is not None else None
    return ObservableField0(lattice, {r: Tensor(r, v) for r, v in u.items()}), new_phi


def euler_step(state: FlowState, config: FlowConfig) -> FlowState:
    """
    One step of (1 + τΞ). The residual is the sup-norm of the mean-free part
    of the update applied to u.
    """
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        if config.schedule == 'sequential':
            u_raw, phi = _sequential_sweep(state, config.tau)
            if config.form == 'message':
                if config.normalize:
                    phi = normalize_field(phi)
                u = transport(state.h, phi)
            else:
                u = normalize_field(u_raw) if config.normalize else u_raw
            residual = (u_raw - state.u).mean_free_norm()
        elif config.form == 'message':
            delta = phi_field(state.u) * config.tau
            phi = state.phi + delta
            if config.normalize:
                phi = normalize_field(phi)
            u = transport(state.h, phi)
            residual = boundary1(delta).mean_free_norm()
        else:
            phi = None
            update = xi(state.u) * config.tau
            u = state.u + update
            if config.normalize:
                u = normalize_field(u)
            residual = update.mean_free_norm()

    if not u.is_finite() or (phi is not None and not phi.is_finite()) or not np.isfinite(residual):
        raise NumericalOverflow(f"Non-finite entries after step {state.step + 1}", state=state)
    return FlowState(h=state.h, u=u, phi=phi, step=state.step + 1, residual=residual)


def conserved_quantity(u: ObservableField0, c: Optional[ScalarField0] = None) -> Tuple[Tensor, Tensor]:
    """
    U_Ω computed twice: Σ_a j(u_a) and Σ_b c_b j((ζu)_b). Raises TooLarge past
    the oracle size guard.
    """
    lattice = u.lattice
    c = c if c is not None else mobius_numbers(lattice)
    direct = global_sum(u)
    H = zeta_action_obs(u)
    acc = np.zeros(lattice.shape(lattice.omega))
    for b in lattice.regions:
        if c[b]:
            acc += c[b] * extend(H[b], lattice.omega, lattice.cardinalities).values
    return direct, Tensor(lattice.omega, acc)


def _conserved(u: ObservableField0) -> Optional[Tensor]:
    if u.lattice.size(u.lattice.omega) > settings.ORACLE_MAX_STATES:
        return None
    return global_sum(u)


def _record(state: FlowState, trace: FlowTrace, config: FlowConfig) -> None:
    H = zeta_action_obs(state.u)
    q = belief_field(H)
    drift = None
    if trace.initial_conserved is not None:
        diff = global_sum(state.u) - trace.initial_conserved
        drift = (diff.mean_free() if config.normalize else diff).sup_norm()
    trace.append(TraceRecord(
        step=state.step,
        residual=state.residual,
        consistency=consistency_residual(q),
        conserved_drift=drift,
    ))


def run_flow(h: ObservableField0, config: Optional[FlowConfig] = None, phi: Optional[FluxField1] = None,
             strict: bool = False) -> Tuple[FlowState, FlowTrace]:
    """
    Iterate euler_step until the residual drops to the tolerance or max_steps
    is reached. Returns the last state and the trace; trace.converged tells
    which. With strict=True a non-converged run raises DidNotConverge instead.
    """
    config = config or FlowConfig()
    logger.info(f"=== Running {config.form} flow: tau={config.tau}, schedule={config.schedule}, "
                f"normalize={config.normalize} ===")
    state = initial_state(h, config, phi)
    trace = FlowTrace(initial_conserved=_conserved(state.u))
    if trace.initial_conserved is None:
        logger.info("Global space too large, conserved quantity not tracked")

    while state.step < config.max_steps:
        try:
            state = euler_step(state, config)
        except NumericalOverflow as e:
            logger.warning(f"Flow diverged: {e}")
            e.trace = trace
            raise
        _record(state, trace, config)
        logger.debug(f"step {state.step}: residual {state.residual:.3e}")
        if state.residual <= config.tolerance:
            trace.converged = True
            break

    if trace.converged:
        logger.info(f"Converged after {state.step} steps")
    else:
        logger.warning(f"No convergence after {state.step} steps, residual {state.residual:.3e}")
        if strict:
            raise DidNotConverge(f"Residual {state.residual:.3e} after {state.step} steps",
                                 state=state, trace=trace)
    return state, trace


@dataclass
class FixedPointDiagnostics:
    is_fixed_point: bool
    consistency_residual: float
    criticality_residual: float
    in_homology_class: bool

    def __bool__(self):
        return self.is_fixed_point

    def to_dict(self) -> Dict:
        return {
            'is_fixed_point': self.is_fixed_point,
            'consistency_residual': self.consistency_residual,
            'criticality_residual': self.criticality_residual,
            'in_homology_class': self.in_homology_class,
        }


def is_fixed_point(state: FlowState, h: ObservableField0, tolerance: float = 1e-9) -> FixedPointDiagnostics:
    """
    Static test: beliefs of state.u are consistent. Says nothing about whether
    iterating the flow reaches the point.
    """
    U = zeta_action_obs(state.u)
    q = belief_field(U)
    consistency = consistency_residual(q)
    criticality = criticality_residual(q, zeta_action_obs(h), log_p=log_gibbs_field(U))
    return FixedPointDiagnostics(
        is_fixed_point=consistency <= tolerance,
        consistency_residual=consistency,
        criticality_residual=criticality,
        in_homology_class=homology_equivalent(state.u, h, modulo_constants=True),
    )


def classical_message_update(h: ObservableField0, phi: FluxField1) -> FluxField1:
    """
    The multiplicative sum-product rule m_ab ← m_ab Σ^{ba}(q_a) / q_b with
    q_a = Π_{b ⊆ a} f_b Π_{δΛ^a} m, f = e^{-h}, m = e^{-φ}. Returns -ln m'.
    """
    lattice = h.lattice
    cards = lattice.cardinalities
    f = {r: np.exp(-h[r].values) for r in lattice.regions}
    m = {k: np.exp(-t.values) for k, t in phi.items()}
    q = {}
    for a in lattice.regions:
        acc = np.ones(lattice.shape(a))
        for r in lattice.below(a, strict=False):
            acc = acc * extend(Tensor(r, f[r]), a, cards).values
        for x, y in coboundary_down(lattice, a):
            acc = acc * extend(Tensor(y, m[(x, y)]), a, cards).values
        q[a] = Tensor(a, acc)
    out = {}
    for a, b in lattice.arrows:
        updated = m[(a, b)] * marginal(q[a], b).values / q[b].values
        out[(a, b)] = Tensor(b, -np.log(updated))
    return FluxField1(lattice, out)
