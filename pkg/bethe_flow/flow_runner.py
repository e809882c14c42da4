import logging
from typing import Optional, Tuple

from .checks import run_checks
from .dynamics import FlowConfig, FlowTrace, run_flow
from .energy import EnergyReport, bethe_free_energy, criticality_residual, energy_report
from .errors import BetheFlowError, NumericalOverflow, TooLarge
from .fields import DensityField0, ObservableField0, belief_field, consistency_residual, log_gibbs_field, zeta_action_obs
from .models import ModelFile
from .oracle import exact_log_marginal_field, exact_marginal_densities, global_gibbs, is_tree_like
from .reports import CheckReport, OracleComparison, RunReport, beliefs_to_list

logger = logging.getLogger(__name__)


class FlowRunner:
    """Wires a model file to the lattice, the flow, the oracle and the reports"""

    def __init__(self, model: ModelFile):
        self.model = model
        self.lattice = model.lattice()
        self.h = model.potential_field(self.lattice)
        self.H = zeta_action_obs(self.h)
        logger.info(f"=== {model.name}: {len(self.lattice)} regions, {len(self.lattice.arrows)} arrows ===")

    def run(self, config: Optional[FlowConfig] = None, oracle: bool = False) -> Tuple[RunReport, FlowTrace]:
        config = config or self.model.flow_config()
        try:
            state, trace = run_flow(self.h, config)
        except NumericalOverflow as e:
            trace = e.trace if e.trace is not None else FlowTrace()
            state = e.state
            return self._report(state, trace, config, oracle, error=str(e)), trace
        return self._report(state, trace, config, oracle), trace

    def _report(self, state, trace: FlowTrace, config: FlowConfig, oracle: bool,
                error: Optional[str] = None) -> RunReport:
        U = zeta_action_obs(state.u)
        try:
            q = belief_field(U)
        except BetheFlowError as e:
            logger.warning(f"No beliefs at step {state.step}: {e}")
            q = None
        if q is not None:
            criticality = criticality_residual(q, self.H, log_p=log_gibbs_field(U))
            consistency = consistency_residual(q)
            bethe = bethe_free_energy(q, self.H)
        else:
            criticality = consistency = bethe = float('nan')

        comparison = None
        if oracle and q is not None:
            comparison = self._compare(q, bethe)

        return RunReport(
            model=self.model.name,
            converged=trace.converged and error is None,
            steps=state.step,
            residual=state.residual,
            consistency_residual=consistency,
            criticality_residual=criticality,
            bethe_free_energy=bethe,
            conserved_drift=trace.max_conserved_drift,
            tree_like=is_tree_like(self.lattice),
            config=config.to_dict(),
            beliefs=beliefs_to_list(q) if q is not None else [],
            oracle=comparison,
            failed=error is not None,
            error=error,
        )

    def _compare(self, q: DensityField0, bethe: float) -> Optional[OracleComparison]:
        try:
            g = global_gibbs(self.h)
        except TooLarge as e:
            logger.warning(f"Oracle comparison skipped: {e}")
            return None
        exact = exact_marginal_densities(g, self.lattice)
        return OracleComparison(
            log_partition=g.log_partition,
            max_belief_error=(q - exact).sup_norm(),
            bethe_gap=-g.log_partition - bethe,
        )

    def check(self, seed: int, trials: int = 10) -> CheckReport:
        return run_checks(self.lattice, seed, trials, model=self.model.name)

    def energy(self, p: Optional[DensityField0] = None) -> EnergyReport:
        """Energy report at the given beliefs, or at the oracle marginals when none are given"""
        log_partition = None
        log_p: Optional[ObservableField0] = None
        if p is None:
            g = global_gibbs(self.h)
            p = exact_marginal_densities(g, self.lattice)
            log_p = exact_log_marginal_field(g, self.lattice)
            log_partition = g.log_partition
        else:
            try:
                log_partition = global_gibbs(self.h).log_partition
            except TooLarge:
                logger.info("Global space too large, Bethe gap not reported")
        return energy_report(p, self.H, log_partition, log_p=log_p)
