"""
Machine-readable outputs: run reports, beliefs files, trace CSV and the
invariant-check report. Floats go out with 17 significant digits; a
non-finite number is written as null and marks the report failed.
"""
import csv
import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, TextIO

import numpy as np

from .dynamics import FlowTrace
from .errors import BetheFlowError, ParseError
from .fields import BeliefField, DensityField0, Tensor
from .lattice import Region, RegionLattice

logger = logging.getLogger(__name__)

TRACE_HEADER = ['step', 'residual', 'consistency', 'conserved_drift']

_FLOAT_MARK = re.compile(r'"@@float:([^"@]+)@@"')


def format_float(x: float) -> str:
    return format(float(x), '.17g')


def _encode(value, flags: Dict[str, bool]):
    if isinstance(value, dict):
        return {k: _encode(v, flags) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v, flags) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            flags['failed'] = True
            return None
        return f"@@float:{format_float(value)}@@"
    return value


def dumps(data: Dict) -> str:
    """JSON text with every float at 17 significant digits"""
    flags = {'failed': False}
    encoded = _encode(data, flags)
    if flags['failed'] and isinstance(encoded, dict) and 'failed' in encoded:
        encoded['failed'] = True
    return _FLOAT_MARK.sub(r'\1', json.dumps(encoded, indent=4))


def beliefs_to_list(p: DensityField0) -> List[Dict]:
    return [{'region': list(k[-1].vars), 'table': t.flat()} for k, t in p.items()]


def beliefs_from_list(items, lattice: RegionLattice, where: str = 'beliefs') -> BeliefField:
    if not isinstance(items, list):
        raise ParseError("expected a list of {region, table}", where)
    tensors = {}
    for k, item in enumerate(items):
        loc = f"{where}[{k}]"
        if not isinstance(item, dict) or 'region' not in item or 'table' not in item:
            raise ParseError("expected {region, table}", loc)
        ids = item['region']
        if not isinstance(ids, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in ids):
            raise ParseError("a region is a list of integer variable ids", f"{loc}.region")
        region = Region.of(ids)
        if region not in lattice:
            raise ParseError(f"region {region} is not in the lattice", f"{loc}.region")
        try:
            tensors[region] = Tensor.from_flat(region, item['table'], lattice.cardinalities)
        except (BetheFlowError, TypeError, ValueError) as e:
            raise ParseError(str(e), f"{loc}.table") from e
    missing = [str(r) for r in lattice.regions if r not in tensors]
    if missing:
        raise ParseError(f"no belief for region(s) {', '.join(missing)}", where)
    try:
        return BeliefField(lattice, tensors)
    except BetheFlowError as e:
        raise ParseError(str(e), where) from e


def load_beliefs(path: str, lattice: RegionLattice) -> BeliefField:
    """Read beliefs from a beliefs file or from the beliefs block of a run report"""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from e
    if isinstance(data, dict):
        if 'beliefs' not in data:
            raise ParseError("missing field", 'beliefs')
        data = data['beliefs']
    return beliefs_from_list(data, lattice)


def write_trace_csv(trace: FlowTrace, stream: TextIO) -> int:
    """One row per recorded step; returns the row count"""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(TRACE_HEADER)
    for r in trace.records:
        writer.writerow([
            r.step,
            format_float(r.residual),
            format_float(r.consistency),
            '' if r.conserved_drift is None else format_float(r.conserved_drift),
        ])
    return len(trace.records)


@dataclass
class OracleComparison:
    log_partition: float
    max_belief_error: float
    bethe_gap: float

    def to_dict(self) -> Dict:
        return {
            'log_partition': self.log_partition,
            'max_belief_error': self.max_belief_error,
            'bethe_gap': self.bethe_gap,
        }


@dataclass
class RunReport:
    model: str
    converged: bool
    steps: int
    residual: float
    consistency_residual: float
    criticality_residual: float
    bethe_free_energy: float
    conserved_drift: Optional[float]
    tree_like: bool
    config: Dict
    beliefs: List[Dict]
    oracle: Optional[OracleComparison] = None
    failed: bool = False
    error: Optional[str] = None

    def __post_init__(self):
        numbers = [self.residual, self.consistency_residual, self.criticality_residual, self.bethe_free_energy]
        if self.conserved_drift is not None:
            numbers.append(self.conserved_drift)
        if not all(math.isfinite(x) for x in numbers):
            self.failed = True

    def to_dict(self) -> Dict:
        data = {
            'model': self.model,
            'converged': self.converged,
            'failed': self.failed,
            'steps': self.steps,
            'residuals': {
                'update': self.residual,
                'consistency': self.consistency_residual,
                'criticality': self.criticality_residual,
            },
            'bethe_free_energy': self.bethe_free_energy,
            'conserved_drift': self.conserved_drift,
            'tree_like': self.tree_like,
            'config': self.config,
            'beliefs': self.beliefs,
        }
        if self.oracle is not None:
            data['oracle'] = self.oracle.to_dict()
        if self.error is not None:
            data['error'] = self.error
        return data

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    skipped: bool = False
    detail: str = ''

    def to_dict(self) -> Dict:
        data = {'name': self.name, 'passed': self.passed, 'skipped': self.skipped,
                'worst': self.worst, 'tolerance': self.tolerance}
        if self.detail:
            data['detail'] = self.detail
        return data


@dataclass
class CheckReport:
    model: str
    seed: int
    trials: int
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> Dict:
        return {
            'model': self.model,
            'seed': self.seed,
            'trials': self.trials,
            'passed': self.passed,
            'invariants': [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())
