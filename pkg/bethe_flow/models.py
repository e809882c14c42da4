"""
Model files: variables, generator regions, potentials and flow defaults.

    {
        "format": "bethe-flow/1",
        "variables": [{"id": 1, "cardinality": 2}, {"id": 2, "cardinality": 3}],
        "regions": [[1, 2]],
        "potentials": [{"region": [1, 2], "table": [0, 1, 2, 3, 4, 5], "space": "log"}],
        "options": {"tau": 1.0}
    }

Flat tables are mixed radix with the first (smallest id) variable slowest, so
the table above reads h(x1, x2) = 3 * x1 + x2 for x1 in {0, 1}, x2 in {0, 1, 2}.
Linear tables hold f > 0 and are read as h = -ln f.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional

import numpy as np

from .dynamics import FlowConfig
from .errors import InvalidConfiguration, ParseError, UnknownVariable
from .fields import ObservableField0, Tensor, extend
from .lattice import Region, RegionLattice, VariableSpec, build_lattice
from .settings import MODEL_FORMAT

logger = logging.getLogger(__name__)

SPACES = ('log', 'linear')


def _require(data: Dict, key: str, kind, where: str):
    if not isinstance(data, dict):
        raise ParseError("expected an object", where or None)
    if key not in data:
        raise ParseError("missing field", f"{where}.{key}" if where else key)
    value = data[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ParseError(f"expected {getattr(kind, '__name__', kind)}", f"{where}.{key}" if where else key)
    return value


def _region(value, where: str) -> Region:
    if not isinstance(value, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in value):
        raise ParseError("a region is a list of integer variable ids", where)
    if len(set(value)) != len(value):
        raise ParseError("repeated variable in region", where)
    return Region.of(value)


@dataclass
class PotentialSpec:
    region: Region
    table: List[float]
    space: str = 'log'

    def log_table(self) -> np.ndarray:
        table = np.asarray(self.table, dtype=float)
        return -np.log(table) if self.space == 'linear' else table

    def to_dict(self) -> Dict:
        return {'region': list(self.region.vars), 'table': list(self.table), 'space': self.space}

    @classmethod
    def from_dict(cls, data: Dict, where: str = 'potential') -> 'PotentialSpec':
        region = _region(_require(data, 'region', list, where), f"{where}.region")
        table = _require(data, 'table', list, where)
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in table):
            raise ParseError("table entries must be numbers", f"{where}.table")
        space = data.get('space', 'log')
        if space not in SPACES:
            raise ParseError(f"space must be one of {SPACES}, got {space!r}", f"{where}.space")
        if not np.all(np.isfinite(table)):
            raise ParseError("table entries must be finite", f"{where}.table")
        if space == 'linear' and any(x <= 0 for x in table):
            raise ParseError("linear-space tables must be strictly positive", f"{where}.table")
        return cls(region, [float(x) for x in table], space)


@dataclass
class ModelFile:
    variables: List[VariableSpec]
    regions: List[Region]
    potentials: List[PotentialSpec] = field(default_factory=list)
    options: Dict = field(default_factory=dict)
    name: str = 'model'

    def __post_init__(self):
        self._validate()

    def _validate(self) -> None:
        cards = {v.id: v.cardinality for v in self.variables}
        for k, r in enumerate(self.regions):
            for i in r:
                if i not in cards:
                    raise UnknownVariable(i, where=f"regions[{k}]")
        for k, pot in enumerate(self.potentials):
            where = f"potentials[{k}]"
            for i in pot.region:
                if i not in cards:
                    raise UnknownVariable(i, where=f"{where}.region")
            if not any(pot.region <= r for r in self.regions):
                raise ParseError(f"region {pot.region} is not inside any generator region", f"{where}.region")
            expected = int(np.prod([cards[i] for i in pot.region], dtype=int))
            if len(pot.table) != expected:
                raise ParseError(f"table for {pot.region} needs {expected} entries, got {len(pot.table)}",
                                 f"{where}.table")
        try:
            FlowConfig.from_dict(self.options)
        except InvalidConfiguration as e:
            raise ParseError(str(e), 'options') from e

    def lattice(self) -> RegionLattice:
        return build_lattice(self.regions, self.variables)

    def flow_config(self, **overrides) -> FlowConfig:
        """Options from the file, overridden by every non-None keyword"""
        merged = dict(self.options)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return FlowConfig.from_dict(merged)

    def potential_field(self, lattice: Optional[RegionLattice] = None) -> ObservableField0:
        """
        h on the lattice. A potential whose region the closure lacks is moved to
        the smallest lattice region containing it, so ζh is unchanged on every
        region that sees it; repeated regions add up.
        """
        lattice = lattice or self.lattice()
        cards = lattice.cardinalities
        acc = {r: np.zeros(lattice.shape(r)) for r in lattice.regions}
        for pot in self.potentials:
            table = Tensor.from_flat(pot.region, pot.log_table(), cards)
            if pot.region in lattice:
                target = pot.region
            else:
                target = reduce(lambda x, y: x & y, [r for r in lattice.regions if pot.region <= r])
                logger.info(f"Potential on {pot.region} attached to lattice region {target}")
            acc[target] += extend(table, target, cards).values
        return ObservableField0(lattice, {r: Tensor(r, v) for r, v in acc.items()})

    def to_dict(self) -> Dict:
        return {
            'format': MODEL_FORMAT,
            'variables': [v.to_dict() for v in self.variables],
            'regions': [list(r.vars) for r in self.regions],
            'potentials': [p.to_dict() for p in self.potentials],
            'options': dict(self.options),
        }

    @classmethod
    def from_dict(cls, data: Dict, name: str = 'model') -> 'ModelFile':
        if not isinstance(data, dict):
            raise ParseError("model file must hold a JSON object")
        fmt = data.get('format')
        if fmt != MODEL_FORMAT:
            raise ParseError(f"expected {MODEL_FORMAT!r}, got {fmt!r}", 'format')

        variables = []
        for k, item in enumerate(_require(data, 'variables', list, '')):
            where = f"variables[{k}]"
            vid = _require(item, 'id', int, where)
            card = _require(item, 'cardinality', int, where)
            if vid < 0:
                raise ParseError("variable ids must be non-negative", f"{where}.id")
            if card < 2:
                raise ParseError("cardinality must be at least 2", f"{where}.cardinality")
            variables.append(VariableSpec(vid, card))
        ids = [v.id for v in variables]
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate variable ids", 'variables')

        regions = [_region(r, f"regions[{k}]") for k, r in enumerate(_require(data, 'regions', list, ''))]
        potentials = [PotentialSpec.from_dict(p, f"potentials[{k}]")
                      for k, p in enumerate(data.get('potentials', []))]
        options = data.get('options', {})
        if not isinstance(options, dict):
            raise ParseError("expected an object", 'options')
        unknown = set(options) - set(FlowConfig.__dataclass_fields__)
        if unknown:
            raise ParseError(f"unknown option(s) {sorted(unknown)}", 'options')
        return cls(variables, regions, potentials, options, name)


def load_model(path: str) -> ModelFile:
    """Read and validate a model file"""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from e
    name = os.path.splitext(os.path.basename(path))[0]
    model = ModelFile.from_dict(data, name)
    logger.info(f"Loaded model {name}: {len(model.variables)} variables, {len(model.regions)} regions, "
                f"{len(model.potentials)} potentials")
    return model


def save_model(model: ModelFile, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(model.to_dict(), f, indent=4)
