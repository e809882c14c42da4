import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, Sequence, Set, Tuple

from .errors import BetheFlowError, RegionNotInLattice, UnknownVariable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariableSpec:
    id: int
    cardinality: int

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"Variable id must be non-negative, got {self.id}")
        if self.cardinality < 2:
            raise ValueError(f"Variable {self.id} needs cardinality >= 2, got {self.cardinality}")

    def to_dict(self) -> Dict:
        return {'id': self.id, 'cardinality': self.cardinality}

    @classmethod
    def from_dict(cls, data: Dict) -> 'VariableSpec':
        return cls(id=int(data['id']), cardinality=int(data['cardinality']))


@dataclass(frozen=True)
class Region:
    """A sorted, duplicate-free tuple of variable ids. The empty region is valid."""

    vars: Tuple[int, ...] = ()

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.vars, self.vars[1:])):
            raise ValueError(f"Region ids must be strictly increasing: {self.vars}")

    @classmethod
    def of(cls, ids: Iterable[int]) -> 'Region':
        return cls(tuple(sorted(set(int(i) for i in ids))))

    def __len__(self):
        return len(self.vars)

    def __iter__(self) -> Iterator[int]:
        return iter(self.vars)

    def __contains__(self, var) -> bool:
        return var in self.vars

    def __and__(self, other: 'Region') -> 'Region':
        # merge scan over both sorted lists
        out = []
        i = j = 0
        a, b = self.vars, other.vars
        while i < len(a) and j < len(b):
            if a[i] == b[j]:
                out.append(a[i])
                i += 1
                j += 1
            elif a[i] < b[j]:
                i += 1
            else:
                j += 1
        return Region(tuple(out))

    def __or__(self, other: 'Region') -> 'Region':
        return Region.of(self.vars + other.vars)

    def __sub__(self, other: 'Region') -> 'Region':
        return Region(tuple(v for v in self.vars if v not in other.vars))

    def __le__(self, other: 'Region') -> bool:
        return set(self.vars) <= set(other.vars)

    def __lt__(self, other: 'Region') -> bool:
        return len(self.vars) < len(other.vars) and self <= other

    def __ge__(self, other: 'Region') -> bool:
        return other <= self

    def __gt__(self, other: 'Region') -> bool:
        return other < self

    def sort_key(self):
        """Decreasing size, then lexicographic on the id list"""
        return (-len(self.vars), self.vars)

    def __str__(self):
        if not self.vars:
            return "∅"
        return "{" + ",".join(str(v) for v in self.vars) + "}"

    def __repr__(self):
        return f"Region({str(self)})"


EMPTY = Region(())


@dataclass(frozen=True)
class Chain:
    """Strictly decreasing sequence of regions; a p-chain has p+1 regions"""

    regions: Tuple[Region, ...]

    def __post_init__(self):
        if not self.regions:
            raise ValueError("A chain holds at least one region")
        for a, b in zip(self.regions, self.regions[1:]):
            if not b < a:
                raise ValueError(f"Chain is not strictly decreasing at {a} > {b}")

    @property
    def degree(self) -> int:
        return len(self.regions) - 1

    @property
    def last(self) -> Region:
        return self.regions[-1]

    def face(self, k: int) -> 'Chain':
        return Chain(self.regions[:k] + self.regions[k + 1:])

    def faces(self) -> List['Chain']:
        return [self.face(k) for k in range(len(self.regions))] if self.degree > 0 else []

    def __iter__(self):
        return iter(self.regions)

    def __len__(self):
        return len(self.regions)

    def __getitem__(self, k):
        return self.regions[k]

    def __str__(self):
        return " > ".join(str(r) for r in self.regions)


Arrow = Tuple[Region, Region]


class RegionLattice:
    """
    Intersection-closed family of regions with all strict-inclusion arrows.

    Regions are kept in a fixed topological order: decreasing size, ties broken
    lexicographically, so every superset of a region comes before it.
    """

    def __init__(self, regions: Iterable[Region], variables: Sequence[VariableSpec]):
        self.variables: Tuple[VariableSpec, ...] = tuple(sorted(variables, key=lambda v: v.id))
        self.cardinalities: Dict[int, int] = {v.id: v.cardinality for v in self.variables}
        self.regions: Tuple[Region, ...] = tuple(sorted(set(regions), key=Region.sort_key))
        self.index: Dict[Region, int] = {r: i for i, r in enumerate(self.regions)}
        self._below: Dict[Region, List[Region]] = {r: [] for r in self.regions}
        self._above: Dict[Region, List[Region]] = {r: [] for r in self.regions}
        arrows = []
        for a in self.regions:
            for b in self.regions:
                if b < a:
                    arrows.append((a, b))
                    self._below[a].append(b)
                    self._above[b].append(a)
        self.arrows: Tuple[Arrow, ...] = tuple(arrows)

    # --- identity ----------------------------------------------------------

    def _key(self):
        return (self.regions, tuple((v.id, v.cardinality) for v in self.variables))

    def __eq__(self, other):
        return isinstance(other, RegionLattice) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __len__(self):
        return len(self.regions)

    def __iter__(self) -> Iterator[Region]:
        return iter(self.regions)

    def __contains__(self, region) -> bool:
        return region in self.index

    def __repr__(self):
        return "RegionLattice " + " ".join(str(r) for r in self.regions)

    # --- queries -----------------------------------------------------------

    def require(self, region: Region) -> Region:
        if region not in self.index:
            raise RegionNotInLattice(region)
        return region

    def below(self, a: Region, strict: bool = True) -> List[Region]:
        self.require(a)
        return self._below[a] if strict else [a] + self._below[a]

    def above(self, b: Region, strict: bool = True) -> List[Region]:
        self.require(b)
        return self._above[b] if strict else self._above[b] + [b]

    def between(self, a: Region, c: Region) -> List[Region]:
        """Regions strictly between a and c"""
        return [b for b in self.below(a) if c < b]

    @cached_property
    def omega(self) -> Region:
        return Region(tuple(v.id for v in self.variables))

    @cached_property
    def maximal_regions(self) -> List[Region]:
        return [r for r in self.regions if not self._above[r]]

    def shape(self, region: Region) -> Tuple[int, ...]:
        return tuple(self.cardinalities[i] for i in region)

    def size(self, region: Region) -> int:
        n = 1
        for i in region:
            n *= self.cardinalities[i]
        return n


def _check_variables(generators: Sequence[Region], variables: Sequence[VariableSpec]) -> None:
    ids = [v.id for v in variables]
    if len(set(ids)) != len(ids):
        raise BetheFlowError(f"Duplicate variable ids in {sorted(ids)}")
    declared = set(ids)
    for g in generators:
        for i in g:
            if i not in declared:
                raise UnknownVariable(i, where=f"region {g}")


def closure(generators: Iterable[Region]) -> Set[Region]:
    """Close a family of regions under pairwise intersection and add the empty region"""
    closed = set(generators) | {EMPTY}
    frontier = set(closed)
    while frontier:
        new = set()
        for a in frontier:
            for b in closed:
                c = a & b
                if c not in closed:
                    new.add(c)
        closed |= new
        frontier = new
    return closed


def build_lattice(generators: Iterable[Region], variables: Sequence[VariableSpec]) -> RegionLattice:
    generators = [g if isinstance(g, Region) else Region.of(g) for g in generators]
    _check_variables(generators, variables)
    regions = closure(generators)
    lattice = RegionLattice(regions, variables)
    logger.debug(f"Built lattice with {len(lattice)} regions and {len(lattice.arrows)} arrows "
                 f"from {len(generators)} generators")
    return lattice


def nerve(lattice: RegionLattice, p: int) -> List[Chain]:
    """All strictly decreasing chains of p+1 regions, in topological order"""
    if p < 0:
        raise ValueError(f"Nerve degree must be non-negative, got {p}")
    chains = [(a,) for a in lattice.regions]
    for _ in range(p):
        chains = [c + (b,) for c in chains for b in lattice.below(c[-1])]
        if not chains:
            break
    return [Chain(c) for c in chains]


def nerve_dimension(lattice: RegionLattice) -> int:
    """Degree of the longest non-degenerate chain"""
    depth: Dict[Region, int] = {}
    for r in reversed(lattice.regions):
        depth[r] = max((depth[b] + 1 for b in lattice.below(r)), default=0)
    return max(depth.values(), default=0)


def subsystem(lattice: RegionLattice, a: Region) -> List[Region]:
    """Λ^a: regions contained in a, including a and ∅"""
    return lattice.below(a, strict=False)


def coboundary_down(lattice: RegionLattice, a: Region) -> List[Arrow]:
    """Arrows entering Λ^a from outside"""
    inside = set(subsystem(lattice, a))
    return [(x, y) for x, y in lattice.arrows if x not in inside and y in inside]


def cone_up(lattice: RegionLattice, b: Region) -> List[Region]:
    """V_b: regions containing b, including b"""
    return lattice.above(b, strict=False)


def coboundary_up(lattice: RegionLattice, b: Region) -> List[Arrow]:
    """Arrows leaving V_b"""
    inside = set(cone_up(lattice, b))
    return [(x, y) for x, y in lattice.arrows if x in inside and y not in inside]


def pairwise_intersections(regions: Sequence[Region]) -> List[Tuple[Region, Region, Region]]:
    return [(a, b, a & b) for a, b in combinations(regions, 2)]
