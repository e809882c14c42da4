"""
Incidence algebra of a region lattice.

Elements are scalar functions on pairs (a, b) with b ⊆ a, diagonal included.
ζ, μ and the Möbius numbers c stay in exact integer arithmetic; mixing with
float entries promotes through ordinary Python arithmetic.
"""
import logging
from functools import lru_cache
from numbers import Number
from typing import Dict, Iterator, Mapping, Optional, Tuple

from .errors import LatticeMismatch
from .lattice import Region, RegionLattice, nerve

logger = logging.getLogger(__name__)

Pair = Tuple[Region, Region]


def _same_lattice(x, y) -> RegionLattice:
    if x.lattice is not y.lattice and x.lattice != y.lattice:
        raise LatticeMismatch("Operands are defined on different lattices")
    return x.lattice


class IncidenceElement:
    """Scalar per pair (a, b) with b ⊆ a; missing pairs read as 0"""

    def __init__(self, lattice: RegionLattice, entries: Optional[Mapping[Pair, Number]] = None):
        self.lattice = lattice
        self.entries: Dict[Pair, Number] = {}
        for (a, b), value in (entries or {}).items():
            if not b <= a:
                raise ValueError(f"Incidence entry ({a}, {b}) needs {b} ⊆ {a}")
            lattice.require(a)
            lattice.require(b)
            if value != 0:
                self.entries[(a, b)] = value

    def __getitem__(self, pair: Pair) -> Number:
        return self.entries.get(pair, 0)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.entries)

    def items(self):
        return self.entries.items()

    def __eq__(self, other):
        if not isinstance(other, IncidenceElement):
            return NotImplemented
        return self.lattice == other.lattice and self.entries == other.entries

    def __add__(self, other: 'IncidenceElement') -> 'IncidenceElement':
        lattice = _same_lattice(self, other)
        out = dict(self.entries)
        for pair, value in other.items():
            out[pair] = out.get(pair, 0) + value
        return IncidenceElement(lattice, out)

    def __neg__(self) -> 'IncidenceElement':
        return IncidenceElement(self.lattice, {p: -v for p, v in self.items()})

    def __sub__(self, other: 'IncidenceElement') -> 'IncidenceElement':
        return self + (-other)

    def __mul__(self, scalar: Number) -> 'IncidenceElement':
        return IncidenceElement(self.lattice, {p: scalar * v for p, v in self.items()})

    __rmul__ = __mul__

    def __repr__(self):
        body = ", ".join(f"{a}>{b}: {v}" for (a, b), v in sorted(
            self.items(), key=lambda kv: (self.lattice.index[kv[0][0]], self.lattice.index[kv[0][1]])))
        return f"IncidenceElement({body})"


class ScalarField0:
    """One scalar per region"""

    def __init__(self, lattice: RegionLattice, values: Optional[Mapping[Region, Number]] = None):
        self.lattice = lattice
        values = values or {}
        for r in values:
            lattice.require(r)
        self.values: Dict[Region, Number] = {r: values.get(r, 0) for r in lattice.regions}

    @classmethod
    def ones(cls, lattice: RegionLattice) -> 'ScalarField0':
        return cls(lattice, {r: 1 for r in lattice.regions})

    def __getitem__(self, region: Region) -> Number:
        return self.values[self.lattice.require(region)]

    def __iter__(self):
        return iter(self.lattice.regions)

    def items(self):
        return self.values.items()

    def __eq__(self, other):
        if not isinstance(other, ScalarField0):
            return NotImplemented
        return self.lattice == other.lattice and self.values == other.values

    def __add__(self, other: 'ScalarField0') -> 'ScalarField0':
        lattice = _same_lattice(self, other)
        return ScalarField0(lattice, {r: self.values[r] + other.values[r] for r in lattice})

    def __sub__(self, other: 'ScalarField0') -> 'ScalarField0':
        lattice = _same_lattice(self, other)
        return ScalarField0(lattice, {r: self.values[r] - other.values[r] for r in lattice})

    def to_dict(self) -> Dict[str, Number]:
        return {str(r): v for r, v in self.values.items()}

    def __repr__(self):
        return "ScalarField0(" + ", ".join(f"{r}: {v}" for r, v in self.values.items()) + ")"


def dot(x: ScalarField0, y: ScalarField0) -> Number:
    lattice = _same_lattice(x, y)
    return sum(x.values[r] * y.values[r] for r in lattice)


def identity(lattice: RegionLattice) -> IncidenceElement:
    """Kronecker δ, unit of the convolution"""
    return IncidenceElement(lattice, {(a, a): 1 for a in lattice.regions})


def zeta(lattice: RegionLattice) -> IncidenceElement:
    return IncidenceElement(lattice, {(a, b): 1 for a in lattice.regions
                                      for b in lattice.below(a, strict=False)})


def convolve(phi: IncidenceElement, psi: IncidenceElement) -> IncidenceElement:
    """(φ * ψ)_{ac} = Σ_{a ⊇ b ⊇ c} φ_{ab} ψ_{bc}"""
    lattice = _same_lattice(phi, psi)
    out: Dict[Pair, Number] = {}
    for a in lattice.regions:
        for b in lattice.below(a, strict=False):
            f = phi[(a, b)]
            if f == 0:
                continue
            for c in lattice.below(b, strict=False):
                g = psi[(b, c)]
                if g != 0:
                    out[(a, c)] = out.get((a, c), 0) + f * g
    return IncidenceElement(lattice, out)


def power(phi: IncidenceElement, k: int) -> IncidenceElement:
    result = identity(phi.lattice)
    for _ in range(k):
        result = convolve(result, phi)
    return result


@lru_cache(maxsize=64)
def mobius(lattice: RegionLattice) -> IncidenceElement:
    """μ = ζ⁻¹ by recursion: μ_aa = 1, μ_ab = -Σ_{a ⊇ g ⊋ b} μ_ag"""
    entries: Dict[Pair, int] = {}
    for a in lattice.regions:
        entries[(a, a)] = 1
        # below(a) is in topological order so every g ⊋ b is settled before b
        for b in lattice.below(a):
            entries[(a, b)] = -sum(entries.get((a, g), 0) for g in lattice.above(b) if g <= a)
    return IncidenceElement(lattice, entries)


def mobius_series(lattice: RegionLattice) -> IncidenceElement:
    """μ = Σ_k (-1)^k (ζ - 1)^{*k}; exponential, kept as a cross-check"""
    strict = zeta(lattice) - identity(lattice)
    total = identity(lattice)
    term = identity(lattice)
    sign = 1
    for _ in range(len(lattice)):
        term = convolve(term, strict)
        if not term.entries:
            break
        sign = -sign
        total = total + sign * term
    return total


def chain_count(lattice: RegionLattice, a: Region, b: Region, k: int) -> int:
    """Number of non-degenerate k-chains starting at a and ending at b"""
    if k == 0:
        return int(a == b)
    return sum(1 for c in nerve(lattice, k) if c[0] == a and c.last == b)


def act_left(phi: IncidenceElement, lam: ScalarField0) -> ScalarField0:
    """(φ · λ)_a = Σ_{b ⊆ a} φ_{ab} λ_b"""
    lattice = _same_lattice(phi, lam)
    return ScalarField0(lattice, {
        a: sum(phi[(a, b)] * lam.values[b] for b in lattice.below(a, strict=False))
        for a in lattice.regions})


def act_right(lam: ScalarField0, phi: IncidenceElement) -> ScalarField0:
    """(λ · φ)_b = Σ_{a ⊇ b} λ_a φ_{ab}"""
    lattice = _same_lattice(phi, lam)
    return ScalarField0(lattice, {
        b: sum(lam.values[a] * phi[(a, b)] for a in lattice.above(b, strict=False))
        for b in lattice.regions})


@lru_cache(maxsize=64)
def mobius_numbers(lattice: RegionLattice) -> ScalarField0:
    """c_b = Σ_{a ⊇ b} μ_ab; the Bethe weights"""
    c = act_right(ScalarField0.ones(lattice), mobius(lattice))
    logger.debug("Möbius numbers: " + ", ".join(f"{r}={v}" for r, v in c.items()))
    return c
