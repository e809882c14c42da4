"""
Tensors on configuration spaces and the complex of observable / density fields.

A Tensor on region a is a numpy array shaped by the cardinalities of the
variables of a in sorted id order. C (row-major) order therefore gives the
mixed-radix flat convention: first variable slowest. The empty region holds a
0-d array with exactly one entry.

Potentials and messages live in log space; probabilities only appear through
gibbs_state.
"""
import logging
from dataclasses import dataclass
from numbers import Number
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax

from .algebra import ScalarField0, mobius
from .errors import LatticeMismatch, NonPositiveBelief, NotAProbability, NotASubregion, ShapeMismatch
from .lattice import Chain, Region, RegionLattice, nerve

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Tensor:
    region: Region
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != len(self.region):
            raise ShapeMismatch(f"Tensor on {self.region} needs {len(self.region)} axes, got {values.ndim}")
        object.__setattr__(self, 'values', values)

    # --- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, region: Region, cardinalities: Mapping[int, int]) -> 'Tensor':
        return cls(region, np.zeros(tuple(cardinalities[i] for i in region)))

    @classmethod
    def constant(cls, region: Region, cardinalities: Mapping[int, int], value: float) -> 'Tensor':
        return cls(region, np.full(tuple(cardinalities[i] for i in region), float(value)))

    @classmethod
    def from_flat(cls, region: Region, table: Sequence[float], cardinalities: Mapping[int, int]) -> 'Tensor':
        shape = tuple(cardinalities[i] for i in region)
        table = np.asarray(table, dtype=float)
        expected = int(np.prod(shape, dtype=int))
        if table.size != expected:
            raise ShapeMismatch(f"Table for {region} needs {expected} entries, got {table.size}")
        return cls(region, table.reshape(shape))

    @classmethod
    def random(cls, region: Region, cardinalities: Mapping[int, int], rng, scale: float = 1.0) -> 'Tensor':
        return cls(region, scale * rng.standard_normal(tuple(cardinalities[i] for i in region)))

    # --- accessors ----------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def flat(self) -> List[float]:
        return [float(x) for x in self.values.ravel()]

    def total(self) -> float:
        return float(self.values.sum())

    def mean(self) -> float:
        return float(self.values.mean())

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def mean_free(self) -> 'Tensor':
        return Tensor(self.region, self.values - self.values.mean())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    # --- arithmetic ---------------------------------------------------------

    def _check(self, other: 'Tensor') -> None:
        if self.region != other.region or self.shape != other.shape:
            raise ShapeMismatch(f"Tensors on {self.region} and {other.region} do not match")

    def __add__(self, other):
        if isinstance(other, Tensor):
            self._check(other)
            return Tensor(self.region, self.values + other.values)
        return Tensor(self.region, self.values + other)

    def __sub__(self, other):
        if isinstance(other, Tensor):
            self._check(other)
            return Tensor(self.region, self.values - other.values)
        return Tensor(self.region, self.values - other)

    def __neg__(self):
        return Tensor(self.region, -self.values)

    def __mul__(self, scalar: Number):
        return Tensor(self.region, self.values * scalar)

    __rmul__ = __mul__

    def dot(self, other: 'Tensor') -> float:
        self._check(other)
        return float(np.sum(self.values * other.values))

    def allclose(self, other: 'Tensor', atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))

    def __repr__(self):
        return f"Tensor({self.region}, {self.flat()})"


def _broadcast_shape(small: Region, large: Region, cardinalities: Mapping[int, int]) -> Tuple[int, ...]:
    return tuple(cardinalities[i] if i in small else 1 for i in large)


def _summed_axes(small: Region, large: Region) -> Tuple[int, ...]:
    return tuple(k for k, i in enumerate(large) if i not in small)


def extend(u: Tensor, a: Region, cardinalities: Mapping[int, int]) -> Tensor:
    """Cylindrical extension j_{ab}(u_b)(x_a) = u_b(x_a restricted to b)"""
    if not u.region <= a:
        raise NotASubregion(u.region, a)
    if u.region == a:
        return u
    shape = tuple(cardinalities[i] for i in a)
    values = u.values.reshape(_broadcast_shape(u.region, a, cardinalities))
    return Tensor(a, np.broadcast_to(values, shape).copy())


def marginal(omega: Tensor, b: Region) -> Tensor:
    """Fiberwise sum Σ^{ba}(ω_a)(x_b) = Σ_{x'} ω_a(x_b, x')"""
    if not b <= omega.region:
        raise NotASubregion(b, omega.region)
    if b == omega.region:
        return omega
    return Tensor(b, omega.values.sum(axis=_summed_axes(b, omega.region)))


def gibbs_state(U: Tensor) -> Tensor:
    """Normalized e^{-U}; scipy shifts by the max before exponentiating"""
    return Tensor(U.region, softmax(-U.values, axis=None))


def log_gibbs_state(U: Tensor) -> Tensor:
    """ln of gibbs_state(U), finite even where the state itself underflows to 0"""
    return Tensor(U.region, log_softmax(-U.values, axis=None))


# --- fields -------------------------------------------------------------

Key = Tuple[Region, ...]


def _key(key: Union[Region, Chain, Sequence[Region]]) -> Key:
    if isinstance(key, Region):
        return (key,)
    if isinstance(key, Chain):
        return key.regions
    return tuple(key)


class Field:
    """
    One Tensor per non-degenerate chain of a fixed degree, living on the
    configuration space of the chain's smallest region.
    """

    degree = 0

    def __init__(self, lattice: RegionLattice, tensors: Optional[Mapping] = None):
        self.lattice = lattice
        self.tensors: Dict[Key, Tensor] = {}
        for chain in nerve(lattice, self.degree):
            if len(chain) != self.degree + 1:
                continue
            self.tensors[chain.regions] = Tensor.zeros(chain.last, lattice.cardinalities)
        for key, tensor in (tensors or {}).items():
            k = _key(key)
            if k not in self.tensors:
                raise ShapeMismatch(f"{' > '.join(map(str, k))} is not a {self.degree}-chain of the lattice")
            if tensor.region != k[-1] or tensor.shape != lattice.shape(k[-1]):
                raise ShapeMismatch(f"Tensor at {' > '.join(map(str, k))} must live on {k[-1]}")
            self.tensors[k] = tensor

    @classmethod
    def zeros(cls, lattice: RegionLattice):
        return cls(lattice)

    @classmethod
    def random(cls, lattice: RegionLattice, rng, scale: float = 1.0):
        return cls(lattice, {k: Tensor.random(k[-1], lattice.cardinalities, rng, scale)
                             for k in cls(lattice).keys()})

    def keys(self) -> List[Key]:
        return list(self.tensors)

    def items(self):
        return self.tensors.items()

    def __iter__(self) -> Iterator[Key]:
        return iter(self.tensors)

    def __len__(self):
        return len(self.tensors)

    def __getitem__(self, key) -> Tensor:
        return self.tensors[_key(key)]

    def _like(self, tensors: Mapping[Key, Tensor]):
        return type(self)(self.lattice, tensors)

    def _check(self, other: 'Field') -> None:
        if self.degree != other.degree:
            raise ShapeMismatch(f"Degree {self.degree} and degree {other.degree} fields do not combine")
        if self.lattice is not other.lattice and self.lattice != other.lattice:
            raise LatticeMismatch("Fields are defined on different lattices")

    def __add__(self, other: 'Field'):
        self._check(other)
        return self._like({k: t + other.tensors[k] for k, t in self.items()})

    def __sub__(self, other: 'Field'):
        self._check(other)
        return self._like({k: t - other.tensors[k] for k, t in self.items()})

    def __neg__(self):
        return self._like({k: -t for k, t in self.items()})

    def __mul__(self, scalar: Number):
        return self._like({k: t * scalar for k, t in self.items()})

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return max((t.sup_norm() for t in self.tensors.values()), default=0.0)

    def mean_free_norm(self) -> float:
        return max((t.mean_free().sup_norm() for t in self.tensors.values()), default=0.0)

    def is_finite(self) -> bool:
        return all(t.is_finite() for t in self.tensors.values())

    def allclose(self, other: 'Field', atol: float = 1e-12) -> bool:
        return (self - other).sup_norm() <= atol

    def __repr__(self):
        return f"{type(self).__name__}(" + "; ".join(
            f"{' > '.join(map(str, k))}: {t.flat()}" for k, t in self.items()) + ")"


class ObservableField0(Field):
    degree = 0


class FluxField1(Field):
    degree = 1


class Field2(Field):
    degree = 2


class DensityField0(Field):
    degree = 0


class DensityField1(Field):
    degree = 1


class BeliefField(DensityField0):
    """
    Non-negative beliefs, each normalized to 1. Entries may be exactly 0 where
    e^{-U} underflows; entropies treat them as 0 ln 0 = 0.
    """

    def __init__(self, lattice: RegionLattice, tensors: Optional[Mapping] = None):
        super().__init__(lattice, tensors)
        for k, t in self.items():
            if not np.all(np.isfinite(t.values)):
                raise NotAProbability(f"Belief on {k[-1]} has non-finite entries")
            if np.any(t.values < 0):
                raise NotAProbability(f"Belief on {k[-1]} has negative entries")
            # summation error grows with the number of entries
            if abs(t.total() - 1.0) > NORMALIZATION_TOLERANCE * max(1, t.size):
                raise NotAProbability(f"Belief on {k[-1]} sums to {t.total()!r}, not 1")

    def _like(self, tensors):
        return DensityField0(self.lattice, tensors)


class StatField(BeliefField):
    """Strictly positive beliefs, each normalized to 1"""

    def __init__(self, lattice: RegionLattice, tensors: Optional[Mapping] = None):
        super().__init__(lattice, tensors)
        for k, t in self.items():
            if not np.all(t.values > 0):
                raise NonPositiveBelief(f"Belief on {k[-1]} has non-positive entries")

    @classmethod
    def uniform(cls, lattice: RegionLattice) -> 'StatField':
        return cls(lattice, {r: Tensor.constant(r, lattice.cardinalities, 1.0 / lattice.size(r))
                             for r in lattice.regions})


def dot(x: Field, y: Field) -> float:
    """Canonical pairing between fields of equal degree"""
    x._check(y)
    return float(sum(t.dot(y.tensors[k]) for k, t in x.items()))


def boundary(field: Field) -> Field:
    """
    (∂φ)_b̄ = Σ_k Σ_{∂_k ā = b̄} (-1)^k j(φ_ā)

    Every chain pushes its tensor to each of its faces, extended to the face's
    smallest region. Chains are visited in nerve order so the reduction order
    is fixed.
    """
    target = {1: ObservableField0, 2: FluxField1}.get(field.degree)
    if target is None:
        raise ValueError(f"Boundary is implemented on degree 1 and 2 fields, got degree {field.degree}")
    lattice = field.lattice
    cards = lattice.cardinalities
    acc: Dict[Key, np.ndarray] = {k: t.values.copy() for k, t in target(lattice).items()}
    for key, tensor in field.items():
        for k in range(len(key)):
            face = key[:k] + key[k + 1:]
            term = extend(tensor, face[-1], cards).values
            if k % 2:
                acc[face] -= term
            else:
                acc[face] += term
    return target(lattice, {k: Tensor(k[-1], v) for k, v in acc.items()})


def boundary1(phi: FluxField1) -> ObservableField0:
    """(∂φ)_b = Σ_{a ⊋ b} φ_ab - Σ_{c ⊊ b} j(φ_bc)"""
    if phi.degree != 1:
        raise ShapeMismatch("boundary1 takes a degree-1 field")
    return boundary(phi)


def boundary2(psi: Field2) -> FluxField1:
    if psi.degree != 2:
        raise ShapeMismatch("boundary2 takes a degree-2 field")
    return boundary(psi)


def differential0(omega: DensityField0) -> DensityField1:
    """(dω)_ab = ω_b - Σ^{ba}(ω_a); zero exactly on consistent fields"""
    lattice = omega.lattice
    return DensityField1(lattice, {
        (a, b): omega[b] - marginal(omega[a], b) for a, b in lattice.arrows})


def consistency_residual(p: DensityField0) -> float:
    return differential0(p).sup_norm()


def zeta_action_obs(h: ObservableField0) -> ObservableField0:
    """H_a = Σ_{b ⊆ a} j(h_b): local hamiltonians of a potential field"""
    lattice = h.lattice
    cards = lattice.cardinalities
    out = {}
    for a in lattice.regions:
        acc = np.zeros(lattice.shape(a))
        for b in lattice.below(a, strict=False):
            acc += extend(h[b], a, cards).values
        out[a] = Tensor(a, acc)
    return ObservableField0(lattice, out)


def mobius_action_obs(H: ObservableField0) -> ObservableField0:
    """h_a = Σ_{b ⊆ a} μ_ab j(H_b), inverse of zeta_action_obs"""
    lattice = H.lattice
    cards = lattice.cardinalities
    mu = mobius(lattice)
    out = {}
    for a in lattice.regions:
        acc = np.zeros(lattice.shape(a))
        for b in lattice.below(a, strict=False):
            m = mu[(a, b)]
            if m:
                acc += m * extend(H[b], a, cards).values
        out[a] = Tensor(a, acc)
    return ObservableField0(lattice, out)


def weighted(u: Field, c: ScalarField0) -> Field:
    """Entrywise c_b u_b on a degree-0 field"""
    if u.degree != 0:
        raise ShapeMismatch("Only degree-0 fields take region weights")
    return u._like({k: t * c[k[0]] for k, t in u.items()})


def normalize_field(u: Field) -> Field:
    """Mean-zero representative of each tensor modulo constants"""
    return u._like({k: t.mean_free() for k, t in u.items()})


def log_field(p: DensityField0) -> ObservableField0:
    """ln p, entrywise"""
    for k, t in p.items():
        if not np.all(t.values > 0):
            raise NonPositiveBelief(f"Belief on {k[-1]} has non-positive entries")
    return ObservableField0(p.lattice, {k: Tensor(k[-1], np.log(t.values)) for k, t in p.items()})


def gibbs_field(U: ObservableField0) -> StatField:
    return StatField(U.lattice, {k: gibbs_state(t) for k, t in U.items()})


def belief_field(U: ObservableField0) -> BeliefField:
    """Like gibbs_field, but accepts entries that underflow to 0"""
    return BeliefField(U.lattice, {k: gibbs_state(t) for k, t in U.items()})


def log_gibbs_field(U: ObservableField0) -> ObservableField0:
    return ObservableField0(U.lattice, {k: log_gibbs_state(t) for k, t in U.items()})
