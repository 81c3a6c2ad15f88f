"""Lattice geometry, bond disorder and the coherent hopping Hamiltonian.

Bond ``n`` (1-based, ``n = 1..L-1``) joins sites ``n`` and ``n+1``.  Internally
every per-bond array is 0-based, so ``values[n-1]`` is ``h_n``.  The asymmetry
``h_n`` is the only stored primitive; hopping rates are always derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InvalidLatticeError, InvalidProbabilityError

DisorderKind = Literal["zero", "uniform", "bernoulli"]
DISORDER_KINDS = ("zero", "uniform", "bernoulli")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def realization_rng(seed: int, realization: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, realization)``.

    Draw ``k`` of the stream belongs to bond ``k+1``, so a realization's
    disorder does not depend on which other realizations were generated, or
    in what order.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(realization),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class AsymmetrySequence:
    values: np.ndarray
    kind: str = "zero"
    h: float = 0.0
    p: float = 0.5
    seed: int = 0
    realization: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.ndim != 1:
            raise InvalidLatticeError("asymmetry values must be one-dimensional")

    @property
    def L(self) -> int:
        return self.values.size + 1

    @classmethod
    def from_values(cls, values) -> "AsymmetrySequence":
        return cls(values=np.asarray(values, dtype=float), kind="explicit")

    def reversed(self) -> "AsymmetrySequence":
        """Mirror image ``n -> L+1-n``; bond biases flip sign under the reflection."""
        return AsymmetrySequence.from_values(-self.values[::-1])


def make_asymmetry(
    L: int,
    kind: DisorderKind = "zero",
    h: float = 0.0,
    p: float = 0.5,
    seed: int = 0,
    realization: int = 0,
) -> AsymmetrySequence:
    """Bond asymmetries ``h_1..h_{L-1}``.

    ``bernoulli`` draws ``+h`` with probability ``p`` and ``-h`` otherwise,
    independently per bond.
    """
    if int(L) != L or L < 2:
        raise InvalidLatticeError(f"lattice needs L >= 2 sites, got {L!r}")
    if not 0.0 <= p <= 1.0:
        raise InvalidProbabilityError(f"probability p must lie in [0, 1], got {p!r}")
    if h < 0:
        raise InvalidLatticeError(f"asymmetry magnitude h must be >= 0, got {h!r}")
    L = int(L)
    if kind == "zero":
        values = np.zeros(L - 1)
    elif kind == "uniform":
        values = np.full(L - 1, float(h))
    elif kind == "bernoulli":
        u = realization_rng(seed, realization).random(L - 1)
        values = np.where(u < p, float(h), -float(h))
    else:
        raise ValueError(f"unknown disorder kind {kind!r}; expected one of {DISORDER_KINDS}")
    return AsymmetrySequence(values=values, kind=kind, h=float(h), p=float(p), seed=int(seed),
                             realization=int(realization))


@dataclass(frozen=True)
class HoppingRates:
    """Incoherent rates per bond: ``left[n-1] = J_n^L``, ``right[n-1] = J_n^R``."""

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "left", _frozen(self.left))
        object.__setattr__(self, "right", _frozen(self.right))

    def padded(self):
        """Rates on bonds ``0..L`` with the open-boundary zeros ``J_0 = J_L = 0``.

        Returns ``(left, right)`` arrays of length ``L+1`` indexed by the
        1-based bond number.
        """
        z = np.zeros(1)
        return np.concatenate([z, self.left, z]), np.concatenate([z, self.right, z])

    def escape(self) -> np.ndarray:
        """Total escape rate ``J_n^R + J_{n-1}^L`` out of every site ``n``."""
        left, right = self.padded()
        return right[1:] + left[:-1]


@dataclass(frozen=True)
class CumulativeWalk:
    """``X_n = sum_{l<n} h_l`` for ``n = 1..L``; ``X[0] = 0``."""

    X: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X))


@dataclass(frozen=True)
class LatticeModel:
    L: int
    J: float
    Q: float
    asymmetry: AsymmetrySequence = field(default=None)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise InvalidLatticeError(f"lattice needs L >= 2 sites, got {self.L!r}")
        if self.Q <= 0:
            raise InvalidLatticeError(f"incoherent rate scale Q must be > 0, got {self.Q!r}")
        if self.J < 0:
            raise InvalidLatticeError(f"coherent hopping J must be >= 0, got {self.J!r}")
        if self.asymmetry is None:
            object.__setattr__(self, "asymmetry", make_asymmetry(self.L, "zero"))
        if self.asymmetry.L != self.L:
            raise InvalidLatticeError(
                f"asymmetry sequence has {self.asymmetry.values.size} bonds, lattice needs {self.L - 1}"
            )

    @classmethod
    def build(cls, L, J=0.2, Q=1.0, kind="zero", h=0.0, p=0.5, seed=0, realization=0):
        return cls(L=L, J=J, Q=Q, asymmetry=make_asymmetry(L, kind, h, p, seed, realization))

    @property
    def h(self) -> np.ndarray:
        return self.asymmetry.values

    def with_J(self, J: float) -> "LatticeModel":
        return LatticeModel(self.L, J, self.Q, self.asymmetry)

    def reversed(self) -> "LatticeModel":
        return LatticeModel(self.L, self.J, self.Q, self.asymmetry.reversed())


def rates(model: LatticeModel) -> HoppingRates:
    """``J_n^L = Q e^{h_n}`` and ``J_n^R = Q e^{-h_n}``."""
    h = model.h
    return HoppingRates(left=model.Q * np.exp(h), right=model.Q * np.exp(-h))


def cumulative_walk(seq: AsymmetrySequence) -> CumulativeWalk:
    return CumulativeWalk(X=np.concatenate([[0.0], np.cumsum(seq.values)]))


def hamiltonian_matrix(model: LatticeModel) -> np.ndarray:
    """Open-chain nearest-neighbour hopping matrix with amplitude ``J``."""
    H = np.zeros((model.L, model.L))
    i = np.arange(model.L - 1)
    H[i, i + 1] = model.J
    H[i + 1, i] = model.J
    return H
