"""Purely dissipative limit (J = 0): the classical master equation for site populations.

``dP/dt = G P`` with a tridiagonal Markov generator whose columns sum to zero.
The diagonal gauge ``U = diag(exp(-X_n))`` maps ``G`` onto the symmetric
matrix ``W = U^-1 G U`` with every off-diagonal equal to ``Q``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConstructionError, EvolutionError, ShapeError
from .lattice import AsymmetrySequence, CumulativeWalk, LatticeModel, cumulative_walk, rates

log = logging.getLogger(__name__)

CLAMP_THRESHOLD = -1e-12
# Above this spread of the gauge exponent the eigenbasis reconstruction loses
# absolute accuracy (roundoff is amplified by exp(spread)); see propagate().
SPECTRAL_GAUGE_LIMIT = 20.0


@dataclass(frozen=True)
class GeneratorMatrix:
    """Tridiagonal generator stored as its three diagonals.

    ``lower[n-1] = G[n+1, n] = J_n^R``, ``upper[n-1] = G[n, n+1] = J_n^L``.
    """

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def L(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def sparse(self) -> sp.csr_matrix:
        return sp.diags([self.lower, self.diag, self.upper], [-1, 0, 1], format="csr")

    def matvec(self, P: np.ndarray) -> np.ndarray:
        out = self.diag * P
        out[1:] += self.lower * P[:-1]
        out[:-1] += self.upper * P[1:]
        return out

    def column_sums(self) -> np.ndarray:
        s = self.diag.copy()
        s[:-1] += self.lower
        s[1:] += self.upper
        return s


def generator(model: LatticeModel) -> GeneratorMatrix:
    """Markov generator of the populations; the coherent amplitude ``J`` plays no role."""
    r = rates(model)
    return GeneratorMatrix(diag=-r.escape(), lower=np.array(r.right), upper=np.array(r.left))


def steady_state_closed_form(seq: AsymmetrySequence) -> np.ndarray:
    """Detailed-balance populations ``P_n ~ exp(-2 X_n)``, normalized, overflow-safe."""
    a = -2.0 * cumulative_walk(seq).X
    w = np.exp(a - a.max())
    return w / w.sum()


def steady_state_nullspace(G: GeneratorMatrix) -> np.ndarray:
    """Kernel of ``G`` by Grassmann-Taksar-Heyman elimination.

    Uses only the off-diagonal rates and never subtracts, so every entry keeps
    full relative accuracy even when the populations span hundreds of orders
    of magnitude.  The independent check on :func:`steady_state_closed_form`.
    """
    R = G.dense().T.copy()  # R[i, j]: rate i -> j
    np.fill_diagonal(R, 0.0)
    L = G.L
    for k in range(L - 1, 0, -1):
        s = R[k, :k].sum()
        if s <= 0:
            raise ConstructionError(f"state {k + 1} has no outgoing rate to lower states; chain is reducible")
        R[:k, k] /= s
        R[:k, :k] += np.outer(R[:k, k], R[k, :k])
    pi = np.zeros(L)
    pi[0] = 1.0
    for k in range(1, L):
        pi[k] = pi[:k] @ R[:k, k]
    return pi / pi.sum()


@dataclass(frozen=True)
class SymmetrizedGenerator:
    """``W = U^-1 G U`` with ``U = diag(exp(-X_n))``; ``X`` kept for the gauge."""

    diag: np.ndarray
    off: np.ndarray
    X: np.ndarray
    G: GeneratorMatrix = field(repr=False)

    @property
    def L(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, -1) + np.diag(self.off, 1)


def symmetrize(G: GeneratorMatrix, walk: CumulativeWalk, tol: float = 1e-9) -> SymmetrizedGenerator:
    X = np.asarray(walk.X)
    if X.size != G.L:
        raise ConstructionError(f"walk has {X.size} sites, generator has {G.L}")
    dX = np.diff(X)
    # W[n, n+1] = e^{X_n} G[n, n+1] e^{-X_{n+1}},  W[n+1, n] = e^{X_{n+1}} G[n+1, n] e^{-X_n}
    upper = G.upper * np.exp(-dX)
    lower = G.lower * np.exp(dX)
    scale = max(1.0, float(np.max(np.abs(G.diag))))
    if np.max(np.abs(upper - lower), initial=0.0) > tol * scale:
        raise ConstructionError(
            "gauge-transformed generator is not symmetric; the walk does not belong to this generator"
        )
    return SymmetrizedGenerator(diag=G.diag.copy(), off=0.5 * (upper + lower), X=X, G=G)


@dataclass
class TransportTrace:
    times: np.ndarray
    n_cm: np.ndarray
    d2: np.ndarray
    n0: int
    populations: np.ndarray | None = None
    edge_mass: np.ndarray | None = None
    clamp_count: int = 0
    extra: dict = field(default_factory=dict)

    EDGE_SITES = 3
    EDGE_THRESHOLD = 1e-3

    @property
    def contaminated_mask(self) -> np.ndarray:
        if self.edge_mass is None:
            return np.zeros(self.times.size, dtype=bool)
        return self.edge_mass > self.EDGE_THRESHOLD

    @property
    def boundary_contaminated(self) -> bool:
        return bool(self.contaminated_mask.any())

    @property
    def clean_until(self) -> int:
        """Number of leading grid points before the first boundary contact."""
        bad = np.flatnonzero(self.contaminated_mask)
        return int(bad[0]) if bad.size else self.times.size


def moments(P: np.ndarray, n0: int):
    """``n_CM = sum (n - n0) P_n`` and the variance about the centre of mass.

    ``P`` may be a stack ``(..., L)``; sites are numbered from 1.
    """
    P = np.asarray(P, dtype=float)
    n = np.arange(1, P.shape[-1] + 1) - n0
    n_cm = P @ n
    d2 = P @ (n**2) - n_cm**2
    d2 = np.maximum(d2, 0.0)
    return n_cm, d2


def edge_mass(P: np.ndarray, sites: int = TransportTrace.EDGE_SITES) -> np.ndarray:
    P = np.asarray(P)
    return P[..., :sites].sum(axis=-1) + P[..., -sites:].sum(axis=-1)


def make_trace(times, P, n0, keep_populations=True, **kw) -> TransportTrace:
    n_cm, d2 = moments(P, n0)
    return TransportTrace(
        times=np.asarray(times, dtype=float),
        n_cm=n_cm,
        d2=d2,
        n0=n0,
        populations=np.asarray(P) if keep_populations else None,
        edge_mass=edge_mass(P),
        **kw,
    )


def delta_populations(L: int, n0: int) -> np.ndarray:
    if not 1 <= n0 <= L:
        raise ShapeError(f"initial site {n0} outside 1..{L}")
    P = np.zeros(L)
    P[n0 - 1] = 1.0
    return P


def _clamp(P: np.ndarray):
    bad = P < CLAMP_THRESHOLD
    count = int(bad.sum())
    P = np.where(P < 0, 0.0, P)
    if count:
        P = P / P.sum(axis=-1, keepdims=True)
    return P, count


def _propagate_spectral(sym: SymmetrizedGenerator, P0: np.ndarray, times: np.ndarray) -> np.ndarray:
    lam, V = sla.eigh_tridiagonal(sym.diag, sym.off)
    lam = np.minimum(lam, 0.0)
    # P_n(t) = e^{-X_n} sum_k V_nk e^{lam_k t} sum_m V_mk e^{X_m} P0_m, carried in log-scaled form
    X = sym.X
    xs = X - X.max()
    c = V.T @ (np.exp(xs) * P0)
    decay = np.exp(np.outer(times, lam))
    S = (decay * c) @ V.T
    return S * np.exp(X.max() - X)


class _SquaringPropagator:
    """Exact-in-exact-arithmetic ``exp(G t)`` through nonnegative matrix products.

    ``exp(G delta)`` comes from the uniformized series of the stochastic
    matrix ``I + G/q``; longer steps are binary products of its repeated
    squares.  Every factor is entrywise nonnegative and column-stochastic, so
    roundoff stays absolute and never cancels.
    """

    def __init__(self, G: GeneratorMatrix, t_span: float):
        self.G = G
        self.q = float(np.max(-G.diag))
        self.delta = 1.0 / (16.0 * self.q)
        L = G.L
        Pm = sp.identity(L, format="csr") + G.sparse() / self.q
        M = self._uniformized(Pm, np.identity(L), self.delta)
        self.powers = [M]
        nmax = max(1, int(math.ceil(t_span / self.delta)))
        for _ in range(nmax.bit_length()):
            M = M @ M
            M /= M.sum(axis=0, keepdims=True)
            self.powers.append(M)
        self._Pm = Pm

    def _uniformized(self, Pm, A, tau):
        x = self.q * tau
        term = A.copy()
        out = term * math.exp(-x)
        weight = math.exp(-x)
        k = 0
        while True:
            k += 1
            weight *= x / k
            term = Pm @ term
            out = out + weight * term
            if weight < 1e-18 and k > x:
                break
        if out.ndim == 2:
            out /= out.sum(axis=0, keepdims=True)
        else:
            out /= out.sum()
        return out

    def step(self, P: np.ndarray, tau: float) -> np.ndarray:
        m = int(math.floor(tau / self.delta))
        r = tau - m * self.delta
        if r > 0:
            P = self._uniformized(self._Pm, P, r)
        k = 0
        while m:
            if m & 1:
                if k >= len(self.powers):
                    raise EvolutionError("time step exceeds the precomputed propagator range")
                P = self.powers[k] @ P
            m >>= 1
            k += 1
        return P


def _propagate_squaring(G: GeneratorMatrix, P0: np.ndarray, times: np.ndarray) -> np.ndarray:
    steps = np.diff(np.concatenate([[0.0], times]))
    prop = _SquaringPropagator(G, float(steps.max()) if steps.size else 0.0)
    out = np.empty((times.size, P0.size))
    P = P0.astype(float)
    for i, tau in enumerate(steps):
        if tau > 0:
            P = prop.step(P, tau)
        out[i] = P
    return out


def propagate(
    sym: SymmetrizedGenerator,
    P0: np.ndarray,
    times,
    n0: int | None = None,
    method: str = "auto",
    keep_populations: bool = True,
) -> TransportTrace:
    """Populations ``P(t) = U exp(W t) U^-1 P0`` on the given time grid.

    ``method="spectral"`` uses one symmetric tridiagonal eigendecomposition.
    Its reconstruction multiplies eigenvector roundoff by ``exp(X_m - X_n)``,
    so ``"auto"`` switches to repeated squaring of the nonnegative propagator
    once ``max X - min X`` exceeds ``SPECTRAL_GAUGE_LIMIT``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ShapeError("times must be a strictly increasing grid starting at t >= 0")
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (sym.L,):
        raise ShapeError(f"initial populations need shape ({sym.L},), got {P0.shape}")
    if n0 is None:
        n0 = int(np.argmax(P0)) + 1
    spread = float(np.ptp(sym.X))
    if method == "auto":
        method = "spectral" if spread <= SPECTRAL_GAUGE_LIMIT else "squaring"
    try:
        if method == "spectral":
            P = _propagate_spectral(sym, P0, times)
        elif method == "squaring":
            P = _propagate_squaring(sym.G, P0, times)
        else:
            raise ValueError(f"unknown propagation method {method!r}")
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise EvolutionError(f"eigendecomposition failed: {exc}") from exc
    if times[0] == 0.0:
        P[0] = P0
    P, clamps = _clamp(P)
    return make_trace(times, P, n0, keep_populations=keep_populations, clamp_count=clamps,
                      extra={"method": method, "gauge_spread": spread})
