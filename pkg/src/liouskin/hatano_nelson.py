"""Stochastic Hatano-Nelson reference model: linear jump operators, no-jump Hamiltonian.

``H[n+1, n] = J + (kappa/2) e^{-i theta_n}`` (rightward) and
``H[n, n+1] = J - (kappa/2) e^{i theta_n}`` (leftward).  The loss diagonal
follows ``-(i/2) sum_n L_n^dagger L_n``: ``-i kappa`` in the bulk and
``-i kappa/2`` on the two edge sites.  ``diagonal="uniform"`` puts ``-i kappa``
everywhere instead, which makes the clean spectrum exactly
``2 J_e cos(m pi/(L+1)) - i kappa``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .classical import TransportTrace, make_trace
from .errors import EvolutionError, RegimeWarning, ShapeError
from .lattice import realization_rng
from .liouvillian import localization_metrics

DIAGONAL_CONVENTIONS = ("lindblad", "uniform")


def theta_sequence(L: int, p: float = 0.5, seed: int = 0, realization: int = 0) -> np.ndarray:
    """Bond phases: ``0`` with probability ``p``, otherwise ``pi``."""
    u = realization_rng(seed, realization).random(L - 1)
    return np.where(u < p, 0.0, np.pi)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray
    J: float
    kappa: float
    theta: np.ndarray
    diagonal: str = "lindblad"

    @property
    def L(self) -> int:
        return self.matrix.shape[0]

    @property
    def right(self) -> np.ndarray:
        return np.diagonal(self.matrix, -1)

    @property
    def left(self) -> np.ndarray:
        return np.diagonal(self.matrix, 1)

    @property
    def J_e(self) -> complex:
        return np.sqrt(complex(self.J**2 - self.kappa**2 / 4))

    def sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.matrix)

    def gauge_walk(self) -> np.ndarray:
        """``Y_n = sum_{l<n} (1/2) ln|J_l^R / J_l^L|``, ``Y_1 = 0``."""
        g = 0.5 * np.log(np.abs(self.right) / np.abs(self.left))
        return np.concatenate([[0.0], np.cumsum(g)])

    @property
    def real_gauge(self) -> bool:
        """True when ``J^R J^L`` is real and positive on every bond (theta in {0, pi}, kappa < 2J)."""
        prod = self.right * self.left
        return bool(np.all(np.abs(prod.imag) < 1e-12 * np.abs(prod).max(initial=1.0)) and np.all(prod.real > 0))


def effective_hamiltonian(L: int, J: float, kappa: float, theta=None, diagonal: str = "lindblad"):
    if diagonal not in DIAGONAL_CONVENTIONS:
        raise ValueError(f"diagonal must be one of {DIAGONAL_CONVENTIONS}")
    theta = np.zeros(L - 1) if theta is None else np.asarray(theta, dtype=float)
    if theta.shape != (L - 1,):
        raise ShapeError(f"need {L - 1} bond phases, got {theta.shape}")
    if kappa >= 2 * J and kappa > 0:
        warnings.warn(f"kappa={kappa} >= 2J={2 * J}: effective hopping J_e is imaginary", RegimeWarning,
                      stacklevel=2)
    H = np.zeros((L, L), dtype=complex)
    i = np.arange(L - 1)
    H[i + 1, i] = J + 0.5 * kappa * np.exp(-1j * theta)
    H[i, i + 1] = J - 0.5 * kappa * np.exp(1j * theta)
    loss = np.full(L, kappa)
    if diagonal == "lindblad":
        loss[0] = loss[-1] = 0.5 * kappa
    H[np.arange(L), np.arange(L)] = -1j * loss
    return EffectiveHamiltonian(matrix=H, J=float(J), kappa=float(kappa), theta=theta, diagonal=diagonal)


def symmetrized(Heff: EffectiveHamiltonian):
    """``(K, Y)`` with ``K = S^-1 H S``, ``S = diag(exp(Y_n))``; ``K`` symmetric in the real-gauge regime."""
    Y = Heff.gauge_walk()
    s = np.exp(Y - Y.max())
    K = (Heff.matrix * s[None, :]) / s[:, None]
    return K, Y


def eigensystem(Heff: EffectiveHamiltonian):
    """Eigenvalues and unit-norm right eigenvectors (columns).

    In the real-gauge regime the vectors come from the symmetric similar
    matrix, which stays accurate where ``eig`` on the non-normal ``H`` does
    not.
    """
    if Heff.real_gauge:
        K, Y = symmetrized(Heff)
        lam, phi = sla.eig(K)
        psi = phi * np.exp(Y - Y.max())[:, None]
    else:
        lam, psi = sla.eig(Heff.matrix)
    psi = psi / np.linalg.norm(psi, axis=0)
    order = np.lexsort((np.round(lam.imag, 10), np.round(lam.real, 10)))
    return lam[order], psi[:, order]


def skin_diagnostics(Heff: EffectiveHamiltonian, fraction: float = 0.1) -> dict:
    """Averaged right-eigenvector profile and where the gauge walk predicts it peaks."""
    _, psi = eigensystem(Heff)
    profile = np.abs(psi).sum(axis=1) / Heff.L
    metrics = localization_metrics(profile, fraction)
    Y = Heff.gauge_walk()
    top = np.flatnonzero(Y >= Y.max() - 1e-9) + 1
    return {
        "profile": profile,
        "corner_mass": metrics.corner_mass,
        "center_of_mass": metrics.center_of_mass,
        "ipr": metrics.inverse_participation_ratio,
        "interface_sites": [int(n) for n in top],
        "profile_peak": int(np.argmax(profile)) + 1,
    }


def correlation_rhs(Heff: EffectiveHamiltonian):
    """``C -> dC/dt`` for ``i dC/dt = C H^T - conj(H) C``."""
    H = Heff.sparse()
    Hc = H.conj()

    def f(C):
        return -1j * (H @ C.T).T + 1j * (Hc @ C)

    return f


def _pure_amplitude(C: np.ndarray, tol: float = 1e-12):
    """``psi`` with ``C = conj(psi) psi^T`` when ``C`` is rank one, else ``None``.

    A pure single-particle state evolves as ``psi -> exp(-iHt) psi``, which is
    an O(L^2) update instead of the O(L^3) two-sided product.
    """
    tr = np.trace(C).real
    if tr <= 0 or abs(np.sum(np.abs(C) ** 2) - tr**2) > tol * tr**2:
        return None
    lam, vec = np.linalg.eigh(C)
    return np.sqrt(lam[-1]) * np.conj(vec[:, -1])


def correlation_evolve(Heff: EffectiveHamiltonian, C0, times, tolerance: float = 1e-9,
                       method: str = "ode", n0: int | None = None) -> TransportTrace:
    """Transport of the normalized diagonal ``diag(C)/Tr(C)``.

    ``method="ode"`` integrates the correlation equation segment by segment,
    renormalizing ``C`` at each output time and accumulating ``log Tr C``
    separately (the loss drives ``Tr C`` down by ``e^{-2 kappa t}``).
    ``method="expm"`` steps ``C -> conj(E) C E^T`` with ``E = exp(-iH dt)``,
    one matrix exponential per distinct grid spacing; a rank-one ``C0`` is
    carried as an amplitude vector.
    ``extra["trace"]`` holds ``Tr C(t)``.
    """
    times = np.asarray(times, dtype=float)
    C = np.asarray(C0, dtype=complex)
    L = Heff.L
    if C.shape != (L, L):
        raise ShapeError(f"correlation matrix must be {L}x{L}, got {C.shape}")
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ShapeError("time grid must start at 0 and increase strictly")
    P = np.empty((times.size, L))
    logtr = np.empty(times.size)
    if method == "expm":
        cache = {}
        psi = _pure_amplitude(C)
        Ct = C
        for i, t in enumerate(times):
            if i:
                dt = round(float(times[i] - times[i - 1]), 12)
                if dt not in cache:
                    cache[dt] = sla.expm(-1j * Heff.matrix * dt)
                E = cache[dt]
                if psi is None:
                    Ct = E.conj() @ Ct @ E.T
                else:
                    psi = E @ psi
            if psi is None:
                diag = np.real(np.diag(Ct))
            else:
                diag = np.abs(psi) ** 2
            tr = diag.sum()
            P[i] = diag / tr
            logtr[i] = (logtr[i - 1] if i else 0.0) + np.log(tr)
            if psi is None:
                Ct = Ct / tr
            else:
                psi = psi / np.sqrt(tr)
    elif method == "ode":
        f = correlation_rhs(Heff)
        tr0 = np.trace(C).real
        C = C / tr0
        log_scale = np.log(tr0)
        P[0] = np.real(np.diag(C))
        logtr[0] = log_scale
        for i in range(1, times.size):
            sol = solve_ivp(lambda _t, y: f(y.reshape(L, L)).ravel(), (times[i - 1], times[i]), C.ravel(),
                            method="DOP853", rtol=tolerance, atol=tolerance * 1e-6)
            if not sol.success:
                raise EvolutionError(f"correlation integration failed: {sol.message}",
                                     last_good_time=float(times[i - 1]))
            C = sol.y[:, -1].reshape(L, L)
            C = 0.5 * (C + C.conj().T)
            tr = np.trace(C).real
            log_scale += np.log(tr)
            C = C / tr
            P[i] = np.real(np.diag(C))
            logtr[i] = log_scale
    else:
        raise ValueError(f"unknown method {method!r}")
    if n0 is None:
        n0 = int(np.argmax(P[0])) + 1
    trace = make_trace(times, P, n0, extra={"log_trace": logtr, "trace": np.exp(logtr)})
    return trace
