"""Time evolution of the single-particle density matrix and its transport observables."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .classical import TransportTrace, make_trace
from .errors import EvolutionError, ShapeError
from .lattice import LatticeModel
from .liouvillian import LiouvillianRHS, assemble_sparse

SPECTRAL_MAX_L = 40
# Largest tolerated ||V|| ||V^-1|| of the Liouvillian eigenbasis before the
# spectral path hands over to time stepping.
SPECTRAL_MAX_COND = 1e8


def initial_state(L: int, n0: int | None = None) -> np.ndarray:
    """``|n0><n0|``; defaults to the middle site ``(L+1)//2``."""
    if n0 is None:
        n0 = (L + 1) // 2
    if not 1 <= n0 <= L:
        raise ShapeError(f"initial site {n0} outside 1..{L}")
    rho = np.zeros((L, L), dtype=complex)
    rho[n0 - 1, n0 - 1] = 1.0
    return rho


def linear_grid(t_max: float, points: int) -> np.ndarray:
    return np.linspace(0.0, t_max, points)


def log_grid(t_min: float, t_max: float, per_decade: int = 20) -> np.ndarray:
    """Geometric grid from ``t_min`` to ``t_max``, ``per_decade`` points per decade."""
    n = int(round(np.log10(t_max / t_min) * per_decade)) + 1
    return np.geomspace(t_min, t_max, n)


def _hermitize(rho):
    return 0.5 * (rho + rho.conj().T)


def _evolve_spectral(model, rho0, times):
    L = model.L
    M = assemble_sparse(model).toarray()
    lam, V = sla.eig(M)
    lu = sla.lu_factor(V)
    c = sla.lu_solve(lu, rho0.ravel())
    resid = np.max(np.abs(V @ c - rho0.ravel()))
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > SPECTRAL_MAX_COND or resid > 1e-10:
        return None
    out = np.empty((times.size, L, L), dtype=complex)
    for i, t in enumerate(times):
        out[i] = _hermitize((V @ (np.exp(lam * t) * c)).reshape(L, L))
    return out


def _evolve_stepping(model, rho0, times, tolerance, method):
    L = model.L
    f = LiouvillianRHS(model)

    def fun(_t, y):
        return f(y.reshape(L, L)).ravel()

    out = np.empty((times.size, L, L), dtype=complex)
    rho = rho0.astype(complex)
    t_prev = times[0]
    out[0] = rho
    first_step = None
    for i in range(1, times.size):
        span = float(times[i] - t_prev)
        sol = solve_ivp(
            fun, (t_prev, times[i]), rho.ravel(), method=method, rtol=tolerance,
            atol=tolerance * 1e-3, first_step=None if first_step is None else min(first_step, span),
        )
        if not sol.success:
            raise EvolutionError(f"integrator failed: {sol.message}", last_good_time=t_prev)
        rho = _hermitize(sol.y[:, -1].reshape(L, L))
        if sol.t.size > 2:
            first_step = float(sol.t[-2] - sol.t[-3]) if sol.t.size > 3 else float(sol.t[-1] - sol.t[-2])
        out[i] = rho
        t_prev = times[i]
    return out


def evolve_density(model: LatticeModel, rho0, times, tolerance: float = 1e-10,
                   method: str = "auto", step_method: str = "DOP853"):
    """Density matrices ``rho(t)`` on ``times``; returns ``(stack, method_used)``.

    ``auto`` propagates exactly through the Liouvillian eigenbasis for
    ``L <= 40`` when that basis is well conditioned, and otherwise steps the
    equation of motion adaptively.  Every stored matrix is re-symmetrized.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
        raise ShapeError("time grid must start at 0 and increase strictly")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (model.L, model.L):
        raise ShapeError(f"initial state must be {model.L}x{model.L}, got {rho0.shape}")
    if method in ("auto", "spectral") and model.L <= SPECTRAL_MAX_L:
        out = _evolve_spectral(model, rho0, times)
        if out is not None:
            return out, "spectral"
        if method == "spectral":
            raise EvolutionError("Liouvillian eigenbasis too ill-conditioned for spectral propagation",
                                 last_good_time=0.0)
    elif method == "spectral":
        raise ShapeError(f"spectral propagation is limited to L <= {SPECTRAL_MAX_L}")
    return _evolve_stepping(model, rho0, times, tolerance, step_method), "stepping"


def evolve(model: LatticeModel, rho0, times, tolerance: float = 1e-10, method: str = "auto",
           n0: int | None = None, keep_populations: bool = True) -> TransportTrace:
    """Transport trace ``n_CM(t)``, ``d^2(t)`` of the quantum evolution."""
    rhos, used = evolve_density(model, rho0, times, tolerance, method)
    P = np.real(np.diagonal(rhos, axis1=1, axis2=2)).copy()
    if n0 is None:
        n0 = int(np.argmax(P[0])) + 1
    tr = np.real(np.trace(rhos, axis1=1, axis2=2))
    herm = np.max(np.abs(rhos - np.conj(np.swapaxes(rhos, 1, 2))))
    return make_trace(times, P, n0, keep_populations=keep_populations, extra={
        "method": used,
        "trace_drift": float(np.max(np.abs(tr - tr[0]))),
        "min_population": float(P.min()),
        "hermiticity_error": float(herm),
    })
