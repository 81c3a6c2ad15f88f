"""Mean-field occupation dynamics with density-dependent incoherent hopping (J = 0)."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, EvolutionError, ShapeError
from .lattice import HoppingRates, LatticeModel, rates


def meanfield_rhs(r: HoppingRates, n: np.ndarray, check: bool = True) -> np.ndarray:
    """``dn_l/dt`` of the factorized occupation equations.

    Written bond by bond: the net flux from site ``l+1`` to ``l`` is
    ``J_l^L n_{l+1} - J_l^R n_l + (J_l^L - J_l^R) n_l n_{l+1}``, which
    reproduces the density-dependent rates and conserves ``sum(n)`` exactly.
    """
    n = np.asarray(n, dtype=float)
    left, right = np.asarray(r.left), np.asarray(r.right)
    if n.shape != (left.size + 1,):
        raise ShapeError(f"occupations need shape ({left.size + 1},), got {n.shape}")
    if check and np.any(n < 0):
        raise DomainError("occupation numbers must be nonnegative")
    flux = left * n[1:] - right * n[:-1] + (left - right) * n[:-1] * n[1:]
    out = np.zeros_like(n)
    out[:-1] += flux
    out[1:] -= flux
    return out


def meanfield_evolve(model: LatticeModel, n0, times, tolerance: float = 1e-10) -> np.ndarray:
    """Occupations on ``times`` (shape ``(T, L)``) from the adaptive integrator."""
    times = np.asarray(times, dtype=float)
    n0 = np.asarray(n0, dtype=float)
    if n0.shape != (model.L,):
        raise ShapeError(f"occupations need shape ({model.L},), got {n0.shape}")
    if np.any(n0 < 0):
        raise DomainError("occupation numbers must be nonnegative")
    r = rates(model)
    sol = solve_ivp(
        lambda _t, y: meanfield_rhs(r, y, check=False),
        (times[0], times[-1]), n0, method="DOP853", t_eval=times,
        rtol=tolerance, atol=tolerance * max(n0.sum(), 1e-300) * 1e-3,
    )
    if not sol.success:
        raise EvolutionError(f"mean-field integration failed: {sol.message}",
                             last_good_time=float(sol.t[-1]) if sol.t.size else float(times[0]))
    return sol.y.T.copy()
