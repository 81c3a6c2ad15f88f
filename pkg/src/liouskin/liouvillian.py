"""Single-particle Liouvillian of the asymmetric incoherent-hopping chain.

The density matrix lives in the basis ``|n> = a_n^dagger |0>``.  Superoperators
act on ``vec(rho)`` with the row-major convention ``i = (n-1)*L + (m-1)`` for
``rho[n, m]``, i.e. ``vec(rho) == rho.ravel()``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import CapacityError, DegenerateSteadyStateError, ShapeError, UndefinedMetricError
from .lattice import LatticeModel, hamiltonian_matrix, rates

VEC_CONVENTION = "row-major: vec index i = (n-1)*L + (m-1) for rho[n,m], n,m = 1..L"
MAX_DENSE_L = 64
ZERO_TOL = 1e-9


class LiouvillianRHS:
    """Callable ``rho -> d rho/dt`` with the per-model rate arrays precomputed.

    Works on ``(L, L)`` arrays and on stacks ``(..., L, L)``.
    """

    def __init__(self, model: LatticeModel):
        self.L = model.L
        self.J = float(model.J)
        r = rates(model)
        self.left = np.asarray(r.left)
        self.right = np.asarray(r.right)
        self.escape = r.escape()
        self.decay = 0.5 * (self.escape[:, None] + self.escape[None, :])

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape[-2:] != (self.L, self.L):
            raise ShapeError(f"expected a {self.L}x{self.L} density matrix, got shape {rho.shape}")
        out = -self.decay * rho
        if self.J != 0.0:
            # i (rho H - H rho) for nearest-neighbour H, by shifted slices
            comm = np.zeros_like(rho, dtype=complex)
            comm[..., :, :-1] += rho[..., :, 1:]
            comm[..., :, 1:] += rho[..., :, :-1]
            comm[..., :-1, :] -= rho[..., 1:, :]
            comm[..., 1:, :] -= rho[..., :-1, :]
            out = out + 1j * self.J * comm
        P = np.diagonal(rho, axis1=-2, axis2=-1)
        gain = np.zeros(P.shape, dtype=np.result_type(P, float))
        gain[..., 1:] += self.right * P[..., :-1]
        gain[..., :-1] += self.left * P[..., 1:]
        idx = np.arange(self.L)
        out = out.astype(np.result_type(out, gain), copy=False)
        out[..., idx, idx] += gain
        return out


def rhs(model: LatticeModel, rho: np.ndarray) -> np.ndarray:
    """Time derivative of the single-particle density matrix."""
    return LiouvillianRHS(model)(rho)


def assemble_sparse(model: LatticeModel) -> sp.csr_matrix:
    """The Liouvillian as a sparse ``L^2 x L^2`` matrix (no size guard)."""
    L = model.L
    r = rates(model)
    esc = r.escape()
    I = sp.identity(L, format="csr")
    H = sp.csr_matrix(hamiltonian_matrix(model))
    coherent = 1j * (sp.kron(I, H.T) - sp.kron(H, I))
    decay = -0.5 * (np.repeat(esc, L) + np.tile(esc, L))
    diag_idx = np.arange(L) * (L + 1)
    rows = np.concatenate([diag_idx[1:], diag_idx[:-1]])
    cols = np.concatenate([diag_idx[:-1], diag_idx[1:]])
    vals = np.concatenate([r.right, r.left])
    gain = sp.csr_matrix((vals, (rows, cols)), shape=(L * L, L * L))
    return (coherent + sp.diags(decay) + gain).tocsr()


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray
    L: int

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(rho).ravel()).reshape(self.L, self.L)


def assemble(model: LatticeModel, max_L: int = MAX_DENSE_L) -> Superoperator:
    if model.L > max_L:
        raise CapacityError(
            f"dense Liouvillian for L={model.L} needs a {model.L**2}x{model.L**2} matrix "
            f"(guard L <= {max_L}); use the classical-transport module for transport-only runs "
            "or raise max_L explicitly"
        )
    return Superoperator(matrix=assemble_sparse(model).toarray(), L=model.L)


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (L^2, L, L): right eigenvectors reshaped, unit Frobenius norm
    steady_state: np.ndarray
    L: int

    @property
    def n_zero_modes(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) < ZERO_TOL))


def sort_eigenvalues(lam: np.ndarray, decimals: int = 10) -> np.ndarray:
    """Ordering by decreasing real part, ties broken by increasing imaginary part."""
    return np.lexsort((np.round(lam.imag, decimals), -np.round(lam.real, decimals)))


def steady_state(matrix: np.ndarray, L: int) -> np.ndarray:
    """Solve ``M v = 0`` with ``trace(v) = 1`` as one overdetermined linear system."""
    trace_row = np.zeros((1, L * L), dtype=complex)
    trace_row[0, np.arange(L) * (L + 1)] = 1.0
    A = np.vstack([matrix, trace_row])
    b = np.zeros(L * L + 1, dtype=complex)
    b[-1] = 1.0
    v = sla.lstsq(A, b)[0]
    rho = v.reshape(L, L)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def spectrum(op: Superoperator) -> SpectralSummary:
    lam, vecs = sla.eig(op.matrix)
    order = sort_eigenvalues(lam)
    lam = lam[order]
    vecs = vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    n_zero = int(np.sum(np.abs(lam) < ZERO_TOL))
    if n_zero != 1:
        raise DegenerateSteadyStateError(
            f"found {n_zero} eigenvalues within {ZERO_TOL:g} of zero; steady state is not unique"
        )
    L = op.L
    return SpectralSummary(
        eigenvalues=lam,
        eigenvectors=vecs.T.reshape(L * L, L, L),
        steady_state=steady_state(op.matrix, L),
        L=L,
    )


def eigenmode_profile(summary: SpectralSummary) -> np.ndarray:
    """``I[n, m] = L^-2 sum_alpha |r^(alpha)[n, m]|`` over unit-norm right eigenvectors."""
    r = summary.eigenvectors
    norms = np.sqrt(np.sum(np.abs(r) ** 2, axis=(1, 2)))
    return np.sum(np.abs(r) / norms[:, None, None], axis=0) / summary.L**2


@dataclass(frozen=True)
class LocalizationMetrics:
    center_of_mass: float
    inverse_participation_ratio: float
    corner_mass: dict


def localization_metrics(weights, fraction: float = 0.1) -> LocalizationMetrics:
    """Centre of mass, IPR and edge weight fractions of a site distribution.

    Square matrices (a density matrix or an eigenmode profile ``I``) are
    reduced to their diagonal, so ``corner_mass["left"]`` is the weight on the
    first ``ceil(fraction * L)`` diagonal sites, i.e. at the (1,1) corner.
    Sites are numbered from 1.
    """
    w = np.asarray(weights)
    if w.ndim == 2:
        if w.shape[0] != w.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {w.shape}")
        w = np.diag(w)
    if w.ndim != 1:
        raise ShapeError(f"expected a site vector or square matrix, got shape {w.shape}")
    w = np.real(w).astype(float)
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise UndefinedMetricError("localization metrics need a nonzero nonnegative weight")
    p = w / total
    L = w.size
    k = math.ceil(fraction * L)
    return LocalizationMetrics(
        center_of_mass=float(np.sum(np.arange(1, L + 1) * p)),
        inverse_participation_ratio=float(np.sum(p**2)),
        corner_mass={"left": float(p[:k].sum()), "right": float(p[-k:].sum())},
    )


def block_corner_mass(profile: np.ndarray, fraction: float = 0.1) -> dict:
    """Weight fraction of a 2D profile inside each ``k x k`` corner block."""
    p = np.abs(np.asarray(profile))
    p = p / p.sum()
    k = math.ceil(fraction * p.shape[0])
    return {
        "upper_left": float(p[:k, :k].sum()),
        "upper_right": float(p[:k, -k:].sum()),
        "lower_left": float(p[-k:, :k].sum()),
        "lower_right": float(p[-k:, -k:].sum()),
    }
