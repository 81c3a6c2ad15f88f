"""Disorder-ensemble averaging with a deterministic, index-ordered reduction."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classical import TransportTrace, moments
from .errors import ExperimentInvalidError

log = logging.getLogger(__name__)


@dataclass
class EnsembleTrace:
    """Realization-averaged transport observables.

    ``d2`` applies the second-moment formula to the realization-averaged
    populations, i.e. it is the disorder-averaged spread about the mean
    position.  ``d2_mean`` is the plain average of the per-realization
    spreads about their own centres of mass.
    """

    times: np.ndarray
    n_cm: np.ndarray
    d2: np.ndarray
    d2_mean: np.ndarray
    stderr_n_cm: np.ndarray
    stderr_d2: np.ndarray
    R: int
    seed: int
    realizations: list
    contaminated: list
    excluded: list = field(default_factory=list)
    clean_until: int = 0
    populations: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_used(self) -> int:
        return len(self.realizations) - len(self.excluded)


def _run(args):
    fn, r = args
    return fn(r)


def run_realizations(fn: Callable[[int], TransportTrace], indices: Sequence[int], workers: int = 1):
    """Evaluate ``fn`` for every realization index; results come back in index order."""
    if workers > 1 and len(indices) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run, [(fn, r) for r in indices]))
    return [fn(r) for r in indices]


def reduce_traces(traces: Sequence[TransportTrace], seed: int, indices: Sequence[int],
                  boundary_policy: str = "exclude", keep_populations: bool = False) -> EnsembleTrace:
    """Average traces sequentially in realization order.

    ``boundary_policy="exclude"`` drops every realization that touched the
    edges anywhere on the grid and fails if fewer than half survive.
    ``"truncate"`` keeps all of them and marks the ensemble clean only up to
    the first contact of any realization.
    """
    if not traces:
        raise ExperimentInvalidError("empty ensemble")
    times = traces[0].times
    n0 = traces[0].n0
    contaminated = [bool(t.boundary_contaminated) for t in traces]
    if boundary_policy == "exclude":
        keep = [i for i, c in enumerate(contaminated) if not c]
        if 2 * len(keep) < len(traces):
            raise ExperimentInvalidError(
                f"only {len(keep)} of {len(traces)} realizations stayed clear of the boundaries"
            )
        clean_until = times.size
    elif boundary_policy == "truncate":
        keep = list(range(len(traces)))
        clean_until = min(t.clean_until for t in traces)
    else:
        raise ValueError(f"unknown boundary policy {boundary_policy!r}")
    excluded = [indices[i] for i in range(len(traces)) if i not in set(keep)]

    ncm = np.zeros(times.size)
    ncm2 = np.zeros(times.size)
    s2 = np.zeros(times.size)
    s22 = np.zeros(times.size)
    d2s = np.zeros(times.size)
    cross = np.zeros(times.size)
    pops = None
    for i in keep:
        t = traces[i]
        second = t.d2 + t.n_cm**2
        ncm += t.n_cm
        ncm2 += t.n_cm**2
        s2 += second
        s22 += second**2
        cross += second * t.n_cm
        d2s += t.d2
        if keep_populations and t.populations is not None:
            pops = t.populations.copy() if pops is None else pops + t.populations
    R = len(keep)
    m_ncm = ncm / R
    m_s2 = s2 / R
    d2 = np.maximum(m_s2 - m_ncm**2, 0.0)
    var_ncm = np.maximum(ncm2 / R - m_ncm**2, 0.0)
    # delta method for d2 = E[s] - E[x]^2
    var_s2 = np.maximum(s22 / R - m_s2**2, 0.0)
    cov = cross / R - m_s2 * m_ncm
    var_d2 = np.maximum(var_s2 - 4 * m_ncm * cov + 4 * m_ncm**2 * var_ncm, 0.0)
    denom = np.sqrt(max(R - 1, 1))
    if pops is not None:
        pops = pops / R
        # the reduction of populations must agree with the moment reduction
        chk_ncm, chk_d2 = moments(pops, n0)
        assert np.allclose(chk_ncm, m_ncm, atol=1e-8) and np.allclose(chk_d2, d2, atol=1e-6)
    return EnsembleTrace(
        times=times,
        n_cm=m_ncm,
        d2=d2,
        d2_mean=d2s / R,
        stderr_n_cm=np.sqrt(var_ncm) / denom,
        stderr_d2=np.sqrt(var_d2) / denom,
        R=len(traces),
        seed=seed,
        realizations=list(indices),
        contaminated=[indices[i] for i, c in enumerate(contaminated) if c],
        excluded=excluded,
        clean_until=clean_until,
        populations=pops,
        extra={"clamp_count": int(sum(t.clamp_count for t in traces))},
    )
