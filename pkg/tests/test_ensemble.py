from functools import partial

import numpy as np
import pytest

from liouskin.classical import delta_populations, generator, make_trace, moments, propagate, symmetrize
from liouskin.config import from_dict
from liouskin.dynamics import log_grid
from liouskin.ensemble import reduce_traces, run_realizations
from liouskin.errors import ExperimentInvalidError
from liouskin.experiments import transport
from liouskin.lattice import LatticeModel, cumulative_walk


def _classical(r, L=61, seed=5, times=None):
    m = LatticeModel.build(L, J=0, Q=1, kind="bernoulli", h=1.0, p=0.5, seed=seed, realization=r)
    times = np.concatenate([[0], log_grid(0.1, 100, 10)]) if times is None else times
    return propagate(symmetrize(generator(m), cumulative_walk(m.asymmetry)), delta_populations(L, (L + 1) // 2),
                     times)


def test_single_realization_reduces_to_trace():
    t = _classical(0)
    e = reduce_traces([t], 5, [0], boundary_policy="truncate")
    np.testing.assert_array_equal(e.n_cm, t.n_cm)
    np.testing.assert_allclose(e.d2, t.d2, atol=1e-12)
    np.testing.assert_allclose(e.d2_mean, t.d2, atol=1e-12)
    assert e.R == 1 and e.n_used == 1


def test_d2_is_spread_of_averaged_populations():
    traces = [_classical(r) for r in range(8)]
    e = reduce_traces(traces, 5, list(range(8)), boundary_policy="truncate", keep_populations=True)
    ncm, d2 = moments(np.mean([t.populations for t in traces], axis=0), traces[0].n0)
    np.testing.assert_allclose(e.n_cm, ncm, atol=1e-12)
    np.testing.assert_allclose(e.d2, d2, atol=1e-10)
    np.testing.assert_allclose(e.d2_mean, np.mean([t.d2 for t in traces], axis=0), atol=1e-12)
    # the spread of the average includes the scatter of the centres
    assert np.all(e.d2 >= e.d2_mean - 1e-12)


def test_standard_errors():
    traces = [_classical(r) for r in range(10)]
    e = reduce_traces(traces, 5, list(range(10)), boundary_policy="truncate")
    x = np.array([t.n_cm for t in traces])
    np.testing.assert_allclose(e.stderr_n_cm, x.std(axis=0, ddof=0) / 3, atol=1e-12)
    assert np.all(e.stderr_d2 >= 0)


def test_parallel_matches_sequential_bitwise():
    fn = partial(_classical, L=41)
    seq = run_realizations(fn, range(6), workers=1)
    par = run_realizations(fn, range(6), workers=2)
    a = reduce_traces(seq, 5, list(range(6)), boundary_policy="truncate")
    b = reduce_traces(par, 5, list(range(6)), boundary_policy="truncate")
    assert a.d2.tobytes() == b.d2.tobytes() and a.n_cm.tobytes() == b.n_cm.tobytes()


def _synthetic(edge):
    times = np.linspace(0, 1, 5)
    P = np.zeros((5, 11))
    P[:, 5] = 1.0
    if edge is not None:
        P[edge:, 5] = 0.9
        P[edge:, 0] = 0.1
    return make_trace(times, P, 6)


def test_exclude_policy():
    traces = [_synthetic(None), _synthetic(3), _synthetic(None)]
    e = reduce_traces(traces, 1, [10, 11, 12], boundary_policy="exclude")
    assert e.excluded == [11] and e.contaminated == [11] and e.n_used == 2
    assert e.clean_until == 5
    np.testing.assert_array_equal(e.n_cm, 0)


def test_exclude_policy_requires_half_clean():
    traces = [_synthetic(2), _synthetic(3), _synthetic(None)]
    with pytest.raises(ExperimentInvalidError):
        reduce_traces(traces, 1, [0, 1, 2], boundary_policy="exclude")


def test_truncate_policy():
    traces = [_synthetic(None), _synthetic(3), _synthetic(2)]
    e = reduce_traces(traces, 1, [0, 1, 2], boundary_policy="truncate")
    assert e.clean_until == 2 and e.excluded == [] and e.n_used == 3


def test_unknown_policy():
    with pytest.raises(ValueError):
        reduce_traces([_synthetic(None)], 1, [0], boundary_policy="drop")


def test_transport_helper_uses_split_seeds():
    cfg = from_dict({"L": 31, "J": 0.0, "t_max": 10.0, "realizations": 3,
                     "disorder": {"kind": "bernoulli", "h": 1.0}, "seed": 9})
    e = transport(cfg, "classical")
    singles = [transport(cfg.updated({"realizations": 1}), "classical")]
    assert e.R == 3 and e.realizations == [0, 1, 2]
    # realization 0 of the ensemble is the single run with the same seed
    np.testing.assert_array_equal(singles[0].n_cm, _classical(0, L=31, seed=9, times=singles[0].times).n_cm)
