import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouskin.classical import delta_populations, moments
from liouskin.config import from_dict
from liouskin.errors import DomainError, ShapeError
from liouskin.experiments import meanfield_comparison
from liouskin.lattice import LatticeModel, rates
from liouskin.meanfield import meanfield_evolve, meanfield_rhs


def _site_by_site(left, right, n):
    """The occupation equations transcribed site by site with hatted rates."""
    L = n.size
    JL = np.concatenate([left, [0.0]])  # J_l^L for l = 1..L, zero at the boundary
    JR = np.concatenate([right, [0.0]])
    out = np.zeros(L)
    for l in range(L):
        if l + 1 < L:
            hatL = JL[l] + (JL[l] - JR[l]) * n[l]
            out[l] += hatL * n[l + 1] - JR[l] * n[l]
        if l >= 1:
            hatR = JR[l - 1] + (JR[l - 1] - JL[l - 1]) * n[l]
            out[l] += hatR * n[l - 1] - JL[l - 1] * n[l]
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10**6), st.floats(0, 5))
def test_rhs_matches_site_transcription_and_conserves(L, seed, scale):
    m = LatticeModel.build(L, J=0, Q=1.0, kind="bernoulli", h=1.0, seed=seed)
    r = rates(m)
    n = scale * np.random.default_rng(seed).random(L)
    d = meanfield_rhs(r, n)
    np.testing.assert_allclose(d, _site_by_site(np.asarray(r.left), np.asarray(r.right), n), atol=1e-12)
    assert abs(d.sum()) < 1e-12 * max(1.0, scale**2)


def test_linear_without_asymmetry():
    r = rates(LatticeModel.build(6, J=0, Q=1.3))
    n = np.random.default_rng(1).random(6)
    G = np.diag(-r.escape()) + np.diag(r.right, -1) + np.diag(r.left, 1)
    np.testing.assert_allclose(meanfield_rhs(r, n), G @ n, atol=1e-15)
    assert not meanfield_rhs(rates(LatticeModel.build(6, kind="uniform", h=1.0)), np.zeros(6)).any()


def test_rhs_errors():
    r = rates(LatticeModel.build(4))
    with pytest.raises(DomainError):
        meanfield_rhs(r, np.array([0.1, -0.2, 0, 0]))
    with pytest.raises(ShapeError):
        meanfield_rhs(r, np.ones(5))


def _cfg(h=0.4, seed=0, kind="bernoulli"):
    return from_dict({"L": 41, "J": 0.0, "t_max": 40.0, "grid": {"kind": "linear", "points": 41},
                      "disorder": {"kind": kind, "h": h}, "seed": seed, "tolerance": 1e-10})


def test_dilute_limit_converges_linearly():
    cfg = _cfg()
    devs = []
    for N in (0.1, 0.01, 0.001):
        _, n, P = meanfield_comparison(cfg, N)
        devs.append(np.abs(n / N - P).max())
    assert devs[0] > devs[1] > devs[2]
    # first-order corrections in N: each decade of N buys about a decade of accuracy
    assert 7 < devs[0] / devs[1] < 13 and 7 < devs[1] / devs[2] < 13


def test_number_conservation_and_positivity():
    cfg = _cfg(h=1.0)
    times, n, _ = meanfield_comparison(cfg, 1.0)
    tot = n.sum(axis=1)
    assert np.abs(tot - tot[0]).max() / tot[0] < 1e-8
    assert n.min() >= -1e-10


def test_nonlinear_spread_stays_close_to_classical():
    # side-by-side bound at N_total = 1 for the h = 0.4 model
    _, n, P = meanfield_comparison(_cfg(h=0.4, seed=0), 1.0)
    _, d2n = moments(n, 21)
    _, d2P = moments(P, 21)
    assert np.max(np.abs(d2n[1:] - d2P[1:]) / d2P[1:]) < 0.15


def test_uniform_bias_settles_at_the_edge():
    m = LatticeModel.build(21, J=0, Q=1.0, kind="uniform", h=0.5)
    n0 = 0.5 * delta_populations(21, 11)
    n = meanfield_evolve(m, n0, np.array([0.0, 500.0, 1000.0]))
    assert abs(n[-1].sum() - 0.5) < 1e-8
    np.testing.assert_allclose(n[-1], n[-2], atol=1e-8)
    assert n[-1][:3].sum() > 0.9 * 0.5


def test_evolve_input_errors():
    m = LatticeModel.build(5)
    with pytest.raises(DomainError):
        meanfield_evolve(m, np.array([0.1, -0.1, 0, 0, 0]), [0, 1])
    with pytest.raises(ShapeError):
        meanfield_evolve(m, np.ones(4), [0, 1])
