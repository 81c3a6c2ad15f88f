"""Named reproductions and generic runs, each writing CSV/JSON artifacts plus a hashed manifest."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable

import numpy as np

from .artifacts import ArtifactWriter
from .classical import delta_populations, generator, propagate, steady_state_closed_form, symmetrize
from .config import ExperimentConfig, from_dict
from .dynamics import evolve, initial_state, linear_grid, log_grid
from .ensemble import reduce_traces, run_realizations
from .errors import FitDomainError, UnknownExperimentError
from .fitting import fit_power, fit_sinai, walk_extremes
from .hatano_nelson import correlation_evolve, effective_hamiltonian, skin_diagnostics, theta_sequence
from .lattice import cumulative_walk
from .liouvillian import assemble, block_corner_mass, eigenmode_profile, localization_metrics, spectrum
from .meanfield import meanfield_evolve

log = logging.getLogger(__name__)

OUT_ENV = "LIOUSKIN_OUT"
DEFAULT_OUT = "runs"


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    defaults: dict
    runner: Callable[[ExperimentConfig, ArtifactWriter], dict]


def time_grid(cfg: ExperimentConfig) -> np.ndarray:
    g = cfg.grid
    if g.kind == "linear":
        return linear_grid(cfg.t_max, g.points)
    return np.concatenate([[0.0], log_grid(g.t_min, cfg.t_max, g.per_decade)])


def _safe_fit(fn, *args, **kw):
    try:
        return fn(*args, **kw).to_dict()
    except FitDomainError as exc:
        return {"error": str(exc)}


def _sinai_dict(trace, window):
    try:
        s = fit_sinai(trace, window)
    except FitDomainError as exc:
        return {"error": str(exc)}
    return {"quartic": s.quartic.to_dict(), "log_power": s.log_power.to_dict()}


# spectral experiments

def _run_spectrum(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    rows = []
    for r in range(cfg.realizations):
        model = cfg.model(r)
        summ = spectrum(assemble(model))
        tag = "" if cfg.realizations == 1 else f"_r{r}"
        prof = eigenmode_profile(summ)
        rho_diag = np.real(np.diag(summ.steady_state))
        walk = cumulative_walk(model.asymmetry)
        w.spectrum(f"spectrum{tag}.csv", summ.eigenvalues)
        w.grid(f"steady_state{tag}.csv", np.abs(summ.steady_state), "|rho_e[n,m]|")
        w.grid(f"profile{tag}.csv", prof, "I[n,m] = L^-2 sum_alpha |r_alpha[n,m]|")
        w.rows(f"walk{tag}.csv", ["site", "X", "steady_population", "classical_population"],
               zip(range(1, model.L + 1), walk.X, rho_diag, steady_state_closed_form(model.asymmetry)))
        diag_metrics = localization_metrics(rho_diag)
        prof_metrics = localization_metrics(prof)
        lam = summ.eigenvalues
        rows.append({
            "realization": r,
            "zero_modes": summ.n_zero_modes,
            "gap": float(-np.max(lam.real[np.abs(lam) >= 1e-9])),
            "steady_center_of_mass": diag_metrics.center_of_mass,
            "steady_corner_mass": diag_metrics.corner_mass,
            "steady_argmax": int(np.argmax(rho_diag)) + 1,
            "profile_corner_mass": prof_metrics.corner_mass,
            "profile_block_corner_mass": block_corner_mass(prof),
            "walk_extremes": walk_extremes(walk),
        })
    return {"realizations": rows}


# transport experiments

def _quantum_trace(cfg: ExperimentConfig, r: int, keep_populations: bool = False):
    times = time_grid(cfg)
    return evolve(cfg.model(r), initial_state(cfg.L, cfg.center), times, tolerance=cfg.tolerance,
                  n0=cfg.center, keep_populations=keep_populations)


def _classical_trace(cfg: ExperimentConfig, r: int, keep_populations: bool = False):
    model = cfg.model(r)
    sym = symmetrize(generator(model), cumulative_walk(model.asymmetry))
    return propagate(sym, delta_populations(cfg.L, cfg.center), time_grid(cfg), n0=cfg.center,
                     keep_populations=keep_populations)


def transport(cfg: ExperimentConfig, engine: str = "quantum", keep_populations: bool = False):
    """A single trace (one realization) or an ``EnsembleTrace`` (several)."""
    fn = {"quantum": _quantum_trace, "classical": _classical_trace}[engine]
    if cfg.realizations == 1:
        return fn(cfg, 0, keep_populations)
    indices = list(range(cfg.realizations))
    traces = run_realizations(partial(fn, cfg), indices, workers=cfg.workers)
    return reduce_traces(traces, cfg.seed, indices, boundary_policy=cfg.boundary_policy,
                         keep_populations=keep_populations)


def _transport_summary(trace, ensemble: bool) -> dict:
    clean = int(trace.clean_until)
    out = {
        "t_window_used": [float(trace.times[0]), float(trace.times[clean - 1])],
        "fits": {
            "n_cm": _safe_fit(fit_power, trace, "n_cm", absolute=True),
            "d2": _safe_fit(fit_power, trace, "d2"),
        },
    }
    if ensemble:
        out["fits"]["d2_mean"] = _safe_fit(fit_power, trace, "d2_mean")
        out.update(R=trace.R, realizations_used=trace.n_used, excluded=trace.excluded,
                   boundary_contaminated=bool(trace.contaminated),
                   contaminated_count=len(trace.contaminated),
                   clamp_count=int(trace.extra.get("clamp_count", 0)))
    else:
        out.update(boundary_contaminated=trace.boundary_contaminated, clamp_count=trace.clamp_count,
                   diagnostics={k: v for k, v in trace.extra.items() if np.ndim(v) == 0})
    return out


def _write_transport(trace, w: ArtifactWriter, ensemble: bool):
    w.trace("trace.csv", trace, stderr=ensemble)
    if ensemble:
        w.trace("trace_realization_mean.csv", trace, d2_field="d2_mean")
    if trace.populations is not None:
        w.snapshots("snapshots.csv", trace.times, trace.populations)


def _run_quantum(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    trace = transport(cfg, "quantum", keep_populations=True)
    ensemble = cfg.realizations > 1
    _write_transport(trace, w, ensemble)
    return _transport_summary(trace, ensemble)


def _run_classical(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    trace = transport(cfg, "classical", keep_populations=cfg.realizations == 1)
    ensemble = cfg.realizations > 1
    _write_transport(trace, w, ensemble)
    return _transport_summary(trace, ensemble)


def sinai_window(times) -> tuple:
    """Final two decades of the grid."""
    hi = float(times[-1])
    return hi / 100.0, hi


def _run_sinai(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    trace = transport(cfg, "classical")
    ensemble = cfg.realizations > 1
    _write_transport(trace, w, ensemble)
    out = _transport_summary(trace, ensemble)
    clean_times = trace.times[: trace.clean_until]
    out["fits"]["sinai"] = _sinai_dict(trace, sinai_window(clean_times))
    out["max_abs_n_cm"] = float(np.max(np.abs(trace.n_cm[: trace.clean_until])))
    return out


# mean-field and Hatano-Nelson

def meanfield_comparison(cfg: ExperimentConfig, N_total: float | None = None, realization: int = 0):
    """Mean-field occupations (scaled by ``N_total``) against classical populations.

    Returns ``(times, n, P)``; ``n`` is the raw occupation array.
    """
    N = cfg.meanfield.N_total if N_total is None else N_total
    model = cfg.model(realization, J=0.0)
    times = time_grid(cfg)
    P0 = delta_populations(cfg.L, cfg.center)
    n = meanfield_evolve(model, N * P0, times, tolerance=cfg.tolerance)
    sym = symmetrize(generator(model), cumulative_walk(model.asymmetry))
    P = propagate(sym, P0, times, n0=cfg.center).populations
    return times, n, P


def _run_meanfield(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    N = cfg.meanfield.N_total
    times, n, P = meanfield_comparison(cfg)
    w.snapshots("occupations.csv", times, n, value="n_l")
    w.snapshots("classical_populations.csv", times, P)
    totals = n.sum(axis=1)
    return {
        "N_total": N,
        "max_abs_deviation": float(np.max(np.abs(n / N - P))),
        "max_relative_number_drift": float(np.max(np.abs(totals - totals[0])) / totals[0]),
        "clamp_count": 0,
        "boundary_contaminated": False,
        "t_window_used": [float(times[0]), float(times[-1])],
        "fits": {},
    }


def hn_trace(cfg: ExperimentConfig, r: int, method: str = "expm"):
    theta = theta_sequence(cfg.L, cfg.disorder.p, cfg.seed, r)
    Heff = effective_hamiltonian(cfg.L, cfg.J, cfg.kappa, theta)
    C0 = np.diag(delta_populations(cfg.L, cfg.center)).astype(complex)
    return correlation_evolve(Heff, C0, time_grid(cfg), tolerance=cfg.tolerance, method=method, n0=cfg.center)


def _run_hatano_nelson(cfg: ExperimentConfig, w: ArtifactWriter) -> dict:
    clean = effective_hamiltonian(cfg.L, cfg.J, cfg.kappa, diagonal="uniform")
    lam = np.linalg.eigvals(clean.matrix)
    w.spectrum("spectrum_clean.csv", lam[np.lexsort((lam.imag, lam.real))])
    skin = skin_diagnostics(clean)
    indices = list(range(cfg.realizations))
    traces = run_realizations(partial(hn_trace, cfg), indices, workers=cfg.workers)
    ens = reduce_traces(traces, cfg.seed, indices, boundary_policy=cfg.boundary_policy)
    _write_transport(ens, w, True)
    out = _transport_summary(ens, True)
    out["clean_skin"] = {k: v for k, v in skin.items() if k != "profile"}
    return out


EXPERIMENTS: dict[str, Experiment] = {}


def _register(name, description, runner, **defaults):
    EXPERIMENTS[name] = Experiment(name, description, defaults, runner)


_FIG2 = dict(L=31, J=0.2, Q=1.0, disorder={"kind": "uniform", "h": 0.4})
_register("fig2-spectrum", "Liouvillian spectrum, steady state and eigenmode profile with uniform asymmetry",
          _run_spectrum, **_FIG2)
_register("fig3-reciprocal", "Same as fig2 with h=0: no skin accumulation", _run_spectrum,
          **{**_FIG2, "disorder": {"kind": "zero", "h": 0.0}})
_register("fig4-erratic", "Three bernoulli(p=0.5) realizations: bulk localization at walk extremes",
          _run_spectrum, **{**_FIG2, "disorder": {"kind": "bernoulli", "h": 0.4, "p": 0.5}}, realizations=3)
_FIG5 = dict(L=81, J=0.2, Q=1.0, t_max=20.0, grid={"kind": "linear", "points": 201}, tolerance=1e-9)
_register("fig5-drift", "Ballistic drift under uniform asymmetry h=1", _run_quantum,
          **{**_FIG5, "disorder": {"kind": "uniform", "h": 1.0}})
_register("fig6-diffusion", "Diffusive spreading without asymmetry", _run_quantum,
          **{**_FIG5, "t_max": 40.0, "disorder": {"kind": "zero", "h": 0.0}})
_register("fig7-biased", "Ensemble transport for biased disorder p=0.3", _run_quantum,
          **{**_FIG5, "t_max": 30.0, "grid": {"kind": "log", "t_min": 0.1, "per_decade": 20},
             "disorder": {"kind": "bernoulli", "h": 1.0, "p": 0.3}, "realizations": 100,
             "boundary_policy": "truncate", "tolerance": 1e-8})
_register("fig8-subdiffusion", "Ensemble transport for globally reciprocal disorder p=0.5", _run_quantum,
          **{**_FIG5, "t_max": 1000.0, "grid": {"kind": "log", "t_min": 0.1, "per_decade": 20},
             "disorder": {"kind": "bernoulli", "h": 1.0, "p": 0.5}, "realizations": 100,
             "boundary_policy": "exclude", "tolerance": 1e-8})
_register("fig9-sinai", "Classical Sinai subdiffusion on a long chain", _run_sinai,
          L=401, J=0.0, Q=1.0, t_max=1e6, grid={"kind": "log", "t_min": 0.1, "per_decade": 20},
          disorder={"kind": "bernoulli", "h": 1.0, "p": 0.5}, realizations=200, boundary_policy="exclude")
_register("classical-transport", "Generic classical run (J=0 rate equation)", _run_classical,
          L=201, J=0.0, Q=1.0, t_max=100.0, grid={"kind": "linear", "points": 201})
_register("quantum-transport", "Generic Liouvillian transport run", _run_quantum, **_FIG5)
_register("meanfield-dilute", "Mean-field occupations against classical propagation", _run_meanfield,
          L=81, J=0.0, Q=1.0, t_max=100.0, grid={"kind": "linear", "points": 101},
          disorder={"kind": "bernoulli", "h": 0.4, "p": 0.5}, tolerance=1e-10, meanfield={"N_total": 0.01})
_register("hn-ballistic", "Stochastic Hatano-Nelson correlation dynamics", _run_hatano_nelson,
          L=401, J=1.0, kappa=1.0, t_max=80.0, grid={"kind": "linear", "points": 321},
          disorder={"kind": "bernoulli", "h": 0.0, "p": 0.5}, realizations=100, boundary_policy="truncate")


def default_config(name: str, overrides: dict | None = None) -> ExperimentConfig:
    if name not in EXPERIMENTS:
        raise UnknownExperimentError(f"unknown experiment {name!r}; known: {', '.join(EXPERIMENTS)}")
    cfg = from_dict({"experiment": name, **EXPERIMENTS[name].defaults})
    return cfg.updated(overrides) if overrides else cfg


def resolved_config(cfg: ExperimentConfig) -> dict:
    """Config echo for the summary.

    The output location and worker count are left out: neither changes the
    numbers, and reruns elsewhere or with more processes then hash identically.
    """
    d = cfg.to_dict()
    d.pop("out", None)
    d.pop("workers", None)
    return d


def output_dir(cfg: ExperimentConfig) -> Path:
    if cfg.out:
        return Path(cfg.out)
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT)) / cfg.experiment


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    summary: dict
    manifest: dict


def run(cfg: ExperimentConfig) -> RunResult:
    """Run ``cfg.experiment`` and write its artifacts; the summary echoes the resolved config."""
    if cfg.experiment not in EXPERIMENTS:
        raise UnknownExperimentError(f"unknown experiment {cfg.experiment!r}")
    out = output_dir(cfg)
    w = ArtifactWriter(out)
    log.info("running %s into %s", cfg.experiment, out)
    result = EXPERIMENTS[cfg.experiment].runner(cfg, w)
    summary = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "L": cfg.L,
        "h": cfg.disorder.h,
        "p": cfg.disorder.p,
        "Q": cfg.Q,
        "t_window_used": None,
        "clamp_count": 0,
        "boundary_contaminated": False,
        **result,
        "config": resolved_config(cfg),
    }
    w.json("summary.json", summary)
    manifest = w.manifest(extra={"experiment": cfg.experiment})
    return RunResult(out, summary, manifest)
