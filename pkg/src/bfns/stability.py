"""Continuous-dependence experiments for the modified system.

The theory bounds the divergence of two runs u, v that differ in initial
state, cutoff level and forcing:

    |v(t) - u(t)|^2 <= C e^(gamma (t - tau)) ( |v_tau - u_tau|^2
        + (int_tau^t ||u||^2 ds) |M - N|^2 + int_tau^t |f_v - f_u|^2 ds ).

The sweep perturbs each knob over a grid spanning several decades, records
sup_t |w|^2 against the bracketed denominator, and fits an empirical
exponential rate from the growth of |w(t)|^2.
"""

from __future__ import annotations

import math

import numpy as np

from . import fields as fl
from .errors import BlowUpError, ParameterError
from .integrate import n_steps, step
from .util import parallel_map

STABILITY_CSV_HEADER = ["kind", "eps", "delta", "eta", "sup_w2", "denom", "ratio", "gamma_hat"]


def pair_run(cfg_u, cfg_v, u0, v0):
    """Synchronized twin integration; returns (times, |v - u|^2 per step).

    Both configurations must share the discretization (d, K, grid, dt grid);
    they may differ in cutoff and forcing.
    """
    for attr in ("d", "K", "grid_m", "dt", "tau", "t_end"):
        if getattr(cfg_u, attr) != getattr(cfg_v, attr):
            raise ParameterError(f"twin runs must share {attr}")
    su = fl.leray_project(u0)
    sv = fl.leray_project(v0)
    n = n_steps(cfg_u)
    w2 = np.empty(n + 1)
    times = cfg_u.tau + cfg_u.dt * np.arange(n + 1)
    w2[0] = fl.h_norm_sq(fl.SpectralField(cfg_u.d, cfg_u.K, sv.coeffs - su.coeffs))
    for i in range(1, n + 1):
        su = step(su, cfg_u.dt, cfg_u)
        sv = step(sv, cfg_v.dt, cfg_v)
        w2[i] = fl.h_norm_sq(fl.SpectralField(cfg_u.d, cfg_u.K, sv.coeffs - su.coeffs))
    return times, w2


def _gamma_hat(times, w2):
    """Slope of log |w(t)|^2 by least squares over the strictly positive tail."""
    mask = w2 > 0
    if np.count_nonzero(mask) < 2:
        return math.nan
    return float(np.polyfit(times[mask], np.log(w2[mask]), 1)[0])


def _run_cell(spec):
    (kind, eps, delta, eta, cfg, u0, dir_ic, dir_f, int_v2_u) = spec
    cfg_v = cfg
    v0 = u0
    denom = 0.0
    if eps:
        v0 = fl.SpectralField(cfg.d, cfg.K, u0.coeffs + eps * dir_ic.coeffs)
        v0 = fl.leray_project(v0)
    if delta:
        cfg_v = cfg_v.with_(n_cut=cfg.n_cut + delta)
        denom += delta * delta * int_v2_u
    if eta:
        f_v = fl.leray_project(
            fl.SpectralField(cfg.d, cfg.K, cfg.forcing.coeffs + eta * dir_f.coeffs)
        )
        cfg_v = cfg_v.with_(forcing=f_v)
        df2 = fl.h_norm_sq(fl.SpectralField(cfg.d, cfg.K, f_v.coeffs - cfg.forcing.coeffs))
        denom += df2 * (cfg.t_end - cfg.tau)
    try:
        times, w2 = pair_run(cfg, cfg_v, u0, v0)
    except BlowUpError:
        return {"kind": kind, "eps": eps, "delta": delta, "eta": eta,
                "sup_w2": math.nan, "denom": math.nan, "ratio": math.nan,
                "gamma_hat": math.nan, "failed": True}
    denom += w2[0]
    sup = float(np.max(w2))
    return {
        "kind": kind, "eps": eps, "delta": delta, "eta": eta,
        "sup_w2": sup, "denom": denom,
        "ratio": sup / denom if denom > 0 else math.nan,
        "gamma_hat": _gamma_hat(times, w2), "failed": False,
    }


def continuity_sweep(cfg, u0, eps_grid, delta_grid, eta_grid,
                     direction_seed=0, include_mixed=True, jobs=1):
    """Run the perturbation sweep and return its rows.

    Cutoff perturbations require a finite base n_cut.  Rows are emitted in
    construction order (eps block, delta block, eta block, optional mixed
    row), independent of the worker count.
    """
    eps_grid = [float(x) for x in eps_grid]
    delta_grid = [float(x) for x in delta_grid]
    eta_grid = [float(x) for x in eta_grid]
    if not (eps_grid or delta_grid or eta_grid):
        raise ParameterError("stability sweep has no perturbations to run")
    for g, name in ((eps_grid, "eps"), (delta_grid, "delta"), (eta_grid, "eta")):
        if any(x <= 0 for x in g):
            raise ParameterError(f"{name} grid entries must be positive")
    if delta_grid and not math.isfinite(cfg.n_cut):
        raise ParameterError("cutoff perturbations need a finite base n_cut")

    dir_ic = fl.random_solenoidal(cfg.d, cfg.K, seed=direction_seed, h_norm_target=1.0)
    dir_f = fl.random_solenoidal(cfg.d, cfg.K, seed=direction_seed + 1, h_norm_target=1.0)

    # the denominator integral int ||u||^2 ds comes from one base run
    from .integrate import simulate

    base = simulate(u0, cfg)
    v2 = np.asarray(base.diag["v_norm"]) ** 2
    int_v2_u = float(np.trapezoid(v2, base.diag["t"]))

    specs = []
    for eps in eps_grid:
        specs.append(("eps", eps, 0.0, 0.0, cfg, u0, dir_ic, dir_f, int_v2_u))
    for delta in delta_grid:
        specs.append(("delta", 0.0, delta, 0.0, cfg, u0, dir_ic, dir_f, int_v2_u))
    for eta in eta_grid:
        specs.append(("eta", 0.0, 0.0, eta, cfg, u0, dir_ic, dir_f, int_v2_u))
    if include_mixed and eps_grid and delta_grid and eta_grid:
        mid = lambda g: g[len(g) // 2]
        specs.append(("mixed", mid(eps_grid), mid(delta_grid), mid(eta_grid),
                      cfg, u0, dir_ic, dir_f, int_v2_u))
    rows = parallel_map(_run_cell, specs, jobs)

    ratios = [r["ratio"] for r in rows if not r["failed"] and math.isfinite(r["ratio"])]
    rates = [r["gamma_hat"] for r in rows if not r["failed"] and math.isfinite(r["gamma_hat"])]
    return {
        "rows": rows,
        "max_ratio": max(ratios) if ratios else math.nan,
        "gamma_hat": float(np.median(rates)) if rates else math.nan,
        "n_failed": sum(1 for r in rows if r["failed"]),
    }


def csv_rows(rows):
    for r in rows:
        yield (r["kind"], r["eps"], r["delta"], r["eta"],
               r["sup_w2"], r["denom"], r["ratio"], r["gamma_hat"])
