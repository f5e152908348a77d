"""Long-time experiments: absorbing set, attractor cloud, distance decay,
and regularity probes over a trailing window.

The attractor is approximated by a finite cloud of post-transient snapshots
gathered from several seeds.  Hausdorff semidistances to that cloud
over-estimate the distance to the true attractor, which is fine for the
decay-trend measurements made here.
"""

from __future__ import annotations

import math

import numpy as np

from . import fields as fl
from .dynamics import rhs
from .errors import BlowUpError, ParameterError
from .integrate import n_steps, step
from .util import parallel_map

ATTRACTOR_CSV_HEADER = ["t", "dist_h", "dist_v"]
REGULARITY_CSV_HEADER = ["r", "sup_v_norm_sq", "sup_au", "sup_ut", "sup_lbeta"]


def absorbing_radius(mu, f, lam1=1.0):
    """Squared absorbing-ball radius |f|^2 / (mu^2 lam1^2)."""
    if mu <= 0 or lam1 <= 0:
        raise ParameterError("mu and lam1 must be positive")
    return fl.h_norm_sq(f) / (mu * lam1) ** 2


def seed_set(cfg, count, seed=0, h_norm_target=1.0, decay=2.0):
    """Reproducible family of random solenoidal seeds."""
    if count < 1:
        raise ParameterError("seed count must be positive")
    return [
        fl.random_solenoidal(cfg.d, cfg.K, seed=seed + i,
                             h_norm_target=h_norm_target, decay=decay)
        for i in range(count)
    ]


def _grid_index(cfg, t, what):
    s = (t - cfg.tau) / cfg.dt
    i = int(round(s))
    if i < 0 or abs(s - i) > 1e-9 * max(1.0, abs(s)):
        raise ParameterError(f"{what} {t} does not sit on the step grid")
    return i


def _evolve_collect(spec):
    """Integrate one seed, keeping states at target step indices and the
    largest |u|^2 seen at or after the first target."""
    u0, cfg, targets = spec
    state = fl.leray_project(u0)
    want = set(targets)
    last = max(targets)
    first = min(targets)
    kept = {}
    max_h2 = -math.inf
    if 0 in want:
        kept[0] = state
    if 0 >= first:
        max_h2 = fl.h_norm_sq(state)
    for i in range(1, last + 1):
        try:
            state = step(state, cfg.dt, cfg)
        except BlowUpError as exc:
            return {"blew_up": True, "time": exc.time, "states": kept,
                    "max_h2": max_h2}
        if i >= first:
            max_h2 = max(max_h2, fl.h_norm_sq(state))
        if i in want:
            kept[i] = state
    return {"blew_up": False, "time": None, "states": kept, "max_h2": max_h2}


def estimate_attractor(seeds, cfg, t_transient, t_sample, n_snapshots, jobs=1):
    """Integrate each seed past the transient and collect the cloud.

    Returns the cloud (all post-transient snapshots of all surviving seeds),
    per-seed status, the squared absorbing radius of the configured forcing,
    and the largest post-transient |u|^2 any seed visited.
    """
    if t_transient <= 0:
        raise ParameterError("transient time must be positive")
    if n_snapshots < 1:
        raise ParameterError("need at least one snapshot per seed")
    i_trans = _grid_index(cfg, cfg.tau + t_transient, "transient time")
    if n_snapshots > 1:
        i_samp = _grid_index(cfg, cfg.tau + t_sample, "sample spacing")
        if i_samp < 1:
            raise ParameterError("sample spacing must cover at least one step")
    else:
        i_samp = 0
    targets = [i_trans + j * i_samp for j in range(n_snapshots)]

    results = parallel_map(_evolve_collect, [(s, cfg, targets) for s in seeds], jobs)
    cloud = []
    per_seed = []
    max_h2 = -math.inf
    for res in results:
        per_seed.append({"blew_up": res["blew_up"], "time": res["time"]})
        if res["blew_up"]:
            continue
        cloud.extend(res["states"][i] for i in targets)
        max_h2 = max(max_h2, res["max_h2"])
    return {
        "cloud": cloud,
        "per_seed": per_seed,
        "radius_sq": absorbing_radius(cfg.mu, cfg.forcing),
        "post_transient_max_h2": max_h2,
        "snapshot_times": [cfg.tau + i * cfg.dt for i in targets],
    }


def hausdorff_semidistance(xs, ys, norm="h"):
    """sup over xs of the min distance to ys, in the H or V norm.

    Exactly zero whenever xs is a subset of ys: the matching member yields a
    coefficient-wise zero difference.
    """
    if not ys:
        raise ParameterError("semidistance target set is empty")
    measure = fl.h_norm if norm == "h" else fl.v_norm
    worst = 0.0
    for x in xs:
        best = math.inf
        for y in ys:
            w = fl.SpectralField(x.d, x.K, x.coeffs - y.coeffs)
            best = min(best, measure(w))
        worst = max(worst, best)
    return worst


def distance_decay(b_set, cloud, cfg, t_grid, jobs=1):
    """Evolve the bounded set and report its semidistance to the cloud.

    dist_H and dist_V are measured at each grid time as the sup over evolved
    members of the min distance to any cloud state.
    """
    if not cloud:
        raise ParameterError("cloud is empty")
    targets = sorted(_grid_index(cfg, t, "grid time") for t in t_grid)
    results = parallel_map(_evolve_collect, [(b, cfg, targets) for b in b_set], jobs)
    times = np.array([cfg.tau + i * cfg.dt for i in targets])
    dist_h = np.full(len(targets), math.nan)
    dist_v = np.full(len(targets), math.nan)
    for j, i in enumerate(targets):
        members = [r["states"][i] for r in results if not r["blew_up"] and i in r["states"]]
        if not members:
            continue
        dist_h[j] = hausdorff_semidistance(members, cloud, "h")
        dist_v[j] = hausdorff_semidistance(members, cloud, "v")
    return {"t": times, "dist_h": dist_h, "dist_v": dist_v,
            "n_blown": sum(1 for r in results if r["blew_up"])}


def regularity_probe(traj, r, R=None, cfg=None):
    """Sup over the trailing window t - tau >= r of the regularity gauges.

    Gauges: ||u||^2, |Au|, |u_t| (evaluated as the instantaneous right-hand
    side, exact for the truncated system), and the damping integrand
    |u|_{beta+1}^{beta+1}.  Windows nest as r grows, so the reported sups are
    nonincreasing in r over any fixed snapshot set.
    """
    cfg = cfg if cfg is not None else traj.cfg
    if cfg is None:
        raise ParameterError("regularity probe needs the run configuration")
    if r <= 0:
        raise ParameterError("window offset r must be positive")
    if not traj.states:
        raise ParameterError("trajectory carries no snapshots")
    t0 = float(traj.snap_times[0])
    if R is not None and fl.h_norm(traj.states[0]) > R:
        raise ParameterError("initial state lies outside the stated ball")
    sup = {"sup_v_norm_sq": 0.0, "sup_au": 0.0, "sup_ut": 0.0, "sup_lbeta": 0.0}
    n_window = 0
    for t, state in zip(traj.snap_times, traj.states):
        if t - t0 < r:
            continue
        n_window += 1
        sup["sup_v_norm_sq"] = max(sup["sup_v_norm_sq"], fl.v_norm_sq(state))
        sup["sup_au"] = max(sup["sup_au"], fl.h_norm(fl.stokes_apply(state)))
        sup["sup_ut"] = max(sup["sup_ut"], fl.h_norm(rhs(state, cfg)))
        sup["sup_lbeta"] = max(
            sup["sup_lbeta"],
            fl.lp_norm(state, cfg.beta + 1.0, cfg.grid_m) ** (cfg.beta + 1.0),
        )
    if n_window == 0:
        raise ParameterError("no snapshots at or beyond the window offset")
    sup["r"] = float(r)
    sup["n_window"] = n_window
    sup["finite"] = all(
        math.isfinite(sup[k]) for k in ("sup_v_norm_sq", "sup_au", "sup_ut", "sup_lbeta")
    )
    return sup


def regularity_sweep(traj, r_grid, R=None, cfg=None):
    """regularity_probe over an increasing r grid; one row per r."""
    rows = [regularity_probe(traj, r, R, cfg) for r in sorted(r_grid)]
    return rows


def regularity_csv_rows(rows):
    for s in rows:
        yield (s["r"], s["sup_v_norm_sq"], s["sup_au"], s["sup_ut"], s["sup_lbeta"])


def decay_csv_rows(series):
    for t, dh, dv in zip(series["t"], series["dist_h"], series["dist_v"]):
        yield (float(t), float(dh), float(dv))
