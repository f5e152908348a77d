"""Time integration with a two-stage exponential scheme (ETD-RK2).

The stiff Stokes part -mu A u is integrated exactly through the diagonal
factor exp(-mu |k|^2 dt); the cutoff, advection, damping and forcing are
advanced with the second-order Cox-Matthews two-stage rule

    a       = E u_n + dt phi1(z) N(u_n),         E = e^z, z = -mu |k|^2 dt
    u_(n+1) = a + dt phi2(z) (N(a) - N(u_n)),

with phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2 evaluated by
series for |z| < 1e-4.  The cutoff norms are re-evaluated at each stage
state, never lagged.  The stepper is a pure function of (state, dt, config),
which is what makes restart gluing and twin-run comparisons bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import fields as fl
from .dynamics import SimConfig, _nonlinear_coeffs, cutoff_values
from .errors import BlowUpError, ParameterError

BLOWUP_LIMIT = 1e15

DIAG_KEYS = ("t", "h_norm", "v_norm", "lbeta_norm", "fn_adv", "fn_damp", "work")


def _phi1(z):
    small = np.abs(z) < 1e-4
    series = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    denom = np.where(small, 1.0, z)
    return np.where(small, series, np.expm1(z) / denom)


def _phi2(z):
    small = np.abs(z) < 1e-4
    series = 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    denom = np.where(small, 1.0, z * z)
    return np.where(small, series, (np.expm1(z) - z) / denom)


@lru_cache(maxsize=32)
def _etd_factors(d, K, mu, dt):
    g = fl.get_grid(d, K, 2 * K + 1)
    z = -mu * dt * g.ksq
    return np.exp(z), _phi1(z), _phi2(z)


def step(state, dt, cfg):
    """One ETD-RK2 step.  Raises BlowUpError on non-finite or huge output."""
    E, P1, P2 = _etd_factors(cfg.d, cfg.K, cfg.mu, dt)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        n0 = _nonlinear_coeffs(state.coeffs, cfg)
        a = E * state.coeffs + dt * (P1 * n0)
        na = _nonlinear_coeffs(a, cfg)
        c1 = a + dt * (P2 * (na - n0))
    if not np.all(np.isfinite(c1.view(np.float64))) or np.max(np.abs(c1)) > BLOWUP_LIMIT:
        raise BlowUpError("integrator state diverged")
    return fl.SpectralField(cfg.d, cfg.K, fl._project_coeffs(c1, cfg.d, cfg.K))


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """A run: per-step diagnostics plus stored snapshots.

    Trajectories read back from disk carry header parameters in ``params``
    and no diagnostics (they can be rebuilt from the stored states).
    """

    cfg: SimConfig | None
    diag: dict | None
    snap_times: np.ndarray
    snap_indices: np.ndarray
    states: list = dc_field(repr=False, default_factory=list)
    params: dict | None = None

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self):
        return float(self.snap_times[-1])

    def header_params(self):
        if self.cfg is not None:
            c = self.cfg
            return {"d": c.d, "K": c.K, "beta": c.beta, "mu": c.mu,
                    "alpha": c.alpha, "n_cut": c.n_cut}
        if self.params is None:
            raise ParameterError("trajectory carries neither config nor header parameters")
        return dict(self.params)


def n_steps(cfg):
    """Number of dt steps covering [tau, t_end]; the span must sit on the grid."""
    span = cfg.t_end - cfg.tau
    n = int(round(span / cfg.dt))
    if n < 1 or abs(n * cfg.dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ParameterError(
            f"time span {span} is not a positive multiple of dt={cfg.dt}"
        )
    return n


def _record(diag, i, t, state, cfg):
    diag["t"][i] = t
    diag["h_norm"][i] = fl.h_norm(state)
    diag["v_norm"][i] = fl.v_norm(state)
    diag["lbeta_norm"][i] = fl.lp_norm(state, cfg.beta + 1.0, cfg.grid_m)
    fa, fd = cutoff_values(state, cfg)
    diag["fn_adv"][i] = fa
    diag["fn_damp"][i] = fd
    diag["work"][i] = fl.h_inner(cfg.forcing, state)


def _advance(state, start_index, n, cfg):
    """March n steps from a global step index, recording diagnostics every
    step and snapshots on the configured stride (plus the final state).

    Times are always reconstructed as tau + i*dt from the global index, so a
    restarted run reproduces the time grid of an unbroken one bitwise.
    """
    diag = {k: np.empty(n + 1) for k in DIAG_KEYS}
    snap_times, snap_indices, states = [], [], []

    def want_snapshot(i):
        return i % cfg.snapshot_stride == 0 or i == start_index + n

    t = cfg.tau + start_index * cfg.dt
    _record(diag, 0, t, state, cfg)
    if want_snapshot(start_index):
        snap_times.append(t)
        snap_indices.append(start_index)
        states.append(state)
    for j in range(1, n + 1):
        i = start_index + j
        t = cfg.tau + i * cfg.dt
        try:
            state = step(state, cfg.dt, cfg)
        except BlowUpError as exc:
            partial = Trajectory(
                cfg,
                {k: v[:j] for k, v in diag.items()},
                np.asarray(snap_times),
                np.asarray(snap_indices, dtype=np.int64),
                states,
            )
            raise BlowUpError("integrator state diverged", time=t, partial=partial) from exc
        _record(diag, j, t, state, cfg)
        if want_snapshot(i):
            snap_times.append(t)
            snap_indices.append(i)
            states.append(state)
    return state, diag, snap_times, snap_indices, states


def simulate(u0, cfg):
    """Integrate from u0 over [tau, t_end].  Raises BlowUpError (carrying the
    partial trajectory) if the state diverges."""
    fl.validate_field(u0)
    if u0.d != cfg.d or u0.K != cfg.K:
        raise ParameterError("initial state does not live on the configured mode cube")
    state = fl.leray_project(u0)
    n = n_steps(cfg)
    _, diag, st, si, states = _advance(state, 0, n, cfg)
    return Trajectory(cfg, diag, np.asarray(st), np.asarray(si, dtype=np.int64), states)


def restart_concatenate(first, cfg):
    """Resume a trajectory from its stored final state up to cfg.t_end and
    glue the pieces into one trajectory equal, bitwise, to an unbroken run.
    """
    if first.cfg is None or first.diag is None:
        raise ParameterError("can only restart a trajectory with full config and diagnostics")
    base = first.cfg
    for attr in ("d", "K", "mu", "alpha", "beta", "n_cut", "grid_m", "snapshot_stride"):
        if getattr(cfg, attr) != getattr(base, attr):
            raise ParameterError(f"restart config changes {attr}")
    if cfg.dt != base.dt or cfg.tau != base.tau:
        raise ParameterError("restart must keep the original dt grid and origin")
    if not fl.fields_equal(cfg.forcing, base.forcing):
        raise ParameterError("restart config changes the forcing")
    idx0 = int(first.snap_indices[-1])
    n_total = n_steps(cfg)
    n_more = n_total - idx0
    if n_more < 1:
        raise ParameterError("restart horizon does not extend the trajectory")
    span = cfg.tau + idx0 * cfg.dt
    if abs(span - first.final_time) > 1e-9 * max(1.0, abs(span)):
        raise ParameterError("stored final time is off the restart dt grid")

    _, diag2, st2, si2, states2 = _advance(first.final_state, idx0, n_more, cfg)
    diag = {k: np.concatenate([first.diag[k], diag2[k][1:]]) for k in DIAG_KEYS}
    # normalize the snapshot set to the one an unbroken run would produce
    keep1 = [j for j, i in enumerate(first.snap_indices)
             if i % cfg.snapshot_stride == 0 or i == n_total]
    drop_first2 = si2[0] in set(int(first.snap_indices[j]) for j in keep1)
    sl2 = slice(1, None) if drop_first2 else slice(None)
    snap_times = np.concatenate([first.snap_times[keep1], np.asarray(st2)[sl2]])
    snap_indices = np.concatenate(
        [first.snap_indices[keep1], np.asarray(si2, dtype=np.int64)[sl2]]
    )
    states = [first.states[j] for j in keep1] + states2[1 if drop_first2 else 0:]
    return Trajectory(cfg, diag, snap_times, snap_indices, states)


def self_convergence(u0, cfg, levels=3):
    """Successive-difference convergence study at dt, dt/2, dt/4, ...

    Returns the measured error ratios |u_dt - u_dt/2| / |u_dt/2 - u_dt/4|
    (approximately 2^order) and the fitted order.
    """
    if levels < 3:
        raise ParameterError("need at least three refinement levels")
    finals = []
    for lev in range(levels):
        c = cfg.with_(dt=cfg.dt / 2 ** lev, snapshot_stride=max(1, n_steps(cfg)))
        finals.append(simulate(u0, c).final_state)
    diffs = [
        fl.h_norm(fl.SpectralField(cfg.d, cfg.K, a.coeffs - b.coeffs))
        for a, b in zip(finals, finals[1:])
    ]
    ratios = [d1 / d2 for d1, d2 in zip(diffs, diffs[1:])]
    orders = [math.log2(r) for r in ratios]
    return {"diffs": diffs, "ratios": ratios, "orders": orders}
