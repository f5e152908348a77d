"""Energy ledgers and the audits built on them.

For a trajectory with per-step diagnostics the ledger accumulates, by
trapezoidal quadrature,

    V(t) = 1/2 |u(t)|^2 + mu int ||u||^2 + alpha int F_N(||u||^(b-1)) |u|_(b+1)^(b+1)
           - int (f, u),

which is constant along exact solutions, so its drift measures integrator
error and must shrink at the scheme's order.  The decay audit checks the
Gronwall bound |u(t)|^2 <= e^(-mu lam1 (t-s)) |u(s)|^2 +
(1 - e^(-mu lam1 (t-s))) |f|^2/(mu lam1)^2, and J(t) = |u(t)|^2 -
(1/(mu lam1)) int_tau^t |f|^2 must be nonincreasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fields as fl
from .dynamics import cutoff_values
from .errors import ParameterError, TrajectoryFormatError
from .integrate import DIAG_KEYS, Trajectory

LEDGER_CSV_HEADER = ["t", "h_norm_sq", "v_norm_sq", "lbeta_norm", "fn_val", "work", "V", "J"]


def _cumtrapz(y, t):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


@dataclass
class EnergyLedger:
    t: np.ndarray
    h2: np.ndarray
    v2: np.ndarray
    lbeta_norm: np.ndarray
    lbeta_pow: np.ndarray
    fnval: np.ndarray
    work: np.ndarray
    cum_visc: np.ndarray
    cum_damp: np.ndarray
    cum_work: np.ndarray
    V: np.ndarray
    J: np.ndarray
    mu: float
    alpha: float
    beta: float
    n_cut: float
    lam1: float
    f_h2: float

    def csv_rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.h2[i], self.v2[i], self.lbeta_norm[i],
                   self.fnval[i], self.work[i], self.V[i], self.J[i])


def build_ledger(traj, lam1=1.0):
    """Assemble the ledger from a trajectory's step-resolution diagnostics."""
    if traj.diag is None:
        raise TrajectoryFormatError(
            "trajectory has no step-resolution diagnostics; rebuild them from "
            "stored states first"
        )
    if traj.cfg is None:
        raise TrajectoryFormatError("trajectory has no configuration attached")
    cfg = traj.cfg
    d = traj.diag
    t = np.asarray(d["t"], dtype=float)
    h2 = np.asarray(d["h_norm"]) ** 2
    v2 = np.asarray(d["v_norm"]) ** 2
    lnorm = np.asarray(d["lbeta_norm"])
    lpow = lnorm ** (cfg.beta + 1.0)
    fnval = np.asarray(d["fn_damp"])
    work = np.asarray(d["work"])
    cum_visc = _cumtrapz(cfg.mu * v2, t)
    cum_damp = _cumtrapz(cfg.alpha * fnval * lpow, t)
    cum_work = _cumtrapz(work, t)
    V = 0.5 * h2 + cum_visc + cum_damp - cum_work
    f_h2 = fl.h_norm_sq(cfg.forcing)
    J = h2 - _cumtrapz(np.full_like(t, f_h2), t) / (cfg.mu * lam1)
    return EnergyLedger(t, h2, v2, lnorm, lpow, fnval, work, cum_visc, cum_damp,
                        cum_work, V, J, cfg.mu, cfg.alpha, cfg.beta, cfg.n_cut,
                        lam1, f_h2)


def rebuild_diagnostics(traj, cfg):
    """Recompute step diagnostics from stored states (for trajectories read
    back from disk).  The snapshot grid is treated as the step grid, so this
    is faithful for stride-1 files."""
    if not traj.states:
        raise TrajectoryFormatError("trajectory has no stored states")
    n = len(traj.states)
    diag = {k: np.empty(n) for k in DIAG_KEYS}
    for i, (t, state) in enumerate(zip(traj.snap_times, traj.states)):
        diag["t"][i] = t
        diag["h_norm"][i] = fl.h_norm(state)
        diag["v_norm"][i] = fl.v_norm(state)
        diag["lbeta_norm"][i] = fl.lp_norm(state, cfg.beta + 1.0, cfg.grid_m)
        fa, fd = cutoff_values(state, cfg)
        diag["fn_adv"][i] = fa
        diag["fn_damp"][i] = fd
        diag["work"][i] = fl.h_inner(cfg.forcing, state)
    return Trajectory(cfg, diag, traj.snap_times, traj.snap_indices, traj.states)


def equality_regime(beta, n_cut):
    """The energy identity is an equality for the modified system at any
    beta and for the unmodified one at beta >= 3; otherwise only the
    inequality direction is guaranteed in the limit."""
    return math.isfinite(n_cut) or beta >= 3.0


def audit_energy_equality(ledger, halved=None):
    """Max |V(t) - V(tau)| plus, when a dt/2 ledger is supplied, the drift
    ratio and the implied convergence order."""
    drift = float(np.max(np.abs(ledger.V - ledger.V[0])))
    out = {"max_drift": drift}
    if halved is not None:
        drift_h = float(np.max(np.abs(halved.V - halved.V[0])))
        out["drift_halved"] = drift_h
        out["drift_ratio"] = drift / drift_h if drift_h > 0 else math.inf
        out["order_estimate"] = math.log2(out["drift_ratio"]) if drift_h > 0 else math.inf
    return out


def audit_energy_inequality(ledger):
    """Worst increase of V over any ordered pair of times (V should only
    decrease, up to integrator drift)."""
    running_min = np.minimum.accumulate(ledger.V)
    return {"max_violation": float(np.max(ledger.V - running_min))}


def audit_decay(ledger, n_pairs=1000, seed=0, slack=1.05):
    """Check the Gronwall decay bound on sampled (s, t) pairs.

    All pairs anchored at the initial time are checked, plus seeded random
    ordered pairs.  Returns the violation count and the worst ratio of
    |u(t)|^2 to the allowed bound (with multiplicative slack).
    """
    t, h2 = ledger.t, ledger.h2
    n = len(t)
    if n < 2:
        raise ParameterError("ledger too short for a decay audit")
    rng = np.random.default_rng(seed)
    s_rand = rng.integers(0, n - 1, n_pairs)
    t_rand = s_rand + 1 + np.floor(rng.random(n_pairs) * (n - 1 - s_rand)).astype(np.int64)
    si = np.concatenate([np.zeros(n - 1, dtype=np.int64), s_rand])
    ti = np.concatenate([np.arange(1, n, dtype=np.int64), t_rand])
    rate = ledger.mu * ledger.lam1
    limit = ledger.f_h2 / rate ** 2
    decay = np.exp(-rate * (t[ti] - t[si]))
    bound = decay * h2[si] + (1.0 - decay) * limit
    ratio = h2[ti] / np.where(bound > 0, bound, 1.0)
    violations = int(np.count_nonzero(h2[ti] > slack * bound))
    return {
        "checked": int(len(si)),
        "violations": violations,
        "worst_ratio": float(np.max(ratio)) if len(ratio) else 0.0,
    }


def monotone_j(ledger):
    """J series with its largest per-step increment (should be <= ~1e-10)."""
    increments = np.diff(ledger.J)
    return {
        "J": ledger.J,
        "max_increment": float(np.max(increments)) if len(increments) else 0.0,
    }
