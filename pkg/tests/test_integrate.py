"""Time stepping: accuracy, restart glue, snapshots, blow-up handling."""

import math

import numpy as np
import pytest

from bfns import fields as fl
from bfns.dynamics import SimConfig
from bfns.errors import BlowUpError, ParameterError
from bfns.integrate import (
    Trajectory,
    n_steps,
    restart_concatenate,
    self_convergence,
    simulate,
    step,
)

from conftest import bitwise_equal


def linear_cfg(dt, t_end, beta=1.0):
    return SimConfig(d=2, K=6, mu=0.3, alpha=0.25, beta=beta, n_cut=math.inf,
                     dt=dt, t_end=t_end)


def single_mode_u0():
    return fl.SpectralField.from_modes(2, 6, [
        {"k": (1, 0), "component": 1, "re": 0.5},
    ])


# ---------------------------------------------------------------------------
# accuracy against the analytic solution
# ---------------------------------------------------------------------------


def test_linear_decay_matches_analytic():
    # single |k| = 1 mode with beta = 1: advection vanishes identically and
    # u(t) = exp(-(mu + alpha) t) u0
    u0 = single_mode_u0()
    cfg = linear_cfg(dt=0.01, t_end=1.0)
    traj = simulate(u0, cfg)
    expected = math.exp(-(cfg.mu + cfg.alpha)) * u0.coeffs
    err = np.max(np.abs(traj.final_state.coeffs - expected))
    assert err <= 1e-6 * np.max(np.abs(expected))


def test_global_second_order():
    u0 = single_mode_u0()
    errs = []
    for dt in (0.01, 0.005):
        cfg = linear_cfg(dt=dt, t_end=1.0)
        traj = simulate(u0, cfg)
        expected = math.exp(-(cfg.mu + cfg.alpha)) * u0.coeffs
        errs.append(float(np.max(np.abs(traj.final_state.coeffs - expected))))
    ratio = errs[0] / errs[1]
    assert 3.5 <= ratio <= 4.5


def test_one_step_local_order():
    # local truncation error is O(dt^3), so halving dt cuts it by about 8
    u0 = single_mode_u0()
    cfg = linear_cfg(dt=1.0, t_end=1.0)
    errs = []
    for dt in (0.1, 0.05):
        out = step(u0, dt, cfg)
        expected = math.exp(-(cfg.mu + cfg.alpha) * dt) * u0.coeffs
        errs.append(float(np.max(np.abs(out.coeffs - expected))))
    ratio = errs[0] / errs[1]
    assert 6.5 <= ratio <= 9.5


def test_step_deterministic():
    u0 = fl.random_solenoidal(2, 6, seed=4, h_norm_target=2.0)
    cfg = SimConfig(d=2, K=6, mu=0.2, alpha=0.4, beta=3.0, n_cut=1.5,
                    dt=0.01, t_end=1.0)
    a = step(u0, 0.01, cfg)
    b = step(u0, 0.01, cfg)
    assert bitwise_equal(a, b)


def test_self_convergence_order_two(u0_k8, cutoff_cfg):
    rep = self_convergence(u0_k8, cutoff_cfg.with_(dt=0.02, t_end=0.4))
    assert len(rep["orders"]) == 1
    assert 1.7 <= rep["orders"][0] <= 2.3
    with pytest.raises(ParameterError):
        self_convergence(u0_k8, cutoff_cfg, levels=2)


# ---------------------------------------------------------------------------
# time grid and snapshots
# ---------------------------------------------------------------------------


def test_n_steps():
    assert n_steps(linear_cfg(0.01, 1.0)) == 100
    assert n_steps(SimConfig(d=2, K=2, mu=1, alpha=1, beta=1, n_cut=math.inf,
                             dt=0.25, t_end=2.0, tau=1.0)) == 4
    with pytest.raises(ParameterError):
        n_steps(linear_cfg(0.03, 1.0))


def test_times_reconstructed_from_global_index():
    cfg = linear_cfg(0.01, 0.2).with_(tau=0.5, t_end=0.7)
    traj = simulate(single_mode_u0(), cfg)
    expected = np.array([0.5 + i * 0.01 for i in range(21)])
    assert np.array_equal(traj.diag["t"], expected)
    assert traj.final_time == expected[-1]


def test_snapshot_stride_and_final():
    cfg = linear_cfg(0.01, 0.2).with_(snapshot_stride=7)
    traj = simulate(single_mode_u0(), cfg)
    assert list(traj.snap_indices) == [0, 7, 14, 20]
    assert len(traj.states) == 4
    assert np.array_equal(traj.snap_times, traj.diag["t"][traj.snap_indices])


def test_diag_keys_cover_cutoffs(cutoff_traj):
    d = cutoff_traj.diag
    for key in ("t", "h_norm", "v_norm", "lbeta_norm", "fn_adv", "fn_damp", "work"):
        assert key in d
        assert len(d[key]) == 161
    assert np.all(d["fn_adv"] <= 1.0)
    assert np.all(d["fn_adv"] > 0.0)


def test_unforced_energy_monotone(decay_traj):
    h = decay_traj.diag["h_norm"]
    assert np.all(np.diff(h) <= 1e-12)
    assert h[-1] < 0.5 * h[0]


def test_simulate_rejects_cube_mismatch():
    u0 = fl.random_solenoidal(2, 4, seed=1)
    with pytest.raises(ParameterError):
        simulate(u0, linear_cfg(0.01, 0.1))


# ---------------------------------------------------------------------------
# restart
# ---------------------------------------------------------------------------


class TestRestart:
    def make(self, stride=1):
        u0 = fl.random_solenoidal(2, 6, seed=12, h_norm_target=2.0)
        f = fl.SpectralField.from_modes(2, 6, [
            {"k": (1, 0), "component": 1, "re": 0.4},
        ])
        cfg = SimConfig(d=2, K=6, mu=0.3, alpha=0.5, beta=3.0, n_cut=1.5,
                        dt=0.01, t_end=0.4, forcing=f, snapshot_stride=stride)
        return u0, cfg

    def assert_same_traj(self, a, b):
        for k in a.diag:
            assert np.array_equal(a.diag[k], b.diag[k]), k
        assert np.array_equal(a.snap_times, b.snap_times)
        assert np.array_equal(a.snap_indices, b.snap_indices)
        assert len(a.states) == len(b.states)
        for s, t in zip(a.states, b.states):
            assert bitwise_equal(s, t)

    def test_two_segment_bitwise(self):
        u0, cfg = self.make()
        whole = simulate(u0, cfg)
        first = simulate(u0, cfg.with_(t_end=0.2))
        glued = restart_concatenate(first, cfg)
        self.assert_same_traj(whole, glued)

    def test_three_segment_bitwise_with_stride(self):
        u0, cfg = self.make(stride=5)
        whole = simulate(u0, cfg)
        a = simulate(u0, cfg.with_(t_end=0.13))  # ends off the stride
        b = restart_concatenate(a, cfg.with_(t_end=0.27))
        c = restart_concatenate(b, cfg)
        self.assert_same_traj(whole, c)

    def test_rejects_parameter_changes(self):
        u0, cfg = self.make()
        first = simulate(u0, cfg.with_(t_end=0.2))
        with pytest.raises(ParameterError):
            restart_concatenate(first, cfg.with_(mu=0.4))
        with pytest.raises(ParameterError):
            restart_concatenate(first, cfg.with_(dt=0.005))
        with pytest.raises(ParameterError):
            restart_concatenate(first, cfg.with_(t_end=0.2))  # no extension
        f2 = fl.SpectralField.from_modes(2, 6, [
            {"k": (0, 1), "component": 0, "re": 0.4},
        ])
        with pytest.raises(ParameterError):
            restart_concatenate(first, cfg.with_(forcing=f2))

    def test_rejects_diskonly_trajectory(self):
        traj = Trajectory(None, None, np.array([0.0]), np.array([0]),
                          [single_mode_u0()], params={"d": 2})
        with pytest.raises(ParameterError):
            restart_concatenate(traj, self.make()[1])


# ---------------------------------------------------------------------------
# blow-up
# ---------------------------------------------------------------------------


def test_blowup_carries_time_and_partial():
    u0 = fl.random_solenoidal(2, 6, seed=2, h_norm_target=50.0)
    cfg = SimConfig(d=2, K=6, mu=0.1, alpha=1.0, beta=3.0, n_cut=math.inf,
                    dt=0.5, t_end=5.0)
    with pytest.raises(BlowUpError) as exc:
        simulate(u0, cfg)
    err = exc.value
    assert err.time is not None and 0.0 < err.time <= 5.0
    part = err.partial
    assert part is not None
    n_done = len(part.diag["t"])
    assert 1 <= n_done < 11
    assert np.all(np.isfinite(part.diag["h_norm"]))
    # the partial keeps only snapshots that were actually reached
    assert part.snap_times[-1] <= err.time


def test_header_params_roundtrip(cutoff_traj):
    hp = cutoff_traj.header_params()
    assert hp == {"d": 2, "K": 8, "beta": 3.0, "mu": 0.3, "alpha": 0.5, "n_cut": 1.5}
    bare = Trajectory(None, None, np.array([0.0]), np.array([0]), [], params=None)
    with pytest.raises(ParameterError):
        bare.header_params()
