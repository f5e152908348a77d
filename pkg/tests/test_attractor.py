"""Absorbing ball, attractor cloud, distance decay, regularity windows."""

import math

import numpy as np
import pytest

from bfns import fields as fl
from bfns.attractor import (
    ATTRACTOR_CSV_HEADER,
    REGULARITY_CSV_HEADER,
    absorbing_radius,
    decay_csv_rows,
    distance_decay,
    estimate_attractor,
    hausdorff_semidistance,
    regularity_csv_rows,
    regularity_probe,
    regularity_sweep,
    seed_set,
)
from bfns.dynamics import SimConfig
from bfns.errors import ParameterError
from bfns.integrate import simulate


@pytest.fixture(scope="module")
def cfg():
    f = fl.SpectralField.from_modes(2, 6, [
        {"k": (1, 0), "component": 1, "re": 0.3},
    ])
    return SimConfig(d=2, K=6, mu=0.8, alpha=0.5, beta=3.0, n_cut=math.inf,
                     dt=0.01, t_end=1.0, forcing=f)


def test_absorbing_radius_values():
    z = fl.SpectralField.zeros(2, 4)
    assert absorbing_radius(0.5, z) == 0.0
    f = fl.SpectralField.from_modes(2, 6, [
        {"k": (1, 0), "component": 1, "re": 0.5},
    ])
    f2 = fl.h_norm_sq(f)
    assert absorbing_radius(1.0, f) == pytest.approx(f2)
    assert absorbing_radius(0.5, f) == pytest.approx(4.0 * f2)
    assert absorbing_radius(1.0, f, lam1=2.0) == pytest.approx(0.25 * f2)
    with pytest.raises(ParameterError):
        absorbing_radius(0.0, f)
    with pytest.raises(ParameterError):
        absorbing_radius(1.0, f, lam1=-1.0)


def test_seed_set_reproducible(cfg):
    a = seed_set(cfg, 3, seed=5, h_norm_target=2.0)
    b = seed_set(cfg, 3, seed=5, h_norm_target=2.0)
    assert len(a) == 3
    for x, y in zip(a, b):
        assert fl.fields_equal(x, y)
    assert not fl.fields_equal(a[0], a[1])
    for x in a:
        assert fl.h_norm(x) == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(ParameterError):
        seed_set(cfg, 0)


class TestHausdorff:
    def test_subset_gives_exact_zero(self):
        xs = [fl.random_solenoidal(2, 4, seed=i) for i in range(3)]
        assert hausdorff_semidistance(xs, xs) == 0.0
        assert hausdorff_semidistance(xs[:1], xs, norm="v") == 0.0

    def test_asymmetry(self):
        near = fl.random_solenoidal(2, 4, seed=0, h_norm_target=1.0)
        far = fl.random_solenoidal(2, 4, seed=1, h_norm_target=5.0)
        d_one = hausdorff_semidistance([near], [near, far])
        d_two = hausdorff_semidistance([near, far], [near])
        assert d_one == 0.0
        assert d_two > 1.0

    def test_empty_target_rejected(self):
        x = fl.random_solenoidal(2, 4, seed=0)
        with pytest.raises(ParameterError):
            hausdorff_semidistance([x], [])


class TestEstimateAttractor:
    def test_cloud_and_bound(self, cfg):
        seeds = seed_set(cfg, 2, seed=11, h_norm_target=0.8)
        rep = estimate_attractor(seeds, cfg, t_transient=0.6, t_sample=0.1,
                                 n_snapshots=3)
        assert len(rep["cloud"]) == 6
        assert rep["per_seed"] == [{"blew_up": False, "time": None}] * 2
        assert rep["snapshot_times"] == pytest.approx([0.6, 0.7, 0.8])
        assert rep["radius_sq"] == absorbing_radius(cfg.mu, cfg.forcing)
        assert math.isfinite(rep["post_transient_max_h2"])

    def test_single_snapshot_ignores_spacing(self, cfg):
        seeds = seed_set(cfg, 1, seed=2)
        rep = estimate_attractor(seeds, cfg, t_transient=0.5, t_sample=None,
                                 n_snapshots=1)
        assert len(rep["cloud"]) == 1
        assert rep["snapshot_times"] == pytest.approx([0.5])

    def test_validation(self, cfg):
        seeds = seed_set(cfg, 1)
        with pytest.raises(ParameterError):
            estimate_attractor(seeds, cfg, t_transient=0.0, t_sample=0.1,
                               n_snapshots=2)
        with pytest.raises(ParameterError):
            estimate_attractor(seeds, cfg, t_transient=0.5, t_sample=0.1,
                               n_snapshots=0)
        with pytest.raises(ParameterError):
            # spacing off the step grid
            estimate_attractor(seeds, cfg, t_transient=0.5, t_sample=0.0251,
                               n_snapshots=2)


def test_unforced_cloud_collapses_to_origin():
    # without forcing the attractor is the origin; a long transient must
    # bring every seed essentially there
    cfg = SimConfig(d=2, K=6, mu=1.0, alpha=0.5, beta=3.0, n_cut=math.inf,
                    dt=0.02, t_end=1.0)
    seeds = seed_set(cfg, 2, seed=3, h_norm_target=1.0)
    rep = estimate_attractor(seeds, cfg, t_transient=20.0, t_sample=0.2,
                             n_snapshots=2)
    for s in rep["cloud"]:
        assert fl.h_norm(s) < 1e-6
    assert rep["post_transient_max_h2"] < 1e-12


def test_distance_decay_to_zero_cloud():
    cfg = SimConfig(d=2, K=6, mu=1.0, alpha=0.5, beta=3.0, n_cut=math.inf,
                    dt=0.02, t_end=1.0)
    cloud = [fl.SpectralField.zeros(2, 6)]
    b_set = seed_set(cfg, 2, seed=7, h_norm_target=1.0)
    series = distance_decay(b_set, cloud, cfg, t_grid=[0.0, 1.0, 2.0, 4.0])
    assert series["n_blown"] == 0
    assert np.array_equal(series["t"], [0.0, 1.0, 2.0, 4.0])
    dh = series["dist_h"]
    assert np.all(np.diff(dh) < 0.0)
    # decay rate at least e^(-mu t) once the nonlinearity stops helping
    assert dh[-1] <= dh[0] * math.exp(-0.9 * 4.0)
    assert np.all(series["dist_v"][1:] < series["dist_v"][0])
    rows = list(decay_csv_rows(series))
    assert len(rows) == 4 and all(len(r) == len(ATTRACTOR_CSV_HEADER) for r in rows)


def test_distance_decay_validation(cfg):
    with pytest.raises(ParameterError):
        distance_decay([fl.SpectralField.zeros(2, 6)], [], cfg, [0.0, 1.0])
    with pytest.raises(ParameterError):
        distance_decay([fl.SpectralField.zeros(2, 6)],
                       [fl.SpectralField.zeros(2, 6)], cfg, [0.015])


@pytest.fixture(scope="module")
def traj(cfg):
    u0 = fl.random_solenoidal(2, 6, seed=5, h_norm_target=1.5)
    return simulate(u0, cfg.with_(t_end=2.0, snapshot_stride=10))


class TestRegularity:
    def test_probe_reports_finite_sups(self, traj, cfg):
        rep = regularity_probe(traj, 0.5)
        assert rep["finite"]
        assert rep["n_window"] == 16
        for key in ("sup_v_norm_sq", "sup_au", "sup_ut", "sup_lbeta"):
            assert rep[key] > 0.0

    def test_sweep_monotone_in_r(self, traj):
        rows = regularity_sweep(traj, [0.1, 0.5, 1.0, 1.5])
        assert [r["r"] for r in rows] == [0.1, 0.5, 1.0, 1.5]
        for key in ("sup_v_norm_sq", "sup_au", "sup_ut", "sup_lbeta"):
            vals = [r[key] for r in rows]
            assert all(a >= b for a, b in zip(vals, vals[1:])), key
        out = list(regularity_csv_rows(rows))
        assert all(len(r) == len(REGULARITY_CSV_HEADER) for r in out)

    def test_ball_constraint(self, traj):
        with pytest.raises(ParameterError):
            regularity_probe(traj, 0.5, R=0.1)
        rep = regularity_probe(traj, 0.5, R=100.0)
        assert rep["finite"]

    def test_validation(self, traj):
        with pytest.raises(ParameterError):
            regularity_probe(traj, 0.0)
        with pytest.raises(ParameterError):
            regularity_probe(traj, 5.0)  # window starts past the last snapshot
        bare = simulate(fl.SpectralField.zeros(2, 6), traj.cfg)
        bare.cfg = None
        with pytest.raises(ParameterError):
            regularity_probe(bare, 0.5)
