"""End-to-end CLI behaviour through main(argv): exit codes, files, reports."""

import json

import pytest

from bfns import io as bio
from bfns.cli import main


def write_config(path, **overrides):
    doc = {
        "physics": {"mu": 0.3, "alpha": 0.5, "beta": 3.0, "n_cut": 1.5},
        "discretization": {"d": 2, "k_modes": 4, "dt": 0.01, "t_end": 0.2},
        "forcing": {"kind": "modes", "modes": [
            {"k": [1, 0], "component": 1, "re": 0.4},
        ]},
        "initial": {"kind": "random", "seed": 3, "h_norm": 1.5},
    }
    for key, val in overrides.items():
        if val is None:
            doc.pop(key, None)
        elif isinstance(val, dict) and key in doc:
            doc[key].update(val)
        else:
            doc[key] = val
    path.write_text(json.dumps(doc))
    return doc


@pytest.fixture()
def cfg_path(tmp_path):
    p = tmp_path / "run.json"
    write_config(p)
    return p


def test_simulate_writes_trajectory(tmp_path, cfg_path, capsys):
    out = tmp_path / "run.traj"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert "wrote 21 snapshots" in capsys.readouterr().out
    traj = bio.read_trajectory(out)
    assert len(traj.states) == 21
    assert traj.params["n_cut"] == 1.5


def test_simulate_blowup_keeps_partial(tmp_path, capsys):
    p = tmp_path / "fragile.json"
    write_config(p,
                 physics={"mu": 0.05, "alpha": 1.0, "beta": 4.0, "n_cut": "inf"},
                 discretization={"d": 2, "k_modes": 4, "dt": 0.5, "t_end": 5.0},
                 initial={"kind": "random", "seed": 2, "h_norm": 60.0})
    out = tmp_path / "fragile.traj"
    assert main(["simulate", "--config", str(p), "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "blow-up" in err
    assert not out.exists()
    partial = bio.read_trajectory(str(out) + ".partial")
    assert len(partial.states) >= 1


class TestEnergyAudit:
    def run_pair(self, tmp_path, cfg_path):
        t1 = tmp_path / "a.traj"
        t2 = tmp_path / "b.traj"
        assert main(["simulate", "--config", str(cfg_path), "--out", str(t1)]) == 0
        half = tmp_path / "half.json"
        write_config(half, discretization={"d": 2, "k_modes": 4, "dt": 0.005,
                                           "t_end": 0.2})
        assert main(["simulate", "--config", str(half), "--out", str(t2)]) == 0
        return t1, t2

    def test_equality_mode_with_ratio(self, tmp_path, cfg_path, capsys):
        t1, t2 = self.run_pair(tmp_path, cfg_path)
        csv = tmp_path / "ledger.csv"
        rc = main(["energy-audit", str(t1), "--config", str(cfg_path),
                   "--halved", str(t2), "--csv", str(csv), "--tolerance", "1e-3"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "mode: equality" in out
        assert "drift ratio" in out
        comment, header, rows = bio.read_csv(csv)
        assert json.loads(comment)["physics"]["mu"] == 0.3
        assert header[0] == "t" and len(rows) == 21
        assert (tmp_path / "ledger.png").read_bytes()[:4] == b"\x89PNG"

    def test_tolerance_failure_exits_two(self, tmp_path, cfg_path, capsys):
        t1, _ = self.run_pair(tmp_path, cfg_path)
        rc = main(["energy-audit", str(t1), "--config", str(cfg_path),
                   "--tolerance", "1e-18"])
        assert rc == 2
        assert "exceeds tolerance" in capsys.readouterr().err

    def test_inequality_mode(self, tmp_path, capsys):
        p = tmp_path / "uncut.json"
        write_config(p, physics={"mu": 0.3, "alpha": 0.5, "beta": 2.0,
                                 "n_cut": "inf"})
        t = tmp_path / "u.traj"
        assert main(["simulate", "--config", str(p), "--out", str(t)]) == 0
        rc = main(["energy-audit", str(t), "--config", str(p)])
        assert rc == 0
        assert "mode: inequality" in capsys.readouterr().out


def test_export_figures_toggle(tmp_path, cfg_path):
    t = tmp_path / "r.traj"
    main(["simulate", "--config", str(cfg_path), "--out", str(t)])
    out1 = tmp_path / "with_fig.csv"
    assert main(["export", str(t), "--config", str(cfg_path),
                 "--out", str(out1)]) == 0
    assert (tmp_path / "with_fig.png").exists()
    out2 = tmp_path / "plain.csv"
    assert main(["export", str(t), "--config", str(cfg_path),
                 "--out", str(out2), "--no-figures"]) == 0
    assert not (tmp_path / "plain.png").exists()
    # the ledger itself is identical either way
    assert out1.read_bytes() == out2.read_bytes()


def test_stability_sweep_and_jobs_invariance(tmp_path, cfg_path, capsys):
    write_config(cfg_path, stability={"eps_grid": [1e-4, 1e-3],
                                      "delta_grid": [1e-2],
                                      "eta_grid": [1e-3]})
    out1 = tmp_path / "s1.csv"
    out2 = tmp_path / "s2.csv"
    assert main(["stability-sweep", "--config", str(cfg_path),
                 "--out", str(out1)]) == 0
    assert "max ratio" in capsys.readouterr().out
    assert main(["stability-sweep", "--config", str(cfg_path),
                 "--out", str(out2), "--jobs", "2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "s1.png").exists()
    _, header, rows = bio.read_csv(out1)
    assert header[0] == "kind"
    assert [r[0] for r in rows] == ["eps", "eps", "delta", "eta", "mixed"]


def test_kneser_sweep(tmp_path, cfg_path, capsys):
    write_config(cfg_path, kneser={"levels": 2, "base_cells": 2})
    out = tmp_path / "k.csv"
    assert main(["kneser-sweep", "--config", str(cfg_path),
                 "--out", str(out)]) == 0
    assert "refinement ratios" in capsys.readouterr().out
    _, header, rows = bio.read_csv(out)
    assert header == ["rho", "n_cut", "branch", "endpoint_h", "gap_prev"]
    assert len(rows) == 9
    assert (tmp_path / "k.png").exists()


def test_attractor_report(tmp_path, cfg_path, capsys):
    write_config(cfg_path, attractor={"n_seeds": 2, "seed": 5,
                                      "t_transient": 0.1, "t_sample": 0.05,
                                      "n_snapshots": 2, "probe_count": 2,
                                      "t_grid": [0.0, 0.1, 0.2]})
    out = tmp_path / "a.csv"
    assert main(["attractor", "--config", str(cfg_path),
                 "--out", str(out)]) == 0
    output = capsys.readouterr().out
    assert "cloud of 4 states" in output
    assert "dist_H" in output
    _, header, rows = bio.read_csv(out)
    assert header == ["t", "dist_h", "dist_v"]
    assert len(rows) == 3


def test_attractor_needs_sample_spacing(tmp_path, cfg_path, capsys):
    write_config(cfg_path, attractor={"n_seeds": 1, "t_transient": 0.1,
                                      "n_snapshots": 2, "t_grid": [0.0]})
    rc = main(["attractor", "--config", str(cfg_path),
               "--out", str(tmp_path / "x.csv")])
    assert rc == 1
    assert "t_sample" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        capsys.readouterr()

    def test_missing_required_option(self, capsys):
        assert main(["simulate", "--config", "x.json"]) == 1
        capsys.readouterr()

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["simulate", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "o.traj")])
        assert rc == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_config_schema_violation(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        write_config(p, physics={"mu": 0.3, "alpha": 0.5, "beta": 3.0,
                                 "n_cut": 1.5, "typo_key": 1})
        rc = main(["simulate", "--config", str(p),
                   "--out", str(tmp_path / "o.traj")])
        assert rc == 1
        assert "config invalid" in capsys.readouterr().err

    def test_missing_trajectory(self, tmp_path, capsys):
        assert main(["energy-audit", str(tmp_path / "none.traj")]) == 1
        capsys.readouterr()

    def test_corrupt_trajectory(self, tmp_path, cfg_path, capsys):
        t = tmp_path / "c.traj"
        main(["simulate", "--config", str(cfg_path), "--out", str(t)])
        t.write_bytes(t.read_bytes()[:-7])
        assert main(["energy-audit", str(t)]) == 1
        capsys.readouterr()

    def test_sweep_without_block(self, tmp_path, cfg_path, capsys):
        rc = main(["stability-sweep", "--config", str(cfg_path),
                   "--out", str(tmp_path / "s.csv")])
        assert rc == 1
        assert "no stability block" in capsys.readouterr().err
