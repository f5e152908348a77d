"""Report figures rendered headlessly next to the CSV outputs."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def ledger_figure(ledger, path):
    """Norm history on top, energy functionals V and J below."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax0.plot(ledger.t, ledger.h2, label="|u|^2")
    ax0.plot(ledger.t, ledger.v2, label="||u||^2")
    ax0.set_ylabel("squared norms")
    ax0.legend(loc="best", fontsize=8)
    ax1.plot(ledger.t, ledger.V, label="V(t)")
    ax1.plot(ledger.t, ledger.J, label="J(t)")
    ax1.set_xlabel("t")
    ax1.set_ylabel("energy functionals")
    ax1.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def stability_figure(rows, path):
    """Ratio against perturbation size, one marker family per kind."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    markers = {"eps": "o", "delta": "s", "eta": "^", "mixed": "x"}
    for kind, mark in markers.items():
        mags, ratios = [], []
        for r in rows:
            if r["kind"] != kind or not math.isfinite(r["ratio"]):
                continue
            mags.append(max(r["eps"], r["delta"], r["eta"]))
            ratios.append(r["ratio"])
        if mags:
            ax.loglog(mags, ratios, mark, label=kind)
    ax.set_xlabel("perturbation size")
    ax.set_ylabel("sup |w|^2 / denominator")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def kneser_figure(result, path):
    """Endpoint norm over rho with the neighbour gaps beneath."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.5, 6), sharex=True)
    ax0.plot(result["rhos"], result["endpoint_h"], ".-", markersize=3)
    ax0.set_ylabel("|endpoint|")
    gaps = np.asarray(result["gap_prev"])
    ax1.semilogy(result["rhos"][1:], np.maximum(gaps[1:], 1e-300), ".-", markersize=3)
    ax1.set_xlabel("rho")
    ax1.set_ylabel("gap to previous")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def decay_figure(series, path):
    """Semidistance decay of the evolved set to the cloud."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    floor = 1e-300
    ax.semilogy(series["t"], np.maximum(series["dist_h"], floor), "o-", label="dist_H")
    ax.semilogy(series["t"], np.maximum(series["dist_v"], floor), "s-", label="dist_V")
    ax.set_xlabel("t")
    ax.set_ylabel("semidistance to cloud")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
