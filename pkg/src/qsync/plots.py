"""Figure rendering for the CLI report path.

Each exported CSV gets a companion PNG next to it: mode displacements with
the synchronisation measure, sweep summaries, and correlation dynamics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def trajectory_figure(traj, series, path, title: str = "") -> None:
    """Two panels: mode displacements <X_i>(t) and the windowed Pearson C(t)."""
    fig, (ax_x, ax_c) = plt.subplots(2, 1, sharex=True, figsize=(7, 5.5))
    ax_x.plot(traj.times, traj.observable("X1"), label=r"$\langle X_1\rangle$", lw=0.8)
    ax_x.plot(traj.times, traj.observable("X2"), label=r"$\langle X_2\rangle$", lw=0.8)
    ax_x.set_ylabel("mode displacement")
    ax_x.legend(loc="upper right", fontsize=9)
    if title:
        ax_x.set_title(title)
    ax_c.plot(series.times, series.values, color="C3", lw=1.0)
    ax_c.set_ylim(-1.05, 1.05)
    ax_c.axhline(0.0, color="0.8", lw=0.5)
    ax_c.set_xlabel("time (ps)")
    ax_c.set_ylabel(r"$C_{\langle X_1\rangle\langle X_2\rangle}$")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def sweep_figure(rows, regression, path) -> None:
    """C* against detuning, plus normalised long-time discord against C*."""
    sync_rows = [r for r in rows if r.error is None and r.synchronised]
    has_corr = any(r.d_long is not None for r in sync_rows)
    ncols = 2 if has_corr and regression else 1
    fig, axes = plt.subplots(1, ncols, figsize=(4.2 * ncols + 1, 3.6), squeeze=False)
    ax = axes[0][0]
    ax.plot([r.delta_omega for r in sync_rows], [r.c_stable for r in sync_rows],
            "o-", color="C0")
    for r in rows:
        if r.error is None and not r.synchronised:
            ax.axvline(r.delta_omega, color="0.85", lw=4, zorder=0)
    ax.set_xlabel(r"detuning $\Delta\omega$")
    ax.set_ylabel(r"stable $C^*$")
    if ncols == 2:
        ax2 = axes[0][1]
        cs = [r.c_stable for r in sync_rows]
        dn = regression["d_normalised"]
        ax2.plot(cs, dn, "s", color="C1")
        xs = np.linspace(min(cs), max(cs), 20)
        ax2.plot(xs, regression["slope"] * xs + regression["intercept"], "--",
                 color="0.4",
                 label=f"r = {regression['pearson_r']:.3f}")
        ax2.set_xlabel(r"stable $C^*$")
        ax2.set_ylabel("normalised long-time discord")
        ax2.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def correlation_figure(series, path, title: str = "") -> None:
    """Mutual information, classical correlation and discord over time."""
    fig, ax = plt.subplots(figsize=(6.5, 3.8))
    ax.plot(series.times, [t.mutual_information for t in series.triples],
            label="mutual information", color="0.3")
    ax.plot(series.times, [t.classical for t in series.triples],
            label="classical", color="C0")
    ax.plot(series.times, [t.discord for t in series.triples],
            label="discord", color="C3")
    ax.set_xlabel("time (ps)")
    ax.set_ylabel("correlation (nats)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
