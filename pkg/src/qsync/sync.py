"""Windowed-Pearson synchronisation measure, plateau detection, detuning sweeps.

The measure correlates two observable series over a sliding window of one
oscillation period of mode 1; for locked sinusoids it returns cos(phase lag),
so a flat tail ("plateau") at value C* reads off the synchronisation phase.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dynamics
from .errors import DegenerateSignalError
from .models import DimerParams, MilitelloParams
from .units import RAD_PER_PS_PER_WAVENUMBER

#: RMS window fluctuation below which a signal counts as constant
DEGENERATE_RMS_TOL = 1e-9


@dataclass(frozen=True)
class SyncSeries:
    """Pearson synchronisation values C(t); NaN marks degenerate-window gaps."""

    times: np.ndarray
    values: np.ndarray
    window: float

    def __post_init__(self):
        finite = self.values[np.isfinite(self.values)]
        if finite.size and np.abs(finite).max() > 1.0 + 1e-9:
            raise ValueError("correlation values must lie in [-1, 1]")


@dataclass(frozen=True)
class PlateauResult:
    """Tail-flatness classification of a synchronisation series."""

    synchronised: bool
    c_stable: float | None
    onset: float | None
    tail_std: float
    tail_slope: float
    tail_range: float

    def __post_init__(self):
        if self.synchronised and self.c_stable is None:
            raise ValueError("synchronised result requires a stable value")
        if not self.synchronised and self.c_stable is not None:
            raise ValueError("stable value only defined when synchronised")


def _window_samples(times: np.ndarray, values: np.ndarray, a: float, b: float):
    """Samples of a uniformly gridded signal on [a, b], interpolating the edges."""
    i0 = int(np.searchsorted(times, a, side="right"))
    i1 = int(np.searchsorted(times, b, side="left"))
    ts = [a]
    vs = [float(np.interp(a, times, values))]
    if i1 > i0:
        ts.extend(times[i0:i1])
        vs.extend(values[i0:i1])
    if b > ts[-1]:
        ts.append(b)
        vs.append(float(np.interp(b, times, values)))
    return np.asarray(ts), np.asarray(vs)


def pearson_window(times: np.ndarray, f1: np.ndarray, f2: np.ndarray,
                   t: float, window: float, *,
                   degenerate_tol: float = DEGENERATE_RMS_TOL) -> float:
    """Windowed Pearson correlation of two sampled signals over [t, t+window].

    Integrals use the trapezoid rule on the sample grid with linear
    interpolation at the window edges; each signal has its window mean
    subtracted first.  Raises :class:`DegenerateSignalError` when either
    signal's RMS fluctuation inside the window falls below ``degenerate_tol``.
    """
    times = np.asarray(times, dtype=float)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if window <= 0:
        raise ValueError("window must be positive")
    eps = 1e-9 * window
    if t < times[0] - eps or t + window > times[-1] + eps:
        raise ValueError(
            f"window [{t:.6g}, {t + window:.6g}] outside sampled range "
            f"[{times[0]:.6g}, {times[-1]:.6g}]")
    n_inside = int(np.searchsorted(times, t + window, "right")
                   - np.searchsorted(times, t, "left"))
    if n_inside < 8:
        raise ValueError(f"only {n_inside} samples in window; need at least 8")

    ts, v1 = _window_samples(times, f1, t, min(t + window, times[-1]))
    _, v2 = _window_samples(times, f2, t, min(t + window, times[-1]))
    span = ts[-1] - ts[0]
    mean1 = np.trapezoid(v1, ts) / span
    mean2 = np.trapezoid(v2, ts) / span
    d1 = v1 - mean1
    d2 = v2 - mean2
    var1 = np.trapezoid(d1 * d1, ts)
    var2 = np.trapezoid(d2 * d2, ts)
    if math.sqrt(max(var1, 0.0) / span) < degenerate_tol \
            or math.sqrt(max(var2, 0.0) / span) < degenerate_tol:
        raise DegenerateSignalError("window contains a constant signal")
    value = np.trapezoid(d1 * d2, ts) / math.sqrt(var1 * var2)
    return float(np.clip(value, -1.0, 1.0))


def sync_series(traj: dynamics.Trajectory, obs1: str = "X1", obs2: str = "X2",
                omega1: float | None = None, *,
                time_scale: float = RAD_PER_PS_PER_WAVENUMBER,
                window: float | None = None, min_samples: int = 8,
                degenerate_tol: float = DEGENERATE_RMS_TOL) -> SyncSeries:
    """Sliding-window Pearson series with window = one period of mode 1.

    The window is 2*pi/(time_scale*omega1) in trajectory time units
    (~0.03003 ps for an 1111 cm^-1 mode) and stays fixed when mode 2 is
    detuned.  Degenerate windows yield NaN gaps rather than values.
    """
    if window is None:
        if omega1 is None:
            raise ValueError("pass omega1 or an explicit window")
        window = 2.0 * math.pi / (time_scale * omega1)
    times = traj.times
    f1 = traj.observable(obs1)
    f2 = traj.observable(obs2)
    dt = times[1] - times[0]
    if window / dt < min_samples:
        raise ValueError(f"window of {window / dt:.1f} samples; need >= {min_samples}")
    last = times[-1] - window
    starts = times[times <= last + 1e-9 * window]
    if starts.size == 0:
        raise ValueError("trajectory shorter than one correlation window")
    values = np.empty(starts.size)
    for i, t in enumerate(starts):
        try:
            values[i] = pearson_window(times, f1, f2, t, window,
                                       degenerate_tol=degenerate_tol)
        except DegenerateSignalError:
            values[i] = np.nan
    return SyncSeries(times=starts, values=values, window=window)


def plateau(series: SyncSeries, tail_fraction: float = 0.3,
            slope_tol: float = 0.01, std_tol: float = 0.01) -> PlateauResult:
    """Classify the trailing fraction of a synchronisation series.

    Synchronised iff the tail is flat: standard deviation below ``std_tol``
    and absolute linear-fit slope below ``slope_tol`` (per time unit).  The
    stable value is the tail mean; the onset is the start of the trailing
    stretch staying within max(2*tail std, std_tol) of it.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    times, values = series.times, series.values
    if times.size == 0:
        raise ValueError("empty synchronisation series")
    t_cut = times[-1] - tail_fraction * (times[-1] - times[0])
    tail = times >= t_cut
    if tail.sum() < 3:
        raise ValueError("series too short for the requested tail window")
    tt, vv = times[tail], values[tail]
    good = np.isfinite(vv)
    if good.sum() < max(3, 0.5 * vv.size):
        return PlateauResult(False, None, None,
                             tail_std=float("nan"), tail_slope=float("nan"),
                             tail_range=float("nan"))
    tt, vv = tt[good], vv[good]
    std = float(vv.std())
    slope = float(np.polyfit(tt, vv, 1)[0])
    rng = float(vv.max() - vv.min())
    if std < std_tol and abs(slope) < slope_tol:
        c_star = float(vv.mean())
        band = max(2.0 * std, std_tol)
        inside = np.abs(values - c_star) <= band
        onset_idx = 0
        for i in range(values.size - 1, -1, -1):
            if np.isfinite(values[i]) and not inside[i]:
                onset_idx = i + 1
                break
        onset = float(times[min(onset_idx, times.size - 1)])
        return PlateauResult(True, c_star, onset, std, slope, rng)
    return PlateauResult(False, None, None, std, slope, rng)


@dataclass(frozen=True)
class SweepRow:
    """One detuning point of a synchronisation sweep."""

    delta_omega: float
    synchronised: bool | None = None
    c_stable: float | None = None
    onset: float | None = None
    tail_range: float | None = None
    i_long: float | None = None
    j_long: float | None = None
    d_long: float | None = None
    converged: bool | None = None
    error: str | None = None


@dataclass(frozen=True)
class SweepSettings:
    """Trajectory, window and plateau parameters shared by sweep rows."""

    t_end: float = 10.0
    dt_out: float = 0.002
    rtol: float = 1e-8
    atol: float = 1e-10
    state_stride: int = 64
    tail_fraction: float = 0.3
    std_tol: float = 0.01
    slope_tol: float = 0.01
    tail_points: int = 5
    alpha: complex = 1.0  # coherent seed for the two-level/two-mode model
    fix_coupling: str = "huang_rhys"


def _long_time_correlations(traj, sampler, tail_fraction, tail_points, point_key):
    """Mean mode-mode correlation triple over stored tail states."""
    from . import correlations  # runtime import keeps module layering flat

    idx = np.asarray(traj.state_indices)
    t_cut = traj.times[-1] - tail_fraction * (traj.times[-1] - traj.times[0])
    tail_positions = [k for k, i in enumerate(idx) if traj.times[i] >= t_cut]
    if len(tail_positions) > tail_points:
        sel = np.linspace(0, len(tail_positions) - 1, tail_points).round().astype(int)
        tail_positions = [tail_positions[s] for s in sel]
    triples = []
    for n, pos in enumerate(tail_positions):
        rho_modes = traj.states[pos]
        triples.append(correlations.discord(
            hilbert_modes(rho_modes), split=((0,), (1,)),
            sampler=sampler.with_key(*point_key, n)))
    i_mean = float(np.mean([t.mutual_information for t in triples]))
    j_mean = float(np.mean([t.classical for t in triples]))
    d_mean = float(np.mean([t.discord for t in triples]))
    conv = all(t.converged for t in triples)
    return i_mean, j_mean, d_mean, conv


def hilbert_modes(rho):
    """Reduced mode-mode state of a (electronic, mode, mode) density matrix."""
    from . import hilbert

    return hilbert.partial_trace(rho, keep=(1, 2))


def run_scenario(params: DimerParams | MilitelloParams, settings: SweepSettings,
                 *, store_states: bool = False):
    """Evolve one parameter set and classify its synchronisation series."""
    if isinstance(params, DimerParams):
        system = dynamics.dimer_system(params)
    elif isinstance(params, MilitelloParams):
        system = dynamics.militello_system(params, alpha=settings.alpha)
    else:
        raise TypeError(f"unsupported parameter type {type(params).__name__}")
    traj = dynamics.evolve(
        system.initial_state, system.hamiltonian, system.channels,
        t_end=settings.t_end, dt_out=settings.dt_out,
        rtol=settings.rtol, atol=settings.atol,
        observables=system.observables, time_scale=system.time_scale,
        store_states=store_states, state_stride=settings.state_stride)
    series = sync_series(traj, omega1=system.omega1, time_scale=system.time_scale)
    result = plateau(series, tail_fraction=settings.tail_fraction,
                     slope_tol=settings.slope_tol, std_tol=settings.std_tol)
    return traj, series, result


def detuning_sweep(params: DimerParams | MilitelloParams, detunings: Sequence[float],
                   settings: SweepSettings = SweepSettings(),
                   *, with_correlations: bool = False, sampler=None) -> list[SweepRow]:
    """Independent synchronisation runs over a list of detunings delta_omega >= 1.

    Per-row failures are recorded in the row's ``error`` field and the sweep
    continues.  With ``with_correlations`` each row also carries the mean
    long-time mode-mode mutual information, classical correlation and discord.
    """
    detunings = [float(d) for d in detunings]
    if not detunings:
        raise ValueError("detuning list must be nonempty")
    if any(d < 1.0 for d in detunings):
        raise ValueError("detunings must be >= 1.0")
    if with_correlations and sampler is None:
        from .correlations import MeasurementSampler
        sampler = MeasurementSampler()

    rows: list[SweepRow] = []
    for k, dw in enumerate(detunings):
        try:
            if isinstance(params, DimerParams):
                p = params.detuned(dw, fix=settings.fix_coupling)
            else:
                p = params.detuned(dw)
            traj, series, result = run_scenario(p, settings,
                                                store_states=with_correlations)
            extra = {}
            if with_correlations:
                i_l, j_l, d_l, conv = _long_time_correlations(
                    traj, sampler, settings.tail_fraction, settings.tail_points, (k,))
                extra = dict(i_long=i_l, j_long=j_l, d_long=d_l, converged=conv)
            rows.append(SweepRow(delta_omega=dw, synchronised=result.synchronised,
                                 c_stable=result.c_stable, onset=result.onset,
                                 tail_range=result.tail_range, **extra))
        except Exception as exc:  # per-row isolation is part of the contract
            rows.append(SweepRow(delta_omega=dw, error=f"{type(exc).__name__}: {exc}"))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    """Sweep table: delta_omega, synchronised, C_stable, onset_ps, I/J/D long."""

    def fmt(x):
        if x is None:
            return ""
        if isinstance(x, bool):
            return "true" if x else "false"
        return f"{x:.12g}"

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_omega", "synchronised", "C_stable", "onset_ps",
                         "I_long", "J_long", "D_long"])
        for row in rows:
            sync_field = "error" if row.error else fmt(row.synchronised)
            writer.writerow([fmt(row.delta_omega), sync_field, fmt(row.c_stable),
                             fmt(row.onset), fmt(row.i_long), fmt(row.j_long),
                             fmt(row.d_long)])
