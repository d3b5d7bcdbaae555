import math

import numpy as np
import pytest

from qsync import sync
from qsync.dynamics import Trajectory
from qsync.errors import DegenerateSignalError


def make_traj(times, **series):
    return Trajectory(times=times, observables=series)


def sin_pair(a=200.0, phi=0.0, t_end=1.0, dt=0.002, ratio=1.0):
    t = np.arange(0.0, t_end + dt / 2, dt)
    return t, np.sin(a * t), np.sin(ratio * a * t + phi)


def test_identical_signals_fully_correlated():
    t, f1, _ = sin_pair()
    assert sync.pearson_window(t, f1, f1, 0.1, 2 * math.pi / 200.0) == pytest.approx(1.0, abs=1e-9)


def test_negated_signal_anticorrelated():
    t, f1, _ = sin_pair()
    val = sync.pearson_window(t, f1, -f1, 0.1, 2 * math.pi / 200.0)
    assert val == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("phi", [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi])
def test_sinusoid_phase_oracle(phi):
    a = 209.0  # comparable to the reference mode's angular frequency in rad/ps
    t, f1, f2 = sin_pair(a=a, phi=phi)
    got = sync.pearson_window(t, f1, f2, 0.3, 2 * math.pi / a)
    assert got == pytest.approx(math.cos(phi), abs=2e-3)


def test_affine_invariance_and_symmetry():
    a = 150.0
    t, f1, f2 = sin_pair(a=a, phi=0.9)
    w = 2 * math.pi / a
    base = sync.pearson_window(t, f1, f2, 0.2, w)
    assert sync.pearson_window(t, 3.7 * f1 + 2.0, f2, 0.2, w) == pytest.approx(base, abs=1e-9)
    assert sync.pearson_window(t, f1, 0.2 * f2 - 5.0, 0.2, w) == pytest.approx(base, abs=1e-9)
    assert sync.pearson_window(t, f2, f1, 0.2, w) == pytest.approx(base, abs=1e-9)


def test_sign_antisymmetry_under_negation():
    a = 150.0
    t, f1, f2 = sin_pair(a=a, phi=0.4)
    w = 2 * math.pi / a
    plus = sync.pearson_window(t, f1, f2 + 0.3, 0.2, w)
    minus = sync.pearson_window(t, f1, -f2 + 0.3, 0.2, w)
    assert minus == pytest.approx(-plus, abs=1e-9)


def test_window_bounds_checked():
    t, f1, f2 = sin_pair()
    with pytest.raises(ValueError):
        sync.pearson_window(t, f1, f2, 0.99, 0.05)
    with pytest.raises(ValueError):
        sync.pearson_window(t, f1, f2, -0.5, 0.05)


def test_minimum_samples_per_window():
    t, f1, f2 = sin_pair(dt=0.01)
    with pytest.raises(ValueError):
        sync.pearson_window(t, f1, f2, 0.1, 0.05)  # only 5 samples


def test_degenerate_signal_raises():
    t = np.linspace(0.0, 1.0, 501)
    flat = np.ones_like(t)
    wave = np.sin(100 * t)
    with pytest.raises(DegenerateSignalError):
        sync.pearson_window(t, flat, wave, 0.1, 0.2)


def test_series_constant_for_locked_sinusoids():
    a = 209.0
    t, f1, f2 = sin_pair(a=a, phi=0.7, t_end=0.8)
    traj = make_traj(t, X1=f1, X2=f2)
    series = sync.sync_series(traj, window=2 * math.pi / a)
    assert series.values.max() - series.values.min() < 5e-3
    assert np.allclose(series.values.mean(), math.cos(0.7), atol=2e-3)
    assert series.times[-1] <= t[-1] - series.window + 1e-12


def test_series_oscillates_for_detuned_sinusoids():
    a = 209.0
    t, f1, f2 = sin_pair(a=a, t_end=3.0, ratio=1.1)
    traj = make_traj(t, X1=f1, X2=f2)
    series = sync.sync_series(traj, window=2 * math.pi / a)
    assert series.values.max() - series.values.min() > 1.0
    result = sync.plateau(series)
    assert not result.synchronised
    assert result.c_stable is None


def test_series_oscillation_rate_grows_with_detuning():
    a = 209.0
    crossings = []
    for ratio in (1.05, 1.1, 1.2):
        t, f1, f2 = sin_pair(a=a, t_end=3.0, ratio=ratio)
        series = sync.sync_series(make_traj(t, X1=f1, X2=f2), window=2 * math.pi / a)
        centered = series.values - series.values.mean()
        crossings.append(int(np.sum(np.diff(np.sign(centered)) != 0)))
    assert crossings[0] < crossings[1] < crossings[2]


def test_series_marks_degenerate_windows_as_gaps():
    a = 209.0
    dt = 0.002
    t = np.arange(0.0, 1.0 + dt / 2, dt)
    f1 = np.sin(a * t)
    f1[t > 0.6] = 0.0  # signal dies
    f2 = np.sin(a * t + 0.3)
    series = sync.sync_series(make_traj(t, X1=f1, X2=f2), window=2 * math.pi / a)
    assert np.isnan(series.values[-1])
    assert np.isfinite(series.values[0])


def test_sync_series_requires_enough_resolution():
    t = np.linspace(0.0, 1.0, 21)
    traj = make_traj(t, X1=np.sin(30 * t), X2=np.cos(30 * t))
    with pytest.raises(ValueError):
        sync.sync_series(traj, window=0.2)


def test_plateau_constant_series():
    times = np.linspace(0.0, 10.0, 401)
    series = sync.SyncSeries(times=times, values=np.full(401, 0.7), window=0.03)
    result = sync.plateau(series)
    assert result.synchronised
    assert result.c_stable == pytest.approx(0.7)
    assert result.onset == pytest.approx(0.0)


def test_plateau_oscillating_series():
    times = np.linspace(0.0, 10.0, 801)
    series = sync.SyncSeries(times=times, values=np.cos(5 * times), window=0.03)
    result = sync.plateau(series)
    assert not result.synchronised
    assert result.tail_range > 1.5


def test_plateau_onset_detection():
    times = np.linspace(0.0, 10.0, 1001)
    values = np.where(times < 2.0, np.cos(8 * times), 0.4)
    series = sync.SyncSeries(times=times, values=values, window=0.03)
    result = sync.plateau(series)
    assert result.synchronised
    assert result.c_stable == pytest.approx(0.4, abs=1e-9)
    assert 1.8 <= result.onset <= 2.2


def test_plateau_stable_under_extension():
    # appending settled time must not flip the classification
    times = np.linspace(0.0, 10.0, 1001)
    values = np.where(times < 1.0, np.cos(9 * times), 0.55)
    base = sync.plateau(sync.SyncSeries(times=times, values=values, window=0.03))
    extra = np.linspace(10.01, 12.0, 200)
    longer = sync.plateau(sync.SyncSeries(
        times=np.concatenate([times, extra]),
        values=np.concatenate([values, np.full(200, 0.55)]), window=0.03))
    assert base.synchronised == longer.synchronised
    assert longer.c_stable == pytest.approx(base.c_stable, abs=1e-9)


def test_plateau_short_series_rejected():
    series = sync.SyncSeries(times=np.array([0.0, 0.1]), values=np.array([0.5, 0.5]),
                             window=0.03)
    with pytest.raises(ValueError):
        sync.plateau(series)


def test_sync_series_value_bound_enforced():
    with pytest.raises(ValueError):
        sync.SyncSeries(times=np.array([0.0]), values=np.array([1.5]), window=0.1)


def test_detuning_sweep_validates_inputs():
    from qsync.models import DimerParams
    with pytest.raises(ValueError):
        sync.detuning_sweep(DimerParams(), [])
    with pytest.raises(ValueError):
        sync.detuning_sweep(DimerParams(), [0.9])


def test_detuning_sweep_records_row_failures():
    from qsync.models import DimerParams
    # an impossible trajectory setting fails the row but not the sweep
    settings = sync.SweepSettings(t_end=0.01, dt_out=0.002)
    rows = sync.detuning_sweep(DimerParams(levels=2), [1.0], settings)
    assert rows[0].error is not None
    assert rows[0].synchronised is None


def test_write_sweep_csv(tmp_path):
    rows = [sync.SweepRow(delta_omega=1.0, synchronised=True, c_stable=0.99,
                          onset=1.2, i_long=0.5, j_long=0.2, d_long=0.3),
            sync.SweepRow(delta_omega=1.4, error="IntegrationError: boom")]
    path = tmp_path / "sweep.csv"
    sync.write_sweep_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "delta_omega,synchronised,C_stable,onset_ps,I_long,J_long,D_long"
    assert lines[1].startswith("1,true,0.99")
    assert lines[2].startswith("1.4,error")
