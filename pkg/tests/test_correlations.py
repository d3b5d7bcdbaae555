import math

import numpy as np
import pytest

from qsync import correlations as qc
from qsync import hilbert
from qsync.hilbert import DensityMatrix, SpaceLayout


def bell_state():
    v = np.zeros(4)
    v[0] = v[3] = 2 ** -0.5
    return DensityMatrix(SpaceLayout.of((2, 2)), np.outer(v, v))


def classically_correlated():
    return DensityMatrix(SpaceLayout.of((2, 2)), np.diag([0.5, 0.0, 0.0, 0.5]))


def product_state(rng=None):
    rng = rng or np.random.default_rng(0)
    a = np.diag(rng.dirichlet(np.ones(2)))
    b = np.diag(rng.dirichlet(np.ones(3)))
    return DensityMatrix(SpaceLayout.of((2, 3)), np.kron(a, b))


def random_bipartite(rng, da, db, rank=None):
    d = da * db
    rank = rank or d
    mat = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = mat @ mat.conj().T
    rho /= np.trace(rho)
    return DensityMatrix(SpaceLayout.of((da, db)), rho)


FAST = qc.MeasurementSampler(seed=5, batch_size=24, max_batches=40)


def test_entropy_pure_state():
    assert qc.von_neumann_entropy(hilbert.fock_state(4, 2)) == pytest.approx(0.0, abs=1e-12)


def test_entropy_maximally_mixed():
    rho = DensityMatrix(SpaceLayout.of((5,)), np.eye(5) / 5)
    assert qc.von_neumann_entropy(rho) == pytest.approx(math.log(5), abs=1e-12)


def test_entropy_thermal_matches_direct_sum():
    omega, kbt, levels = 1111.0, 207.1, 9
    th = hilbert.thermal_state(omega, kbt, levels)
    p = np.diag(th.matrix).real
    expected = -np.sum(p[p > 0] * np.log(p[p > 0]))
    assert qc.von_neumann_entropy(th) == pytest.approx(expected, abs=1e-12)


def test_entropy_subadditive():
    rng = np.random.default_rng(1)
    for _ in range(5):
        rho = random_bipartite(rng, 2, 3)
        s_ab = qc.von_neumann_entropy(rho)
        s_a = qc.von_neumann_entropy(hilbert.partial_trace(rho, [0]))
        s_b = qc.von_neumann_entropy(hilbert.partial_trace(rho, [1]))
        assert s_ab <= s_a + s_b + 1e-9


def test_mutual_information_product_state():
    assert qc.mutual_information(product_state()) == pytest.approx(0.0, abs=1e-10)


def test_mutual_information_bell_state():
    assert qc.mutual_information(bell_state()) == pytest.approx(2 * math.log(2), abs=1e-10)


def test_mutual_information_classical_mixture():
    assert qc.mutual_information(classically_correlated()) == pytest.approx(
        math.log(2), abs=1e-12)


def test_classical_correlation_product_state():
    res = qc.classical_correlation(product_state(), sampler=FAST)
    assert res.value == pytest.approx(0.0, abs=1e-6)
    assert res.converged


def test_classical_correlation_classical_state():
    # computational-basis measurement is optimal and sits in the seeded candidates
    res = qc.classical_correlation(classically_correlated(), sampler=FAST)
    assert res.value == pytest.approx(math.log(2), abs=1e-3)


def test_classical_correlation_bell_state():
    res = qc.classical_correlation(bell_state(), sampler=FAST)
    assert res.value == pytest.approx(math.log(2), abs=1e-3)


def test_discord_triples():
    product = qc.discord(product_state(), sampler=FAST)
    assert product.mutual_information == pytest.approx(0.0, abs=1e-9)
    assert product.discord == pytest.approx(0.0, abs=1e-6)

    classical = qc.discord(classically_correlated(), sampler=FAST)
    assert classical.discord == pytest.approx(0.0, abs=2e-3)

    bell = qc.discord(bell_state(), sampler=FAST)
    assert bell.discord == pytest.approx(math.log(2), abs=2e-3)


def test_discord_measured_side_b():
    rng = np.random.default_rng(2)
    rho = random_bipartite(rng, 2, 2, rank=2)
    res_a = qc.discord(rho, sampler=FAST, measured_side="A")
    res_b = qc.discord(rho, sampler=FAST, measured_side="B")
    # both are valid triples; the two directions generally differ
    for res in (res_a, res_b):
        assert -1e-6 <= res.discord <= res.mutual_information + 1e-6


def test_classical_correlation_invariant_under_unmeasured_unitary():
    rng = np.random.default_rng(3)
    rho = random_bipartite(rng, 2, 3, rank=3)
    u = np.linalg.qr(rng.standard_normal((3, 3))
                     + 1j * rng.standard_normal((3, 3)))[0]
    lifted = np.kron(np.eye(2), u)
    rotated = DensityMatrix(rho.layout, lifted @ rho.matrix @ lifted.conj().T)
    j0 = qc.classical_correlation(rho, sampler=FAST).value
    j1 = qc.classical_correlation(rotated, sampler=FAST).value
    assert abs(j0 - j1) < 2e-3


def test_budget_monotonicity_exact():
    rng = np.random.default_rng(4)
    rho = random_bipartite(rng, 3, 3, rank=4)
    values = []
    for budget in (2, 5, 9):
        sampler = qc.MeasurementSampler(seed=11, batch_size=16,
                                        max_batches=budget, rel_tol=None)
        values.append(qc.classical_correlation(rho, sampler=sampler).value)
    assert values[0] <= values[1] <= values[2]


def test_sampler_determinism():
    rng = np.random.default_rng(5)
    rho = random_bipartite(rng, 3, 2, rank=3)
    s = qc.MeasurementSampler(seed=42, batch_size=8, max_batches=12)
    assert qc.classical_correlation(rho, sampler=s).value == \
        qc.classical_correlation(rho, sampler=s).value


def test_measured_dimension_guard():
    rho = DensityMatrix(SpaceLayout.of((18, 2)), np.eye(36) / 36)
    with pytest.raises(ValueError):
        qc.classical_correlation(rho, sampler=FAST)


def test_triple_invariants_on_random_states():
    rng = np.random.default_rng(6)
    for _ in range(4):
        rho = random_bipartite(rng, 2, 3)
        trip = qc.discord(rho, sampler=FAST)
        assert -1e-9 <= trip.classical <= trip.mutual_information + 1e-6
        assert 0.0 <= trip.discord <= trip.mutual_information + 1e-6


def test_occupancy_reduction_keeps_triple():
    # a state supported on few quanta per mode is unchanged by the projection
    rng = np.random.default_rng(7)
    small = random_bipartite(rng, 3, 3)
    embedded = np.zeros((36, 36), dtype=complex)
    idx = [6 * a + b for a in range(3) for b in range(3)]
    embedded[np.ix_(idx, idx)] = small.matrix
    rho = DensityMatrix(SpaceLayout.of((6, 6)), embedded)
    reduced = qc.reduce_mode_occupancy(rho, keep=3)
    assert reduced.layout.dims == (3, 3)
    t_full = qc.discord(rho, sampler=FAST)
    t_red = qc.discord(reduced, sampler=FAST)
    assert t_red.mutual_information == pytest.approx(t_full.mutual_information, abs=1e-9)
    # the projection is exact here; J differs only by search noise, which is
    # larger on the 6-dimensional side
    assert t_red.classical == pytest.approx(t_full.classical, abs=2e-2)


def test_correlation_dynamics_initial_product():
    from qsync import dynamics, models
    p = models.DimerParams(levels=3)
    system = dynamics.dimer_system(p)
    traj = dynamics.evolve(system.initial_state, system.hamiltonian, system.channels,
                           t_end=0.02, dt_out=0.01, observables=system.observables,
                           store_states=True, state_stride=1)
    series = qc.correlation_dynamics(traj, qc.MeasurementSampler(
        seed=9, batch_size=16, max_batches=20))
    first = series.triples[0]
    assert first.mutual_information == pytest.approx(0.0, abs=1e-6)
    assert first.classical == pytest.approx(0.0, abs=1e-6)
    assert first.discord == pytest.approx(0.0, abs=1e-6)
    assert series.times[0] == 0.0


def test_write_correlations_csv(tmp_path):
    series = qc.CorrelationSeries(
        times=np.array([0.0, 0.5]),
        triples=(qc.CorrelationTriple(0.5, 0.2, 0.3),
                 qc.CorrelationTriple(0.4, 0.3, 0.1, converged=False)))
    path = tmp_path / "corr.csv"
    qc.write_correlations_csv(series, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t_ps,I,J,D,converged"
    assert lines[1] == "0,0.5,0.2,0.3,true"
    assert lines[2].endswith("false")


def test_triple_validation():
    with pytest.raises(ValueError):
        qc.CorrelationTriple(0.1, 0.5, 0.0)
    with pytest.raises(ValueError):
        qc.CorrelationTriple(0.5, 0.2, -0.1)
