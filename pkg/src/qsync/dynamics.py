"""Lindblad master-equation evolution and trajectory diagnostics.

The master equation d rho/dt = -i[H, rho] + sum_k Gamma_k D[O_k] rho is
integrated directly on the density matrix with an adaptive high-order
Runge-Kutta scheme; the vectorised Liouvillian exists only for small
cross-validation systems.  H and the channel rates share one energy unit
(cm^-1 by default) and ``time_scale`` converts that unit to phase per output
time unit (rad/ps per cm^-1 by default, so trajectory times are picoseconds).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from . import hilbert, models
from .errors import IntegrationError
from .hilbert import DensityMatrix, Operator, SpaceLayout
from .models import DimerParams, LindbladChannel, MilitelloParams
from .units import RAD_PER_PS_PER_WAVENUMBER

LIOUVILLIAN_DIM_CAP = 64


@dataclass(frozen=True)
class Trajectory:
    """Uniform time grid with observable series and optionally stored states."""

    times: np.ndarray
    observables: Mapping[str, np.ndarray]
    states: tuple[DensityMatrix, ...] | None = None
    state_indices: np.ndarray | None = None

    def observable(self, name: str) -> np.ndarray:
        try:
            return self.observables[name]
        except KeyError:
            raise KeyError(f"no observable {name!r}; have {sorted(self.observables)}") from None

    @property
    def state_times(self) -> np.ndarray:
        if self.state_indices is None:
            raise ValueError("trajectory was run without stored states")
        return self.times[self.state_indices]

    def to_csv(self, path) -> None:
        """Write `t_ps` plus every observable column, 12 significant digits."""
        names = list(self.observables)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_ps"] + names)
            for i, t in enumerate(self.times):
                writer.writerow([f"{t:.12g}"] + [f"{self.observables[n][i]:.12g}" for n in names])


@dataclass(frozen=True)
class EigenDiagnostics:
    """Hamiltonian spectrum and mode-position matrix elements X_{i,kj} = <psi_k|X_i|psi_j>."""

    energies: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    eigenvectors: np.ndarray


def truncation_bulk_mask(eigenvectors: np.ndarray, layout: SpaceLayout,
                         tol: float = 1e-10) -> np.ndarray:
    """Eigenstates with weight below ``tol`` on either mode's top Fock level.

    Properties of the untruncated system (e.g. mode-exchange symmetry of the
    X matrix elements) only hold for these truncation-converged states.
    """
    dims = layout.dims
    if len(dims) != 3:
        raise ValueError("expected an (electronic, mode, mode) layout")
    weights = np.abs(eigenvectors.reshape(dims + (-1,))) ** 2
    top = weights[:, dims[1] - 1, :, :].sum(axis=(0, 1)) \
        + weights[:, :, dims[2] - 1, :].sum(axis=(0, 1))
    return top < tol


def _check_layouts(rho_dims, h: Operator, channels: Sequence[LindbladChannel]):
    for op in [h] + [ch.operator for ch in channels]:
        if op.layout.dims != rho_dims:
            raise ValueError(f"layout mismatch: state {rho_dims} vs operator {op.layout.dims}")


def lindblad_rhs(rho: Operator, h: Operator, channels: Sequence[LindbladChannel]) -> Operator:
    """Right-hand side of the master equation in energy-conjugate time units."""
    _check_layouts(rho.layout.dims, h, channels)
    r = rho.matrix
    out = -1j * (h.matrix @ r - r @ h.matrix)
    for ch in channels:
        if ch.rate == 0.0:
            continue
        l = ch.operator.matrix
        ldl = l.conj().T @ l
        out = out + ch.rate * (l @ r @ l.conj().T - 0.5 * (ldl @ r + r @ ldl))
    return Operator(rho.layout, out, copy=False)


def build_liouvillian(h: Operator, channels: Sequence[LindbladChannel],
                      max_dim: int = LIOUVILLIAN_DIM_CAP) -> np.ndarray:
    """Dense superoperator L with L @ rho.ravel() = lindblad_rhs(rho).ravel().

    Uses row-major vectorisation, vec(A rho B) = (A kron B^T) vec(rho).  The
    dimension cap keeps this a test tool; production evolution never builds it.
    """
    d = h.dim
    if d > max_dim:
        raise ValueError(f"dimension {d} exceeds Liouvillian cap {max_dim}")
    ident = np.eye(d)
    liou = -1j * (np.kron(h.matrix, ident) - np.kron(ident, h.matrix.T))
    for ch in channels:
        if ch.rate == 0.0:
            continue
        l = ch.operator.matrix
        if l.shape[0] != d:
            raise ValueError("channel dimension mismatch")
        ldl = l.conj().T @ l
        liou += ch.rate * (np.kron(l, l.conj())
                           - 0.5 * np.kron(ldl, ident)
                           - 0.5 * np.kron(ident, ldl.T))
    return liou


def _compile_rhs(h: Operator, channels: Sequence[LindbladChannel], time_scale: float):
    """Compiled fast path: one sparse superoperator-vector product per call.

    The generator is assembled once as a sparse matrix acting on row-major
    flattened states, K (x) I + I (x) conj(K) + sum_k Gamma_k L_k (x) conj(L_k)
    with the drift K = -iH - 1/2 sum Gamma_k L_k^dag L_k, all scaled by
    ``time_scale``.  At ~0.5 M nonzeros for the 162-dim dimer this is an order
    of magnitude faster per evaluation than chained 162x162 matrix products,
    while staying far from dense-superoperator memory cost.
    """
    d = h.dim
    h_sp = sp.csr_array(h.matrix)
    drift = (-1j * h_sp).astype(complex)
    sandwich = None
    for ch in channels:
        if ch.rate == 0.0:
            continue
        l = sp.csr_array(ch.operator.matrix)
        drift = drift - 0.5 * ch.rate * (l.conj().T @ l)
        term = ch.rate * sp.kron(l, l.conj(), format="csr")
        sandwich = term if sandwich is None else sandwich + term
    ident = sp.eye_array(d, format="csr")
    gen = sp.kron(drift, ident, format="csr") + sp.kron(ident, drift.conj(), format="csr")
    if sandwich is not None:
        gen = gen + sandwich
    gen = sp.csr_array(time_scale * gen)

    def rhs(t, y):
        return gen @ y

    return rhs


def evolve(rho0: DensityMatrix, h: Operator, channels: Sequence[LindbladChannel],
           t_end: float, dt_out: float = 0.002, rtol: float = 1e-8, atol: float = 1e-10,
           *, observables: Mapping[str, Operator] | None = None,
           time_scale: float = RAD_PER_PS_PER_WAVENUMBER,
           store_states: bool = False, state_stride: int = 64,
           method: str = "DOP853", trace_tol: float = 1e-8,
           positivity_tol: float = -1e-8) -> Trajectory:
    """Integrate the master equation and sample on a uniform output grid.

    Every emitted state is symmetrised (rho + rho^dag)/2 and checked against
    the density-matrix invariants: trace drift beyond ``trace_tol`` or an
    eigenvalue below ``positivity_tol`` raises :class:`IntegrationError`.
    States are kept only at every ``state_stride``-th grid point and only when
    ``store_states`` is set; observables are recorded on the full grid.

    Parameters
    ----------
    t_end, dt_out : trajectory length and output spacing (ps for cm^-1 inputs)
    time_scale : phase advance per (energy unit x time unit); the default
        converts cm^-1 energies to picosecond time.  Pass 1.0 for models whose
        energies are already angular frequencies in the chosen time unit.
    """
    if t_end <= 0 or dt_out <= 0:
        raise ValueError("t_end and dt_out must be positive")
    if state_stride < 1:
        raise ValueError("state_stride must be >= 1")
    _check_layouts(rho0.layout.dims, h, channels)
    obs = dict(observables or {})
    for name, op in obs.items():
        if op.layout.dims != rho0.layout.dims:
            raise ValueError(f"observable {name!r} layout mismatch")
        if op.hermiticity_defect() > hilbert.HERMITICITY_TOL:
            raise ValueError(f"observable {name!r} is not Hermitian")

    d = rho0.dim
    n_steps = max(1, int(round(t_end / dt_out)))
    times = np.linspace(0.0, n_steps * dt_out, n_steps + 1)
    rhs = _compile_rhs(h, channels, time_scale)
    # the compiled generator and the direct matrix-product RHS are mutual
    # oracles; verify them against each other on the initial state
    ref = time_scale * lindblad_rhs(rho0, h, channels).matrix
    defect = float(np.abs(rhs(0.0, rho0.matrix.ravel()).reshape(d, d) - ref).max())
    if defect > 1e-9 * (1.0 + float(np.abs(ref).max())):
        raise IntegrationError(f"compiled generator disagrees with direct RHS by {defect:.3e}")
    obs_names = list(obs)
    obs_stack = np.stack([obs[n].matrix for n in obs_names]) if obs_names else None

    series = np.empty((len(obs_names), n_steps + 1))
    stored: list[DensityMatrix] = []
    stored_idx: list[int] = []

    def emit(states_block: np.ndarray, start_index: int):
        block = 0.5 * (states_block + states_block.conj().transpose(0, 2, 1))
        traces = np.einsum("tii->t", block)
        drift = np.abs(traces - 1.0).max()
        if drift > trace_tol:
            t_bad = times[start_index + int(np.abs(traces - 1.0).argmax())]
            raise IntegrationError(f"trace drift {drift:.3e} at t={t_bad:.4g} exceeds {trace_tol}")
        eigmin = np.linalg.eigvalsh(block)[:, 0].min()
        if eigmin < positivity_tol:
            raise IntegrationError(f"state eigenvalue {eigmin:.3e} below {positivity_tol}")
        if obs_stack is not None:
            vals = np.einsum("tij,oji->ot", block, obs_stack)
            if np.abs(vals.imag).max() >= 1e-9:
                raise IntegrationError("observable acquired an imaginary part")
            series[:, start_index:start_index + block.shape[0]] = vals.real
        for j in range(block.shape[0]):
            idx = start_index + j
            if store_states and idx % state_stride == 0:
                stored.append(DensityMatrix(rho0.layout, block[j], validate=False))
                stored_idx.append(idx)
        return block[-1]

    emit(rho0.matrix[None, :, :], 0)
    y = rho0.matrix.astype(complex).ravel()

    # chunk the output grid so solver storage stays bounded (~32 MB of states)
    chunk = max(1, int(2_000_000 // (d * d)))
    pos = 0
    while pos < n_steps:
        hi = min(pos + chunk, n_steps)
        t_eval = times[pos + 1:hi + 1]
        sol = solve_ivp(rhs, (times[pos], times[hi]), y, method=method,
                        t_eval=t_eval, rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(
                f"integrator stopped near t={sol.t[-1] if sol.t.size else times[pos]:.4g}: "
                f"{sol.message}")
        block = np.ascontiguousarray(sol.y.T.reshape(-1, d, d))
        last = emit(block, pos + 1)
        y = last.ravel()
        pos = hi

    return Trajectory(
        times=times,
        observables={n: series[i] for i, n in enumerate(obs_names)},
        states=tuple(stored) if store_states else None,
        state_indices=np.array(stored_idx, dtype=int) if store_states else None,
    )


def dimer_initial_state(params: DimerParams) -> DensityMatrix:
    """Upper exciton |E2><E2| with both modes thermal at their own frequency."""
    m = params.levels
    upper = np.zeros((2, 2), dtype=complex)
    upper[1, 1] = 1.0  # exciton-basis representation
    th1 = hilbert.thermal_state(params.omega1, params.kBT, m).matrix
    th2 = hilbert.thermal_state(params.omega2, params.kBT, m).matrix
    layout = SpaceLayout((2, m, m), (models.ELECTRONIC_LABEL,) + models.MODE_LABELS)
    return DensityMatrix(layout, np.kron(np.kron(upper, th1), th2), copy=False)


def militello_initial_state(params: MilitelloParams, alpha: complex = 1.0) -> DensityMatrix:
    """Ground two-level state, mode 1 in vacuum, mode 2 coherent with amplitude alpha."""
    m = params.levels
    ground = np.zeros((2, 2), dtype=complex)
    ground[0, 0] = 1.0
    vac = hilbert.fock_state(m, 0).matrix
    coh = hilbert.coherent_state(alpha, m).matrix
    layout = SpaceLayout((2, m, m), (models.ELECTRONIC_LABEL,) + models.MODE_LABELS)
    return DensityMatrix(layout, np.kron(np.kron(ground, vac), coh), copy=False)


def eigen_diagnostics(h: Operator, x1: Operator, x2: Operator) -> EigenDiagnostics:
    """Spectrum of H (ascending) and both mode-position operators in that eigenbasis."""
    if h.hermiticity_defect() > hilbert.HERMITICITY_TOL:
        raise ValueError("Hamiltonian is not Hermitian")
    energies, vecs = np.linalg.eigh(h.matrix)
    return EigenDiagnostics(
        energies=energies,
        x1=vecs.conj().T @ x1.matrix @ vecs,
        x2=vecs.conj().T @ x2.matrix @ vecs,
        eigenvectors=vecs,
    )


@dataclass(frozen=True)
class ModelSystem:
    """Everything evolve() needs for one scenario, plus the sync window frequency."""

    hamiltonian: Operator
    channels: tuple[LindbladChannel, ...]
    initial_state: DensityMatrix
    observables: Mapping[str, Operator]
    omega1: float
    time_scale: float = RAD_PER_PS_PER_WAVENUMBER


def _mode_observables(levels: int) -> dict[str, Operator]:
    layout = SpaceLayout((2, levels, levels),
                         (models.ELECTRONIC_LABEL,) + models.MODE_LABELS)
    x = hilbert.position(levels).matrix.real
    number = np.diag(np.arange(levels, dtype=float))
    ident_e, ident_m = np.eye(2), np.eye(levels)

    def lift(mat, slot):
        factors = [ident_e, ident_m, ident_m]
        factors[slot] = mat
        return Operator(layout, np.kron(np.kron(factors[0], factors[1]), factors[2]), copy=False)

    return {"X1": lift(x, 1), "X2": lift(x, 2), "n1": lift(number, 1), "n2": lift(number, 2)}


def dimer_system(params: DimerParams) -> ModelSystem:
    """Assemble the dimer Hamiltonian, channels, initial state and observables."""
    built = models.dimer_hamiltonian(params)
    obs = _mode_observables(params.levels)
    layout = built.operator.layout
    m = params.levels
    for idx, name in ((0, "pop_E1"), (1, "pop_E2")):
        proj = np.zeros((2, 2))
        proj[idx, idx] = 1.0
        obs[name] = Operator(layout, np.kron(np.kron(proj, np.eye(m)), np.eye(m)), copy=False)
    return ModelSystem(
        hamiltonian=built.operator,
        channels=tuple(models.dimer_channels(params)),
        initial_state=dimer_initial_state(params),
        observables=obs,
        omega1=params.omega1,
    )


def militello_system(params: MilitelloParams, alpha: complex = 1.0) -> ModelSystem:
    """Assemble the two-level/two-mode scenario with a coherent seed in mode 2."""
    h = models.militello_hamiltonian(params)
    obs = _mode_observables(params.levels)
    m = params.levels
    for idx, name in ((0, "pop_e1"), (1, "pop_e2")):
        proj = np.zeros((2, 2))
        proj[idx, idx] = 1.0
        obs[name] = Operator(h.layout, np.kron(np.kron(proj, np.eye(m)), np.eye(m)), copy=False)
    return ModelSystem(
        hamiltonian=h,
        channels=tuple(models.militello_channels(params)),
        initial_state=militello_initial_state(params, alpha),
        observables=obs,
        omega1=params.omega1,
    )
