"""Model Hamiltonians and dissipation channels.

Two systems are provided:

* an exciton-vibration dimer -- two dipole-coupled chromophores, each linearly
  coupled to a local harmonic mode, with site-energy reorganisation shifts
  kept explicitly so that mode detuning feeds back on the electronic gap;
* a two-level system coupled to two modes through phase-twisted Jaynes-Cummings
  style interactions g_i (e^{-i phi_i} b_i + e^{i phi_i} b_i^dag) sigma_x.

The dimer operators are represented in the exciton basis: the two electronic
basis vectors of every returned matrix are the excitons |E1>, |E2>.
Tensor order is electronic (x) mode 1 (x) mode 2 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import hilbert
from .hilbert import Operator, SpaceLayout
from .units import rate_ps_to_wavenumber, thermal_occupation

# Central-dimer reference parameters (PE545), energies in cm^-1.
TABLE_DELTA_E = 1042.0
TABLE_V = 92.0
TABLE_OMEGA = 1111.0
TABLE_G = 267.1
TABLE_KBT = 207.1
TABLE_GAMMA_TH_PS = 1.0    # (1 ps)^-1
TABLE_GAMMA_DEPH_PS = 10.0  # (0.1 ps)^-1

#: Huang-Rhys factor reproducing the reference coupling g = omega*sqrt(S)
TABLE_HUANG_RHYS = (TABLE_G / TABLE_OMEGA) ** 2

ELECTRONIC_LABEL = "electronic"
MODE_LABELS = ("mode1", "mode2")


@dataclass(frozen=True)
class DimerParams:
    """Exciton-vibration dimer parameters (energies in cm^-1, rates in ps^-1)."""

    e1: float = 0.0
    e2: float = TABLE_DELTA_E
    V: float = TABLE_V
    omega1: float = TABLE_OMEGA
    omega2: float = TABLE_OMEGA
    S1: float = TABLE_HUANG_RHYS
    S2: float = TABLE_HUANG_RHYS
    gamma_deph: float = TABLE_GAMMA_DEPH_PS
    gamma_th: float = TABLE_GAMMA_TH_PS
    kBT: float = TABLE_KBT
    levels: int = 9

    def __post_init__(self):
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("mode energies must be positive")
        if self.S1 < 0 or self.S2 < 0:
            raise ValueError("Huang-Rhys factors must be nonnegative")
        if self.gamma_deph < 0 or self.gamma_th < 0:
            raise ValueError("rates must be nonnegative")
        if self.kBT <= 0:
            raise ValueError("kBT must be positive")
        if self.levels < 2:
            raise ValueError("need at least two Fock levels per mode")

    @property
    def delta_e(self) -> float:
        """Bare site-energy gap e2 - e1."""
        return self.e2 - self.e1

    @property
    def g1(self) -> float:
        return self.omega1 * math.sqrt(self.S1)

    @property
    def g2(self) -> float:
        return self.omega2 * math.sqrt(self.S2)

    @property
    def eta(self) -> float:
        """Exciton delocalisation ratio 2V/|delta_e|."""
        return 2.0 * abs(self.V) / abs(self.delta_e)

    @property
    def detuning(self) -> float:
        return self.omega2 / self.omega1

    def detuned(self, delta_omega: float, *, fix: str = "huang_rhys") -> "DimerParams":
        """New parameter set with omega2 = delta_omega * omega1.

        ``fix`` chooses what is held constant on mode 2: its Huang-Rhys factor
        (default, so the reorganisation energy omega2*S2 tracks the detuning)
        or its coupling ``g`` (S2 rescales as (g2/omega2)^2).
        """
        if delta_omega <= 0:
            raise ValueError("detuning must be positive")
        omega2 = delta_omega * self.omega1
        if fix == "huang_rhys":
            s2 = self.S2
        elif fix == "g":
            s2 = (self.g2 / omega2) ** 2
        else:
            raise ValueError(f"fix must be 'huang_rhys' or 'g', got {fix!r}")
        return replace(self, omega2=omega2, S2=s2)


@dataclass(frozen=True)
class MilitelloParams:
    """Two-level system coupled to two modes; natural units with e2 - e1 = 1."""

    e1: float = 0.0
    e2: float = 1.0
    omega1: float = 1.0
    omega2: float = 1.0
    g1: float = 1.0
    g2: float = 1.0
    phi1: float = 0.0
    phi2: float = 0.0
    gamma_minus: float = 0.2
    levels: int = 9

    def __post_init__(self):
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("mode energies must be positive")
        if not (0.0 <= self.phi1 <= math.pi and 0.0 <= self.phi2 <= math.pi):
            raise ValueError("interaction phases must lie in [0, pi]")
        if self.gamma_minus < 0:
            raise ValueError("decay rate must be nonnegative")
        if self.levels < 2:
            raise ValueError("need at least two Fock levels per mode")

    @property
    def delta_e(self) -> float:
        return self.e2 - self.e1

    @property
    def detuning(self) -> float:
        return self.omega2 / self.omega1

    def detuned(self, delta_omega: float) -> "MilitelloParams":
        if delta_omega <= 0:
            raise ValueError("detuning must be positive")
        return replace(self, omega2=delta_omega * self.omega1)


@dataclass(frozen=True)
class LindbladChannel:
    """Dissipation channel: jump operator plus rate in energy units (cm^-1)."""

    operator: Operator
    rate: float
    label: str = ""

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"channel rate must be nonnegative, got {self.rate}")


def reorganisation_energy(omega: float, huang_rhys: float) -> float:
    """Site-energy shift omega*S from displacing a coupled mode."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    if huang_rhys < 0:
        raise ValueError("Huang-Rhys factor must be nonnegative")
    return omega * huang_rhys


def shifted_site_energies(params: DimerParams) -> tuple[float, float]:
    """Site energies including the reorganisation contributions omega_i*S_i."""
    return (params.e1 + reorganisation_energy(params.omega1, params.S1),
            params.e2 + reorganisation_energy(params.omega2, params.S2))


def mixing_angle(params: DimerParams) -> float:
    """Half the arctangent of 2|V| over the reorganisation-shifted site gap.

    Returns pi/4 by convention for degenerate (shifted) site energies.
    """
    eshift1, eshift2 = shifted_site_energies(params)
    gap = eshift2 - eshift1
    if gap == 0.0:
        return math.pi / 4.0
    return 0.5 * math.atan(2.0 * abs(params.V) / gap)


def exciton_energies(params: DimerParams) -> tuple[float, float]:
    """Eigenenergies of the shifted electronic Hamiltonian, ascending."""
    eshift1, eshift2 = shifted_site_energies(params)
    mean = 0.5 * (eshift1 + eshift2)
    half_split = 0.5 * math.hypot(eshift2 - eshift1, 2.0 * params.V)
    return mean - half_split, mean + half_split


def _exciton_rotation(theta: float) -> np.ndarray:
    """Rows are the exciton vectors in the site basis: <E_d| = R[d]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class DimerHamiltonian:
    """Dimer Hamiltonian in the exciton basis together with basis metadata."""

    operator: Operator
    theta: float
    exciton_energies: tuple[float, float]
    #: rows are |E1>, |E2> expressed in the site basis
    exciton_vectors: np.ndarray


def dimer_hamiltonian(params: DimerParams) -> DimerHamiltonian:
    """Total exciton-vibration Hamiltonian on the (2, levels, levels) space.

    Exciton line + free modes + interaction omega_i*sqrt(S_i)*Theta_i*X_i with
    Theta_i the site projectors |e_i><e_i| rotated into the exciton basis, so
    the electronic basis of the returned matrix is the exciton basis.
    """
    m = params.levels
    theta = mixing_angle(params)
    rot = _exciton_rotation(theta)
    energies = exciton_energies(params)

    ident_e = np.eye(2)
    ident_m = np.eye(m)
    number = np.diag(np.arange(m, dtype=float))
    x = hilbert.position(m).matrix.real
    # site projectors in the exciton basis; rotating the 2x2 factors keeps the
    # assembled matrix exactly sparse
    site_proj = [rot @ np.diag([1.0, 0.0]) @ rot.T, rot @ np.diag([0.0, 1.0]) @ rot.T]

    h_exciton = (np.kron(np.kron(np.diag(energies), ident_m), ident_m)
                 + np.kron(np.kron(ident_e, params.omega1 * number), ident_m)
                 + np.kron(np.kron(ident_e, ident_m), params.omega2 * number)
                 + params.g1 * np.kron(np.kron(site_proj[0], x), ident_m)
                 + params.g2 * np.kron(np.kron(site_proj[1], ident_m), x))

    layout = SpaceLayout((2, m, m), (ELECTRONIC_LABEL,) + MODE_LABELS)
    return DimerHamiltonian(
        operator=Operator(layout, h_exciton, copy=False),
        theta=theta,
        exciton_energies=exciton_energies(params),
        exciton_vectors=rot,
    )


def _lift(mat: np.ndarray, m: int, slot: int) -> np.ndarray:
    """Embed a single-factor matrix into the (2, m, m) product space."""
    factors = [np.eye(2), np.eye(m), np.eye(m)]
    factors[slot] = mat
    return np.kron(np.kron(factors[0], factors[1]), factors[2])


def dimer_channels(params: DimerParams) -> list[LindbladChannel]:
    """Six Lindblad channels: two site dephasing, four thermal mode channels.

    Dephasing projectors act on the sites |e_i><e_i| (expressed here in the
    exciton basis); each mode exchanges quanta with its own bath at rates
    gamma_th*(1+B_i) down and gamma_th*B_i up, with B_i evaluated at omega_i.
    Rates are converted from ps^-1 to cm^-1.
    """
    m = params.levels
    layout = SpaceLayout((2, m, m), (ELECTRONIC_LABEL,) + MODE_LABELS)
    rot = _exciton_rotation(mixing_angle(params))
    b = hilbert.annihilation(m).matrix

    g_deph = rate_ps_to_wavenumber(params.gamma_deph)
    g_th = rate_ps_to_wavenumber(params.gamma_th)
    occ1 = thermal_occupation(params.omega1, params.kBT)
    occ2 = thermal_occupation(params.omega2, params.kBT)

    channels = []
    for site, name in ((0, "deph_site1"), (1, "deph_site2")):
        proj_site = np.zeros((2, 2))
        proj_site[site, site] = 1.0
        op = _lift(rot @ proj_site @ rot.T, m, 0)
        channels.append(LindbladChannel(Operator(layout, op, copy=False), g_deph, name))
    for slot, occ, name in ((1, occ1, "mode1"), (2, occ2, "mode2")):
        down = Operator(layout, _lift(b, m, slot), copy=False)
        channels.append(LindbladChannel(down, g_th * (1.0 + occ), f"{name}_down"))
        channels.append(LindbladChannel(down.dag(), g_th * occ, f"{name}_up"))
    return channels


def militello_hamiltonian(params: MilitelloParams) -> Operator:
    """Two-level/two-mode Hamiltonian with phase-twisted quadrature couplings.

    The interaction on mode i is g_i*(e^{-i phi_i} b_i + e^{i phi_i} b_i^dag)
    sigma_x = g_i*(cos(phi_i) X_i + sin(phi_i) P_i) sigma_x, so phi = 0, pi/2,
    pi couple X, P and -X respectively.
    """
    m = params.levels
    layout = SpaceLayout((2, m, m), (ELECTRONIC_LABEL,) + MODE_LABELS)
    ident_e = np.eye(2)
    ident_m = np.eye(m)
    number = np.diag(np.arange(m, dtype=float))
    sigma_x = np.array([[0.0, 1.0], [1.0, 0.0]])
    b = hilbert.annihilation(m).matrix

    def twisted(phi: float) -> np.ndarray:
        return np.exp(-1j * phi) * b + np.exp(1j * phi) * b.conj().T

    h = (np.kron(np.kron(np.diag([params.e1, params.e2]), ident_m), ident_m)
         + np.kron(np.kron(ident_e, params.omega1 * number), ident_m)
         + np.kron(np.kron(ident_e, ident_m), params.omega2 * number)
         + params.g1 * np.kron(np.kron(sigma_x, twisted(params.phi1)), ident_m)
         + params.g2 * np.kron(np.kron(sigma_x, ident_m), twisted(params.phi2)))
    return Operator(layout, h, copy=False)


def militello_channels(params: MilitelloParams) -> list[LindbladChannel]:
    """Single decay channel sigma_- = |e1><e2| at rate gamma_minus.

    The modes have no direct dissipation; rates are already energies in the
    model's natural units, so no ps^-1 conversion applies.
    """
    m = params.levels
    layout = SpaceLayout((2, m, m), (ELECTRONIC_LABEL,) + MODE_LABELS)
    sigma_minus = np.array([[0.0, 1.0], [0.0, 0.0]])
    op = Operator(layout, _lift(sigma_minus, m, 0), copy=False)
    return [LindbladChannel(op, params.gamma_minus, "sigma_minus")]


def mode_swap_permutation(levels: int) -> Operator:
    """Unitary permutation exchanging the two mode factors of (2, m, m)."""
    m = levels
    dim = 2 * m * m
    perm = np.zeros((dim, dim))
    for e in range(2):
        for n1 in range(m):
            for n2 in range(m):
                src = (e * m + n1) * m + n2
                dst = (e * m + n2) * m + n1
                perm[dst, src] = 1.0
    layout = SpaceLayout((2, m, m), (ELECTRONIC_LABEL,) + MODE_LABELS)
    return Operator(layout, perm, copy=False)
