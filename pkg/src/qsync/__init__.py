"""Transient spontaneous quantum synchronisation toolkit.

Simulates open-system dynamics of an exciton-vibration dimer and of a
two-level system coupled to two harmonic modes, measures synchronisation of
the mode displacements with a windowed Pearson correlation, and quantifies
the quantum/classical correlations (mutual information, classical
correlation, discord) between the synchronising modes.
"""

__version__ = "0.1.0"

from .correlations import (CorrelationTriple, MeasurementSampler,
                           classical_correlation, correlation_dynamics,
                           discord, mutual_information, von_neumann_entropy)
from .dynamics import (EigenDiagnostics, Trajectory, build_liouvillian,
                       dimer_initial_state, dimer_system, eigen_diagnostics,
                       evolve, lindblad_rhs, militello_initial_state,
                       militello_system)
from .errors import (ConfigError, DegenerateSignalError, IntegrationError,
                     QsyncError, TruncationError)
from .hilbert import (DensityMatrix, Operator, SpaceLayout, annihilation,
                      coherent_state, creation, expectation, fock_state,
                      identity, momentum, partial_trace, position,
                      tensor, thermal_state)
from .models import (DimerHamiltonian, DimerParams, LindbladChannel,
                     MilitelloParams, dimer_channels, dimer_hamiltonian,
                     militello_channels, militello_hamiltonian, mixing_angle,
                     reorganisation_energy)
from .sync import (PlateauResult, SweepRow, SweepSettings, SyncSeries,
                   detuning_sweep, pearson_window, plateau, run_scenario,
                   sync_series)
