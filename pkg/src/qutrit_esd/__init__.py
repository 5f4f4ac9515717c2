"""Entanglement dynamics of two qutrits under amplitude damping.

Submodules: :mod:`states` (basis and initial states), :mod:`dynamics`
(master-equation integration), :mod:`measures` (partial transpose,
realignment, Lambda, EOF bound), :mod:`critical` (closed-form and detected
critical times) and :mod:`cli`.
"""

from qutrit_esd.critical import (
    CriticalTimes,
    Event,
    classify_regime,
    detect_events,
    mixed_family_times,
    pure_family_times,
    scan_family,
    subspace_family_times,
)
from qutrit_esd.dynamics import DecayRates, EvolutionTrace, evolve, lindblad_rhs
from qutrit_esd.errors import (
    ConfigurationError,
    DomainError,
    IntegrationError,
    QutritESDError,
    ResolutionError,
)
from qutrit_esd.measures import eof_lower_bound, lambda_measure, partial_transpose, realign
from qutrit_esd.states import (
    MixedParams,
    PureParams,
    SubspaceParams,
    make_mixed_initial,
    make_pure_initial,
    make_subspace_initial,
)

__version__ = "0.1.0"
