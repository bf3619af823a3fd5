"""Isochronous oscillations and gradient blow-up along characteristics."""

from .core import (
    AugmentedState,
    CharState,
    Domain,
    SystemDef,
    Trajectory,
    check_partials,
    check_zero_equilibrium,
    eval_linearization,
    eval_rhs,
)
from .criteria import (
    InvolutionSpec,
    LienardSpec,
    build_involution_potential,
    check_positivity_fails,
    doping_profile_candidate,
    mobius_involution,
    reflection,
    sabatini_tau,
    sabatini_verdict,
)
from .errors import (
    DomainExit,
    InsufficientPoints,
    InvalidModel,
    IsochroneError,
    MaxStepsExceeded,
    NoReturn,
    NumericalFailure,
    QuadratureFailure,
    SingularTransformation,
    StepUnderflow,
)
from .field import (
    CrossingReport,
    FieldSnapshot,
    InitialProfile,
    constant_profile,
    detect_crossing,
    gaussian_profile,
    reconstruct_field,
    resample,
)
from .integrate import (
    Event,
    IntegratorConfig,
    PeriodResult,
    find_event,
    find_events,
    integrate,
    measure_period,
)
from .isochrony import (
    MonodromyResult,
    PeriodMap,
    amplitude_family,
    classify_isochronous,
    monodromy,
    period_derivative,
    period_map,
)
from .models import (
    ModelSpec,
    build_model,
    harmonic,
    hopf_potential,
    involution_hamiltonian,
    plasma_calibrated,
    plasma_lienard,
    plasma_radial,
    relativistic_lienard,
    relativistic_plasma,
    relativistic_reduced,
    transformed_oscillator,
)
from .variational import (
    BlowupReport,
    RiccatiSpec,
    augment,
    detect_blowup,
    monodromy_field,
    radon_reconstruct,
    radon_singular_time,
    solve_riccati_direct,
)

__version__ = "0.1.0"
