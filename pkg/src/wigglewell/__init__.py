"""Valley splitting in Si/SiGe quantum wells with an oscillating Ge concentration.

The package follows one pipeline: a concentration profile becomes a band
potential, the potential confines an envelope, and the envelope together
with a Bloch coefficient table yields the intervalley coupling and the
valley splitting. Around that core sit an atomistic alloy disorder
sampler with a harmonic dot filter, two independent splitting routes, and
transition fits that calibrate measured voltages into energies.
"""

from .constants import (
    BOLTZMANN_EV_PER_K,
    HBAR2_OVER_2M0,
    MV_PER_M_TO_EV_PER_NM,
    SILICON,
    MaterialConstants,
)
from .disorder import (
    AlloyField,
    DisorderEnsemble,
    DotGeometry,
    DotSweepStudy,
    EnsembleSample,
    SweepPoint,
    dot_sweep_study,
    effective_profile,
    ensemble,
    sample_alloy_field,
    case1_sweep,
    case2_sweep,
)
from .envelope import EnvelopeSolution, grid_convergence_shift, solve_envelope
from .errors import (
    ConfigError,
    DegenerateGrid,
    ExtentTooSmall,
    GridTooCoarse,
    IllConditioned,
    NonConvergence,
    NoTransitionFound,
    NotConfined,
    WigglewellError,
)
from .heterostructure import (
    ConcentrationProfile,
    PotentialProfile,
    ProfileSpec,
    build_profile,
    potential_from_profile,
)
from .spectrofit import (
    LeverArmFit,
    TransitionFit,
    TransitionTrace,
    fit_lever_arm,
    fit_lever_arm_from_traces,
    fit_transition,
    load_trace_csv,
    synthesize_transition_trace,
    voltage_to_energy,
)
from .valley import (
    BlochCoefficientTable,
    ValleyCouplingResult,
    ValleyModel,
    ValleySplittingCurve,
    coupling_channels,
    coupling_from_potential,
    intervalley_coupling,
    intervalley_element,
    local_maxima,
    resolve_table,
    scan_q,
    two_component_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "AlloyField",
    "BOLTZMANN_EV_PER_K",
    "BlochCoefficientTable",
    "ConcentrationProfile",
    "ConfigError",
    "DegenerateGrid",
    "DisorderEnsemble",
    "DotGeometry",
    "DotSweepStudy",
    "EnsembleSample",
    "EnvelopeSolution",
    "ExtentTooSmall",
    "GridTooCoarse",
    "HBAR2_OVER_2M0",
    "IllConditioned",
    "LeverArmFit",
    "MV_PER_M_TO_EV_PER_NM",
    "MaterialConstants",
    "NoTransitionFound",
    "NonConvergence",
    "NotConfined",
    "PotentialProfile",
    "ProfileSpec",
    "SILICON",
    "SweepPoint",
    "TransitionFit",
    "TransitionTrace",
    "ValleyCouplingResult",
    "ValleyModel",
    "ValleySplittingCurve",
    "WigglewellError",
    "build_profile",
    "case1_sweep",
    "case2_sweep",
    "coupling_channels",
    "coupling_from_potential",
    "dot_sweep_study",
    "effective_profile",
    "ensemble",
    "fit_lever_arm",
    "fit_lever_arm_from_traces",
    "fit_transition",
    "grid_convergence_shift",
    "intervalley_coupling",
    "intervalley_element",
    "load_trace_csv",
    "local_maxima",
    "potential_from_profile",
    "resolve_table",
    "sample_alloy_field",
    "scan_q",
    "solve_envelope",
    "synthesize_transition_trace",
    "two_component_spectrum",
    "voltage_to_energy",
]
