"""Numerical laboratory for the focusing nonlocal nonlinear Schrodinger equation

    i u_t - u_xx = u^2 u*,    u*(x) = conj(u(-x)),

on a periodic box: closed-form solitons and their blow-up, conserved
functionals, split-step/integrating-factor solvers, the modulation
decomposition around the ground-state orbit, linearized operators with their
root spaces and spectra, and a reproducible experiment harness.
"""

from .fields import (
    Field,
    Grid,
    SpectralField,
    derivative,
    even_odd_split,
    from_spectral,
    inner,
    load_field,
    make_grid,
    norm_hs,
    norm_lp,
    reflect,
    reflect_conjugate,
    save_field,
    semi_inner,
    to_spectral,
)
from .solitons import (
    SingularEvaluationError,
    SolitonProfiles,
    blowup_time,
    ground_state,
    ground_state_alpha_derivative,
    q_prime,
    q_profiles,
    standing_wave,
    two_param_soliton,
)
from .invariants import (
    InvariantReport,
    distance_to_ground_state,
    hamiltonian,
    quasipower,
    symplectic,
    symplectic_nls,
)
from .dynamics import (
    BlowupReport,
    SolverConfig,
    Trajectory,
    detect_blowup,
    evolve,
    nonlinearity,
    pt_transform,
    step,
)
from .linops import (
    OperatorHandle,
    SpectrumResult,
    apply_operator,
    discrete_spectrum,
    identity_suite,
    operator_matrix,
    root_space_check,
)
from .modulation import (
    BootstrapObservables,
    FitConvergenceError,
    FitResult,
    ModulationCoords,
    TierViolationError,
    bootstrap_observables,
    build_initial_data,
    decompose,
    fit_modulation,
    orthogonalize_even_seed,
    orthogonalize_odd_seed,
    reconstruct,
    track_trajectory,
)
from .modulation_rhs import (
    ConsistencyReport,
    DegenerateSystemError,
    RhsReport,
    consistency_check,
    eval_coefficient_dots,
    eval_theta_alpha_dot,
    evaluate_rates,
)
from .experiments import (
    ConfigError,
    RunReport,
    run_scenario,
    run_sweep,
    validate_config,
)

__version__ = "0.1.0"
