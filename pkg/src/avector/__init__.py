"""Pseudo-spectral solver and numerical verification toolkit for the
generalized active vector system dB/dt + curl((curl Gamma[B]) x B) = 0 on
periodic domains, with its fractional-dissipation variant, the 2+1/2
dimensional reduction (gSQG and 2-D Euler sub-cases), conservation
diagnostics, Lagrangian transport checks, and an empirical inequality lab.
"""

from .diagnostics import (
    DiagnosticsRecord,
    blowup_monitor,
    energy,
    helicity,
    hm1_norm,
    l2_norm,
    log_sobolev_check,
    sobolev_norm,
    y1_norm,
)
from .dynamics2d import (
    ReducedState,
    embed_to_3d,
    restrict_to_2d,
    rhs_gsqg,
    rhs_reduced,
    run_reduced,
    step_reduced,
)
from .dynamics3d import (
    BlowUpError,
    Dissipation,
    SimConfig,
    SimState,
    q_residual,
    reconstruct_u,
    rhs_inviscid,
    rhs_stretch_form,
    run,
    step_dissipative,
    step_rk4,
)
from .estimates import (
    EstimateReport,
    commutator_field,
    verify_comm1,
    verify_comm3,
    verify_comm4,
    verify_embedding,
)
from .lagrangian import FlowMap, advect, cauchy_residual, transport_integral_curve
from .multipliers import (
    AssumptionReport,
    MultiplierSpec,
    apply_gamma,
    compute_V,
    eval_symbol,
    validate_assumptions,
)
from .presets import abc_field, random_divfree_field, random_scalar_field, single_mode_field
from .spectral import (
    Grid,
    GridMismatchError,
    NonZeroMeanError,
    SpectralScalarField,
    SpectralVectorField,
    check_curl_times_identity,
    curl,
    dealias,
    divergence,
    gradient,
    lambda_power,
    leray_project,
    load_snapshot_2d,
    load_snapshot_3d,
    save_snapshot_2d,
    save_snapshot_3d,
    set_fft_workers,
)

__version__ = "0.1.0"
