"""kp5: pseudo-spectral simulation and analysis of a fifth-order KP-II flow."""

__version__ = "0.1.0"

from .config import (
    DiagnosticsRecord,
    SimConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    rng_from_seed,
)
from .diagnostics import (
    RadiusFit,
    SpaceTimeField,
    almost_conservation_run,
    bilinear_ratio_trials,
    bourgain_norm,
    check_bilinear_admissible,
    energy_identity_check,
    radius_decay_run,
    radius_estimate,
    uniqueness_gap,
)
from .errors import (
    BlowUpError,
    ConfigError,
    IllPosedInversionError,
    InadmissibleParamsError,
    InsufficientSupportError,
    Kp5Error,
    PicardDivergenceError,
    SigmaOverflowError,
    SnapshotFormatError,
    SpectralSymmetryError,
)
from .initial_data import exp_spectrum, gaussian, gaussian_dx, line_soliton
from .integrator import (
    StepperState,
    cfl_dt,
    max_group_speed,
    nonlinear_term,
    simulate,
    step,
)
from .operators import (
    GevreyParams,
    apply_gevrey,
    dispersion_symbol,
    exp_gap_ratio,
    gevrey_norm,
    remainder_n,
    semigroup_apply,
    sobolev_norm,
)
from .picard import (
    TimeWindowField,
    delta_rule,
    doubling_check,
    duhamel_apply,
    free_window,
    picard_iterate,
)
from .spectral import (
    Grid2D,
    PhysicalField,
    SpectralField,
    dealias,
    forward_transform,
    inverse_transform,
    load_snapshot,
    project_zero_x_mean,
    save_snapshot,
    x_antiderivative,
    x_derivative,
)

__all__ = [name for name in dir() if not name.startswith("_")]
