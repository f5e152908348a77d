"""Divergence-free spectral solver for damped incompressible flow on the
torus, with a norm-cutoff variant and an experiment harness around it."""

from .dynamics import SimConfig, f_cut, rhs, verify_fmn, verify_fn_lipschitz
from .errors import (
    BfnsError,
    BlowUpError,
    ConfigError,
    InvalidFieldError,
    ParameterError,
    TrajectoryCorruptionError,
    TrajectoryFormatError,
    TrajectoryIntegrityError,
    TrajectoryVersionError,
)
from .fields import (
    GridSpec,
    SpectralField,
    fields_equal,
    h_norm,
    h_norm_sq,
    leray_project,
    lp_norm,
    random_solenoidal,
    trilinear_b,
    v_norm,
    v_norm_sq,
)
from .integrate import Trajectory, restart_concatenate, self_convergence, simulate, step
from .energy import build_ledger, equality_regime
from .io import export_csv, read_csv, read_trajectory, write_trajectory

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
