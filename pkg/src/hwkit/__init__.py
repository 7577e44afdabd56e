"""Hermite-WENO transport kernels and drivers.

Semi-Lagrangian and conservative finite-difference advection built on
Hermite-WENO reconstructions, with the classical cubic-spline and
Jiang-Shu WENO5 baselines, a paraxial beam model, and the guiding-center
diocotron instability on a disk.
"""

from .grid import (DiskMask, Field, FieldNorms, Grid1D, Grid2D,
                   classify_disk_nodes, field_norms)
from .advect import (MixedState, SchemeConfig, VelocityField2D,
                     fd_step_rk4_1d, fd_step_rk4_2d, mixed_controller,
                     sl_step_const_1d, sl_step_leapfrog_2d)
from .models import (BeamSetup, DiagnosticsRecord, DiocotronSetup, RunResult,
                     Transport1DSetup, run_experiment)

__version__ = "0.1.0"

__all__ = [
    "BeamSetup", "DiagnosticsRecord", "DiocotronSetup", "DiskMask", "Field",
    "FieldNorms", "Grid1D", "Grid2D", "MixedState", "RunResult",
    "SchemeConfig", "Transport1DSetup", "VelocityField2D",
    "classify_disk_nodes", "fd_step_rk4_1d", "fd_step_rk4_2d", "field_norms",
    "mixed_controller", "run_experiment", "sl_step_const_1d",
    "sl_step_leapfrog_2d", "__version__",
]
