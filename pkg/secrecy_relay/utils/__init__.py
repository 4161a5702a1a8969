from .grids import SWEEP_VARIABLES, SweepSpec, parse_sweep
from .special_functions import bessel_i0, bessel_i0_scaled, bessel_i0_series, gamma_fn
from .units import db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm

__all__ = [
    "SWEEP_VARIABLES",
    "SweepSpec",
    "parse_sweep",
    "bessel_i0",
    "bessel_i0_scaled",
    "bessel_i0_series",
    "gamma_fn",
    "db_to_linear",
    "dbm_to_watts",
    "linear_to_db",
    "watts_to_dbm",
]
