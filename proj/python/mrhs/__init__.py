"""Deflated restarted GMRES for sequences of right-hand sides."""

from ._core import (
    ConfigError,
    CsrMatrix,
    DeflationSubspace,
    Error,
    ParseError,
    bicgstab,
    bl_gmres_dr,
    bl_gmres_proj,
    gen_bidiagonal,
    gen_lattice_surrogate,
    gmres,
    gmres_dr,
    gmres_proj,
    load_matrix_market,
    run_experiment,
    run_suite,
    save_matrix_market,
    suite_names,
)

__all__ = [
    "ConfigError",
    "CsrMatrix",
    "DeflationSubspace",
    "Error",
    "ParseError",
    "bicgstab",
    "bl_gmres_dr",
    "bl_gmres_proj",
    "gen_bidiagonal",
    "gen_lattice_surrogate",
    "gmres",
    "gmres_dr",
    "gmres_proj",
    "load_matrix_market",
    "run_experiment",
    "run_suite",
    "save_matrix_market",
    "suite_names",
]
