"""Gaussian random fields, their zero sets, and Kac-Rice moments."""

from ._nodalsets import (
    ConfigError,
    DegenerateError,
    DomainError,
    Field,
    KernelSpec,
    betti_surface,
    bulinskaya_probe,
    ergodicity_decay,
    extract_zero_set,
    first_moment_density,
    kernel_spec,
    knot_classify,
    kostlan_local_limit,
    read_coefficients,
    run_experiment,
    sample_field,
    sphere_det_integral,
    total_curvature,
    two_point_schur_check,
    willmore_energy,
    write_coefficients,
)

__all__ = [
    "ConfigError",
    "DegenerateError",
    "DomainError",
    "Field",
    "KernelSpec",
    "betti_surface",
    "bulinskaya_probe",
    "ergodicity_decay",
    "extract_zero_set",
    "first_moment_density",
    "kernel_spec",
    "knot_classify",
    "kostlan_local_limit",
    "read_coefficients",
    "run_experiment",
    "sample_field",
    "sphere_det_integral",
    "total_curvature",
    "two_point_schur_check",
    "willmore_energy",
    "write_coefficients",
]
