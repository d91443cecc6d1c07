"""Dynamic entry game: equilibrium, K-stage PML/MD estimators and their asymptotic variances."""

from ._core import (
    DomainError,
    GameSpec,
    best_response,
    design,
    draw_dataset,
    estimate,
    highorder_table,
    sigma_kmd,
    sigma_kpml,
    sigma_star,
    solve_equilibrium,
    variance_curve,
)

__all__ = [
    "DomainError",
    "GameSpec",
    "best_response",
    "design",
    "draw_dataset",
    "estimate",
    "highorder_table",
    "sigma_kmd",
    "sigma_kpml",
    "sigma_star",
    "solve_equilibrium",
    "variance_curve",
]
