"""Riesz and logarithmic equilibrium measures, capacities and moment comparisons."""

from .closedform import ball_capacity, ball_moment, case_for, matched_ball_radius
from .equilibrium import (DiscreteMeasure, EquilibriumResult, SolverError, SolverOptions,
                          frostman_check, potential, solve_equilibrium, solve_set)
from .geometry import (Annulus, Ball, Ellipsoid, GeometryError, Interval, Mesh, SetSpec, Sphere,
                       build_mesh, load_setspec, setspec_from_dict, setspec_to_dict)
from .kernels import KernelSpec, kernel_matrix, self_energy
from .moments import (MomentComparison, closed_form_ball, compare_moments, compare_pair,
                      threshold_scan)
from .startransform import (LiftedPotential, PhiSpec, commutation_check, jgrid_scan,
                            moment_difference_via_J, spherical_mean)
from .verify import (CampaignError, CampaignReport, CampaignSpec, campaign_from_dict,
                     equality_case_probe, load_campaign, run_campaign)

__version__ = "0.1.0"

__all__ = [
    "Annulus", "Ball", "CampaignError", "CampaignReport", "CampaignSpec", "DiscreteMeasure",
    "Ellipsoid", "EquilibriumResult", "GeometryError", "Interval", "KernelSpec",
    "LiftedPotential", "Mesh", "MomentComparison", "PhiSpec", "SetSpec", "SolverError",
    "SolverOptions", "Sphere", "ball_capacity", "ball_moment", "build_mesh", "campaign_from_dict",
    "case_for", "closed_form_ball", "commutation_check", "compare_moments", "compare_pair",
    "equality_case_probe", "frostman_check", "jgrid_scan", "kernel_matrix", "load_campaign",
    "load_setspec", "matched_ball_radius", "moment_difference_via_J", "potential",
    "run_campaign", "self_energy", "setspec_from_dict", "setspec_to_dict", "solve_equilibrium",
    "solve_set", "spherical_mean", "threshold_scan",
]
