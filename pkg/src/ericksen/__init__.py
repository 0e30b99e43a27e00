"""Finite elements for Ericksen's one-constant model of nematic liquid crystals."""
from .mesh import Mesh, BoundarySpec, build_rect_mesh_2d, build_box_mesh_3d, select_boundary
from .fem import (StiffnessGraph, assemble_stiffness, check_weak_acuteness, check_angles_2d,
                  lumped_mass, interpolate)
from .potential import Potential, quartic_well
from .energy import EnergyBreakdown, e1h, e2h, e1h_tilde, consistency_c1h, energy_breakdown
from .flow import FlowConfig, FlowProblem, FlowState, run_flow
from .scenarios import Scenario, preset

__version__ = "0.1.0"
