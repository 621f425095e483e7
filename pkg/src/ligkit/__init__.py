"""Scoring, rigid-body refinement, scaffold masking and context statistics
for pocket-conditioned ligand generation."""

__version__ = "0.1.0"

from .molio import (
    Atom,
    MolecularGraph,
    ParseError,
    PocketStructure,
    heavy_atom_sphere_check,
    iter_ligands,
    parse_ligand,
    parse_receptor,
    write_ligand,
)
from .geometry import RigidPose, apply_pose, compose_update, rodrigues
from .scaffold import Decomposition, MaskAssignment, decompose, find_ring_systems, make_mask, sample_mask
from .energy import EnergyBreakdown, assign_atom_types, evaluate, pair_terms, surface_distance
from .refine import RefineResult, fd_gradient, lbfgs_minimize, lbfgs_refine
from .ibstats import (
    ContextSummary,
    build_virtual_edges,
    classify_interactions,
    gradient_snr,
    information_density,
    summarize,
)
from .diffsched import (
    VarianceSchedule,
    make_schedule,
    noise_coordinates,
    noise_types,
    perturb_protein,
    score_targets,
)
