"""Surface reconstruction from a few parallel binary cross-sections.

Diffuse-interface relaxations of perimeter, bending and combined
(perimeter + bending) energies are minimised under interior/exterior
obstacle constraints built from the slices, with spectral semi-implicit
solvers; reconstructed surfaces are extracted at the half level and scored
by the standard deviation of their discrete curvatures.
"""

from .grid import (BinaryVolume, GridSpec, ScalarField3D, VectorField3D,
                   field_axpy, field_map, norms, read_rvol, write_rvol)
from .phasefield import PhaseFieldParams, double_well, init_phase_field, \
    project_obstacle, transition_profile
from .constraints import (ObstaclePair, SliceStack, assemble_constraints,
                          fatten, fill_gaps_by_duplication, obstacle_profiles,
                          restrictions_from_slices)
from .distance import edt_unsigned, signed_distance, slice_signed_distance
from .spectral import (SpectralPlan, divergence, get_plan, gradient, laplacian,
                       precondition_admm_u, precondition_admm_w,
                       precondition_pgdm, set_fft_workers)
from .energies import (EnergyBreakdown, energy_elastica, energy_perimeter,
                       energy_willmore, grad_elastica, grad_perimeter,
                       grad_willmore)
from .solvers import (SolverConfig, SolverRun, admm_step, pgdm_step, run,
                      sweep_admm)
from .mesh import TriMesh, build_adjacency, extract_isosurface, read_obj, \
    vertex_normals, write_obj
from .curvature import (CurvatureReport, curvature_report, gaussian_curvature,
                        mean_curvature)
from .synth import (ExperimentManifest, execute_manifest, gen_branching_cylinders,
                    gen_sphere, ingest_real_stack, subsample_slices)

__version__ = "0.1.0"
