"""Diffuse-interface energies on random point clouds.

Sampling of seeded clouds, anisotropic proximity graphs, graph total
variation and Ginzburg-Landau-type energies, their continuum limit objects
(surface tension, weighted total variation, projected one-dimensional
limit), transport-based comparison metrics, exact and relaxed minimizers,
and a Monte-Carlo harness for bias and mean-square convergence rates.
"""

__version__ = "0.1.0"

from glcloud._backend import BACKEND_NAME
from glcloud.domain import (BoxDomain, DensitySpec, EpsilonSchedule,
                            PiecewiseConstantDensity, PointCloud,
                            ProductPolynomialDensity, UniformDensity,
                            admissible_epsilon, sample_points)
from glcloud.kernel import (AdmissibilityReport, FeatureProjection,
                            InteractionKernel, KernelProfile,
                            check_admissibility, eval_kernel, support_radius)
from glcloud.graph import WeightedGraph, build_graph
from glcloud.energy import (DoubleWell, LabelFunction, delta_energy,
                            double_well, energy_report, gl_energy, graph_tv,
                            p_laplacian)
from glcloud.continuum import (PolyhedralFunction, QuadratureSpec,
                               SurfaceTension, continuum_tv, hat_energy,
                               hat_sigma, surface_tension)
from glcloud.transport import (StepFunction1D, TL1Result, TransportMap1D,
                               deviation_envelope, quantile_map_1d,
                               sup_deviation, tl1_distance)
from glcloud.minimize import (FidelityTerm, RelaxParams, RelaxResult,
                              SeedConstraint, min_cut_binary, phase_width,
                              relax_minimize, round_labels)
from glcloud.ratelab import (RateConfig, RateReport, constant_V, mc_bias,
                             mc_mse, single_pair_mean)
