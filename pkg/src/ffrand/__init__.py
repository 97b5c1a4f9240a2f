"""Finite-field random matrices: exact arithmetic, Fourier tools, and experiments."""

from .errors import BudgetExceededError, DegenerateError, FfrandError, FieldMismatchError, MeasureError
from .field import (AdditiveSubgroup, FieldElement, FieldSpec, char_value, enumerate_additive_subgroups,
                    field_of_order, make_field, trace)
from .measures import (GAMMA, Measure, SpectrumReport, alpha_density_by_subgroups, bernoulli, fourier,
                       make_measure, point_mass, random_dense_measure, spec_set, spec_sumset_check,
                       swap_measure, uniform, verify_swap_properties)
from .linalg import (MatrixFq, Subspace, VectorFq, annihilator, contains, determinant,
                     independence_bound_check, membership_probability, odlyzko_check, rank,
                     sample_matrix, sample_vector, span, support)
from .lo import (LevelSetReport, SubspaceClass, WalkDistribution, WeightVector, classify_subspace,
                 combinatorial_codimension, dot_distribution, level_set_T, lo_bound_report, psi_table,
                 subgroup_average_check, swap_comparison, t_sumset_check)
from .additive import cosine_check, iterated_kneser_check, kneser_check, sumset, sym
from .experiments import (ExperimentConfig, ExperimentReport, column_exposure_profile, det_limit,
                          exact_det_distribution, exact_singularity, finite_product, limit_product,
                          mc_det_distribution, mc_singularity)
from .report import TOOL_VERSION as __version__
