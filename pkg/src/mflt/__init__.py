"""Mean-field lattice trees: exact combinatorics and scaling-limit checks."""

__version__ = "0.1.0"

from .plane_tree import (  # noqa: F401
    ExactWeight,
    OffspringModel,
    PlaneTree,
    enumerate_plane_trees,
    sample_conditioned_tree,
    size_probability_exact,
    tree_probability,
)
from .embedding import (  # noqa: F401
    Embedding,
    LatticeDistribution,
    PointMeasure,
    configuration_probability,
    empirical_ise_measure,
    moment_sum_exact,
    sample_embedded_tree,
    two_point_coefficient_exact,
)
from .shapes import (  # noqa: F401
    Backbone,
    Shape,
    Subshape,
    backbone,
    compatible,
    enumerate_shapes,
    enumerate_subshapes,
)
from .genfun import (  # noqa: F401
    StepTransform,
    coeff_tree_power,
    m_point_hat,
    one_point,
    t_hat_coefficient,
    t_hat_coefficient_fixed_s,
    two_point_hat,
)
from .ise import A_hat, ShapeKAssignment, a_density, a_hat, moment_char  # noqa: F401
from .wsaw import (  # noqa: F401
    IntersectionCount,
    LatticeTree,
    enumerate_lattice_trees,
    general_offspring_limit_weight,
    intersection_count,
    nu,
    partition_function,
    q_mass_of_lattice_tree,
)
from .scaling import (  # noqa: F401
    degenerate_decomposition,
    lemma41_check,
    lemma42_check,
    moment_convergence_mc,
    stirling_check,
)
