"""Counting approximate dot-product tree configurations in discrete fractal measures."""

__version__ = "0.1.0"

from .counting import CountResult, edge_sum, embedding_count, enumerate_embeddings, naive_count, tree_dp_count
from .errors import *  # noqa: F401,F403
from .kernels import GapSpec, kernel_eval
from .measures import (
    DiscreteMeasure,
    cantor_1d,
    cantor_product,
    point_measure,
    regularity_check,
    shift_to_box,
    uniform_cube_sample,
)
from .scaling import (
    covering_number,
    dim_estimate,
    lambda_measure_lower,
    lower_bound_check,
    minkowski_dim_embedding,
    packing_number,
    scaling_series,
    select_interval,
    upper_bound_check,
)
from .spectral import frostman_fourier_slope, windowed_fourier_mass
from .trees import Tree, enumerate_small_trees, is_isomorphic, path_tree, rip_leaf, star_tree, symmetric_cover, validate_tree
