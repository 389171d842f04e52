"""Exact Bayesian selection of minimally complex spin models for binary data.

The library finds the most biased complete set of independent spin
operators for a binary dataset, partitions it into independent complete
blocks by exact evidence maximization (exhaustively or by hierarchical
merging), fits the winning model without any parameter search, and samples
new configurations from it. Enumeration of the model families involved is
available in closed form.
"""

from __future__ import annotations

from .basis import (
    Basis,
    all_operator_biases,
    basis_from_operators,
    best_im_exhaustive,
    best_im_heuristic,
    bias_entropy,
    identity_basis,
    im_log_likelihood,
    load_basis,
    save_basis,
)
from .counting import (
    bell,
    count_icc,
    count_icc_all,
    count_im,
    count_im_all,
    count_mcm_all,
    count_mcm_class,
    count_mcm_star,
    integer_partitions,
    pairwise_model_count,
)
from .data import (
    BlockCounts,
    Dataset,
    load_dataset,
    load_relabel,
    operator_bias,
    operator_biases,
    project_counts,
    save_dataset,
    state_to_string,
    transform_dataset,
)
from .errors import (
    BoundaryModelError,
    CapExceededError,
    DatasetFormatError,
    DimensionMismatchError,
    SingularMatrixError,
)
from .evidence import (
    Block,
    EvidenceReport,
    McmStructure,
    couplings_from_probs,
    first_order_complexity,
    fit_probs,
    icc_log_evidence,
    mcm_log_evidence,
    mcm_max_log_likelihood,
    probs_from_couplings,
)
from .gf2 import (
    GaugeTransform,
    Gf2Span,
    Operator,
    complete_basis,
    evaluate,
    gf2_rank,
    invert_mod2,
    op_product,
    transform_operator,
)
from .partitions import (
    MergeStep,
    MergeTrace,
    best_mcm_exhaustive,
    best_mcm_greedy,
    enumerate_partitions,
    restricted_growth_strings,
)
from .report import (
    factor_graph_dot,
    file_sha256,
    read_report,
    verify_report,
    write_report,
)
from .sampling import FittedMcm, fit_mcm, generate_synthetic, sample_mcm

__version__ = "0.1.0"
