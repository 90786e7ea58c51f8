"""Method-of-moments tooling for exchangeable random graphs.

Graph storage and sampling, exact pattern/wheel counting with normalized
moment estimates, theoretical moments for block models and gridded
graphons, block-model parameter recovery, higher-order degree
diagnostics, and a vertex-subsampling bootstrap.
"""

from .blockfit import (
    FitConfig,
    FitResult,
    align_stages,
    atoms_from_moments,
    fit_block_model,
    nls_refine,
    power_moments,
    recover_S,
    tau_forward,
)
from .bootstrap import BootstrapResult, HubCountCache, bootstrap_variance
from .counting import (
    count_induced,
    count_noninduced,
    supergraphs_on_same_vertices,
    triangle_count,
    wedge_count,
)
from .degrees import (
    DegreeProfile,
    ThetaProfile,
    degree_moment_approx,
    falling_factorial,
    joint_coupling_error,
    m_degrees,
    mallows2_1d,
    theta_profile,
)
from .errors import (
    AtomSeparationError,
    BudgetExceededError,
    CapabilityError,
    CountOverflowError,
    DomainError,
    GraphFormatError,
    GraphMomentsError,
    HankelIllPosedError,
    IdentifiabilityError,
    InputError,
    InvalidModelError,
    MomentProblemError,
    NormalizationError,
    NumericalError,
    StageInconsistencyError,
)
from .graph import (
    Graph,
    average_degree,
    lambda_hat,
    load_edge_list,
    rho_hat,
    write_edge_list,
)
from .hubs import wheel_counts_per_hub, wheel_noninduced_count
from .moments import (
    MomentEntry,
    MomentTable,
    moment_table,
    theory_table,
    wheel_moment_estimates,
)
from .models import (
    BlockModel,
    Graphon,
    SampleOutput,
    blockmodel_to_graphon,
    erdos_renyi_model,
    load_model,
    sample_block_model,
    sample_graphon,
    save_model,
)
from .patterns import (
    PatternGraph,
    WheelSpec,
    automorphism_count,
    count_isomorphism_classes,
    hub_multiplicity,
    parse_pattern_name,
    wheel_automorphism_count,
    wheel_isomorphism_count,
    wheel_rooted_count,
    wheel_to_pattern,
)
from .theory import (
    OperatorIterates,
    iterate_operator_block,
    iterate_operator_graphon,
    tau_block,
    tau_graphon,
    tau_graphon_refined,
    tau_triangle_block,
    tau_triangle_graphon,
)

__version__ = "0.1.0"

__all__ = [
    "AtomSeparationError",
    "BlockModel",
    "BootstrapResult",
    "BudgetExceededError",
    "CapabilityError",
    "CountOverflowError",
    "DegreeProfile",
    "DomainError",
    "FitConfig",
    "FitResult",
    "Graph",
    "GraphFormatError",
    "GraphMomentsError",
    "Graphon",
    "HankelIllPosedError",
    "HubCountCache",
    "IdentifiabilityError",
    "InputError",
    "InvalidModelError",
    "MomentEntry",
    "MomentProblemError",
    "MomentTable",
    "NormalizationError",
    "NumericalError",
    "OperatorIterates",
    "PatternGraph",
    "SampleOutput",
    "StageInconsistencyError",
    "ThetaProfile",
    "WheelSpec",
    "align_stages",
    "atoms_from_moments",
    "automorphism_count",
    "average_degree",
    "blockmodel_to_graphon",
    "bootstrap_variance",
    "count_induced",
    "count_isomorphism_classes",
    "count_noninduced",
    "degree_moment_approx",
    "erdos_renyi_model",
    "falling_factorial",
    "fit_block_model",
    "hub_multiplicity",
    "iterate_operator_block",
    "iterate_operator_graphon",
    "joint_coupling_error",
    "lambda_hat",
    "load_edge_list",
    "load_model",
    "m_degrees",
    "mallows2_1d",
    "moment_table",
    "nls_refine",
    "parse_pattern_name",
    "power_moments",
    "recover_S",
    "rho_hat",
    "sample_block_model",
    "sample_graphon",
    "save_model",
    "supergraphs_on_same_vertices",
    "tau_block",
    "tau_forward",
    "tau_graphon",
    "tau_graphon_refined",
    "tau_triangle_block",
    "tau_triangle_graphon",
    "theory_table",
    "theta_profile",
    "triangle_count",
    "wedge_count",
    "wheel_automorphism_count",
    "wheel_counts_per_hub",
    "wheel_noninduced_count",
    "wheel_isomorphism_count",
    "wheel_moment_estimates",
    "wheel_rooted_count",
    "wheel_to_pattern",
    "write_edge_list",
]
