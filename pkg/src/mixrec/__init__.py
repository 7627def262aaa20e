"""Query-based support recovery for mixtures of sparse linear models."""

from .errors import (
    AllFlipsFailedError,
    CffDeficiencyError,
    ConfigError,
    ConstructionError,
    EnumerationBudgetExceededError,
    InconsistencyError,
    MixrecError,
    ModelMismatchError,
    NegativeCountError,
    NoDecompositionError,
    RankDeficientError,
    ReconstructionMismatchError,
    RecoveryFailure,
    StuckError,
)
from .ground_truth import (
    is_flip_independent,
    kruskal_rank,
    minimal_p,
    occ_bruteforce,
    supports_equal_up_to_permutation,
)
from .harness import ExperimentConfig, run_experiment, sweep
from .model import (
    GeneratorSpec,
    MixtureInstance,
    SupportMatrix,
    generate_instance,
    support_matrix,
    union_support,
)
from .nzcount import NzParamsMlr, nzcount_mlc, nzcount_mlr, phi1, phi2
from .occ_engine import OccParams, OccTable, build_occ_table
from .oracle import MLC, MLR, OracleHandle, SnrReport, snr_report
from .recovery import (
    RecoveredSupports,
    Strategy,
    parse_strategy,
    recover,
    recover_flip_independent,
    recover_kruskal,
    recover_p_identifiable,
)
from .set_families import (
    LazyCff,
    QueryMatrixBundle,
    SetFamily,
    build_cff,
    build_ruff,
    build_verified_ruff,
    to_query_bundle,
    verify_cff,
    verify_ruff,
)
from .tensor import (
    CpResult,
    SymmetricTensor,
    bruteforce_cp,
    build_occ_tensor_order3,
    build_occ_tensor_orderw,
    jennrich,
)

__version__ = "0.1.0"
