"""K4-free random graph process: simulator, triple ledgers, and verification lab."""

from .process import (
    AfterScaledTime,
    AfterSteps,
    ClosureWitness,
    PairClass,
    ProcessState,
    ProcessTerminated,
    RunSummary,
    StopRule,
    Termination,
    export_edges,
    init,
    is_closed_oracle,
    run,
)
from .intervals import PmInterval, contains, product_envelope, reciprocal_envelope
from .trajectory import EnvelopeMonitor, EnvelopeReport, ParamSet, error_envelope, make_params, open_fraction
from .triples import (
    BadEventStatus,
    Configuration,
    LedgerCSV,
    TripleTracker,
    attach,
    t_u_count,
    xi_quadruple_stats,
)
from .sigma_star import SigmaStarResult, build_sigma_star, verify_neighborhood_bounds
from .dem import (
    DemVariableSpec,
    MartingaleAudit,
    builtin_triple_specs,
    hoeffding_bound,
    transform_increments,
    validate_spec,
)
from .analysis import (
    Certificate,
    SweepRecord,
    certify_k4_free,
    fit_exponent,
    independence_lower,
    triangle_coverage,
)

__version__ = "0.1.0"
