"""Online distributed estimation over directed networks.

Library plus CLI for synchronized dual averaging with adaptive exponential
link re-weighting: graph generators, stochastic-matrix diagnostics, the
allocation (expert-weighting) layer, the optimization engine, a sensor
estimation scenario, topology schedules, regret metrics, and a seeded
experiment driver.
"""
import os as _os

# Numerical kernels are pinned to one BLAS thread so runs are bit-identical
# regardless of the host's thread settings. Sweeps parallelize across cells
# (processes), not inside the linear algebra.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

from .experiment import VERSION as __version__  # noqa: E402

from .graphs import (  # noqa: E402
    GraphParameterError,
    GenerationError,
    WeightedDigraph,
    GraphFamilySpec,
    generate,
    distances,
    is_strongly_connected,
    union_graph,
    laplacian,
    save_edge_list,
    load_edge_list,
)
from .stochastic import (  # noqa: E402
    StochasticityError,
    StructureError,
    ConvergenceError,
    validate_stochastic,
    ergodic_coefficient,
    BackwardProduct,
    backward_product,
    is_scrambling,
    stationary_vector,
    row_agreement_gap,
    empirical_pi,
    nu_fixed,
    nu_switching,
    gamma_estimate,
    consensus_gap,
    save_matrix_csv,
    load_matrix_csv,
)
from .allocation import (  # noqa: E402
    AllocationError,
    AllocatorState,
    new_allocator,
    update_weights,
    distribution,
    assemble_comm_matrix,
    allocation_regret,
    allocation_regret_bound,
    hedge_beta,
    WeightBank,
)
from .engine import (  # noqa: E402
    EngineError,
    FeasibleSet,
    project,
    StepSchedule,
    AgentState,
    dwda_round,
    running_average,
    check_mixing_convention,
    CentralReference,
    central_reference,
    deviation,
)
from .estimation import (  # noqa: E402
    NOISE_FAMILIES,
    ScenarioError,
    SensorModel,
    ScenarioParams,
    sample_noise,
    observe,
    local_cost,
    local_subgradient,
    lipschitz_constant,
    prox_radius,
    loss_ceiling,
    best_fixed,
    ObservationBatch,
    make_observation_batch,
)
from .schedules import (  # noqa: E402
    MODES,
    ScheduleError,
    TopologySchedule,
    fixed_schedule,
    partition_schedule,
    random_drop_schedule,
    jam_isolation_schedule,
    validate_schedule,
)
from .metrics import (  # noqa: E402
    MetricsError,
    BoundInputs,
    regret_coefficient,
    regret_bound,
    regret_series,
    network_error_bound,
    deviation_series,
    closed_form_deviation_bound,
    gamma_closed_form_bound,
)
from .experiment import (  # noqa: E402
    ConfigError,
    RunAbort,
    ExperimentConfig,
    PRESETS,
    config_for_preset,
    load_config,
    build_graph,
    build_schedule,
    RunResult,
    run,
    prefix_regret,
    graph_stats_report,
    bounds_report,
    sweep,
    write_run_outputs,
)
