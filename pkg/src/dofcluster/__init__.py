"""dofcluster: degree-of-freedom cluster detection and local flux
redistribution for networked systems, with a DC-microgrid simulator.

The dof of a cluster measures how many independent internal directions its
reference values can move without changing anything an external node sees;
the greedy detector grows a cluster around an overloaded node until a
containment-constrained re-optimization becomes feasible.
"""

from ._backend import active_backend, compiled_available
from .clustering import (
    ExplorationState,
    GreedyResult,
    KstepsResult,
    TraceStep,
    candidate_set,
    dof_greedy_cluster,
    grow_step,
    initialize_exploration,
    ksteps_cluster,
    ksteps_greedy,
)
from .dof import (
    DofReport,
    DominanceReport,
    check_taussky_conditions,
    cluster_dof,
    exact_determinant,
    exact_rank,
    rank_difference,
    spectral_positivity_check,
)
from .errors import (
    AssumptionError,
    ClusterSearchExhausted,
    GraphError,
    ScenarioError,
    SimulationAbort,
    SolverError,
    SpectralCheckError,
)
from .graph import (
    BlockView,
    Cluster,
    Graph,
    Partition,
    block_view,
    build_graph,
    degree_deficiency_decomposition,
    induced_subgraph,
    is_connected,
    laplacian,
    read_graph_file,
    validate_partition,
)
from .intmatrix import IntMatrix
from .redistribution import (
    DutyCenteringCost,
    Equilibrium,
    RedistributionProblem,
    RedistributionSolution,
    ReferenceDeviationCost,
    SteadyStateNetwork,
    assemble_problem,
    microgrid_feasibility_oracle,
    solve,
    steady_state_map,
)
from .scenario import Scenario, bundled_scenario_path, load_scenario
from .sim import (
    AVAILABILITY_MEASURES,
    ConverterParams,
    ControlGains,
    NodeState,
    SecondaryEvent,
    SimState,
    TimeSeries,
    derivative,
    duty_balance_availability,
    initial_state,
    primary_control,
    run_scenario,
    step,
)

__version__ = "0.1.0"
