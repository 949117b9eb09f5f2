"""Mixed-initiative planning on a partially observable frozen lake.

The pieces: a deterministic grid domain with asymmetric observability
(:mod:`mip.domain`), beta-particle compliance beliefs (:mod:`mip.belief`),
an online Monte-Carlo intervention planner with ablation and adversarial
variants (:mod:`mip.planner`), a short-horizon heuristic baseline
(:mod:`mip.heuristic`), simulated users (:mod:`mip.humans`), a seeded
benchmark harness (:mod:`mip.harness`), and a turn-based game HTTP service
(:mod:`mip.service`).
"""

from .belief import BeliefSet, BetaParticle, Outcome, init_belief, update_particle
from .domain import (
    CellKind,
    GridMap,
    HumanAction,
    IllegalAction,
    MapSyntaxError,
    MapValidationError,
    RewardParams,
    RobotAction,
    RobotKind,
    StepEvents,
    ViewCell,
    WorldState,
    agent_view,
    benchmark_params,
    game_score,
    initial_state,
    load_map,
    step_world,
    validate_map,
)
from .harness import EpisodeRecord, ExperimentConfig, run_benchmark, run_episode, summarize
from .heuristic import HeuristicConfig, goal_dist, heuristic_decide
from .humans import HumanProfile, SimulatedHuman, astar_next, default_population
from .planner import Mode, Planner, SearchConfig

__version__ = "0.1.0"
