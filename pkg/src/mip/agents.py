"""Robot agent registry: string ids to per-episode agent instances.

Agents expose one method, ``decide(state, pending) -> RobotAction``, called
once per turn with the real world state and the human's announced action.
Stateful agents (the planners, the heuristic's cede flag) update themselves
between calls from the actions they see.
"""

from __future__ import annotations

from random import Random
from typing import Optional, Protocol

from .domain import (
    CellKind,
    DELTAS,
    GridMap,
    HumanAction,
    NO_ASSIST,
    RewardParams,
    RobotAction,
    RobotKind,
)
from .heuristic import HeuristicConfig, heuristic_decide
from .humans import robot_nav_view
from .planner import Mode, Planner, SearchConfig
from .domain import WorldState


class Agent(Protocol):
    id: str
    n_sims: Optional[int]

    def decide(self, state: WorldState, pending: HumanAction) -> RobotAction: ...


class NoAssistAgent:
    n_sims = None

    def __init__(self):
        self.id = "no-assist"

    def decide(self, state, pending) -> RobotAction:
        return NO_ASSIST


class HeuristicAgent:
    n_sims = None

    def __init__(self, agent_id: str, grid: GridMap, cfg: HeuristicConfig):
        self.id = agent_id
        self.grid = grid
        self.cfg = cfg
        self._holes = grid.true_grid == CellKind.HOLE
        self._prev = False
        self._nav = None
        self._revealed = None

    def decide(self, state, pending) -> RobotAction:
        if self._nav is None or self._revealed != state.revealed:
            self._nav = robot_nav_view(self.grid, state.revealed)
            self._revealed = state.revealed
        action, self._prev = heuristic_decide(self._nav, self._holes, state,
                                              pending, self._prev, self.cfg)
        return action


class PlannerAgent:
    def __init__(self, agent_id: str, planner: Planner):
        self.id = agent_id
        self.planner = planner
        self.n_sims = planner.cfg.n_sims
        self._last: Optional[RobotAction] = None
        self._prev_state: Optional[WorldState] = None
        self._prev_pending: Optional[HumanAction] = None

    def decide(self, state, pending) -> RobotAction:
        if self._last is not None:
            fall_cell = self._fall_cell(state)
            if fall_cell is not None:
                self.planner.note_fall(fall_cell)
            self.planner.advance(self._last, pending)
        action = self.planner.plan(state, pending)
        self._last = action
        self._prev_state = state
        self._prev_pending = pending
        return action

    def _fall_cell(self, state) -> Optional[tuple[int, int]]:
        """Where the last executed move fell, if it did (falls are public)."""
        prev = self._prev_state
        if prev is None or state.falls <= prev.falls:
            return None
        if self._last.kind in (RobotKind.TAKE_CONTROL, RobotKind.TAKE_CONTROL_EXPLAIN):
            executed = self._last.move
        elif self._last.kind == RobotKind.NO_ASSIST and self._prev_pending.is_move:
            executed = self._prev_pending
        else:
            return None
        dr, dc = DELTAS[executed]
        return (prev.pos[0] + dr, prev.pos[1] + dc)


_HEURISTIC_STYLES = {
    "heuristic-interrupt": RobotKind.INTERRUPT,
    "heuristic-interrupt-explain": RobotKind.INTERRUPT_EXPLAIN,
    "heuristic-takecontrol": RobotKind.TAKE_CONTROL,
    "heuristic-takecontrol-explain": RobotKind.TAKE_CONTROL_EXPLAIN,
}
_PLANNER_MODES = {
    "bayes-pomcp": Mode.BAYES,
    "pomcp": Mode.POMCP,
    "adv-bayes-pomcp": Mode.ADVERSARIAL,
}

AGENT_IDS = ("no-assist", *_HEURISTIC_STYLES, *_PLANNER_MODES)


class UnknownAgent(KeyError):
    pass


def make_agent(spec: "str | dict", grid: GridMap, params: RewardParams,
               rng: Random) -> Agent:
    """Instantiate a fresh per-episode agent from an id or a spec dict.

    Dict specs carry the id plus optional overrides: n_sims, ucb_c, gamma,
    eps_plan (planners) or k (heuristics).
    """
    if isinstance(spec, str):
        spec = {"id": spec}
    agent_id = spec.get("id", "")
    if agent_id == "no-assist":
        return NoAssistAgent()
    if agent_id in _HEURISTIC_STYLES:
        cfg = HeuristicConfig(kind=_HEURISTIC_STYLES[agent_id],
                              k=int(spec.get("k", 1)))
        return HeuristicAgent(agent_id, grid, cfg)
    if agent_id in _PLANNER_MODES:
        gamma = float(spec.get("gamma", 0.99))
        horizon = int(spec.get("horizon", 30))
        cfg = SearchConfig(
            gamma=gamma,
            epsilon=gamma ** horizon,
            n_sims=int(spec.get("n_sims", 100)),
            ucb_c=float(spec.get("ucb_c", 30.0)),
            mode=_PLANNER_MODES[agent_id],
            eps_plan=float(spec.get("eps_plan", 0.1)),
            fall_memory=bool(spec.get("fall_memory", True)),
        )
        return PlannerAgent(agent_id, Planner(grid, params, cfg, rng))
    raise UnknownAgent(f"unknown agent id {agent_id!r}")
