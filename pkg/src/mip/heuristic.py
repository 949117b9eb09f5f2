"""Short-horizon intervention heuristic with a fixed style.

The rule looks one step ahead on the robot's believed terrain: intervene when
the announced move lands on a believed hazard, or when it loses more than
``k`` steps of Manhattan progress against the best believed-safe neighbor.
After intervening once it cedes the next turn to the user (a persistence
escape hatch), and it never touches a detect action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import (
    DELTAS,
    Explanation,
    HumanAction,
    NO_ASSIST,
    REASON_HAZARD,
    REASON_LONGER_PATH,
    RobotAction,
    RobotKind,
    EXPLAIN_KINDS,
    TAKE_CONTROL_KINDS,
    WorldState,
)
from .humans import MOVES, NavView
from .planner import robot_replacement_move


@dataclass(frozen=True)
class HeuristicConfig:
    kind: RobotKind = RobotKind.INTERRUPT  # intervention style, fixed per episode
    k: int = 1  # tolerated path-length slack, in steps
    nbr_of_landing: bool = False  # compare against neighbors of the landing cell
    # instead of the current cell (alternative reading of the detour rule)

    def __post_init__(self):
        if self.kind == RobotKind.NO_ASSIST:
            raise ValueError("heuristic style must be an intervention kind")
        if self.k < 0:
            raise ValueError("k must be >= 0")


def goal_dist(cell: tuple[int, int], goal: tuple[int, int]) -> int:
    """Manhattan distance."""
    return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])


def heuristic_decide(nav: NavView, holes: np.ndarray, state: WorldState,
                     human: HumanAction, prev_interrupt: bool,
                     cfg: HeuristicConfig) -> tuple[RobotAction, bool]:
    """One heuristic decision. Returns (robot action, new prev_interrupt flag).

    The flag is set exactly when this call intervenes; a set flag forces a
    no-assist (cede to persistence) and clears itself.
    """
    if human == HumanAction.DETECT or prev_interrupt:
        return NO_ASSIST, False

    pos = state.pos
    dr, dc = DELTAS[human]
    target = (pos[0] + dr, pos[1] + dc)
    in_bounds = 0 <= target[0] < nav.size and 0 <= target[1] < nav.size
    landing = target if in_bounds else pos

    hazard = in_bounds and not nav.passable[target]
    intervene = hazard
    if not intervene:
        base = landing if cfg.nbr_of_landing else pos
        best_nbr = None
        for mv in MOVES:
            mr, mc = DELTAS[mv]
            nb = (base[0] + mr, base[1] + mc)
            if not (0 <= nb[0] < nav.size and 0 <= nb[1] < nav.size):
                continue
            if not nav.passable[nb]:
                continue
            d = goal_dist(nb, nav.goal)
            if best_nbr is None or d < best_nbr:
                best_nbr = d
        if best_nbr is not None and goal_dist(landing, nav.goal) - best_nbr > cfg.k:
            intervene = True

    if not intervene:
        return NO_ASSIST, False

    move = None
    if cfg.kind in TAKE_CONTROL_KINDS:
        move = robot_replacement_move(nav, pos, holes=holes)
    explain = None
    if cfg.kind in EXPLAIN_KINDS:
        cell = target if in_bounds else pos
        explain = Explanation(REASON_HAZARD if hazard else REASON_LONGER_PATH, cell)
    return RobotAction(cfg.kind, move, explain), True
