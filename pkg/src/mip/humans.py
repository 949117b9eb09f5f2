"""Simulated humans: epsilon-greedy A* navigators with a compliance model.

A simulated user plans on its own believed-safe picture of the board (its
error-prone view, fog, plus any cells it has paid to sense) and never touches
the true terrain. Expertise ``psi`` is the probability of playing the greedy
A* move instead of a random one. Compliance ``theta`` is the probability of
accepting a robot intervention; it can stay fixed or drift with the
interaction (preference-driven or outcome-driven users).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from random import Random
from typing import Callable, Iterable, Optional

import numpy as np

from .domain import (
    CellKind,
    DELTAS,
    GridMap,
    HumanAction,
    MOVES,
    OPPOSITE,
    RobotAction,
    RobotKind,
    TAKE_CONTROL_KINDS,
    ViewCell,
    WorldState,
)

THETA_MIN, THETA_MAX = 0.01, 0.99

# Compliance priors for populations of simulated users.
THETA_PRIORS = ((20, 80), (40, 60), (50, 50), (60, 40), (80, 20))


@dataclass
class NavView:
    """An agent's believed-safe traversability of the board. No ground truth inside.

    ``passable`` excludes holes and believed-slippery cells; unknown cells are
    treated as safe. Sensor readings override belief before this is built.
    """

    size: int
    passable: np.ndarray  # bool (size, size)
    goal: tuple[int, int]
    _dist: dict = field(default_factory=dict, repr=False)

    def path_len(self, src: tuple[int, int]) -> float:
        return _astar_len(self, src)


def _view_passable(grid: GridMap, view: np.ndarray, revealed,
                   fog: Optional[np.ndarray]) -> np.ndarray:
    passable = np.ones((grid.size, grid.size), dtype=bool)
    for r in range(grid.size):
        for c in range(grid.size):
            kind = grid.true_grid[r, c]
            if kind == CellKind.HOLE:
                passable[r, c] = False
            elif (r, c) in revealed:
                passable[r, c] = kind != CellKind.SLIPPERY
            elif fog is not None and fog[r, c]:
                passable[r, c] = True  # unknown, assumed safe
            else:
                passable[r, c] = view[r, c] != ViewCell.SLIPPERY
    return passable


def human_nav_view(grid: GridMap, revealed: frozenset = frozenset()) -> NavView:
    return NavView(grid.size, _view_passable(grid, grid.human_view, revealed, grid.fog),
                   grid.goal)


def robot_nav_view(grid: GridMap, revealed: frozenset = frozenset()) -> NavView:
    return NavView(grid.size, _view_passable(grid, grid.robot_view, revealed, None),
                   grid.goal)


def _astar_len(view: NavView, src: tuple[int, int]) -> float:
    """Shortest believed-safe path length src -> goal (A*, Manhattan heuristic)."""
    goal = view.goal
    if src == goal:
        return 0.0
    memo = view._dist
    hit = memo.get(src)
    if hit is not None:
        return hit
    size = view.size
    passable = view.passable
    gr, gc = goal
    g = {src: 0}
    heap = [(abs(src[0] - gr) + abs(src[1] - gc), 0, src)]
    closed = set()
    found = math.inf
    while heap:
        _, gcur, cell = heapq.heappop(heap)
        if cell == goal:
            found = float(gcur)
            break
        if cell in closed:
            continue
        closed.add(cell)
        r, c = cell
        for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if not (0 <= nb[0] < size and 0 <= nb[1] < size) or not passable[nb]:
                continue
            ng = gcur + 1
            if ng < g.get(nb, 1 << 30):
                g[nb] = ng
                heapq.heappush(heap, (ng + abs(nb[0] - gr) + abs(nb[1] - gc), ng, nb))
    memo[src] = found
    return found


def astar_next(view: NavView, pos: tuple[int, int],
               exclude: Iterable[HumanAction] = ()) -> Optional[HumanAction]:
    """First step of a minimal believed-safe path to the goal, or None.

    Ties between equally short directions break in canonical move order
    (up, down, left, right). ``exclude`` removes candidate directions.
    """
    excl = frozenset(exclude)
    best = None
    best_cost = math.inf
    for mv in MOVES:
        if mv in excl:
            continue
        dr, dc = DELTAS[mv]
        nb = (pos[0] + dr, pos[1] + dc)
        if not (0 <= nb[0] < view.size and 0 <= nb[1] < view.size) or not view.passable[nb]:
            continue
        cost = 1.0 + _astar_len(view, nb)
        if cost < best_cost:
            best, best_cost = mv, cost
    return best if best is not None and math.isfinite(best_cost) else None


_LEGAL_TABLES: dict[int, dict] = {}


def legal_moves(pos: tuple[int, int], size: int) -> tuple[HumanAction, ...]:
    """In-grid movement directions from a cell, canonical order (cached)."""
    table = _LEGAL_TABLES.get(size)
    if table is None:
        table = {}
        for r in range(size):
            for c in range(size):
                table[(r, c)] = tuple(
                    mv for mv in MOVES
                    if 0 <= r + DELTAS[mv][0] < size and 0 <= c + DELTAS[mv][1] < size)
        _LEGAL_TABLES[size] = table
    return table[pos]


class Dynamics(str, Enum):
    STATIC = "static"
    PREFERENCE = "preference"  # dislikes take-control, likes explanations
    OUTCOME = "outcome"  # trusts after progress, distrusts after falls


class HumanEvent(Enum):
    TOOK_CONTROL = "took_control"
    EXPLAINED = "explained"
    SUCCESS_STEP = "success_step"  # moved closer to the goal without falling
    FELL = "fell"


@dataclass(frozen=True)
class HumanProfile:
    id: str
    psi: float  # expertise: probability of the greedy move
    theta: Optional[float] = None  # fixed compliance, or None to draw from prior
    theta_prior: Optional[tuple[float, float]] = None
    dynamics: Dynamics = Dynamics.STATIC
    delta: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError("psi must be in [0, 1]")
        if self.theta is None and self.theta_prior is None:
            raise ValueError("profile needs theta or a theta prior")

    def draw_theta(self, rng: Random) -> float:
        if self.theta is not None:
            return min(THETA_MAX, max(THETA_MIN, self.theta))
        a, b = self.theta_prior
        return min(THETA_MAX, max(THETA_MIN, rng.betavariate(a, b)))


def update_theta(theta: float, dynamics: Dynamics, delta: float,
                 event: HumanEvent) -> float:
    """Drift compliance after an interaction event; static users never move."""
    if dynamics == Dynamics.STATIC:
        return theta
    if dynamics == Dynamics.PREFERENCE:
        if event == HumanEvent.TOOK_CONTROL:
            theta -= delta
        elif event == HumanEvent.EXPLAINED:
            theta += delta
    elif dynamics == Dynamics.OUTCOME:
        if event == HumanEvent.SUCCESS_STEP:
            theta += delta / 5.0
        elif event == HumanEvent.FELL:
            theta -= delta
    return min(THETA_MAX, max(THETA_MIN, theta))


def human_act(theta: float, psi: float, view: NavView, state: WorldState,
              last_robot: Optional[RobotAction], last_pending: Optional[HumanAction],
              oppose_streak: int, rng: Random) -> tuple[HumanAction, bool]:
    """One simulated-human decision. Returns (action, opposed_this_turn).

    After an intervention the user complies with probability theta (re-plans
    around the blocked or overridden move, or detects when boxed in).
    Opposition is persistent first (repeat the blocked move), then escalates
    to a coin flip between detecting and moving the opposite way. Without an
    intervention the user plays epsilon-greedy A* with epsilon = 1 - psi.
    """
    pos = state.pos
    moves = legal_moves(pos, view.size)

    if last_robot is not None and last_robot.is_intervention and last_pending is not None:
        if rng.random() < theta:
            excl = {last_pending}
            if last_robot.kind in TAKE_CONTROL_KINDS:
                excl.add(OPPOSITE[last_robot.move])
            mv = astar_next(view, pos, exclude=excl)
            if mv is not None:
                return mv, False
            if state.detect_allowed:
                return HumanAction.DETECT, False
            fallback = [m for m in moves if m not in excl] or moves
            return fallback[rng.randrange(len(fallback))], False
        if oppose_streak == 0:
            return last_pending, True
        if state.detect_allowed and rng.random() < 0.5:
            return HumanAction.DETECT, True
        return OPPOSITE[last_pending], True

    if rng.random() < 1.0 - psi:
        return moves[rng.randrange(len(moves))], False
    mv = astar_next(view, pos)
    if mv is not None:
        return mv, False
    if state.detect_allowed:
        return HumanAction.DETECT, False
    return moves[rng.randrange(len(moves))], False


class SimulatedHuman:
    """Stateful wrapper: owns theta, the opposition streak, and a view cache.

    The view is supplied by a provider callback so this class never sees the
    map itself, only the believed-safe picture derived from the human view.
    """

    def __init__(self, profile: HumanProfile,
                 view_provider: Callable[[frozenset], NavView], rng: Random):
        self.profile = profile
        self.theta = profile.draw_theta(rng)
        self.theta0 = self.theta
        self.rng = rng
        self._provider = view_provider
        self._view: Optional[NavView] = None
        self._view_revealed: Optional[frozenset] = None
        self._oppose_streak = 0

    def _view_for(self, revealed: frozenset) -> NavView:
        if self._view is None or self._view_revealed != revealed:
            self._view = self._provider(revealed)
            self._view_revealed = revealed
        return self._view

    def act(self, state: WorldState, last_robot: Optional[RobotAction],
            last_pending: Optional[HumanAction]) -> HumanAction:
        view = self._view_for(state.revealed)
        action, opposed = human_act(self.theta, self.profile.psi, view, state,
                                    last_robot, last_pending, self._oppose_streak,
                                    self.rng)
        self._oppose_streak = self._oppose_streak + 1 if opposed else 0
        return action

    def apply_event(self, event: HumanEvent) -> None:
        self.theta = update_theta(self.theta, self.profile.dynamics,
                                  self.profile.delta, event)


def default_population() -> list[HumanProfile]:
    """Four simulated users spanning the expertise/compliance ranges.

    Two low-trust members reflect that interventions are frequently resisted;
    expertise covers novice to expert, plus one user whose compliance drifts
    with outcomes at the fixed mid expertise.
    """
    return [
        HumanProfile("novice-cautious", psi=0.4, theta_prior=(40, 60)),
        HumanProfile("mid-skeptic", psi=0.7, theta_prior=(20, 80)),
        HumanProfile("expert-trusting", psi=0.9, theta_prior=(80, 20)),
        HumanProfile("adaptive-moderate", psi=0.7, theta_prior=(50, 50),
                     dynamics=Dynamics.OUTCOME),
    ]


def profile_from_spec(spec: dict) -> HumanProfile:
    """Build a profile from a population-spec entry (JSON-friendly dict)."""
    prior = spec.get("theta_prior")
    return HumanProfile(
        id=spec.get("id", "custom"),
        psi=float(spec["psi"]),
        theta=spec.get("theta"),
        theta_prior=tuple(prior) if prior else None,
        dynamics=Dynamics(spec.get("dynamics", "static")),
        delta=float(spec.get("delta", 0.05)),
    )
