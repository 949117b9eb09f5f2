"""Frozen lake mixed-initiative domain.

A human teleoperates an agent across an N x N frozen lake from a start cell
to a goal cell. Some cells are holes or slippery patches; stepping on either
causes a fall and a reset to the start. Neither teammate sees the terrain
perfectly: each has its own error-prone slipperiness view, and fog hides part
of the board from the human. The robot watches each announced human move and
may let it through, interrupt it, or take control and substitute its own move.

This module owns the static map format, per-agent observability, the joint
(human action, robot action) step dynamics, and score accounting. Everything
here is deterministic and value-semantic: no hidden state, no RNG.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Optional, Sequence

import numpy as np


class DomainError(Exception):
    """Base class for domain-level failures."""


class IllegalAction(DomainError):
    """An action that violates the rules (detect with no budget, acting on a finished episode)."""


class MapSyntaxError(DomainError):
    """The map document is not well-formed."""


class MapValidationError(DomainError):
    """The map document parsed but violates a map invariant."""

    def __init__(self, violations: Sequence[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class CellKind(IntEnum):
    FREE = 0
    HOLE = 1
    SLIPPERY = 2
    GOAL = 3
    START = 4


class ViewCell(IntEnum):
    """What an agent believes about a cell's slipperiness."""

    SAFE = 0
    SLIPPERY = 1
    UNKNOWN = 2


class HumanAction(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3
    DETECT = 4

    @property
    def is_move(self) -> bool:
        return self is not HumanAction.DETECT


MOVES = (HumanAction.UP, HumanAction.DOWN, HumanAction.LEFT, HumanAction.RIGHT)
DELTAS = {
    HumanAction.UP: (-1, 0),
    HumanAction.DOWN: (1, 0),
    HumanAction.LEFT: (0, -1),
    HumanAction.RIGHT: (0, 1),
}
_DELTA_BY_INT = ((-1, 0), (1, 0), (0, -1), (0, 1))  # indexed by move value
OPPOSITE = {
    HumanAction.UP: HumanAction.DOWN,
    HumanAction.DOWN: HumanAction.UP,
    HumanAction.LEFT: HumanAction.RIGHT,
    HumanAction.RIGHT: HumanAction.LEFT,
}
OPPOSITE_BY_INT = (HumanAction.DOWN, HumanAction.UP, HumanAction.RIGHT, HumanAction.LEFT)

_NEIGHBOR_TABLES: dict[int, dict] = {}


def neighbor_table(size: int) -> dict:
    """Cached map cell -> tuple of in-grid orthogonal neighbors."""
    table = _NEIGHBOR_TABLES.get(size)
    if table is None:
        table = {}
        for r in range(size):
            for c in range(size):
                table[(r, c)] = tuple(
                    (r + dr, c + dc) for dr, dc in _DELTA_BY_INT
                    if 0 <= r + dr < size and 0 <= c + dc < size)
        _NEIGHBOR_TABLES[size] = table
    return table

_ACTION_NAMES = {a: a.name.lower() for a in HumanAction}
_ACTIONS_BY_NAME = {v: k for k, v in _ACTION_NAMES.items()}


def human_action_name(a: HumanAction) -> str:
    return _ACTION_NAMES[HumanAction(a)]


def human_action_from_name(name: str) -> HumanAction:
    try:
        return _ACTIONS_BY_NAME[name]
    except KeyError:
        raise IllegalAction(f"unknown human action {name!r}") from None


class RobotKind(IntEnum):
    """Robot responses, in canonical tie-break order."""

    NO_ASSIST = 0
    INTERRUPT = 1
    INTERRUPT_EXPLAIN = 2
    TAKE_CONTROL = 3
    TAKE_CONTROL_EXPLAIN = 4


INTERRUPT_KINDS = (RobotKind.INTERRUPT, RobotKind.INTERRUPT_EXPLAIN)
TAKE_CONTROL_KINDS = (RobotKind.TAKE_CONTROL, RobotKind.TAKE_CONTROL_EXPLAIN)
EXPLAIN_KINDS = (RobotKind.INTERRUPT_EXPLAIN, RobotKind.TAKE_CONTROL_EXPLAIN)
INTERVENTION_KINDS = INTERRUPT_KINDS + TAKE_CONTROL_KINDS

REASON_HAZARD = "hazard_ahead"
REASON_LONGER_PATH = "longer_path"


@dataclass(frozen=True)
class Explanation:
    reason: str  # REASON_HAZARD | REASON_LONGER_PATH
    cell: tuple[int, int]

    def __post_init__(self):
        if self.reason not in (REASON_HAZARD, REASON_LONGER_PATH):
            raise ValueError(f"bad explanation reason {self.reason!r}")


@dataclass(frozen=True)
class RobotAction:
    kind: RobotKind
    move: Optional[HumanAction] = None  # required for take-control variants
    explain: Optional[Explanation] = None  # required for explain variants

    def __post_init__(self):
        if self.kind in TAKE_CONTROL_KINDS:
            if self.move is None or not self.move.is_move:
                raise ValueError("take-control requires a concrete replacement move")
        elif self.move is not None:
            raise ValueError(f"{self.kind.name} carries no move")
        if self.kind in EXPLAIN_KINDS and self.explain is None:
            raise ValueError(f"{self.kind.name} requires an explanation")

    @property
    def is_intervention(self) -> bool:
        return self.kind != RobotKind.NO_ASSIST


NO_ASSIST = RobotAction(RobotKind.NO_ASSIST)


@dataclass(frozen=True)
class RewardParams:
    """Score constants: step cost is implicit (1 per step)."""

    max_steps: int = 80
    alpha: int = 10  # fall penalty
    rho: int = 2  # detection cost
    kappa: int = 30  # goal bonus

    def __post_init__(self):
        if min(self.max_steps, self.alpha, self.rho, self.kappa) < 0:
            raise ValueError("reward parameters must be non-negative")


def benchmark_params(size: int) -> RewardParams:
    """Benchmark step caps: 50 on 4x4 boards, 100 on 8x8."""
    return RewardParams(max_steps=50 if size <= 4 else 100)


class WorldState(NamedTuple):
    """The fully observable, dynamic part of an episode.

    A NamedTuple rather than a dataclass: the planner copies these tens of
    thousands of times per move, and tuple construction is what keeps the
    per-move latency budget honest.
    """

    pos: tuple[int, int]
    steps_taken: int = 0
    falls: int = 0
    detections_used: int = 0
    detection_budget: Optional[int] = None  # None = unlimited
    revealed: frozenset = frozenset()
    done: bool = False
    goal_reached: bool = False

    @property
    def detect_allowed(self) -> bool:
        return self.detection_budget is None or self.detections_used < self.detection_budget


# StepEvents bit flags (internal fast path; StepEvents is the public face).
EV_MOVED = 1
EV_BLOCKED = 2
EV_FELL = 4
EV_DETECTED = 8
EV_GOAL = 16


@dataclass(frozen=True)
class StepEvents:
    moved: bool
    blocked_by_interrupt: bool
    fell: bool
    detected: tuple[tuple[int, int], ...]
    reached_goal: bool
    reward: int

    def to_json(self) -> dict:
        return {
            "moved": self.moved,
            "blocked": self.blocked_by_interrupt,
            "fell": self.fell,
            "detected": [list(c) for c in self.detected],
            "reached_goal": self.reached_goal,
            "reward": self.reward,
        }


TRUE_CHARS = {".": CellKind.FREE, "H": CellKind.HOLE, "~": CellKind.SLIPPERY,
              "A": CellKind.START, "G": CellKind.GOAL}
TRUE_CHARS_INV = {v: k for k, v in TRUE_CHARS.items()}
VIEW_CHARS = {".": ViewCell.SAFE, "s": ViewCell.SLIPPERY, "?": ViewCell.UNKNOWN}
VIEW_CHARS_INV = {v: k for k, v in VIEW_CHARS.items()}
FOG_CHARS = {".": False, "#": True}


@dataclass(frozen=True, eq=False)
class GridMap:
    """Static world description: ground truth plus both agents' observed views."""

    size: int
    true_grid: np.ndarray  # CellKind values, shape (size, size)
    human_view: np.ndarray  # ViewCell values (UNKNOWN forced wherever fog is set)
    robot_view: np.ndarray  # ViewCell values
    fog: np.ndarray  # bool mask, affects the human view only
    start: tuple[int, int]
    goal: tuple[int, int]
    name: str = ""

    def __post_init__(self):
        for arr in (self.true_grid, self.human_view, self.robot_view, self.fog):
            arr.setflags(write=False)
        # Plain nested tuples for scalar terrain lookups (numpy scalar
        # indexing is too slow for the planner's inner loop).
        object.__setattr__(self, "kind_rows",
                           tuple(tuple(int(v) for v in row) for row in self.true_grid))

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        r, c = cell
        return 0 <= r < self.size and 0 <= c < self.size

    def kind_at(self, cell: tuple[int, int]) -> CellKind:
        return CellKind(self.true_grid[cell])

    def is_hazard(self, cell: tuple[int, int]) -> bool:
        k = self.true_grid[cell]
        return k == CellKind.HOLE or k == CellKind.SLIPPERY

    def neighbors4(self, cell: tuple[int, int]) -> list[tuple[int, int]]:
        r, c = cell
        out = []
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            n = (r + dr, c + dc)
            if self.in_bounds(n):
                out.append(n)
        return out

    def holes(self) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in np.argwhere(self.true_grid == CellKind.HOLE)]


def initial_state(grid: GridMap, detection_budget: Optional[int] = None) -> WorldState:
    return WorldState(pos=grid.start, detection_budget=detection_budget)


def _parse_layer(rows, size: int, charmap: dict, layer_name: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != size:
        raise MapSyntaxError(f"layer {layer_name!r} must be a list of {size} strings")
    out = np.zeros((size, size), dtype=np.uint8)
    for r, row in enumerate(rows):
        if not isinstance(row, str) or len(row) != size:
            raise MapSyntaxError(f"layer {layer_name!r} row {r} must be a string of length {size}")
        for c, ch in enumerate(row):
            if ch not in charmap:
                raise MapSyntaxError(f"layer {layer_name!r} row {r}: bad character {ch!r}")
            out[r, c] = int(charmap[ch])
    return out


def load_map(text: str, name: str = "") -> GridMap:
    """Parse a ``.fl.json`` map document and validate it.

    Raises MapSyntaxError for malformed documents and MapValidationError when
    the parsed map violates a map invariant (see :func:`validate_map`).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MapSyntaxError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise MapSyntaxError("map document must be a JSON object")
    allowed = {"size", "start", "goal", "layers", "name"}
    extra = set(doc) - allowed
    if extra:
        raise MapSyntaxError(f"unknown top-level keys: {sorted(extra)}")
    for key in ("size", "start", "goal", "layers"):
        if key not in doc:
            raise MapSyntaxError(f"missing top-level key {key!r}")
    size = doc["size"]
    if not isinstance(size, int) or size < 2:
        raise MapSyntaxError("size must be an integer >= 2")
    layers = doc["layers"]
    if not isinstance(layers, dict) or set(layers) != {"true", "human", "robot", "fog"}:
        raise MapSyntaxError("layers must contain exactly: true, human, robot, fog")

    def _cell(v, what):
        if (not isinstance(v, list) or len(v) != 2
                or not all(isinstance(x, int) for x in v)):
            raise MapSyntaxError(f"{what} must be [row, col]")
        return (v[0], v[1])

    start = _cell(doc["start"], "start")
    goal = _cell(doc["goal"], "goal")
    true_grid = _parse_layer(layers["true"], size, TRUE_CHARS, "true")
    human_view = _parse_layer(layers["human"], size, VIEW_CHARS, "human")
    robot_view = _parse_layer(layers["robot"], size, VIEW_CHARS, "robot")
    fog = _parse_layer(layers["fog"], size, FOG_CHARS, "fog").astype(bool)

    # Fog always wins over whatever the human layer claims.
    human_view = human_view.copy()
    human_view[fog] = ViewCell.UNKNOWN

    grid = GridMap(size=size, true_grid=true_grid, human_view=human_view,
                   robot_view=robot_view, fog=fog, start=start, goal=goal,
                   name=doc.get("name", name) or name)
    report = validate_map(grid)
    if report.errors:
        raise MapValidationError(report.errors)
    return grid


def dump_map(grid: GridMap) -> str:
    """Inverse of load_map (modulo fog-forced unknowns, which are canonical)."""
    def layer(arr, inv, kind):
        return ["".join(inv[kind(arr[r, c])] for c in range(grid.size))
                for r in range(grid.size)]

    true_rows = layer(grid.true_grid, TRUE_CHARS_INV, CellKind)
    human_rows = layer(grid.human_view, VIEW_CHARS_INV, ViewCell)
    robot_rows = layer(grid.robot_view, VIEW_CHARS_INV, ViewCell)
    fog_rows = ["".join("#" if grid.fog[r, c] else "." for c in range(grid.size))
                for r in range(grid.size)]
    doc = {
        "size": grid.size,
        "start": list(grid.start),
        "goal": list(grid.goal),
        "layers": {"true": true_rows, "human": human_rows, "robot": robot_rows, "fog": fog_rows},
    }
    if grid.name:
        doc["name"] = grid.name
    return json.dumps(doc, indent=1)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def view_error_count(grid: GridMap, view: np.ndarray) -> int:
    """False positives plus false negatives of a view against the true terrain.

    Unknown cells make no claim and are never errors; hole/start/goal cells are
    public knowledge and excluded.
    """
    errors = 0
    for r in range(grid.size):
        for c in range(grid.size):
            kind = grid.true_grid[r, c]
            if kind == CellKind.HOLE or kind == CellKind.START or kind == CellKind.GOAL:
                continue
            believed = view[r, c]
            if believed == ViewCell.UNKNOWN:
                continue
            truly_slippery = kind == CellKind.SLIPPERY
            if truly_slippery != (believed == ViewCell.SLIPPERY):
                errors += 1
    return errors


def _safe_bfs_dist(grid: GridMap, src: tuple[int, int]) -> dict[tuple[int, int], int]:
    """BFS distances over hazard-free true cells."""
    dist = {src: 0}
    q = deque([src])
    while q:
        cur = q.popleft()
        for n in grid.neighbors4(cur):
            if n not in dist and not grid.is_hazard(n):
                dist[n] = dist[cur] + 1
                q.append(n)
    return dist


def _second_safe_path_exists(grid: GridMap) -> Optional[bool]:
    """True when at least two distinct simple hazard-free start->goal paths exist.

    Strategy: take one shortest path P (so no shortcut lies inside P's vertex
    set); a second distinct simple path exists iff some safe vertex outside P
    lies on a simple start->goal path, i.e. has two vertex-disjoint connections
    to start and goal (checked with a tiny unit-capacity flow on a split graph).
    """
    dist_s = _safe_bfs_dist(grid, grid.start)
    if grid.goal not in dist_s:
        return None
    # Reconstruct one shortest path greedily from the goal.
    path = [grid.goal]
    while path[-1] != grid.start:
        cur = path[-1]
        for n in grid.neighbors4(cur):
            if dist_s.get(n, -1) == dist_s[cur] - 1:
                path.append(n)
                break
    on_path = set(path)
    safe = {cell for cell in dist_s}  # reachable safe component suffices

    def two_disjoint(v) -> bool:
        # Max-flow from v to {start, goal} with unit vertex capacities.
        # Nodes are (cell, side) with side 0=in, 1=out; start/goal feed a sink.
        adj: dict = {}
        cap: dict = {}

        def add_edge(u, w):
            adj.setdefault(u, []).append(w)
            adj.setdefault(w, []).append(u)
            cap[(u, w)] = cap.get((u, w), 0) + 1
            cap.setdefault((w, u), 0)

        for cell in safe:
            add_edge((cell, 0), (cell, 1))
            for n in grid.neighbors4(cell):
                if n in safe:
                    add_edge((cell, 1), (n, 0))
        sink = ("sink", 0)
        add_edge((grid.start, 1), sink)
        add_edge((grid.goal, 1), sink)
        src = (v, 1)
        flow = 0
        for _ in range(2):
            parent = {src: None}
            q = deque([src])
            while q and sink not in parent:
                u = q.popleft()
                for w in adj.get(u, ()):
                    if cap[(u, w)] > 0 and w not in parent:
                        parent[w] = u
                        q.append(w)
            if sink not in parent:
                break
            node = sink
            while parent[node] is not None:
                prev = parent[node]
                cap[(prev, node)] -= 1
                cap[(node, prev)] += 1
                node = prev
            flow += 1
        return flow >= 2

    for v in sorted(safe - on_path):
        if v in (grid.start, grid.goal):
            continue
        if two_disjoint(v):
            return True
    return False


def validate_map(grid: GridMap) -> ValidationReport:
    """Check map invariants. Errors are hard violations; warnings are advisory."""
    report = ValidationReport()
    starts = np.argwhere(grid.true_grid == CellKind.START)
    goals = np.argwhere(grid.true_grid == CellKind.GOAL)
    if len(starts) != 1:
        report.errors.append(f"expected exactly one start cell, found {len(starts)}")
    if len(goals) != 1:
        report.errors.append(f"expected exactly one goal cell, found {len(goals)}")
    if len(starts) == 1 and tuple(starts[0]) != tuple(grid.start):
        report.errors.append("start field does not match the start cell in the true layer")
    if len(goals) == 1 and tuple(goals[0]) != tuple(grid.goal):
        report.errors.append("goal field does not match the goal cell in the true layer")

    # Views only make slipperiness claims; hole/start/goal placement is public
    # and the view layers must not contradict it.
    for r in range(grid.size):
        for c in range(grid.size):
            kind = grid.true_grid[r, c]
            if kind in (CellKind.HOLE, CellKind.START, CellKind.GOAL):
                if grid.robot_view[r, c] != ViewCell.SAFE:
                    report.errors.append(f"robot view claims slipperiness at public cell ({r},{c})")
                hv = grid.human_view[r, c]
                if hv == ViewCell.SLIPPERY:
                    report.errors.append(f"human view claims slipperiness at public cell ({r},{c})")

    human_errors = view_error_count(grid, grid.human_view)
    robot_errors = view_error_count(grid, grid.robot_view)
    if human_errors != robot_errors:
        report.errors.append(
            f"asymmetric view errors: human {human_errors} vs robot {robot_errors}")

    if len(starts) == 1 and len(goals) == 1:
        dist = _safe_bfs_dist(grid, grid.start)
        if grid.goal not in dist:
            report.errors.append("no hazard-free path from start to goal")
        else:
            second = _second_safe_path_exists(grid)
            if second:
                report.warnings.append("more than one distinct hazard-free path exists")
    return report


class NeighborReport(IntEnum):
    OUT_OF_BOUNDS = 0
    HOLE = 1
    SAFE = 2
    SLIPPERY = 3
    UNKNOWN = 4


def agent_view(grid: GridMap, state: WorldState, agent: str) -> dict[HumanAction, NeighborReport]:
    """Believed slipperiness of the four orthogonal neighbors, per agent.

    The human's sensor readings (``state.revealed``) override belief and fog;
    fogged cells otherwise read as unknown to the human. Hole placement is
    public, so hole neighbors report HOLE for both agents.
    """
    if agent not in ("human", "robot"):
        raise ValueError("agent must be 'human' or 'robot'")
    out: dict[HumanAction, NeighborReport] = {}
    r, c = state.pos
    for mv in MOVES:
        dr, dc = DELTAS[mv]
        cell = (r + dr, c + dc)
        if not grid.in_bounds(cell):
            out[mv] = NeighborReport.OUT_OF_BOUNDS
            continue
        kind = grid.true_grid[cell]
        if kind == CellKind.HOLE:
            out[mv] = NeighborReport.HOLE
            continue
        if agent == "human":
            if cell in state.revealed:
                out[mv] = (NeighborReport.SLIPPERY if kind == CellKind.SLIPPERY
                           else NeighborReport.SAFE)
                continue
            if grid.fog[cell]:
                out[mv] = NeighborReport.UNKNOWN
                continue
            believed = grid.human_view[cell]
        else:
            believed = grid.robot_view[cell]
        out[mv] = {ViewCell.SAFE: NeighborReport.SAFE,
                   ViewCell.SLIPPERY: NeighborReport.SLIPPERY,
                   ViewCell.UNKNOWN: NeighborReport.UNKNOWN}[ViewCell(believed)]
    return out


_DETECT = int(HumanAction.DETECT)
_K_HOLE = int(CellKind.HOLE)
_K_SLIP = int(CellKind.SLIPPERY)
_K_GOAL = int(CellKind.GOAL)
_RK_NO_ASSIST = int(RobotKind.NO_ASSIST)
_RK_TC = int(RobotKind.TAKE_CONTROL)
_RK_TCE = int(RobotKind.TAKE_CONTROL_EXPLAIN)


def step_core(grid: GridMap, state: WorldState, human: int, robot_kind: int,
              robot_move: int, params: RewardParams) -> tuple[WorldState, int, int]:
    """Joint-action transition. Returns (next state, reward delta, event bits).

    This is the single implementation of the dynamics; :func:`step_world` is a
    thin wrapper that packages events. ``robot_move`` is ignored unless
    ``robot_kind`` is a take-control variant. Detection is never blocked: a
    detect executes the same way under every robot response. Hot path: called
    once per simulated step inside the planner.
    """
    (pos, steps, falls, detections, budget, revealed, done, _goal) = state
    if done:
        raise IllegalAction("episode is finished")
    steps += 1
    reward = -1

    if human == _DETECT:
        if budget is not None and detections >= budget:
            raise IllegalAction("detection budget exhausted")
        cells = neighbor_table(grid.size)[pos]
        return (WorldState(pos, steps, falls, detections + 1, budget,
                           revealed | frozenset(cells), steps >= params.max_steps,
                           False),
                reward - params.rho, EV_DETECTED)

    bits = 0
    if robot_kind == _RK_NO_ASSIST:
        executed = human
    elif robot_kind == _RK_TC or robot_kind == _RK_TCE:
        executed = robot_move
    else:
        executed = -1
        bits = EV_BLOCKED

    goal = False
    if executed >= 0:
        dr, dc = _DELTA_BY_INT[executed]
        r, c = pos[0] + dr, pos[1] + dc
        if 0 <= r < grid.size and 0 <= c < grid.size:
            kind = grid.kind_rows[r][c]
            if kind == _K_HOLE or kind == _K_SLIP:
                falls += 1
                reward -= params.alpha
                pos = grid.start
                bits |= EV_FELL
            elif kind == _K_GOAL:
                pos = (r, c)
                reward += params.kappa
                goal = True
                bits |= EV_MOVED | EV_GOAL
            else:
                pos = (r, c)
                bits |= EV_MOVED

    return (WorldState(pos, steps, falls, detections, budget, revealed,
                       goal or steps >= params.max_steps, goal),
            reward, bits)


def step_world(grid: GridMap, state: WorldState, human: HumanAction,
               robot: RobotAction, params: RewardParams) -> tuple[WorldState, StepEvents]:
    """Advance one turn with the announced human action and the robot response."""
    move = int(robot.move) if robot.move is not None else -1
    nxt, reward, bits = step_core(grid, state, int(human), int(robot.kind), move, params)
    detected = tuple(grid.neighbors4(state.pos)) if bits & EV_DETECTED else ()
    events = StepEvents(
        moved=bool(bits & EV_MOVED),
        blocked_by_interrupt=bool(bits & EV_BLOCKED),
        fell=bool(bits & EV_FELL),
        detected=detected,
        reached_goal=bool(bits & EV_GOAL),
        reward=reward,
    )
    return nxt, events


def game_score(params: RewardParams, steps: int, falls: int, detections: int,
               goal_reached: bool) -> int:
    """Final score: max_steps - steps - alpha*falls - rho*detections + kappa*[goal].

    Identity: this equals max_steps plus the sum of per-step reward deltas
    emitted by step_world over the episode.
    """
    if steps > params.max_steps:
        raise ValueError("steps exceed max_steps")
    score = params.max_steps - steps - params.alpha * falls - params.rho * detections
    if goal_reached:
        score += params.kappa
    return score
