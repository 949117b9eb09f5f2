"""Online Monte-Carlo planning for robot interventions.

Each turn the robot observes the human's announced move and searches a tree of
interaction histories to decide among: letting the move through, interrupting
it, or taking control with its own move (each optionally explained). Human
responses inside the lookahead are simulated from a per-node set of beta
particles over compliance; the world is advanced on a proxy board built from
the robot's believed terrain (unknown cells assumed safe), since the robot
cannot peek at ground truth.

Three modes share the machinery:

* ``bayes`` - belief particles drive the simulated human (the full planner).
* ``pomcp`` - ablation: no belief updates, humans simulated as uniform random.
* ``adversarial`` - identical search on negated rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from random import Random
from typing import Optional

from .belief import (
    BeliefSet,
    BetaParticle,
    Outcome,
    classify_response,
    init_belief,
    root_belief_update,
    update_particle,
)
from .domain import (
    DELTAS,
    EXPLAIN_KINDS,
    Explanation,
    GridMap,
    HumanAction,
    MOVES,
    NO_ASSIST,
    OPPOSITE,
    OPPOSITE_BY_INT,
    REASON_HAZARD,
    REASON_LONGER_PATH,
    RewardParams,
    RobotAction,
    RobotKind,
    CellKind,
    ViewCell,
    WorldState,
    step_core,
)
from .humans import NavView, astar_next, legal_moves, robot_nav_view

import numpy as np


class Mode(str, Enum):
    BAYES = "bayes"
    POMCP = "pomcp"  # ablation: random human rollouts, no belief updates
    ADVERSARIAL = "adversarial"


@dataclass(frozen=True)
class SearchConfig:
    gamma: float = 0.99
    epsilon: float = 0.99 ** 30  # simulation cutoff when gamma^depth < epsilon
    n_sims: int = 100
    ucb_c: float = 30.0  # exploration constant, scaled to the goal bonus
    mode: Mode = Mode.BAYES
    eps_plan: float = 0.1  # rationality noise of the planner's human model
    capacity: Optional[int] = None  # belief particles per node; default n_sims
    fall_memory: bool = True  # remember observed fall cells when building the proxy

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.epsilon <= 0 or self.n_sims < 1 or self.ucb_c < 0:
            raise ValueError("bad search configuration")

    @property
    def depth_limit(self) -> int:
        """Largest depth still simulated: max d with gamma^d >= epsilon."""
        d = 0
        while d < 10_000 and self.gamma ** (d + 1) >= self.epsilon:
            d += 1
        return d


# Robot actions inside the tree are keyed as (kind, move); move is -1 except
# for take-control, whose replacement move is recomputed per visited state.
ActionKey = tuple[int, int]

_NO_ASSIST_KEY: ActionKey = (int(RobotKind.NO_ASSIST), -1)
_DETECT_KEYS: tuple[ActionKey, ...] = (_NO_ASSIST_KEY,)
_DETECT_I = int(HumanAction.DETECT)
_RK_NO_ASSIST = int(RobotKind.NO_ASSIST)
_RK_TC = int(RobotKind.TAKE_CONTROL)
_RK_TCE = int(RobotKind.TAKE_CONTROL_EXPLAIN)
_DUMMY_PARTICLE = BetaParticle(1.0, 1.0)
_MISS = object()


def action_key(a: RobotAction) -> ActionKey:
    return (int(a.kind), int(a.move) if a.move is not None else -1)


class HistoryNode:
    """Tree node for a history ending in a human action (the robot decides here)."""

    __slots__ = ("N", "V", "nb", "pending", "belief", "epoch", "children")

    def __init__(self, pending: HumanAction, belief: Optional[BeliefSet] = None):
        self.N = 0
        self.V = 0.0
        self.nb = 0  # backup count for V (visits N counts entries)
        self.pending = pending
        self.belief = belief
        self.epoch = -1
        self.children: dict[ActionKey, ActionNode] = {}


class ActionNode:
    """Tree node for a history ending in a robot action (chance over human replies)."""

    __slots__ = ("N", "V", "children")

    def __init__(self):
        self.N = 0
        self.V = 0.0
        self.children: dict[HumanAction, HistoryNode] = {}


@dataclass
class AugmentedSimState:
    """A simulation particle: world copy + compliance particle + pending move."""

    world: WorldState
    particle: BetaParticle
    pending: HumanAction


def robot_replacement_move(nav: NavView, pos: tuple[int, int],
                           holes: Optional[np.ndarray] = None) -> HumanAction:
    """The move a take-control robot substitutes: its best believed-safe step.

    Falls back to the believed-safe neighbor closest to the goal (Manhattan)
    when no believed-safe path exists, then to any non-hole neighbor. Never
    steps into a known hole.
    """
    mv = astar_next(nav, pos)
    if mv is not None:
        return mv
    gr, gc = nav.goal

    def manh(cell):
        return abs(cell[0] - gr) + abs(cell[1] - gc)

    for pass_filter in (True, False):
        best, best_d = None, math.inf
        for m in MOVES:
            dr, dc = DELTAS[m]
            nb = (pos[0] + dr, pos[1] + dc)
            if not (0 <= nb[0] < nav.size and 0 <= nb[1] < nav.size):
                continue
            if pass_filter:
                if not nav.passable[nb]:
                    continue
            elif holes is not None and holes[nb]:
                continue
            d = manh(nb)
            if d < best_d:
                best, best_d = m, d
        if best is not None:
            return best
    return legal_moves(pos, nav.size)[0]


def ucb_select(node: HistoryNode, keys: tuple[ActionKey, ...], c: float) -> ActionKey:
    """UCB1 over a node's legal robot actions; unvisited actions go first
    (canonical order), then argmax of V + c*sqrt(ln N(h) / N(ha))."""
    children = node.children
    for k in keys:
        ch = children.get(k)
        if ch is None or ch.N == 0:
            return k
    log_n = math.log(max(node.N, 1))
    best_key = keys[0]
    best = -math.inf
    for k in keys:
        ch = children[k]
        u = ch.V + c * math.sqrt(log_n / ch.N)
        if u > best:
            best, best_key = u, k
    return best_key


class Planner:
    """Per-episode online planner. Owns its tree; one writer at a time."""

    def __init__(self, grid: GridMap, params: RewardParams, config: SearchConfig,
                 rng: Random):
        self.grid = grid
        self.params = params
        self.cfg = config
        self.rng = rng
        self.capacity = config.capacity or config.n_sims
        self.root: Optional[HistoryNode] = None
        self._sign = -1 if config.mode == Mode.ADVERSARIAL else 1
        self._bayes = config.mode != Mode.POMCP
        self._depth_limit = config.depth_limit
        self._epoch = 0
        self._revealed: Optional[frozenset] = None
        self._proxy: Optional[GridMap] = None
        self._nav: Optional[NavView] = None
        self._repl_memo: dict = {}
        self._keys_memo: dict = {}
        self._greedy_memo: dict = {}
        self._replan_memo: dict = {}
        self._fall_cells: frozenset = frozenset()
        self._holes = grid.true_grid == CellKind.HOLE
        self._root_key: Optional[ActionKey] = None
        # instrumentation
        self.max_sim_depth = 0
        self.last_plan: Optional[dict] = None
        self.capture_returns = False
        self.captured: list[tuple[ActionKey, float]] = []

    # ---------------------------------------------------------------- setup

    def start_episode(self, pending: HumanAction) -> None:
        belief = init_belief(self.capacity) if self._bayes else None
        self.root = HistoryNode(pending, belief)

    def note_fall(self, cell: tuple[int, int]) -> None:
        """Record a really-observed fall: that cell is hazardous, whatever the
        robot's view claims. Falls are as public as sensor readings."""
        if self.cfg.fall_memory and cell not in self._fall_cells:
            self._fall_cells = self._fall_cells | {cell}
            self._revealed = None  # force a knowledge rebuild

    def _sync_knowledge(self, state: WorldState) -> None:
        if self._revealed == state.revealed and self._proxy is not None:
            return
        self._revealed = state.revealed
        self._proxy = self._build_proxy(state.revealed)
        nav = robot_nav_view(self.grid, state.revealed)
        for cell in self._fall_cells:
            nav.passable[cell] = False
        if self._fall_cells:
            nav._dist.clear()
        self._nav = nav
        self._repl_memo = {}
        self._keys_memo = {}
        self._greedy_memo = {}
        self._replan_memo = {}

    def _build_proxy(self, revealed: frozenset) -> GridMap:
        """A board where unrevealed terrain is what the robot believes it is."""
        g = self.grid
        t = np.array(g.true_grid)
        for r in range(g.size):
            for c in range(g.size):
                kind = t[r, c]
                if kind in (CellKind.HOLE, CellKind.START, CellKind.GOAL):
                    continue
                if (r, c) in revealed:
                    continue  # sensed cells keep their true slipperiness
                if (r, c) in self._fall_cells:
                    t[r, c] = CellKind.SLIPPERY
                    continue
                t[r, c] = (CellKind.SLIPPERY if g.robot_view[r, c] == ViewCell.SLIPPERY
                           else CellKind.FREE)
        return GridMap(size=g.size, true_grid=t, human_view=g.human_view,
                       robot_view=g.robot_view, fog=g.fog, start=g.start,
                       goal=g.goal, name=g.name)

    def _replacement(self, pos) -> int:
        mv = self._repl_memo.get(pos)
        if mv is None:
            mv = int(robot_replacement_move(self._nav, pos, holes=self._holes))
            self._repl_memo[pos] = mv
        return mv

    def _legal_keys(self, pending: HumanAction, pos) -> tuple[ActionKey, ...]:
        if pending == _DETECT_I:
            return _DETECT_KEYS
        keys = self._keys_memo.get(pos)
        if keys is None:
            rm = self._replacement(pos)
            keys = (_NO_ASSIST_KEY, (1, -1), (2, -1), (3, rm), (4, rm))
            self._keys_memo[pos] = keys
        return keys

    # ---------------------------------------------------------------- search

    def plan(self, state: WorldState, pending: HumanAction) -> RobotAction:
        """Search from the current root and return the greedy robot action."""
        if self.root is None:
            self.start_episode(pending)
        root = self.root
        if root.pending != pending:
            raise ValueError("root is out of sync with the observed human action")
        self._sync_knowledge(state)
        key = self._search(state)
        action = self._materialize(key, state)
        self.last_plan = self._diagnostics(state)
        return action

    def _search(self, state: WorldState) -> ActionKey:
        cfg = self.cfg
        root = self.root
        self._epoch += 1
        particles = root.belief.particles if self._bayes else None
        n_particles = len(particles) if particles else 0
        rng = self.rng
        capture = self.capture_returns
        for _ in range(cfg.n_sims):
            if self._bayes and n_particles:
                particle = particles[rng.randrange(n_particles)]
            else:
                particle = _DUMMY_PARTICLE
            self._root_key = None
            r = self._simulate(state, particle, root, 0)
            if capture and self._root_key is not None:
                self.captured.append((self._root_key, self._sign * r))
        keys = self._legal_keys(root.pending, state.pos)
        best_key, best_v = keys[0], -math.inf
        for k in keys:
            ch = root.children.get(k)
            if ch is not None and ch.N > 0 and ch.V > best_v:
                best_key, best_v = k, ch.V
        return best_key

    def _simulate(self, world: WorldState, particle: BetaParticle,
                  node: HistoryNode, depth: int) -> float:
        if depth > self._depth_limit:
            return 0.0
        node.N += 1
        if depth:
            if self._bayes:
                if node.epoch != self._epoch:
                    node.belief = BeliefSet([], self.capacity)
                    node.epoch = self._epoch
                node.belief.add(particle)
        pending = node.pending
        keys = self._legal_keys(pending, world.pos)
        key = ucb_select(node, keys, self.cfg.ucb_c)
        if depth == 0:
            self._root_key = key
        anode = node.children.get(key)
        if anode is None:
            anode = ActionNode()
            node.children[key] = anode

        world2, r, _bits = step_core(self._proxy, world, pending, key[0], key[1],
                                     self.params)
        if self._sign < 0:
            r = -r
        if depth > self.max_sim_depth:
            self.max_sim_depth = depth

        if world2.done:
            anode.N += 1
            anode.V += (r - anode.V) / anode.N
            return r

        if anode.N == 0:
            # First visit of this robot action: estimate by rollout, no expansion below.
            aH2, particle2 = self._draw_human(world2, particle, pending, key)
            ret = r + self.cfg.gamma * self._rollout(world2, particle2, aH2, depth + 1)
            anode.N = 1
            anode.V = ret
            return ret

        aH2, particle2 = self._draw_human(world2, particle, pending, key)
        child = anode.children.get(aH2)
        if child is None:
            child = HistoryNode(aH2)
            anode.children[aH2] = child
        ret = r + self.cfg.gamma * self._simulate(world2, particle2, child, depth + 1)
        anode.N += 1
        anode.V += (ret - anode.V) / anode.N
        child.nb += 1
        child.V += (ret - child.V) / child.nb
        return ret

    def _rollout(self, world: WorldState, particle: BetaParticle,
                 pending: HumanAction, depth: int) -> float:
        """Uniform-random robot play to the cutoff; writes nothing to the tree."""
        rng = self.rng
        gamma = self.cfg.gamma
        total = 0.0
        g = 1.0
        while depth <= self._depth_limit:
            keys = self._legal_keys(pending, world.pos)
            key = keys[int(rng.random() * len(keys))] if len(keys) > 1 else keys[0]
            world, r, _bits = step_core(self._proxy, world, pending, key[0], key[1],
                                        self.params)
            if self._sign < 0:
                r = -r
            total += g * r
            if depth > self.max_sim_depth:
                self.max_sim_depth = depth
            if world.done:
                break
            pending, particle = self._draw_human(world, particle, pending, key)
            g *= gamma
            depth += 1
        return total

    # ----------------------------------------------------- simulated human

    def _draw_human(self, world: WorldState, particle: BetaParticle,
                    prev_pending: HumanAction, key: ActionKey
                    ) -> tuple[HumanAction, BetaParticle]:
        """Sample the next announced human action inside the lookahead."""
        rng = self.rng
        if not self._bayes:
            acts = legal_moves(world.pos, self.grid.size)
            if world.detect_allowed:
                acts = acts + (HumanAction.DETECT,)
            return acts[int(rng.random() * len(acts))], particle

        kind = key[0]
        if kind == _RK_NO_ASSIST:
            if rng.random() < self.cfg.eps_plan:
                moves = legal_moves(world.pos, self.grid.size)
                return moves[int(rng.random() * len(moves))], particle
            mv = self._greedy_move(world.pos)
            if mv is not None:
                return mv, particle
            if world.detect_allowed:
                return HumanAction.DETECT, particle
            moves = legal_moves(world.pos, self.grid.size)
            return moves[int(rng.random() * len(moves))], particle

        # Intervention: Bernoulli compliance trial against this particle.
        if rng.random() < particle.mean:
            particle = update_particle(particle, Outcome.COMPLY)
            excl = (prev_pending,)
            if kind == _RK_TC or kind == _RK_TCE:
                excl = (prev_pending, OPPOSITE_BY_INT[key[1]])
            mv = self._replan_move(world.pos, excl)
            if mv is not None:
                return mv, particle
            if world.detect_allowed:
                return HumanAction.DETECT, particle
            moves = [m for m in legal_moves(world.pos, self.grid.size) if m not in excl]
            if not moves:
                moves = list(legal_moves(world.pos, self.grid.size))
            return moves[int(rng.random() * len(moves))], particle
        particle = update_particle(particle, Outcome.OPPOSE)
        if world.detect_allowed and rng.random() < 0.5:
            return HumanAction.DETECT, particle
        return OPPOSITE[prev_pending], particle

    def _greedy_move(self, pos) -> Optional[HumanAction]:
        """Memoized greedy step of the planner's human model (robot's view)."""
        hit = self._greedy_memo.get(pos, _MISS)
        if hit is not _MISS:
            return hit
        mv = astar_next(self._nav, pos)
        self._greedy_memo[pos] = mv
        return mv

    def _replan_move(self, pos, excl) -> Optional[HumanAction]:
        key = (pos, excl)
        hit = self._replan_memo.get(key, _MISS)
        if hit is not _MISS:
            return hit
        mv = astar_next(self._nav, pos, exclude=excl)
        self._replan_memo[key] = mv
        return mv

    def step_sim(self, sim: AugmentedSimState, robot: "RobotAction | ActionKey"
                 ) -> tuple[Optional[HumanAction], AugmentedSimState, int]:
        """One lookahead transition (public face of the internal step).

        Advances the world on the robot-belief proxy, then draws the human's
        next announced action from the compliance model. Returns
        (next human action or None when terminal, next sim state, reward).
        """
        key = action_key(robot) if isinstance(robot, RobotAction) else robot
        self._sync_knowledge(sim.world)
        world2, r, _bits = step_core(self._proxy, sim.world, sim.pending,
                                     key[0], key[1], self.params)
        if world2.done:
            return None, AugmentedSimState(world2, sim.particle, sim.pending), r
        aH2, particle2 = self._draw_human(world2, sim.particle, sim.pending, key)
        return aH2, AugmentedSimState(world2, particle2, aH2), r

    # ------------------------------------------------------------- pruning

    def advance(self, robot: RobotAction, observed: HumanAction) -> None:
        """Make the (robot action, observed human action) child the new root.

        The new root belief is the posterior: particles gathered in that child
        during the last search, updated with the really-observed comply/oppose
        outcome, and reinvigorated to capacity.
        """
        root = self.root
        if root is None:
            raise ValueError("advance() before any plan()")
        key = action_key(robot)
        anode = root.children.get(key)
        child = anode.children.get(observed) if anode is not None else None
        if child is None:
            child = HistoryNode(observed)
        child.pending = observed
        if self._bayes:
            outcome = None
            if root.pending != HumanAction.DETECT:
                outcome = classify_response(root.pending, robot.kind, robot.move,
                                            observed)
            gathered = (child.belief.particles
                        if child.belief is not None and child.epoch == self._epoch
                        else [])
            child.belief = root_belief_update(
                root.belief if root.belief is not None else init_belief(self.capacity),
                gathered, outcome, self.rng)
            child.epoch = -1  # now the live posterior, never reset by simulations
        self.root = child

    # --------------------------------------------------------- diagnostics

    def _materialize(self, key: ActionKey, state: WorldState) -> RobotAction:
        kind = RobotKind(key[0])
        if kind == RobotKind.NO_ASSIST:
            return NO_ASSIST
        move = HumanAction(key[1]) if key[1] >= 0 else None
        explain = None
        if kind in EXPLAIN_KINDS:
            pending = self.root.pending
            dr, dc = DELTAS[pending]
            target = (state.pos[0] + dr, state.pos[1] + dc)
            if self.grid.in_bounds(target) and not self._nav.passable[target]:
                explain = Explanation(REASON_HAZARD, target)
            else:
                explain = Explanation(
                    REASON_LONGER_PATH,
                    target if self.grid.in_bounds(target) else state.pos)
        return RobotAction(kind, move, explain)

    def _diagnostics(self, state: WorldState) -> dict:
        root = self.root
        actions = []
        for key, ch in sorted(root.children.items()):
            actions.append({
                "kind": RobotKind(key[0]).name.lower(),
                "move": int(key[1]),
                "n": ch.N,
                "v": round(ch.V, 4),
            })
        diag = {"n_sims": self.cfg.n_sims, "root_visits": root.N, "actions": actions}
        if self._bayes and root.belief is not None and len(root.belief):
            diag["belief_mean"] = round(root.belief.mean_compliance(), 4)
            diag["belief_size"] = len(root.belief)
        return diag

    def tree_size(self) -> int:
        count = 0
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            count += 1
            stack.extend(node.children.values())
        return count

    def belief_pairs(self) -> list[tuple[float, float]]:
        if self.root is not None and self.root.belief is not None:
            return self.root.belief.to_pairs()
        return []
