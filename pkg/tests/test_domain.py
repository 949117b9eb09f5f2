import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mip.domain import (
    CellKind,
    HumanAction,
    IllegalAction,
    MapSyntaxError,
    MapValidationError,
    NO_ASSIST,
    NeighborReport,
    RewardParams,
    RobotAction,
    RobotKind,
    WorldState,
    agent_view,
    benchmark_params,
    dump_map,
    game_score,
    initial_state,
    load_map,
    step_world,
    validate_map,
)
from conftest import HUMAN4, ROBOT4, TRUE4, make_doc

P = RewardParams()  # max_steps=80, alpha=10, rho=2, kappa=30

UP, DOWN, LEFT, RIGHT, DETECT = HumanAction
INTERRUPT = RobotAction(RobotKind.INTERRUPT)


def take_control(mv):
    return RobotAction(RobotKind.TAKE_CONTROL, mv)


class TestLoadMap:
    def test_simple_parse(self, grid4):
        assert grid4.size == 4
        assert grid4.start == (0, 0) and grid4.goal == (3, 3)
        assert grid4.kind_at((1, 1)) == CellKind.HOLE
        assert grid4.kind_at((0, 3)) == CellKind.SLIPPERY

    def test_equal_view_errors_load(self):
        # two errors per view
        human = ["..ss", "....", "..s.", "s..."]  # FPs at (0,2) and (2,2)
        robot = [".s.s", ".._.".replace("_", "."), "s...", "s..."]  # FPs at (0,1), (2,0)
        grid = load_map(make_doc(TRUE4, human, robot))
        assert grid.size == 4

    def test_two_goals_rejected(self):
        rows = ["A..G", ".H..", "....", "~..G"]
        with pytest.raises(MapValidationError, match="one goal"):
            load_map(make_doc(rows, goal=(3, 3)))

    def test_malformed_json(self):
        with pytest.raises(MapSyntaxError):
            load_map("{not json")

    def test_bad_layer_char(self):
        doc = json.loads(make_doc(TRUE4, HUMAN4, ROBOT4))
        doc["layers"]["true"][0] = "AX.~"
        with pytest.raises(MapSyntaxError, match="bad character"):
            load_map(json.dumps(doc))

    def test_wrong_row_length(self):
        doc = json.loads(make_doc(TRUE4, HUMAN4, ROBOT4))
        doc["layers"]["human"][2] = "..."
        with pytest.raises(MapSyntaxError, match="length 4"):
            load_map(json.dumps(doc))

    def test_unknown_key_rejected(self):
        doc = json.loads(make_doc(TRUE4, HUMAN4, ROBOT4))
        doc["bogus"] = 1
        with pytest.raises(MapSyntaxError, match="unknown top-level"):
            load_map(json.dumps(doc))

    def test_roundtrip(self, grid4):
        again = load_map(dump_map(grid4), name="t4")
        assert dump_map(again) == dump_map(grid4)

    def test_fog_forces_unknown(self):
        fog = ["..##", "...." , "....", "...."]
        grid = load_map(make_doc(TRUE4, HUMAN4, ROBOT4, fog_rows=fog))
        from mip.domain import ViewCell
        assert grid.human_view[0, 2] == ViewCell.UNKNOWN
        assert grid.human_view[0, 3] == ViewCell.UNKNOWN
        # fog never touches the robot view
        assert grid.robot_view[0, 3] == ViewCell.SLIPPERY


class TestValidateMap:
    def test_single_corridor_ok(self):
        rows = ["A.HH", "H.HH", "H.HH", "HH.G"]
        # corridor (0,0)->(0,1)->(1,1)->(2,1)->(3,2)? not adjacent; fix below
        rows = ["A.HH", "H.HH", "H..H", "HH.G"]
        grid = load_map(make_doc(rows))
        report = validate_map(grid)
        assert report.ok and not report.warnings

    def test_blocked_corridor(self):
        rows = ["A.HH", "H~HH", "H..H", "HH.G"]
        with pytest.raises(MapValidationError, match="no hazard-free path"):
            load_map(make_doc(rows))

    def test_asymmetric_errors(self):
        human = ["..ss", "s...", "..s.", "s..."]  # 3 FPs
        robot = [".s.s", "....", "s...", "s..."]  # 2 FPs
        with pytest.raises(MapValidationError, match="asymmetric"):
            load_map(make_doc(TRUE4, human, robot))

    def test_multiple_paths_warn_only(self, open4):
        report = validate_map(open4)
        assert report.ok
        assert any("more than one" in w for w in report.warnings)


class TestAgentView:
    def test_corner_out_of_bounds(self, grid4):
        state = initial_state(grid4)
        view = agent_view(grid4, state, "robot")
        assert view[UP] == NeighborReport.OUT_OF_BOUNDS
        assert view[LEFT] == NeighborReport.OUT_OF_BOUNDS
        # robot falsely believes (0,1) slippery
        assert view[RIGHT] == NeighborReport.SLIPPERY
        assert view[DOWN] == NeighborReport.SAFE

    def test_fogged_neighbor_unknown(self):
        fog = [".." + "##", "....", "....", "...."]
        grid = load_map(make_doc(TRUE4, HUMAN4, ROBOT4, fog_rows=fog))
        state = WorldState(pos=(0, 1))
        assert agent_view(grid, state, "human")[RIGHT] == NeighborReport.UNKNOWN

    def test_revealed_beats_fog_and_belief(self):
        fog = ["..##", "....", "....", "...."]
        grid = load_map(make_doc(TRUE4, HUMAN4, ROBOT4, fog_rows=fog))
        state = WorldState(pos=(0, 2), revealed=frozenset({(0, 3)}))
        assert agent_view(grid, state, "human")[RIGHT] == NeighborReport.SLIPPERY

    def test_hole_is_public(self, grid4):
        state = WorldState(pos=(0, 1))
        assert agent_view(grid4, state, "human")[DOWN] == NeighborReport.HOLE
        assert agent_view(grid4, state, "robot")[DOWN] == NeighborReport.HOLE


class TestStepWorld:
    def test_plain_move(self, grid4):
        state = initial_state(grid4)
        nxt, ev = step_world(grid4, state, RIGHT, NO_ASSIST, P)
        assert nxt.pos == (0, 1) and ev.reward == -1 and ev.moved

    def test_interrupt_blocks(self, grid4):
        state = initial_state(grid4)
        nxt, ev = step_world(grid4, state, RIGHT, INTERRUPT, P)
        assert nxt.pos == (0, 0)
        assert ev.blocked_by_interrupt and ev.reward == -1
        assert nxt.steps_taken == 1

    def test_fall_resets_to_start(self, grid4):
        state = WorldState(pos=(0, 2), revealed=frozenset({(1, 2)}))
        nxt, ev = step_world(grid4, state, RIGHT, NO_ASSIST, P)  # (0,3) is slippery
        assert ev.fell and ev.reward == -11
        assert nxt.pos == grid4.start and nxt.falls == 1
        assert nxt.revealed == state.revealed  # sensor memory survives falls

    def test_hole_falls_too(self, grid4):
        state = WorldState(pos=(1, 0))
        nxt, ev = step_world(grid4, state, RIGHT, NO_ASSIST, P)  # (1,1) is a hole
        assert ev.fell and nxt.pos == grid4.start

    def test_detect_costs_and_reveals(self, grid4):
        state = initial_state(grid4)
        nxt, ev = step_world(grid4, state, DETECT, NO_ASSIST, P)
        assert ev.reward == -3
        assert set(ev.detected) == {(0, 1), (1, 0)}
        assert nxt.revealed == frozenset({(0, 1), (1, 0)})
        assert nxt.detections_used == 1

    def test_detect_budget_exhausted(self, grid4):
        state = WorldState(pos=(0, 0), detections_used=2, detection_budget=2)
        with pytest.raises(IllegalAction):
            step_world(grid4, state, DETECT, NO_ASSIST, P)

    def test_step_after_done(self, grid4):
        state = WorldState(pos=(0, 0), done=True)
        with pytest.raises(IllegalAction):
            step_world(grid4, state, RIGHT, NO_ASSIST, P)

    def test_take_control_overrides(self, grid4):
        state = initial_state(grid4)
        nxt, ev = step_world(grid4, state, RIGHT, take_control(DOWN), P)
        assert nxt.pos == (1, 0) and ev.moved

    def test_goal_bonus_and_done(self, grid4):
        state = WorldState(pos=(3, 2))
        nxt, ev = step_world(grid4, state, RIGHT, NO_ASSIST, P)
        assert ev.reached_goal and ev.reward == -1 + 30
        assert nxt.done and nxt.goal_reached

    def test_wall_bump_is_noop_with_cost(self, grid4):
        state = initial_state(grid4)
        nxt, ev = step_world(grid4, state, UP, NO_ASSIST, P)
        assert nxt.pos == (0, 0) and not ev.moved and ev.reward == -1
        assert nxt.steps_taken == 1

    def test_max_steps_forces_done(self, grid4):
        state = WorldState(pos=(2, 2), steps_taken=79)
        nxt, _ = step_world(grid4, state, LEFT, NO_ASSIST, P)
        assert nxt.done and not nxt.goal_reached


class TestGameScore:
    def test_direct_substitution(self):
        assert game_score(P, steps=30, falls=1, detections=2, goal_reached=True) == 66

    def test_timeout_zero(self):
        assert game_score(P, 80, 0, 0, False) == 0

    def test_benchmark_steps(self):
        assert benchmark_params(4).max_steps == 50
        assert benchmark_params(8).max_steps == 100


def random_episode(grid, params, rng, budget=None):
    """Play random legal joint actions to the end; return (state, reward sum, steps)."""
    state = initial_state(grid, budget)
    total = 0
    while not state.done:
        choices = list(HumanAction) if state.detect_allowed else list(HumanAction)[:4]
        human = rng.choice(choices)
        kind = rng.choice(list(RobotKind))
        if kind in (RobotKind.TAKE_CONTROL, RobotKind.TAKE_CONTROL_EXPLAIN):
            robot = RobotAction(kind, rng.choice(list(HumanAction)[:4]),
                                _any_explanation(kind))
        else:
            robot = RobotAction(kind, None, _any_explanation(kind))
        state, ev = step_world(grid, state, human, robot, params)
        total += ev.reward
    return state, total


def _any_explanation(kind):
    from mip.domain import EXPLAIN_KINDS, Explanation, REASON_HAZARD
    return Explanation(REASON_HAZARD, (0, 0)) if kind in EXPLAIN_KINDS else None


class TestInvariants:
    def test_accounting_identity_random_episodes(self, grid4, grid8):
        rng = random.Random(7)
        for i in range(200):
            grid = grid4 if i % 2 else grid8
            params = benchmark_params(grid.size)
            budget = rng.choice([None, 0, 3, 5])
            state, total = random_episode(grid, params, rng, budget)
            score = game_score(params, state.steps_taken, state.falls,
                               state.detections_used, state.goal_reached)
            assert score == params.max_steps + total

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=60))
    def test_position_containment_and_reset(self, actions):
        grid = _static_grid4()
        params = RewardParams(max_steps=200)
        state = initial_state(grid)
        for h_i, r_i in actions:
            if state.done:
                break
            human = HumanAction(h_i)
            if human == DETECT and not state.detect_allowed:
                human = UP
            kind = RobotKind(r_i)
            move = DOWN if kind in (RobotKind.TAKE_CONTROL, RobotKind.TAKE_CONTROL_EXPLAIN) else None
            robot = RobotAction(kind, move, _any_explanation(kind))
            state, ev = step_world(grid, state, human, robot, params)
            assert grid.in_bounds(state.pos)
            if ev.fell:
                assert state.pos == grid.start

    def test_sensor_soundness(self, grid4):
        state = initial_state(grid4)
        rng = random.Random(3)
        params = RewardParams(max_steps=60)
        while not state.done:
            human = rng.choice(list(HumanAction))
            state, _ = step_world(grid4, state, human, NO_ASSIST, params)
        assert state.revealed, "episode never detected"
        # A revealed neighbor must report its true slipperiness through the
        # human's local view, regardless of belief or fog.
        for cell in state.revealed:
            for nb in grid4.neighbors4(cell):
                probe = WorldState(pos=nb, revealed=state.revealed)
                for mv, report in agent_view(grid4, probe, "human").items():
                    dr, dc = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}[mv]
                    if (nb[0] + dr, nb[1] + dc) != cell:
                        continue
                    kind = grid4.kind_at(cell)
                    if kind == CellKind.HOLE:
                        assert report == NeighborReport.HOLE
                    elif kind == CellKind.SLIPPERY:
                        assert report == NeighborReport.SLIPPERY
                    else:
                        assert report == NeighborReport.SAFE

    def test_interrupt_changes_only_step_count(self, grid4):
        state = WorldState(pos=(2, 1), falls=1, detections_used=1,
                           revealed=frozenset({(0, 1)}))
        nxt, ev = step_world(grid4, state, RIGHT, INTERRUPT, P)
        assert ev.blocked_by_interrupt
        assert nxt.pos == state.pos and nxt.falls == state.falls
        assert nxt.detections_used == state.detections_used
        assert nxt.revealed == state.revealed
        assert nxt.steps_taken == state.steps_taken + 1


def _static_grid4():
    from mip.domain import load_map as _lm
    return _lm(make_doc(TRUE4, HUMAN4, ROBOT4), name="t4")
