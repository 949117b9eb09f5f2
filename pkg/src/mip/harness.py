"""Batch experiment runner: agents vs simulated humans over maps and seeds.

Every episode is fully determined by (map, agent spec, human profile, seed):
all randomness flows through seeds derived from that key, so records are
reproducible one by one, in any order, serial or parallel. Records serialize
as JSON lines; summaries aggregate score and per-move planning time.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from random import Random
from typing import Optional, Sequence

import numpy as np

from .agents import make_agent
from .domain import (
    EXPLAIN_KINDS,
    GridMap,
    HumanAction,
    RewardParams,
    RobotAction,
    RobotKind,
    Explanation,
    TAKE_CONTROL_KINDS,
    benchmark_params,
    game_score,
    human_action_from_name,
    human_action_name,
    initial_state,
    load_map,
    step_world,
)
from .humans import HumanEvent, HumanProfile, SimulatedHuman, human_nav_view


def derive_seed(*parts) -> int:
    """Stable 64-bit child seed from any hashable label parts."""
    text = "/".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def robot_action_to_json(a: RobotAction) -> dict:
    out: dict = {"kind": a.kind.name.lower()}
    out["move"] = human_action_name(a.move) if a.move is not None else None
    if a.explain is not None:
        out["explain"] = {"reason": a.explain.reason, "cell": list(a.explain.cell)}
    else:
        out["explain"] = None
    return out


def robot_action_from_json(d: dict) -> RobotAction:
    kind = RobotKind[d["kind"].upper()]
    move = human_action_from_name(d["move"]) if d.get("move") else None
    explain = None
    if d.get("explain"):
        explain = Explanation(d["explain"]["reason"], tuple(d["explain"]["cell"]))
    return RobotAction(kind, move, explain)


@dataclass
class EpisodeRecord:
    map_id: str
    agent_id: str
    human_id: str
    seed: int
    n_sims: Optional[int]
    psi: float
    theta0: float
    max_steps: int
    detection_budget: Optional[int]
    score: int
    steps: int
    falls: int
    detections: int
    goal_reached: bool
    trace: list[dict] = field(default_factory=list)
    status: str = "ok"
    error: str = ""

    def to_json(self, include_timing: bool = True) -> str:
        d = dict(self.__dict__)
        if not include_timing:
            d["trace"] = [{k: v for k, v in step.items() if k != "plan_time"}
                          for step in d["trace"]]
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(line: str) -> "EpisodeRecord":
        return EpisodeRecord(**json.loads(line))

    def mean_plan_time(self) -> float:
        times = [s["plan_time"] for s in self.trace if "plan_time" in s]
        return float(np.mean(times)) if times else 0.0


def run_episode(grid: GridMap, agent_spec, profile: HumanProfile, seed: int,
                params: RewardParams, detection_budget: Optional[int] = None,
                map_id: str = "") -> EpisodeRecord:
    """One full interaction episode; deterministic given its arguments."""
    map_id = map_id or grid.name or "map"
    agent_label = agent_spec if isinstance(agent_spec, str) else agent_spec.get("id")
    rng_agent = Random(derive_seed(seed, "agent", map_id, agent_label, profile.id))
    rng_human = Random(derive_seed(seed, "human", map_id, agent_label, profile.id))

    agent = make_agent(agent_spec, grid, params, rng_agent)
    human = SimulatedHuman(profile, lambda rev: human_nav_view(grid, rev), rng_human)
    state = initial_state(grid, detection_budget)
    gr, gc = grid.goal

    trace: list[dict] = []
    reward_sum = 0
    pending = human.act(state, None, None)
    while not state.done:
        t0 = time.perf_counter()
        robot = agent.decide(state, pending)
        plan_time = time.perf_counter() - t0
        state2, events = step_world(grid, state, pending, robot, params)
        reward_sum += events.reward
        trace.append({
            "t": state2.steps_taken,
            "human": human_action_name(pending),
            "robot": robot_action_to_json(robot),
            "events": events.to_json(),
            "reward": events.reward,
            "plan_time": round(plan_time, 6),
        })
        # Compliance drift hooks for dynamic users.
        if robot.kind in TAKE_CONTROL_KINDS:
            human.apply_event(HumanEvent.TOOK_CONTROL)
        if robot.kind in EXPLAIN_KINDS:
            human.apply_event(HumanEvent.EXPLAINED)
        if events.fell:
            human.apply_event(HumanEvent.FELL)
        elif events.moved:
            d_old = abs(state.pos[0] - gr) + abs(state.pos[1] - gc)
            d_new = abs(state2.pos[0] - gr) + abs(state2.pos[1] - gc)
            if d_new < d_old:
                human.apply_event(HumanEvent.SUCCESS_STEP)
        prev_pending = pending
        state = state2
        if state.done:
            break
        pending = human.act(state, robot, prev_pending)

    score = game_score(params, state.steps_taken, state.falls,
                       state.detections_used, state.goal_reached)
    assert score == params.max_steps + reward_sum, "score accounting broke"
    return EpisodeRecord(
        map_id=map_id, agent_id=agent.id, human_id=profile.id, seed=seed,
        n_sims=agent.n_sims, psi=profile.psi, theta0=round(human.theta0, 6),
        max_steps=params.max_steps, detection_budget=detection_budget,
        score=score, steps=state.steps_taken, falls=state.falls,
        detections=state.detections_used, goal_reached=state.goal_reached,
        trace=trace)


def replay_record(record: "EpisodeRecord | dict", grid: GridMap) -> tuple[bool, str]:
    """Re-simulate a record's action trace; verify every reward and the score."""
    if isinstance(record, EpisodeRecord):
        record = json.loads(record.to_json())
    params = RewardParams(max_steps=record["max_steps"])
    state = initial_state(grid, record.get("detection_budget"))
    total = 0
    for i, step in enumerate(record["trace"]):
        human = human_action_from_name(step["human"])
        robot = robot_action_from_json(step["robot"])
        state, events = step_world(grid, state, human, robot, params)
        if events.reward != step["reward"]:
            return False, f"step {i}: reward {events.reward} != recorded {step['reward']}"
        total += events.reward
    score = game_score(params, state.steps_taken, state.falls,
                       state.detections_used, state.goal_reached)
    if score != record["score"]:
        return False, f"final score {score} != recorded {record['score']}"
    if score != params.max_steps + total:
        return False, "accounting identity violated"
    return True, f"replayed {len(record['trace'])} steps, score {score}"


@dataclass
class ExperimentConfig:
    maps: list[tuple[str, GridMap]]
    agents: list  # str ids or spec dicts
    humans: list[HumanProfile]
    seeds: list[int]
    params: Optional[RewardParams] = None  # None: benchmark params per map size
    detection_budget: Optional[int] = None
    workers: Optional[int] = None  # None: MIP_THREADS or cpu count


def _cell_params(cfg: ExperimentConfig, grid: GridMap) -> RewardParams:
    return cfg.params if cfg.params is not None else benchmark_params(grid.size)


def _run_cell(args) -> EpisodeRecord:
    map_id, grid, agent_spec, profile, seed, params, budget = args
    try:
        return run_episode(grid, agent_spec, profile, seed, params, budget, map_id)
    except Exception:
        label = agent_spec if isinstance(agent_spec, str) else agent_spec.get("id")
        return EpisodeRecord(
            map_id=map_id, agent_id=str(label), human_id=profile.id, seed=seed,
            n_sims=None, psi=profile.psi, theta0=-1.0, max_steps=0,
            detection_budget=budget, score=0, steps=0, falls=0, detections=0,
            goal_reached=False, status="failed", error=traceback.format_exc(limit=5))


def default_workers() -> int:
    env = os.environ.get("MIP_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_benchmark(cfg: ExperimentConfig) -> list[EpisodeRecord]:
    """Run the full grid of maps x agents x humans x seeds.

    Episodes are independent; with more than one worker they run in a process
    pool and results are merged in a deterministic order.
    """
    cells = []
    for map_id, grid in cfg.maps:
        params = _cell_params(cfg, grid)
        for agent_spec in cfg.agents:
            for profile in cfg.humans:
                for seed in cfg.seeds:
                    cells.append((map_id, grid, agent_spec, profile, seed, params,
                                  cfg.detection_budget))
    workers = cfg.workers if cfg.workers else default_workers()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, cells))
    else:
        records = [_run_cell(c) for c in cells]
    records.sort(key=lambda r: (r.map_id, r.agent_id, str(r.n_sims), r.human_id, r.seed))
    return records


@dataclass
class SummaryRow:
    agent_id: str
    map_size: int
    n_sims: Optional[int]
    episodes: int
    mean_score: float
    std_score: float
    mean_plan_time: float


@dataclass
class SummaryTable:
    rows: list[SummaryRow]

    def to_csv(self) -> str:
        lines = ["agent,map_size,n_sims,episodes,mean_score,std_score,mean_plan_time_s"]
        for r in self.rows:
            lines.append(f"{r.agent_id},{r.map_size},{r.n_sims if r.n_sims else ''},"
                         f"{r.episodes},{r.mean_score:.3f},{r.std_score:.3f},"
                         f"{r.mean_plan_time:.4f}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        head = f"{'agent':28s} {'size':>4s} {'sims':>5s} {'n':>4s} {'score':>16s} {'t/move':>8s}"
        out = [head, "-" * len(head)]
        for r in self.rows:
            sims = str(r.n_sims) if r.n_sims else "-"
            out.append(f"{r.agent_id:28s} {r.map_size:4d} {sims:>5s} {r.episodes:4d} "
                       f"{r.mean_score:8.2f} ± {r.std_score:5.2f} {r.mean_plan_time:8.4f}")
        return "\n".join(out)


def summarize(records: Sequence[EpisodeRecord],
              sizes: Optional[dict[str, int]] = None) -> SummaryTable:
    """Aggregate scores per (agent, map size, n_sims); sample std (n-1)."""
    sizes = sizes or {}
    groups: dict = {}
    for rec in records:
        if rec.status != "ok":
            continue
        key = (rec.agent_id, sizes.get(rec.map_id, 0), rec.n_sims)
        groups.setdefault(key, []).append(rec)
    rows = []
    for (agent_id, size, n_sims), recs in sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2]))):
        scores = np.array([r.score for r in recs], dtype=float)
        times = [t for r in recs for t in (s["plan_time"] for s in r.trace)]
        rows.append(SummaryRow(
            agent_id=agent_id, map_size=size, n_sims=n_sims, episodes=len(recs),
            mean_score=float(scores.mean()),
            std_score=float(scores.std(ddof=1)) if len(scores) > 1 else 0.0,
            mean_plan_time=float(np.mean(times)) if times else 0.0))
    return SummaryTable(rows)


def write_records(records: Sequence[EpisodeRecord], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path: str) -> list[EpisodeRecord]:
    with open(path) as fh:
        return [EpisodeRecord.from_json(line) for line in fh if line.strip()]
