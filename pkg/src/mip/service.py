"""Turn-based game sessions over HTTP.

A session pairs one human player with one robot agent on one board. The
client only ever sees what the human may know: their own error-prone view,
fog, sensor results, hole placement, and the running score. Ground truth and
the robot's view never leave the server. One action is in flight per session;
a concurrent submit gets a 409.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from random import Random
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .agents import Agent, UnknownAgent, make_agent
from .domain import (
    CellKind,
    GridMap,
    HumanAction,
    IllegalAction,
    RewardParams,
    WorldState,
    ViewCell,
    game_score,
    human_action_from_name,
    human_action_name,
    initial_state,
    step_world,
)
from .harness import derive_seed, robot_action_to_json
from .maps import UnknownMap, builtin_map_ids, load_builtin, load_map_dir

AGENT_CHOICES = ("bayes-pomcp", "pomcp", "adv-bayes-pomcp", "no-assist",
                 "heuristic-interrupt", "heuristic-interrupt-explain",
                 "heuristic-takecontrol", "heuristic-takecontrol-explain")


class CreateSessionRequest(BaseModel):
    map: str
    agent: str = "bayes-pomcp"
    params: Optional[dict] = None
    seed: Optional[int] = None


class ActionRequest(BaseModel):
    action: str


@dataclass
class Session:
    id: str
    map_id: str
    grid: GridMap
    agent: Agent
    params: RewardParams
    seed: int
    state: WorldState
    status: str = "active"
    trace: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    created_at: float = field(default_factory=time.time)


def snapshot(session: Session, last_robot=None) -> dict:
    """Human-visible state only: no ground truth, no robot view."""
    grid, state = session.grid, session.state
    rows = []
    for r in range(grid.size):
        row = []
        for c in range(grid.size):
            cell = (r, c)
            kind = grid.true_grid[cell]
            if cell == grid.start:
                row.append("A")
            elif cell == grid.goal:
                row.append("G")
            elif kind == CellKind.HOLE:
                row.append("H")  # hole placement is public knowledge
            elif cell in state.revealed:
                row.append("s" if kind == CellKind.SLIPPERY else ".")
            elif grid.fog[cell]:
                row.append("?")
            else:
                row.append({ViewCell.SAFE: ".", ViewCell.SLIPPERY: "s",
                            ViewCell.UNKNOWN: "?"}[ViewCell(grid.human_view[cell])])
        rows.append("".join(row))
    budget = state.detection_budget
    return {
        "size": grid.size,
        "start": list(grid.start),
        "goal": list(grid.goal),
        "cells": rows,
        "position": list(state.pos),
        "steps": state.steps_taken,
        "max_steps": session.params.max_steps,
        "falls": state.falls,
        "detections": state.detections_used,
        "budget_left": (None if budget is None
                        else max(0, budget - state.detections_used)),
        "score_so_far": session.params.max_steps + sum(s["reward"] for s in session.trace),
        "last_robot": last_robot,
        "done": state.done,
        "goal_reached": state.goal_reached,
    }


def export_record(session: Session) -> dict:
    """Session log in the exact shape of a harness episode record."""
    return {
        "map_id": session.map_id,
        "agent_id": session.agent.id,
        "human_id": "live-human",
        "seed": session.seed,
        "n_sims": session.agent.n_sims,
        "psi": -1.0,
        "theta0": -1.0,
        "max_steps": session.params.max_steps,
        "detection_budget": session.state.detection_budget,
        "score": game_score(session.params, session.state.steps_taken,
                            session.state.falls, session.state.detections_used,
                            session.state.goal_reached),
        "steps": session.state.steps_taken,
        "falls": session.state.falls,
        "detections": session.state.detections_used,
        "goal_reached": session.state.goal_reached,
        "trace": session.trace,
        "status": "ok" if session.status == "finished" else session.status,
        "error": "",
    }


def create_app(map_dir: Optional[str] = None, default_budget: Optional[int] = 5,
               log_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="mixed-initiative frozen lake")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    maps: dict[str, GridMap] = {}
    if map_dir:
        maps.update(dict(load_map_dir(map_dir)))
    else:
        for map_id in builtin_map_ids():
            maps[map_id] = load_builtin(map_id)
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    def _get(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, "unknown session")
        return session

    def _append_log(session: Session, entry: dict) -> None:
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            with open(os.path.join(log_dir, f"{session.id}.jsonl"), "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    @app.get("/maps")
    def list_maps():
        return [{"id": map_id, "size": grid.size, "start": list(grid.start),
                 "goal": list(grid.goal)}
                for map_id, grid in sorted(maps.items())]

    @app.get("/agents")
    def list_agents():
        return list(AGENT_CHOICES)

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        grid = maps.get(req.map)
        if grid is None:
            raise HTTPException(404, f"unknown map {req.map!r}")
        seed = req.seed if req.seed is not None else Random().randrange(2 ** 31)
        params_dict = dict(req.params or {})
        budget = params_dict.pop("detection_budget", default_budget)
        try:
            params = RewardParams(**{k: int(v) for k, v in params_dict.items()
                                     if k in ("max_steps", "alpha", "rho", "kappa")})
        except (TypeError, ValueError) as e:
            raise HTTPException(400, f"bad params: {e}")
        spec = {"id": req.agent}
        for key in ("n_sims", "ucb_c", "k", "eps_plan"):
            if key in params_dict:
                spec[key] = params_dict[key]
        rng = Random(derive_seed(seed, "agent", req.map, req.agent))
        try:
            agent = make_agent(spec, grid, params, rng)
        except UnknownAgent as e:
            raise HTTPException(404, str(e))
        session = Session(id=uuid.uuid4().hex[:12], map_id=req.map, grid=grid,
                          agent=agent, params=params, seed=seed,
                          state=initial_state(grid, budget))
        sessions[session.id] = session
        return {"session_id": session.id, "snapshot": snapshot(session)}

    @app.post("/sessions/{session_id}/actions")
    def submit_action(session_id: str, req: ActionRequest):
        session = _get(session_id)
        if not session.lock.acquire(blocking=False):
            raise HTTPException(409, "another action is in flight")
        try:
            if session.status != "active":
                raise HTTPException(400, "session is finished")
            try:
                human = human_action_from_name(req.action)
            except IllegalAction as e:
                raise HTTPException(400, str(e))
            if human == HumanAction.DETECT and not session.state.detect_allowed:
                raise HTTPException(400, "detection budget exhausted")
            t0 = time.perf_counter()
            robot = session.agent.decide(session.state, human)
            plan_time = time.perf_counter() - t0
            state, events = step_world(session.grid, session.state, human, robot,
                                       session.params)
            session.state = state
            robot_json = robot_action_to_json(robot)
            entry = {
                "t": state.steps_taken,
                "human": human_action_name(human),
                "robot": robot_json,
                "events": events.to_json(),
                "reward": events.reward,
                "plan_time": round(plan_time, 6),
            }
            session.trace.append(entry)
            _append_log(session, entry)
            if state.done:
                session.status = "finished"
            return {
                "robot": robot_json,
                "events": events.to_json(),
                "snapshot": snapshot(session, last_robot=robot_json),
                "done": state.done,
            }
        finally:
            session.lock.release()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = _get(session_id)
        return {"status": session.status, "snapshot": snapshot(session)}

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        return export_record(_get(session_id))

    return app
