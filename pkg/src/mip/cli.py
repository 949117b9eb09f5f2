"""Command line entry points: run, bench, replay, validate-map, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .domain import MapSyntaxError, MapValidationError, RewardParams, load_map, validate_map
from .harness import (
    ExperimentConfig,
    read_records,
    replay_record,
    run_benchmark,
    summarize,
    write_records,
)
from .humans import default_population, profile_from_spec
from .maps import load_map_file, resolve_maps

_PLANNERS = ("bayes-pomcp", "pomcp", "adv-bayes-pomcp")


def _agent_specs(ids: list[str], n_sims: list[int]) -> list:
    specs = []
    for agent_id in ids:
        if agent_id in _PLANNERS and n_sims:
            for n in n_sims:
                specs.append({"id": agent_id, "n_sims": n})
        else:
            specs.append(agent_id)
    return specs


def _humans_from(arg) -> list:
    if arg in (None, "default"):
        return default_population()
    if isinstance(arg, str):
        with open(arg) as fh:
            arg = json.load(fh)
    return [profile_from_spec(spec) for spec in arg]


def _emit(records, maps, out_dir):
    sizes = {map_id: grid.size for map_id, grid in maps}
    table = summarize(records, sizes=sizes)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_records(records, os.path.join(out_dir, "records.jsonl"))
        with open(os.path.join(out_dir, "summary.csv"), "w") as fh:
            fh.write(table.to_csv())
    print(table)
    failures = [r for r in records if r.status != "ok"]
    if failures:
        print(f"\n{len(failures)} failed episodes:", file=sys.stderr)
        for r in failures[:10]:
            print(f"  {r.map_id}/{r.agent_id}/{r.human_id}/seed={r.seed}",
                  file=sys.stderr)
        return 2
    return 0


def cmd_run(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    maps = []
    for entry in cfg.get("maps", ["builtin"]):
        maps.extend(resolve_maps(entry))
    params = None
    if "max_steps" in cfg:
        params = RewardParams(max_steps=int(cfg["max_steps"]))
    config = ExperimentConfig(
        maps=maps,
        agents=cfg.get("agents", ["bayes-pomcp"]),
        humans=_humans_from(cfg.get("humans", "default")),
        seeds=[int(s) for s in cfg.get("seeds", [0])],
        params=params,
        detection_budget=cfg.get("detection_budget"),
        workers=cfg.get("workers"),
    )
    records = run_benchmark(config)
    return _emit(records, maps, cfg.get("out") or args.out)


def cmd_bench(args) -> int:
    maps = resolve_maps(args.maps)
    if args.size:
        maps = [(mid, g) for mid, g in maps if g.size == args.size]
    config = ExperimentConfig(
        maps=maps,
        agents=_agent_specs(args.agents.split(","), [int(n) for n in args.n_sims.split(",") if n]),
        humans=_humans_from(args.humans),
        seeds=[int(s) for s in args.seeds.split(",")],
        detection_budget=args.budget,
        workers=args.workers,
    )
    records = run_benchmark(config)
    return _emit(records, maps, args.out)


def cmd_replay(args) -> int:
    maps = dict(resolve_maps(args.maps))
    ok_all = True
    for record in read_records(args.record):
        raw = json.loads(record.to_json())
        grid = maps.get(record.map_id)
        if grid is None:
            print(f"{record.map_id}: unknown map", file=sys.stderr)
            ok_all = False
            continue
        ok, detail = replay_record(raw, grid)
        status = "ok" if ok else "MISMATCH"
        print(f"{record.map_id}/{record.agent_id}/{record.human_id}/seed={record.seed}: "
              f"{status} ({detail})")
        ok_all = ok_all and ok
    return 0 if ok_all else 2


def cmd_validate_map(args) -> int:
    try:
        _, grid = load_map_file(args.file)
    except (MapSyntaxError, MapValidationError) as e:
        print(f"INVALID: {e}")
        return 2
    report = validate_map(grid)
    for warning in report.warnings:
        print(f"warning: {warning}")
    print(f"ok: {grid.size}x{grid.size}, start {grid.start}, goal {grid.goal}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(map_dir=args.maps if args.maps not in (None, "builtin") else None,
                     default_budget=args.budget)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(fn=cmd_run)

    p_bench = sub.add_parser("bench", help="grid of maps x agents x humans x seeds")
    p_bench.add_argument("--maps", default="builtin")
    p_bench.add_argument("--agents", default="bayes-pomcp,pomcp")
    p_bench.add_argument("--n-sims", dest="n_sims", default="100")
    p_bench.add_argument("--seeds", default="0,1,2")
    p_bench.add_argument("--humans", default="default")
    p_bench.add_argument("--budget", type=int, default=None)
    p_bench.add_argument("--size", type=int, default=None)
    p_bench.add_argument("--workers", type=int, default=None)
    p_bench.add_argument("--out", default=None)
    p_bench.set_defaults(fn=cmd_bench)

    p_replay = sub.add_parser("replay", help="re-simulate a record file and verify it")
    p_replay.add_argument("--record", required=True)
    p_replay.add_argument("--maps", default="builtin")
    p_replay.set_defaults(fn=cmd_replay)

    p_val = sub.add_parser("validate-map", help="check a map document")
    p_val.add_argument("file")
    p_val.set_defaults(fn=cmd_validate_map)

    p_serve = sub.add_parser("serve", help="start the game session HTTP service")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--maps", default=None)
    p_serve.add_argument("--budget", type=int, default=5)
    p_serve.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
