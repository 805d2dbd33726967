"""Command-line front end: fit models, tabulate divergences, solve frames,
replay trajectories, and launch the live service.

Every error path exits nonzero after printing a single-line JSON object
(``{"error": code, "message": ...}``) on standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .controllers import MODES, SolveRequest, SolverConfig, WorkspaceBounds, solve
from .divergence import ArbitrationWeights, kl_table, write_kl_csv, write_kl_json
from .errors import TelegraspError
from .features import parse_feature_payload
from .model import FitConfig, fit_em, load_dataset, load_model, save_model
from .tasks import TaskSet
from .trajectory import load_trajectory, replay, write_report

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors are single-line JSON on stderr."""

    def error(self, message: str):  # noqa: D102 - argparse contract
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def _fail(exc: Exception) -> int:
    code = getattr(exc, "code", "error")
    print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="telegrasp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="fit a grasp model from demonstrations")
    fit.add_argument("dataset", help="JSON-Lines demonstration file")
    fit.add_argument("--task", action="append", default=None,
                     help="principal task name, repeat to fix the ordering")
    fit.add_argument("--out", required=True, help="model file to write")
    fit.add_argument("--config", default=None, help="TOML-style config file")
    fit.add_argument("--eps-cov", type=float, default=None)
    fit.add_argument("--tol", type=float, default=None)
    fit.add_argument("--max-iters", type=int, default=None)

    kl = sub.add_parser("kl", help="pairwise divergence table across models")
    kl.add_argument("--model", action="append", required=True,
                    help="model file, repeat for each embodiment (>= 2)")
    kl.add_argument("--task", action="append", required=True,
                    help="task name of the combination to compare, repeatable")
    kl.add_argument("--out", default=None,
                    help="output basename; writes <out>.csv and <out>.json")
    kl.add_argument("--pooled-fallback", action="store_true",
                    help="pool classes when a model lacks the combination")

    sv = sub.add_parser("solve", help="solve a single operator frame")
    sv.add_argument("--model", action="append", required=True,
                    help="robot model file; a second one is the human model")
    sv.add_argument("--mode", required=True, choices=MODES)
    sv.add_argument("--frame", required=True,
                    help="JSON file with {features: ..., intent?: [...]}")
    sv.add_argument("--intent", default=None,
                    help="comma-separated per-task probabilities (overrides frame)")
    sv.add_argument("--bounds", required=True, help="workspace bounds file")
    sv.add_argument("--weights-override", default=None,
                    help="JSON file with {lambda: [...], gamma: g}")
    sv.add_argument("--seed", type=int, default=None)
    sv.add_argument("--config", default=None)

    rp = sub.add_parser("replay", help="replay a trajectory through controllers")
    rp.add_argument("trajectory", help="JSON-Lines trajectory file")
    rp.add_argument("--model", action="append", required=True,
                    help="robot model file; a second one is the human model")
    rp.add_argument("--mode", action="append", required=True, choices=MODES)
    rp.add_argument("--bounds", required=True)
    rp.add_argument("--out", required=True, help="report path (per mode)")
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--no-timings", action="store_true",
                    help="omit wall-time fields for byte-reproducible reports")
    rp.add_argument("--config", default=None)

    se = sub.add_parser("serve", help="run the live operator service")
    se.add_argument("--models-dir", required=True)
    se.add_argument("--bounds", required=True)
    se.add_argument("--port", type=int, default=None)
    se.add_argument("--host", default="127.0.0.1")
    se.add_argument("--rate-limit", type=float, default=None,
                    help="max solves per second per session (0 = unlimited)")
    se.add_argument("--human-model", default=None,
                    help="registry id of the human model (default: embodiment "
                         "named 'human')")
    se.add_argument("--console", default=None,
                    help="directory of a built operator-console bundle to "
                         "serve at /")
    se.add_argument("--config", default=None)
    return parser


def _section(config_path: str | None, name: str) -> dict:
    if config_path is None:
        return {}
    return load_config(config_path).get(name, {})


def load_bounds_file(path: str | os.PathLike) -> dict[str, WorkspaceBounds]:
    """Read one or more named bounds sets from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    entries = doc if isinstance(doc, list) else [doc]
    out: dict[str, WorkspaceBounds] = {}
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "lower" not in entry or "upper" not in entry:
            raise TelegraspError(f"bounds entry {i} needs 'lower' and 'upper'")
        name = str(entry.get("id", "default"))
        if name in out:
            raise TelegraspError(f"duplicate bounds id {name!r}")
        bounds = WorkspaceBounds(lower=entry["lower"], upper=entry["upper"])
        bounds.validate()
        out[name] = bounds
    return out


def _single_bounds(path: str) -> WorkspaceBounds:
    sets = load_bounds_file(path)
    if len(sets) == 1:
        return next(iter(sets.values()))
    if "default" in sets:
        return sets["default"]
    raise TelegraspError(
        f"bounds file has {len(sets)} sets and none named 'default'"
    )


def _load_weights_override(path: str, cfg: SolverConfig) -> ArbitrationWeights:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return ArbitrationWeights.from_raw(
            doc["lambda"], float(doc["gamma"]), w_min=cfg.w_min, w_max=cfg.w_max
        )
    except (KeyError, TypeError) as exc:
        raise TelegraspError(f"bad weights file: {exc}") from None


def _solver_config(section: dict, seed: int | None) -> SolverConfig:
    cfg = SolverConfig()
    for key in ("gtol", "w_min", "w_max"):
        if key in section:
            setattr(cfg, key, float(section[key]))
    if "max_iters" in section:
        cfg.max_iters = int(section["max_iters"])
    if "extra_starts" in section:
        cfg.extra_starts = int(section["extra_starts"])
    if "per_task_weights" in section:
        cfg.per_task_weights = bool(section["per_task_weights"])
    if "pooled_fallback" in section:
        cfg.pooled_fallback = bool(section["pooled_fallback"])
    if seed is not None:
        cfg.seed = seed
    elif "seed" in section:
        cfg.seed = int(section["seed"])
    return cfg


def _cmd_fit(args) -> int:
    section = _section(args.config, "fit")
    cfg = FitConfig()
    cfg.eps_cov = args.eps_cov if args.eps_cov is not None else float(
        section.get("eps_cov", cfg.eps_cov))
    cfg.tol = args.tol if args.tol is not None else float(section.get("tol", cfg.tol))
    cfg.max_iters = args.max_iters if args.max_iters is not None else int(
        section.get("max_iters", cfg.max_iters))
    if "store_responsibilities" in section:
        cfg.store_responsibilities = bool(section["store_responsibilities"])
    tasks = TaskSet(args.task) if args.task else None
    demos, tasks, n_apertures = load_dataset(args.dataset, tasks)
    model = fit_em(demos, tasks, cfg, n_apertures=n_apertures)
    save_model(model, args.out)
    print(json.dumps({
        "model": str(args.out),
        "embodiment": model.embodiment,
        "classes": len(model.classes),
        "priors": [float(p) for p in model.priors],
        "iterations": model.fit_meta.iterations,
        "final_log_likelihood": model.fit_meta.final_log_likelihood,
        "converged": model.fit_meta.converged,
    }))
    return 0


def _cmd_kl(args) -> int:
    if len(args.model) < 2:
        raise TelegraspError("kl needs at least two --model files")
    models = [load_model(p) for p in args.model]
    names = models[0].tasks.names
    for m in models[1:]:
        if m.tasks.names != names:
            raise TelegraspError(
                f"model {m.embodiment!r} has tasks {list(m.tasks.names)}, "
                f"expected {list(names)}"
            )
    combination = models[0].tasks.combination(args.task)
    ids, table = kl_table(models, combination,
                          pooled_fallback=args.pooled_fallback)
    doc = {
        "combination": combination,
        "tasks": args.task,
        "ids": ids,
        "matrix": [[float(v) for v in row] for row in table],
    }
    if args.out is None:
        print(json.dumps(doc))
        return 0
    base = Path(args.out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    write_kl_csv(csv_path, ids, table)
    write_kl_json(json_path, ids, table, combination=combination,
                  task_names=args.task)
    print(json.dumps({"csv": str(csv_path), "json": str(json_path)}))
    return 0


def _load_models_arg(paths: list[str]):
    if not 1 <= len(paths) <= 2:
        raise TelegraspError("--model takes the robot model and optionally a "
                             "human model")
    robot = load_model(paths[0])
    human = load_model(paths[1]) if len(paths) == 2 else None
    return robot, human


def _cmd_solve(args) -> int:
    robot, human = _load_models_arg(args.model)
    bounds = _single_bounds(args.bounds)
    cfg = _solver_config(_section(args.config, "solve"), args.seed)
    with open(args.frame, "r", encoding="utf-8") as fh:
        frame = json.load(fh)
    if not isinstance(frame, dict) or "features" not in frame:
        raise TelegraspError("frame file needs a 'features' object")
    values, _ = parse_feature_payload(frame["features"])
    if args.intent is not None:
        intent = np.array([float(v) for v in args.intent.split(",")])
    elif frame.get("intent") is not None:
        intent = np.asarray(frame["intent"], dtype=float)
    elif human is not None:
        from .intent import estimate_intent

        intent = estimate_intent(human, values)
    else:
        raise TelegraspError("no intent: pass --intent, put it in the frame, "
                             "or provide a human model")
    weights = None
    if args.weights_override is not None:
        weights = _load_weights_override(args.weights_override, cfg)
    solution = solve(SolveRequest(
        mode=args.mode, human=values, robot_model=robot, bounds=bounds,
        intent=intent, weights_override=weights, human_model=human, config=cfg,
    ))
    print(json.dumps(solution.to_dict(robot.n_apertures)))
    return 0


def _cmd_replay(args) -> int:
    robot, human = _load_models_arg(args.model)
    bounds = _single_bounds(args.bounds)
    cfg = _solver_config(_section(args.config, "solve"), args.seed)
    trajectory = load_trajectory(args.trajectory)
    modes = list(dict.fromkeys(args.mode))
    out = Path(args.out)
    for mode in modes:
        report = replay(trajectory, robot, mode, bounds,
                        human_model=human, config=cfg)
        if len(modes) == 1:
            path = out
        else:
            path = out.with_name(f"{out.stem}.{mode}{out.suffix or '.json'}")
        write_report(report, path, include_timings=not args.no_timings)
        print(json.dumps({
            "mode": mode,
            "report": str(path),
            "summary": report.summary(include_timings=not args.no_timings),
        }))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, load_registry

    section = _section(args.config, "serve")
    port = args.port if args.port is not None else int(section.get("port", 8000))
    rate = args.rate_limit if args.rate_limit is not None else float(
        section.get("rate_limit", 30.0))
    registry = load_registry(args.models_dir, human_id=args.human_model)
    bounds_sets = load_bounds_file(args.bounds)
    app = create_app(registry, bounds_sets, rate_limit=rate,
                     console_dir=args.console)
    uvicorn.run(app, host=args.host, port=port)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "kl": _cmd_kl,
    "solve": _cmd_solve,
    "replay": _cmd_replay,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TelegraspError as exc:
        return _fail(exc)
    except FileNotFoundError as exc:
        return _fail(exc)
    except json.JSONDecodeError as exc:
        return _fail(exc)
    except (ValueError, KeyError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    raise SystemExit(main())
