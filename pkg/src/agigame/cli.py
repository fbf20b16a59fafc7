"""Command line: ``agigame {run,check,deviate,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .analysis import (
    check_theorem1,
    defection_bound,
    deviation_library,
    deviation_test,
    empirical_defection_rate,
)
from .config import parse_config
from .engine import SimulationConfig, aggregate, run_episodes
from .errors import ConfigError, OutOfRange
from .mechanisms import MechanismConfig
from .model import Parameters
from .serialize import dump_json, manifest, trajectory_csv, trajectory_json
from .strategies import StrategyKind, StrategySpec

log = logging.getLogger("agigame")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load(args) -> SimulationConfig:
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "episodes", None) is not None:
        try:
            cfg = replace(cfg, episodes=args.episodes)
        except OutOfRange as exc:
            raise ConfigError(str(exc), field="episodes") from None
    return cfg


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> dict:
    cfg = _load(args)
    trajectories = run_episodes(cfg, record=True, workers=args.workers)
    founder_ids = [f"p{k}" for k in range(cfg.params.n_initial)]
    stats = aggregate([tr.summary for tr in trajectories], founder_ids)
    out = _outdir(args) or Path(".")
    paths = {}
    if args.format == "json":
        paths["trajectory"] = out / "trajectory.json"
        paths["trajectory"].write_text(trajectory_json(trajectories))
    else:
        paths["trajectory"] = out / "trajectory.csv"
        paths["trajectory"].write_text(trajectory_csv(trajectories))
    paths["stats"] = out / "stats.json"
    paths["stats"].write_text(dump_json(stats.to_dict()))
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(dump_json(manifest(cfg, "run")))
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return {k: str(v) for k, v in paths.items()}


def cmd_check(args) -> dict:
    cfg = _load(args)
    rep = check_theorem1(cfg.params)
    freq = cfg.audit_frequency
    tau = cfg.mechanisms.effective_tau
    eps = defection_bound(freq, cfg.params.xi, tau)
    payload = rep.to_dict()
    payload["theorem2"] = {"audit_frequency": freq, "xi": cfg.params.xi, "tau": tau, "epsilon": eps}
    text = [
        f"cond1 network effects dominate   beta > gamma + xi/mu     : {rep.cond1.holds} (margin {rep.cond1.margin:+.6g})",
        f"cond2 verification affordable    theta <= mu*beta/delta   : {rep.cond2.holds} (margin {rep.cond2.margin:+.6g})",
        f"cond3 punishments credible       xi >= lambda*alpha/delta : {rep.cond3.holds} (margin {rep.cond3.margin:+.6g})",
        f"pi_C={rep.pi_cooperate:.6g} pi_D={rep.pi_defect:.6g} pi_P={rep.pi_punishment:.6g}",
        "folk delta_min: " + ("degenerate (pi_D <= pi_P)" if rep.folk_degenerate else f"{rep.folk_delta_min:.6g}")
        + f"; delta={rep.delta} -> {'satisfied' if rep.folk_satisfied else 'not satisfied'}",
        f"defection bound eps(p={freq:.6g}, xi={cfg.params.xi:.6g}, tau={tau}) = {eps:.6g}",
    ]
    if args.format == "json":
        print(dump_json(payload), end="")
    else:
        print("\n".join(text))
    out = _outdir(args)
    if out is not None:
        (out / "check.json").write_text(dump_json(payload))
    return payload


def _named_strategy(name: str, base: StrategySpec, defect_at: int) -> StrategySpec:
    lib = deviation_library(base, defect_at)
    if name in lib:
        return lib[name]
    try:
        kind = StrategyKind(name)
    except ValueError:
        raise ConfigError(
            f"unknown strategy {name!r}; use one of {sorted(lib)} or {[k.value for k in StrategyKind]}",
            field="strategy",
        ) from None
    params = {"at": defect_at} if kind is StrategyKind.DEFECT_ONCE else {}
    return StrategySpec(kind, base.r_cooperate, base.r_defect, params)


def cmd_deviate(args) -> dict:
    cfg = _load(args)
    if not 0 <= args.deviant < cfg.params.n_initial:
        raise ConfigError(f"deviant must be a founder index in [0, {cfg.params.n_initial})", field="deviant")
    spec = _named_strategy(args.strategy, cfg.strategy_for(args.deviant), args.defect_at)
    rep = deviation_test(cfg, args.deviant, spec, tail_tolerance=args.tail_tolerance)
    payload = rep.to_dict()
    if args.format == "json":
        print(dump_json(payload), end="")
    else:
        lo, hi = rep.difference_ci
        print(
            f"{rep.deviant} -> {args.strategy}: baseline {rep.baseline_mean:.6g}, deviant {rep.deviant_mean:.6g}, "
            f"difference {rep.difference_mean:+.6g} [{lo:+.6g}, {hi:+.6g}] over {rep.episodes} paired episodes: "
            f"{rep.verdict.value}"
        )
    out = _outdir(args)
    if out is not None:
        (out / "deviation.json").write_text(dump_json(payload))
        (out / "manifest.json").write_text(dump_json(manifest(cfg, "deviate", {"deviant": args.deviant, "strategy": args.strategy})))
    return payload


def _with_value(cfg: SimulationConfig, name: str, value: float) -> SimulationConfig:
    pnames = set(Parameters.__dataclass_fields__)
    mnames = set(MechanismConfig.__dataclass_fields__)
    try:
        if name in pnames:
            v = int(value) if name in ("horizon", "n_initial") else value
            return replace(cfg, params=cfg.params.replace(**{name: v}))
        if name in mnames:
            v = int(value) if name in ("tau", "sanction_delay", "redemption_steps") else value
            return replace(cfg, mechanisms=replace(cfg.mechanisms, **{name: v}))
    except OutOfRange as exc:
        raise ConfigError(f"sweep value rejected: {exc}", field=name) from None
    raise ConfigError(f"cannot sweep unknown parameter {name!r}", field=name)


def sweep_rows(cfg: SimulationConfig, name: str, grid) -> list[dict]:
    rows = []
    for value in grid:
        c = _with_value(cfg, name, value)
        rate = empirical_defection_rate(c)
        rep = check_theorem1(c.params)
        verdict = "cooperative" if rep.all_conditions and rep.folk_satisfied else "not_cooperative"
        rows.append(
            {
                name: value,
                "defection_rate": rate.rate,
                "epsilon": rate.epsilon,
                "cooperation_verdict": verdict,
            }
        )
    return rows


def cmd_sweep(args) -> dict:
    cfg = _load(args)
    try:
        grid = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}", field="values") from None
    if not grid:
        raise ConfigError("--values is empty", field="values")
    rows = sweep_rows(cfg, args.param, grid)
    if args.format == "json":
        text = dump_json(rows)
        fname = "sweep.json"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([args.param, "defection_rate", "epsilon", "cooperation_verdict"])
        for r in rows:
            w.writerow([repr(r[args.param]), repr(r["defection_rate"]), repr(r["epsilon"]), r["cooperation_verdict"]])
        text = buf.getvalue()
        fname = "sweep.csv"
    out = _outdir(args)
    if out is not None:
        (out / fname).write_text(text)
        (out / "manifest.json").write_text(dump_json(manifest(cfg, "sweep", {"param": args.param, "values": grid})))
    else:
        print(text, end="")
    return {"rows": rows}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="agigame", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_required=False):
        p.add_argument("--config", required=True, help="JSON config or run manifest")
        p.add_argument("--out", required=out_required, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--episodes", type=int, default=None, help="override the episode count")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("run", help="simulate an ensemble and write trajectories, stats and manifest")
    common(p, out_required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="theorem conditions, folk threshold and defection bound")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("deviate", help="paired deviation test for one founder")
    common(p)
    p.add_argument("--deviant", type=int, default=0)
    p.add_argument("--strategy", default="always_defect")
    p.add_argument("--defect-at", type=int, default=0)
    p.add_argument("--tail-tolerance", type=float, default=None)
    p.set_defaults(func=cmd_deviate)

    p = sub.add_parser("sweep", help="defection rate and bound over a parameter grid")
    common(p)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated grid")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, OutOfRange, FileNotFoundError, IsADirectoryError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime error: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
