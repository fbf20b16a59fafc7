"""Trajectory CSV/JSON writers and readers, stats re-aggregation, run manifests."""

from __future__ import annotations

import csv
import io
import json
import platform
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, kernels
from .config import SCHEMA_VERSION, config_to_dict
from .engine import SimulationConfig, episode_seeds
from .model import Trajectory

CSV_COLUMNS = (
    "episode", "t", "player", "action", "r", "s", "T", "K", "S", "V",
    "sanction_level", "stage_utility", "audited", "flagged",
)
MANIFEST_VERSION = 1


def _num(x: float) -> str:
    return repr(float(x))


def trajectory_rows(trajectories: Sequence[Trajectory]) -> Iterable[dict]:
    for ep, traj in enumerate(trajectories):
        for rec in traj.steps:
            st = rec.state
            for pid in st.active:
                ch = rec.choices[pid]
                yield {
                    "episode": ep,
                    "t": st.t,
                    "player": pid,
                    "action": ch.action.value,
                    "r": float(ch.r),
                    "s": int(ch.s),
                    "T": st.T[pid],
                    "K": st.K,
                    "S": st.S,
                    "V": int(st.V[pid]),
                    "sanction_level": st.sanctions[pid].level.label,
                    "stage_utility": rec.utilities[pid].total,
                    "audited": int(pid in rec.audited),
                    "flagged": int(pid in rec.flagged),
                }


def trajectory_csv(trajectories: Sequence[Trajectory]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in trajectory_rows(trajectories):
        w.writerow([_num(row[c]) if isinstance(row[c], float) else row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def trajectory_json(trajectories: Sequence[Trajectory]) -> str:
    return json.dumps(
        {"schema_version": SCHEMA_VERSION, "columns": list(CSV_COLUMNS), "rows": list(trajectory_rows(trajectories))},
        indent=1,
    )


def read_trajectory_csv(path_or_text) -> list[dict]:
    text = Path(path_or_text).read_text() if isinstance(path_or_text, Path) else path_or_text
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        for k in ("episode", "t", "s", "V", "audited", "flagged"):
            row[k] = int(row[k])
        for k in ("r", "T", "K", "S", "stage_utility"):
            row[k] = float(row[k])
        rows.append(row)
    return rows


def reaggregate(rows: Sequence[dict], delta: float) -> dict:
    """Per-episode discounted utilities, defection frequency and detections from CSV rows."""
    disc = defaultdict(lambda: defaultdict(list))
    defect = defaultdict(int)
    steps = defaultdict(int)
    det = defaultdict(int)
    for row in rows:
        ep = row["episode"]
        disc[ep][row["player"]].append((row["t"], row["stage_utility"]))
        steps[ep] += 1
        defect[ep] += row["action"] == "Defect"
        det[ep] += row["flagged"]
    out = {}
    for ep in sorted(steps):
        du = {}
        for pid, pairs in disc[ep].items():
            pairs.sort()
            t0 = pairs[0][0]
            u = np.array([u for _, u in pairs])
            du[pid] = float(delta ** t0 * kernels.discounted_sum(u, delta))
        out[ep] = {"discounted_utility": du, "defection_frequency": defect[ep] / steps[ep], "detections": det[ep]}
    return out


def build_info() -> dict:
    return {
        "package": "agigame",
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def manifest(config: SimulationConfig, command: str, extra: dict | None = None) -> dict:
    out = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": config_to_dict(config),
        "master_seed": config.master_seed,
        "episode_seeds": episode_seeds(config),
        "build": build_info(),
    }
    if extra:
        out.update(extra)
    return out


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
