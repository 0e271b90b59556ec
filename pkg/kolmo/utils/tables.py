"""
CSV / JSON artifacts.

- CSV tables go through pandas (shortest round-trip float formatting)
- JSON reports are plain dicts dumped with sorted keys
"""
import dataclasses
import enum
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np
import pandas as pd

from kolmo.models.results import CycleScan, DisplacementSample, LyapunovSequence, UnfoldSchedule

DISPLACEMENT_COLUMNS = ["rho", "delta"]
CYCLE_COLUMNS = ["rho_star", "period", "stability", "margin"]
LYAPUNOV_COLUMNS = ["k", "W", "noise"]


# ─── DataFrames ───────────────────────────────────────────────────────────────

def displacement_frame(samples: Iterable[DisplacementSample]) -> pd.DataFrame:
    rows = [{"rho": float(s.rho), "delta": float(s.delta)} for s in samples]
    return pd.DataFrame(rows, columns=DISPLACEMENT_COLUMNS)


def cycles_frame(scan: CycleScan) -> pd.DataFrame:
    rows = [
        {"rho_star": c.rho_star, "period": c.period, "stability": c.stability.value, "margin": c.margin}
        for c in scan.cycles
    ]
    return pd.DataFrame(rows, columns=CYCLE_COLUMNS)


def lyapunov_frame(seq: LyapunovSequence) -> pd.DataFrame:
    noise = list(seq.noise) + [0.0] * (len(seq.W) - len(seq.noise))
    rows = [{"k": k, "W": float(w), "noise": float(n)} for k, (w, n) in enumerate(zip(seq.W, noise), start=1)]
    return pd.DataFrame(rows, columns=LYAPUNOV_COLUMNS)


def write_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    return path


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)


# ─── JSON ─────────────────────────────────────────────────────────────────────

def to_jsonable(obj):
    """Recursively turn result records into JSON-ready values."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if f.name not in ("polyline", "system")}
    if hasattr(obj, "model_dump"):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def write_json(obj, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj) + "\n", encoding="utf-8")
    return path


def read_json(path: Union[str, Path]):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def schedule_summary(schedule: UnfoldSchedule) -> dict:
    data = to_jsonable(schedule)
    data["max_nested"] = schedule.max_nested
    return data


def stage_rows(schedule: UnfoldSchedule) -> List[dict]:
    return [
        {"stage": s.name, "cycles": len(s.cycles), "signs": "".join("+" if v > 0 else "-" if v < 0 else "0"
                                                                     for v in s.sign_pattern)}
        for s in schedule.stages
    ]
