from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import InstanceFormatError
from .model import (
    BasicApplianceParams,
    CommunityInstance,
    EvParams,
    EwhParams,
    HomeSpec,
    HvacParams,
    Schedule,
    TimeGrid,
    validate_instance,
)


FORMAT_TAG = "load-shaper-instance/1"

SCHEDULE_CSV_COLUMNS = ["t", "home", "appliance", "p_kwh", "u_plus_kwh"]


# =========================================================
# Wire schema
# =========================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridIn(_Strict):
    intervals: int
    interval_hours: float


class HvacIn(_Strict):
    gamma1: float
    gamma2_c_per_j: float
    alpha: float
    mode: int
    nominal_kw: float
    t_low_c: float
    t_upper_c: float
    eps_c: float
    t_init_c: float


class EwhIn(_Strict):
    demand_kg: List[float]
    tank_capacity_kg: float
    max_power_kw: float
    t_desired_c: float
    t_tap_c: float
    efficiency: float
    specific_heat_j_per_kg_c: float
    initial_kg: float


class EvIn(_Strict):
    trip_kwh: List[float]
    battery_kwh: float
    max_current_a: float
    voltage_v: float
    initial_kwh: float


class BasicIn(_Strict):
    name: str
    power_kwh: float
    duration: int
    window_start: int
    window_end: int
    preferred_start: Optional[int] = None


class HomeIn(_Strict):
    id: int
    hvac: Optional[HvacIn] = None
    ewh: Optional[EwhIn] = None
    ev: Optional[EvIn] = None
    basics: List[BasicIn] = []
    weights: Dict[str, float]
    baseline_kwh: Dict[str, List[float]]


class InstanceIn(_Strict):
    format: str
    seed: int
    grid: GridIn
    weather_c: List[float]
    target_kwh: List[float]
    homes: List[HomeIn]


# =========================================================
# Conversions
# =========================================================

def _floats(vec) -> List[float]:
    return [float(x) for x in np.asarray(vec, dtype=float)]


def _home_to_wire(home: HomeSpec) -> dict:
    out: dict = {"id": int(home.id), "hvac": None, "ewh": None, "ev": None}

    if home.hvac is not None:
        h = home.hvac
        out["hvac"] = {
            "gamma1": float(h.gamma1),
            "gamma2_c_per_j": float(h.gamma2),
            "alpha": float(h.alpha),
            "mode": int(h.mode),
            "nominal_kw": float(h.nominal_kw),
            "t_low_c": float(h.t_low),
            "t_upper_c": float(h.t_upper),
            "eps_c": float(h.eps),
            "t_init_c": float(h.t_init),
        }

    if home.ewh is not None:
        e = home.ewh
        out["ewh"] = {
            "demand_kg": _floats(e.demand_kg),
            "tank_capacity_kg": float(e.tank_capacity_kg),
            "max_power_kw": float(e.max_power_kw),
            "t_desired_c": float(e.t_desired),
            "t_tap_c": float(e.t_tap),
            "efficiency": float(e.efficiency),
            "specific_heat_j_per_kg_c": float(e.specific_heat),
            "initial_kg": float(e.initial_kg),
        }

    if home.ev is not None:
        v = home.ev
        out["ev"] = {
            "trip_kwh": _floats(v.trip_kwh),
            "battery_kwh": float(v.battery_kwh),
            "max_current_a": float(v.max_current_a),
            "voltage_v": float(v.voltage_v),
            "initial_kwh": float(v.initial_kwh),
        }

    out["basics"] = [
        {
            "name": b.name,
            "power_kwh": float(b.power_kwh),
            "duration": int(b.duration),
            "window_start": int(b.window_start),
            "window_end": int(b.window_end),
            "preferred_start": None if b.preferred_start is None else int(b.preferred_start),
        }
        for b in home.basics
    ]
    out["weights"] = {name: float(c) for name, c in home.weights.items()}
    out["baseline_kwh"] = {name: _floats(v) for name, v in home.baseline.items()}

    return out


def _home_from_wire(h: HomeIn) -> HomeSpec:
    hvac = None
    ewh = None
    ev = None

    if h.hvac is not None:
        hvac = HvacParams(
            gamma1=h.hvac.gamma1,
            gamma2=h.hvac.gamma2_c_per_j,
            alpha=h.hvac.alpha,
            mode=h.hvac.mode,
            nominal_kw=h.hvac.nominal_kw,
            t_low=h.hvac.t_low_c,
            t_upper=h.hvac.t_upper_c,
            eps=h.hvac.eps_c,
            t_init=h.hvac.t_init_c,
        )

    if h.ewh is not None:
        ewh = EwhParams(
            demand_kg=np.asarray(h.ewh.demand_kg, dtype=float),
            tank_capacity_kg=h.ewh.tank_capacity_kg,
            max_power_kw=h.ewh.max_power_kw,
            t_desired=h.ewh.t_desired_c,
            t_tap=h.ewh.t_tap_c,
            efficiency=h.ewh.efficiency,
            specific_heat=h.ewh.specific_heat_j_per_kg_c,
            initial_kg=h.ewh.initial_kg,
        )

    if h.ev is not None:
        ev = EvParams(
            trip_kwh=np.asarray(h.ev.trip_kwh, dtype=float),
            battery_kwh=h.ev.battery_kwh,
            max_current_a=h.ev.max_current_a,
            voltage_v=h.ev.voltage_v,
            initial_kwh=h.ev.initial_kwh,
        )

    basics = tuple(
        BasicApplianceParams(
            name=b.name,
            power_kwh=b.power_kwh,
            duration=b.duration,
            window_start=b.window_start,
            window_end=b.window_end,
            preferred_start=b.preferred_start,
        )
        for b in h.basics
    )

    return HomeSpec(
        id=h.id,
        hvac=hvac,
        ewh=ewh,
        ev=ev,
        basics=basics,
        weights=dict(h.weights),
        baseline={k: np.asarray(v, dtype=float) for k, v in h.baseline_kwh.items()},
    )


# =========================================================
# Public API
# =========================================================

def instance_to_dict(instance: CommunityInstance) -> dict:
    return {
        "format": FORMAT_TAG,
        "seed": int(instance.seed),
        "grid": {
            "intervals": int(instance.grid.K),
            "interval_hours": float(instance.grid.dt_hours),
        },
        "weather_c": _floats(instance.weather),
        "target_kwh": _floats(instance.target),
        "homes": [_home_to_wire(h) for h in instance.homes],
    }


def serialize_instance(instance: CommunityInstance) -> bytes:
    # Python's float repr is shortest-round-trip, so reals survive exactly.
    return json.dumps(instance_to_dict(instance), ensure_ascii=False).encode("utf-8")


def deserialize_instance(data: bytes | str) -> CommunityInstance:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InstanceFormatError(f"not UTF-8: {exc}") from exc

    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"malformed JSON (truncated or corrupt) at line {exc.lineno} col {exc.colno}: {exc.msg}"
        ) from exc

    try:
        wire = InstanceIn.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise InstanceFormatError(
            f"{first['msg']} ({first['type']}); {exc.error_count()} error(s) total",
            tuple(first["loc"]),
        ) from exc

    if wire.format != FORMAT_TAG:
        raise InstanceFormatError(f"unsupported format {wire.format!r}, expected {FORMAT_TAG!r}", ("format",))

    instance = CommunityInstance(
        grid=TimeGrid(K=wire.grid.intervals, dt_hours=wire.grid.interval_hours),
        homes=tuple(_home_from_wire(h) for h in wire.homes),
        weather=np.asarray(wire.weather_c, dtype=float),
        target=np.asarray(wire.target_kwh, dtype=float),
        seed=wire.seed,
    )

    validate_instance(instance)
    return instance


def write_instance(instance: CommunityInstance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_instance(instance))
    return path


def read_instance(path: str | Path) -> CommunityInstance:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read instance {path}: {exc}") from exc

    return deserialize_instance(data)


def schedule_frame(instance: CommunityInstance, schedule: Schedule) -> pd.DataFrame:
    names = instance.appliance_names
    rows = []

    for t in range(instance.grid.K):
        for i, home in enumerate(instance.homes):
            for name in home.appliance_names:
                j = names.index(name)
                rows.append(
                    (t, home.id, name, float(schedule.p[i, j, t]), float(schedule.u_plus[i, j, t]))
                )

    return pd.DataFrame(rows, columns=SCHEDULE_CSV_COLUMNS)


def write_schedule_csv(instance: CommunityInstance, schedule: Schedule, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    schedule_frame(instance, schedule).to_csv(path, index=False, float_format="%.12g")
    return path


def read_schedule_csv(instance: CommunityInstance, path: str | Path) -> Schedule:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InstanceFormatError(f"cannot read schedule CSV {path}: {exc}", ("schedule",)) from exc

    missing = [c for c in SCHEDULE_CSV_COLUMNS if c not in frame.columns]

    if missing:
        raise InstanceFormatError(f"schedule CSV {path} lacks columns {missing}", ("schedule",))

    names = instance.appliance_names
    position = {home.id: i for i, home in enumerate(instance.homes)}
    K = instance.grid.K
    p = np.zeros((instance.N, len(names), K))
    u = np.zeros_like(p)

    for row in frame.itertuples(index=False):
        if row.home not in position or row.appliance not in names or not 0 <= row.t < K:
            raise InstanceFormatError(
                f"schedule row (t={row.t}, home={row.home}, appliance={row.appliance}) not in instance",
                ("schedule",),
            )

        i, j, t = position[row.home], names.index(row.appliance), int(row.t)
        p[i, j, t] = row.p_kwh
        u[i, j, t] = row.u_plus_kwh

    return Schedule.from_loads(instance, p, u)


def read_target_csv(path: str | Path, K: int) -> np.ndarray:
    """Q(t) from a CSV with a `q_target` column (the load-profile export works as input)."""
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise InstanceFormatError(f"cannot read target CSV {path}: {exc}", ("target",)) from exc

    if "q_target" not in frame.columns:
        raise InstanceFormatError(f"target CSV {path} lacks a q_target column", ("target",))

    q = frame["q_target"].to_numpy(dtype=float)

    if q.shape != (K,) or not np.all(np.isfinite(q)) or np.any(q < 0):
        raise InstanceFormatError(f"target CSV {path} must hold {K} finite values >= 0", ("target",))

    return q
