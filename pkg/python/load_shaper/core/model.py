from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InstanceFormatError


# =========================================================
# Constants
# =========================================================

# Slot order used for the N x M x K schedule tensors. Basic appliances with
# other names are appended after these in order of first appearance.
CANONICAL_APPLIANCES: Tuple[str, ...] = ("hvac", "ewh", "ev", "wm", "oven", "dryer")

HEATING = 1
COOLING = -1

KWH_TO_JOULES = 3.6e6

SCHEDULE_TOL = 1e-6


# =========================================================
# Strict helpers
# =========================================================

def _require_positive(value: float, path: Sequence) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InstanceFormatError(f"must be a finite number > 0, got {value!r}", path)

    return float(value)


def _require_nonnegative(value: float, path: Sequence) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise InstanceFormatError(f"must be a finite number >= 0, got {value!r}", path)

    return float(value)


def _require_length(vec: np.ndarray, length: int, path: Sequence) -> np.ndarray:
    arr = np.asarray(vec, dtype=float)

    if arr.ndim != 1 or arr.shape[0] != length:
        raise InstanceFormatError(
            f"expected a vector of length {length}, got shape {arr.shape}", path
        )

    if not np.all(np.isfinite(arr)):
        raise InstanceFormatError("contains non-finite values", path)

    return arr


# =========================================================
# Domain types
# =========================================================

@dataclass(frozen=True)
class TimeGrid:
    K: int = 96
    dt_hours: float = 0.25

    def __post_init__(self):
        if type(self.K) is not int or self.K < 1:
            raise InstanceFormatError(f"K must be an integer >= 1, got {self.K!r}", ("grid", "K"))

        _require_positive(self.dt_hours, ("grid", "dt_hours"))

    @property
    def horizon_hours(self) -> float:
        return self.K * self.dt_hours

    def kw_to_kwh(self, kw: float) -> float:
        return kw * self.dt_hours


@dataclass(frozen=True)
class HvacParams:
    gamma1: float
    gamma2: float           # degC per joule of delivered thermal energy
    alpha: float            # thermal conversion efficiency
    mode: int               # HEATING or COOLING
    nominal_kw: float       # N^m for the active mode
    t_low: float
    t_upper: float
    eps: float
    t_init: float


@dataclass(frozen=True, eq=False)
class EwhParams:
    demand_kg: np.ndarray           # y_EWH(t), length K
    tank_capacity_kg: float = 270.0
    max_power_kw: float = 4.0
    t_desired: float = 41.0
    t_tap: float = 4.0
    efficiency: float = 0.95
    specific_heat: float = 4186.0   # J / (kg degC)
    initial_kg: float = 0.0

    def kg_per_kwh(self) -> float:
        """Water mass heated from T_t to T_d by one kWh of electricity."""
        return KWH_TO_JOULES * self.efficiency / (self.specific_heat * (self.t_desired - self.t_tap))


@dataclass(frozen=True, eq=False)
class EvParams:
    trip_kwh: np.ndarray            # y_EV(t), length K
    battery_kwh: float = 60.0
    max_current_a: float = 24.0
    voltage_v: float = 240.0
    initial_kwh: float = 60.0

    def kwh_per_amp(self, dt_hours: float) -> float:
        return self.voltage_v * dt_hours / 1000.0


@dataclass(frozen=True)
class BasicApplianceParams:
    name: str
    power_kwh: float        # energy drawn per running interval
    duration: int           # k_app
    window_start: int
    window_end: int
    preferred_start: Optional[int] = None   # desirable start; defaults to window_start

    @property
    def window_length(self) -> int:
        return self.window_end - self.window_start + 1


@dataclass(frozen=True, eq=False)
class HomeSpec:
    id: int
    hvac: Optional[HvacParams] = None
    ewh: Optional[EwhParams] = None
    ev: Optional[EvParams] = None
    basics: Tuple[BasicApplianceParams, ...] = ()
    weights: Dict[str, float] = field(default_factory=dict)
    baseline: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def appliance_names(self) -> List[str]:
        names: List[str] = []

        if self.hvac is not None:
            names.append("hvac")
        if self.ewh is not None:
            names.append("ewh")
        if self.ev is not None:
            names.append("ev")

        names.extend(b.name for b in self.basics)
        return names

    def basic(self, name: str) -> BasicApplianceParams:
        for b in self.basics:
            if b.name == name:
                return b

        raise KeyError(f"home {self.id} has no basic appliance {name!r}")

    def with_baseline(self, baseline: Dict[str, np.ndarray]) -> "HomeSpec":
        return replace(self, baseline={k: np.asarray(v, dtype=float) for k, v in baseline.items()})


@dataclass(frozen=True, eq=False)
class CommunityInstance:
    grid: TimeGrid
    homes: Tuple[HomeSpec, ...]
    weather: np.ndarray             # T_out(t) degC
    target: np.ndarray              # Q(t) kWh
    seed: int = 0

    @property
    def N(self) -> int:
        return len(self.homes)

    @property
    def appliance_names(self) -> List[str]:
        return community_appliance_names(self.homes)

    @property
    def M(self) -> int:
        return len(self.appliance_names)

    def with_target(self, target: Sequence[float]) -> "CommunityInstance":
        q = _require_length(np.asarray(target, dtype=float), self.grid.K, ("target",))

        if np.any(q < 0):
            raise InstanceFormatError("target Q(t) must be >= 0", ("target",))

        return replace(self, target=q)

    def baseline_tensor(self) -> np.ndarray:
        names = self.appliance_names
        out = np.zeros((self.N, len(names), self.grid.K))

        for i, home in enumerate(self.homes):
            for name, vec in home.baseline.items():
                out[i, names.index(name)] = vec

        return out

    def weight_matrix(self) -> np.ndarray:
        names = self.appliance_names
        out = np.zeros((self.N, len(names)))

        for i, home in enumerate(self.homes):
            for name, c in home.weights.items():
                out[i, names.index(name)] = c

        return out


@dataclass(frozen=True, eq=False)
class Schedule:
    p: np.ndarray           # N x M x K, kWh per interval
    u_plus: np.ndarray      # N x M x K, kWh
    a: np.ndarray           # K, Q(t) - sum p

    @classmethod
    def from_loads(cls, instance: CommunityInstance, p: np.ndarray, u_plus: np.ndarray) -> "Schedule":
        p = np.asarray(p, dtype=float)
        u_plus = np.asarray(u_plus, dtype=float)
        a = instance.target - p.sum(axis=(0, 1))
        return cls(p=p, u_plus=u_plus, a=a)

    def aggregate_load(self) -> np.ndarray:
        return self.p.sum(axis=(0, 1))


def community_appliance_names(homes: Sequence[HomeSpec]) -> List[str]:
    present = set()
    extras: List[str] = []

    for home in homes:
        for name in home.appliance_names:
            if name not in CANONICAL_APPLIANCES and name not in extras:
                extras.append(name)
            present.add(name)

    return [n for n in CANONICAL_APPLIANCES if n in present] + extras


# =========================================================
# Validation
# =========================================================

def validate_home(home: HomeSpec, grid: TimeGrid, path: Sequence = ()) -> None:
    K = grid.K
    path = tuple(path)

    if home.hvac is not None:
        h = home.hvac
        hp = path + ("hvac",)

        if not h.t_low < h.t_upper:
            raise InstanceFormatError(
                f"t_low must be < t_upper, got {h.t_low} >= {h.t_upper}", hp + ("t_low",)
            )

        _require_nonnegative(h.eps, hp + ("eps",))
        _require_positive(h.alpha, hp + ("alpha",))
        _require_positive(h.nominal_kw, hp + ("nominal_kw",))
        _require_nonnegative(h.gamma1, hp + ("gamma1",))
        _require_nonnegative(h.gamma2, hp + ("gamma2",))

        if h.mode not in (HEATING, COOLING):
            raise InstanceFormatError(f"mode must be 1 or -1, got {h.mode!r}", hp + ("mode",))

    if home.ewh is not None:
        e = home.ewh
        ep = path + ("ewh",)

        _require_positive(e.tank_capacity_kg, ep + ("tank_capacity_kg",))
        _require_positive(e.max_power_kw, ep + ("max_power_kw",))
        _require_positive(e.specific_heat, ep + ("specific_heat",))
        _require_nonnegative(e.initial_kg, ep + ("initial_kg",))

        if not 0 < e.efficiency <= 1:
            raise InstanceFormatError(
                f"efficiency must lie in (0, 1], got {e.efficiency}", ep + ("efficiency",)
            )

        if not e.t_desired > e.t_tap:
            raise InstanceFormatError(
                f"t_desired must exceed t_tap, got {e.t_desired} <= {e.t_tap}", ep + ("t_desired",)
            )

        demand = _require_length(e.demand_kg, K, ep + ("demand_kg",))

        if np.any(demand < 0):
            raise InstanceFormatError("demand must be >= 0", ep + ("demand_kg",))

    if home.ev is not None:
        v = home.ev
        vp = path + ("ev",)

        _require_positive(v.battery_kwh, vp + ("battery_kwh",))
        _require_positive(v.max_current_a, vp + ("max_current_a",))
        _require_positive(v.voltage_v, vp + ("voltage_v",))
        _require_nonnegative(v.initial_kwh, vp + ("initial_kwh",))

        trips = _require_length(v.trip_kwh, K, vp + ("trip_kwh",))

        if np.any(trips < 0):
            raise InstanceFormatError("trip energy must be >= 0", vp + ("trip_kwh",))

        if np.any(trips > v.battery_kwh):
            t = int(np.argmax(trips > v.battery_kwh))
            raise InstanceFormatError(
                f"trip at t={t} needs {trips[t]:.3f} kWh > battery {v.battery_kwh} kWh "
                f"(structurally infeasible)",
                vp + ("trip_kwh", t),
            )

    seen = set()

    for j, b in enumerate(home.basics):
        bp = path + ("basics", j)

        if b.name in seen or b.name in ("hvac", "ewh", "ev"):
            raise InstanceFormatError(f"duplicate appliance name {b.name!r}", bp + ("name",))

        seen.add(b.name)
        _require_positive(b.power_kwh, bp + ("power_kwh",))

        if type(b.duration) is not int or b.duration < 1:
            raise InstanceFormatError(f"duration must be an integer >= 1, got {b.duration!r}", bp + ("duration",))

        if not 0 <= b.window_start <= b.window_end <= K - 1:
            raise InstanceFormatError(
                f"window must satisfy 0 <= start <= end <= {K - 1}, "
                f"got [{b.window_start}, {b.window_end}]",
                bp + ("window_start",),
            )

        if b.window_length < b.duration:
            raise InstanceFormatError(
                f"window length {b.window_length} shorter than duration {b.duration}",
                bp + ("window_end",),
            )

        if b.preferred_start is not None and not b.window_start <= b.preferred_start <= b.window_end:
            raise InstanceFormatError(
                f"preferred_start {b.preferred_start} outside window [{b.window_start}, {b.window_end}]",
                bp + ("preferred_start",),
            )

    names = home.appliance_names

    for name in names:
        if name not in home.weights:
            raise InstanceFormatError("missing weight", path + ("weights", name))

        _require_positive(home.weights[name], path + ("weights", name))

    for name, vec in home.baseline.items():
        if name not in names:
            raise InstanceFormatError("baseline for unknown appliance", path + ("baseline", name))

        base = _require_length(vec, K, path + ("baseline", name))

        if np.any(base < -SCHEDULE_TOL):
            raise InstanceFormatError("baseline must be >= 0", path + ("baseline", name))


def validate_instance(instance: CommunityInstance) -> None:
    K = instance.grid.K

    if instance.N < 1:
        raise InstanceFormatError("community must contain at least one home", ("homes",))

    _require_length(instance.weather, K, ("weather",))
    target = _require_length(instance.target, K, ("target",))

    if np.any(target < 0):
        raise InstanceFormatError("target Q(t) must be >= 0", ("target",))

    ids = set()

    for i, home in enumerate(instance.homes):
        if home.id in ids:
            raise InstanceFormatError(f"duplicate home id {home.id}", ("homes", i, "id"))

        ids.add(home.id)
        validate_home(home, instance.grid, ("homes", i))

        missing = [n for n in home.appliance_names if n not in home.baseline]

        if missing:
            raise InstanceFormatError(f"missing baseline for {missing}", ("homes", i, "baseline"))


# =========================================================
# Public API
# =========================================================

def target_profile(homes: Sequence[HomeSpec], grid: TimeGrid) -> np.ndarray:
    """Q(t) = time average of the community's total desirable consumption."""
    if len(homes) == 0:
        raise ValueError("target_profile needs at least one home (N=0)")

    total = 0.0

    for home in homes:
        for name in home.appliance_names:
            if name not in home.baseline:
                raise ValueError(f"home {home.id}: missing baseline for appliance {name!r}")

            total += float(np.sum(home.baseline[name]))

    return np.full(grid.K, total / grid.K)


def baseline_schedule(instance: CommunityInstance) -> Schedule:
    p = instance.baseline_tensor()
    return Schedule.from_loads(instance, p, np.zeros_like(p))


def check_schedule_shape(instance: CommunityInstance, schedule: Schedule) -> None:
    shape = (instance.N, instance.M, instance.grid.K)

    if schedule.p.shape != shape or schedule.u_plus.shape != shape:
        raise ValueError(
            f"schedule shape mismatch: expected p/u_plus {shape}, "
            f"got {schedule.p.shape} / {schedule.u_plus.shape}"
        )

    if schedule.a.shape != (instance.grid.K,):
        raise ValueError(f"schedule.a must have length {instance.grid.K}, got {schedule.a.shape}")


def schedule_residuals(instance: CommunityInstance, schedule: Schedule) -> Dict[str, float]:
    """Max violation of each Schedule invariant (0 when the schedule is clean)."""
    check_schedule_shape(instance, schedule)
    base = instance.baseline_tensor()

    return {
        "p_nonneg": float(max(0.0, -schedule.p.min(initial=0.0))),
        "u_plus_abs": float(max(0.0, (np.abs(schedule.p - base) - schedule.u_plus).max(initial=0.0))),
        "coupling": float(np.abs(schedule.a + schedule.p.sum(axis=(0, 1)) - instance.target).max(initial=0.0)),
    }


def objective_value(instance: CommunityInstance, schedule: Schedule) -> float:
    """sum_t |a(t)| + sum_{i,j,t} c_ij u+_ij(t)."""
    check_schedule_shape(instance, schedule)

    weights = instance.weight_matrix()
    comfort = float(np.sum(weights[:, :, None] * schedule.u_plus))
    return float(np.sum(np.abs(schedule.a))) + comfort


def baseline_objective(instance: CommunityInstance) -> float:
    return objective_value(instance, baseline_schedule(instance))
