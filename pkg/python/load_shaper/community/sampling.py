"""
Randomised home preferences
===========================
GenConfig holds every distribution parameter of the community generator;
sample_home draws one HomeSpec (without its baseline) from a per-home RNG.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core.model import (
    CANONICAL_APPLIANCES,
    COOLING,
    HEATING,
    BasicApplianceParams,
    EvParams,
    EwhParams,
    HomeSpec,
    HvacParams,
    TimeGrid,
)
from ..core.settings import GEN_CONFIG


# Earliest EWH draw; leaves room for latest-start heating before the first event.
EWH_FIRST_EVENT = 4


@dataclass(frozen=True)
class GenConfig:
    N: int
    seed: int = 0
    intervals: int = GEN_CONFIG["intervals"]
    interval_hours: float = GEN_CONFIG["interval_hours"]
    appliances: Tuple[str, ...] = CANONICAL_APPLIANCES
    weather_csv: Optional[str] = None
    weather_low_c: float = GEN_CONFIG["weather_low_c"]
    weather_high_c: float = GEN_CONFIG["weather_high_c"]
    max_resamples: int = GEN_CONFIG["max_resamples"]

    # comfort weights c_ij ~ U[lo, hi]
    weight_range: Tuple[float, float] = (0.1, 1.0)

    # HVAC
    gamma1: Tuple[float, float] = (0.10, 0.001)         # mean, std
    gamma2: Tuple[float, float] = (3e-6, 1e-7)
    t_low_range: Tuple[int, int] = (19, 24)
    comfort_width_c: float = 2.0
    hvac_eps_c: float = 0.5
    hvac_alpha: float = 0.9
    heating_kw: float = 3.0
    cooling_kw: float = 2.0

    # EWH
    ewh_demand_kg: Tuple[float, float] = (30.0, 10.0)
    ewh_events: Tuple[int, int] = (2, 5)
    ewh_t_desired: Tuple[float, float] = (40.0, 42.0)
    ewh_t_tap: float = 4.0
    ewh_efficiency: float = 0.95
    ewh_specific_heat: float = 4186.0
    ewh_max_kw: float = 4.0
    ewh_capacity_kg: float = 270.0

    # EV
    ev_battery_kwh: float = 60.0
    ev_trip_miles: Tuple[int, int] = (5, 9)
    ev_trips: Tuple[int, int] = (4, 12)
    ev_kwh_per_mile: float = 0.346
    ev_max_current_a: float = 24.0
    ev_voltage_v: float = 240.0

    # basic appliances: name -> (rated kW, duration)
    basic_ratings: Tuple[Tuple[str, float, int], ...] = (
        ("wm", 2.0, 4),
        ("oven", 2.4, 4),
        ("dryer", 3.0, 4),
    )
    window_before: int = 4
    window_after: int = 8

    def __post_init__(self):
        if type(self.N) is not int or self.N < 1:
            raise ValueError(f"N must be an integer >= 1, got {self.N!r}")

        unknown = [a for a in self.appliances if a not in CANONICAL_APPLIANCES]

        if unknown:
            raise ValueError(f"unknown appliance(s) {unknown}; choose from {CANONICAL_APPLIANCES}")

        for name in ("weight_range", "t_low_range", "ewh_events", "ewh_t_desired", "ev_trip_miles", "ev_trips"):
            lo, hi = getattr(self, name)

            if lo > hi:
                raise ValueError(f"{name} must be a nonempty range, got {(lo, hi)}")

        if self.weight_range[0] <= 0:
            raise ValueError(f"weight_range must be > 0, got {self.weight_range}")

        if self.max_resamples < 1:
            raise ValueError(f"max_resamples must be >= 1, got {self.max_resamples}")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.intervals, self.interval_hours)


def _sample_hvac(rng: np.random.Generator, config: GenConfig, weather: np.ndarray) -> HvacParams:
    t_low = float(rng.integers(config.t_low_range[0], config.t_low_range[1] + 1))
    t_upper = t_low + config.comfort_width_c
    mode = HEATING if float(np.mean(weather)) < (t_low + t_upper) / 2.0 else COOLING

    return HvacParams(
        gamma1=float(rng.normal(*config.gamma1)),
        gamma2=float(abs(rng.normal(*config.gamma2))),
        alpha=config.hvac_alpha,
        mode=mode,
        nominal_kw=config.heating_kw if mode == HEATING else config.cooling_kw,
        t_low=t_low,
        t_upper=t_upper,
        eps=config.hvac_eps_c,
        t_init=t_low + config.comfort_width_c / 2.0,
    )


def _sample_ewh(rng: np.random.Generator, config: GenConfig, grid: TimeGrid) -> EwhParams:
    K = grid.K
    slots = np.arange(min(EWH_FIRST_EVENT, K - 1), K)
    count = min(int(rng.integers(config.ewh_events[0], config.ewh_events[1] + 1)), len(slots))
    times = rng.choice(slots, size=count, replace=False)

    demand = np.zeros(K)
    draws = np.abs(rng.normal(*config.ewh_demand_kg, size=count))
    demand[times] = np.minimum(draws, config.ewh_capacity_kg)

    return EwhParams(
        demand_kg=demand,
        tank_capacity_kg=config.ewh_capacity_kg,
        max_power_kw=config.ewh_max_kw,
        t_desired=float(rng.uniform(*config.ewh_t_desired)),
        t_tap=config.ewh_t_tap,
        efficiency=config.ewh_efficiency,
        specific_heat=config.ewh_specific_heat,
        initial_kg=0.0,
    )


def _sample_ev(rng: np.random.Generator, config: GenConfig, grid: TimeGrid) -> EvParams:
    K = grid.K
    count = min(int(rng.integers(config.ev_trips[0], config.ev_trips[1] + 1)), K)
    times = rng.choice(K, size=count, replace=False)
    miles = rng.integers(config.ev_trip_miles[0], config.ev_trip_miles[1] + 1, size=count)

    trips = np.zeros(K)
    trips[times] = config.ev_kwh_per_mile * miles

    return EvParams(
        trip_kwh=trips,
        battery_kwh=config.ev_battery_kwh,
        max_current_a=config.ev_max_current_a,
        voltage_v=config.ev_voltage_v,
        initial_kwh=config.ev_battery_kwh,
    )


def _sample_basic(
    rng: np.random.Generator,
    config: GenConfig,
    grid: TimeGrid,
    name: str,
    rated_kw: float,
    duration: int,
) -> BasicApplianceParams:
    K = grid.K

    if duration > K:
        raise ValueError(f"{name}: duration {duration} exceeds the horizon K={K}")

    s = int(rng.integers(0, K))
    start = max(s - config.window_before, 0)
    end = min(s + config.window_after, K - 1)

    # near the horizon edges the clamped window may be too short
    if end - start + 1 < duration:
        start = max(0, end - duration + 1)
        end = min(K - 1, start + duration - 1)

    return BasicApplianceParams(
        name=name,
        power_kwh=grid.kw_to_kwh(rated_kw),
        duration=duration,
        window_start=start,
        window_end=end,
        preferred_start=min(max(s, start), end),
    )


def sample_home(
    rng: np.random.Generator,
    config: GenConfig,
    weather: np.ndarray,
    home_id: int = 0,
) -> HomeSpec:
    grid = config.grid

    if len(weather) != grid.K:
        raise ValueError(f"weather has length {len(weather)}, expected K={grid.K}")

    wanted = set(config.appliances)

    hvac = _sample_hvac(rng, config, weather) if "hvac" in wanted else None
    ewh = _sample_ewh(rng, config, grid) if "ewh" in wanted else None
    ev = _sample_ev(rng, config, grid) if "ev" in wanted else None

    basics = tuple(
        _sample_basic(rng, config, grid, name, kw, k)
        for name, kw, k in config.basic_ratings
        if name in wanted
    )

    home = HomeSpec(id=home_id, hvac=hvac, ewh=ewh, ev=ev, basics=basics)
    lo, hi = config.weight_range
    weights = {name: float(rng.uniform(lo, hi)) for name in home.appliance_names}

    return HomeSpec(id=home_id, hvac=hvac, ewh=ewh, ev=ev, basics=basics, weights=weights)
