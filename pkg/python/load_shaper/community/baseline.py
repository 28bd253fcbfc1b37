from __future__ import annotations

from typing import Dict

import numpy as np

from ..appliances.basic import baseline_start, run_profile
from ..appliances.ev import full_recharge_charging
from ..appliances.ewh import latest_start_heating
from ..appliances.home import audit_home_baseline
from ..appliances.hvac import simulate_thermostat_baseline
from ..core.errors import AuditError
from ..core.model import HomeSpec, TimeGrid


def build_baseline(home: HomeSpec, weather: np.ndarray, grid: TimeGrid) -> Dict[str, np.ndarray]:
    """Desirable per-appliance loads p_bar, audited against X_i.

    HVAC follows the thermostat, the EWH heats each draw as late as possible,
    the EV recharges to full after every trip and basic appliances run from
    their preferred start. Raises AuditError when the policy fails.
    """
    baseline: Dict[str, np.ndarray] = {}

    try:
        if home.hvac is not None:
            baseline["hvac"] = simulate_thermostat_baseline(home, weather, grid).p_kwh
        if home.ewh is not None:
            baseline["ewh"] = latest_start_heating(home, grid)
        if home.ev is not None:
            baseline["ev"] = full_recharge_charging(home, grid)

        for params in home.basics:
            baseline[params.name] = run_profile(params, grid, baseline_start(params))
    except ValueError as exc:
        raise AuditError(f"home {home.id}: baseline policy failed: {exc}", home=home.id) from exc

    audit_home_baseline(home.with_baseline(baseline), weather, grid)
    return baseline
