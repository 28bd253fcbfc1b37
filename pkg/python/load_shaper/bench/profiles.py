from __future__ import annotations

from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd

from ..core.model import CommunityInstance, Schedule, baseline_schedule, check_schedule_shape


PROFILE_COLUMNS = ["t", "q_target", "load_desirable", "load_optimal"]


def load_profile_frame(instance: CommunityInstance, schedule: Schedule) -> pd.DataFrame:
    check_schedule_shape(instance, schedule)

    return pd.DataFrame(
        {
            "t": np.arange(instance.grid.K),
            "q_target": instance.target,
            "load_desirable": baseline_schedule(instance).aggregate_load(),
            "load_optimal": schedule.aggregate_load(),
        },
        columns=PROFILE_COLUMNS,
    )


def export_load_profile(
    instance: CommunityInstance,
    schedule: Schedule,
    path: Union[str, Path],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    load_profile_frame(instance, schedule).to_csv(path, index=False)
    return path


def profile_sparsity(instance: CommunityInstance, schedule: Schedule, tol: float = 1e-6) -> Dict[str, float]:
    """How often the optimised aggregate load hits the target exactly."""
    frame = load_profile_frame(instance, schedule)
    dev_opt = (frame["load_optimal"] - frame["q_target"]).abs()
    dev_des = (frame["load_desirable"] - frame["q_target"]).abs()

    return {
        "zero_fraction": float((dev_opt <= tol).mean()),
        "abs_dev_optimal": float(dev_opt.sum()),
        "abs_dev_desirable": float(dev_des.sum()),
    }
