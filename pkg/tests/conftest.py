import itertools

import hypothesis
import numpy as np
import pytest

from load_shaper.appliances.basic import feasible_starts, run_profile
from load_shaper.bench.tightness import small_wm_home
from load_shaper.community.generator import generate_community
from load_shaper.community.sampling import GenConfig
from load_shaper.core.model import BasicApplianceParams, CommunityInstance, HomeSpec, TimeGrid, target_profile

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=25, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")


# (window_start, window_end, preferred_start, weight) per home
WM_HOMES = ((0, 3, 0, 0.2), (0, 5, 0, 0.3), (2, 7, 2, 0.25))


def wm_only_community(specs=WM_HOMES, K: int = 8, power_kwh: float = 1.0, duration: int = 2) -> CommunityInstance:
    grid = TimeGrid(K=K)
    homes = []

    for i, (lo, hi, start, weight) in enumerate(specs):
        params = BasicApplianceParams("wm", power_kwh, duration, lo, hi, preferred_start=start)
        homes.append(
            HomeSpec(
                id=i,
                basics=(params,),
                weights={"wm": weight},
                baseline={"wm": run_profile(params, grid, start)},
            )
        )

    return CommunityInstance(
        grid=grid,
        homes=tuple(homes),
        weather=np.zeros(K),
        target=target_profile(homes, grid),
    )


@pytest.fixture
def small_wm():
    return small_wm_home()


@pytest.fixture
def wm_community():
    return wm_only_community()


@pytest.fixture(scope="session")
def full_community():
    return generate_community(GenConfig(N=3, seed=11, intervals=12), verbose=False)


def enumerate_wm_optimum(instance: CommunityInstance) -> float:
    """Exact optimum of a WM-only community by trying every start combination."""
    grid = instance.grid
    runs = []

    for home in instance.homes:
        params = home.basic("wm")
        base = home.baseline["wm"]
        runs.append(
            [
                (p, home.weights["wm"] * float(np.abs(p - base).sum()))
                for p in (run_profile(params, grid, s) for s in feasible_starts(params))
            ]
        )

    best = np.inf

    for combo in itertools.product(*runs):
        load = sum(p for p, _ in combo)
        best = min(best, float(np.abs(instance.target - load).sum()) + sum(c for _, c in combo))

    return best


@pytest.fixture
def wm_optimum(wm_community):
    return enumerate_wm_optimum(wm_community)


@pytest.fixture
def wm_enumerator():
    return enumerate_wm_optimum
