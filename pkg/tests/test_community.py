import numpy as np
import pytest
from scipy import stats

from load_shaper.appliances.home import audit_home_baseline
from load_shaper.community.baseline import build_baseline
from load_shaper.community.generator import generate_community, home_rng
from load_shaper.community.sampling import GenConfig, _sample_basic, sample_home
from load_shaper.community.weather import ingest_weather_csv, synth_weather
from load_shaper.core.errors import InstanceFormatError
from load_shaper.core.instance_io import serialize_instance
from load_shaper.core.model import HEATING, TimeGrid, baseline_objective


class _FixedRng:
    """Stands in for a Generator whose integers() always returns the low end."""

    def integers(self, low, high=None, size=None):
        return low


# =========================================================
# Weather
# =========================================================

def test_synth_weather_extremes():
    temps = synth_weather(TimeGrid(K=96), 0.0, 10.0)

    assert temps[24] == pytest.approx(0.0)
    assert temps[60] == pytest.approx(10.0)
    assert temps.min() >= -1e-12 and temps.max() <= 10.0 + 1e-12


def test_synth_weather_rejects_inverted_range():
    with pytest.raises(ValueError):
        synth_weather(TimeGrid(K=4), 5.0, 1.0)


def test_hourly_csv_is_held_on_the_quarter_hours(tmp_path):
    path = tmp_path / "temps.csv"
    path.write_text(
        "timestamp,temp_C\n"
        "2024-01-01 00:00,10\n2024-01-01 01:00,10\n2024-01-01 02:00,10\n",
        encoding="utf-8",
    )

    np.testing.assert_allclose(ingest_weather_csv(path, TimeGrid(K=8)), 10.0)


def test_quarter_hour_csv_passes_through(tmp_path):
    rows = [f"2024-01-01 {k // 4:02d}:{15 * (k % 4):02d},{k}" for k in range(8)]
    path = tmp_path / "temps.csv"
    path.write_text("timestamp,temp_C\n" + "\n".join(rows) + "\n", encoding="utf-8")

    np.testing.assert_allclose(ingest_weather_csv(path, TimeGrid(K=8)), np.arange(8.0))


def test_hourly_csv_takes_the_nearest_reading(tmp_path):
    path = tmp_path / "temps.csv"
    path.write_text(
        "timestamp,temp_C\n"
        "2024-01-01 00:00,0\n2024-01-01 01:00,4\n2024-01-01 02:00,8\n",
        encoding="utf-8",
    )
    temps = ingest_weather_csv(path, TimeGrid(K=8))

    # 00:30 and 01:30 sit halfway between readings
    np.testing.assert_allclose(temps[[0, 1, 3, 4, 5, 7]], [0.0, 0.0, 4.0, 4.0, 4.0, 8.0])


def test_long_gap_in_weather_is_rejected(tmp_path):
    path = tmp_path / "temps.csv"
    path.write_text("timestamp,temp_C\n2024-01-01 00:00,3\n2024-01-01 02:30,4\n", encoding="utf-8")

    with pytest.raises(InstanceFormatError, match="gaps longer than 1 h"):
        ingest_weather_csv(path, TimeGrid(K=8))


def test_unparseable_weather_row(tmp_path):
    path = tmp_path / "temps.csv"
    path.write_text("timestamp,temp_C\n2024-01-01 00:00,warm\n", encoding="utf-8")

    with pytest.raises(InstanceFormatError, match="unparseable"):
        ingest_weather_csv(path, TimeGrid(K=1))


# =========================================================
# Sampling
# =========================================================

def test_sampled_home_ranges():
    config = GenConfig(N=1, seed=0)
    weather = synth_weather(config.grid, config.weather_low_c, config.weather_high_c)

    for attempt in range(5):
        home = sample_home(home_rng(0, 0, attempt), config, weather)
        trips = home.ev.trip_kwh[home.ev.trip_kwh > 0]

        assert home.hvac.t_upper - home.hvac.t_low == pytest.approx(2.0)
        assert 19 <= home.hvac.t_low <= 24
        assert 4 <= len(trips) <= 12
        assert np.all((trips >= 1.73 - 1e-9) & (trips <= 3.114 + 1e-9))
        assert 2 <= np.count_nonzero(home.ewh.demand_kg) <= 5
        assert not home.ewh.demand_kg[:4].any()
        assert 40 <= home.ewh.t_desired <= 42
        assert set(home.weights) == set(home.appliance_names)
        assert all(0.1 <= w <= 1.0 for w in home.weights.values())

        for params in home.basics:
            assert params.window_start <= params.preferred_start <= params.window_end
            assert params.window_length >= params.duration


def test_basic_window_at_midnight():
    params = _sample_basic(_FixedRng(), GenConfig(N=1), TimeGrid(K=96), "wm", 2.0, 4)

    assert (params.window_start, params.window_end) == (0, 8)
    assert params.preferred_start == 0
    assert params.power_kwh == pytest.approx(0.5)


def test_cold_weather_selects_heating():
    config = GenConfig(N=1, intervals=8)
    home = sample_home(home_rng(1, 0, 0), config, np.full(8, -10.0))

    assert home.hvac.mode == HEATING
    assert home.hvac.nominal_kw == 3.0
    assert home.hvac.t_init == pytest.approx(home.hvac.t_low + 1.0)


def test_sample_rejects_weather_of_wrong_length():
    with pytest.raises(ValueError, match="weather has length"):
        sample_home(home_rng(0, 0, 0), GenConfig(N=1, intervals=8), np.zeros(7))


def _hvac_ewh_draws(n: int):
    config = GenConfig(N=1, intervals=8, appliances=("hvac", "ewh"))
    weather = np.zeros(config.grid.K)
    rng = np.random.default_rng(2024)

    return [sample_home(rng, config, weather) for _ in range(n)]


def test_hvac_coefficients_match_their_distribution():
    homes = _hvac_ewh_draws(10000)
    gamma1 = np.array([h.hvac.gamma1 for h in homes])
    gamma2 = np.array([h.hvac.gamma2 for h in homes])

    assert gamma1.mean() == pytest.approx(0.10, abs=1e-4)
    assert gamma1.std() == pytest.approx(0.001, rel=0.05)
    assert np.all(gamma2 >= 0.0)


def test_comfort_floor_is_uniform_over_its_integers():
    homes = _hvac_ewh_draws(6000)
    t_low = np.array([h.hvac.t_low for h in homes])
    values, counts = np.unique(t_low, return_counts=True)

    np.testing.assert_array_equal(values, np.arange(19.0, 25.0))
    assert stats.chisquare(counts).pvalue > 0.01


def test_hot_water_setpoint_is_continuous():
    t_d = np.array([h.ewh.t_desired for h in _hvac_ewh_draws(500)])

    assert np.all((t_d >= 40.0) & (t_d <= 42.0))
    assert not np.all(t_d == np.round(t_d))
    assert len(np.unique(t_d)) == len(t_d)


@pytest.mark.parametrize(
    "kwargs",
    [{"N": 0}, {"N": 1, "appliances": ("dishwasher",)}, {"N": 1, "ev_trips": (5, 2)}],
)
def test_generator_config_is_checked(kwargs):
    with pytest.raises(ValueError):
        GenConfig(**kwargs)


# =========================================================
# Baselines and whole communities
# =========================================================

def test_baselines_pass_their_audit(full_community):
    for home in full_community.homes:
        audit_home_baseline(home, full_community.weather, full_community.grid)

        again = build_baseline(home, full_community.weather, full_community.grid)
        for name, vec in home.baseline.items():
            np.testing.assert_allclose(again[name], vec)


def test_generation_is_deterministic():
    config = GenConfig(N=2, seed=5, intervals=12)

    first = generate_community(config, verbose=False)
    second = generate_community(config, verbose=False)

    assert serialize_instance(first) == serialize_instance(second)


def test_home_streams_do_not_depend_on_community_size():
    small = generate_community(GenConfig(N=1, seed=9, intervals=12), verbose=False)
    large = generate_community(GenConfig(N=3, seed=9, intervals=12), verbose=False)

    for name, vec in small.homes[0].baseline.items():
        np.testing.assert_array_equal(large.homes[0].baseline[name], vec)


def test_default_target_is_flat_and_energy_preserving(full_community):
    q = full_community.target
    total = sum(vec.sum() for home in full_community.homes for vec in home.baseline.values())

    np.testing.assert_allclose(q, q[0])
    assert q.sum() == pytest.approx(total)
    assert baseline_objective(full_community) >= 0.0


def test_explicit_target_is_kept():
    target = np.linspace(0.0, 1.0, 12)
    instance = generate_community(GenConfig(N=1, seed=2, intervals=12), target=target, verbose=False)

    np.testing.assert_array_equal(instance.target, target)


def test_appliance_subset():
    instance = generate_community(GenConfig(N=2, seed=3, intervals=12, appliances=("wm", "ev")), verbose=False)

    for home in instance.homes:
        assert home.appliance_names == ["ev", "wm"]
        assert home.hvac is None and home.ewh is None


def test_community_from_weather_file(tmp_path):
    rows = [f"2024-07-01 {h:02d}:00,{20 + h % 5}" for h in range(5)]
    path = tmp_path / "temps.csv"
    path.write_text("timestamp,temp_C\n" + "\n".join(rows) + "\n", encoding="utf-8")
    instance = generate_community(GenConfig(N=1, seed=0, intervals=16, weather_csv=str(path)), verbose=False)

    assert instance.weather[0] == 20.0
    assert len(instance.weather) == 16
