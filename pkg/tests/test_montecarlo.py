"""Sweep engine: partitions, determinism, scenario pairing, density sweep,
and the altitude policies."""

import numpy as np
import pytest
from dataclasses import replace

from urbanlos.citygen import PRESETS, GenConfig
from urbanlos.errors import AggregationError, ParameterError
from urbanlos.montecarlo import (
    BUILDINGS_ONLY,
    FULL,
    WITH_TREES,
    SweepConfig,
    parse_scenario,
    run_scenarios,
    run_sweep,
    streetlight_delta,
    tree_density_sweep,
)

URBAN = PRESETS["urban"]
SMALL_SWEEP = SweepConfig(n_cities=2)


@pytest.fixture(scope="module")
def small_results(small_gen):
    return run_scenarios(
        URBAN, small_gen, SMALL_SWEEP, [BUILDINGS_ONLY, WITH_TREES, FULL]
    )


def test_default_angle_grid():
    sweep = SweepConfig()
    assert len(sweep.angles) == 90
    assert sweep.angles[0] == 1.0 and sweep.angles[-1] == 90.0


def test_default_scale_sample_count():
    sweep, gen = SweepConfig(), GenConfig()
    assert sweep.n_cities * gen.n_gu * len(sweep.angles) == 270_000


def test_sweep_config_validation():
    with pytest.raises(ParameterError):
        SweepConfig(n_cities=0)
    with pytest.raises(ParameterError):
        SweepConfig(angles=(95.0,))
    with pytest.raises(ParameterError):
        SweepConfig(altitude_policy="hover")


def test_parse_scenario_aliases():
    assert parse_scenario("buildings-only") is BUILDINGS_ONLY
    assert parse_scenario("+trees") is WITH_TREES
    assert parse_scenario("+trees+lights") is FULL
    with pytest.raises(ParameterError):
        parse_scenario("nope")


def test_partition_and_totals(small_results, small_gen):
    for curve, stats in small_results.values():
        total = SMALL_SWEEP.n_cities * small_gen.n_gu
        assert all(int(v) == total for v in curve.n)
        partition = curve.p_los + curve.p_nlos_b + curve.p_nlos_t + curve.p_nlos_s
        assert np.all(np.abs(partition - 1.0) < 1e-12)
        dist_partition = stats.p_los + stats.p_nlos_b + stats.p_nlos_t + stats.p_nlos_s
        assert np.all(np.abs(dist_partition - 1.0) < 1e-12)
        assert int(np.sum(stats.n)) == total * len(SMALL_SWEEP.angles)


def test_distance_bins_cover_samples(small_results):
    _, stats = small_results["full"]
    assert stats.bin_width == 50.0
    centers = np.array(stats.bin_centers)
    assert np.all(np.diff(centers) > 0)
    assert np.all(np.array(stats.d_sum) / np.array(stats.n) >= centers - 25.0 - 1e-9)
    assert np.all(np.array(stats.d_sum) / np.array(stats.n) <= centers + 25.0 + 1e-9)


def test_deterministic_rerun(small_gen):
    a = run_sweep(URBAN, small_gen, SMALL_SWEEP)
    b = run_sweep(URBAN, small_gen, SMALL_SWEEP)
    assert a == b


def test_scenarios_are_paired(small_results):
    curve_b = small_results["buildings-only"][0]
    curve_t = small_results["trees"][0]
    curve_f = small_results["full"][0]
    assert np.all(curve_b.p_los >= curve_t.p_los - 1e-15)
    assert np.all(curve_t.p_los >= curve_f.p_los - 1e-15)
    # building-blocked counts are identical across scenarios by construction
    assert curve_b.nlos_b == curve_t.nlos_b == curve_f.nlos_b


def test_top_angle_is_los_maximum(small_results):
    curve = small_results["full"][0]
    los = np.array(curve.los)
    assert los[-1] == los.max()
    assert np.all(np.diff(los) >= 0)


def test_streetlight_delta_identity(small_results):
    curve = small_results["trees"][0]
    assert streetlight_delta(curve, curve) == 0.0


def test_streetlight_delta_zero_lights(small_gen):
    gen = replace(small_gen, n_lights=0)
    res = run_scenarios(URBAN, gen, SMALL_SWEEP, [WITH_TREES, FULL])
    assert streetlight_delta(res["trees"][0], res["full"][0]) == 0.0


def test_streetlight_delta_grid_mismatch(small_results):
    curve = small_results["trees"][0]
    other = replace(curve, theta_deg=tuple(t + 1.0 for t in curve.theta_deg))
    with pytest.raises(AggregationError):
        streetlight_delta(curve, other)


def test_density_zero_matches_buildings_only(small_gen, small_results):
    curves = tree_density_sweep(URBAN, small_gen, SMALL_SWEEP, [0])
    assert curves[0] == small_results["buildings-only"][0]


def test_density_monotone(small_gen):
    curves = tree_density_sweep(URBAN, small_gen, SMALL_SWEEP, [0, 50, 200])
    p0, p50, p200 = (curves[k].p_los for k in (0, 50, 200))
    assert np.all(p0 >= p50 - 1e-15)
    assert np.all(p50 >= p200 - 1e-15)


def test_density_validation(small_gen):
    with pytest.raises(ParameterError):
        tree_density_sweep(URBAN, small_gen, SMALL_SWEEP, [200, 0])
    with pytest.raises(ParameterError):
        tree_density_sweep(URBAN, small_gen, SMALL_SWEEP, [])


def test_fixed_altitude_policy(small_gen):
    sweep = SweepConfig(
        n_cities=2, angles=(30.0, 60.0, 90.0), altitude_policy="fixed",
        fixed_altitude_m=100.0,
    )
    curve, stats = run_sweep(URBAN, small_gen, sweep)
    # altitude does not vary with angle, so every column is identical
    assert curve.los[0] == curve.los[1] == curve.los[2]
    assert max(stats.bin_centers) < 1600.0


def test_city_order_independent(small_gen):
    from urbanlos.montecarlo import _city_worker, _Variant

    variants = [_Variant(tree_limit=None, lights=True)]
    per_city = [
        _city_worker(URBAN, small_gen, SMALL_SWEEP, variants, idx, n_bins=2832)
        for idx in range(SMALL_SWEEP.n_cities)
    ]
    forward = sum(ac.sum() for ac, _, _ in per_city)
    angle_sum_fwd = np.sum([ac for ac, _, _ in per_city], axis=0)
    angle_sum_rev = np.sum([ac for ac, _, _ in reversed(per_city)], axis=0)
    assert np.array_equal(angle_sum_fwd, angle_sum_rev)
    assert forward == angle_sum_fwd.sum()
