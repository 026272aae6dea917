"""Elevation-angle sweep engine and aggregations.

For every city a layout is generated, one ABS ground position is drawn
uniformly over open space, and each user is evaluated at every elevation
angle: the ABS altitude follows h = h_gu + g * tan(theta) for the user's
own ground distance g, capped at a maximum altitude, with the 90 degree
angle evaluated just below vertical. Per-link critical altitudes make the
whole angle sweep a set of comparisons, and obstacle families can be
toggled per scenario after the fact, so paired scenario runs share
exactly the same cities, users, and ABS positions.

Counts are accumulated as integers and divided once at the end, so the
reduction is independent of city evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .citygen import (
    STREAM_ABS,
    BuiltUpParams,
    GenConfig,
    city_rng,
    generate_city,
    sample_open_point,
)
from .errors import AggregationError, ParameterError
from .geometry import LayoutGeometry

#: The nominal 90 degree angle is evaluated at this elevation.
TOP_ANGLE_EVAL_DEG = 89.9
#: ABS altitudes are capped here to keep near-vertical links finite. The
#: cap only binds above 89 degrees for city-scale ground distances.
ALTITUDE_CAP_M = 100_000.0
#: Width of the 3-D distance bins.
DISTANCE_BIN_M = 50.0

LOS, NLOS_B, NLOS_T, NLOS_S = 0, 1, 2, 3


@dataclass(frozen=True)
class Scenario:
    """Which obstacle families participate in classification."""

    name: str
    trees: bool
    lights: bool


BUILDINGS_ONLY = Scenario("buildings-only", trees=False, lights=False)
WITH_TREES = Scenario("trees", trees=True, lights=False)
FULL = Scenario("full", trees=True, lights=True)

_SCENARIO_ALIASES = {
    "buildings-only": BUILDINGS_ONLY,
    "buildings_only": BUILDINGS_ONLY,
    "buildings": BUILDINGS_ONLY,
    "trees": WITH_TREES,
    "+trees": WITH_TREES,
    "full": FULL,
    "+trees+lights": FULL,
    "all": FULL,
}


def parse_scenario(name: str) -> Scenario:
    try:
        return _SCENARIO_ALIASES[name.strip().lower()]
    except KeyError:
        raise ParameterError(
            f"unknown scenario {name!r}; expected one of {sorted(set(_SCENARIO_ALIASES))}"
        ) from None


@dataclass(frozen=True)
class SweepConfig:
    """Sweep extent and ABS altitude policy."""

    n_cities: int = 30
    angles: tuple[float, ...] = tuple(float(a) for a in range(1, 91))
    altitude_policy: str = "per-angle"  # "per-angle" | "fixed"
    fixed_altitude_m: float = 100.0
    scenario: Scenario = FULL

    def __post_init__(self):
        if self.n_cities < 1:
            raise ParameterError("n_cities must be >= 1")
        if not self.angles:
            raise ParameterError("angles must be non-empty")
        if any(not 0.0 <= a <= 90.0 for a in self.angles):
            raise ParameterError("angles must lie in [0, 90] degrees")
        if self.altitude_policy not in ("per-angle", "fixed"):
            raise ParameterError(
                f"altitude_policy must be 'per-angle' or 'fixed', got {self.altitude_policy!r}"
            )


@dataclass(frozen=True)
class PLoSCurve:
    """Per-angle class counts and derived probabilities."""

    theta_deg: tuple[float, ...]
    los: tuple[int, ...]
    nlos_b: tuple[int, ...]
    nlos_t: tuple[int, ...]
    nlos_s: tuple[int, ...]

    @property
    def n(self) -> np.ndarray:
        return (
            np.array(self.los)
            + np.array(self.nlos_b)
            + np.array(self.nlos_t)
            + np.array(self.nlos_s)
        )

    def _p(self, counts: tuple[int, ...]) -> np.ndarray:
        n = self.n
        out = np.zeros(len(counts))
        np.divide(np.array(counts, dtype=float), n, out=out, where=n > 0)
        return out

    @property
    def p_los(self) -> np.ndarray:
        return self._p(self.los)

    @property
    def p_nlos_b(self) -> np.ndarray:
        return self._p(self.nlos_b)

    @property
    def p_nlos_t(self) -> np.ndarray:
        return self._p(self.nlos_t)

    @property
    def p_nlos_s(self) -> np.ndarray:
        return self._p(self.nlos_s)


@dataclass(frozen=True)
class DistanceStats:
    """Class counts aggregated over 3-D distance bins (non-empty bins only)."""

    bin_width: float
    bin_centers: tuple[float, ...]
    los: tuple[int, ...]
    nlos_b: tuple[int, ...]
    nlos_t: tuple[int, ...]
    nlos_s: tuple[int, ...]
    d_sum: tuple[float, ...]

    @property
    def n(self) -> np.ndarray:
        return (
            np.array(self.los)
            + np.array(self.nlos_b)
            + np.array(self.nlos_t)
            + np.array(self.nlos_s)
        )

    @property
    def mean_d(self) -> np.ndarray:
        return np.array(self.d_sum) / self.n

    def _p(self, counts: tuple[int, ...]) -> np.ndarray:
        return np.array(counts, dtype=float) / self.n

    @property
    def p_los(self) -> np.ndarray:
        return self._p(self.los)

    @property
    def p_nlos_b(self) -> np.ndarray:
        return self._p(self.nlos_b)

    @property
    def p_nlos_t(self) -> np.ndarray:
        return self._p(self.nlos_t)

    @property
    def p_nlos_s(self) -> np.ndarray:
        return self._p(self.nlos_s)


@dataclass(frozen=True)
class _Variant:
    """One classification view: tree prefix size (None = all) and lights."""

    tree_limit: int | None
    lights: bool


def _classify_matrix(
    h_abs: np.ndarray,
    alt_b: np.ndarray,
    alt_t: np.ndarray,
    alt_s: np.ndarray,
    use_trees: bool,
    use_lights: bool,
) -> np.ndarray:
    """Class codes for an (L, A) altitude matrix; building > tree > light."""
    cls = np.zeros(h_abs.shape, dtype=np.int8)
    blocked_b = h_abs <= alt_b[:, None]
    cls[blocked_b] = NLOS_B
    clear = ~blocked_b
    if use_trees:
        blocked_t = clear & (h_abs <= alt_t[:, None])
        cls[blocked_t] = NLOS_T
        clear &= ~blocked_t
    if use_lights:
        cls[clear & (h_abs <= alt_s[:, None])] = NLOS_S
    return cls


def _city_worker(
    params: BuiltUpParams,
    gen: GenConfig,
    sweep: SweepConfig,
    variants: Sequence[_Variant],
    city_index: int,
    n_bins: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counts for one city: (variants, angles, 4), (variants, bins, 4), d sums."""
    layout = generate_city(params, gen, city_index)
    geom = LayoutGeometry(layout)
    abs_rng = city_rng(gen.seed, city_index, STREAM_ABS)
    ax, ay = sample_open_point(geom.index, layout.side, abs_rng, what="abs")

    gu = np.array([[u.x, u.y] for u in layout.users])
    alt_b, alt_s, t_link, t_idx, t_alt = geom.batch_critical_altitudes(
        (ax, ay), gu, gen.h_gu
    )
    n_users = gu.shape[0]

    def tree_altitudes(limit: int | None) -> np.ndarray:
        alt = np.full(n_users, -np.inf)
        if t_alt.size:
            keep = slice(None) if limit is None else t_idx < limit
            np.maximum.at(alt, t_link[keep], t_alt[keep])
        return alt

    g = np.hypot(gu[:, 0] - ax, gu[:, 1] - ay)
    angles = np.asarray(sweep.angles)
    if sweep.altitude_policy == "per-angle":
        theta_eff = np.where(angles >= 90.0, TOP_ANGLE_EVAL_DEG, angles)
        h_abs = gen.h_gu + g[:, None] * np.tan(np.radians(theta_eff))[None, :]
        h_abs = np.minimum(h_abs, ALTITUDE_CAP_M)
    else:
        h_abs = np.full((n_users, angles.size), sweep.fixed_altitude_m)
    d = np.hypot(g[:, None], h_abs - gen.h_gu)
    bins = np.minimum((d / DISTANCE_BIN_M).astype(np.int64), n_bins - 1)

    angle_counts = np.zeros((len(variants), angles.size, 4), dtype=np.int64)
    dist_counts = np.zeros((len(variants), n_bins, 4), dtype=np.int64)
    for vi, variant in enumerate(variants):
        alt_t = tree_altitudes(variant.tree_limit)
        cls = _classify_matrix(
            h_abs,
            alt_b,
            alt_t,
            alt_s,
            use_trees=variant.tree_limit is None or variant.tree_limit > 0,
            use_lights=variant.lights,
        )
        for c in range(4):
            mask = cls == c
            angle_counts[vi, :, c] = mask.sum(axis=0)
            dist_counts[vi, :, c] = np.bincount(
                bins[mask].ravel(), minlength=n_bins
            )
    d_sums = np.bincount(bins.ravel(), weights=d.ravel(), minlength=n_bins)
    return angle_counts, dist_counts, d_sums


def _run_variants(
    params: BuiltUpParams,
    gen: GenConfig,
    sweep: SweepConfig,
    variants: Sequence[_Variant],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    side = gen.side
    d_max = math.hypot(ALTITUDE_CAP_M, side * math.sqrt(2.0))
    n_bins = int(d_max / DISTANCE_BIN_M) + 2
    angles = np.asarray(sweep.angles)
    angle_counts = np.zeros((len(variants), angles.size, 4), dtype=np.int64)
    dist_counts = np.zeros((len(variants), n_bins, 4), dtype=np.int64)
    d_sums = np.zeros(n_bins)
    for city_index in range(sweep.n_cities):
        ac, dc, ds = _city_worker(params, gen, sweep, variants, city_index, n_bins)
        angle_counts += ac
        dist_counts += dc
        d_sums += ds
    return angle_counts, dist_counts, d_sums


def _to_curve(sweep: SweepConfig, counts: np.ndarray) -> PLoSCurve:
    return PLoSCurve(
        theta_deg=tuple(float(a) for a in sweep.angles),
        los=tuple(int(v) for v in counts[:, LOS]),
        nlos_b=tuple(int(v) for v in counts[:, NLOS_B]),
        nlos_t=tuple(int(v) for v in counts[:, NLOS_T]),
        nlos_s=tuple(int(v) for v in counts[:, NLOS_S]),
    )


def _to_distance_stats(dist_counts: np.ndarray, d_sums: np.ndarray) -> DistanceStats:
    totals = dist_counts.sum(axis=1)
    keep = np.nonzero(totals > 0)[0]
    return DistanceStats(
        bin_width=DISTANCE_BIN_M,
        bin_centers=tuple((float(i) + 0.5) * DISTANCE_BIN_M for i in keep),
        los=tuple(int(v) for v in dist_counts[keep, LOS]),
        nlos_b=tuple(int(v) for v in dist_counts[keep, NLOS_B]),
        nlos_t=tuple(int(v) for v in dist_counts[keep, NLOS_T]),
        nlos_s=tuple(int(v) for v in dist_counts[keep, NLOS_S]),
        d_sum=tuple(float(v) for v in d_sums[keep]),
    )


def run_sweep(
    params: BuiltUpParams, gen: GenConfig, sweep: SweepConfig
) -> tuple[PLoSCurve, DistanceStats]:
    """Run the sweep for the configured scenario."""
    results = run_scenarios(params, gen, sweep, [sweep.scenario])
    return results[sweep.scenario.name]


def run_scenarios(
    params: BuiltUpParams,
    gen: GenConfig,
    sweep: SweepConfig,
    scenarios: Sequence[Scenario],
) -> dict[str, tuple[PLoSCurve, DistanceStats]]:
    """Evaluate several scenarios over one shared set of cities.

    All scenarios see identical layouts, users, and ABS positions; only
    the obstacle toggles differ, which makes the outputs exactly paired.
    """
    variants = [
        _Variant(tree_limit=None if s.trees else 0, lights=s.lights)
        for s in scenarios
    ]
    angle_counts, dist_counts, d_sums = _run_variants(params, gen, sweep, variants)
    return {
        s.name: (
            _to_curve(sweep, angle_counts[i]),
            _to_distance_stats(dist_counts[i], d_sums),
        )
        for i, s in enumerate(scenarios)
    }


def tree_density_sweep(
    params: BuiltUpParams,
    gen: GenConfig,
    sweep: SweepConfig,
    densities: Sequence[int],
) -> dict[int, PLoSCurve]:
    """One curve per tree count, lights excluded, over shared layouts.

    The layout is generated once with the largest density; lower densities
    use a prefix of the same tree population, so the curves are paired and
    p_los is pointwise non-increasing in density.
    """
    if list(densities) != sorted(densities):
        raise ParameterError("densities must be sorted ascending")
    if any(d < 0 for d in densities):
        raise ParameterError("densities must be >= 0")
    if not densities:
        raise ParameterError("densities must be non-empty")
    gen_max = replace(gen, n_trees=int(max(densities)))
    variants = [_Variant(tree_limit=int(k), lights=False) for k in densities]
    angle_counts, _, _ = _run_variants(params, gen_max, sweep, variants)
    return {int(k): _to_curve(sweep, angle_counts[i]) for i, k in enumerate(densities)}


def streetlight_delta(curve_a: PLoSCurve, curve_b: PLoSCurve) -> float:
    """Mean absolute P_LoS difference over the shared angle grid."""
    if curve_a.theta_deg != curve_b.theta_deg:
        raise AggregationError("curves are on different angle grids")
    return float(np.mean(np.abs(curve_a.p_los - curve_b.p_los)))
