"""Path-loss components, composite assembly, and empirical model fitting.

The LoS component is free-space path loss at 28 GHz and the
building-blocked component an urban mmWave NLoS model, both log-distance
forms. Tree-blocked links add an excess foliage attenuation whose
saturation constant depends on the first-Fresnel-zone illumination area.
Per distance bin the composite loss is the probability-weighted mixture
of the components, and an A + 10 B log10(d) model is fitted to the bins
by count-weighted least squares.

Unit conventions for the foliage model, isolated here so they can be
changed in one place: frequency enters the initial/final slopes in GHz
and the wet-leaf factor in MHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import SeedSequence, default_rng

from .errors import AggregationError, ParameterError
from .montecarlo import DistanceStats, PLoSCurve

C_M_PER_NS = 0.299792458  # speed of light, meters per nanosecond (m * GHz)

FSPL_INTERCEPT_DB = 61.4
FSPL_SLOPE = 20.0
NLOS_B_INTERCEPT_DB = 72.0
NLOS_B_SLOPE = 29.2

# Stream id for per-bin vegetation geometry draws.
_VEG_STREAM = 101

TREE_MEAN_RADIUS_M = 1.0
VEG_D2_RANGE_M = (4.0, 8.0)
VEG_DEPTH_RANGE_M = (0.5, 2.0 * TREE_MEAN_RADIUS_M)


@dataclass(frozen=True)
class VegetationParams:
    """Leaf-scenario foliage attenuation constants plus carrier frequency."""

    a: float = 0.2
    b: float = 1.27
    c: float = 0.63
    k0: float = 6.57
    rf: float = 0.0002
    a0: float = 10.0
    f_ghz: float = 28.0

    def __post_init__(self):
        for name in ("a", "b", "c", "k0", "rf", "a0", "f_ghz"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be > 0")

    @property
    def wavelength_m(self) -> float:
        return C_M_PER_NS / self.f_ghz


@dataclass(frozen=True)
class VegGeometry:
    """Link geometry through one foliage obstruction.

    d1/d2 are transmitter/receiver distances to the obstruction, d_t the
    foliage depth traversed, r_t the foliage radius. The Fresnel radius
    uses the wavelength implied by the carrier frequency.
    """

    d1: float
    d2: float
    d_t: float
    r_t: float

    def __post_init__(self):
        if self.d1 <= 0.0 or self.d2 <= 0.0:
            raise ParameterError("d1 and d2 must be > 0")
        if self.r_t <= 0.0:
            raise ParameterError("r_t must be > 0")
        if not 0.0 <= self.d_t <= 2.0 * self.r_t:
            raise ParameterError(
                f"d_t must be in [0, 2 r_t], got d_t={self.d_t}, r_t={self.r_t}"
            )


def fspl(d: float | np.ndarray) -> float | np.ndarray:
    """Free-space path loss at 28 GHz, dB."""
    if np.any(np.asarray(d) <= 0.0):
        raise ParameterError("distance must be > 0")
    return FSPL_INTERCEPT_DB + FSPL_SLOPE * np.log10(d)


def pl_nlos_building(d: float | np.ndarray) -> float | np.ndarray:
    """Building-blocked urban path loss at 28 GHz, dB."""
    if np.any(np.asarray(d) <= 0.0):
        raise ParameterError("distance must be > 0")
    return NLOS_B_INTERCEPT_DB + NLOS_B_SLOPE * np.log10(d)


def fresnel_radius(wavelength_m: float, d1: float, d2: float) -> float:
    """First Fresnel zone radius at the point splitting the path d1/d2."""
    if wavelength_m <= 0.0:
        raise ParameterError("wavelength must be > 0")
    if d1 <= 0.0 or d2 <= 0.0:
        raise ParameterError("d1 and d2 must be > 0")
    return math.sqrt(wavelength_m * d1 * d2 / (d1 + d2))


def min_illumination_area(r_f: float, r_t: float) -> float:
    """Illuminated foliage area, capped by Fresnel and foliage radii."""
    if r_f <= 0.0 or r_t <= 0.0:
        raise ParameterError("radii must be > 0")
    side = 2.0 * min(r_f, r_t)
    return side * side


def veg_attenuation(geom: VegGeometry, params: VegetationParams) -> float:
    """Excess attenuation through foliage depth d_t, dB.

    Zero at zero depth, strictly increasing, with initial slope a*f and
    final slope b/f^c (f in GHz). The saturation constant uses the
    Fresnel-limited illumination area and the wet-leaf factor with f in
    MHz; a nonpositive constant means the units are misconfigured.
    """
    f = params.f_ghz
    r0 = params.a * f
    r_inf = params.b / f**params.c
    r_f = fresnel_radius(params.wavelength_m, geom.d1, geom.d2)
    a_min = min_illumination_area(r_f, geom.r_t)
    k = params.k0 - 10.0 * math.log10(
        params.a0
        * (1.0 - math.exp(-a_min / params.a0))
        * (1.0 - math.exp(-params.rf * f * 1000.0))
    )
    if k <= 0.0:
        raise ParameterError(
            f"attenuation constant k={k:.3f} dB is not positive; "
            "check frequency units and illumination geometry"
        )
    return r_inf * geom.d_t + k * (1.0 - math.exp(-(r0 - r_inf) * geom.d_t / k))


def pl_nlos_tree(d: float, geom: VegGeometry, params: VegetationParams) -> float:
    """Tree-blocked path loss: free space plus foliage excess, dB."""
    return float(fspl(d)) + veg_attenuation(geom, params)


@dataclass(frozen=True)
class CompositePLInput:
    """Probability partition and geometry for one distance bin."""

    p_los: float
    p_nlos_b: float
    p_nlos_t: float
    p_nlos_s: float
    d_m: float
    veg: VegGeometry | None = None
    params: VegetationParams = VegetationParams()
    include_light_term: bool = False
    light_excess_db: float = 0.0


def composite_pl(inp: CompositePLInput) -> float:
    """Probability-weighted mixture of the per-class path losses, dB.

    Streetlight-blocked links carry no excess loss; by default their
    probability folds into the LoS term (equivalent to a free-space
    streetlight component), and a flag keeps the term explicit with a
    configurable excess for sensitivity studies.
    """
    probs = (inp.p_los, inp.p_nlos_b, inp.p_nlos_t, inp.p_nlos_s)
    if any(p < 0.0 for p in probs):
        raise AggregationError(f"negative probability in partition {probs}")
    if abs(sum(probs) - 1.0) > 1e-9:
        raise AggregationError(f"probability partition {probs} does not sum to 1")
    if inp.d_m <= 0.0:
        raise ParameterError("bin distance must be > 0")

    pl = inp.p_nlos_b * float(pl_nlos_building(inp.d_m))
    if inp.p_nlos_t > 0.0:
        if inp.veg is None:
            raise ParameterError("vegetation geometry required when p_nlos_t > 0")
        pl += inp.p_nlos_t * pl_nlos_tree(inp.d_m, inp.veg, inp.params)
    if inp.include_light_term:
        pl += inp.p_los * float(fspl(inp.d_m))
        pl += inp.p_nlos_s * (float(fspl(inp.d_m)) + inp.light_excess_db)
    else:
        pl += (inp.p_los + inp.p_nlos_s) * float(fspl(inp.d_m))
    return pl


def sample_veg_geometry(d_m: float, seed: int, bin_index: int) -> VegGeometry:
    """Deterministic per-bin vegetation geometry draw.

    The receiver-side distance is uniform in 4-8 m (trees sit near
    users), the transmitter side takes the remainder, and the traversed
    depth is uniform up to the mean foliage diameter.
    """
    rng = default_rng(SeedSequence(seed, spawn_key=(_VEG_STREAM, bin_index)))
    d2 = min(rng.uniform(*VEG_D2_RANGE_M), d_m / 2.0)
    d_t = rng.uniform(*VEG_DEPTH_RANGE_M)
    return VegGeometry(d1=d_m - d2, d2=d2, d_t=d_t, r_t=TREE_MEAN_RADIUS_M)


def composite_bins(
    stats: DistanceStats,
    params: VegetationParams = VegetationParams(),
    seed: int = 0,
) -> list[tuple[float, float, int]]:
    """(bin center, composite PL, sample count) for every populated bin."""
    rows = []
    p_los, p_b = stats.p_los, stats.p_nlos_b
    p_t, p_s = stats.p_nlos_t, stats.p_nlos_s
    n = stats.n
    for i, center in enumerate(stats.bin_centers):
        veg = None
        if p_t[i] > 0.0:
            bin_index = int(round(center / stats.bin_width - 0.5))
            veg = sample_veg_geometry(center, seed, bin_index)
        pl = composite_pl(
            CompositePLInput(
                p_los=float(p_los[i]),
                p_nlos_b=float(p_b[i]),
                p_nlos_t=float(p_t[i]),
                p_nlos_s=float(p_s[i]),
                d_m=center,
                veg=veg,
                params=params,
            )
        )
        rows.append((center, pl, int(n[i])))
    return rows


@dataclass(frozen=True)
class FitResult:
    """Fitted A-B log-distance model with its residual error."""

    a_db: float
    b: float
    rmse_db: float
    n_points: int

    def predict(self, d: float | np.ndarray) -> float | np.ndarray:
        return self.a_db + 10.0 * self.b * np.log10(d)


def fit_ab(
    samples: Sequence[tuple[float, float]],
    weights: Sequence[float] | None = None,
) -> FitResult:
    """Least-squares fit of pl = A + 10 B log10(d).

    Weights (e.g. bin sample counts) scale squared residuals; the RMSE is
    the weighted root-mean-square residual. Noiseless A-B data is
    recovered exactly.
    """
    if len(samples) < 2:
        raise ParameterError("need at least 2 samples to fit")
    d = np.array([s[0] for s in samples], dtype=float)
    pl = np.array([s[1] for s in samples], dtype=float)
    if np.any(d <= 0.0):
        raise ParameterError("distances must be > 0")
    x = 10.0 * np.log10(d)
    if np.ptp(x) < 1e-12:
        raise ParameterError("rank-deficient fit: all distances are equal")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != x.shape or np.any(w < 0.0) or not np.any(w > 0.0):
        raise ParameterError("weights must be nonnegative, same length, not all zero")
    sw = np.sqrt(w)
    design = np.column_stack([np.ones_like(x), x]) * sw[:, None]
    coef, *_ = np.linalg.lstsq(design, pl * sw, rcond=None)
    resid = pl - (coef[0] + coef[1] * x)
    rmse = float(np.sqrt(np.sum(w * resid**2) / np.sum(w)))
    return FitResult(a_db=float(coef[0]), b=float(coef[1]), rmse_db=rmse, n_points=len(x))


def pl_vs_theta(
    curve: PLoSCurve,
    h_abs_m: float = 100.0,
    h_gu_m: float = 1.5,
    params: VegetationParams = VegetationParams(),
    seed: int = 0,
) -> list[tuple[float, float, float]]:
    """(theta, 3-D distance, composite PL) per angle at a fixed altitude.

    The distance follows d = (h_abs - h_gu) / sin(theta); theta = 0 has
    no finite distance and is excluded from the table.
    """
    if h_abs_m <= h_gu_m:
        raise ParameterError("h_abs must exceed h_gu")
    rows = []
    p_los, p_b = curve.p_los, curve.p_nlos_b
    p_t, p_s = curve.p_nlos_t, curve.p_nlos_s
    for i, theta in enumerate(curve.theta_deg):
        if theta <= 0.0:
            continue
        d = (h_abs_m - h_gu_m) / math.sin(math.radians(theta))
        veg = sample_veg_geometry(d, seed, i) if p_t[i] > 0.0 else None
        pl = composite_pl(
            CompositePLInput(
                p_los=float(p_los[i]),
                p_nlos_b=float(p_b[i]),
                p_nlos_t=float(p_t[i]),
                p_nlos_s=float(p_s[i]),
                d_m=d,
                veg=veg,
                params=params,
            )
        )
        rows.append((theta, d, pl))
    return rows


def median_extra_loss(
    pl_with: Sequence[tuple[float, float]],
    pl_without: Sequence[tuple[float, float]],
) -> tuple[float, float]:
    """Median and 95th-percentile extra loss between paired bin tables."""
    if len(pl_with) != len(pl_without):
        raise AggregationError("paired inputs have different lengths")
    diffs = []
    for (d_w, pl_w), (d_o, pl_o) in zip(pl_with, pl_without):
        if abs(d_w - d_o) > 1e-9:
            raise AggregationError(f"unpaired bins: {d_w} vs {d_o}")
        diffs.append(pl_w - pl_o)
    arr = np.array(diffs)
    return float(np.median(arr)), float(np.percentile(arr, 95.0))
