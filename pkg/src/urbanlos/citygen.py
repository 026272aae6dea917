"""Procedural generation of randomized Manhattan-style cities.

A city is generated from a built-up parameter tuple (alpha, beta, gamma)
and a :class:`GenConfig`. The square area is partitioned into a block
grid; each occupied block receives one axis-aligned building whose
footprint area equals the environment average exactly, with a uniform
shape factor controlling the width/length split and a Rayleigh height.
Trees and streetlights are placed on sidewalks at a fixed offset from
building walls, and ground users are rejection-sampled over open space.

All randomness flows through named substreams derived from a single
master seed, so regenerating any layout is bit-identical and changing
one entity count never perturbs the others.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.random import Generator, SeedSequence, default_rng

from .errors import InfeasibleLayoutError, ParameterError

# Named RNG substreams. Each (city index, stream) pair maps to an
# independent generator, so e.g. tree placement never consumes building draws.
STREAM_BUILDINGS = 0
STREAM_TREES = 1
STREAM_LIGHTS = 2
STREAM_USERS = 3
STREAM_ABS = 4

RETRY_LIMIT = 10_000

SHAPE_FACTOR_LOW = 0.5
SHAPE_FACTOR_HIGH = 1.5

TREE_HEIGHT_RANGE = (2.0, 5.0)
TREE_RADIUS_RANGE = (0.5, 1.5)
TRUNK_HEIGHT_FRAC = 0.2
TRUNK_RADIUS_FRAC = 0.1
LIGHT_HEIGHT_RANGE = (2.0, 5.0)
LIGHT_RADIUS = 0.1

MIN_FREE_AREA_FRAC = 0.01


@dataclass(frozen=True)
class BuiltUpParams:
    """Built-up environment tuple.

    alpha: ratio of built area to total land area, in (0, 1).
    beta:  building density per km^2, > 0.
    gamma: Rayleigh scale for building heights in meters, > 0.
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.beta <= 0.0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if self.gamma <= 0.0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")


#: Standard environment presets (built-area ratio, density per km^2, height scale).
PRESETS = {
    "urban": BuiltUpParams(alpha=0.3, beta=500.0, gamma=15.0),
    "dense_urban": BuiltUpParams(alpha=0.5, beta=300.0, gamma=20.0),
    "high_rise": BuiltUpParams(alpha=0.5, beta=300.0, gamma=50.0),
}


@dataclass(frozen=True)
class GenConfig:
    """Layout generation knobs independent of the environment class."""

    area: float = 1_000_000.0  # total land area, m^2
    n_trees: int = 200
    n_lights: int = 500
    n_gu: int = 100
    d_o: float = 1.5  # obstacle offset from building walls, m
    h_gu: float = 1.5  # ground-user antenna height, m
    seed: int = 0

    def __post_init__(self):
        if self.area <= 0.0:
            raise ParameterError(f"area must be > 0, got {self.area}")
        for name in ("n_trees", "n_lights", "n_gu"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.d_o <= 0.0:
            raise ParameterError(f"d_o must be > 0, got {self.d_o}")
        if self.h_gu < 0.0:
            raise ParameterError(f"h_gu must be >= 0, got {self.h_gu}")

    @property
    def side(self) -> float:
        return math.sqrt(self.area)


@dataclass(frozen=True)
class Building:
    """Axis-aligned rectangular building.

    (x, y) is the minimum corner; w and l are the extents along the x and
    y axes; h is the roof height. w * l always equals the environment's
    average footprint area.
    """

    x: float
    y: float
    w: float
    l: float
    h: float

    @property
    def x1(self) -> float:
        return self.x + self.w

    @property
    def y1(self) -> float:
        return self.y + self.l

    @property
    def area(self) -> float:
        return self.w * self.l


@dataclass(frozen=True)
class Tree:
    """Tree modeled as a trunk cylinder under a foliage cone.

    r is the foliage base radius, h the total height. The trunk takes a
    fixed fraction of both (h_trunk = 0.2 h, r_trunk = 0.1 r).
    """

    x: float
    y: float
    r: float
    h: float

    @property
    def r_trunk(self) -> float:
        return TRUNK_RADIUS_FRAC * self.r

    @property
    def h_trunk(self) -> float:
        return TRUNK_HEIGHT_FRAC * self.h


@dataclass(frozen=True)
class Streetlight:
    """Thin cylindrical pole."""

    x: float
    y: float
    h: float
    r: float = LIGHT_RADIUS


@dataclass(frozen=True)
class GroundUser:
    """Ground user position and antenna height."""

    x: float
    y: float
    h: float


@dataclass(frozen=True)
class CityLayout:
    """Immutable generated scene."""

    params: BuiltUpParams
    config: GenConfig
    buildings: tuple[Building, ...]
    trees: tuple[Tree, ...]
    lights: tuple[Streetlight, ...]
    users: tuple[GroundUser, ...]

    @property
    def side(self) -> float:
        return self.config.side

    @property
    def built_area(self) -> float:
        return sum(b.area for b in self.buildings)


def city_rng(seed: int, city_index: int, stream: int) -> Generator:
    """Generator for one named substream of one city."""
    return default_rng(SeedSequence(seed, spawn_key=(city_index, stream)))


def building_count(params: BuiltUpParams, area: float) -> int:
    """Number of buildings for a given land area (exact, rounded)."""
    return int(round(params.beta * area / 1e6))


def average_footprint(params: BuiltUpParams, area: float) -> float:
    """Average footprint area per building, m^2."""
    return (params.alpha * area) / (params.beta * area / 1e6)


def derive_building_dims(
    params: BuiltUpParams, area: float, shape: float
) -> tuple[float, float]:
    """Width/length of a building from its shape factor.

    The shape factor multiplies the square-root footprint to set the
    width; the length is whatever preserves the average footprint area
    exactly, so w * l is invariant across draws.
    """
    if area <= 0.0:
        raise ParameterError(f"area must be > 0, got {area}")
    if not SHAPE_FACTOR_LOW <= shape <= SHAPE_FACTOR_HIGH:
        raise ParameterError(
            f"shape factor must be in [{SHAPE_FACTOR_LOW}, {SHAPE_FACTOR_HIGH}], got {shape}"
        )
    b_avg = average_footprint(params, area)
    w = math.sqrt(b_avg) * shape
    return w, b_avg / w


def rayleigh_icdf(gamma: float, u: float) -> float:
    """Inverse CDF of the Rayleigh height distribution."""
    if gamma <= 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    if not 0.0 <= u < 1.0:
        raise ParameterError(f"u must be in [0, 1), got {u}")
    return gamma * math.sqrt(-2.0 * math.log1p(-u))


def sample_height(gamma: float, rng: Generator) -> float:
    """One Rayleigh-distributed building height."""
    return rayleigh_icdf(gamma, rng.random())


def sample_heights(gamma: float, rng: Generator, n: int) -> np.ndarray:
    """Vector of n Rayleigh-distributed heights."""
    if gamma <= 0.0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    return gamma * np.sqrt(-2.0 * np.log1p(-rng.random(n)))


class _RectStore:
    """Growing set of placed rectangles with a vectorized overlap test."""

    def __init__(self):
        self._rows: list[tuple[float, float, float, float]] = []
        self._arr = np.empty((0, 4))

    def add(self, x0: float, y0: float, x1: float, y1: float) -> None:
        self._rows.append((x0, y0, x1, y1))
        self._arr = np.asarray(self._rows)

    def overlaps(self, x0: float, y0: float, x1: float, y1: float) -> bool:
        # Strict interior overlap; shared edges are allowed.
        a = self._arr
        if not a.size:
            return False
        return bool(
            np.any((x0 < a[:, 2]) & (x1 > a[:, 0]) & (y0 < a[:, 3]) & (y1 > a[:, 1]))
        )


def _jitter_center(
    rng: Generator, block_lo: float, block_size: float, dim: float, side: float
) -> float:
    """Center coordinate for one axis: jittered inside the block when the
    footprint fits, block-centered otherwise, always clamped into the city."""
    if dim <= block_size:
        c = rng.uniform(block_lo + dim / 2.0, block_lo + block_size - dim / 2.0)
    else:
        c = block_lo + block_size / 2.0
    return min(max(c, dim / 2.0), side - dim / 2.0)


def place_buildings(
    params: BuiltUpParams, config: GenConfig, rng: Generator
) -> tuple[Building, ...]:
    """Place all buildings on the block grid.

    The grid has ceil(sqrt(n))^2 blocks; a random subset of n blocks each
    receives one building, jittered inside its block when the footprint
    fits and block-centered (spilling into the street) otherwise, with
    overlap rejection. Long-and-thin shape draws can exceed the block
    size, so a jammed block falls back to a uniform free position for the
    second half of the retry budget before generation is declared
    infeasible.
    """
    n = building_count(params, config.area)
    if n == 0:
        return ()
    side = config.side
    gdim = math.ceil(math.sqrt(n))
    block = side / gdim
    blocks = rng.permutation(gdim * gdim)[:n]

    rects = _RectStore()
    buildings: list[Building] = []
    for i, blk in enumerate(blocks):
        bx = float(blk % gdim) * block
        by = float(blk // gdim) * block
        placed = False
        for attempt in range(RETRY_LIMIT):
            shape = rng.uniform(SHAPE_FACTOR_LOW, SHAPE_FACTOR_HIGH)
            w, l = derive_building_dims(params, config.area, shape)
            if rng.random() < 0.5:
                w, l = l, w
            if w > side or l > side:
                continue
            if attempt < RETRY_LIMIT // 2:
                cx = _jitter_center(rng, bx, block, w, side)
                cy = _jitter_center(rng, by, block, l, side)
            else:
                cx = rng.uniform(w / 2.0, side - w / 2.0)
                cy = rng.uniform(l / 2.0, side - l / 2.0)
            x0, y0 = cx - w / 2.0, cy - l / 2.0
            if rects.overlaps(x0, y0, x0 + w, y0 + l):
                continue
            h = sample_height(params.gamma, rng)
            rects.add(x0, y0, x0 + w, y0 + l)
            buildings.append(Building(x=x0, y=y0, w=w, l=l, h=h))
            placed = True
            break
        if not placed:
            raise InfeasibleLayoutError(
                f"could not place building {i} after {RETRY_LIMIT} attempts"
            )
    return tuple(buildings)


class _BuildingBounds:
    """Building corner arrays for vectorized disc-overlap tests."""

    def __init__(self, buildings: Sequence[Building]):
        self.x0 = np.array([b.x for b in buildings])
        self.y0 = np.array([b.y for b in buildings])
        self.x1 = np.array([b.x1 for b in buildings])
        self.y1 = np.array([b.y1 for b in buildings])

    def disc_is_free(self, cx: float, cy: float, r: float, side: float) -> bool:
        if cx - r < 0.0 or cy - r < 0.0 or cx + r > side or cy + r > side:
            return False
        dx = np.maximum(np.maximum(self.x0 - cx, 0.0), cx - self.x1)
        dy = np.maximum(np.maximum(self.y0 - cy, 0.0), cy - self.y1)
        return not np.any(dx * dx + dy * dy < r * r)


def _sidewalk_point(
    rng: Generator, buildings: Sequence[Building], d_o: float
) -> tuple[float, float]:
    """Uniform point at perpendicular offset d_o from a random building side."""
    b = buildings[int(rng.integers(len(buildings)))]
    edge = int(rng.integers(4))
    u = rng.random()
    if edge == 0:  # south
        return b.x + u * b.w, b.y - d_o
    if edge == 1:  # north
        return b.x + u * b.w, b.y1 + d_o
    if edge == 2:  # west
        return b.x - d_o, b.y + u * b.l
    return b.x1 + d_o, b.y + u * b.l  # east


def place_trees(
    buildings: Sequence[Building], config: GenConfig, rng: Generator
) -> tuple[Tree, ...]:
    """Place n_trees sidewalk trees; discs may not intersect any building."""
    trees: list[Tree] = []
    side = config.side
    bounds = _BuildingBounds(buildings)
    for i in range(config.n_trees):
        if not buildings:
            raise InfeasibleLayoutError(
                f"could not place tree {i}: no building edges available"
            )
        for _ in range(RETRY_LIMIT):
            cx, cy = _sidewalk_point(rng, buildings, config.d_o)
            h = rng.uniform(*TREE_HEIGHT_RANGE)
            r = rng.uniform(*TREE_RADIUS_RANGE)
            if bounds.disc_is_free(cx, cy, r, side):
                trees.append(Tree(x=cx, y=cy, r=r, h=h))
                break
        else:
            raise InfeasibleLayoutError(
                f"could not place tree {i} after {RETRY_LIMIT} attempts"
            )
    return tuple(trees)


def place_lights(
    buildings: Sequence[Building], config: GenConfig, rng: Generator
) -> tuple[Streetlight, ...]:
    """Place n_lights streetlights; same sidewalk rule as trees."""
    lights: list[Streetlight] = []
    side = config.side
    bounds = _BuildingBounds(buildings)
    for i in range(config.n_lights):
        if not buildings:
            raise InfeasibleLayoutError(
                f"could not place streetlight {i}: no building edges available"
            )
        for _ in range(RETRY_LIMIT):
            cx, cy = _sidewalk_point(rng, buildings, config.d_o)
            h = rng.uniform(*LIGHT_HEIGHT_RANGE)
            if bounds.disc_is_free(cx, cy, LIGHT_RADIUS, side):
                lights.append(Streetlight(x=cx, y=cy, h=h))
                break
        else:
            raise InfeasibleLayoutError(
                f"could not place streetlight {i} after {RETRY_LIMIT} attempts"
            )
    return tuple(lights)


def place_obstacles(
    buildings: Sequence[Building],
    config: GenConfig,
    rng_trees: Generator,
    rng_lights: Generator,
) -> tuple[tuple[Tree, ...], tuple[Streetlight, ...]]:
    """Place both obstacle families from their own substreams."""
    return place_trees(buildings, config, rng_trees), place_lights(
        buildings, config, rng_lights
    )


class FootprintIndex:
    """Vectorized point-membership tests against all 2-D footprints."""

    def __init__(
        self,
        buildings: Sequence[Building],
        trees: Sequence[Tree],
        lights: Sequence[Streetlight],
    ):
        self.bx0 = np.array([b.x for b in buildings])
        self.by0 = np.array([b.y for b in buildings])
        self.bx1 = np.array([b.x1 for b in buildings])
        self.by1 = np.array([b.y1 for b in buildings])
        self.tx = np.array([t.x for t in trees])
        self.ty = np.array([t.y for t in trees])
        self.tr = np.array([t.r for t in trees])
        self.lx = np.array([s.x for s in lights])
        self.ly = np.array([s.y for s in lights])
        self.lr = np.array([s.r for s in lights])

    def blocked(self, x: float, y: float) -> bool:
        """True if (x, y) lies inside any footprint (closed sets)."""
        if self.bx0.size and np.any(
            (x >= self.bx0) & (x <= self.bx1) & (y >= self.by0) & (y <= self.by1)
        ):
            return True
        if self.tx.size and np.any(
            (x - self.tx) ** 2 + (y - self.ty) ** 2 <= self.tr**2
        ):
            return True
        if self.lx.size and np.any(
            (x - self.lx) ** 2 + (y - self.ly) ** 2 <= self.lr**2
        ):
            return True
        return False


def sample_open_point(
    index: FootprintIndex, side: float, rng: Generator, what: str = "point"
) -> tuple[float, float]:
    """Uniform point over the free region via rejection sampling."""
    for _ in range(RETRY_LIMIT):
        x = rng.uniform(0.0, side)
        y = rng.uniform(0.0, side)
        if not index.blocked(x, y):
            return x, y
    raise InfeasibleLayoutError(f"could not place {what} after {RETRY_LIMIT} attempts")


def place_users(
    buildings: Sequence[Building],
    trees: Sequence[Tree],
    lights: Sequence[Streetlight],
    config: GenConfig,
    rng: Generator,
) -> tuple[GroundUser, ...]:
    """Place n_gu users uniformly over open space."""
    free = config.area - sum(b.area for b in buildings)
    free -= sum(math.pi * t.r**2 for t in trees)
    free -= sum(math.pi * s.r**2 for s in lights)
    if config.n_gu > 0 and free < MIN_FREE_AREA_FRAC * config.area:
        raise InfeasibleLayoutError(
            f"free area {free:.0f} m^2 is below {MIN_FREE_AREA_FRAC:.0%} of the city"
        )
    index = FootprintIndex(buildings, trees, lights)
    users = []
    for i in range(config.n_gu):
        x, y = sample_open_point(index, config.side, rng, what=f"user {i}")
        users.append(GroundUser(x=x, y=y, h=config.h_gu))
    return tuple(users)


def generate_city(
    params: BuiltUpParams, config: GenConfig, city_index: int = 0
) -> CityLayout:
    """Generate one complete city deterministically from (params, config).

    The same inputs always produce a bit-identical layout; distinct
    city_index values yield independent cities under one master seed.
    """
    buildings = place_buildings(
        params, config, city_rng(config.seed, city_index, STREAM_BUILDINGS)
    )
    trees, lights = place_obstacles(
        buildings,
        config,
        city_rng(config.seed, city_index, STREAM_TREES),
        city_rng(config.seed, city_index, STREAM_LIGHTS),
    )
    users = place_users(
        buildings, trees, lights, config, city_rng(config.seed, city_index, STREAM_USERS)
    )
    return CityLayout(
        params=params,
        config=config,
        buildings=buildings,
        trees=trees,
        lights=lights,
        users=users,
    )


# ---------------------------------------------------------------------------
# JSON round-trip


def layout_to_dict(layout: CityLayout) -> dict:
    """Plain-dict form of a layout (all lengths in meters)."""
    p, c = layout.params, layout.config
    return {
        "params": {"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma},
        "config": {
            "area": c.area,
            "n_trees": c.n_trees,
            "n_lights": c.n_lights,
            "n_gu": c.n_gu,
            "d_o": c.d_o,
            "h_gu": c.h_gu,
            "seed": c.seed,
        },
        "buildings": [
            {"x": b.x, "y": b.y, "w": b.w, "l": b.l, "h": b.h} for b in layout.buildings
        ],
        "trees": [
            {
                "x": t.x,
                "y": t.y,
                "r": t.r,
                "h": t.h,
                "r_trunk": t.r_trunk,
                "h_trunk": t.h_trunk,
            }
            for t in layout.trees
        ],
        "lights": [{"x": s.x, "y": s.y, "r": s.r, "h": s.h} for s in layout.lights],
        "users": [{"x": u.x, "y": u.y, "h": u.h} for u in layout.users],
    }


def layout_from_dict(doc: dict) -> CityLayout:
    """Rebuild a layout from its dict form, validating derived fields."""
    params = BuiltUpParams(**doc["params"])
    config = GenConfig(**doc["config"])
    buildings = tuple(Building(**b) for b in doc["buildings"])
    trees = []
    for t in doc["trees"]:
        tree = Tree(x=t["x"], y=t["y"], r=t["r"], h=t["h"])
        if not math.isclose(t["r_trunk"], tree.r_trunk, rel_tol=1e-12) or not math.isclose(
            t["h_trunk"], tree.h_trunk, rel_tol=1e-12
        ):
            raise ParameterError("tree trunk fields violate the fixed trunk ratios")
        trees.append(tree)
    lights = tuple(Streetlight(**s) for s in doc["lights"])
    users = tuple(GroundUser(**u) for u in doc["users"])
    layout = CityLayout(
        params=params,
        config=config,
        buildings=buildings,
        trees=tuple(trees),
        lights=lights,
        users=users,
    )
    counts = (len(buildings), len(trees), len(lights), len(users))
    expected = (
        building_count(params, config.area),
        config.n_trees,
        config.n_lights,
        config.n_gu,
    )
    if counts != expected:
        raise ParameterError(f"layout counts {counts} do not match config {expected}")
    return layout


def layout_json(layout: CityLayout) -> str:
    """Canonical JSON text for a layout (stable byte-for-byte)."""
    return json.dumps(layout_to_dict(layout), sort_keys=True, separators=(",", ":"))


def save_layout(layout: CityLayout, path: str | Path) -> None:
    Path(path).write_text(layout_json(layout))


def load_layout(path: str | Path) -> CityLayout:
    return layout_from_dict(json.loads(Path(path).read_text()))
