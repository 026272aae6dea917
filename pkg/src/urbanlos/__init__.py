"""Monte-Carlo simulator for air-to-ground line-of-sight probability and
path loss over randomized Manhattan-style cities."""

from .citygen import (
    PRESETS,
    BuiltUpParams,
    Building,
    CityLayout,
    GenConfig,
    GroundUser,
    Streetlight,
    Tree,
    derive_building_dims,
    generate_city,
    layout_from_dict,
    layout_to_dict,
    load_layout,
    sample_height,
    save_layout,
)
from .errors import (
    AggregationError,
    DegenerateLinkError,
    InfeasibleLayoutError,
    MissingInputError,
    ParameterError,
    UrbanLosError,
)
from .geometry import (
    LayoutGeometry,
    Link,
    LinkClass,
    ObstructionHit,
    blockage_height,
    classify_link,
    footprint_crossings,
    tree_height_at,
)
from .montecarlo import (
    BUILDINGS_ONLY,
    FULL,
    WITH_TREES,
    DistanceStats,
    PLoSCurve,
    Scenario,
    SweepConfig,
    run_scenarios,
    run_sweep,
    streetlight_delta,
    tree_density_sweep,
)
from .oracle import classify_link_bruteforce, compare_on_links, random_links
from .pathloss import (
    CompositePLInput,
    FitResult,
    VegetationParams,
    VegGeometry,
    composite_bins,
    composite_pl,
    fit_ab,
    fresnel_radius,
    fspl,
    median_extra_loss,
    min_illumination_area,
    pl_nlos_building,
    pl_nlos_tree,
    pl_vs_theta,
    veg_attenuation,
)

__version__ = "0.1.0"
