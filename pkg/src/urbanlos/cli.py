"""Command-line pipeline: generate, simulate, fit, report, oracle-check.

Each run writes into a directory keyed by the hash of its fully resolved
configuration, next to a manifest that reproduces the run byte-for-byte.
Configuration comes from defaults, then an optional YAML/JSON config
file (a previous manifest works too), then explicit flags, which win.

Exit codes: 0 success, 1 validation error, 2 infeasible generation,
3 missing inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .citygen import (
    PRESETS,
    BuiltUpParams,
    GenConfig,
    generate_city,
    save_layout,
)
from .errors import (
    InfeasibleLayoutError,
    MissingInputError,
    ParameterError,
    UrbanLosError,
)
from .geometry import LayoutGeometry
from .montecarlo import (
    SweepConfig,
    parse_scenario,
    run_scenarios,
    streetlight_delta,
    tree_density_sweep,
)
from .oracle import classify_link_bruteforce, compare_on_links, random_links
from .outputs import (
    config_hash,
    layouts_hash,
    read_csv_dicts,
    read_manifest,
    write_angle_csv,
    write_csv,
    write_delta_csv,
    write_distance_csv,
    write_manifest,
)
from .pathloss import VegetationParams, composite_bins, fit_ab, pl_vs_theta

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INFEASIBLE = 2
EXIT_MISSING = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route usage errors through the validation path
        raise ParameterError(message)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML/JSON config file or a previous manifest")
    p.add_argument("--env", choices=sorted(PRESETS), help="environment preset")
    p.add_argument("--alpha", type=float, help="built-area ratio, overrides preset")
    p.add_argument("--beta", type=float, help="buildings per km^2, overrides preset")
    p.add_argument("--gamma", type=float, help="height scale in m, overrides preset")
    p.add_argument("--area", type=float, help="land area in m^2")
    p.add_argument("--n-trees", type=int, dest="n_trees")
    p.add_argument("--n-lights", type=int, dest="n_lights")
    p.add_argument("--n-gu", type=int, dest="n_gu")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--out", type=Path, default=Path("runs"), help="output root directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="urbanlos", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate one city layout as JSON")
    _add_param_flags(p)

    p = sub.add_parser("simulate", help="run the elevation-angle sweep")
    _add_param_flags(p)
    p.add_argument("--n-cities", type=int, dest="n_cities")
    p.add_argument(
        "--scenario",
        help="comma-separated scenarios: buildings-only,trees,full",
    )
    p.add_argument(
        "--densities",
        help="comma-separated tree counts for a density sweep (lights excluded)",
    )
    p.add_argument("--freq-ghz", type=float, dest="freq_ghz")

    p = sub.add_parser("fit", help="fit A-B path-loss models from simulate outputs")
    p.add_argument("--run", type=Path, required=True, help="simulate run directory")
    p.add_argument("--freq-ghz", type=float, dest="freq_ghz")

    p = sub.add_parser("report", help="emit plot-ready CSV bundle from a run")
    p.add_argument("--run", type=Path, required=True, help="simulate run directory")

    p = sub.add_parser("oracle-check", help="compare the classifier against rasterization")
    _add_param_flags(p)
    p.add_argument("--n-links", type=int, dest="n_links", default=1000)
    p.add_argument("--step", type=float, default=0.01, help="rasterization step in m")
    p.add_argument("--dump-hits", type=Path, dest="dump_hits", help="write per-link hit lists as JSON")
    return parser


# -- configuration resolution ------------------------------------------------

_DEFAULT_CONFIG = {
    "environment": None,
    "alpha": None,
    "beta": None,
    "gamma": None,
    "gen": {
        "area": 1_000_000.0,
        "n_trees": 200,
        "n_lights": 500,
        "n_gu": 100,
        "d_o": 1.5,
        "h_gu": 1.5,
    },
    "sweep": {
        "n_cities": 30,
        "angles": [float(a) for a in range(1, 91)],
        "altitude_policy": "per-angle",
        "fixed_altitude_m": 100.0,
    },
    "scenarios": ["buildings-only", "trees", "full"],
    "densities": None,
    "freq_ghz": 28.0,
    "seed": None,
}


def _deep_update(base: dict, overlay: dict) -> dict:
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_update(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(args: argparse.Namespace, kind: str) -> dict:
    config = dict(_DEFAULT_CONFIG)
    if getattr(args, "config", None):
        doc = yaml.safe_load(Path(args.config).read_text())
        if isinstance(doc, dict) and "config" in doc and "config_hash" in doc:
            doc = doc["config"]  # a manifest was passed
        doc = {k: v for k, v in doc.items() if k != "kind"}
        config = _deep_update(config, doc)
    for name in ("env",):
        if getattr(args, name, None) is not None:
            config["environment"] = args.env
    for name in ("alpha", "beta", "gamma", "seed", "freq_ghz"):
        if getattr(args, name, None) is not None:
            config[name] = getattr(args, name)
    for name in ("area", "n_trees", "n_lights", "n_gu"):
        if getattr(args, name, None) is not None:
            config["gen"][name] = getattr(args, name)
    if getattr(args, "n_cities", None) is not None:
        config["sweep"]["n_cities"] = args.n_cities
    if getattr(args, "scenario", None):
        config["scenarios"] = [s.strip() for s in args.scenario.split(",") if s.strip()]
    if getattr(args, "densities", None):
        config["densities"] = [int(v) for v in args.densities.split(",")]
    config["kind"] = kind
    return config


def _built_up_params(config: dict) -> BuiltUpParams:
    if config["environment"] is not None:
        preset = PRESETS[config["environment"]]
        alpha = config["alpha"] if config["alpha"] is not None else preset.alpha
        beta = config["beta"] if config["beta"] is not None else preset.beta
        gamma = config["gamma"] if config["gamma"] is not None else preset.gamma
        return BuiltUpParams(alpha=alpha, beta=beta, gamma=gamma)
    if None in (config["alpha"], config["beta"], config["gamma"]):
        raise ParameterError("provide --env or all of --alpha/--beta/--gamma")
    return BuiltUpParams(alpha=config["alpha"], beta=config["beta"], gamma=config["gamma"])


def _gen_config(config: dict, seed: int) -> GenConfig:
    g = config["gen"]
    return GenConfig(
        area=float(g["area"]),
        n_trees=int(g["n_trees"]),
        n_lights=int(g["n_lights"]),
        n_gu=int(g["n_gu"]),
        d_o=float(g["d_o"]),
        h_gu=float(g["h_gu"]),
        seed=seed,
    )


def _sweep_config(config: dict) -> SweepConfig:
    s = config["sweep"]
    return SweepConfig(
        n_cities=int(s["n_cities"]),
        angles=tuple(float(a) for a in s["angles"]),
        altitude_policy=s["altitude_policy"],
        fixed_altitude_m=float(s["fixed_altitude_m"]),
    )


def _run_dir(out_root: Path, config: dict) -> tuple[Path, str]:
    digest = config_hash(config)
    run_dir = out_root / digest
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir, digest


# -- subcommands -------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    config = resolve_config(args, "generate")
    if config["seed"] is None:
        config["seed"] = 0
    params = _built_up_params(config)
    gen = _gen_config(config, int(config["seed"]))
    layout = generate_city(params, gen)
    run_dir, digest = _run_dir(args.out, config)
    save_layout(layout, run_dir / "layout.json")
    write_manifest(
        run_dir / "manifest.json",
        {
            "kind": "generate",
            "config": config,
            "config_hash": digest,
            "layout_hash": layouts_hash([layout]),
            "counts": {
                "buildings": len(layout.buildings),
                "trees": len(layout.trees),
                "lights": len(layout.lights),
                "users": len(layout.users),
            },
        },
    )
    print(run_dir / "layout.json")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args, "simulate")
    if config["seed"] is None:
        raise ParameterError("simulate requires --seed (or seed in the config file)")
    params = _built_up_params(config)
    gen = _gen_config(config, int(config["seed"]))
    sweep = _sweep_config(config)
    scenarios = [parse_scenario(s) for s in config["scenarios"]]
    if not scenarios:
        raise ParameterError("at least one scenario is required")

    run_dir, digest = _run_dir(args.out, config)
    results = run_scenarios(params, gen, sweep, scenarios)
    for scenario in scenarios:
        curve, stats = results[scenario.name]
        write_angle_csv(run_dir / f"angles_{scenario.name}.csv", curve)
        write_distance_csv(run_dir / f"distance_{scenario.name}.csv", stats)
    delta = None
    if len(scenarios) >= 2:
        a, b = scenarios[0], scenarios[1]
        delta = streetlight_delta(results[a.name][0], results[b.name][0])
        write_delta_csv(
            run_dir / f"delta_{a.name}_vs_{b.name}.csv",
            results[a.name][0],
            results[b.name][0],
        )
    if config["densities"]:
        curves = tree_density_sweep(params, gen, sweep, config["densities"])
        for density, curve in curves.items():
            write_angle_csv(run_dir / f"density_{density}.csv", curve)

    layouts = (
        generate_city(params, gen, city_index=i) for i in range(sweep.n_cities)
    )
    write_manifest(
        run_dir / "manifest.json",
        {
            "kind": "simulate",
            "config": config,
            "config_hash": digest,
            "layout_hash": layouts_hash(layouts),
            "n_samples": sweep.n_cities * gen.n_gu * len(sweep.angles),
            "scenarios": [s.name for s in scenarios],
            "mean_abs_delta_p_los": delta,
        },
    )
    print(run_dir)
    return EXIT_OK


def _require(run_dir: Path, names: list[str]) -> None:
    missing = [str(run_dir / n) for n in names if not (run_dir / n).exists()]
    if missing:
        raise MissingInputError("missing inputs: " + ", ".join(missing))


def _stats_from_csv(run_dir: Path, scenario: str):
    from .montecarlo import DISTANCE_BIN_M, DistanceStats

    rows = read_csv_dicts(run_dir / f"distance_{scenario}.csv")
    n = [int(r["n"]) for r in rows]
    return DistanceStats(
        bin_width=DISTANCE_BIN_M,
        bin_centers=tuple(float(r["bin_center_m"]) for r in rows),
        los=tuple(int(round(float(r["p_los"]) * k)) for r, k in zip(rows, n)),
        nlos_b=tuple(int(round(float(r["p_nlos_b"]) * k)) for r, k in zip(rows, n)),
        nlos_t=tuple(int(round(float(r["p_nlos_t"]) * k)) for r, k in zip(rows, n)),
        nlos_s=tuple(int(round(float(r["p_nlos_s"]) * k)) for r, k in zip(rows, n)),
        d_sum=tuple(float(r["mean_d_m"]) * k for r, k in zip(rows, n)),
    )


def _curve_from_csv(run_dir: Path, name: str):
    from .montecarlo import PLoSCurve

    rows = read_csv_dicts(run_dir / name)
    n = [int(r["n"]) for r in rows]
    return PLoSCurve(
        theta_deg=tuple(float(r["theta_deg"]) for r in rows),
        los=tuple(int(round(float(r["p_los"]) * k)) for r, k in zip(rows, n)),
        nlos_b=tuple(int(round(float(r["p_nlos_b"]) * k)) for r, k in zip(rows, n)),
        nlos_t=tuple(int(round(float(r["p_nlos_t"]) * k)) for r, k in zip(rows, n)),
        nlos_s=tuple(int(round(float(r["p_nlos_s"]) * k)) for r, k in zip(rows, n)),
    )


def cmd_fit(args: argparse.Namespace) -> int:
    run_dir = args.run
    _require(run_dir, ["manifest.json"])
    manifest = read_manifest(run_dir / "manifest.json")
    config = manifest["config"]
    env = config.get("environment") or "custom"
    seed = int(config["seed"])
    f_ghz = float(args.freq_ghz or config.get("freq_ghz", 28.0))
    params = VegetationParams(f_ghz=f_ghz)

    scenarios = [s for s in ("buildings-only", "trees") if s in manifest["scenarios"]]
    if not scenarios:
        raise MissingInputError(
            "fit requires buildings-only and/or trees scenario outputs"
        )
    _require(run_dir, [f"distance_{s}.csv" for s in scenarios])
    rows = []
    for scenario in scenarios:
        stats = _stats_from_csv(run_dir, scenario)
        bins = composite_bins(stats, params=params, seed=seed)
        fit = fit_ab([(d, pl) for d, pl, _ in bins], weights=[n for *_, n in bins])
        rows.append((env, scenario, fit.a_db, fit.b, fit.rmse_db, fit.n_points))
    from .outputs import FITS_CSV_COLUMNS

    write_csv(run_dir / "fits.csv", FITS_CSV_COLUMNS, rows)
    print(run_dir / "fits.csv")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = args.run
    _require(run_dir, ["manifest.json", "fits.csv"])
    manifest = read_manifest(run_dir / "manifest.json")
    config = manifest["config"]
    seed = int(config["seed"])
    params = VegetationParams(f_ghz=float(config.get("freq_ghz", 28.0)))
    scenarios = manifest["scenarios"]
    _require(run_dir, [f"distance_{s}.csv" for s in scenarios])
    _require(run_dir, [f"angles_{s}.csv" for s in scenarios])

    # P_LoS against 3-D distance, one block per scenario
    rows = []
    for scenario in scenarios:
        for r in read_csv_dicts(run_dir / f"distance_{scenario}.csv"):
            rows.append(
                (
                    scenario,
                    float(r["bin_center_m"]),
                    float(r["p_los"]),
                    float(r["p_nlos_b"]),
                    float(r["p_nlos_t"]),
                    float(r["p_nlos_s"]),
                    int(r["n"]),
                )
            )
    write_csv(
        run_dir / "report_plos_vs_distance.csv",
        ["scenario", "bin_center_m", "p_los", "p_nlos_b", "p_nlos_t", "p_nlos_s", "n"],
        rows,
    )

    # extra tree-caused NLoS probability against elevation angle
    tree_scenario = "trees" if "trees" in scenarios else None
    if tree_scenario is None:
        raise MissingInputError("report requires the trees scenario for the tree-NLoS table")
    curve = _curve_from_csv(run_dir, f"angles_{tree_scenario}.csv")
    write_csv(
        run_dir / "report_tree_nlos_vs_theta.csv",
        ["theta_deg", "p_nlos_t", "n"],
        zip(curve.theta_deg, (float(v) for v in curve.p_nlos_t), (int(v) for v in curve.n)),
    )

    # density sweep, when the simulate run produced one
    density_files = sorted(
        run_dir.glob("density_*.csv"), key=lambda p: int(p.stem.split("_")[1])
    )
    if density_files:
        rows = []
        for path in density_files:
            density = int(path.stem.split("_")[1])
            for r in read_csv_dicts(path):
                rows.append((density, float(r["theta_deg"]), float(r["p_los"]), int(r["n"])))
        write_csv(
            run_dir / "report_density.csv",
            ["density", "theta_deg", "p_los", "n"],
            rows,
        )

    # composite PL against elevation angle at a fixed 100 m ABS altitude
    rows = []
    for scenario in scenarios:
        if scenario not in ("buildings-only", "trees"):
            continue
        curve = _curve_from_csv(run_dir, f"angles_{scenario}.csv")
        for theta, d, pl in pl_vs_theta(curve, params=params, seed=seed):
            rows.append((scenario, theta, d, pl))
    write_csv(
        run_dir / "report_pl_vs_theta.csv",
        ["scenario", "theta_deg", "d_m", "pl_db"],
        rows,
    )
    print(run_dir)
    return EXIT_OK


def cmd_oracle_check(args: argparse.Namespace) -> int:
    config = resolve_config(args, "oracle-check")
    if config["seed"] is None:
        config["seed"] = 0
    params = _built_up_params(config)
    gen = _gen_config(config, int(config["seed"]))
    layout = generate_city(params, gen)
    geom = LayoutGeometry(layout)
    rng = np.random.default_rng(int(config["seed"]))
    links = random_links(layout, geom, rng, int(args.n_links))
    mismatches = compare_on_links(layout, links, step=args.step)
    if args.dump_hits:
        dump = []
        for link in links:
            analytic = geom.crossings(link)
            brute = classify_link_bruteforce(link, layout, step=args.step)
            dump.append(
                {
                    "abs_xy": list(link.abs_xy),
                    "gu_xy": list(link.gu_xy),
                    "h_abs": link.h_abs,
                    "analytic_hits": [
                        {
                            "kind": h.kind,
                            "index": h.index,
                            "r_i": h.r_i,
                            "obstacle_height": h.obstacle_height,
                            "blockage_height": h.blockage_height,
                            "blocks": h.blocks,
                        }
                        for h in analytic
                    ],
                    "bruteforce_crossed": {k: sorted(v) for k, v in brute.crossed.items()},
                    "bruteforce_blocked": {k: sorted(v) for k, v in brute.blocked.items()},
                }
            )
        args.dump_hits.write_text(json.dumps(dump, indent=2) + "\n")
    print(f"{len(links)} links, {len(mismatches)} disagreements (step {args.step} m)")
    if mismatches:
        for m in mismatches[:10]:
            print(f"  link {m['link']}: analytic={m['analytic']} bruteforce={m['bruteforce']}")
        return EXIT_VALIDATION
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "report": cmd_report,
    "oracle-check": cmd_oracle_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleLayoutError as exc:
        print(f"error: infeasible generation: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except UrbanLosError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
