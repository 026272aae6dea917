"""CSV and manifest emission with byte-stable formatting.

Every run directory is keyed by a hash of its fully resolved
configuration and carries a manifest sufficient to reproduce the run
byte-for-byte. Floats are written with shortest-roundtrip repr so
identical results always serialize to identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from .citygen import CityLayout, layout_json
from .montecarlo import DistanceStats, PLoSCurve

ANGLE_CSV_COLUMNS = ["theta_deg", "p_los", "p_nlos_b", "p_nlos_t", "p_nlos_s", "n"]
DISTANCE_CSV_COLUMNS = [
    "bin_center_m",
    "p_los",
    "p_nlos_b",
    "p_nlos_t",
    "p_nlos_s",
    "n",
    "mean_d_m",
]
FITS_CSV_COLUMNS = ["environment", "scenario", "A_dB", "B", "rmse_dB", "n"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_angle_csv(path: Path, curve: PLoSCurve) -> None:
    n = curve.n
    rows = zip(
        curve.theta_deg,
        (float(v) for v in curve.p_los),
        (float(v) for v in curve.p_nlos_b),
        (float(v) for v in curve.p_nlos_t),
        (float(v) for v in curve.p_nlos_s),
        (int(v) for v in n),
    )
    write_csv(path, ANGLE_CSV_COLUMNS, rows)


def write_distance_csv(path: Path, stats: DistanceStats) -> None:
    rows = zip(
        stats.bin_centers,
        (float(v) for v in stats.p_los),
        (float(v) for v in stats.p_nlos_b),
        (float(v) for v in stats.p_nlos_t),
        (float(v) for v in stats.p_nlos_s),
        (int(v) for v in stats.n),
        (float(v) for v in stats.mean_d),
    )
    write_csv(path, DISTANCE_CSV_COLUMNS, rows)


def write_delta_csv(path: Path, curve_a: PLoSCurve, curve_b: PLoSCurve) -> None:
    rows = zip(
        curve_a.theta_deg,
        (float(v) for v in curve_a.p_los),
        (float(v) for v in curve_b.p_los),
        (float(abs(v)) for v in (curve_a.p_los - curve_b.p_los)),
    )
    write_csv(path, ["theta_deg", "p_los_a", "p_los_b", "abs_delta"], rows)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:12]


def layouts_hash(layouts: Iterable[CityLayout]) -> str:
    digest = hashlib.sha256()
    for layout in layouts:
        digest.update(layout_json(layout).encode())
    return digest.hexdigest()


def write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def read_manifest(path: Path) -> dict:
    return json.loads(path.read_text())


def read_csv_dicts(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
