"""Shared fixtures: small layouts and geometry wrappers reused across tests."""

import pytest

from urbanlos.citygen import PRESETS, GenConfig, generate_city
from urbanlos.geometry import LayoutGeometry


@pytest.fixture(scope="session")
def urban_layout():
    return generate_city(PRESETS["urban"], GenConfig(seed=11))


@pytest.fixture(scope="session")
def urban_geometry(urban_layout):
    return LayoutGeometry(urban_layout)


@pytest.fixture(scope="session")
def small_gen():
    return GenConfig(n_trees=40, n_lights=60, n_gu=15, seed=3)
