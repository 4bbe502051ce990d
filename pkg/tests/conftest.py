"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from fracflow import (BoundaryConditionSet, ConstantAperture, FractureNetwork,
                      FractureSpec, Point, assemble, build_structured_quad,
                      fracture_coefficient_map, solve_system, split_mesh)


def unit_square(n: int):
    return build_structured_quad(n, n, Point(0.0, 0.0), Point(1.0, 1.0))


def vertical_network(eps: float, kf: float, x: float = 0.5) -> FractureNetwork:
    spec = FractureSpec(path=(Point(x, 0.0), Point(x, 1.0)),
                        aperture=ConstantAperture(eps), mobility=kf)
    return FractureNetwork((spec,))


def coeffs_for(network: FractureNetwork):
    return [fracture_coefficient_map(f.mobility, f.aperture.max_value)
            for f in network.fractures]


THROUGHFLOW = BoundaryConditionSet(dirichlet={"right": 0.0}, neumann={"left": 1.0})


@pytest.fixture(scope="session")
def solved_vertical_16():
    """16x16 square, vertical blocking fracture, through-flow; reused widely."""
    split = split_mesh(unit_square(16), vertical_network(1e-2, 1e-2))
    system = assemble(split, np.ones(split.n_subdomains),
                      coeffs_for(split.network), THROUGHFLOW)
    pressure, report = solve_system(system)
    return split, system, pressure, report
