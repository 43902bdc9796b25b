"""Shared fixtures: the 4-device reference instance and helpers.

The G4 instance has two fast pairs (0,1) and (2,3) at 1 ms / 10 Gbps and
slow everything else at 50 ms / 1 Gbps.  With d_pp = d_dp = 2 it is small
enough to enumerate all three balanced partitions by hand, yet heterogeneous
enough that grouping the fast pairs (total 2.502 s) beats splitting them
(total 4.302 s), so it exercises every tie-break and sign convention.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hetsched import CommGraph, WorkloadSpec

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def make_g4() -> CommGraph:
    lat = np.full((4, 4), 0.05)
    bw = np.full((4, 4), 1e9)
    for a, b in ((0, 1), (2, 3)):
        lat[a, b] = lat[b, a] = 0.001
        bw[a, b] = bw[b, a] = 10e9
    np.fill_diagonal(lat, 0.0)
    np.fill_diagonal(bw, np.inf)
    return CommGraph(lat=lat, bw=bw)


def make_w4() -> WorkloadSpec:
    return WorkloadSpec(d_pp=2, d_dp=2, c_pp=125_000_000, c_dp=500_000_000)


def make_homogeneous(n: int, lat: float = 0.5, bw: float = 8.0) -> CommGraph:
    """Uniform clique with dyadic weights so surrogate sums are exact."""
    a = np.full((n, n), lat)
    b = np.full((n, n), bw)
    np.fill_diagonal(a, 0.0)
    np.fill_diagonal(b, np.inf)
    return CommGraph(lat=a, bw=b)


def make_random_graph(rng: np.random.Generator, n: int,
                      lat_range=(0.001, 0.05),
                      bw_range=(1e9, 1e10)) -> CommGraph:
    """Symmetric random instance; the draw order is part of test seeds."""
    lat = rng.uniform(*lat_range, size=(n, n))
    bw = rng.uniform(*bw_range, size=(n, n))
    lat = (lat + lat.T) / 2.0
    bw = (bw + bw.T) / 2.0
    np.fill_diagonal(lat, 0.0)
    np.fill_diagonal(bw, np.inf)
    return CommGraph(lat=lat, bw=bw)


@pytest.fixture
def g4() -> CommGraph:
    return make_g4()


@pytest.fixture
def w4() -> WorkloadSpec:
    return make_w4()
