"""Device network profiles: loading, generation, and symmetrization.

A profile stores the pairwise one-way delay matrix (seconds) and bandwidth
matrix (bits/s) for N devices.  Files carry delay in milliseconds and
bandwidth in Gbit/s, since that is how such numbers are usually quoted;
conversion happens only at the load/save boundary.  Payloads elsewhere in
this package are byte counts, so transfer-time formulas multiply by 8.

Synthetic scenarios are block-structured: devices are grouped into regions
(machines, data centers, or geographic regions), with one intra value per
region and cross values that are either fixed or sampled once per unordered
region pair from a closed range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np


class ProfileError(ValueError):
    """Malformed or inconsistent network profile data."""


class ScenarioError(ValueError):
    """Invalid scenario specification."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _first_bad(mask: np.ndarray) -> tuple[int, int]:
    i, j = np.argwhere(mask)[0]
    return int(i), int(j)


@dataclass(frozen=True)
class NetworkProfile:
    """Pairwise network characteristics for N devices, possibly asymmetric.

    delay[d][d2] is the one-way delay d -> d2 in seconds; bandwidth[d][d2]
    is in bits/s.  The bandwidth diagonal is stored as +inf and never used.
    """

    delay: np.ndarray
    bandwidth: np.ndarray
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        delay = np.array(self.delay, dtype=float)
        bw = np.array(self.bandwidth, dtype=float)
        if delay.ndim != 2 or delay.shape[0] != delay.shape[1]:
            raise ProfileError(f"delay matrix must be square, got shape {delay.shape}")
        if bw.shape != delay.shape:
            raise ProfileError(
                f"bandwidth shape {bw.shape} does not match delay shape {delay.shape}"
            )
        if not np.all(np.isfinite(delay)):
            raise ProfileError("non-finite delay at (%d,%d)" % _first_bad(~np.isfinite(delay)))
        if np.any(delay < 0):
            raise ProfileError("negative delay at (%d,%d)" % _first_bad(delay < 0))
        diag = np.diagonal(delay)
        if np.any(diag != 0):
            i = int(np.nonzero(diag != 0)[0][0])
            raise ProfileError(f"nonzero delay at ({i},{i})")
        off = ~np.eye(delay.shape[0], dtype=bool)
        if np.any((bw <= 0) & off):
            raise ProfileError("non-positive bandwidth at (%d,%d)" % _first_bad((bw <= 0) & off))
        if np.any(~np.isfinite(bw) & off):
            raise ProfileError("non-finite bandwidth at (%d,%d)" % _first_bad(~np.isfinite(bw) & off))
        np.fill_diagonal(bw, np.inf)
        if self.names is not None:
            names = tuple(str(x) for x in self.names)
            if len(names) != delay.shape[0]:
                raise ProfileError(
                    f"got {len(names)} names for {delay.shape[0]} devices"
                )
            object.__setattr__(self, "names", names)
        object.__setattr__(self, "delay", _frozen(delay))
        object.__setattr__(self, "bandwidth", _frozen(bw))

    @property
    def n(self) -> int:
        return self.delay.shape[0]


@dataclass(frozen=True)
class CommGraph:
    """Symmetrized network: lat in seconds, bw in bits/s, both symmetric."""

    lat: np.ndarray
    bw: np.ndarray

    def __post_init__(self) -> None:
        lat = np.array(self.lat, dtype=float)
        bw = np.array(self.bw, dtype=float)
        if lat.ndim != 2 or lat.shape[0] != lat.shape[1] or bw.shape != lat.shape:
            raise ProfileError("lat and bw must be square matrices of equal shape")
        if not np.array_equal(lat, lat.T) or not np.array_equal(bw, bw.T):
            raise ProfileError("lat and bw must be symmetric")
        if np.any(lat < 0) or np.any(np.diagonal(lat) != 0):
            raise ProfileError("lat must be nonnegative with a zero diagonal")
        off = ~np.eye(lat.shape[0], dtype=bool)
        if np.any((bw <= 0) & off) or np.any(~np.isfinite(bw) & off):
            raise ProfileError("bw must be positive and finite off the diagonal")
        bw = bw.copy()
        np.fill_diagonal(bw, np.inf)
        object.__setattr__(self, "lat", _frozen(lat))
        object.__setattr__(self, "bw", _frozen(bw))

    @property
    def n(self) -> int:
        return self.lat.shape[0]


def symmetrize(profile: NetworkProfile) -> CommGraph:
    """Average each direction: lat = (d + d.T)/2, bw = (b + b.T)/2.

    Already-symmetric profiles come through unchanged (a == (a+a)/2 exactly).
    """
    lat = (profile.delay + profile.delay.T) / 2.0
    bw = (profile.bandwidth + profile.bandwidth.T) / 2.0
    return CommGraph(lat, bw)


def edge_cost(g: CommGraph, d: int, d2: int, payload_bytes: float) -> float:
    """Seconds to move payload_bytes across one edge: lat + 8*payload/bw."""
    if d == d2:
        raise ValueError(f"edge cost requires two distinct devices, got {d} twice")
    if not (0 <= d < g.n and 0 <= d2 < g.n):
        raise ValueError(f"device index out of range: ({d},{d2}) for n={g.n}")
    if payload_bytes < 0:
        raise ValueError(f"negative payload: {payload_bytes}")
    return float(g.lat[d, d2] + (8.0 * payload_bytes) / g.bw[d, d2])


# ---------------------------------------------------------------------------
# scenario generation


@dataclass(frozen=True)
class GroupSpec:
    """One region: size devices, intra-region delay (s) and bandwidth (bit/s)."""

    size: int
    delay_s: float
    bw_bps: float
    label: str | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ScenarioError(f"group size must be >= 1, got {self.size}")
        if self.delay_s < 0:
            raise ScenarioError(f"negative intra delay: {self.delay_s}")
        if self.bw_bps <= 0:
            raise ScenarioError(f"non-positive intra bandwidth: {self.bw_bps}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Block-structured scenario: groups plus cross-group delay/bw ranges.

    A range with min == max is a fixed value and is written into the profile
    exactly, bypassing the sampler.
    """

    case: str
    groups: tuple[GroupSpec, ...]
    cross_delay_s: tuple[float, float]
    cross_bw_bps: tuple[float, float]
    seed: int = 0

    def __post_init__(self) -> None:
        groups = tuple(self.groups)
        if not groups:
            raise ScenarioError("scenario needs at least one group")
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "cross_delay_s", _as_range(self.cross_delay_s, "cross delay"))
        object.__setattr__(self, "cross_bw_bps", _as_range(self.cross_bw_bps, "cross bandwidth"))
        dlo, dhi = self.cross_delay_s
        blo, bhi = self.cross_bw_bps
        if dlo < 0:
            raise ScenarioError(f"negative cross delay: {dlo}")
        if blo <= 0:
            raise ScenarioError(f"non-positive cross bandwidth: {blo}")
        if dlo > dhi or blo > bhi:
            raise ScenarioError("range minimum exceeds maximum")

    @property
    def n(self) -> int:
        return sum(g.size for g in self.groups)


def _as_range(value: Any, what: str) -> tuple[float, float]:
    if isinstance(value, (int, float)):
        return (float(value), float(value))
    lo, hi = value
    return (float(lo), float(hi))


_REGIONS_4 = ("california", "ohio", "oregon", "virginia")
_REGIONS_8 = ("oregon", "virginia", "ohio", "tokyo", "seoul", "london", "frankfurt", "ireland")

CASE_NAMES = (
    "data_center_on_demand",
    "data_center_spot",
    "multi_data_center",
    "regional_geo",
    "world_geo",
)


def scenario_case(case: int | str, seed: int = 0) -> ScenarioSpec:
    """Preset scenario for one of the five built-in 64-device cases.

    1. on-demand data center: 8 nodes x 8 devices, 100 Gbps intra-node,
       25 Gbps between nodes.
    2. spot-style data center: 8 nodes x 4 devices plus 32 single-device
       nodes, 100 Gbps intra-node, 10 Gbps between nodes.
    3. two organizations of 32, 10 Gbps inside each, a 10 ms / 1.12 Gbps
       link between them.
    4. four regions of 16 in one country, 5 ms / 2 Gbps inside a region,
       10-70 ms / 1.0-1.3 Gbps across.
    5. eight regions of 8 worldwide, 5 ms / 2 Gbps inside a region,
       10-250 ms / 0.3-1.3 Gbps across.
    """
    key = str(case)
    for idx, name in enumerate(CASE_NAMES, start=1):
        if key == str(idx) or key == name:
            key = str(idx)
            break
    if key == "1":
        groups = tuple(GroupSpec(8, 1e-4, 100e9, f"node{k}") for k in range(8))
        return ScenarioSpec(CASE_NAMES[0], groups, (2.5e-4, 2.5e-4), (25e9, 25e9), seed)
    if key == "2":
        groups = tuple(GroupSpec(4, 1e-4, 100e9, f"quad{k}") for k in range(8))
        groups += tuple(GroupSpec(1, 1e-4, 100e9, f"solo{k}") for k in range(32))
        return ScenarioSpec(CASE_NAMES[1], groups, (2.5e-4, 2.5e-4), (10e9, 10e9), seed)
    if key == "3":
        groups = (GroupSpec(32, 2.5e-4, 10e9, "org0"), GroupSpec(32, 2.5e-4, 10e9, "org1"))
        return ScenarioSpec(CASE_NAMES[2], groups, (0.010, 0.010), (1.12e9, 1.12e9), seed)
    if key == "4":
        groups = tuple(GroupSpec(16, 0.005, 2e9, r) for r in _REGIONS_4)
        return ScenarioSpec(CASE_NAMES[3], groups, (0.010, 0.070), (1.0e9, 1.3e9), seed)
    if key == "5":
        groups = tuple(GroupSpec(8, 0.005, 2e9, r) for r in _REGIONS_8)
        return ScenarioSpec(CASE_NAMES[4], groups, (0.010, 0.250), (0.3e9, 1.3e9), seed)
    raise ScenarioError(f"unknown case {case!r}; expected 1..5 or one of {CASE_NAMES}")


def generate_scenario(spec: ScenarioSpec) -> NetworkProfile:
    """Instantiate a profile from a block-structured spec.

    Cross values are drawn once per unordered group pair (delay first, then
    bandwidth, pairs in row-major order) from a PCG64 generator seeded with
    spec.seed, so the output is a pure function of the spec.  The result is
    symmetric by construction.
    """
    n = spec.n
    delay = np.zeros((n, n))
    bw = np.ones((n, n))
    starts = np.cumsum([0] + [g.size for g in spec.groups])
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    for gi, grp in enumerate(spec.groups):
        s, e = starts[gi], starts[gi + 1]
        delay[s:e, s:e] = grp.delay_s
        bw[s:e, s:e] = grp.bw_bps
    (dlo, dhi), (blo, bhi) = spec.cross_delay_s, spec.cross_bw_bps
    for gi in range(len(spec.groups)):
        for gj in range(gi + 1, len(spec.groups)):
            dv = dlo if dlo == dhi else float(rng.uniform(dlo, dhi))
            bv = blo if blo == bhi else float(rng.uniform(blo, bhi))
            si, ei = starts[gi], starts[gi + 1]
            sj, ej = starts[gj], starts[gj + 1]
            delay[si:ei, sj:ej] = dv
            delay[sj:ej, si:ei] = dv
            bw[si:ei, sj:ej] = bv
            bw[sj:ej, si:ei] = bv
    np.fill_diagonal(delay, 0.0)
    names = []
    for gi, grp in enumerate(spec.groups):
        label = grp.label if grp.label is not None else f"g{gi}"
        names.extend(f"{label}-{k}" for k in range(grp.size))
    return NetworkProfile(delay, bw, tuple(names))


# ---------------------------------------------------------------------------
# serialization (files carry delay_ms / bandwidth_gbps)


def profile_to_dict(profile: NetworkProfile) -> dict[str, Any]:
    delay_ms = profile.delay * 1000.0
    gbps = profile.bandwidth / 1e9
    gbps = gbps.copy()
    np.fill_diagonal(gbps, 0.0)
    out: dict[str, Any] = {"devices": profile.n}
    if profile.names is not None:
        out["names"] = list(profile.names)
    out["delay_ms"] = [[float(x) for x in row] for row in delay_ms]
    out["bandwidth_gbps"] = [[float(x) for x in row] for row in gbps]
    return out


def profile_from_dict(data: Any) -> NetworkProfile:
    if not isinstance(data, dict):
        raise ProfileError(f"profile JSON must be an object, got {type(data).__name__}")
    for key in ("devices", "delay_ms", "bandwidth_gbps"):
        if key not in data:
            raise ProfileError(f"profile JSON missing key {key!r}")
    try:
        delay_ms = np.array(data["delay_ms"], dtype=float)
        gbps = np.array(data["bandwidth_gbps"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProfileError(f"matrix entries must be numbers: {exc}") from None
    if delay_ms.ndim != 2 or delay_ms.shape[0] != delay_ms.shape[1]:
        raise ProfileError(f"delay matrix must be square, got shape {delay_ms.shape}")
    n = int(data["devices"])
    if delay_ms.shape[0] != n:
        raise ProfileError(f"devices={n} but delay matrix is {delay_ms.shape[0]}x{delay_ms.shape[1]}")
    if gbps.shape != delay_ms.shape:
        raise ProfileError(
            f"bandwidth shape {gbps.shape} does not match delay shape {delay_ms.shape}"
        )
    bw = gbps * 1e9
    np.fill_diagonal(bw, np.inf)
    names = data.get("names")
    return NetworkProfile(delay_ms / 1000.0, bw, tuple(names) if names is not None else None)


def load_profile(source: Any) -> NetworkProfile:
    """Read a profile from a path or an open file of JSON."""
    return profile_from_dict(_read_json(source, ProfileError))


def save_profile(profile: NetworkProfile, dest: Any, extra: dict[str, Any] | None = None) -> None:
    """Write a profile as JSON; extra top-level keys (e.g. a manifest) are merged in."""
    payload = profile_to_dict(profile)
    if extra:
        payload.update(extra)
    _write_json(payload, dest)


def spec_to_dict(spec: ScenarioSpec) -> dict[str, Any]:
    groups = []
    for g in spec.groups:
        item: dict[str, Any] = {"size": g.size, "delay_ms": g.delay_s * 1000.0, "bw_gbps": g.bw_bps / 1e9}
        if g.label is not None:
            item["label"] = g.label
        groups.append(item)
    return {
        "case": spec.case,
        "groups": groups,
        "cross": {
            "delay_ms": [spec.cross_delay_s[0] * 1000.0, spec.cross_delay_s[1] * 1000.0],
            "bw_gbps": [spec.cross_bw_bps[0] / 1e9, spec.cross_bw_bps[1] / 1e9],
        },
        "seed": spec.seed,
    }


def spec_from_dict(data: Any) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario spec must be a JSON object, got {type(data).__name__}")
    if "groups" not in data or not data["groups"]:
        raise ScenarioError("scenario spec needs a non-empty 'groups' list")
    groups = []
    for item in data["groups"]:
        try:
            groups.append(
                GroupSpec(
                    int(item["size"]),
                    float(item["delay_ms"]) / 1000.0,
                    float(item["bw_gbps"]) * 1e9,
                    item.get("label"),
                )
            )
        except KeyError as exc:
            raise ScenarioError(f"group entry missing key {exc}") from None
    cross = data.get("cross")
    if cross is None:
        if len(groups) > 1:
            raise ScenarioError("multi-group spec needs a 'cross' entry")
        cross_delay, cross_bw = (0.0, 0.0), (1.0, 1.0)
    else:
        dlo, dhi = _as_range(cross["delay_ms"], "cross delay")
        blo, bhi = _as_range(cross["bw_gbps"], "cross bandwidth")
        cross_delay = (dlo / 1000.0, dhi / 1000.0)
        cross_bw = (blo * 1e9, bhi * 1e9)
    return ScenarioSpec(
        str(data.get("case", "custom")),
        tuple(groups),
        cross_delay,
        cross_bw,
        int(data.get("seed", 0)),
    )


def load_scenario_spec(source: Any) -> ScenarioSpec:
    return spec_from_dict(_read_json(source, ScenarioError))


def _read_json(source: Any, err: type[ValueError]) -> Any:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise err(f"malformed JSON: {exc}") from None


def _write_json(payload: Any, dest: Any) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
