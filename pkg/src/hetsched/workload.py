"""Per-boundary communication volumes for a pipeline x data parallel grid.

Two byte counts drive the cost model:

* c_pp: activations one pipeline stage sends to the next for one
  macro-batch, (global_batch / d_dp) * seq_len * hidden * dtype_bytes.
* c_dp: gradients one replica exchanges per step, the parameter bytes of
  the layers held by one stage.  A transformer layer carries 12 * hidden^2
  weight parameters (4 h^2 attention, 8 h^2 MLP), so
  c_dp = 12 * hidden^2 * (num_layers / d_pp) * dtype_bytes.

Volumes can also be given explicitly, bypassing the model arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

PARAMS_PER_LAYER_FACTOR = 12


class WorkloadError(ValueError):
    """Inconsistent workload or model configuration."""


@dataclass(frozen=True)
class ModelSpec:
    num_layers: int
    hidden: int
    seq_len: int
    dtype_bytes: int = 2

    def __post_init__(self) -> None:
        for field in ("num_layers", "hidden", "seq_len", "dtype_bytes"):
            if getattr(self, field) < 1:
                raise WorkloadError(f"{field} must be >= 1, got {getattr(self, field)}")


@dataclass(frozen=True)
class ParallelSpec:
    d_pp: int
    d_dp: int
    global_batch: int

    def __post_init__(self) -> None:
        for field in ("d_pp", "d_dp", "global_batch"):
            if getattr(self, field) < 1:
                raise WorkloadError(f"{field} must be >= 1, got {getattr(self, field)}")


@dataclass(frozen=True)
class WorkloadSpec:
    """Parallel degrees plus the two payload sizes in bytes."""

    d_pp: int
    d_dp: int
    c_pp: float
    c_dp: float

    def __post_init__(self) -> None:
        if self.d_pp < 1 or self.d_dp < 1:
            raise WorkloadError(f"degrees must be >= 1, got d_pp={self.d_pp} d_dp={self.d_dp}")
        if self.c_pp < 0 or self.c_dp < 0:
            raise WorkloadError(f"negative payload: c_pp={self.c_pp} c_dp={self.c_dp}")


def derive_workload(
    model: ModelSpec,
    parallel: ParallelSpec,
    layer_param_factor: int = PARAMS_PER_LAYER_FACTOR,
) -> WorkloadSpec:
    """Compute c_pp and c_dp from a model and a parallelization plan.

    layer_param_factor is the weight-parameter count of one layer divided by
    hidden^2; override it for architectures that deviate from the standard
    attention + 4x MLP block.
    """
    if model.num_layers % parallel.d_pp != 0:
        raise WorkloadError(
            f"num_layers {model.num_layers} not divisible by d_pp {parallel.d_pp}"
        )
    if parallel.global_batch % parallel.d_dp != 0:
        raise WorkloadError(
            f"global_batch {parallel.global_batch} not divisible by d_dp {parallel.d_dp}"
        )
    macro_batch = parallel.global_batch // parallel.d_dp
    c_pp = macro_batch * model.seq_len * model.hidden * model.dtype_bytes
    layers_per_stage = model.num_layers // parallel.d_pp
    c_dp = layer_param_factor * model.hidden * model.hidden * layers_per_stage * model.dtype_bytes
    return WorkloadSpec(parallel.d_pp, parallel.d_dp, float(c_pp), float(c_dp))


def validate_workload(workload: WorkloadSpec, n: int) -> None:
    """Require the tasklet grid to cover the device set exactly."""
    if workload.d_pp * workload.d_dp != n:
        raise WorkloadError(
            f"d_pp*d_dp = {workload.d_pp}*{workload.d_dp} = "
            f"{workload.d_pp * workload.d_dp} but the network has {n} devices"
        )


def workload_from_dict(data: Any) -> WorkloadSpec:
    """Parse either explicit volumes or a model+parallel pair.

    Explicit form: {"d_pp": 8, "d_dp": 8, "c_pp_bytes": ..., "c_dp_bytes": ...}.
    Derived form: {"model": {"layers": ..., "hidden": ..., "seq_len": ...,
    "dtype_bytes": ...}, "parallel": {"d_pp": ..., "d_dp": ...,
    "global_batch": ...}}; "num_layers" is accepted as an alias for "layers".
    """
    if not isinstance(data, dict):
        raise WorkloadError(f"workload JSON must be an object, got {type(data).__name__}")
    if "model" in data or "parallel" in data:
        if "model" not in data or "parallel" not in data:
            raise WorkloadError("derived workload needs both 'model' and 'parallel'")
        m, p = data["model"], data["parallel"]
        try:
            layers = m["num_layers"] if "num_layers" in m else m["layers"]
            model = ModelSpec(
                int(layers), int(m["hidden"]), int(m["seq_len"]),
                int(m.get("dtype_bytes", 2)),
            )
            parallel = ParallelSpec(int(p["d_pp"]), int(p["d_dp"]), int(p["global_batch"]))
        except KeyError as exc:
            raise WorkloadError(f"workload JSON missing key {exc}") from None
        return derive_workload(model, parallel)
    try:
        return WorkloadSpec(
            int(data["d_pp"]), int(data["d_dp"]),
            float(data["c_pp_bytes"]), float(data["c_dp_bytes"]),
        )
    except KeyError as exc:
        raise WorkloadError(f"workload JSON missing key {exc}") from None


def workload_to_dict(workload: WorkloadSpec) -> dict[str, Any]:
    return {
        "d_pp": workload.d_pp,
        "d_dp": workload.d_dp,
        "c_pp_bytes": workload.c_pp,
        "c_dp_bytes": workload.c_dp,
    }


def load_workload(source: Any) -> WorkloadSpec:
    """Read a workload from a path or an open file of JSON."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkloadError(f"malformed JSON: {exc}") from None
    return workload_from_dict(data)
