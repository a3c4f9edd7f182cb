"""Compute tiers and role-based integer scaling of detector configs.

A tier pairs a thread cap with a scale factor s in (0, 1]. Every
scalable hyperparameter carries a role that fixes how it shrinks with
s; results are always positive integers, so a scaled config is a valid
config. Divisibility constraints broken by rounding are repaired by
lowering the divisor parameter, never the dimension it divides.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import PlanError, RepairFailureError, StructuralError


class ScalingRole(Enum):
    """How a parameter responds to the tier scale factor s."""

    WORK = "work"          # ensembles, bins, neighbours: linear in s
    WIDTH = "width"        # layer widths, components: sqrt(s)
    HEADS = "heads"        # attention heads: sqrt(s)
    DEPTH = "depth"        # layer counts: s ** (1/4)
    WINDOW = "window"      # window lengths: sqrt(s), floor 8
    UNSCALED = "unscaled"  # rates, flags encoded as ints: untouched


_RULE_TEXT = {
    ScalingRole.WORK: "max(1, round(s*v))",
    ScalingRole.WIDTH: "max(1, round(sqrt(s)*v))",
    ScalingRole.HEADS: "max(1, round(sqrt(s)*v))",
    ScalingRole.DEPTH: "max(1, round(s^(1/4)*v))",
    ScalingRole.WINDOW: "max(8, round(sqrt(s)*v))",
    ScalingRole.UNSCALED: "v",
}


@dataclass(frozen=True)
class TierSpec:
    """One rung of the ladder: an id, a thread cap, and a scale factor.

    thread_cap is None for the uncapped reference tier.
    """

    tier_id: str
    thread_cap: int | None
    scale: float

    def __post_init__(self) -> None:
        if not self.tier_id:
            raise PlanError("tier id must be non-empty")
        if self.thread_cap is not None and self.thread_cap < 1:
            raise PlanError(f"tier {self.tier_id}: thread cap must be >= 1, got {self.thread_cap}")
        if not 0.0 < self.scale <= 1.0:
            raise PlanError(f"tier {self.tier_id}: scale must be in (0, 1], got {self.scale}")


CANONICAL_LADDER: tuple[TierSpec, ...] = (
    TierSpec("REF", None, 1.00),
    TierSpec("CPU-MT", 14, 0.75),
    TierSpec("CPU-LT", 7, 0.50),
    TierSpec("CPU-1T", 1, 0.25),
)


def tier_by_id(tier_id: str, ladder: tuple[TierSpec, ...] = CANONICAL_LADDER) -> TierSpec:
    for tier in ladder:
        if tier.tier_id == tier_id:
            return tier
    known = ", ".join(t.tier_id for t in ladder)
    raise PlanError(f"unknown tier {tier_id!r} (known: {known})")


def load_ladder(path: str | Path) -> tuple[TierSpec, ...]:
    """Load a ladder from a JSON list of {id, thread_cap, scale} objects.

    thread_cap may be the string "uncapped" or null for the reference
    tier. Order in the file is the ladder order.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PlanError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(raw, list) or not raw:
        raise PlanError(f"{path}: ladder file must be a non-empty JSON list")
    tiers = []
    for entry in raw:
        if not isinstance(entry, dict) or "id" not in entry or "scale" not in entry:
            raise PlanError(f"{path}: each tier needs at least 'id' and 'scale', got {entry!r}")
        cap = entry.get("thread_cap")
        if cap in (None, "uncapped"):
            cap = None
        elif not isinstance(cap, int):
            raise PlanError(f"{path}: thread_cap must be an integer, null, or 'uncapped', got {cap!r}")
        tiers.append(TierSpec(str(entry["id"]), cap, float(entry["scale"])))
    if len({t.tier_id for t in tiers}) != len(tiers):
        raise PlanError(f"{path}: duplicate tier ids")
    return tuple(tiers)


@dataclass(frozen=True)
class DivisibilityConstraint:
    """Requires the value of dim_param to be divisible by divisor_param."""

    dim_param: str
    divisor_param: str


@dataclass(frozen=True)
class DetectorConfig:
    """A method id plus an ordered map of integer parameters with roles.

    params maps name -> (value, role). Insertion order is meaningful:
    diffs report parameters in this order.
    """

    method_id: str
    params: dict[str, tuple[int, ScalingRole]]
    constraints: tuple[DivisibilityConstraint, ...] = ()

    def __post_init__(self) -> None:
        for name, (value, role) in self.params.items():
            if not isinstance(value, int) or isinstance(value, bool):
                raise StructuralError(f"{self.method_id}.{name}: parameter values must be int, got {value!r}")
            if value < 1:
                raise StructuralError(f"{self.method_id}.{name}: parameter values must be >= 1, got {value}")
            if not isinstance(role, ScalingRole):
                raise StructuralError(f"{self.method_id}.{name}: role must be a ScalingRole, got {role!r}")

    def value(self, name: str) -> int:
        return self.params[name][0]

    def values(self) -> dict[str, int]:
        return {name: value for name, (value, _) in self.params.items()}


@dataclass(frozen=True)
class DiffEntry:
    param: str
    old: int
    new: int
    role: ScalingRole
    rule: str


@dataclass(frozen=True)
class RepairEvent:
    param: str
    before: int
    after: int
    constraint: str


@dataclass(frozen=True)
class ConfigDiff:
    """Exactly the parameters whose value changed, plus any repairs."""

    entries: tuple[DiffEntry, ...] = ()
    repairs: tuple[RepairEvent, ...] = ()

    @property
    def empty(self) -> bool:
        return not self.entries and not self.repairs


def _round_half_away(x: float) -> int:
    # Ties round away from zero; inputs here are always positive.
    return int(math.floor(x + 0.5))


def scale_param(value: int, role: ScalingRole, s: float) -> int:
    """Scale one integer parameter by tier factor s according to its role.

    The result is a positive integer, monotone non-decreasing in s for a
    fixed (value, role). Window lengths never drop below 8, even when
    that overrides the nominal value.
    """
    if value < 1:
        raise StructuralError(f"parameter value must be >= 1, got {value}")
    if not 0.0 < s <= 1.0:
        raise PlanError(f"scale factor must be in (0, 1], got {s}")
    if role is ScalingRole.UNSCALED:
        return value
    if role is ScalingRole.WORK:
        return max(1, _round_half_away(s * value))
    if role in (ScalingRole.WIDTH, ScalingRole.HEADS):
        return max(1, _round_half_away(math.sqrt(s) * value))
    if role is ScalingRole.DEPTH:
        return max(1, _round_half_away(s ** 0.25 * value))
    if role is ScalingRole.WINDOW:
        return max(8, _round_half_away(math.sqrt(s) * value))
    raise StructuralError(f"unhandled scaling role {role!r}")


def repair_constraints(config: DetectorConfig) -> tuple[DetectorConfig, tuple[RepairEvent, ...]]:
    """Repair violated divisibility constraints by lowering the divisor.

    The divisor parameter is replaced by the largest divisor of the
    dimension value that does not exceed the current divisor value; the
    dimension parameter is never changed. Idempotent: repairing a
    repaired config is a no-op.
    """
    params = dict(config.params)
    events: list[RepairEvent] = []
    for constraint in config.constraints:
        for name in (constraint.dim_param, constraint.divisor_param):
            if name not in params:
                raise RepairFailureError(
                    f"{config.method_id}: constraint references unknown parameter {name!r}",
                    constraint=f"{constraint.dim_param} % {constraint.divisor_param} == 0",
                )
        dim_value = params[constraint.dim_param][0]
        divisor_value, divisor_role = params[constraint.divisor_param]
        if dim_value % divisor_value == 0:
            continue
        repaired = max(k for k in range(1, divisor_value + 1) if dim_value % k == 0)
        params[constraint.divisor_param] = (repaired, divisor_role)
        events.append(
            RepairEvent(
                param=constraint.divisor_param,
                before=divisor_value,
                after=repaired,
                constraint=f"{constraint.dim_param} % {constraint.divisor_param} == 0",
            )
        )
    if not events:
        return config, ()
    repaired_config = DetectorConfig(
        method_id=config.method_id, params=params, constraints=config.constraints
    )
    return repaired_config, tuple(events)


def config_diff(base: DetectorConfig, scaled: DetectorConfig,
                repairs: tuple[RepairEvent, ...] = ()) -> ConfigDiff:
    """Diff two configs of the same method over the same parameter names."""
    if base.method_id != scaled.method_id:
        raise StructuralError(
            f"cannot diff configs of different methods: {base.method_id!r} vs {scaled.method_id!r}"
        )
    if base.params.keys() != scaled.params.keys():
        raise StructuralError(
            f"{base.method_id}: configs disagree on parameter names: "
            f"{sorted(base.params)} vs {sorted(scaled.params)}"
        )
    entries = []
    for name, (old, role) in base.params.items():
        new = scaled.params[name][0]
        if new != old:
            entries.append(DiffEntry(param=name, old=old, new=new, role=role, rule=_RULE_TEXT[role]))
    return ConfigDiff(entries=tuple(entries), repairs=repairs)


def scale_config(base: DetectorConfig, tier: TierSpec) -> tuple[DetectorConfig, ConfigDiff]:
    """Scale every parameter of a config for a tier, then repair constraints.

    Returns the scaled config and a diff against the base. Diff entries
    reflect the final values (post-repair); repair events carry the
    intermediate value each repair replaced.
    """
    scaled_params = {
        name: (scale_param(value, role, tier.scale), role)
        for name, (value, role) in base.params.items()
    }
    scaled = DetectorConfig(method_id=base.method_id, params=scaled_params, constraints=base.constraints)
    scaled, repairs = repair_constraints(scaled)
    return scaled, config_diff(base, scaled, repairs)
