"""Problem data for the truck charging-and-rest planning problem.

Internal units are minutes, kWh and euros.  Charging powers are kept in kW
as given and converted to kWh/minute only through :meth:`RouteInstance.charge_rate`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable, Optional, Sequence

# Table values used when a field is omitted from an instance document.
DEFAULT_CHARGE_KW = 300.0
DEFAULT_MAX_ACCEPT_KW = 375.0
DEFAULT_FULL_KWH = 624.0
DEFAULT_SAFETY_KWH = 156.0
DEFAULT_CONSUMPTION = 1.83
DEFAULT_PREP_MIN = 6.0
DEFAULT_PRICE = 0.36
DEFAULT_TIME_LOSS = 0.4
DEFAULT_MAX_CONSEC = 270.0
DEFAULT_MIN_REST = 45.0
DEFAULT_MAX_DAILY = 540.0
DEFAULT_EXTRA_BUDGET = 150.0
DEFAULT_DELTA_SMALL = 0.1
DEFAULT_DELTA_BIG = 10_000.0

CANDIDATES = ((0, 0), (0, 1), (1, 0), (1, 1))
"""Per-station (charge, rest) choices in tie-break order."""


class InstanceError(ValueError):
    """Raised for a malformed or invalid instance document."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


@dataclass(frozen=True)
class HosParams:
    max_consecutive: float = DEFAULT_MAX_CONSEC
    min_rest: float = DEFAULT_MIN_REST
    max_daily: float = DEFAULT_MAX_DAILY
    extra_budget: float = DEFAULT_EXTRA_BUDGET


@dataclass(frozen=True)
class BatteryParams:
    full_energy: float = DEFAULT_FULL_KWH
    safety_margin: float = DEFAULT_SAFETY_KWH
    consumption: float = DEFAULT_CONSUMPTION  # kWh per minute on the road
    max_accept_kw: float = DEFAULT_MAX_ACCEPT_KW
    initial_energy: float = DEFAULT_FULL_KWH


@dataclass(frozen=True)
class CostParams:
    energy_price: float = DEFAULT_PRICE  # euro / kWh
    time_loss: float = DEFAULT_TIME_LOSS  # euro / minute
    delta_small: float = DEFAULT_DELTA_SMALL
    delta_big: float = DEFAULT_DELTA_BIG


@dataclass(frozen=True)
class Station:
    detour: float  # one-way, minutes
    charge_kw: float = DEFAULT_CHARGE_KW
    prep: float = DEFAULT_PREP_MIN


@dataclass(frozen=True)
class RouteInstance:
    segment_times: tuple[float, ...]
    stations: tuple[Station, ...]
    battery: BatteryParams = field(default_factory=BatteryParams)
    hos: HosParams = field(default_factory=HosParams)
    cost: CostParams = field(default_factory=CostParams)

    def __post_init__(self):
        object.__setattr__(self, "segment_times", tuple(float(x) for x in self.segment_times))
        object.__setattr__(self, "stations", tuple(self.stations))

    @property
    def n(self) -> int:
        return len(self.stations)

    @cached_property
    def rates(self) -> tuple[float, ...]:
        """Effective charging rate at each station in kWh/minute."""
        cap = self.battery.max_accept_kw
        return tuple(min(s.charge_kw, cap) / 60.0 for s in self.stations)

    def charge_rate(self, k: int) -> float:
        return self.rates[k]

    @cached_property
    def prices(self) -> tuple[float, ...]:
        """Charging cost per minute at each station (euro/minute)."""
        return tuple(self.cost.energy_price * r for r in self.rates)

    @property
    def detours(self) -> tuple[float, ...]:
        return tuple(s.detour for s in self.stations)

    def with_params(self, **changes: Any) -> "RouteInstance":
        """Copy with flat schema-level overrides, e.g. ``extra_budget_min=220``."""
        return apply_overrides(self, changes)


@dataclass(frozen=True)
class BinaryPlan:
    """Per-station (charge, rest) bits."""

    choices: tuple[tuple[int, int], ...]

    def __post_init__(self):
        choices = tuple((int(b), int(r)) for b, r in self.choices)
        for pair in choices:
            if pair not in CANDIDATES:
                raise ValueError(f"invalid station choice {pair}")
        object.__setattr__(self, "choices", choices)

    def __len__(self) -> int:
        return len(self.choices)

    def __iter__(self):
        return iter(self.choices)

    def __getitem__(self, k):
        return self.choices[k]

    @classmethod
    def empty(cls, n: int) -> "BinaryPlan":
        return cls(((0, 0),) * n)

    @classmethod
    def full(cls, n: int) -> "BinaryPlan":
        return cls(((1, 1),) * n)

    @property
    def charge(self) -> tuple[int, ...]:
        return tuple(b for b, _ in self.choices)

    @property
    def rest(self) -> tuple[int, ...]:
        return tuple(r for _, r in self.choices)

    @property
    def visit(self) -> tuple[int, ...]:
        return tuple(b | r for b, r in self.choices)

    @property
    def charge_and_rest(self) -> tuple[int, ...]:
        return tuple(b & r for b, r in self.choices)

    def replace(self, k: int, choice: tuple[int, int]) -> "BinaryPlan":
        choices = list(self.choices)
        choices[k] = choice
        return BinaryPlan(tuple(choices))

    def to_list(self) -> list[list[int]]:
        return [list(c) for c in self.choices]


@dataclass(frozen=True)
class ContinuousPlan:
    charge_times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.charge_times)
        if any(not t >= 0 for t in times):
            raise ValueError("charge times must be >= 0")
        object.__setattr__(self, "charge_times", times)

    def __len__(self) -> int:
        return len(self.charge_times)

    def __getitem__(self, k):
        return self.charge_times[k]

    @classmethod
    def zeros(cls, n: int) -> "ContinuousPlan":
        return cls((0.0,) * n)


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: Optional[int]
    residual: float

    @property
    def key(self) -> str:
        return self.constraint if self.index is None else f"{self.constraint}[{self.index}]"


@dataclass(frozen=True)
class Trajectory:
    energies: tuple[float, ...]
    consecutive: tuple[float, ...]
    charged: tuple[float, ...]
    overheads: tuple[float, ...]
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations


@dataclass
class SolveReport:
    binary_plan: Optional[BinaryPlan]
    continuous_plan: Optional[ContinuousPlan]
    cost: float
    feasible: bool
    method: str
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    lp_calls: int = 0
    wall_time: float = 0.0
    pruned: int = 0
    trace: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            return x if math.isfinite(x) else str(x)

        return {
            "method": self.method,
            "feasible": self.feasible,
            "cost": num(self.cost),
            "lower_bound": num(self.lower_bound),
            "upper_bound": num(self.upper_bound),
            "binary_plan": self.binary_plan.to_list() if self.binary_plan else None,
            "continuous_plan": list(self.continuous_plan.charge_times) if self.continuous_plan else None,
            "lp_calls": self.lp_calls,
            "pruned": self.pruned,
            "wall_time": self.wall_time,
            "trace": [num(c) for c in self.trace],
            "meta": self.meta,
        }


# --- schema ---------------------------------------------------------------

_STATION_FIELDS = {"detour_min": "detour", "charge_kw": "charge_kw", "prep_min": "prep"}
_SECTIONS = {
    "battery": (
        BatteryParams,
        {
            "full_kwh": "full_energy",
            "safety_kwh": "safety_margin",
            "consumption_kwh_per_min": "consumption",
            "max_accept_kw": "max_accept_kw",
            "initial_kwh": "initial_energy",
        },
    ),
    "hos": (
        HosParams,
        {
            "max_consec_min": "max_consecutive",
            "min_rest_min": "min_rest",
            "max_daily_min": "max_daily",
            "extra_budget_min": "extra_budget",
        },
    ),
    "cost": (
        CostParams,
        {
            "energy_price_eur_per_kwh": "energy_price",
            "time_loss_eur_per_min": "time_loss",
            "delta_small_min": "delta_small",
            "delta_big_min": "delta_big",
        },
    ),
}
_TOP_FIELDS = {"segment_times_min", "stations", *_SECTIONS}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceError(where, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise InstanceError(where, "must be finite")
    return value


def _section(doc: dict, name: str):
    cls, names = _SECTIONS[name]
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise InstanceError(name, "expected an object")
    extra = set(raw) - set(names)
    if extra:
        raise InstanceError(f"{name}.{sorted(extra)[0]}", "unknown field")
    kwargs = {attr: _number(raw[key], f"{name}.{key}") for key, attr in names.items() if key in raw}
    return cls(**kwargs)


def instance_from_dict(doc: dict) -> RouteInstance:
    """Build and validate an instance from a decoded JSON document."""
    if not isinstance(doc, dict):
        raise InstanceError("<root>", "expected an object")
    extra = set(doc) - _TOP_FIELDS
    if extra:
        raise InstanceError(sorted(extra)[0], "unknown field")
    for key in ("segment_times_min", "stations"):
        if key not in doc:
            raise InstanceError(key, "missing field")
    if not isinstance(doc["segment_times_min"], list):
        raise InstanceError("segment_times_min", "expected a list")
    if not isinstance(doc["stations"], list):
        raise InstanceError("stations", "expected a list")

    taus = [_number(x, f"segment_times_min[{i}]") for i, x in enumerate(doc["segment_times_min"])]
    stations = []
    for i, raw in enumerate(doc["stations"]):
        if not isinstance(raw, dict):
            raise InstanceError(f"stations[{i}]", "expected an object")
        extra = set(raw) - set(_STATION_FIELDS)
        if extra:
            raise InstanceError(f"stations[{i}].{sorted(extra)[0]}", "unknown field")
        if "detour_min" not in raw:
            raise InstanceError(f"stations[{i}].detour_min", "missing field")
        kwargs = {
            attr: _number(raw[key], f"stations[{i}].{key}")
            for key, attr in _STATION_FIELDS.items()
            if key in raw
        }
        stations.append(Station(**kwargs))

    if len(taus) != len(stations) + 1:
        raise InstanceError("segment_times_min", "segment count must be N+1")

    battery = _section(doc, "battery")
    if "battery" not in doc or "initial_kwh" not in doc["battery"]:
        battery = replace(battery, initial_energy=battery.full_energy)
    inst = RouteInstance(
        segment_times=tuple(taus),
        stations=tuple(stations),
        battery=battery,
        hos=_section(doc, "hos"),
        cost=_section(doc, "cost"),
    )
    problems = validate_instance(inst)
    if problems:
        field_name, reason = problems[0]
        raise InstanceError(field_name, reason)
    return inst


def parse_instance(text: str) -> RouteInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError("<root>", f"invalid JSON ({exc.msg})") from exc
    return instance_from_dict(doc)


def load_instance(path) -> RouteInstance:
    with open(path) as fh:
        return parse_instance(fh.read())


def instance_to_dict(inst: RouteInstance) -> dict:
    doc: dict = {
        "segment_times_min": list(inst.segment_times),
        "stations": [
            {key: getattr(s, attr) for key, attr in _STATION_FIELDS.items()} for s in inst.stations
        ],
    }
    for name, (_, names) in _SECTIONS.items():
        section = getattr(inst, name)
        doc[name] = {key: getattr(section, attr) for key, attr in names.items()}
    return doc


def serialize_instance(inst: RouteInstance, indent: Optional[int] = 2) -> str:
    return json.dumps(instance_to_dict(inst), indent=indent)


def apply_overrides(inst: RouteInstance, overrides: dict) -> RouteInstance:
    """Apply flat schema-named overrides (``safety_kwh``, ``prep_min``, ...).

    Station-level keys (``detour_min``, ``charge_kw``, ``prep_min``) apply to
    every station.
    """
    sections = {name: {} for name in _SECTIONS}
    station_changes = {}
    for key, value in overrides.items():
        if key in _STATION_FIELDS:
            station_changes[_STATION_FIELDS[key]] = float(value)
            continue
        for name, (_, names) in _SECTIONS.items():
            if key in names:
                sections[name][names[key]] = float(value)
                break
        else:
            raise InstanceError(key, "unknown override")
    stations = inst.stations
    if station_changes:
        stations = tuple(replace(s, **station_changes) for s in stations)
    return RouteInstance(
        segment_times=inst.segment_times,
        stations=stations,
        battery=replace(inst.battery, **sections["battery"]),
        hos=replace(inst.hos, **sections["hos"]),
        cost=replace(inst.cost, **sections["cost"]),
    )


def validate_instance(inst: RouteInstance) -> list[tuple[str, str]]:
    """Return ``(field, reason)`` pairs for every violated invariant."""
    out: list[tuple[str, str]] = []

    def need(ok, name, reason):
        if not ok:
            out.append((name, reason))

    need(inst.n >= 1, "stations", "need at least one station")
    need(len(inst.segment_times) == inst.n + 1, "segment_times_min", "segment count must be N+1")
    for i, tau in enumerate(inst.segment_times):
        need(tau >= 0, f"segment_times_min[{i}]", "must be >= 0")
    for i, s in enumerate(inst.stations):
        need(s.detour >= 0, f"stations[{i}].detour_min", "detour must be >= 0")
        need(s.charge_kw > 0, f"stations[{i}].charge_kw", "charge power must be > 0")
        need(s.prep >= 0, f"stations[{i}].prep_min", "prep time must be >= 0")

    b = inst.battery
    need(b.full_energy > 0, "battery.full_kwh", "must be > 0")
    need(0 <= b.safety_margin < b.full_energy, "battery.safety_kwh", "safety margin must satisfy 0 <= safety < full")
    need(0 < b.initial_energy <= b.full_energy, "battery.initial_kwh", "initial energy must be in (0, full]")
    need(b.consumption > 0, "battery.consumption_kwh_per_min", "must be > 0")
    need(b.max_accept_kw > 0, "battery.max_accept_kw", "must be > 0")

    h = inst.hos
    for key, attr in _SECTIONS["hos"][1].items():
        need(getattr(h, attr) > 0, f"hos.{key}", "must be > 0")
    need(h.min_rest < h.max_consecutive, "hos.min_rest_min", "min rest must be < max consecutive drive")
    need(h.max_consecutive <= h.max_daily, "hos.max_consec_min", "max consecutive drive must be <= max daily drive")

    c = inst.cost
    for key, attr in _SECTIONS["cost"][1].items():
        need(getattr(c, attr) >= 0, f"cost.{key}", "must be >= 0")
    need(c.delta_small > 0, "cost.delta_small_min", "must be > 0")
    need(
        c.delta_big >= h.max_daily + h.extra_budget,
        "cost.delta_big_min",
        "must be >= max daily drive + extra budget",
    )
    return out


def make_instance(
    segment_times: Sequence[float],
    detours: Iterable[float],
    *,
    initial_energy: Optional[float] = None,
    **overrides: Any,
) -> RouteInstance:
    """Convenience constructor with table defaults and flat overrides."""
    stations = tuple(Station(detour=float(d)) for d in detours)
    battery = BatteryParams()
    if initial_energy is not None:
        battery = replace(battery, initial_energy=float(initial_energy))
    inst = RouteInstance(tuple(segment_times), stations, battery=battery)
    if overrides:
        inst = apply_overrides(inst, overrides)
    return inst


__all__ = [
    "CANDIDATES",
    "BatteryParams",
    "BinaryPlan",
    "ContinuousPlan",
    "CostParams",
    "HosParams",
    "InstanceError",
    "RouteInstance",
    "SolveReport",
    "Station",
    "Trajectory",
    "Violation",
    "apply_overrides",
    "instance_from_dict",
    "instance_to_dict",
    "load_instance",
    "make_instance",
    "parse_instance",
    "serialize_instance",
    "validate_instance",
]
