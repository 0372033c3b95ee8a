"""Datacenter fleet description and config file handling.

Everything the simulator knows about hardware and geography lives in one JSON
config: model specs, node types, per-datacenter node counts and environmental
time series, the inter-datacenter hop topology, and the knob sections for
trace generation, prediction and optimization. Units are explicit in the key
names (bytes, watts, seconds, kWh, L, kg, USD).
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .workload import LlmModelSpec, PredictorConfig, TraceGenConfig

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "PowerState",
    "PowerStateRatios",
    "NodeType",
    "Node",
    "Datacenter",
    "Topology",
    "Constants",
    "Infrastructure",
    "OptimizerParams",
    "SimConfig",
    "load_config",
    "parse_config",
    "config_to_dict",
    "save_config",
]


class ConfigError(ValueError):
    """Config validation failure; the message names the offending key."""


class PowerState(str, enum.Enum):
    ON = "on"
    IDLE = "idle"
    OFF = "off"


@dataclass(frozen=True)
class PowerStateRatios:
    """Fraction of TDP drawn in each power state."""

    on: float = 1.0
    idle: float = 0.3
    off: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.off <= self.idle <= self.on <= 1.0):
            raise ConfigError("power_ratios: need 0 <= off <= idle <= on <= 1")

    def ratio(self, state: PowerState) -> float:
        return {PowerState.ON: self.on, PowerState.IDLE: self.idle, PowerState.OFF: self.off}[state]


@dataclass(frozen=True)
class NodeType:
    type_id: str
    gpu_count: int
    gpu_mem_each_bytes: float
    tdp_w: float
    load_bandwidth_bytes_per_s: float
    throughput_tokens_per_s: Mapping[str, float]

    def __post_init__(self) -> None:
        if not 2 <= self.gpu_count <= 8:
            raise ConfigError(f"node_types[{self.type_id}].gpu_count: must be in [2, 8]")
        if self.gpu_mem_each_bytes <= 0:
            raise ConfigError(f"node_types[{self.type_id}].gpu_mem_each_bytes: must be positive")
        if self.tdp_w <= 0:
            raise ConfigError(f"node_types[{self.type_id}].tdp_w: must be positive")
        if self.load_bandwidth_bytes_per_s <= 0:
            raise ConfigError(f"node_types[{self.type_id}].load_bandwidth_bytes_per_s: must be positive")
        for m, t in self.throughput_tokens_per_s.items():
            if t <= 0:
                raise ConfigError(f"node_types[{self.type_id}].throughput_tokens_per_s[{m}]: must be positive")

    @property
    def mem_capacity_bytes(self) -> float:
        return self.gpu_count * self.gpu_mem_each_bytes


@dataclass
class Node:
    """Runtime state of one compute node. Nodes boot OFF and empty."""

    node_id: str
    type_id: str
    power_state: PowerState = PowerState.OFF
    loaded_model: str | None = None
    committed_memory: float = 0.0
    queue_depth: int = 0

    def check(self) -> None:
        if self.power_state is PowerState.OFF and (self.committed_memory != 0 or self.loaded_model is not None):
            raise ValueError(f"node {self.node_id}: OFF implies empty memory and no loaded model")
        if self.committed_memory < 0 or self.queue_depth < 0:
            raise ValueError(f"node {self.node_id}: negative memory or queue depth")


def _check_series(name: str, values: Any) -> tuple[float, ...]:
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(f"{name}: must be a non-empty array")
    out = []
    for i, v in enumerate(values):
        if not isinstance(v, (int, float)) or v < 0:
            raise ConfigError(f"{name}[{i}]: must be a number >= 0")
        out.append(float(v))
    return tuple(out)


@dataclass(frozen=True)
class Datacenter:
    """One location: a node fleet plus its environmental time series.

    The series are indexed by epoch and cycle when shorter than the
    simulation horizon. ``blowdown_ratio`` controls how much extra water the
    cooling loop discharges relative to what it evaporates.
    """

    location_id: str
    region: str
    node_counts: Mapping[str, int]
    cop: float
    blowdown_ratio: float
    ei_potable_kwh_per_l: float
    ei_waste_kwh_per_l: float
    tou_usd_per_kwh: tuple[float, ...]
    ci_kg_per_kwh: tuple[float, ...]
    wi_l_per_kwh: tuple[float, ...]
    nodes: tuple[tuple[str, str], ...] = field(default=(), repr=False)  # (node_id, type_id), id order

    def __post_init__(self) -> None:
        pre = f"datacenters[{self.location_id}]"
        if self.cop <= 0:
            raise ConfigError(f"{pre}.cop: must be positive")
        if not (0.0 < self.blowdown_ratio < 1.0):
            raise ConfigError(f"{pre}.blowdown_ratio: must lie in (0, 1)")
        if self.ei_potable_kwh_per_l < 0 or self.ei_waste_kwh_per_l < 0:
            raise ConfigError(f"{pre}: water conversion intensities must be >= 0")
        for tid, n in self.node_counts.items():
            if n < 0:
                raise ConfigError(f"{pre}.node_counts[{tid}]: must be >= 0")
        if not self.nodes:
            object.__setattr__(self, "nodes", _expand_nodes(self.location_id, self.node_counts))

    @property
    def total_nodes(self) -> int:
        return len(self.nodes)

    def tou(self, epoch: int) -> float:
        return self.tou_usd_per_kwh[epoch % len(self.tou_usd_per_kwh)]

    def ci(self, epoch: int) -> float:
        return self.ci_kg_per_kwh[epoch % len(self.ci_kg_per_kwh)]

    def wi(self, epoch: int) -> float:
        return self.wi_l_per_kwh[epoch % len(self.wi_l_per_kwh)]


def _expand_nodes(location_id: str, node_counts: Mapping[str, int]) -> tuple[tuple[str, str], ...]:
    nodes = []
    for tid in sorted(node_counts):
        for i in range(node_counts[tid]):
            nodes.append((f"{location_id}-{tid}-{i:04d}", tid))
    nodes.sort(key=lambda nt: nt[0])
    return tuple(nodes)


@dataclass(frozen=True)
class Topology:
    """Hop counts between datacenters and from origin regions to them."""

    locations: tuple[str, ...]
    hop_matrix: tuple[tuple[int, ...], ...]
    origin_hops: Mapping[str, Mapping[str, int]]
    media_latency_s: float = 0.01

    def __post_init__(self) -> None:
        n = len(self.locations)
        if len(set(self.locations)) != n:
            raise ConfigError("topology.locations: duplicate location ids")
        if len(self.hop_matrix) != n or any(len(row) != n for row in self.hop_matrix):
            raise ConfigError(f"topology.hop_matrix: must be {n}x{n}")
        for i in range(n):
            if self.hop_matrix[i][i] != 0:
                raise ConfigError(f"topology.hop_matrix[{i}][{i}]: diagonal must be 0")
            for j in range(n):
                if self.hop_matrix[i][j] < 0:
                    raise ConfigError(f"topology.hop_matrix[{i}][{j}]: must be >= 0")
                if self.hop_matrix[i][j] != self.hop_matrix[j][i]:
                    raise ConfigError(f"topology.hop_matrix[{i}][{j}]: matrix must be symmetric")
        if self.media_latency_s < 0:
            raise ConfigError("topology.media_latency_s: must be >= 0")
        for region, row in self.origin_hops.items():
            for loc in self.locations:
                if loc not in row:
                    raise ConfigError(f"topology.origin_hops[{region}][{loc}]: missing")
                if row[loc] < 0:
                    raise ConfigError(f"topology.origin_hops[{region}][{loc}]: must be >= 0")

    def index(self, location_id: str) -> int:
        try:
            return self.locations.index(location_id)
        except ValueError:
            raise KeyError(f"unknown location {location_id!r}") from None

    def hops(self, src: str, dst: str) -> int:
        return self.hop_matrix[self.index(src)][self.index(dst)]

    def origin_hop_count(self, region: str, dst: str) -> int:
        if region not in self.origin_hops:
            raise KeyError(f"unknown origin region {region!r}")
        return self.origin_hops[region][dst]


@dataclass(frozen=True)
class Constants:
    epoch_length_s: float = 900.0
    h_water_mj_per_l: float = 2.26
    idle_epochs_to_off: int = 1
    ttft_statistic: str = "mean"  # or "p95"
    water_carbon_accounting: str = "literal"  # or "blowdown-to-wastewater"

    def __post_init__(self) -> None:
        if self.epoch_length_s <= 0:
            raise ConfigError("constants.epoch_length_s: must be positive")
        if self.h_water_mj_per_l <= 0:
            raise ConfigError("constants.h_water_mj_per_l: must be positive")
        if self.idle_epochs_to_off < 0:
            raise ConfigError("constants.idle_epochs_to_off: must be >= 0")
        if self.ttft_statistic not in ("mean", "p95"):
            raise ConfigError("constants.ttft_statistic: must be 'mean' or 'p95'")
        if self.water_carbon_accounting not in ("literal", "blowdown-to-wastewater"):
            raise ConfigError(
                "constants.water_carbon_accounting: must be 'literal' or 'blowdown-to-wastewater'"
            )


@dataclass(frozen=True)
class OptimizerParams:
    """Search knobs. ``iter_early`` is accepted for config compatibility but
    the search loop does not act on it."""

    gen: int = 30
    freq: int = 5
    step: float = 0.1
    candidates_per_step: int = 20
    p_mut: float = 0.2
    archive_capacity: int = 50
    cluster_count: int = 4
    top_eval_fraction: float = 0.25
    time_budget_s: float = 900.0
    seed: int = 0
    iter_early: int = 0
    surrogate_trees: int = 50
    surrogate_depth: int = 3
    surrogate_learning_rate: float = 0.1
    surrogate_min_leaf: int = 5

    def __post_init__(self) -> None:
        if self.gen < 1:
            raise ConfigError("optimizer.gen: must be >= 1")
        if self.freq < 1:
            raise ConfigError("optimizer.freq: must be >= 1")
        if self.step < 0 or self.step > 1:
            raise ConfigError("optimizer.step: must lie in [0, 1]")
        if self.candidates_per_step < 1:
            raise ConfigError("optimizer.candidates_per_step: must be >= 1")
        if not (0 <= self.p_mut <= 1):
            raise ConfigError("optimizer.p_mut: must lie in [0, 1]")
        if self.archive_capacity < 1:
            raise ConfigError("optimizer.archive_capacity: must be >= 1")
        if self.cluster_count < 1:
            raise ConfigError("optimizer.cluster_count: must be >= 1")
        if not (0 < self.top_eval_fraction <= 1):
            raise ConfigError("optimizer.top_eval_fraction: must lie in (0, 1]")
        if self.time_budget_s <= 0:
            raise ConfigError("optimizer.time_budget_s: must be positive")


@dataclass(frozen=True)
class Infrastructure:
    models: Mapping[str, LlmModelSpec]
    node_types: Mapping[str, NodeType]
    datacenters: tuple[Datacenter, ...]
    topology: Topology
    power_ratios: PowerStateRatios = field(default_factory=PowerStateRatios)
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self) -> None:
        if not self.models:
            raise ConfigError("models: must not be empty")
        if not self.datacenters:
            raise ConfigError("datacenters: must not be empty")
        for tid, nt in self.node_types.items():
            for m in self.models:
                if m not in nt.throughput_tokens_per_s:
                    raise ConfigError(
                        f"node_types[{tid}].throughput_tokens_per_s: missing entry for model {m!r}"
                    )
        locs = [dc.location_id for dc in self.datacenters]
        if len(set(locs)) != len(locs):
            raise ConfigError("datacenters: duplicate location ids")
        if tuple(locs) != self.topology.locations:
            raise ConfigError("topology.locations: must list datacenter location ids in order")
        for dc in self.datacenters:
            for tid in dc.node_counts:
                if tid not in self.node_types:
                    raise ConfigError(f"datacenters[{dc.location_id}].node_counts: unknown node type {tid!r}")
            if dc.region not in self.topology.origin_hops:
                raise ConfigError(
                    f"datacenters[{dc.location_id}].region: {dc.region!r} missing from topology.origin_hops"
                )

    @property
    def locations(self) -> tuple[str, ...]:
        return self.topology.locations

    def datacenter(self, location_id: str) -> Datacenter:
        for dc in self.datacenters:
            if dc.location_id == location_id:
                return dc
        raise KeyError(f"unknown location {location_id!r}")

    @property
    def regions(self) -> tuple[str, ...]:
        return tuple(sorted(self.topology.origin_hops))

    def nearest_location(self, region: str) -> str:
        """Fewest origin hops; ties go to the earliest location in config order."""
        row = self.topology.origin_hops[region]
        return min(self.locations, key=lambda loc: (row[loc], self.topology.index(loc)))


@dataclass(frozen=True)
class SimConfig:
    infra: Infrastructure
    trace_gen: TraceGenConfig
    optimizer: OptimizerParams = field(default_factory=OptimizerParams)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    defaults_applied: tuple[str, ...] = ()


# --- parsing -----------------------------------------------------------------


def _req(d: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in d:
        raise ConfigError(f"{where}.{key}: missing required key")
    return d[key]


def _num(d: Mapping[str, Any], key: str, where: str, default: float | None = None) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key}: missing required key")
        return default
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: must be a number")
    return float(v)


def parse_config(doc: Mapping[str, Any]) -> SimConfig:
    """Build a validated SimConfig from a parsed JSON document."""
    if not isinstance(doc, Mapping):
        raise ConfigError("config root must be a JSON object")
    defaults: list[str] = []

    models: dict[str, LlmModelSpec] = {}
    for i, md in enumerate(_req(doc, "models", "config")):
        where = f"models[{i}]"
        try:
            spec = LlmModelSpec(
                model_id=str(_req(md, "model_id", where)),
                param_count=int(_num(md, "param_count", where)),
                bytes_per_param=int(_num(md, "bytes_per_param", where)),
                kv_bytes_per_token=_num(md, "kv_bytes_per_token", where),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if spec.model_id in models:
            raise ConfigError(f"{where}.model_id: duplicate model {spec.model_id!r}")
        models[spec.model_id] = spec

    node_types: dict[str, NodeType] = {}
    for i, nd in enumerate(_req(doc, "node_types", "config")):
        where = f"node_types[{i}]"
        nt = NodeType(
            type_id=str(_req(nd, "type_id", where)),
            gpu_count=int(_num(nd, "gpu_count", where)),
            gpu_mem_each_bytes=_num(nd, "gpu_mem_each_bytes", where),
            tdp_w=_num(nd, "tdp_w", where),
            load_bandwidth_bytes_per_s=_num(nd, "load_bandwidth_bytes_per_s", where),
            throughput_tokens_per_s={
                str(k): float(v) for k, v in _req(nd, "throughput_tokens_per_s", where).items()
            },
        )
        if nt.type_id in node_types:
            raise ConfigError(f"{where}.type_id: duplicate node type {nt.type_id!r}")
        node_types[nt.type_id] = nt

    dcs = []
    for i, dd in enumerate(_req(doc, "datacenters", "config")):
        where = f"datacenters[{i}]"
        dcs.append(
            Datacenter(
                location_id=str(_req(dd, "location_id", where)),
                region=str(_req(dd, "region", where)),
                node_counts={str(k): int(v) for k, v in _req(dd, "node_counts", where).items()},
                cop=_num(dd, "cop", where),
                blowdown_ratio=_num(dd, "blowdown_ratio", where),
                ei_potable_kwh_per_l=_num(dd, "ei_potable_kwh_per_l", where, 0.005),
                ei_waste_kwh_per_l=_num(dd, "ei_waste_kwh_per_l", where, 0.002),
                tou_usd_per_kwh=_check_series(f"{where}.tou_usd_per_kwh", _req(dd, "tou_usd_per_kwh", where)),
                ci_kg_per_kwh=_check_series(f"{where}.ci_kg_per_kwh", _req(dd, "ci_kg_per_kwh", where)),
                wi_l_per_kwh=_check_series(f"{where}.wi_l_per_kwh", _req(dd, "wi_l_per_kwh", where)),
            )
        )

    td = _req(doc, "topology", "config")
    topology = Topology(
        locations=tuple(str(x) for x in _req(td, "locations", "topology")),
        hop_matrix=tuple(tuple(int(x) for x in row) for row in _req(td, "hop_matrix", "topology")),
        origin_hops={
            str(r): {str(k): int(v) for k, v in row.items()}
            for r, row in _req(td, "origin_hops", "topology").items()
        },
        media_latency_s=_num(td, "media_latency_s", "topology", 0.01),
    )

    if "power_ratios" in doc:
        pr = doc["power_ratios"]
        ratios = PowerStateRatios(
            on=_num(pr, "on", "power_ratios", 1.0),
            idle=_num(pr, "idle", "power_ratios", 0.3),
            off=_num(pr, "off", "power_ratios", 0.0),
        )
    else:
        ratios = PowerStateRatios()
        defaults.append("power_ratios")

    if "constants" in doc:
        cd = doc["constants"]
        constants = Constants(
            epoch_length_s=_num(cd, "epoch_length_s", "constants", 900.0),
            h_water_mj_per_l=_num(cd, "h_water_mj_per_l", "constants", 2.26),
            idle_epochs_to_off=int(_num(cd, "idle_epochs_to_off", "constants", 1)),
            ttft_statistic=str(cd.get("ttft_statistic", "mean")),
            water_carbon_accounting=str(cd.get("water_carbon_accounting", "literal")),
        )
    else:
        constants = Constants()
        defaults.append("constants")

    infra = Infrastructure(
        models=models,
        node_types=node_types,
        datacenters=tuple(dcs),
        topology=topology,
        power_ratios=ratios,
        constants=constants,
    )

    if "trace_gen" in doc:
        tg = dict(doc["trace_gen"])
        known = set(TraceGenConfig.__dataclass_fields__)
        unknown = set(tg) - known
        if unknown:
            raise ConfigError(f"trace_gen: unknown keys {sorted(unknown)}")
        try:
            trace_gen = TraceGenConfig(**tg)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"trace_gen: {exc}") from None
    else:
        raise ConfigError("config.trace_gen: missing required key")

    if "optimizer" in doc:
        od = dict(doc["optimizer"])
        unknown = set(od) - set(OptimizerParams.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"optimizer: unknown keys {sorted(unknown)}")
        optimizer = OptimizerParams(**od)
    else:
        optimizer = OptimizerParams()
        defaults.append("optimizer")

    if "predictor" in doc:
        pd = doc["predictor"]
        predictor = PredictorConfig(
            window_lengths=tuple(int(w) for w in pd.get("window_lengths", (1, 2, 4, 8, 16))),
            selection_horizon=int(pd.get("selection_horizon", 4)),
        )
    else:
        predictor = PredictorConfig()
        defaults.append("predictor")

    # horizon warnings: environmental series shorter than the trace cycle around
    horizon = trace_gen.epochs
    for dc in infra.datacenters:
        for name, series in (
            ("tou_usd_per_kwh", dc.tou_usd_per_kwh),
            ("ci_kg_per_kwh", dc.ci_kg_per_kwh),
            ("wi_l_per_kwh", dc.wi_l_per_kwh),
        ):
            if len(series) < horizon:
                log.warning(
                    "datacenters[%s].%s has %d entries for a %d-epoch horizon; series will cycle",
                    dc.location_id, name, len(series), horizon,
                )

    return SimConfig(
        infra=infra,
        trace_gen=trace_gen,
        optimizer=optimizer,
        predictor=predictor,
        defaults_applied=tuple(defaults),
    )


def load_config(path: str | Path) -> SimConfig:
    """Parse and validate a simulator config file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)


def config_to_dict(cfg: SimConfig) -> dict[str, Any]:
    """Serialize back to the JSON document shape (round-trips with parse_config)."""
    infra = cfg.infra
    return {
        "constants": {
            "epoch_length_s": infra.constants.epoch_length_s,
            "h_water_mj_per_l": infra.constants.h_water_mj_per_l,
            "idle_epochs_to_off": infra.constants.idle_epochs_to_off,
            "ttft_statistic": infra.constants.ttft_statistic,
            "water_carbon_accounting": infra.constants.water_carbon_accounting,
        },
        "models": [
            {
                "model_id": m.model_id,
                "param_count": m.param_count,
                "bytes_per_param": m.bytes_per_param,
                "kv_bytes_per_token": m.kv_bytes_per_token,
            }
            for m in infra.models.values()
        ],
        "node_types": [
            {
                "type_id": nt.type_id,
                "gpu_count": nt.gpu_count,
                "gpu_mem_each_bytes": nt.gpu_mem_each_bytes,
                "tdp_w": nt.tdp_w,
                "load_bandwidth_bytes_per_s": nt.load_bandwidth_bytes_per_s,
                "throughput_tokens_per_s": dict(nt.throughput_tokens_per_s),
            }
            for nt in infra.node_types.values()
        ],
        "datacenters": [
            {
                "location_id": dc.location_id,
                "region": dc.region,
                "node_counts": dict(dc.node_counts),
                "cop": dc.cop,
                "blowdown_ratio": dc.blowdown_ratio,
                "ei_potable_kwh_per_l": dc.ei_potable_kwh_per_l,
                "ei_waste_kwh_per_l": dc.ei_waste_kwh_per_l,
                "tou_usd_per_kwh": list(dc.tou_usd_per_kwh),
                "ci_kg_per_kwh": list(dc.ci_kg_per_kwh),
                "wi_l_per_kwh": list(dc.wi_l_per_kwh),
            }
            for dc in infra.datacenters
        ],
        "topology": {
            "locations": list(infra.topology.locations),
            "hop_matrix": [list(row) for row in infra.topology.hop_matrix],
            "origin_hops": {r: dict(row) for r, row in infra.topology.origin_hops.items()},
            "media_latency_s": infra.topology.media_latency_s,
        },
        "power_ratios": {
            "on": infra.power_ratios.on,
            "idle": infra.power_ratios.idle,
            "off": infra.power_ratios.off,
        },
        "trace_gen": {
            "epochs": cfg.trace_gen.epochs,
            "base_requests_per_epoch": cfg.trace_gen.base_requests_per_epoch,
            "model_shares": dict(cfg.trace_gen.model_shares),
            "region_mix": dict(cfg.trace_gen.region_mix),
            "diurnal_amplitude": cfg.trace_gen.diurnal_amplitude,
            "burst_amplitude": cfg.trace_gen.burst_amplitude,
            "epochs_per_day": cfg.trace_gen.epochs_per_day,
            "input_tokens_mean": cfg.trace_gen.input_tokens_mean,
            "output_tokens_mean": cfg.trace_gen.output_tokens_mean,
            "max_tokens": cfg.trace_gen.max_tokens,
            "delay_scale": cfg.trace_gen.delay_scale,
            "token_scale": cfg.trace_gen.token_scale,
            "request_scale": cfg.trace_gen.request_scale,
        },
        "optimizer": {
            k: getattr(cfg.optimizer, k) for k in OptimizerParams.__dataclass_fields__
        },
        "predictor": {
            "window_lengths": list(cfg.predictor.window_lengths),
            "selection_horizon": cfg.predictor.selection_horizon,
        },
    }


def save_config(cfg: SimConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n", encoding="utf-8")
