"""Builder for the shipped 12-datacenter reference configuration.

Four regions with three datacenters each, 1000 nodes per datacenter spread
near-evenly over six node types, two served models, and one day of
quarter-hour environmental series (electricity price, grid carbon intensity,
grid water intensity) phase-shifted to each site's local clock. Hardware and
intensity numbers are order-of-magnitude estimates, not vendor data. The
checked-in configs/reference_12dc.json must equal reference_doc() exactly;
a test holds the two together.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .infrastructure import SimConfig, parse_config

__all__ = ["reference_doc", "build_reference_config", "write_reference_config", "SERIES_EPOCHS"]

SERIES_EPOCHS = 96  # one day of 15-minute epochs

# location, region, utc offset hours, cop, blowdown ratio, tou/ci/wi base levels
_SITES = [
    ("tokyo", "east-asia", 9, 3.5, 0.20, 0.16, 0.46, 1.9),
    ("seoul", "east-asia", 9, 3.8, 0.20, 0.11, 0.43, 1.6),
    ("singapore", "east-asia", 8, 2.8, 0.25, 0.15, 0.40, 2.1),
    ("sydney", "oceania", 10, 3.2, 0.22, 0.22, 0.66, 1.3),
    ("melbourne", "oceania", 10, 3.6, 0.21, 0.20, 0.70, 1.2),
    ("auckland", "oceania", 12, 4.2, 0.18, 0.18, 0.10, 0.9),
    ("virginia", "north-america", -5, 3.4, 0.20, 0.09, 0.34, 2.4),
    ("oregon", "north-america", -8, 4.6, 0.17, 0.07, 0.12, 1.1),
    ("dallas", "north-america", -6, 3.0, 0.24, 0.08, 0.41, 3.0),
    ("dublin", "western-europe", 0, 4.8, 0.15, 0.24, 0.28, 1.0),
    ("frankfurt", "western-europe", 1, 4.0, 0.19, 0.30, 0.35, 1.4),
    ("stockholm", "western-europe", 1, 5.5, 0.14, 0.12, 0.02, 0.6),
]

_REGION_ORDER = ("east-asia", "oceania", "north-america", "western-europe")

# symmetric inter-region hop distances; intra-region pairs are 1 hop
_REGION_HOPS = {
    ("east-asia", "oceania"): 2,
    ("east-asia", "north-america"): 3,
    ("east-asia", "western-europe"): 4,
    ("oceania", "north-america"): 3,
    ("oceania", "western-europe"): 4,
    ("north-america", "western-europe"): 2,
}

_NODE_TYPES = [
    # type_id, gpus, tdp W, load bandwidth B/s, tokens/s for (llm-7b, llm-70b)
    ("a100-2x", 2, 1600.0, 16.0e9, 4000.0, 400.0),
    ("a100-4x", 4, 3200.0, 16.0e9, 8000.0, 800.0),
    ("a100-8x", 8, 6500.0, 16.0e9, 16000.0, 1600.0),
    ("h100-2x", 2, 2000.0, 32.0e9, 8000.0, 800.0),
    ("h100-4x", 4, 3900.0, 32.0e9, 16000.0, 1600.0),
    ("h100-8x", 8, 10200.0, 32.0e9, 32000.0, 3200.0),
]

_GPU_MEM_BYTES = 80.0e9


def _diurnal_series(base: float, amplitude: float, utc_offset_hours: int) -> list[float]:
    """One day sampled per epoch, peaking at local noon, bottoming at midnight."""
    shift = utc_offset_hours * (SERIES_EPOCHS // 24)
    out = []
    for e in range(SERIES_EPOCHS):
        local = ((e + shift) % SERIES_EPOCHS) / SERIES_EPOCHS
        out.append(round(base * (1.0 - amplitude * math.cos(2.0 * math.pi * local)), 6))
    return out


def _region_distance(a: str, b: str) -> int:
    if a == b:
        return 1
    return _REGION_HOPS.get((a, b)) or _REGION_HOPS[(b, a)]


def reference_doc() -> dict[str, Any]:
    """The reference config as a plain JSON document."""
    locations = [s[0] for s in _SITES]
    region_of = {s[0]: s[1] for s in _SITES}

    hop_matrix = []
    for a in locations:
        row = []
        for b in locations:
            row.append(0 if a == b else _region_distance(region_of[a], region_of[b]))
        hop_matrix.append(row)

    # ingress: 1 hop to the region's first-listed site, 2 to its siblings,
    # inter-region distance + 1 elsewhere; keeps the nearest site unique
    origin_hops: dict[str, dict[str, int]] = {}
    primary = {}
    for loc, region, *_ in _SITES:
        primary.setdefault(region, loc)
    for region in _REGION_ORDER:
        row = {}
        for loc in locations:
            if region_of[loc] == region:
                row[loc] = 1 if loc == primary[region] else 2
            else:
                row[loc] = 1 + _region_distance(region, region_of[loc])
        origin_hops[region] = row

    # 1000 nodes: first four types get 167, the last two 166
    node_counts = {}
    for i, (tid, *_rest) in enumerate(_NODE_TYPES):
        node_counts[tid] = 167 if i < 4 else 166

    datacenters = []
    for loc, region, utc, cop, blowdown, tou, ci, wi in _SITES:
        datacenters.append(
            {
                "location_id": loc,
                "region": region,
                "node_counts": dict(node_counts),
                "cop": cop,
                "blowdown_ratio": blowdown,
                "ei_potable_kwh_per_l": 0.0004,
                "ei_waste_kwh_per_l": 0.0008,
                "tou_usd_per_kwh": _diurnal_series(tou, 0.35, utc),
                "ci_kg_per_kwh": _diurnal_series(ci, 0.25, utc),
                "wi_l_per_kwh": _diurnal_series(wi, 0.15, utc),
            }
        )

    return {
        "constants": {
            "epoch_length_s": 900.0,
            "h_water_mj_per_l": 2.26,
            "idle_epochs_to_off": 8,
            "ttft_statistic": "mean",
            "water_carbon_accounting": "literal",
        },
        "models": [
            {
                "model_id": "llm-7b",
                "param_count": 7_000_000_000,
                "bytes_per_param": 2,
                "kv_bytes_per_token": 5.0e5,
            },
            {
                "model_id": "llm-70b",
                "param_count": 70_000_000_000,
                "bytes_per_param": 2,
                "kv_bytes_per_token": 2.5e6,
            },
        ],
        "node_types": [
            {
                "type_id": tid,
                "gpu_count": gpus,
                "gpu_mem_each_bytes": _GPU_MEM_BYTES,
                "tdp_w": tdp,
                "load_bandwidth_bytes_per_s": bw,
                "throughput_tokens_per_s": {"llm-7b": thr7, "llm-70b": thr70},
            }
            for tid, gpus, tdp, bw, thr7, thr70 in _NODE_TYPES
        ],
        "datacenters": datacenters,
        "topology": {
            "locations": locations,
            "hop_matrix": hop_matrix,
            "origin_hops": origin_hops,
            "media_latency_s": 0.01,
        },
        "power_ratios": {"on": 1.0, "idle": 0.3, "off": 0.0},
        "trace_gen": {
            "epochs": 96,
            "base_requests_per_epoch": 100.0,
            "model_shares": {"llm-7b": 0.9, "llm-70b": 0.1},
            "region_mix": {
                "east-asia": 0.3,
                "oceania": 0.1,
                "north-america": 0.35,
                "western-europe": 0.25,
            },
            "diurnal_amplitude": 0.5,
            "burst_amplitude": 0.2,
            "epochs_per_day": 96,
            "input_tokens_mean": 400.0,
            "output_tokens_mean": 200.0,
            "max_tokens": 4096,
            "delay_scale": 0.5,
            "token_scale": 3.0,
            "request_scale": 10.0,
        },
        "optimizer": {
            "gen": 20,
            "freq": 5,
            "step": 0.1,
            "candidates_per_step": 20,
            "p_mut": 0.2,
            "archive_capacity": 50,
            "cluster_count": 4,
            "top_eval_fraction": 0.25,
            "time_budget_s": 900.0,
            "seed": 0,
            "iter_early": 0,
            "surrogate_trees": 30,
            "surrogate_depth": 3,
            "surrogate_learning_rate": 0.1,
            "surrogate_min_leaf": 5,
        },
    }


def build_reference_config() -> SimConfig:
    return parse_config(reference_doc())


def write_reference_config(path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(reference_doc(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
