"""Hand-sized configurations and builders shared across the test modules.

Everything here is chosen so the arithmetic stays checkable on paper: two
datacenters, one model, round numbers for bandwidth, TDP and series values.
"""

from __future__ import annotations

import copy

from slitsim import parse_config
from slitsim.workload import EpochTrace, Request


def tiny_doc() -> dict:
    """Two-datacenter, one-model document. 14 GB model on 160 GB nodes."""
    return {
        "models": [
            {
                "model_id": "m7",
                "param_count": 7_000_000_000,
                "bytes_per_param": 2,
                "kv_bytes_per_token": 5.0e5,
            },
        ],
        "node_types": [
            {
                "type_id": "g2",
                "gpu_count": 2,
                "gpu_mem_each_bytes": 80.0e9,
                "tdp_w": 2000.0,
                "load_bandwidth_bytes_per_s": 16.0e9,
                "throughput_tokens_per_s": {"m7": 4000.0},
            },
        ],
        "datacenters": [
            {
                "location_id": "aa",
                "region": "east",
                "node_counts": {"g2": 4},
                "cop": 4.0,
                "blowdown_ratio": 0.2,
                "tou_usd_per_kwh": [0.10],
                "ci_kg_per_kwh": [0.40],
                "wi_l_per_kwh": [0.20],
            },
            {
                "location_id": "bb",
                "region": "west",
                "node_counts": {"g2": 4},
                "cop": 2.0,
                "blowdown_ratio": 0.5,
                "tou_usd_per_kwh": [0.20],
                "ci_kg_per_kwh": [0.10],
                "wi_l_per_kwh": [0.60],
            },
        ],
        "topology": {
            "locations": ["aa", "bb"],
            "hop_matrix": [[0, 5], [5, 0]],
            "origin_hops": {
                "east": {"aa": 1, "bb": 6},
                "west": {"aa": 6, "bb": 1},
            },
            "media_latency_s": 0.01,
        },
        "power_ratios": {"on": 1.0, "idle": 0.3, "off": 0.0},
        "constants": {
            "epoch_length_s": 900.0,
            "h_water_mj_per_l": 2.26,
            "idle_epochs_to_off": 1,
            "water_carbon_accounting": "literal",
            "ttft_statistic": "mean",
        },
        "trace_gen": {
            "epochs": 6,
            "base_requests_per_epoch": 8.0,
            "model_shares": {"m7": 1.0},
            "region_mix": {"east": 0.5, "west": 0.5},
            "diurnal_amplitude": 0.0,
            "burst_amplitude": 0.0,
            "epochs_per_day": 96,
            "input_tokens_mean": 40.0,
            "output_tokens_mean": 20.0,
            "max_tokens": 4096,
            "delay_scale": 1.0,
            "token_scale": 1.0,
            "request_scale": 1.0,
        },
        "optimizer": {
            "gen": 2,
            "freq": 1,
            "step": 0.25,
            "candidates_per_step": 4,
            "p_mut": 0.2,
            "archive_capacity": 8,
            "cluster_count": 2,
            "top_eval_fraction": 0.5,
            "time_budget_s": 30.0,
            "seed": 0,
            "surrogate_trees": 5,
            "surrogate_depth": 2,
            "surrogate_learning_rate": 0.3,
            "surrogate_min_leaf": 2,
        },
        "predictor": {"window_lengths": [1, 2], "selection_horizon": 1},
    }


def build_tiny(mutate=None):
    """Parse tiny_doc(), optionally after an in-place edit."""
    doc = tiny_doc()
    if mutate is not None:
        mutate(doc)
    return parse_config(doc)


def snug_doc() -> dict:
    """One datacenter where each request fills 60% of a node.

    Two node types with a 2:1 throughput ratio so the round-robin quota is
    2 for the fast node and 1 for the slow one. Node memory is 20 GB and the
    model occupies 12 GB, so a second co-resident request never fits.
    """
    return {
        "models": [
            {
                "model_id": "mx",
                "param_count": 12_000_000_000,
                "bytes_per_param": 1,
                "kv_bytes_per_token": 1.0,
            },
        ],
        "node_types": [
            {
                "type_id": "fast",
                "gpu_count": 2,
                "gpu_mem_each_bytes": 10.0e9,
                "tdp_w": 1000.0,
                "load_bandwidth_bytes_per_s": 16.0e9,
                "throughput_tokens_per_s": {"mx": 8000.0},
            },
            {
                "type_id": "slow",
                "gpu_count": 2,
                "gpu_mem_each_bytes": 10.0e9,
                "tdp_w": 1000.0,
                "load_bandwidth_bytes_per_s": 16.0e9,
                "throughput_tokens_per_s": {"mx": 4000.0},
            },
        ],
        "datacenters": [
            {
                "location_id": "dd",
                "region": "east",
                "node_counts": {"fast": 1, "slow": 1},
                "cop": 4.0,
                "blowdown_ratio": 0.2,
                "tou_usd_per_kwh": [0.10],
                "ci_kg_per_kwh": [0.40],
                "wi_l_per_kwh": [0.20],
            },
        ],
        "topology": {
            "locations": ["dd"],
            "hop_matrix": [[0]],
            "origin_hops": {"east": {"dd": 0}},
            "media_latency_s": 0.01,
        },
        "trace_gen": {
            "epochs": 2,
            "base_requests_per_epoch": 4.0,
            "model_shares": {"mx": 1.0},
            "region_mix": {"east": 1.0},
        },
    }


def build_snug(mutate=None):
    doc = snug_doc()
    if mutate is not None:
        mutate(doc)
    return parse_config(doc)


def mk_request(i=0, model="m7", region="east", epoch=0, inp=40, out=20):
    return Request(
        request_id=f"r{i:04d}",
        model_id=model,
        origin_region=region,
        arrival_epoch=epoch,
        input_tokens=inp,
        output_tokens=out,
    )


def mk_trace(n, epoch=0, **kw) -> EpochTrace:
    return EpochTrace(
        epoch_index=epoch, requests=tuple(mk_request(i, epoch=epoch, **kw) for i in range(n))
    )


def deep(doc: dict) -> dict:
    return copy.deepcopy(doc)
