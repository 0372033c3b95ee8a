"""Synthetic LLM inference workloads grouped into fixed-length epochs.

A trace is a list of epochs; each epoch holds the requests that arrive inside
one scheduling window (15 minutes by default). Requests are never split across
epochs and the per-epoch ordering is arrival order. The generator is fully
deterministic for a given seed so that simulation runs can be replayed
byte-for-byte.
"""

from __future__ import annotations

import gzip
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "LlmModelSpec",
    "Request",
    "EpochTrace",
    "TraceGenConfig",
    "PredictorConfig",
    "ArrivalPredictor",
    "InsufficientHistoryError",
    "generate_trace",
    "memory_footprint",
    "bucket_counts",
    "synthesize_epoch",
    "predictor_update",
    "predict_next_epoch",
    "score_windows",
    "fit_trailing_line",
    "write_trace_ndjson",
    "read_trace_ndjson",
]

Bucket = tuple[str, str]  # (origin_region, model_id)


@dataclass(frozen=True)
class LlmModelSpec:
    """A served model: parameter memory plus per-token KV-cache growth."""

    model_id: str
    param_count: int
    bytes_per_param: int
    kv_bytes_per_token: float

    def __post_init__(self) -> None:
        if self.bytes_per_param not in (1, 2, 4):
            raise ValueError(f"model {self.model_id}: bytes_per_param must be 1, 2 or 4")
        if self.param_count <= 0:
            raise ValueError(f"model {self.model_id}: param_count must be positive")
        if self.kv_bytes_per_token <= 0:
            raise ValueError(f"model {self.model_id}: kv_bytes_per_token must be positive")

    @property
    def param_memory_bytes(self) -> float:
        return float(self.param_count) * self.bytes_per_param


@dataclass(frozen=True)
class Request:
    request_id: str
    model_id: str
    origin_region: str
    arrival_epoch: int
    input_tokens: int
    output_tokens: int

    def __post_init__(self) -> None:
        if self.input_tokens < 1:
            raise ValueError(f"request {self.request_id}: input_tokens must be >= 1")
        if self.output_tokens < 1:
            raise ValueError(f"request {self.request_id}: output_tokens must be >= 1")
        if self.arrival_epoch < 0:
            raise ValueError(f"request {self.request_id}: arrival_epoch must be >= 0")

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens

    @property
    def bucket(self) -> Bucket:
        return (self.origin_region, self.model_id)


@dataclass(frozen=True)
class EpochTrace:
    """All requests arriving within one scheduling epoch, in arrival order."""

    epoch_index: int
    requests: tuple[Request, ...]
    epoch_length_s: float = 900.0

    def __post_init__(self) -> None:
        if self.epoch_length_s <= 0:
            raise ValueError("epoch_length_s must be positive")
        for r in self.requests:
            if r.arrival_epoch != self.epoch_index:
                raise ValueError(
                    f"request {r.request_id} has arrival_epoch {r.arrival_epoch}, "
                    f"trace epoch is {self.epoch_index}"
                )


def memory_footprint(request: Request, model: LlmModelSpec, generated_tokens: int | None = None) -> float:
    """Memory a request occupies on a node, in bytes.

    KV cache grows linearly with the generated token count on top of the
    model's (shared-in-principle, reserved-in-full here) parameter memory. The
    default evaluates the full footprint at the request's output length, which
    is what admission control reserves up front.
    """
    n = request.output_tokens if generated_tokens is None else generated_tokens
    if n < 0 or n > request.output_tokens:
        raise ValueError(
            f"generated_tokens must lie in [0, {request.output_tokens}], got {n}"
        )
    if request.model_id != model.model_id:
        raise ValueError(f"request {request.request_id} is for model {request.model_id}, not {model.model_id}")
    return n * model.kv_bytes_per_token + model.param_memory_bytes


# --- trace generation -------------------------------------------------------


@dataclass(frozen=True)
class TraceGenConfig:
    """Knobs for the synthetic arrival process.

    The arrival rate follows a diurnal curve with multiplicative burst noise.
    ``request_scale``, ``delay_scale`` and ``token_scale`` are the workload
    multipliers: request count scales with request_scale / delay_scale
    (halving the inter-arrival delay doubles the arrivals per window) and
    token counts scale with token_scale.
    """

    epochs: int = 96
    base_requests_per_epoch: float = 2000.0
    model_shares: Mapping[str, float] = field(default_factory=dict)
    region_mix: Mapping[str, float] = field(default_factory=dict)
    diurnal_amplitude: float = 0.5
    burst_amplitude: float = 0.2
    epochs_per_day: int = 96
    input_tokens_mean: float = 400.0
    output_tokens_mean: float = 200.0
    max_tokens: int = 4096
    delay_scale: float = 1.0
    token_scale: float = 1.0
    request_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.delay_scale <= 0:
            raise ValueError("delay_scale must be positive")
        if self.request_scale < 0:
            raise ValueError("request_scale must be >= 0")
        if self.token_scale <= 0:
            raise ValueError("token_scale must be positive")
        if not (0 <= self.diurnal_amplitude < 1):
            raise ValueError("diurnal_amplitude must lie in [0, 1)")
        if not (0 <= self.burst_amplitude < 1):
            raise ValueError("burst_amplitude must lie in [0, 1)")
        if self.epochs_per_day < 1:
            raise ValueError("epochs_per_day must be >= 1")


def _validate_shares(shares: Mapping[str, float], what: str) -> list[str]:
    if not shares:
        raise ValueError(f"{what} must not be empty")
    keys = sorted(shares)
    total = float(sum(shares[k] for k in keys))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{what} must sum to 1 within 1e-9, got {total!r}")
    for k in keys:
        if shares[k] < 0:
            raise ValueError(f"{what}[{k}] must be >= 0")
    return keys


def _sample_tokens(rng: np.random.Generator, mean: float, max_tokens: int, n: int) -> np.ndarray:
    # lognormal with the requested mean; token counts are heavy tailed
    sigma = 0.8
    mu = math.log(max(mean, 1.0)) - 0.5 * sigma * sigma
    raw = rng.lognormal(mean=mu, sigma=sigma, size=n)
    return np.clip(np.rint(raw), 1, max_tokens).astype(int)


def generate_trace(
    models: Mapping[str, LlmModelSpec],
    gen: TraceGenConfig,
    seed: int,
    epoch_length_s: float = 900.0,
) -> list[EpochTrace]:
    """Generate a deterministic multi-epoch request trace.

    Same (config, seed) always yields the identical trace. Raises ValueError
    for zero epochs, an empty model set, or shares that do not sum to one.
    """
    if gen.epochs < 1:
        raise ValueError("trace must cover at least one epoch")
    if not models:
        raise ValueError("model set must not be empty")
    model_ids = _validate_shares(gen.model_shares, "model_shares")
    regions = _validate_shares(gen.region_mix, "region_mix")
    for m in model_ids:
        if m not in models:
            raise ValueError(f"model_shares references unknown model {m!r}")

    model_p = np.array([gen.model_shares[m] for m in model_ids])
    region_p = np.array([gen.region_mix[r] for r in regions])
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xA11]))

    rate = gen.base_requests_per_epoch * gen.request_scale / gen.delay_scale
    traces: list[EpochTrace] = []
    for e in range(gen.epochs):
        phase = 2.0 * math.pi * (e % gen.epochs_per_day) / gen.epochs_per_day
        diurnal = 1.0 + gen.diurnal_amplitude * math.sin(phase - 0.5 * math.pi)
        burst = 1.0 + gen.burst_amplitude * rng.uniform(-1.0, 1.0)
        count = int(round(rate * diurnal * burst))
        if count <= 0:
            traces.append(EpochTrace(e, (), epoch_length_s))
            continue
        chosen_models = rng.choice(len(model_ids), size=count, p=model_p)
        chosen_regions = rng.choice(len(regions), size=count, p=region_p)
        in_tok = _sample_tokens(rng, gen.input_tokens_mean * gen.token_scale, gen.max_tokens, count)
        out_tok = _sample_tokens(rng, gen.output_tokens_mean * gen.token_scale, gen.max_tokens, count)
        reqs = tuple(
            Request(
                request_id=f"e{e:05d}-r{i:06d}",
                model_id=model_ids[chosen_models[i]],
                origin_region=regions[chosen_regions[i]],
                arrival_epoch=e,
                input_tokens=int(in_tok[i]),
                output_tokens=int(out_tok[i]),
            )
            for i in range(count)
        )
        traces.append(EpochTrace(e, reqs, epoch_length_s))
    return traces


def bucket_counts(requests: Iterable[Request]) -> dict[Bucket, int]:
    counts: dict[Bucket, int] = {}
    for r in requests:
        counts[r.bucket] = counts.get(r.bucket, 0) + 1
    return counts


def synthesize_epoch(
    counts: Mapping[Bucket, int],
    gen: TraceGenConfig,
    epoch_index: int,
    seed: int,
    epoch_length_s: float = 900.0,
) -> EpochTrace:
    """Materialize forecast bucket counts into a synthetic epoch of requests.

    Token lengths follow the generator's distribution; deterministic in
    (counts, gen, epoch_index, seed). Used to give the optimizer a concrete
    workload to score plans against before the real arrivals are known.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0x7FFFFFFF, epoch_index, 0xFC]))
    requests: list[Request] = []
    for region, model_id in sorted(counts):
        n = max(int(counts[(region, model_id)]), 0)
        if n == 0:
            continue
        in_tok = _sample_tokens(rng, gen.input_tokens_mean * gen.token_scale, gen.max_tokens, n)
        out_tok = _sample_tokens(rng, gen.output_tokens_mean * gen.token_scale, gen.max_tokens, n)
        for i in range(n):
            requests.append(
                Request(
                    request_id=f"p{epoch_index:05d}-{region}-{model_id}-{i:05d}",
                    model_id=model_id,
                    origin_region=region,
                    arrival_epoch=epoch_index,
                    input_tokens=int(in_tok[i]),
                    output_tokens=int(out_tok[i]),
                )
            )
    return EpochTrace(epoch_index, tuple(requests), epoch_length_s)


# --- NDJSON trace serialization ---------------------------------------------


def write_trace_ndjson(traces: Sequence[EpochTrace], path: str | Path) -> None:
    """One request per line; `.gz` suffix switches on gzip compression."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wt", encoding="utf-8") as fh:
        for trace in traces:
            for r in trace.requests:
                fh.write(
                    json.dumps(
                        {
                            "request_id": r.request_id,
                            "model_id": r.model_id,
                            "origin_region": r.origin_region,
                            "arrival_epoch": r.arrival_epoch,
                            "input_tokens": r.input_tokens,
                            "output_tokens": r.output_tokens,
                        },
                        separators=(",", ":"),
                    )
                )
                fh.write("\n")


def read_trace_ndjson(
    path: str | Path,
    epoch_length_s: float = 900.0,
    epochs: int | None = None,
) -> list[EpochTrace]:
    """Inverse of write_trace_ndjson.

    Trailing empty epochs carry no lines, so pass ``epochs`` to recover them;
    otherwise the trace ends at the last populated epoch.
    """
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    per_epoch: dict[int, list[Request]] = {}
    with opener(path, "rt", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            r = Request(
                request_id=d["request_id"],
                model_id=d["model_id"],
                origin_region=d["origin_region"],
                arrival_epoch=int(d["arrival_epoch"]),
                input_tokens=int(d["input_tokens"]),
                output_tokens=int(d["output_tokens"]),
            )
            per_epoch.setdefault(r.arrival_epoch, []).append(r)
    last = max(per_epoch) + 1 if per_epoch else 0
    n = epochs if epochs is not None else last
    if n < last:
        raise ValueError(f"trace holds requests up to epoch {last - 1}, epochs={n} is too small")
    return [EpochTrace(e, tuple(per_epoch.get(e, ())), epoch_length_s) for e in range(n)]


# --- arrival prediction ------------------------------------------------------


class InsufficientHistoryError(RuntimeError):
    """Raised when no window regressor can be scored yet."""


@dataclass(frozen=True)
class PredictorConfig:
    window_lengths: tuple[int, ...] = (1, 2, 4, 8, 16)
    selection_horizon: int = 4

    def __post_init__(self) -> None:
        if not self.window_lengths or any(w < 1 for w in self.window_lengths):
            raise ValueError("window_lengths must be non-empty positive ints")
        if len(set(self.window_lengths)) != len(self.window_lengths):
            raise ValueError("window_lengths must be distinct")
        if self.selection_horizon < 1:
            raise ValueError("selection_horizon must be >= 1")

    @property
    def warmup_epochs(self) -> int:
        return max(self.window_lengths)


@dataclass(frozen=True)
class ArrivalPredictor:
    """Per-(region, model) arrival-count forecaster.

    Each stream keeps one linear regressor per trailing-window length; the
    forecast comes from whichever window scored the lowest mean absolute error
    over the last ``selection_horizon`` one-step-ahead predictions.
    """

    config: PredictorConfig = field(default_factory=PredictorConfig)
    history: Mapping[Bucket, tuple[int, ...]] = field(default_factory=dict)

    def stream(self, bucket: Bucket) -> tuple[int, ...]:
        return self.history.get(bucket, ())


def fit_trailing_line(series: Sequence[float], window: int) -> tuple[float, float]:
    """Least-squares line over the trailing ``window`` points.

    Returns (slope, intercept) with x = 0..window-1 over those points; a
    window of one degenerates to carrying the last value forward.
    """
    if window < 1 or len(series) < window:
        raise ValueError(f"need at least {window} points, have {len(series)}")
    tail = np.asarray(series[len(series) - window:], dtype=float)
    if window == 1:
        return 0.0, float(tail[0])
    x = np.arange(window, dtype=float)
    xbar = (window - 1) / 2.0
    ybar = float(tail.mean())
    var = window * (window * window - 1) / 12.0
    slope = float(((x - xbar) * (tail - ybar)).sum() / var)
    return slope, ybar - slope * xbar


def _one_step(series: Sequence[float], window: int) -> float:
    slope, intercept = fit_trailing_line(series, window)
    return slope * window + intercept


def score_windows(
    series: Sequence[float], windows: Sequence[int], horizon: int
) -> dict[int, float]:
    """Trailing MAE of each scoreable window regressor.

    A window w is scoreable once the series holds w + horizon points: each of
    the last ``horizon`` values is predicted from the window that precedes it
    and the absolute errors are averaged. Unscoreable windows are omitted.
    """
    t = len(series)
    scores: dict[int, float] = {}
    for w in windows:
        if t < w + horizon:
            continue
        errs = []
        for j in range(t - horizon, t):
            errs.append(abs(_one_step(series[:j], w) - series[j]))
        scores[w] = float(np.mean(errs))
    return scores


def predictor_update(pred: ArrivalPredictor, observed: Mapping[Bucket, int]) -> ArrivalPredictor:
    """Append one epoch of observed counts; pure, returns a new predictor."""
    keys = set(pred.history) | set(observed)
    history = {
        k: pred.history.get(k, ()) + (int(observed.get(k, 0)),) for k in sorted(keys)
    }
    return replace(pred, history=history)


def _predict_stream(series: Sequence[int], cfg: PredictorConfig) -> int:
    scores = score_windows(series, cfg.window_lengths, cfg.selection_horizon)
    if not scores:
        raise InsufficientHistoryError(
            f"stream has {len(series)} points; need at least "
            f"{min(cfg.window_lengths) + cfg.selection_horizon}"
        )
    best = min(scores, key=lambda w: (scores[w], w))
    value = _one_step(series, best)
    return max(0, int(round(value)))


def predict_next_epoch(pred: ArrivalPredictor) -> dict[Bucket, int]:
    """Next-epoch count forecast per bucket, clamped at zero and rounded.

    Raises InsufficientHistoryError while any stream is too short to score
    even the smallest window.
    """
    if not pred.history:
        raise InsufficientHistoryError("predictor has no history")
    return {b: _predict_stream(s, pred.config) for b, s in pred.history.items()}
