"""Synthetic regression streams with labeled drifts and injected outliers.

Streams are segments of a linear concept y = beta_t . x + noise.  Abrupt
streams swap the coefficient vector instantly at segment boundaries;
incremental streams interpolate linearly over a transition of length L;
mixed streams flip a fair coin per boundary.  Point outliers add a random
offset to y at independently selected indices.

All randomness flows through named, seedable 64-bit generators (PCG64) with
a fixed sub-stream layout (concepts / features / noise / coins / outliers),
so a given config+seed reproduces the stream bit-for-bit and the outlier-free
variant of a contaminated stream shares its base signal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .core import ConfigError, DataError, EventKind, GroundTruthEvent, Sample

X_LOW, X_HIGH = 0.2, 0.5
BETA_LOW, BETA_HIGH = 0.0, 1.0
OFFSET_MEAN_LOW, OFFSET_MEAN_HIGH = 0.5, 1.0
OFFSET_SPREAD_LOW, OFFSET_SPREAD_HIGH = 0.0, 0.1

STREAM_KINDS = ("abrupt", "incremental", "mixed")

# Sub-stream indices for SeedSequence spawning.
_CHILD_BETA, _CHILD_X, _CHILD_NOISE, _CHILD_COIN, _CHILD_OUTLIER = range(5)


@dataclass(frozen=True)
class StreamConfig:
    kind: str = "abrupt"
    n_segments: int = 50
    segment_len: int = 1000
    d: int = 10
    transition_len: int = 50
    noise_var: float = 0.001
    noise_param_is_std: bool = False
    outlier_prob: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in STREAM_KINDS:
            raise ConfigError(f"unknown stream kind {self.kind!r}")
        if self.n_segments < 1 or self.segment_len < 1 or self.d < 1:
            raise ConfigError("n_segments, segment_len and d must be positive")
        if not 0 < self.transition_len < self.segment_len:
            raise ConfigError("transition_len must lie in (0, segment_len)")
        if self.noise_var < 0:
            raise ConfigError("noise_var must be nonnegative")
        if not 0 <= self.outlier_prob < 1:
            raise ConfigError("outlier_prob must lie in [0, 1)")

    @property
    def length(self) -> int:
        return self.n_segments * self.segment_len


@dataclass
class LabeledStream:
    X: np.ndarray
    y: np.ndarray
    truth: list[GroundTruthEvent]
    beta_trace: np.ndarray
    config: StreamConfig | None = None
    offsets: np.ndarray | None = None

    def __len__(self) -> int:
        return self.y.shape[0]

    def samples(self) -> Iterator[Sample]:
        for t in range(len(self)):
            yield Sample(t=t, x=self.X[t], y=float(self.y[t]))

    def drift_events(self) -> list[GroundTruthEvent]:
        return [e for e in self.truth if e.kind is not EventKind.OUTLIER]

    def outlier_events(self) -> list[GroundTruthEvent]:
        return [e for e in self.truth if e.kind is EventKind.OUTLIER]


def _rng_child(seed: int, child: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, child])))


def _noise_std(config: StreamConfig) -> float:
    return config.noise_var if config.noise_param_is_std else math.sqrt(config.noise_var)


def _base_stream(config: StreamConfig, transitions: Sequence[bool]) -> LabeledStream:
    """Common generator: per-boundary ``transitions[i]`` selects incremental
    (True) or abrupt (False) for the boundary entering segment i+2."""
    n = config.length
    rng_beta = _rng_child(config.seed, _CHILD_BETA)
    rng_x = _rng_child(config.seed, _CHILD_X)
    rng_noise = _rng_child(config.seed, _CHILD_NOISE)

    concepts = rng_beta.uniform(BETA_LOW, BETA_HIGH, size=(config.n_segments, config.d))
    X = rng_x.uniform(X_LOW, X_HIGH, size=(n, config.d))
    noise = rng_noise.normal(0.0, _noise_std(config), size=n) if _noise_std(config) > 0 else np.zeros(n)

    beta_trace = np.empty((n, config.d))
    truth: list[GroundTruthEvent] = []
    L = config.transition_len
    for seg in range(config.n_segments):
        start = seg * config.segment_len
        stop = start + config.segment_len
        beta_trace[start:stop] = concepts[seg]
        if seg == 0:
            continue
        incremental = transitions[seg - 1]
        truth.append(
            GroundTruthEvent(
                t=start,
                kind=EventKind.DRIFT_INCREMENTAL if incremental else EventKind.DRIFT_ABRUPT,
            )
        )
        if incremental:
            # Linear interpolation over the first L samples of the segment;
            # the convex form keeps the endpoint exactly equal to the new
            # concept.
            prev = concepts[seg - 1]
            target = concepts[seg]
            for j in range(L):
                s = (j + 1) / L
                beta_trace[start + j] = (1.0 - s) * prev + s * target
    y = np.einsum("td,td->t", beta_trace, X) + noise
    return LabeledStream(
        X=X, y=y, truth=truth, beta_trace=beta_trace, config=config,
        offsets=np.zeros(n),
    )


def gen_abrupt(config: StreamConfig) -> LabeledStream:
    config.validate()
    if config.kind != "abrupt":
        raise ConfigError("gen_abrupt requires kind='abrupt'")
    return _base_stream(config, [False] * (config.n_segments - 1))


def gen_incremental(config: StreamConfig) -> LabeledStream:
    config.validate()
    if config.kind != "incremental":
        raise ConfigError("gen_incremental requires kind='incremental'")
    return _base_stream(config, [True] * (config.n_segments - 1))


def gen_mixed(config: StreamConfig) -> LabeledStream:
    config.validate()
    if config.kind != "mixed":
        raise ConfigError("gen_mixed requires kind='mixed'")
    rng_coin = _rng_child(config.seed, _CHILD_COIN)
    coins = rng_coin.random(config.n_segments - 1) < 0.5
    # True -> incremental transition, False -> abrupt.
    return _base_stream(config, coins.tolist())


def inject_outliers(stream: LabeledStream, delta: float, seed: int) -> LabeledStream:
    """Add a point-outlier offset at independently selected indices.

    Offsets are drawn per index as Normal(sign*a, b) with a ~ U[0.5, 1],
    b ~ U[0, 0.1] read as a variance (as a std when the stream config says
    so) and an equiprobable sign.
    """
    if not 0 <= delta < 1:
        raise ConfigError("outlier probability must lie in [0, 1)")
    n = len(stream)
    rng = _rng_child(seed, _CHILD_OUTLIER)
    selected = np.flatnonzero(rng.random(n) < delta)
    offsets = np.zeros(n)
    y = stream.y.copy()
    events = list(stream.truth)
    as_std = bool(stream.config and stream.config.noise_param_is_std)
    for t in selected:
        a = rng.uniform(OFFSET_MEAN_LOW, OFFSET_MEAN_HIGH)
        b = rng.uniform(OFFSET_SPREAD_LOW, OFFSET_SPREAD_HIGH)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        spread = b if as_std else math.sqrt(b)
        gamma = rng.normal(sign * a, spread)
        offsets[t] = gamma
        y[t] += gamma
        events.append(GroundTruthEvent(t=int(t), kind=EventKind.OUTLIER))
    events.sort(key=lambda e: (e.t, e.kind.value))
    return LabeledStream(
        X=stream.X,
        y=y,
        truth=events,
        beta_trace=stream.beta_trace,
        config=stream.config,
        offsets=offsets,
    )


def generate(config: StreamConfig) -> LabeledStream:
    """Generate the configured stream, outlier injection included."""
    config.validate()
    if config.kind == "abrupt":
        stream = gen_abrupt(config)
    elif config.kind == "incremental":
        stream = gen_incremental(config)
    else:
        stream = gen_mixed(config)
    if config.outlier_prob > 0:
        stream = inject_outliers(stream, config.outlier_prob, config.seed)
    return stream


# -- CSV interchange ---------------------------------------------------------

STREAM_SCHEMA = "# driftguard-stream v1"
TRUTH_SCHEMA = "# driftguard-truth v1"


def save_stream_csv(stream: LabeledStream, path: str | Path) -> None:
    path = Path(path)
    d = stream.X.shape[1]
    with path.open("w", newline="") as fh:
        fh.write(STREAM_SCHEMA + "\n")
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{j}" for j in range(d)] + ["y"])
        for t in range(len(stream)):
            writer.writerow([t] + [repr(v) for v in stream.X[t]] + [repr(float(stream.y[t]))])


def save_truth_csv(events: Sequence[GroundTruthEvent], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(TRUTH_SCHEMA + "\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "kind"])
        for event in events:
            writer.writerow([event.t, event.kind.value])


def _data_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(line for line in fh if not line.startswith("#")) if row]
    if not rows:
        raise DataError(f"no rows in {path}")
    return rows[0], rows[1:]


def load_stream_csv(path: str | Path) -> list[Sample]:
    """Read the native stream schema: header t,x0..x{d-1},y."""
    header, rows = _data_rows(Path(path))
    if header[:1] != ["t"] or header[-1:] != ["y"] or len(header) < 3:
        raise DataError(
            f"stream file {path} must have columns t,x0..x{{d-1}},y; got {header}"
        )
    samples = []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {i} of {path} has {len(row)} fields, expected {len(header)}")
        samples.append(
            Sample(t=i, x=np.asarray([float(v) for v in row[1:-1]]), y=float(row[-1]))
        )
    return samples


def load_truth_csv(path: str | Path) -> list[GroundTruthEvent]:
    header, rows = _data_rows(Path(path))
    if header != ["t", "kind"]:
        raise DataError(f"truth file {path} must have columns t,kind; got {header}")
    try:
        events = [GroundTruthEvent(t=int(r[0]), kind=EventKind(r[1])) for r in rows]
    except ValueError as exc:
        raise DataError(f"bad truth row in {path}: {exc}") from exc
    return sorted(events, key=lambda e: (e.t, e.kind.value))


def load_csv(
    path: str | Path,
    target_column: str,
    feature_columns: Sequence[str],
) -> list[Sample]:
    """Ingest an arbitrary numeric CSV as a sample stream.

    Rows with a missing or non-numeric value in any selected column are
    dropped; surviving rows are indexed consecutively in file order.
    """
    header, rows = _data_rows(Path(path))
    missing = [c for c in [target_column, *feature_columns] if c not in header]
    if missing:
        raise DataError(f"columns not found in {path}: {missing}")
    target_idx = header.index(target_column)
    feature_idx = [header.index(c) for c in feature_columns]
    samples = []
    for row in rows:
        if len(row) != len(header):
            continue
        try:
            y = float(row[target_idx])
            x = np.asarray([float(row[j]) for j in feature_idx])
        except ValueError:
            continue
        if not (math.isfinite(y) and np.all(np.isfinite(x))):
            continue
        samples.append(Sample(t=len(samples), x=x, y=y))
    if not samples:
        raise DataError(f"no valid rows in {path} after filtering")
    return samples


def clean_variant(config: StreamConfig) -> StreamConfig:
    """The outlier-free twin of a stream config (shares the base signal)."""
    return replace(config, outlier_prob=0.0)
