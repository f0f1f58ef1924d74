"""Per-node physical signal traces and per-time-step observation frames.

A trace is one node's pressure time series of length T*M samples.  Traces
are either ingested from a CSV trace file or synthesized from a shared
latent process (diurnal waveform plus a random walk) so that two nodes see
strongly correlated signals while a third party's view can be decorrelated
by a configurable amount.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np


class TraceFormatError(ValueError):
    """Raised for malformed trace files; carries row/column context."""

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column!r})" if column else ")")
        super().__init__(message + where)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class Normalization:
    """Per-node scaling range used to map raw samples into [0, 1]."""

    min: float
    max: float

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max) and self.min < self.max):
            raise ValueError(f"need finite min < max, got [{self.min}, {self.max}]")


@dataclass(frozen=True)
class PressureTrace:
    """One node's signal time series (pressure in psi)."""

    node_id: str
    samples: np.ndarray
    sample_interval: float = 19.0  # seconds between samples, informational

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError(f"trace {self.node_id!r} must be a non-empty 1-D series")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"trace {self.node_id!r} contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class SignalFrame:
    """The M signal values one node observes during time step t."""

    ts_index: int
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.ts_index < 1:
            raise ValueError(f"ts_index must be >= 1, got {self.ts_index}")
        if values.ndim != 1 or values.size == 0 or not np.all(np.isfinite(values)):
            raise ValueError("frame values must be a finite non-empty vector")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ScenarioConfig:
    """Which nodes play which role, episode shape, and per-node scaling."""

    alice_node: str
    bob_node: str
    eve_node: str
    M: int
    T: int
    normalization: dict[str, Normalization] = field(default_factory=dict)

    def __post_init__(self):
        if self.M < 2 or self.T < 1:
            raise ValueError(f"need M >= 2 and T >= 1, got M={self.M}, T={self.T}")
        nodes = (self.alice_node, self.bob_node, self.eve_node)
        if len(set(nodes)) != 3:
            raise ValueError(f"node ids must be distinct, got {nodes}")

    @property
    def nodes(self) -> tuple[str, str, str]:
        return (self.alice_node, self.bob_node, self.eve_node)

    @property
    def samples_per_episode(self) -> int:
        return self.T * self.M

    def stats_for(self, node_id: str) -> Normalization:
        try:
            return self.normalization[node_id]
        except KeyError:
            raise KeyError(f"no normalization stats for node {node_id!r}") from None

    def with_normalization(self, traces: dict[str, PressureTrace]) -> "ScenarioConfig":
        """Fit per-node min/max from the given traces."""
        stats = {
            node: Normalization(float(tr.samples.min()), float(tr.samples.max()))
            for node, tr in traces.items()
        }
        return replace(self, normalization=stats)


@dataclass(frozen=True)
class SynthParams:
    """Knobs for the synthetic signal generator.

    Every node observes ``offset + gain * latent + local noise`` where the
    latent is a sinusoid (random phase) riding on a Gaussian random walk.
    Alice and Bob share one latent; Eve's latent blends the shared one with
    an independent one according to ``eve_decorrelation`` (0 = same signal,
    1 = statistically unrelated signal).
    """

    period: float = 380.0
    amplitude: float = 1.0
    sigma_shared: float = 1.0
    sigma_local: float = 0.02
    eve_decorrelation: float = 1.0
    gains: dict[str, float] = field(default_factory=dict)
    offsets: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.sigma_shared < 0 or self.sigma_local < 0:
            raise ValueError("noise scales must be non-negative")
        if not 0.0 <= self.eve_decorrelation <= 1.0:
            raise ValueError(
                f"eve_decorrelation must be in [0, 1], got {self.eve_decorrelation}"
            )
        if self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")


_CSV_HEADER = ("node_id", "sample_index", "value")


def load_traces(path, config: ScenarioConfig) -> dict[str, PressureTrace]:
    """Read a trace CSV and return one trace per node.

    Every node in the file must supply exactly ``T * M`` samples with
    contiguous sample indices starting at 0; the three configured nodes
    must be present.
    """
    per_node: dict[str, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != _CSV_HEADER:
            raise TraceFormatError(
                f"expected header {','.join(_CSV_HEADER)}, got {header}", row=1
            )
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise TraceFormatError(f"expected 3 columns, got {len(row)}", row=row_no)
            node = row[0].strip()
            if not node:
                raise TraceFormatError("empty node id", row=row_no, column="node_id")
            try:
                idx = int(row[1])
            except ValueError:
                raise TraceFormatError(
                    f"non-integer sample index {row[1]!r}", row=row_no, column="sample_index"
                ) from None
            try:
                value = float(row[2])
            except ValueError:
                raise TraceFormatError(
                    f"non-numeric value {row[2]!r}", row=row_no, column="value"
                ) from None
            if not np.isfinite(value):
                raise TraceFormatError(
                    f"non-finite value {row[2]!r}", row=row_no, column="value"
                )
            samples = per_node.setdefault(node, {})
            if idx in samples:
                raise TraceFormatError(
                    f"duplicate sample index {idx} for node {node!r}",
                    row=row_no,
                    column="sample_index",
                )
            samples[idx] = value

    for node in config.nodes:
        if node not in per_node:
            raise TraceFormatError(f"node {node!r} not present in trace file")

    expected = config.samples_per_episode
    traces = {}
    for node, samples in per_node.items():
        if len(samples) != expected:
            raise TraceFormatError(
                f"node {node!r} has {len(samples)} samples, expected exactly {expected}"
            )
        missing = [i for i in range(expected) if i not in samples]
        if missing:
            raise TraceFormatError(
                f"node {node!r} is missing sample index {missing[0]}",
                column="sample_index",
            )
        values = np.array([samples[i] for i in range(expected)])
        traces[node] = PressureTrace(node_id=node, samples=values)
    return traces


def write_traces(path, traces: dict[str, PressureTrace]) -> None:
    """Write traces as CSV; float repr keeps the round-trip bit-exact."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for node in sorted(traces):
            for idx, value in enumerate(traces[node].samples):
                writer.writerow([node, idx, repr(float(value))])


def synth_traces(
    config: ScenarioConfig, gen: SynthParams, seed
) -> dict[str, PressureTrace]:
    """Generate correlated per-node traces of length ``T * M``.

    The Alice/Bob channel never depends on ``eve_decorrelation``: the
    independent latent is always drawn, only its mixing weight changes.
    """
    n = config.samples_per_episode
    rng = np.random.default_rng(seed)
    shared = _latent(rng, n, gen)
    independent = _latent(rng, n, gen)
    d = gen.eve_decorrelation
    latents = {
        config.alice_node: shared,
        config.bob_node: shared,
        config.eve_node: (1.0 - d) * shared + d * independent,
    }
    traces = {}
    for node in config.nodes:
        gain = gen.gains.get(node, 1.0)
        offset = gen.offsets.get(node, 0.0)
        noise = rng.normal(0.0, gen.sigma_local, size=n)
        traces[node] = PressureTrace(node_id=node, samples=offset + gain * latents[node] + noise)
    return traces


def _latent(rng: np.random.Generator, n: int, gen: SynthParams) -> np.ndarray:
    phase = rng.uniform(0.0, 2.0 * np.pi)
    wave = gen.amplitude * np.sin(2.0 * np.pi * np.arange(n) / gen.period + phase)
    walk = np.cumsum(rng.normal(0.0, gen.sigma_shared, size=n))
    return wave + walk


def frame(trace: PressureTrace, t: int, m: int) -> SignalFrame:
    """Slice samples ``(t-1)*m .. t*m`` (1-based time steps)."""
    if m < 1:
        raise ValueError(f"frame length must be >= 1, got {m}")
    n_steps = len(trace) // m
    if not 1 <= t <= n_steps:
        raise ValueError(
            f"time step {t} out of range: trace {trace.node_id!r} holds steps 1..{n_steps}"
        )
    return SignalFrame(ts_index=t, values=trace.samples[(t - 1) * m : t * m])


def normalize(fr: SignalFrame, stats: Normalization) -> np.ndarray:
    """Map frame values into [0, 1] by min/max scaling; out-of-range clamps."""
    scaled = (fr.values - stats.min) / (stats.max - stats.min)
    return np.clip(scaled, 0.0, 1.0)
