"""Benchmark task generators and event-data handling.

Three data sources: the adding task (regression over long sequences), a
synthetic gap-classification task where the class is carried purely by the
interval between two spikes, and externally recorded spike events loaded
from CSV and binned onto the simulation grid.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DataError


# ---------------------------------------------------------------------------
# Adding task


@dataclass
class AddingSample:
    values: np.ndarray   # (T,) uniform [0, 1)
    markers: np.ndarray  # (T,) zeros with exactly two ones
    target: float        # sum of the two marked values

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.markers = np.asarray(self.markers, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape != self.markers.shape:
            raise ContractError("values and markers must be equal-length 1-D arrays")
        if int(self.markers.sum()) != 2:
            raise ContractError("adding sample needs exactly two marked positions")


def gen_adding(timesteps: int, count: int, seed: int) -> list[AddingSample]:
    """Random adding samples; one marker in each half of the sequence."""
    if timesteps < 2 or timesteps % 2 != 0:
        raise ContractError(f"timesteps must be even and >= 2, got {timesteps}")
    if count < 1:
        raise ContractError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    half = timesteps // 2
    samples = []
    for _ in range(count):
        values = rng.uniform(0.0, 1.0, timesteps)
        i1 = int(rng.integers(0, half))
        i2 = int(rng.integers(half, timesteps))
        markers = np.zeros(timesteps)
        markers[i1] = 1.0
        markers[i2] = 1.0
        samples.append(AddingSample(values, markers, float(values[i1] + values[i2])))
    return samples


def encode_adding(sample: AddingSample) -> np.ndarray:
    """Two-channel input sequence (T, 2): channel 0 value, channel 1 marker."""
    return np.column_stack([sample.values, sample.markers])


def adding_dataset(samples: list[AddingSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack samples into batched (n, T, 2) inputs and (n,) targets."""
    x = np.stack([encode_adding(s) for s in samples])
    y = np.array([s.target for s in samples])
    return x, y


def save_adding_csv(samples: list[AddingSample], path: str, seed: int | None = None) -> None:
    lines = []
    if seed is not None:
        lines.append(f"# seed={seed}")
    lines.append(f"# samples={len(samples)} timesteps={len(samples[0].values)}")
    lines.append("value,marker")
    for i, s in enumerate(samples):
        # float() first: numpy scalars repr as np.float64(...), which won't parse back
        lines.append(f"# sample={i} target={float(s.target)!r}")
        for v, m in zip(s.values, s.markers):
            lines.append(f"{float(v)!r},{int(m)}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_adding_csv(path: str) -> list[AddingSample]:
    if not os.path.exists(path):
        raise DataError(f"adding dataset not found: {path}")
    samples = []
    values: list[float] = []
    markers: list[float] = []
    target = None

    def flush():
        if target is not None:
            try:
                samples.append(AddingSample(np.array(values), np.array(markers), target))
            except ContractError as e:
                raise DataError(f"{path}: bad sample {len(samples)}: {e}") from e

    with open(path) as f:
        for ln, raw in enumerate(f, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "target=" in line:
                    flush()
                    values, markers = [], []
                    try:
                        target = float(line.split("target=")[1].split()[0])
                    except (IndexError, ValueError) as e:
                        raise DataError(f"{path}:{ln}: malformed sample header") from e
                continue
            if line == "value,marker":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}:{ln}: expected 'value,marker', got {line!r}")
            try:
                values.append(float(parts[0]))
                markers.append(float(parts[1]))
            except ValueError as e:
                raise DataError(f"{path}:{ln}: non-numeric row {line!r}") from e
    flush()
    if not samples:
        raise DataError(f"{path}: no samples found")
    return samples


# ---------------------------------------------------------------------------
# Spike events


@dataclass
class SpikeEventSet:
    """Timed spike events on integer channels; times live in [0, duration)."""

    events: list = field(default_factory=list)  # (time, channel) pairs
    num_channels: int = 1
    duration: float = 1.0
    label: int | None = None

    def __post_init__(self):
        if self.num_channels < 1:
            raise ContractError("num_channels must be >= 1")
        if self.duration <= 0:
            raise ContractError("duration must be positive")
        self.events = [(float(t), int(c)) for t, c in self.events]
        for t, c in self.events:
            if not (0 <= t < self.duration):
                raise ContractError(f"event time {t} outside [0, {self.duration})")
            if not (0 <= c < self.num_channels):
                raise ContractError(f"event channel {c} outside [0, {self.num_channels})")


def bin_events(events: SpikeEventSet, time_bins: int) -> np.ndarray:
    """Binarised raster (time_bins, channels): 1 where any event lands in the bin."""
    if time_bins < 1:
        raise ContractError("time_bins must be >= 1")
    raster = np.zeros((time_bins, events.num_channels))
    for t, c in events.events:
        # strictly t < duration, but guard the float edge at the last bin
        b = min(int(t * time_bins / events.duration), time_bins - 1)
        raster[b, c] = 1.0
    return raster


def events_dataset(
    sets: list[SpikeEventSet], time_bins: int
) -> tuple[np.ndarray, np.ndarray]:
    """Bin a list of event sets into (n, T, C) rasters and (n,) labels."""
    x = np.stack([bin_events(es, time_bins) for es in sets])
    labels = [es.label for es in sets]
    if any(l is None for l in labels):
        raise DataError("every event set needs a label to form a dataset")
    return x, np.array(labels, dtype=np.int64)


# ---------------------------------------------------------------------------
# Delay-gap classification task


def gen_delay_xor(
    timesteps: int,
    gap_classes: tuple[int, ...],
    count: int,
    seed: int,
    jitter: int = 1,
    num_channels: int = 1,
) -> list[SpikeEventSet]:
    """Pairs of spikes whose temporal gap encodes the class.

    Each sample is two spikes on one random channel separated by the class
    gap plus uniform jitter in [-jitter, +jitter] bins.  Rate and channel
    carry no information; only the interval does.  Class counts are exact
    to within one sample.
    """
    gap_classes = tuple(int(g) for g in gap_classes)
    if len(set(gap_classes)) != len(gap_classes) or len(gap_classes) < 2:
        raise ContractError("gap_classes must be >= 2 distinct gaps")
    if jitter < 0:
        raise ContractError("jitter must be >= 0")
    for g in gap_classes:
        if g - jitter < 1 or g + jitter >= timesteps:
            raise ContractError(
                f"gap {g} with jitter {jitter} does not fit in {timesteps} steps"
            )
    sorted_gaps = sorted(gap_classes)
    for a, b in zip(sorted_gaps, sorted_gaps[1:]):
        if b - a <= 2 * jitter:
            raise ContractError("jitter ranges of adjacent gap classes overlap")
    rng = np.random.default_rng(seed)
    labels = np.array([i % len(gap_classes) for i in range(count)])
    rng.shuffle(labels)
    samples = []
    for lab in labels:
        gap = gap_classes[lab] + (int(rng.integers(-jitter, jitter + 1)) if jitter else 0)
        t0 = int(rng.integers(0, timesteps - gap))
        ch = int(rng.integers(0, num_channels))
        samples.append(
            SpikeEventSet(
                events=[(t0, ch), (t0 + gap, ch)],
                num_channels=num_channels,
                duration=timesteps,
                label=int(lab),
            )
        )
    return samples


# ---------------------------------------------------------------------------
# Event CSV I/O


def save_event_csv(events: SpikeEventSet, path: str) -> None:
    lines = []
    if events.label is not None:
        lines.append(f"# label={events.label}")
    lines.append(f"# channels={events.num_channels} duration={events.duration!r}")
    lines.append("time_bin,channel")
    for t, c in events.events:
        lines.append(f"{t!r},{c}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_event_csv(path: str) -> SpikeEventSet:
    if not os.path.exists(path):
        raise DataError(f"event file not found: {path}")
    label = None
    num_channels = None
    duration = None
    rows = []
    with open(path) as f:
        for ln, raw in enumerate(f, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, _, val = tok.partition("=")
                        if key == "label":
                            label = int(val)
                        elif key == "channels":
                            num_channels = int(val)
                        elif key == "duration":
                            duration = float(val)
                continue
            if line == "time_bin,channel":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}:{ln}: expected 'time_bin,channel', got {line!r}")
            try:
                rows.append((float(parts[0]), int(parts[1])))
            except ValueError as e:
                raise DataError(f"{path}:{ln}: non-numeric row {line!r}") from e
    if num_channels is None or duration is None:
        raise DataError(f"{path}: missing '# channels=... duration=...' header")
    try:
        return SpikeEventSet(rows, num_channels, duration, label)
    except ContractError as e:
        raise DataError(f"{path}: {e}") from e


def save_event_dir(sets: list[SpikeEventSet], directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    width = len(str(max(len(sets) - 1, 1)))
    for i, es in enumerate(sets):
        save_event_csv(es, os.path.join(directory, f"sample_{i:0{width}d}.csv"))


def load_event_dir(directory: str) -> list[SpikeEventSet]:
    if not os.path.isdir(directory):
        raise DataError(f"event directory not found: {directory}")
    # the generator writes an index file next to the samples; skip it
    names = sorted(
        n for n in os.listdir(directory) if n.endswith(".csv") and n != "manifest.csv"
    )
    if not names:
        raise DataError(f"no .csv event files in {directory}")
    return [load_event_csv(os.path.join(directory, n)) for n in names]
