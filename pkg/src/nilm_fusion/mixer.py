"""Random-mixture generation of synthetic aggregated samples.

Aggregates are Kirchhoff superpositions: the currents of randomly chosen
records (a random class combination, each class duplicated a random number
of times) are summed elementwise in ascending record-index order, so every
sample is exactly reproducible from its source indices.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgumentError
from .ingest import LabeledDataset

CURRENTS_FILE = "currents.bin"
VOLTAGES_FILE = "voltages.bin"
SIDECAR_FILE = "sidecar.json"


@dataclass(frozen=True)
class AggregateSample:
    """One synthetic mixture with its multi-hot label vector and provenance."""

    current: np.ndarray
    voltage: np.ndarray
    labels: np.ndarray
    k: int
    sources: tuple[int, ...]

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.k != int(labels.sum()):
            raise InvalidArgumentError("k must equal the number of active labels")
        if not 1 <= self.k <= labels.size:
            raise InvalidArgumentError("k out of range")
        if len(self.current) != len(self.voltage):
            raise InvalidArgumentError("current and voltage lengths differ")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sources", tuple(int(i) for i in self.sources))


@dataclass(frozen=True)
class MixConfig:
    """Knobs of the random mixture generator."""

    n_min: int = 1
    n_max: int = 1
    f_min: int = 1
    f_max: int = 10
    samples_per_k: int = 100
    rng_seed: int = 0
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if not 1 <= self.n_min <= self.n_max:
            raise InvalidArgumentError(
                f"need 1 <= n_min <= n_max, got n_min={self.n_min}, n_max={self.n_max}"
            )
        if not 1 <= self.f_min <= self.f_max:
            raise InvalidArgumentError(
                f"need 1 <= f_min <= f_max, got f_min={self.f_min}, f_max={self.f_max}"
            )
        if self.samples_per_k < 1:
            raise InvalidArgumentError("samples_per_k must be >= 1")
        if self.noise_std < 0:
            raise InvalidArgumentError("noise_std must be >= 0")


def build_class_index(dataset: LabeledDataset) -> dict[str, list[int]]:
    """Map each class to the indices of its records."""
    if len(dataset) == 0:
        raise InvalidArgumentError("dataset is empty")
    index: dict[str, list[int]] = {}
    for i, rec in enumerate(dataset.records):
        index.setdefault(rec.label, []).append(i)
    return index


def sample_combination(classes, n_comb: int, rng: np.random.Generator) -> tuple[str, ...]:
    """Draw a uniformly random class subset of size ``n_comb`` without replacement."""
    pool = sorted(classes)
    if not 1 <= n_comb <= len(pool):
        raise InvalidArgumentError(f"n_comb={n_comb} out of range for {len(pool)} classes")
    chosen = rng.choice(len(pool), size=n_comb, replace=False)
    return tuple(pool[i] for i in sorted(chosen))


def mix(
    dataset: LabeledDataset,
    index: dict[str, list[int]],
    combination,
    f_min: int,
    f_max: int,
    rng: np.random.Generator,
    noise_std: float = 0.0,
) -> AggregateSample:
    """Superpose randomly drawn records of the given classes into one aggregate.

    Per class the duplication factor f ~ Uniform{f_min..f_max}; records are
    drawn without replacement unless the class bucket is smaller than f.
    The voltage reference is the lowest-index constituent's voltage.
    """
    chosen: list[int] = []
    for cls in sorted(combination):
        bucket = index.get(cls)
        if not bucket:
            raise InvalidArgumentError(f"class {cls!r} has no records in the index")
        f = int(rng.integers(f_min, f_max + 1))
        replace = f > len(bucket)
        picks = rng.choice(len(bucket), size=f, replace=replace)
        chosen.extend(bucket[p] for p in picks)
    chosen.sort()

    length = len(dataset.records[chosen[0]])
    current = np.zeros(length)
    for idx in chosen:
        rec = dataset.records[idx]
        if len(rec) != length:
            raise InvalidArgumentError(
                f"record {idx} has length {len(rec)}, expected {length}"
            )
        current += rec.current
    if noise_std > 0:
        current += rng.normal(0.0, noise_std, length)

    labels = np.zeros(len(dataset.class_names), dtype=np.uint8)
    active = set(combination)
    for ci, name in enumerate(dataset.class_names):
        if name in active:
            labels[ci] = 1
    voltage = dataset.records[chosen[0]].voltage
    return AggregateSample(current, voltage, labels, int(labels.sum()), tuple(chosen))


def _generate_for_k(dataset: LabeledDataset, config: MixConfig, k: int) -> list[AggregateSample]:
    index = build_class_index(dataset)
    rng = np.random.default_rng([config.rng_seed, k])
    samples = []
    for _ in range(config.samples_per_k):
        combination = sample_combination(dataset.class_names, k, rng)
        samples.append(
            mix(dataset, index, combination, config.f_min, config.f_max, rng, config.noise_std)
        )
    return samples


def generate_dataset(
    dataset: LabeledDataset, config: MixConfig, n_workers: int = 1
) -> list[AggregateSample]:
    """Produce samples_per_k aggregates for every k in [n_min, n_max].

    Each k uses an independently derived seed (rng_seed, k), so the output is
    identical whether k values run sequentially or on worker processes.
    """
    n_c = len(dataset.class_names)
    if config.n_max > n_c:
        raise InvalidArgumentError(f"n_max={config.n_max} exceeds the {n_c} available classes")
    ks = range(config.n_min, config.n_max + 1)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(_generate_for_k, [dataset] * len(ks), [config] * len(ks), ks))
    else:
        chunks = [_generate_for_k(dataset, config, k) for k in ks]
    return [sample for chunk in chunks for sample in chunk]


def split_records(
    dataset: LabeledDataset, fractions=(0.7, 0.1, 0.2), seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Stratified record-level split, applied before mixing so no source
    record leaks across splits."""
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidArgumentError("fractions must be three values summing to 1")
    index = build_class_index(dataset)
    parts: tuple[list[int], list[int], list[int]] = ([], [], [])
    for ci, cls in enumerate(sorted(index)):
        rng = np.random.default_rng([seed, 0x5F11, ci])
        order = rng.permutation(index[cls])
        n = order.size
        n_train = int(np.floor(fractions[0] * n))
        n_val = int(np.floor(fractions[1] * n))
        parts[0].extend(order[:n_train])
        parts[1].extend(order[n_train : n_train + n_val])
        parts[2].extend(order[n_train + n_val :])
    return tuple(dataset.subset(sorted(p)) for p in parts)  # type: ignore[return-value]


@dataclass(frozen=True)
class AggregateSet:
    """Dense matrix view over a list of aggregates, with persistence."""

    currents: np.ndarray
    voltages: np.ndarray
    labels: np.ndarray
    k: np.ndarray
    class_names: tuple[str, ...]
    sample_rate: float
    sources: tuple[tuple[int, ...], ...] = field(default=())

    @classmethod
    def from_samples(
        cls, samples: list[AggregateSample], class_names, sample_rate: float
    ) -> "AggregateSet":
        if not samples:
            raise InvalidArgumentError("no samples to stack")
        currents = np.stack([s.current for s in samples])
        voltages = np.stack([s.voltage for s in samples])
        labels = np.stack([s.labels for s in samples]).astype(np.uint8)
        k = np.asarray([s.k for s in samples], dtype=np.int64)
        sources = tuple(s.sources for s in samples)
        return cls(currents, voltages, labels, k, tuple(class_names), float(sample_rate), sources)

    def __len__(self) -> int:
        return int(self.currents.shape[0])

    @property
    def window_len(self) -> int:
        return int(self.currents.shape[1])

    def save(self, path, extra: dict | None = None) -> None:
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        (root / CURRENTS_FILE).write_bytes(
            np.ascontiguousarray(self.currents, dtype="<f8").tobytes()
        )
        (root / VOLTAGES_FILE).write_bytes(
            np.ascontiguousarray(self.voltages, dtype="<f8").tobytes()
        )
        sidecar = {
            "format": "nilm-fusion-aggregates",
            "version": 1,
            "n_samples": len(self),
            "window_len": self.window_len,
            "class_names": list(self.class_names),
            "sample_rate": self.sample_rate,
            "labels": self.labels.astype(int).tolist(),
            "k": self.k.astype(int).tolist(),
            "sources": [list(s) for s in self.sources],
        }
        if extra:
            sidecar.update(extra)
        (root / SIDECAR_FILE).write_text(json.dumps(sidecar, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "AggregateSet":
        root = Path(path)
        sidecar_path = root / SIDECAR_FILE
        if not sidecar_path.exists():
            raise DataFormatError(f"missing sidecar: {sidecar_path}")
        meta = json.loads(sidecar_path.read_text())
        n, width = int(meta["n_samples"]), int(meta["window_len"])
        currents = np.frombuffer((root / CURRENTS_FILE).read_bytes(), dtype="<f8")
        voltages = np.frombuffer((root / VOLTAGES_FILE).read_bytes(), dtype="<f8")
        if currents.size != n * width or voltages.size != n * width:
            raise DataFormatError(f"{root}: binary payload does not match sidecar shape")
        return cls(
            currents.reshape(n, width).astype(np.float64),
            voltages.reshape(n, width).astype(np.float64),
            np.asarray(meta["labels"], dtype=np.uint8),
            np.asarray(meta["k"], dtype=np.int64),
            tuple(meta["class_names"]),
            float(meta["sample_rate"]),
            tuple(tuple(s) for s in meta.get("sources", [])),
        )
