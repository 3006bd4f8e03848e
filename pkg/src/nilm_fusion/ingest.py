"""Load PLAID-format recordings and synthesize appliance signatures.

On-disk convention: one two-column CSV per recording (header ``current,voltage``,
header optional on read) plus a JSON manifest, a list of
``{"file": ..., "label": ..., "sample_rate": ...}`` entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgumentError
from .signals import DEFAULT_MAINS_HZ, WaveformRecord, extract_windows, resample

DEFAULT_SAMPLE_RATE = 30_000.0
# US residential mains, 120 V RMS.
DEFAULT_VOLTAGE_AMPLITUDE = 120.0 * np.sqrt(2.0)

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class LabeledDataset:
    """A set of per-appliance records sharing one sample rate."""

    records: tuple[WaveformRecord, ...]
    class_names: tuple[str, ...]
    sample_rate: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        known = set(self.class_names)
        for rec in self.records:
            if rec.label not in known:
                raise InvalidArgumentError(f"record label {rec.label!r} not in class_names")
            if rec.sample_rate != self.sample_rate:
                raise InvalidArgumentError(
                    f"record at {rec.sample_rate} Hz does not match dataset "
                    f"rate {self.sample_rate} Hz"
                )

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, indices) -> "LabeledDataset":
        recs = tuple(self.records[i] for i in indices)
        return LabeledDataset(recs, self.class_names, self.sample_rate)


@dataclass(frozen=True)
class SignatureSpec:
    """Parametric stand-in for one appliance class's current signature."""

    class_name: str
    fundamental_amplitude: float
    # (harmonic order, amplitude relative to fundamental, phase offset in rad)
    harmonic_profile: tuple[tuple[int, float, float], ...]
    power_factor_angle: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        profile = tuple((int(h), float(a), float(p)) for h, a, p in self.harmonic_profile)
        object.__setattr__(self, "harmonic_profile", profile)
        for order, rel, _ in profile:
            if order < 1:
                raise InvalidArgumentError(f"harmonic order {order} must be >= 1")
            if rel < 0:
                raise InvalidArgumentError(f"relative amplitude {rel} must be >= 0")


@dataclass(frozen=True)
class SignatureBank:
    """A named collection of signature specs forming a synthetic class set."""

    name: str
    classes: tuple[SignatureSpec, ...]
    mains_hz: float = DEFAULT_MAINS_HZ
    voltage_amplitude: float = DEFAULT_VOLTAGE_AMPLITUDE


def _parse_two_column_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    current: list[float] = []
    voltage: list[float] = []
    with open(path, "r", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if lineno == 1 and line.lower().replace(" ", "") == "current,voltage":
                continue
            cells = line.split(",")
            if len(cells) != 2:
                raise DataFormatError(f"{path}, line {lineno}: expected 2 columns, got {len(cells)}")
            try:
                current.append(float(cells[0]))
                voltage.append(float(cells[1]))
            except ValueError:
                raise DataFormatError(f"{path}, line {lineno}: non-numeric cell in {line!r}") from None
    if len(current) < 2:
        raise DataFormatError(f"{path}: fewer than 2 samples")
    return np.asarray(current), np.asarray(voltage)


def load_plaid_csv(
    path,
    class_map: dict[str, str] | None = None,
    manifest_name: str = MANIFEST_NAME,
    default_sample_rate: float = DEFAULT_SAMPLE_RATE,
) -> LabeledDataset:
    """Load every manifest entry under ``path`` into a LabeledDataset.

    ``class_map`` optionally maps raw manifest labels to canonical class
    names; a label missing from the map is rejected.
    """
    root = Path(path)
    manifest_path = root / manifest_name
    if not manifest_path.exists():
        raise DataFormatError(f"manifest not found: {manifest_path}")
    try:
        entries = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{manifest_path}: invalid JSON ({exc})") from None
    if not isinstance(entries, list) or not entries:
        raise DataFormatError(f"{manifest_path}: expected a non-empty JSON array")

    records = []
    rate: float | None = None
    for entry in entries:
        try:
            fname, label = entry["file"], str(entry["label"])
        except (TypeError, KeyError):
            raise DataFormatError(f"{manifest_path}: entry {entry!r} needs 'file' and 'label'") from None
        if class_map is not None:
            if label not in class_map:
                raise DataFormatError(f"{manifest_path}: unknown label {label!r} for file {fname!r}")
            label = class_map[label]
        entry_rate = float(entry.get("sample_rate", default_sample_rate))
        if rate is None:
            rate = entry_rate
        elif entry_rate != rate:
            raise DataFormatError(
                f"{manifest_path}: mixed sample rates ({entry_rate} vs {rate})"
            )
        current, voltage = _parse_two_column_csv(root / fname)
        records.append(WaveformRecord(voltage, current, entry_rate, label))

    class_names = tuple(sorted({rec.label for rec in records}))
    return LabeledDataset(tuple(records), class_names, float(rate))


def save_dataset(dataset: LabeledDataset, path, manifest_name: str = MANIFEST_NAME) -> None:
    """Write a dataset in the canonical CSV + manifest layout (round-trip safe)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, rec in enumerate(dataset.records):
        fname = f"rec_{i:05d}.csv"
        with open(root / fname, "w", newline="") as fh:
            fh.write("current,voltage\n")
            for c, v in zip(rec.current, rec.voltage):
                fh.write(f"{c:.17g},{v:.17g}\n")
        entries.append({"file": fname, "label": rec.label, "sample_rate": rec.sample_rate})
    (root / manifest_name).write_text(json.dumps(entries, indent=1, sort_keys=True) + "\n")


def synth_signature(
    spec: SignatureSpec,
    duration: float,
    sample_rate: float,
    rng_seed: int,
    mains_hz: float = DEFAULT_MAINS_HZ,
    voltage_amplitude: float = DEFAULT_VOLTAGE_AMPLITUDE,
) -> WaveformRecord:
    """Generate one synthetic record: ideal mains voltage plus a harmonic current.

    The current is the spec's harmonic series time-shifted by the power factor
    angle, with optional additive Gaussian noise. Deterministic for a fixed seed.
    """
    if not duration > 0:
        raise InvalidArgumentError("duration must be positive")
    if not sample_rate > 0:
        raise InvalidArgumentError("sample_rate must be positive")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise InvalidArgumentError("duration too short for 2 samples")
    t = np.arange(n) / sample_rate
    omega_t = 2.0 * np.pi * mains_hz * t
    voltage = voltage_amplitude * np.sin(omega_t)
    shifted = omega_t - spec.power_factor_angle
    current = np.zeros(n)
    for order, rel, phase in spec.harmonic_profile:
        current += rel * np.sin(order * shifted + phase)
    current *= spec.fundamental_amplitude
    if spec.noise_std > 0:
        rng = np.random.default_rng(rng_seed)
        current = current + rng.normal(0.0, spec.noise_std, n)
    return WaveformRecord(voltage, current, sample_rate, spec.class_name)


def _bank_from_dict(name: str, payload: dict) -> SignatureBank:
    classes = tuple(
        SignatureSpec(
            class_name=c["class_name"],
            fundamental_amplitude=float(c["fundamental_amplitude"]),
            harmonic_profile=tuple(tuple(h) for h in c["harmonic_profile"]),
            power_factor_angle=float(c.get("power_factor_angle", 0.0)),
            noise_std=float(c.get("noise_std", 0.0)),
        )
        for c in payload["classes"]
    )
    return SignatureBank(
        name=name,
        classes=classes,
        mains_hz=float(payload.get("mains_hz", DEFAULT_MAINS_HZ)),
        voltage_amplitude=float(payload.get("voltage_amplitude", DEFAULT_VOLTAGE_AMPLITUDE)),
    )


def load_signature_bank(name_or_path) -> SignatureBank:
    """Load a shipped bank by name (``desk8``, ``plaid15``) or a JSON file by path."""
    as_path = Path(name_or_path)
    if as_path.suffix == ".json" and as_path.exists():
        payload = json.loads(as_path.read_text())
        return _bank_from_dict(as_path.stem, payload)
    resource = resources.files("nilm_fusion.data") / f"bank_{name_or_path}.json"
    if not resource.is_file():
        raise DataFormatError(f"unknown signature bank {name_or_path!r}")
    payload = json.loads(resource.read_text())
    return _bank_from_dict(str(name_or_path), payload)


def build_synthetic_dataset(
    bank: SignatureBank,
    records_per_class: int,
    duration: float,
    sample_rate: float,
    seed: int,
    amplitude_jitter: float = 0.1,
) -> LabeledDataset:
    """Synthesize a labeled dataset from a bank, with per-record amplitude jitter."""
    if records_per_class < 1:
        raise InvalidArgumentError("records_per_class must be >= 1")
    if not 0 <= amplitude_jitter < 1:
        raise InvalidArgumentError("amplitude_jitter must be in [0, 1)")
    classes = sorted(bank.classes, key=lambda s: s.class_name)
    records = []
    for ci, spec in enumerate(classes):
        for ri in range(records_per_class):
            rng = np.random.default_rng([seed, ci, ri])
            factor = 1.0 + amplitude_jitter * rng.uniform(-1.0, 1.0)
            jittered = replace(spec, fundamental_amplitude=spec.fundamental_amplitude * factor)
            rec_seed = int(rng.integers(0, 2**63 - 1))
            records.append(
                synth_signature(
                    jittered,
                    duration,
                    sample_rate,
                    rec_seed,
                    mains_hz=bank.mains_hz,
                    voltage_amplitude=bank.voltage_amplitude,
                )
            )
    class_names = tuple(spec.class_name for spec in classes)
    return LabeledDataset(tuple(records), class_names, float(sample_rate))


def resample_dataset(dataset: LabeledDataset, target_rate: float) -> LabeledDataset:
    recs = tuple(resample(rec, target_rate) for rec in dataset.records)
    return LabeledDataset(recs, dataset.class_names, float(target_rate))


def window_dataset(
    dataset: LabeledDataset,
    periods_per_window: int,
    mains_hz: float = DEFAULT_MAINS_HZ,
) -> LabeledDataset:
    """Replace every record by its crossing-aligned windows."""
    windows: list[WaveformRecord] = []
    for rec in dataset.records:
        windows.extend(extract_windows(rec, periods_per_window, mains_hz))
    if not windows:
        raise InvalidArgumentError("no record is long enough for a single window")
    return LabeledDataset(tuple(windows), dataset.class_names, dataset.sample_rate)
