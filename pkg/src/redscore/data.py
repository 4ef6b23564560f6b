"""Dataset records, embedding tables, manifest loading, and join validation."""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bundle import read_bundle
from .errors import DataError, JoinError

ROLE_IMAGE = "image"
ROLE_CANDIDATE = "candidate"
ROLE_GENERATED_CANDIDATE = "generated-candidate"
ROLE_GENERATED_REFERENCE = "generated-reference"
ROLE_REFERENCE_TEXT = "reference-text"
ROLE_SCALAR = "scalar"

KEY_IMAGE = "image"
KEY_SAMPLE = "sample"
KEY_REFERENCE = "reference"

# key space implied by each role; scalar channels live in the records themselves
ROLE_KEY_SPACE = {
    ROLE_IMAGE: KEY_IMAGE,
    ROLE_CANDIDATE: KEY_SAMPLE,
    ROLE_GENERATED_CANDIDATE: KEY_SAMPLE,
    ROLE_GENERATED_REFERENCE: KEY_IMAGE,
    ROLE_REFERENCE_TEXT: KEY_REFERENCE,
}


def reference_key(image_id, index):
    """Join key for the index-th reference caption of an image."""
    return f"{image_id}#{index}"


@dataclass(frozen=True)
class Sample:
    sample_id: str
    image_id: str
    candidate: str
    references: tuple
    human_rating: float | None = None
    model_tag: str | None = None
    scalar_channels: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.references:
            raise DataError(f"sample {self.sample_id!r}: references must be non-empty")
        if self.human_rating is not None:
            r = self.human_rating
            if not math.isfinite(r) or not (1.0 <= r <= 4.0):
                raise DataError(f"sample {self.sample_id!r}: human_rating {r} outside [1, 4]")
        for name, value in self.scalar_channels.items():
            if not math.isfinite(value):
                raise DataError(f"sample {self.sample_id!r}: scalar channel {name!r} not finite")


@dataclass
class EmbeddingTable:
    """Keyed store of fixed-dimension vectors for one channel."""

    name: str
    dim: int
    entries: dict
    role: str = ROLE_IMAGE
    key_space: str = KEY_IMAGE
    unit_norm: bool = True

    def __getitem__(self, key):
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(f"table {self.name!r} has no key {key!r}") from None

    def __contains__(self, key):
        return key in self.entries

    def __len__(self):
        return len(self.entries)


@dataclass
class Dataset:
    name: str
    samples: list
    tables: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def sample_ids(self):
        return [s.sample_id for s in self.samples]

    def ratings(self):
        """Mapping of sample_id -> human rating for rated samples only."""
        return {s.sample_id: s.human_rating for s in self.samples if s.human_rating is not None}


def _parse_sample(obj, lineno, path):
    try:
        refs = obj["references"]
        if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
            raise DataError(f"{path}:{lineno}: references must be a list of strings")
        rating = obj.get("human_rating")
        return Sample(
            sample_id=obj["sample_id"],
            image_id=obj["image_id"],
            candidate=obj["candidate"],
            references=tuple(refs),
            human_rating=float(rating) if rating is not None else None,
            model_tag=obj.get("model_tag"),
            scalar_channels={k: float(v) for k, v in obj.get("scalar_channels", {}).items()},
        )
    except KeyError as exc:
        raise DataError(f"{path}:{lineno}: missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}:{lineno}: {exc}") from None


def load_records(path):
    """Read a line-delimited record file into a list of Samples."""
    samples = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed record: {exc}") from None
            sample = _parse_sample(obj, lineno, path)
            if sample.sample_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate sample_id {sample.sample_id!r}")
            seen.add(sample.sample_id)
            samples.append(sample)
    return samples


def write_records(path, samples):
    """Write Samples as one JSON object per line (inverse of load_records)."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            obj = {
                "sample_id": s.sample_id,
                "image_id": s.image_id,
                "candidate": s.candidate,
                "references": list(s.references),
            }
            if s.human_rating is not None:
                obj["human_rating"] = s.human_rating
            if s.model_tag is not None:
                obj["model_tag"] = s.model_tag
            if s.scalar_channels:
                obj["scalar_channels"] = dict(sorted(s.scalar_channels.items()))
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def _load_table(spec, base, manifest_path):
    name = spec.get("name")
    role = spec.get("role")
    if role not in ROLE_KEY_SPACE:
        raise DataError(f"{manifest_path}: channel {name!r} has unknown role {role!r}")
    key_space = spec.get("key_space", ROLE_KEY_SPACE[role])
    if key_space != ROLE_KEY_SPACE[role]:
        raise DataError(
            f"{manifest_path}: channel {name!r} key_space {key_space!r} "
            f"inconsistent with role {role!r}"
        )
    bundle_path = base / spec["path"]
    if not bundle_path.exists():
        raise DataError(f"{manifest_path}: bundle {bundle_path} does not exist")
    dim, entries = read_bundle(bundle_path)
    declared = int(spec["dim"])
    if dim != declared:
        raise DataError(
            f"{manifest_path}: channel {name!r} declares dim={declared} "
            f"but bundle {bundle_path.name} has dim={dim}"
        )
    unit_norm = bool(spec.get("unit_norm", True))
    if unit_norm:
        for key, vec in entries.items():
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-3:
                raise DataError(
                    f"{manifest_path}: channel {name!r} key {key!r} has norm "
                    f"{norm:.6f}, expected 1 within 1e-3"
                )
    return EmbeddingTable(
        name=name, dim=dim, entries=entries, role=role, key_space=key_space, unit_norm=unit_norm
    )


def load_dataset(manifest_path):
    """Load a dataset manifest, its record file, and all embedding bundles.

    The manifest is a JSON object naming the record file and, per channel,
    {name, role, key_space, path, dim}; paths are relative to the manifest.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"manifest {manifest_path} does not exist")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: malformed manifest: {exc}") from None
    base = manifest_path.parent
    records_path = base / manifest["records"]
    if not records_path.exists():
        raise DataError(f"{manifest_path}: record file {records_path} does not exist")
    samples = load_records(records_path)
    tables = {}
    for spec in manifest.get("channels", []):
        if spec.get("role") == ROLE_SCALAR:
            continue  # scalar channels ride in the records
        table = _load_table(spec, base, manifest_path)
        if table.name in tables:
            raise DataError(f"{manifest_path}: duplicate channel name {table.name!r}")
        tables[table.name] = table
    return Dataset(
        name=manifest.get("name", manifest_path.stem),
        samples=samples,
        tables=tables,
        provenance=manifest.get("provenance", {}),
    )


def filter_identity_pairs(dataset):
    """Drop samples whose candidate exactly equals any of its references.

    Comparison is case-sensitive string equality after trimming leading and
    trailing whitespace. Returns (filtered dataset, number excluded).
    """
    kept = []
    excluded = 0
    for s in dataset.samples:
        cand = s.candidate.strip()
        if any(cand == ref.strip() for ref in s.references):
            excluded += 1
        else:
            kept.append(s)
    return replace(dataset, samples=kept), excluded


@dataclass
class JoinReport:
    required: tuple
    misses: list  # (sample_id, table_name, key)
    retained: int
    dropped: tuple = ()

    def ok(self):
        return not self.misses


def _required_keys(sample, table):
    if table.key_space == KEY_IMAGE:
        return [sample.image_id]
    if table.key_space == KEY_SAMPLE:
        return [sample.sample_id]
    return [reference_key(sample.image_id, i) for i in range(len(sample.references))]


def validate_join(dataset, required_channels, mode="strict"):
    """Check that every sample can be joined to every required channel.

    Returns (dataset, JoinReport). In strict mode any missing key raises
    JoinError; in skip mode samples with misses are dropped and reported.
    """
    if mode not in ("strict", "skip"):
        raise ValueError(f"unknown join mode {mode!r}")
    misses = []
    bad_samples = set()
    for name in required_channels:
        table = dataset.tables.get(name)
        if table is None:
            raise DataError(f"dataset {dataset.name!r} has no channel table {name!r}")
        for sample in dataset.samples:
            for key in _required_keys(sample, table):
                if key not in table:
                    misses.append((sample.sample_id, name, key))
                    bad_samples.add(sample.sample_id)
    if mode == "strict":
        report = JoinReport(tuple(required_channels), misses, retained=len(dataset.samples))
        if misses:
            raise JoinError(report)
        return dataset, report
    kept = [s for s in dataset.samples if s.sample_id not in bad_samples]
    report = JoinReport(
        tuple(required_channels),
        misses,
        retained=len(kept),
        dropped=tuple(sorted(bad_samples)),
    )
    return replace(dataset, samples=kept), report
