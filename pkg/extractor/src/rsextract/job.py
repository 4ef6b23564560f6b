"""Extraction job definition, loaded from a JSON manifest."""

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import ExtractorError

KNOWN_CHANNELS = ("clip", "dino", "gte", "scalars")

DEFAULT_GENERATION = {
    "seed": 0,
    "steps": 28,
    "guidance": 7.0,
    "resolution": 1024,
    "checkpoint": "stabilityai/stable-diffusion-3-medium-diffusers",
}

DEFAULT_ENCODERS = {
    "clip": "openai/clip-vit-large-patch14",
    "dino": "facebook/dino-vitb8",
    "gte": "thenlper/gte-large",
}


@dataclass
class ExtractionJob:
    records: Path
    image_root: Path
    output_dir: Path
    channels: tuple = ("clip", "dino", "gte")
    backend: str = "torch"
    batch_size: int = 16
    device: str = "cpu"
    generation: dict = field(default_factory=lambda: dict(DEFAULT_GENERATION))
    encoders: dict = field(default_factory=lambda: dict(DEFAULT_ENCODERS))

    def __post_init__(self):
        unknown = [c for c in self.channels if c not in KNOWN_CHANNELS]
        if unknown:
            raise ExtractorError(
                f"unknown channels {unknown}; expected a subset of {KNOWN_CHANNELS}"
            )
        if self.batch_size < 1:
            raise ExtractorError(f"batch_size must be >= 1, got {self.batch_size}")
        if "seed" not in self.generation:
            raise ExtractorError("generation settings must pin a seed")

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ExtractorError(f"cannot read job {path}: {exc}") from None
        base = path.parent
        generation = dict(DEFAULT_GENERATION)
        generation.update(obj.get("generation", {}))
        encoders = dict(DEFAULT_ENCODERS)
        encoders.update(obj.get("encoders", {}))
        return cls(
            records=base / obj["records"],
            image_root=base / obj.get("image_root", "."),
            output_dir=base / obj.get("output_dir", "out"),
            channels=tuple(obj.get("channels", ("clip", "dino", "gte"))),
            backend=obj.get("backend", "torch"),
            batch_size=int(obj.get("batch_size", 16)),
            device=obj.get("device", "cpu"),
            generation=generation,
            encoders=encoders,
        )

    def settings_dict(self):
        """Reproducibility block embedded in emitted manifests."""
        return {
            "backend": self.backend,
            "generation": dict(sorted(self.generation.items())),
            "encoders": dict(sorted(self.encoders.items())),
        }
