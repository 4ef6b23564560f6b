"""Fixture: a tiny image/caption corpus with a stub-backend job manifest."""

import json

import numpy as np
import pytest
from PIL import Image

from rsextract.records import write_records


def make_corpus(root, n_samples=8, shared_images=0, seed=0):
    """Write images, records, and a job manifest under ``root``.

    ``shared_images`` > 0 makes the first samples reuse image im0, which
    exercises image-keyed deduplication.
    """
    rng = np.random.default_rng(seed)
    images = root / "images"
    images.mkdir(parents=True, exist_ok=True)
    samples = []
    for k in range(n_samples):
        image_id = "im0" if k < shared_images else f"im{k}"
        path = images / f"{image_id}.png"
        if not path.exists():
            pixels = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
            Image.fromarray(pixels, "RGB").save(path, format="PNG")
        samples.append({
            "sample_id": f"s{k}",
            "image_id": image_id,
            "candidate": f"a caption about scene number {k}",
            "references": [f"reference text {k} alpha", f"reference text {k} beta"],
            "human_rating": float(1 + (k % 4)),
        })
    write_records(root / "records.jsonl", samples)
    job = {
        "records": "records.jsonl",
        "image_root": "images",
        "output_dir": "out",
        "channels": ["clip", "dino", "gte"],
        "backend": "stub",
        "batch_size": 4,
        "generation": {"seed": 11, "steps": 2, "resolution": 32},
    }
    job_path = root / "job.json"
    job_path.write_text(json.dumps(job, indent=2), encoding="utf-8")
    return job_path


@pytest.fixture
def corpus(tmp_path):
    return make_corpus(tmp_path)
