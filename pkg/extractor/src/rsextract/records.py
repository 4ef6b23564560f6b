"""Minimal record-file access (JSON lines, one sample per line)."""

import json

from . import ExtractorError


def load_records(path):
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExtractorError(f"{path}:{lineno}: malformed record: {exc}") from None
            for field in ("sample_id", "image_id", "candidate", "references"):
                if field not in obj:
                    raise ExtractorError(f"{path}:{lineno}: missing field {field!r}")
            samples.append(obj)
    return samples


def write_records(path, samples):
    with open(path, "w", encoding="utf-8") as fh:
        for obj in samples:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
