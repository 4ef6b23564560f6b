"""Extraction operations: encoders -> EVB bundles, cycle image generation,
scalar channel computation, and the emitted scorer manifest."""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from . import CLIP_DIM, DINO_DIM, GTE_DIM, ExtractorError
from .backends import get_backend
from .evb import write_bundle
from .records import load_records, write_records

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".webp")


def _image_path(job, image_id):
    for ext in IMAGE_EXTENSIONS:
        candidate = job.image_root / f"{image_id}{ext}"
        if candidate.exists():
            return candidate
    raise ExtractorError(f"no image file for {image_id!r} under {job.image_root}")


def _unique_images(samples):
    seen = {}
    for s in samples:
        seen.setdefault(s["image_id"], s)
    return list(seen)


def extract_clip(job, samples, backend=None, suffix=""):
    """CLIP image and candidate-caption bundles (dim 768, unit-norm)."""
    backend = backend or get_backend(job)
    image_ids = _unique_images(samples)
    image_vecs = backend.encode_clip_images([_image_path(job, i) for i in image_ids])
    text_vecs = backend.encode_clip_texts([s["candidate"] for s in samples])
    out = job.output_dir
    paths = {
        "clip_image": out / f"clip_image{suffix}.evb",
        "clip_candidate": out / f"clip_candidate{suffix}.evb",
    }
    write_bundle(paths["clip_image"], CLIP_DIM, dict(zip(image_ids, image_vecs)))
    write_bundle(
        paths["clip_candidate"], CLIP_DIM,
        {s["sample_id"]: v for s, v in zip(samples, text_vecs)},
    )
    return paths


def generate_cycle_images(job, samples, backend=None):
    """One proxy image per candidate caption (sample-keyed) and per
    designated first reference caption (image-keyed).

    Deterministic for a fixed seed and settings; failures are recorded
    in the manifest and the job continues (missing entries surface in
    the scorer's strict join). Returns the generation manifest path.
    """
    backend = backend or get_backend(job)
    gen_root = job.output_dir / "generated"
    cand_dir = gen_root / "candidate"
    ref_dir = gen_root / "reference"
    cand_dir.mkdir(parents=True, exist_ok=True)
    ref_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "settings": job.settings_dict(),
        "files": {"candidate": {}, "reference": {}},
        "failures": [],
    }
    for s in samples:
        key = s["sample_id"]
        path = cand_dir / f"{key}.png"
        try:
            backend.generate_image(s["candidate"], f"candidate:{key}", path)
            manifest["files"]["candidate"][key] = str(path.relative_to(job.output_dir))
        except Exception as exc:  # record and continue
            manifest["failures"].append({"key": key, "error": str(exc)})
    for image_id, sample in _first_reference_per_image(samples).items():
        path = ref_dir / f"{image_id}.png"
        try:
            backend.generate_image(sample["references"][0], f"reference:{image_id}", path)
            manifest["files"]["reference"][image_id] = str(path.relative_to(job.output_dir))
        except Exception as exc:
            manifest["failures"].append({"key": image_id, "error": str(exc)})
    manifest_path = gen_root / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


def _first_reference_per_image(samples):
    per_image = {}
    for s in samples:
        per_image.setdefault(s["image_id"], s)
    return per_image


def extract_dino(job, samples, backend=None, suffix=""):
    """DINO bundles for original, generated-candidate, and
    generated-reference images (dim 768, [CLS], unit-norm)."""
    backend = backend or get_backend(job)
    out = job.output_dir
    cand_dir = out / "generated" / "candidate"
    ref_dir = out / "generated" / "reference"
    image_ids = _unique_images(samples)
    paths = {}

    orig_vecs = backend.encode_dino_images([_image_path(job, i) for i in image_ids])
    paths["dino_image"] = out / f"dino_image{suffix}.evb"
    write_bundle(paths["dino_image"], DINO_DIM, dict(zip(image_ids, orig_vecs)))

    cand_files = [(s["sample_id"], cand_dir / f"{s['sample_id']}.png") for s in samples]
    missing = [k for k, p in cand_files if not p.exists()]
    if missing:
        raise ExtractorError(
            f"{len(missing)} generated candidate images missing (e.g. {missing[0]!r}); "
            "run generation first"
        )
    cand_vecs = backend.encode_dino_images([p for _, p in cand_files])
    paths["dino_generated_candidate"] = out / f"dino_generated_candidate{suffix}.evb"
    write_bundle(
        paths["dino_generated_candidate"], DINO_DIM,
        {k: v for (k, _), v in zip(cand_files, cand_vecs)},
    )

    ref_files = [(i, ref_dir / f"{i}.png") for i in image_ids]
    missing = [k for k, p in ref_files if not p.exists()]
    if missing:
        raise ExtractorError(
            f"{len(missing)} generated reference images missing (e.g. {missing[0]!r}); "
            "run generation first"
        )
    ref_vecs = backend.encode_dino_images([p for _, p in ref_files])
    paths["dino_generated_reference"] = out / f"dino_generated_reference{suffix}.evb"
    write_bundle(
        paths["dino_generated_reference"], DINO_DIM,
        {k: v for (k, _), v in zip(ref_files, ref_vecs)},
    )
    return paths


def extract_gte(job, samples, backend=None, suffix=""):
    """gte-large bundles: candidate captions (sample-keyed) and every
    reference caption (keyed image_id#index), dim 1024."""
    backend = backend or get_backend(job)
    for s in samples:
        if not s["candidate"].strip():
            raise ExtractorError(f"sample {s['sample_id']!r} has an empty candidate caption")
    cand_vecs = backend.encode_gte_texts([s["candidate"] for s in samples])
    ref_keys, ref_texts = [], []
    for image_id, sample in _first_reference_per_image(samples).items():
        for idx, ref in enumerate(sample["references"]):
            ref_keys.append(f"{image_id}#{idx}")
            ref_texts.append(ref)
    ref_vecs = backend.encode_gte_texts(ref_texts)
    out = job.output_dir
    paths = {
        "gte_candidate": out / f"gte_candidate{suffix}.evb",
        "gte_reference": out / f"gte_reference{suffix}.evb",
    }
    write_bundle(
        paths["gte_candidate"], GTE_DIM,
        {s["sample_id"]: v for s, v in zip(samples, cand_vecs)},
    )
    write_bundle(paths["gte_reference"], GTE_DIM, dict(zip(ref_keys, ref_vecs)))
    return paths


def token_f1(candidate, references):
    """BERTScore-style proxy: best token-multiset F1 against the references."""
    from collections import Counter

    cand = Counter(candidate.lower().split())
    best = 0.0
    for ref in references:
        r = Counter(ref.lower().split())
        overlap = sum((cand & r).values())
        if not overlap:
            continue
        p = overlap / max(1, sum(cand.values()))
        rec = overlap / max(1, sum(r.values()))
        best = max(best, 2 * p * rec / (p + rec))
    return best


def pixel_distance(path_a, path_b, size=64):
    """LPIPS-style proxy: mean absolute difference of resized grayscale."""
    def gray(path):
        with Image.open(path) as img:
            return np.asarray(
                img.convert("L").resize((size, size), Image.BILINEAR), dtype=np.float64
            ) / 255.0

    return float(np.mean(np.abs(gray(path_a) - gray(path_b))))


def compute_scalar_channels(job, samples, backend=None):
    """Merge bertscore and raw lpips scalars into an augmented record file.

    The stub-scale proxies run by default; per-sample scorer failures are
    recorded and the sample keeps its other fields. lpips compares the
    original image to the generated candidate image and stays raw (the
    scorer applies its own normalization).
    """
    cand_dir = job.output_dir / "generated" / "candidate"
    failures = []
    augmented = []
    for s in samples:
        obj = dict(s)
        scal = dict(obj.get("scalar_channels", {}))
        try:
            scal["bertscore"] = token_f1(s["candidate"], s["references"])
            gen = cand_dir / f"{s['sample_id']}.png"
            if gen.exists():
                scal["lpips"] = pixel_distance(_image_path(job, s["image_id"]), gen)
        except Exception as exc:
            failures.append({"sample_id": s["sample_id"], "error": str(exc)})
        obj["scalar_channels"] = scal
        augmented.append(obj)
    out_path = job.output_dir / "records.jsonl"
    write_records(out_path, augmented)
    if failures:
        (job.output_dir / "scalar_failures.json").write_text(
            json.dumps(failures, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return out_path


CHANNEL_SPECS = {
    "clip_image": ("image", "image", CLIP_DIM),
    "clip_candidate": ("candidate", "sample", CLIP_DIM),
    "dino_image": ("image", "image", DINO_DIM),
    "dino_generated_candidate": ("generated-candidate", "sample", DINO_DIM),
    "dino_generated_reference": ("generated-reference", "image", DINO_DIM),
    "gte_candidate": ("candidate", "sample", GTE_DIM),
    "gte_reference": ("reference-text", "reference", GTE_DIM),
}


def write_scorer_manifest(job, bundle_paths, records_path, name="extracted"):
    """Emit a manifest the scorer can load directly."""
    channels = []
    for cname, path in sorted(bundle_paths.items()):
        role, key_space, dim = CHANNEL_SPECS[cname]
        channels.append({
            "name": cname,
            "role": role,
            "key_space": key_space,
            "path": str(Path(path).relative_to(job.output_dir)),
            "dim": dim,
        })
    manifest = {
        "name": name,
        "records": str(Path(records_path).relative_to(job.output_dir)),
        "channels": channels,
        "provenance": job.settings_dict(),
    }
    path = job.output_dir / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def run_job(job, shard=None):
    """Execute the job's channels end to end; returns emitted paths.

    ``shard`` is (index, count): samples are strided by index so shards
    can run on separate machines and their bundles merged afterwards.
    """
    samples = load_records(job.records)
    suffix = ""
    if shard is not None:
        index, count = shard
        if not (0 <= index < count):
            raise ExtractorError(f"shard index {index} outside 0..{count - 1}")
        samples = samples[index::count]
        suffix = f".shard{index}of{count}"
    job.output_dir.mkdir(parents=True, exist_ok=True)
    backend = get_backend(job)
    bundles = {}
    emitted = {}
    if "clip" in job.channels:
        bundles.update(extract_clip(job, samples, backend, suffix))
    if "dino" in job.channels:
        emitted["generation_manifest"] = generate_cycle_images(job, samples, backend)
        bundles.update(extract_dino(job, samples, backend, suffix))
    if "gte" in job.channels:
        bundles.update(extract_gte(job, samples, backend, suffix))
    records_path = job.records
    if "scalars" in job.channels:
        records_path = compute_scalar_channels(job, samples, backend)
    else:
        out_records = job.output_dir / "records.jsonl"
        if out_records.resolve() != Path(job.records).resolve():
            write_records(out_records, samples)
        records_path = out_records
    emitted["bundles"] = bundles
    if shard is None:
        emitted["manifest"] = write_scorer_manifest(job, bundles, records_path)
    return emitted


def merge_bundles(inputs, output):
    """Merge shard bundles into one; duplicate keys must agree byte-wise."""
    from .evb import read_bundle

    dim = None
    merged = {}
    for path in inputs:
        d, entries = read_bundle(path)
        if dim is None:
            dim = d
        elif d != dim:
            raise ExtractorError(f"{path}: dim {d} != {dim}")
        for key, vec in entries.items():
            if key in merged and not np.array_equal(merged[key], vec):
                raise ExtractorError(f"{path}: conflicting vectors for key {key!r}")
            merged[key] = vec
    write_bundle(output, dim, merged)
    return output
