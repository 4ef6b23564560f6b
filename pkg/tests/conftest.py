"""Shared fixtures and oracles: synthetic datasets written through the real
file formats, plus the O(n^2) Kendall pair-enumeration oracle."""

import json
import math

import numpy as np
import pytest

from redscore.bundle import write_bundle
from redscore.data import Sample, load_dataset, reference_key, write_records

CLIP_DIM = 6
DINO_DIM = 6
GTE_DIM = 8


def brute_counts(x, y):
    """O(n^2) pair enumeration: the definitional Kendall oracle."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    iu = np.triu_indices(len(x), 1)
    px = np.sign(x[:, None] - x[None, :])[iu]
    py = np.sign(y[:, None] - y[None, :])[iu]
    return (
        int(np.sum(px * py > 0)),
        int(np.sum(px * py < 0)),
        int(np.sum((px == 0) & (py != 0))),
        int(np.sum((py == 0) & (px != 0))),
        int(np.sum((px == 0) & (py == 0))),
    )


def brute_tau(x, y, variant="tau_c"):
    nc, nd, tx, ty, txy = brute_counts(x, y)
    n = len(x)
    m = min(len(set(np.asarray(x).tolist())), len(set(np.asarray(y).tolist())))
    if variant == "tau_c":
        return 2.0 * m * (nc - nd) / (n * n * (m - 1))
    n0 = n * (n - 1) // 2
    return (nc - nd) / math.sqrt((n0 - tx - txy) * (n0 - ty - txy))


def unit(rng, dim):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _toward(base, quality, rng):
    """Unit vector whose cosine to ``base`` grows with quality in (0, 1)."""
    noise = rng.normal(size=base.size)
    noise -= noise @ base * base
    noise /= np.linalg.norm(noise)
    angle = (1.0 - quality) * np.pi / 2
    v = np.cos(angle) * base + np.sin(angle) * noise
    return v / np.linalg.norm(v)


def build_dataset_files(tmp_path, n_samples=5, seed=0, name="fixture", ratings=True,
                        scalars=True, identity_pairs=0, n_references=2):
    """Write a complete synthetic dataset (records + bundles + manifest).

    Channel scores correlate loosely with a latent quality so that
    calibration and correlation tests have signal to find. Returns the
    manifest path.
    """
    rng = np.random.default_rng(seed)
    samples = []
    clip_image, clip_cand = {}, {}
    dino_image, dino_gen_cand, dino_gen_ref = {}, {}, {}
    gte_cand, gte_ref = {}, {}
    for k in range(n_samples):
        image_id = f"im{k % max(1, n_samples - 1)}"
        sample_id = f"s{k}"
        quality = float(rng.uniform(0.05, 0.95))
        refs = tuple(f"reference {k} variant {j}" for j in range(n_references))
        candidate = refs[0] if k < identity_pairs else f"candidate caption {k}"
        rating = None
        if ratings:
            rating = float(np.clip(round(1 + 3 * quality + rng.normal(0, 0.2)), 1, 4))
        scalar = {}
        if scalars:
            scalar = {
                "bertscore": float(np.clip(quality + rng.normal(0, 0.1), 0, 1)),
                "lpips": float(np.clip((1 - quality) + rng.normal(0, 0.1), 0, 3)),
            }
        samples.append(
            Sample(
                sample_id=sample_id,
                image_id=image_id,
                candidate=candidate,
                references=refs,
                human_rating=rating,
                model_tag=f"model{k % 2}",
                scalar_channels=scalar,
            )
        )
        if image_id not in clip_image:
            clip_image[image_id] = unit(rng, CLIP_DIM)
            dino_image[image_id] = unit(rng, DINO_DIM)
            dino_gen_ref[image_id] = _toward(dino_image[image_id], 0.8, rng)
            for j in range(n_references):
                gte_ref[reference_key(image_id, j)] = unit(rng, GTE_DIM)
        clip_cand[sample_id] = _toward(clip_image[image_id], quality, rng)
        dino_gen_cand[sample_id] = _toward(dino_image[image_id], quality, rng)
        gte_cand[sample_id] = _toward(gte_ref[reference_key(image_id, 0)], quality, rng)

    records = tmp_path / "records.jsonl"
    write_records(records, samples)
    channels = [
        ("clip_image", "image", "image", CLIP_DIM, clip_image),
        ("clip_candidate", "candidate", "sample", CLIP_DIM, clip_cand),
        ("dino_image", "image", "image", DINO_DIM, dino_image),
        ("dino_generated_candidate", "generated-candidate", "sample", DINO_DIM, dino_gen_cand),
        ("dino_generated_reference", "generated-reference", "image", DINO_DIM, dino_gen_ref),
        ("gte_candidate", "candidate", "sample", GTE_DIM, gte_cand),
        ("gte_reference", "reference-text", "reference", GTE_DIM, gte_ref),
    ]
    manifest = {"name": name, "records": "records.jsonl", "channels": [], "provenance": {}}
    for cname, role, key_space, dim, entries in channels:
        path = tmp_path / f"{cname}.evb"
        write_bundle(path, dim, entries)
        manifest["channels"].append(
            {"name": cname, "role": role, "key_space": key_space,
             "path": path.name, "dim": dim}
        )
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest_path


@pytest.fixture
def dataset_files(tmp_path):
    return build_dataset_files(tmp_path)


@pytest.fixture
def dataset(dataset_files):
    return load_dataset(dataset_files)


@pytest.fixture
def rated_dataset_files(tmp_path):
    return build_dataset_files(tmp_path, n_samples=40, seed=7, name="rated")
