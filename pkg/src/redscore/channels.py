"""Named per-sample score channels: cosine similarities, PMI, scalars.

Channels are the raw (pre-squash) score streams that fusion and the
ablation sweeps consume. Embedding-backed channels read the canonical
table names below; scalar channels (bertscore, lpips) are copied from
the records.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .gaussian import fit_mid_stats, mid_scores

# canonical embedding table names per channel
CLIP_IMAGE = "clip_image"
CLIP_CANDIDATE = "clip_candidate"
DINO_IMAGE = "dino_image"
DINO_GENERATED_CANDIDATE = "dino_generated_candidate"
DINO_GENERATED_REFERENCE = "dino_generated_reference"
GTE_CANDIDATE = "gte_candidate"
GTE_REFERENCE = "gte_reference"

CHANNEL_NAMES = ("mid", "dino", "gte", "clip", "bertscore", "lpips")

# positional order used when assigning weights to combination subsets
CANONICAL_ORDER = ("mid", "gte", "dino", "bertscore", "lpips", "clip")

CHANNEL_TABLES = {
    "mid": (CLIP_IMAGE, CLIP_CANDIDATE),
    "clip": (CLIP_IMAGE, CLIP_CANDIDATE),
    "dino": (DINO_IMAGE, DINO_GENERATED_CANDIDATE, DINO_GENERATED_REFERENCE),
    "gte": (GTE_CANDIDATE, GTE_REFERENCE),
    "bertscore": (),
    "lpips": (),
}


@dataclass
class ChannelVector:
    name: str
    values: dict  # sample_id -> raw score
    kind: str  # cosine | mid | scalar-passthrough | lpips-normalized

    def array(self, sample_ids=None):
        ids = list(self.values) if sample_ids is None else sample_ids
        return np.array([self.values[i] for i in ids], dtype=np.float64)


def cosine(u, v):
    """Cosine similarity, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DataError(f"cosine: shapes differ {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DataError("cosine: zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def dino_sim(e_orig, e_gen_cand, e_gen_ref):
    """Mean of the two cycle edges: original<->generated-candidate and
    generated-candidate<->generated-reference."""
    s1 = cosine(e_orig, e_gen_cand)
    s2 = cosine(e_gen_cand, e_gen_ref)
    return 0.5 * (s1 + s2)


def gte_score(e_cand, e_refs, aggregation="first"):
    """Candidate-to-reference text similarity.

    Aggregates cosine(candidate, reference_i) over the references:
    ``first`` (default) uses the designated first reference only,
    ``max`` and ``mean`` pool across all of them.
    """
    if not len(e_refs):
        raise DataError("gte_score: empty reference list")
    if aggregation == "first":
        return cosine(e_cand, e_refs[0])
    sims = [cosine(e_cand, ref) for ref in e_refs]
    if aggregation == "max":
        return max(sims)
    if aggregation == "mean":
        return float(np.mean(sims))
    raise DataError(f"gte_score: unknown aggregation {aggregation!r}")


def lpips_norm(raw_lpips):
    """Map a raw perceptual distance in [0, inf) to a similarity in (0, 1]."""
    if not math.isfinite(raw_lpips) or raw_lpips < 0:
        raise DataError(f"lpips_norm: input must be finite and >= 0, got {raw_lpips}")
    return 1.0 / (1.0 + raw_lpips)


def _table(dataset, name, channel):
    table = dataset.tables.get(name)
    if table is None:
        raise DataError(
            f"channel {channel!r} needs embedding table {name!r}, "
            f"absent from dataset {dataset.name!r}"
        )
    return table


def _build_mid(dataset, shrinkage=None, stats=None):
    if stats is None:
        stats = fit_mid_stats(dataset, shrinkage=shrinkage)
    per_sample, _ = mid_scores(stats, dataset)
    return ChannelVector("mid", per_sample, kind="mid"), stats


def _build_clip(dataset):
    img = _table(dataset, CLIP_IMAGE, "clip")
    cand = _table(dataset, CLIP_CANDIDATE, "clip")
    values = {
        s.sample_id: cosine(img[s.image_id], cand[s.sample_id]) for s in dataset.samples
    }
    return ChannelVector("clip", values, kind="cosine")


def _build_dino(dataset):
    orig = _table(dataset, DINO_IMAGE, "dino")
    gen_cand = _table(dataset, DINO_GENERATED_CANDIDATE, "dino")
    gen_ref = _table(dataset, DINO_GENERATED_REFERENCE, "dino")
    values = {
        s.sample_id: dino_sim(orig[s.image_id], gen_cand[s.sample_id], gen_ref[s.image_id])
        for s in dataset.samples
    }
    return ChannelVector("dino", values, kind="cosine")


def _build_gte(dataset, aggregation="first"):
    from .data import reference_key

    cand = _table(dataset, GTE_CANDIDATE, "gte")
    refs = _table(dataset, GTE_REFERENCE, "gte")
    values = {}
    for s in dataset.samples:
        n_refs = 1 if aggregation == "first" else len(s.references)
        ref_vecs = [refs[reference_key(s.image_id, i)] for i in range(n_refs)]
        values[s.sample_id] = gte_score(cand[s.sample_id], ref_vecs, aggregation)
    return ChannelVector("gte", values, kind="cosine")


def _build_scalar(dataset, name, transform=None, kind="scalar-passthrough"):
    values = {}
    for s in dataset.samples:
        if name not in s.scalar_channels:
            raise DataError(f"sample {s.sample_id!r} lacks scalar channel {name!r}")
        raw = s.scalar_channels[name]
        values[s.sample_id] = transform(raw) if transform else raw
    return ChannelVector(name, values, kind=kind)


def build_channels(dataset, requested, reference_aggregation="first", shrinkage=None,
                   mid_stats=None):
    """Build the requested raw score channels over the dataset's samples.

    Returns a dict name -> ChannelVector covering exactly the dataset's
    retained samples. ``mid_stats`` injects pre-fitted Gaussian stats
    (e.g. from a cache file); otherwise the mid channel fits them on the
    dataset's own (image, candidate) pairs.
    """
    out = {}
    for name in requested:
        if name == "mid":
            vec, mid_stats = _build_mid(dataset, shrinkage=shrinkage, stats=mid_stats)
        elif name == "clip":
            vec = _build_clip(dataset)
        elif name == "dino":
            vec = _build_dino(dataset)
        elif name == "gte":
            vec = _build_gte(dataset, aggregation=reference_aggregation)
        elif name == "bertscore":
            vec = _build_scalar(dataset, "bertscore")
        elif name == "lpips":
            vec = _build_scalar(dataset, "lpips", transform=lpips_norm, kind="lpips-normalized")
        else:
            raise DataError(
                f"unknown channel {name!r}; expected one of {', '.join(CHANNEL_NAMES)}"
            )
        out[name] = vec
    return out


def required_tables(requested):
    """Embedding table names needed to build the given channels."""
    names = []
    for name in requested:
        try:
            tables = CHANNEL_TABLES[name]
        except KeyError:
            raise DataError(
                f"unknown channel {name!r}; expected one of {', '.join(CHANNEL_NAMES)}"
            ) from None
        for t in tables:
            if t not in names:
                names.append(t)
    return names
