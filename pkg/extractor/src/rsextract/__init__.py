"""rsextract: produces the embedding bundles and proxy images that the
redscore scorer consumes.

Channels: CLIP ViT-L/14 image/caption embeddings (dim 768), DINO
ViT-B/8 embeddings of original and cycle-generated images (dim 768),
gte-large caption embeddings (dim 1024), plus optional precomputed
scalar channels (bertscore, lpips) merged into the record file. The
coupling to the scorer is the file formats only (EVB bundles, JSONL
records, JSON manifest).
"""

__version__ = "0.1.0"

CLIP_DIM = 768
DINO_DIM = 768
GTE_DIM = 1024


class ExtractorError(Exception):
    """Job configuration or extraction failure."""
