"""Encoder and generation backends.

``torch`` runs the real models (CLIP ViT-L/14, DINO ViT-B/8, gte-large,
and a text-to-image pipeline for cycle generation); imports are lazy so
the package works where those stacks are absent. ``stub`` is a fully
deterministic offline stand-in that derives unit vectors from content
hashes and renders procedural proxy images; it preserves every pipeline
contract (dims, keying, determinism, unit norms) without model weights,
which is what the test suite runs against.
"""

import hashlib

import numpy as np
from PIL import Image

from . import CLIP_DIM, DINO_DIM, GTE_DIM, ExtractorError

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])


def _hash_seed(*parts):
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _unit(v):
    return v / np.linalg.norm(v)


class StubBackend:
    """Deterministic content-hash encoders and procedural image generation."""

    name = "stub"

    def __init__(self, job):
        self.job = job

    def _hash_vector(self, dim, *parts):
        rng = np.random.default_rng(_hash_seed(*parts))
        return _unit(rng.standard_normal(dim))

    def encode_clip_images(self, paths):
        return np.stack(
            [self._hash_vector(CLIP_DIM, "clip-image", p.read_bytes()) for p in paths]
        )

    def encode_clip_texts(self, texts):
        return np.stack([self._hash_vector(CLIP_DIM, "clip-text", t) for t in texts])

    def encode_dino_images(self, paths):
        # hash the preprocessed pixels so the embedding tracks image content
        vecs = []
        for p in paths:
            arr = preprocess_image(p, 224)
            vecs.append(self._hash_vector(DINO_DIM, "dino-image", arr.tobytes()))
        return np.stack(vecs)

    def encode_gte_texts(self, texts):
        return np.stack([self._hash_vector(GTE_DIM, "gte-text", t) for t in texts])

    def generate_image(self, caption, key, out_path):
        settings = self.job.generation
        rng = np.random.default_rng(_hash_seed("generate", settings["seed"], key, caption))
        side = 32
        pixels = rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8)
        Image.fromarray(pixels, "RGB").save(out_path, format="PNG")


def preprocess_image(path, size):
    """Resize to size x size RGB and ImageNet-normalize; float32 CHW."""
    with Image.open(path) as img:
        img = img.convert("RGB").resize((size, size), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    arr = (arr - IMAGENET_MEAN) / IMAGENET_STD
    return arr.transpose(2, 0, 1).astype(np.float32)


class TorchBackend:
    """Real encoders behind lazy imports; models load on first use."""

    name = "torch"

    def __init__(self, job):
        self.job = job
        self._clip = None
        self._dino = None
        self._gte = None
        self._pipe = None

    def _import(self, module, extra):
        try:
            return __import__(module)
        except ImportError as exc:
            raise ExtractorError(
                f"backend 'torch' needs {module} for {extra}; install the "
                f"[torch] extra or use backend 'stub'"
            ) from exc

    def _clip_models(self):
        if self._clip is None:
            self._import("torch", "CLIP encoding")
            transformers = self._import("transformers", "CLIP encoding")
            model_id = self.job.encoders["clip"]
            model = transformers.CLIPModel.from_pretrained(model_id)
            processor = transformers.CLIPProcessor.from_pretrained(model_id)
            model.eval().to(self.job.device)
            self._clip = (model, processor)
        return self._clip

    def _dino_model(self):
        if self._dino is None:
            self._import("torch", "DINO encoding")
            transformers = self._import("transformers", "DINO encoding")
            model = transformers.ViTModel.from_pretrained(self.job.encoders["dino"])
            model.eval().to(self.job.device)
            self._dino = model
        return self._dino

    def _gte_model(self):
        if self._gte is None:
            st = self._import("sentence_transformers", "gte encoding")
            self._gte = st.SentenceTransformer(
                self.job.encoders["gte"], device=self.job.device
            )
        return self._gte

    def _batches(self, items):
        size = self.job.batch_size
        for start in range(0, len(items), size):
            yield items[start : start + size]

    def encode_clip_images(self, paths):
        import torch

        model, processor = self._clip_models()
        out = []
        with torch.no_grad():
            for batch in self._batches(paths):
                images = [Image.open(p).convert("RGB") for p in batch]
                inputs = processor(images=images, return_tensors="pt").to(self.job.device)
                feats = model.get_image_features(**inputs)
                out.append(torch.nn.functional.normalize(feats, dim=-1).cpu().numpy())
        return np.concatenate(out).astype(np.float64)

    def encode_clip_texts(self, texts):
        import torch

        model, processor = self._clip_models()
        out = []
        with torch.no_grad():
            for batch in self._batches(texts):
                inputs = processor(
                    text=list(batch), return_tensors="pt", padding=True, truncation=True
                ).to(self.job.device)
                feats = model.get_text_features(**inputs)
                out.append(torch.nn.functional.normalize(feats, dim=-1).cpu().numpy())
        return np.concatenate(out).astype(np.float64)

    def encode_dino_images(self, paths):
        import torch

        model = self._dino_model()
        out = []
        with torch.no_grad():
            for batch in self._batches(paths):
                pixels = torch.from_numpy(
                    np.stack([preprocess_image(p, 224) for p in batch])
                ).to(self.job.device)
                hidden = model(pixel_values=pixels).last_hidden_state[:, 0]  # [CLS]
                out.append(torch.nn.functional.normalize(hidden, dim=-1).cpu().numpy())
        return np.concatenate(out).astype(np.float64)

    def encode_gte_texts(self, texts):
        model = self._gte_model()
        vecs = model.encode(
            list(texts), batch_size=self.job.batch_size, normalize_embeddings=True,
            show_progress_bar=False,
        )
        return np.asarray(vecs, dtype=np.float64)

    def _pipeline(self):
        if self._pipe is None:
            self._import("torch", "image generation")
            diffusers = self._import("diffusers", "image generation")
            self._pipe = diffusers.StableDiffusion3Pipeline.from_pretrained(
                self.job.generation["checkpoint"]
            ).to(self.job.device)
        return self._pipe

    def generate_image(self, caption, key, out_path):
        import torch

        settings = self.job.generation
        pipe = self._pipeline()
        generator = torch.Generator(self.job.device).manual_seed(
            _hash_seed("generate", settings["seed"], key) % (2**63)
        )
        image = pipe(
            caption,
            num_inference_steps=int(settings["steps"]),
            guidance_scale=float(settings["guidance"]),
            height=int(settings["resolution"]),
            width=int(settings["resolution"]),
            generator=generator,
        ).images[0]
        image.save(out_path, format="PNG")


BACKENDS = {"stub": StubBackend, "torch": TorchBackend}


def get_backend(job):
    try:
        return BACKENDS[job.backend](job)
    except KeyError:
        raise ExtractorError(
            f"unknown backend {job.backend!r}; expected one of {sorted(BACKENDS)}"
        ) from None
