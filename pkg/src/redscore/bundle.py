"""Binary I/O for embedding bundles (EVB) and Gaussian stats caches.

EVB layout: magic ``RSEB``, u32 version=1, u32 dim, u64 count, then
``count`` entries of {u16 key-length, UTF-8 key bytes, dim x f32}.
All integers and floats little-endian, no padding. The writer is
canonical: entries are sorted by UTF-8 key bytes, so write(read(f))
round-trips byte-identically.

Stats caches use the same header discipline under magic ``RSGS`` and
store means and the joint covariance as f64.
"""

import struct

import numpy as np

from .errors import BundleFormatError

BUNDLE_MAGIC = b"RSEB"
STATS_MAGIC = b"RSGS"
VERSION = 1

_HEADER = struct.Struct("<4sIIQ")
_KEYLEN = struct.Struct("<H")


def write_bundle(path, dim, entries):
    """Write a key -> vector mapping as a canonical EVB file.

    Vectors are cast to float32; keys are written in sorted UTF-8 byte
    order regardless of the mapping's iteration order.
    """
    dim = int(dim)
    if dim <= 0:
        raise BundleFormatError(f"dim must be positive, got {dim}")
    items = sorted((k.encode("utf-8"), np.asarray(v)) for k, v in entries.items())
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BUNDLE_MAGIC, VERSION, dim, len(items)))
        for key, vec in items:
            if len(key) > 0xFFFF:
                raise BundleFormatError(f"key too long ({len(key)} bytes)")
            if vec.shape != (dim,):
                raise BundleFormatError(
                    f"vector for {key.decode('utf-8', 'replace')!r} has shape "
                    f"{vec.shape}, expected ({dim},)"
                )
            fh.write(_KEYLEN.pack(len(key)))
            fh.write(key)
            fh.write(vec.astype("<f4").tobytes())


def read_bundle(path):
    """Read an EVB file; returns (dim, dict of key -> float64 vector).

    Rejects bad magic, unsupported versions, duplicate keys, non-finite
    components, and truncated or trailing bytes.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise BundleFormatError(f"{path}: truncated header")
    magic, version, dim, count = _HEADER.unpack_from(raw, 0)
    if magic != BUNDLE_MAGIC:
        raise BundleFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise BundleFormatError(f"{path}: unsupported version {version}")
    if dim <= 0:
        raise BundleFormatError(f"{path}: non-positive dim {dim}")
    entries = {}
    off = _HEADER.size
    vec_bytes = 4 * dim
    for _ in range(count):
        if off + _KEYLEN.size > len(raw):
            raise BundleFormatError(f"{path}: truncated entry header")
        (key_len,) = _KEYLEN.unpack_from(raw, off)
        off += _KEYLEN.size
        if off + key_len + vec_bytes > len(raw):
            raise BundleFormatError(f"{path}: truncated entry body")
        key = raw[off : off + key_len].decode("utf-8")
        off += key_len
        vec = np.frombuffer(raw, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += vec_bytes
        if key in entries:
            raise BundleFormatError(f"{path}: duplicate key {key!r}")
        if not np.all(np.isfinite(vec)):
            raise BundleFormatError(f"{path}: non-finite component in {key!r}")
        entries[key] = vec
    if off != len(raw):
        raise BundleFormatError(f"{path}: {len(raw) - off} trailing bytes")
    return dim, entries


_STATS_HEADER = struct.Struct("<4sIIIQd")


def write_stats_cache(path, dim_x, dim_y, n_fit, shrinkage_used, mu_x, mu_y, sigma_xy):
    """Write fitted Gaussian moments (unshrunk covariance) to an RSGS file."""
    d = dim_x + dim_y
    mu_x = np.asarray(mu_x, dtype=np.float64)
    mu_y = np.asarray(mu_y, dtype=np.float64)
    sigma_xy = np.asarray(sigma_xy, dtype=np.float64)
    if mu_x.shape != (dim_x,) or mu_y.shape != (dim_y,) or sigma_xy.shape != (d, d):
        raise BundleFormatError("stats cache shapes inconsistent with dims")
    with open(path, "wb") as fh:
        fh.write(_STATS_HEADER.pack(STATS_MAGIC, VERSION, dim_x, dim_y, n_fit, shrinkage_used))
        fh.write(mu_x.astype("<f8").tobytes())
        fh.write(mu_y.astype("<f8").tobytes())
        fh.write(sigma_xy.astype("<f8").tobytes())


def read_stats_cache(path):
    """Read an RSGS file; returns (dim_x, dim_y, n_fit, shrinkage_used, mu_x, mu_y, sigma_xy)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _STATS_HEADER.size:
        raise BundleFormatError(f"{path}: truncated header")
    magic, version, dim_x, dim_y, n_fit, shrinkage = _STATS_HEADER.unpack_from(raw, 0)
    if magic != STATS_MAGIC:
        raise BundleFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise BundleFormatError(f"{path}: unsupported version {version}")
    d = dim_x + dim_y
    expect = _STATS_HEADER.size + 8 * (dim_x + dim_y + d * d)
    if len(raw) != expect:
        raise BundleFormatError(f"{path}: size {len(raw)}, expected {expect}")
    off = _STATS_HEADER.size
    mu_x = np.frombuffer(raw, dtype="<f8", count=dim_x, offset=off).copy()
    off += 8 * dim_x
    mu_y = np.frombuffer(raw, dtype="<f8", count=dim_y, offset=off).copy()
    off += 8 * dim_y
    sigma_xy = np.frombuffer(raw, dtype="<f8", count=d * d, offset=off).reshape(d, d).copy()
    return dim_x, dim_y, n_fit, shrinkage, mu_x, mu_y, sigma_xy
