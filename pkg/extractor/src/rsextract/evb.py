"""EVB bundle I/O: the binary interface to the scorer.

Layout: magic ``RSEB``, u32 version=1, u32 dim, u64 count, then per
entry u16 key length, UTF-8 key bytes, dim x f32 little-endian. The
writer sorts keys by UTF-8 bytes so identical content gives identical
bytes.
"""

import struct

import numpy as np

from . import ExtractorError

MAGIC = b"RSEB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_KEYLEN = struct.Struct("<H")


def write_bundle(path, dim, entries):
    items = sorted((k.encode("utf-8"), np.asarray(v, dtype=np.float64)) for k, v in entries.items())
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, len(items)))
        for key, vec in items:
            if vec.shape != (dim,):
                raise ExtractorError(
                    f"vector for {key.decode('utf-8', 'replace')!r} has shape "
                    f"{vec.shape}, expected ({dim},)"
                )
            fh.write(_KEYLEN.pack(len(key)))
            fh.write(key)
            fh.write(vec.astype("<f4").tobytes())


def read_bundle(path):
    raw = open(path, "rb").read()
    magic, version, dim, count = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC or version != VERSION:
        raise ExtractorError(f"{path}: not an EVB v{VERSION} bundle")
    entries = {}
    off = _HEADER.size
    for _ in range(count):
        (klen,) = _KEYLEN.unpack_from(raw, off)
        off += _KEYLEN.size
        key = raw[off : off + klen].decode("utf-8")
        off += klen
        entries[key] = np.frombuffer(raw, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += 4 * dim
    return dim, entries
