"""Binary container for model weights.

Layout (all integers little-endian):

    bytes 0..3   magic ``ADPM``
    byte  4      format version (currently 1)
    bytes 5..8   u32 number of manifest entries
    per entry:   u16 name length, UTF-8 name bytes,
                 u8 rank, rank * u32 dimensions,
                 u64 absolute byte offset of the payload
    payloads:    row-major float32, one block per entry, in manifest order

Training happens in 64-bit; containers store 32-bit, halving artifact
size at quantization error far below accuracy granularity.
"""

import struct

import numpy as np

from .errors import DataError

MAGIC = b"ADPM"
VERSION = 1


def save_weights(path, tensors):
    """Write named arrays to ``path``; iteration order fixes the layout."""
    names = list(tensors)
    if len(set(names)) != len(names):
        raise DataError("duplicate tensor names in weight container")
    arrays = {}
    for name, value in tensors.items():
        array = np.ascontiguousarray(np.asarray(value, dtype=np.float64))
        if not np.all(np.isfinite(array)):
            raise DataError(f"tensor {name!r} contains non-finite values")
        arrays[name] = array.astype("<f4")

    header = bytearray()
    header += MAGIC
    header += struct.pack("<B", VERSION)
    header += struct.pack("<I", len(arrays))

    entries = []
    for name, array in arrays.items():
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise DataError(f"tensor name too long: {name!r}")
        entries.append((encoded, array))

    manifest_size = sum(
        2 + len(encoded) + 1 + 4 * array.ndim + 8 for encoded, array in entries
    )
    offset = len(header) + manifest_size
    manifest = bytearray()
    for encoded, array in entries:
        manifest += struct.pack("<H", len(encoded))
        manifest += encoded
        manifest += struct.pack("<B", array.ndim)
        for dim in array.shape:
            manifest += struct.pack("<I", dim)
        manifest += struct.pack("<Q", offset)
        offset += array.nbytes

    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(manifest)
        for _, array in entries:
            handle.write(array.tobytes())


def load_weights(path):
    """Read a container back into an ordered ``{name: float64 array}``."""
    with open(path, "rb") as handle:
        blob = handle.read()

    def fail(reason):
        raise DataError(f"{path}: {reason}")

    if len(blob) < 9:
        fail("truncated container header")
    if blob[:4] != MAGIC:
        fail(f"bad magic bytes {blob[:4]!r}, expected {MAGIC!r}")
    if blob[4] != VERSION:
        fail(f"unsupported container version {blob[4]}")
    (count,) = struct.unpack_from("<I", blob, 5)

    cursor = 9
    entries = []
    for _ in range(count):
        try:
            (name_length,) = struct.unpack_from("<H", blob, cursor)
            cursor += 2
            name = blob[cursor : cursor + name_length].decode("utf-8")
            cursor += name_length
            (rank,) = struct.unpack_from("<B", blob, cursor)
            cursor += 1
            shape = struct.unpack_from(f"<{rank}I", blob, cursor)
            cursor += 4 * rank
            (offset,) = struct.unpack_from("<Q", blob, cursor)
            cursor += 8
        except struct.error:
            fail("truncated manifest")
        entries.append((name, shape, offset))

    seen = set()
    spans = []
    for name, shape, offset in entries:
        if name in seen:
            fail(f"duplicate tensor name {name!r}")
        seen.add(name)
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if offset < cursor or offset + nbytes > len(blob):
            fail(f"tensor {name!r} payload out of bounds")
        spans.append((offset, offset + nbytes, name))

    spans.sort()
    for (_, end_a, name_a), (start_b, _, name_b) in zip(spans, spans[1:]):
        if start_b < end_a:
            fail(f"overlapping payloads for {name_a!r} and {name_b!r}")

    tensors = {}
    for name, shape, offset in entries:
        size = int(np.prod(shape, dtype=np.int64))
        flat = np.frombuffer(blob, dtype="<f4", count=size, offset=offset)
        tensors[name] = flat.reshape(shape).astype(np.float64)
    return tensors
