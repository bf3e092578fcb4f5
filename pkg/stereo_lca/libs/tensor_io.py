'''
LCAT tensor container.

Layout (all little-endian):
    magic    4 bytes  b'LCAT'
    version  u32
    dtype    u32      element tag, see DTYPE_TAGS
    rank     u32
    dims     u64 * rank
    payload  row-major elements

Metadata goes in a sidecar JSON file next to the tensor (`<path>.json`).
'''
import logging
import os
import struct

import numpy as np

from ..errors import DataError
from .utils import write_json, read_json, format_bytes

MAGIC = b'LCAT'
FORMAT_VERSION = 1

DTYPE_TAGS = {
    1: np.dtype('<f4'),
    2: np.dtype('u1'),
    # checkpoints only, so a resumed run continues from the exact state
    3: np.dtype('<f8'),
}
TAG_FOR_DTYPE = {v: k for k, v in DTYPE_TAGS.items()}

log = logging.getLogger(__name__)


def sidecar_path(path):
    return str(path) + '.json'

def _serialize(f, tensor, precision='f4'):
    if tensor.dtype == np.uint8 or tensor.dtype == np.bool_:
        tensor = np.ascontiguousarray(tensor, dtype='u1')
    else:
        tensor = np.ascontiguousarray(tensor, dtype='<' + precision)
    if tensor.dtype.kind == 'f' and not np.all(np.isfinite(tensor)):
        raise DataError("Refusing to write non-finite values")
    tag = TAG_FOR_DTYPE[tensor.dtype]
    f.write(MAGIC)
    f.write(struct.pack('<III', FORMAT_VERSION, tag, tensor.ndim))
    f.write(struct.pack(f'<{tensor.ndim}Q', *tensor.shape))
    f.write(tensor.tobytes(order='C'))

def save_tensor(path, tensor, metadata=None, precision='f4'):
    '''Write tensor (f32, or f64 with precision='f8'; u8 for binary data) and its sidecar.'''
    tensor = np.asarray(tensor)
    with open(path, 'wb') as f:
        _serialize(f, tensor, precision)
    if metadata is not None:
        write_json(sidecar_path(path), metadata)
    log.debug(f"Wrote {path} {tuple(tensor.shape)} ({format_bytes(os.path.getsize(path))})")

def _read_exact(f, count, path):
    data = f.read(count)
    if len(data) != count:
        raise DataError(f"Truncated tensor file: {path}")
    return data

def load_tensor(path, with_metadata=False):
    with open(path, 'rb') as f:
        magic = _read_exact(f, 4, path)
        if magic != MAGIC:
            raise DataError(f"Not an LCAT file: {path}")
        version, tag, rank = struct.unpack('<III', _read_exact(f, 12, path))
        if version > FORMAT_VERSION:
            raise DataError(f"Unsupported LCAT version {version} in {path}")
        if tag not in DTYPE_TAGS:
            raise DataError(f"Unknown element tag {tag} in {path}")
        shape = struct.unpack(f'<{rank}Q', _read_exact(f, 8 * rank, path))
        dtype = DTYPE_TAGS[tag]
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        payload = _read_exact(f, count * dtype.itemsize, path)
    tensor = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    if not with_metadata:
        return tensor
    meta_path = sidecar_path(path)
    metadata = read_json(meta_path) if os.path.exists(meta_path) else {}
    return tensor, metadata

def pack_bits(binary):
    '''Pack a binary K x M x N array along its last axis, keeping the shape for unpacking.'''
    binary = np.asarray(binary, dtype=bool)
    return np.packbits(binary, axis=-1), binary.shape

def unpack_bits(packed, shape):
    return np.unpackbits(packed, axis=-1, count=shape[-1]).astype(bool).reshape(shape)
