"""OPEMB1 writer.

The format contract (shared with the probing toolkit that consumes these
files): magic ``OPEMB1\\n``, one JSON header line with dim/layer/language/
count/dtype, then per sentence a little-endian uint32 word count and the
row-major float32 matrix.  Values must be finite.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

MAGIC = b"OPEMB1\n"


def write_opemb(path, language, layer, dim, matrices, metadata=None):
    """Write word-vector matrices for one layer; atomic via temp + rename.

    ``metadata`` entries (e.g. pooling conventions) are merged into the
    JSON header for auditability; consumers ignore unknown keys.
    """
    header = {
        "dim": int(dim),
        "layer": int(layer),
        "language": language,
        "count": len(matrices),
        "dtype": "f32le",
    }
    if metadata:
        header.update(metadata)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        for idx, mat in enumerate(matrices):
            arr = np.ascontiguousarray(mat, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != dim:
                os.remove(tmp)
                raise ValueError(f"sentence {idx}: expected (*, {dim}), got {arr.shape}")
            if not np.isfinite(arr).all():
                os.remove(tmp)
                raise ValueError(f"sentence {idx}: non-finite values")
            fh.write(struct.pack("<I", arr.shape[0]))
            fh.write(arr.tobytes())
    os.replace(tmp, path)
