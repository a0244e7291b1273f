"""Binary PGM (P5) reading and writing, 8 and 16 bit.

Gray levels map linearly to [0, 1] via ``value / maxval``.
"""
from pathlib import Path

import numpy as np

from .exceptions import ParameterError


def _tokens(data: bytes, count: int):
    """First ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one.
    """
    tokens, pos, n = [], 0, len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParameterError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a float64 array in [0, 1]."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), offset = _tokens(data, 4)
    if magic != b"P5":
        raise ParameterError(f"{path}: only binary PGM (P5) is supported")
    width, height, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise ParameterError(f"{path}: invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    if len(data) - offset < count * dtype.itemsize:
        raise ParameterError(f"{path}: truncated pixel data")
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    return raw.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, image, bits: int = 8) -> None:
    """Write ``image`` (values in [0, 1], clipped) as an 8- or 16-bit P5 file."""
    if bits not in (8, 16):
        raise ParameterError("bits must be 8 or 16")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ParameterError("PGM images must be 2-D")
    maxval = (1 << bits) - 1
    levels = np.rint(np.clip(image, 0.0, 1.0) * maxval)
    dtype = ">u2" if bits == 16 else "u1"
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        fh.write(levels.astype(dtype).tobytes())
