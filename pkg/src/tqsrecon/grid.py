"""Sensor layout and measurement model for three-quarter sampling.

Each low-resolution sensor pixel covers a 2x2 block of the high-resolution
grid.  One quadrant of that block is opaque; the remaining three are
integrated into a single reading.  Quadrants are encoded as

    0 = top-left, 1 = top-right, 2 = bottom-left, 3 = bottom-right

and readings are row-normalized, i.e. the mean of the three transparent
pixels.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParameterError

RNG_NAME = "pcg64"
COEF = 1.0 / 3.0

# (row, col) offset inside the 2x2 cell, indexed by quadrant code
QUADRANT_OFFSETS = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class QuadrantPattern:
    """Periodic opaque-quadrant layout.

    ``opaque`` has shape ``(period // 2, period // 2)``; the quadrant of
    low-resolution cell ``(r, c)`` is ``opaque[r % (P/2), c % (P/2)]``.
    """

    period: int
    seed: int
    opaque: np.ndarray = field(repr=False)
    rng: str = RNG_NAME

    def __post_init__(self):
        tile = np.asarray(self.opaque, dtype=np.uint8)
        half = self.period // 2
        if tile.shape != (half, half):
            raise ParameterError(
                f"pattern tile must be {half}x{half}, got {tile.shape}")
        if tile.size and tile.max() > 3:
            raise ParameterError("quadrant indices must lie in {0,1,2,3}")
        tile.setflags(write=False)
        object.__setattr__(self, "opaque", tile)

    @property
    def cells(self) -> int:
        return self.period // 2

    def quadrant(self, row, col):
        """Opaque quadrant of low-resolution cell(s) ``(row, col)``."""
        return self.opaque[np.mod(row, self.cells), np.mod(col, self.cells)]

    def tile_to(self, rows: int, cols: int) -> np.ndarray:
        """Quadrant map for a ``rows x cols`` measurement grid."""
        r = np.arange(rows) % self.cells
        c = np.arange(cols) % self.cells
        return self.opaque[np.ix_(r, c)]

    def __eq__(self, other):
        if not isinstance(other, QuadrantPattern):
            return NotImplemented
        return (self.period == other.period and self.seed == other.seed
                and self.rng == other.rng
                and np.array_equal(self.opaque, other.opaque))

    def __hash__(self):
        return hash((self.period, self.seed, self.rng, self.opaque.tobytes()))


@dataclass(frozen=True, eq=False)
class LocalMeasurementMatrix:
    """Measurements fully contained in one ``W x W`` model window.

    ``pixels[m]`` holds the three window-local flat pixel indices
    ``eta * W + gamma`` integrated by local measurement ``m`` and
    ``coef[m]`` the matching coefficients (1/3 each).  ``cell_origins[m]``
    is the window-local (row, col) of the top-left pixel of its 2x2 cell.
    """

    window: int
    pixels: np.ndarray = field(repr=False)
    coef: np.ndarray = field(repr=False)
    cell_origins: np.ndarray = field(repr=False)

    @property
    def n_measurements(self) -> int:
        return self.pixels.shape[0]

    def entries(self, m: int):
        """``(eta, gamma, coefficient)`` triples of measurement ``m``."""
        W = self.window
        return [(int(p // W), int(p % W), float(a))
                for p, a in zip(self.pixels[m], self.coef[m])]

    def dense(self) -> np.ndarray:
        """Dense ``(L_local, W, W)`` coefficient array, for testing."""
        W = self.window
        A = np.zeros((self.n_measurements, W * W))
        rows = np.repeat(np.arange(self.n_measurements), 3)
        np.add.at(A, (rows, self.pixels.ravel()), self.coef.ravel())
        return A.reshape(-1, W, W)

    def __eq__(self, other):
        if not isinstance(other, LocalMeasurementMatrix):
            return NotImplemented
        return (self.window == other.window
                and np.array_equal(self.pixels, other.pixels)
                and np.array_equal(self.coef, other.coef)
                and np.array_equal(self.cell_origins, other.cell_origins))

    __hash__ = None


def check_period(period: int, block_size: int = 4) -> int:
    period = int(period)
    if period < 4 or period % 2 or period % block_size:
        raise ParameterError(
            f"period must be >= 4, even and divisible by the block size "
            f"{block_size}; got {period}")
    return period


def generate_pattern(seed: int, period: int = 32, block_size: int = 4) -> QuadrantPattern:
    """Draw a random periodic pattern; each cell's opaque quadrant is uniform on {0..3}."""
    period = check_period(period, block_size)
    if seed < 0:
        raise ParameterError("seed must be a non-negative integer")
    rng = np.random.Generator(np.random.PCG64(seed))
    half = period // 2
    tile = rng.integers(0, 4, size=(half, half), dtype=np.uint8)
    return QuadrantPattern(period=period, seed=int(seed), opaque=tile)


def check_image(image, name="image") -> np.ndarray:
    """Validate a high-resolution gray image: 2-D, finite, even-sized."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ParameterError(f"{name} must be 2-D, got shape {image.shape}")
    if image.shape[0] % 2 or image.shape[1] % 2:
        raise ParameterError(f"{name} dimensions must be even, got {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ParameterError(f"{name} contains non-finite values")
    return image


def measurement_weights(pattern: QuadrantPattern, shape) -> np.ndarray:
    """Per-pixel coefficient map (1/3 transparent, 0 opaque) for an image of ``shape``."""
    M, N = shape
    quad = pattern.tile_to(M // 2, N // 2)
    mask = np.full((M // 2, 2, N // 2, 2), COEF)
    r, c = np.indices(quad.shape)
    off = QUADRANT_OFFSETS[quad]
    mask[r, off[..., 0], c, off[..., 1]] = 0.0
    return mask.reshape(M, N)


def simulate_measurement(image, pattern: QuadrantPattern) -> np.ndarray:
    """Sensor readings ``y`` of shape ``(M/2, N/2)`` for a reference image.

    The measurement index ``i`` is the row-major position in the returned
    grid.
    """
    image = check_image(image)
    M, N = image.shape
    weighted = image * measurement_weights(pattern, image.shape)
    return weighted.reshape(M // 2, 2, N // 2, 2).sum(axis=(1, 3))


def local_matrix(pattern: QuadrantPattern, origin, W: int) -> LocalMeasurementMatrix:
    """Local measurement matrix for the window at ``origin`` (frame-independent).

    Only cells whose full 2x2 footprint lies inside the window are kept;
    measurements straddling the border are dropped, not truncated.
    """
    o_r, o_c = (int(v) for v in origin)
    if W < 2 or W % 2:
        raise ParameterError(f"window size must be even and >= 2, got {W}")
    # global cell index range with 2r >= o and 2r + 1 <= o + W - 1
    r0, r1 = -(-o_r // 2), (o_r + W - 2) // 2
    c0, c1 = -(-o_c // 2), (o_c + W - 2) // 2
    rows = np.arange(r0, r1 + 1)
    cols = np.arange(c0, c1 + 1)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    rr, cc = rr.ravel(), cc.ravel()
    quad = pattern.quadrant(rr, cc)

    eta0 = 2 * rr - o_r
    gam0 = 2 * cc - o_c
    # transparent quadrants in ascending quadrant order
    transparent = np.array([[q for q in range(4) if q != k] for k in range(4)])
    offs = QUADRANT_OFFSETS[transparent[quad]]  # (L, 3, 2)
    eta = eta0[:, None] + offs[..., 0]
    gam = gam0[:, None] + offs[..., 1]
    pixels = (eta * W + gam).astype(np.int64)
    coef = np.full(pixels.shape, COEF)
    cell_origins = np.stack([eta0, gam0], axis=1).astype(np.int64)
    for a in (pixels, coef, cell_origins):
        a.setflags(write=False)
    return LocalMeasurementMatrix(window=W, pixels=pixels, coef=coef,
                                  cell_origins=cell_origins)


def _check_window(frame_shape, origin, W):
    o_r, o_c = (int(v) for v in origin)
    M, N = 2 * frame_shape[0], 2 * frame_shape[1]
    if o_r < 0 or o_c < 0 or o_r + W > M or o_c + W > N:
        raise ParameterError(
            f"window at {tuple(origin)} of size {W} exceeds image bounds {M}x{N}")
    return o_r, o_c


def local_measurements(frame, origin, W: int) -> np.ndarray:
    """Measurements of the cells fully inside the window, in local row-major order."""
    o_r, o_c = _check_window(frame.shape, origin, W)
    r0, c0 = -(-o_r // 2), -(-o_c // 2)
    r1, c1 = (o_r + W - 2) // 2, (o_c + W - 2) // 2
    return frame[r0:r1 + 1, c0:c1 + 1].ravel().copy()


def extract_local_system(pattern: QuadrantPattern, frame, origin, W: int):
    """Local matrix and matching measurement vector ``y_local`` for one window.

    ``origin`` is the high-resolution (row, col) of the window's top-left
    pixel; the window must lie inside the ``2*rows x 2*cols`` image.
    """
    frame = np.asarray(frame, dtype=np.float64)
    y = local_measurements(frame, origin, W)
    return local_matrix(pattern, origin, W), y


# ---------------------------------------------------------------- file formats

def write_pattern(pattern: QuadrantPattern, path) -> None:
    lines = [f"TQSP v1 period={pattern.period} seed={pattern.seed} rng={pattern.rng}"]
    lines += [" ".join(str(int(v)) for v in row) for row in pattern.opaque]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_pattern(path) -> QuadrantPattern:
    text = Path(path).read_text(encoding="ascii").split("\n")
    header = text[0].split()
    if len(header) < 2 or header[0] != "TQSP" or header[1] != "v1":
        raise ParameterError(f"{path}: not a TQSP v1 pattern file")
    fields = dict(tok.split("=", 1) for tok in header[2:])
    try:
        period = int(fields["period"])
        seed = int(fields["seed"])
        rng = fields["rng"]
    except (KeyError, ValueError) as exc:
        raise ParameterError(f"{path}: malformed TQSP header") from exc
    rows = [ln.split() for ln in text[1:] if ln.strip()]
    try:
        tile = np.array(rows, dtype=np.int64)
    except ValueError as exc:
        raise ParameterError(f"{path}: ragged or non-numeric pattern body") from exc
    if tile.min(initial=0) < 0:
        raise ParameterError(f"{path}: negative quadrant index")
    return QuadrantPattern(period=period, seed=seed, opaque=tile, rng=rng)


_TQSM_HEADER = struct.Struct("<4sII")


def write_frame(frame, path) -> None:
    frame = np.asarray(frame, dtype="<f8")
    if frame.ndim != 2:
        raise ParameterError("measurement frame must be 2-D")
    with open(path, "wb") as fh:
        fh.write(_TQSM_HEADER.pack(b"TQSM", frame.shape[0], frame.shape[1]))
        fh.write(np.ascontiguousarray(frame).tobytes())


def read_frame(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _TQSM_HEADER.size:
        raise ParameterError(f"{path}: truncated TQSM file")
    magic, rows, cols = _TQSM_HEADER.unpack_from(data)
    if magic != b"TQSM":
        raise ParameterError(f"{path}: bad magic {magic!r}")
    payload = data[_TQSM_HEADER.size:]
    if len(payload) != rows * cols * 8:
        raise ParameterError(f"{path}: payload size does not match {rows}x{cols}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
