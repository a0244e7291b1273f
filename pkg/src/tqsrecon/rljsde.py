"""Recurrent L-JSDE: kernel precomputation and projected-residual recursion.

For a periodic sensor layout, every model window whose origin agrees
modulo the pattern period has the same local measurement matrix.  The
projection matrix ``B``, the frequency coupling matrix ``C`` and its
diagonal ``D`` depend only on that matrix and the weights, so they are
computed once per offset class.  Each block then iterates on the projected
residual ``R`` alone:

    (u, v) = argmax q * |R|**2 / D
    delta  = R[uv] / D[uv]
    c[uv] += odc * delta
    R     -= odc * delta * C[:, uv]

which costs ``O(W**2)`` per iteration.
"""
from __future__ import annotations

import hashlib
import struct
import threading
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from numba import njit

from ._select import TIE_RTOL, argmax_score, d_floor
from .basis import WeightingConfig, basis_matrix, frequency_weights, spatial_weights, synthesize
from .config import ReconstructionConfig
from .exceptions import NoAdmissibleFrequency, ParameterError
from .grid import QuadrantPattern, local_matrix

STOP_ENERGY_RTOL = 1e-14

_COMPLEX = {"single": np.dtype("<c8"), "double": np.dtype("<c16")}
_REAL = {"single": np.dtype("<f4"), "double": np.dtype("<f8")}


class OffsetClass(NamedTuple):
    row: int
    col: int


def offset_class(origin, period: int) -> OffsetClass:
    r, c = (int(v) for v in origin)
    if r < 0 or c < 0:
        raise ParameterError("window origin must be non-negative")
    return OffsetClass(r % period, c % period)


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Precomputed kernels for one local measurement matrix.

    ``B`` has shape ``(L_local, W*W)``; ``C`` is ``(W*W, W*W)`` stored in
    Fortran order so that the column ``C[:, uv]`` read every iteration is
    contiguous; ``D`` is the real diagonal of ``C``.  Frequencies are
    flattened as ``sigma * W + rho``.
    """

    window: int
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    precision: str = "double"

    @property
    def n_measurements(self) -> int:
        return self.B.shape[0]

    @property
    def nbytes(self) -> int:
        return self.B.nbytes + self.C.nbytes + self.D.nbytes

    @property
    def floor(self) -> float:
        return d_floor(self.D)


def _sparse_matrix(local) -> sp.csr_matrix:
    L, W = local.n_measurements, local.window
    rows = np.repeat(np.arange(L), local.pixels.shape[1])
    return sp.csr_matrix((local.coef.ravel(), (rows, local.pixels.ravel())),
                         shape=(L, W * W))


def precompute_kernels(local, weights, W: int | None = None,
                       precision: str = "double") -> KernelSet:
    """Compute ``B``, ``C`` and ``D`` for one local measurement matrix.

    Accumulation is always in double precision; ``precision`` only selects
    the storage type.
    """
    W = local.window if W is None else int(W)
    if W != local.window:
        raise ParameterError("window size does not match the local matrix")
    if precision not in _COMPLEX:
        raise ParameterError(f"unknown precision {precision!r}")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (local.n_measurements,):
        raise ParameterError("one weight per local measurement is required")

    T = np.asarray(_sparse_matrix(local) @ basis_matrix(W))  # A . Phi
    B = np.conj(T) * w[:, None]
    C = B.T @ T
    C = 0.5 * (C + C.conj().T)
    D = C.diagonal().real.copy()
    C[np.diag_indices_from(C)] = D

    B = np.ascontiguousarray(B, dtype=_COMPLEX[precision])
    C = np.asfortranarray(C, dtype=_COMPLEX[precision])
    D = D.astype(_REAL[precision])
    w = w.copy()
    for a in (B, C, D, w):
        a.setflags(write=False)
    return KernelSet(window=W, B=B, C=C, D=D, weights=w, precision=precision)


class KernelCache:
    """Lazily populated map from offset class to :class:`KernelSet`.

    Safe for concurrent readers.  Two workers missing on the same class may
    both compute it; the first stored result wins and both are identical.
    """

    def __init__(self, pattern: QuadrantPattern, window: int = 32,
                 weighting: WeightingConfig | None = None, precision: str = "double"):
        self.pattern = pattern
        self.window = int(window)
        self.weighting = weighting or WeightingConfig()
        self.precision = precision
        self._sets: dict[OffsetClass, KernelSet] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @classmethod
    def from_config(cls, pattern, config: ReconstructionConfig) -> "KernelCache":
        return cls(pattern, config.window, config.weighting, config.precision)

    def __len__(self):
        return len(self._sets)

    def __contains__(self, key):
        return key in self._sets

    def classes(self):
        return sorted(self._sets)

    def items(self):
        return sorted(self._sets.items())

    def build(self, key: OffsetClass) -> KernelSet:
        local = local_matrix(self.pattern, key, self.window)
        w = spatial_weights(local.cell_origins, self.window, self.weighting)
        return precompute_kernels(local, w, self.window, self.precision)

    def get(self, origin) -> KernelSet:
        key = offset_class(origin, self.pattern.period)
        kernels = self._sets.get(key)
        if kernels is not None:
            with self._lock:
                self.hits += 1
            return kernels
        kernels = self.build(key)
        with self._lock:
            self.misses += 1
            return self._sets.setdefault(key, kernels)

    def put(self, key: OffsetClass, kernels: KernelSet) -> None:
        with self._lock:
            self._sets.setdefault(OffsetClass(*key), kernels)

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

    def stats(self) -> dict:
        return {"classes": len(self), "hits": self.hits, "misses": self.misses,
                "hit_rate": self.hit_rate}


# ------------------------------------------------------------------ recursion

def init_projected_residual(kernels: KernelSet, y_local) -> np.ndarray:
    """``R[f] = sum_m B[m, f] * y_local[m]`` (residual equals ``y`` at start)."""
    y = np.asarray(y_local, dtype=np.float64)
    if y.shape != (kernels.n_measurements,):
        raise ParameterError(
            f"y_local has length {y.size}, kernels expect {kernels.n_measurements}")
    if kernels.B.dtype == np.complex128:
        return y @ kernels.B
    return (y.astype(np.float32) @ kernels.B).astype(np.complex128)


def rljsde_select(R, kernels: KernelSet, q):
    """Frequency ``(u, v)`` maximizing ``q * |R|**2 / D``."""
    W = kernels.window
    k = argmax_score(np.asarray(R, dtype=np.complex128),
                     kernels.D.astype(np.float64, copy=False),
                     np.asarray(q, dtype=np.float64).ravel(),
                     kernels.floor, TIE_RTOL)
    if k < 0:
        raise NoAdmissibleFrequency("all frequency denominators are zero")
    return k // W, k % W


def rljsde_update(R, coeffs, kernels: KernelSet, uv, odc: float):
    """One coefficient update and the matching projected-residual update.

    Returns new ``(R, coeffs, delta)``; the inputs are not modified.
    """
    W = kernels.window
    k = uv[0] * W + uv[1]
    D_k = float(kernels.D[k])
    if not D_k > 0.0:
        raise ParameterError(f"frequency {tuple(uv)} has zero denominator")
    R = np.array(R, dtype=np.complex128)
    coeffs = np.array(coeffs, dtype=np.complex128)
    delta = R[k] / D_k
    coeffs.reshape(-1)[k] += odc * delta
    R -= odc * delta * kernels.C[:, k]
    return R, coeffs, delta


@njit(nogil=True, cache=True)
def _rljsde_loop(R, C, D, q, n_iter, odc, floor, tie_rtol, energy, stop_energy):
    F = R.shape[0]
    c = np.zeros(F, dtype=np.complex128)
    done = 0
    shrink = 2.0 * odc - odc * odc
    for _ in range(n_iter):
        if stop_energy > 0.0 and energy < stop_energy:
            break
        k = argmax_score(R, D, q, floor, tie_rtol)
        if k < 0:
            break
        delta = R[k] / D[k]
        energy -= shrink * (delta.real * R[k].real + delta.imag * R[k].imag)
        step = odc * delta
        c[k] += step
        for f in range(F):
            R[f] -= step * C[f, k]
        done += 1
    return c, done


def rljsde_coefficients(y_local, kernels: KernelSet, config: ReconstructionConfig):
    """Run the recursion; returns (coefficients, final R, iterations)."""
    R = init_projected_residual(kernels, y_local)
    q = frequency_weights(kernels.window, config.weighting)
    if config.early_stop:
        y = np.asarray(y_local, dtype=np.float64)
        energy = float(np.sum(kernels.weights * y * y))
        stop = STOP_ENERGY_RTOL * y.size
    else:
        energy, stop = 0.0, -1.0
    c, done = _rljsde_loop(R, kernels.C, kernels.D, q, config.n_iter, config.odc,
                           kernels.floor, TIE_RTOL, energy, stop)
    return c, R, done


def rljsde_block(y_local, kernels: KernelSet, config: ReconstructionConfig) -> np.ndarray:
    """Reconstruct the full ``W x W`` window (real part of the model)."""
    c, _, _ = rljsde_coefficients(y_local, kernels, config)
    return synthesize(c).real


# ------------------------------------------------------------- memory report

@dataclass(frozen=True)
class MemoryReport:
    classes: int
    window: int
    n_measurements: int
    precision: str
    bytes_B: int
    bytes_C: int
    bytes_D: int

    @property
    def total(self) -> int:
        return self.bytes_B + self.bytes_C + self.bytes_D

    def megabytes(self) -> dict:
        return {"B": self.bytes_B / 1e6, "C": self.bytes_C / 1e6,
                "D": self.bytes_D / 1e6, "total": self.total / 1e6}

    def format(self) -> str:
        mb = self.megabytes()
        head = (f"kernel memory: {self.classes} classes, W={self.window}, "
                f"L_local={self.n_measurements}, {self.precision} precision")
        rows = [f"  {k:<6}{v:>12.1f} MB" for k, v in mb.items()]
        return "\n".join([head, *rows])


def kernel_memory_report(source=64, precision: str = "single", window: int = 32,
                         n_measurements: int | None = None) -> MemoryReport:
    """Byte counts of ``B``, ``C``, ``D`` for a cache or a hypothetical class count.

    Every entry, including ``D``, is counted as one complex value (8 bytes
    single, 16 bytes double).
    """
    if precision not in _COMPLEX:
        raise ParameterError(f"unknown precision {precision!r}")
    if isinstance(source, KernelCache):
        classes, window = len(source), source.window
    else:
        classes = int(source)
    F = window * window
    L = F // 4 if n_measurements is None else int(n_measurements)
    cb = _COMPLEX[precision].itemsize
    return MemoryReport(classes, window, L, precision,
                        bytes_B=classes * L * F * cb,
                        bytes_C=classes * F * F * cb,
                        bytes_D=classes * F * cb)


# ---------------------------------------------------------- TQSK persistence

_TQSK_HEADER = struct.Struct("<4sIIIBdd32sI")
_TQSK_CLASS = struct.Struct("<III")


def pattern_digest(pattern: QuadrantPattern) -> bytes:
    h = hashlib.sha256()
    h.update(f"{pattern.period}:{pattern.seed}:{pattern.rng}:".encode())
    h.update(np.ascontiguousarray(pattern.opaque, dtype=np.uint8).tobytes())
    return h.digest()


def save_kernels(cache: KernelCache, path) -> None:
    """Write every cached kernel set to a TQSK file."""
    prec = 0 if cache.precision == "single" else 1
    cdt, rdt = _COMPLEX[cache.precision], _REAL[cache.precision]
    items = cache.items()
    with open(path, "wb") as fh:
        fh.write(_TQSK_HEADER.pack(b"TQSK", 1, cache.window, cache.pattern.period, prec,
                                   cache.weighting.spatial_decay,
                                   cache.weighting.frequency_exponent,
                                   pattern_digest(cache.pattern), len(items)))
        for key, ks in items:
            fh.write(_TQSK_CLASS.pack(key.row, key.col, ks.n_measurements))
            fh.write(np.asarray(ks.weights, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(ks.B, dtype=cdt).tobytes())
            fh.write(np.asarray(ks.C, dtype=cdt).tobytes(order="F"))
            fh.write(np.asarray(ks.D, dtype=rdt).tobytes())


def load_kernels(path, pattern: QuadrantPattern, window: int = 32,
                 weighting: WeightingConfig | None = None,
                 precision: str = "double") -> KernelCache:
    """Read a TQSK file into a fresh cache, rejecting configuration mismatches."""
    weighting = weighting or WeightingConfig()
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _TQSK_HEADER.size:
        raise ParameterError(f"{path}: truncated TQSK file")
    (magic, version, W, P, prec, decay, expo, digest,
     count) = _TQSK_HEADER.unpack_from(data)
    if magic != b"TQSK" or version != 1:
        raise ParameterError(f"{path}: not a TQSK v1 file")
    stored_precision = "single" if prec == 0 else "double"
    expected = {"window": (W, window), "period": (P, pattern.period),
                "precision": (stored_precision, precision),
                "spatial_decay": (decay, weighting.spatial_decay),
                "frequency_exponent": (expo, weighting.frequency_exponent)}
    bad = [k for k, (got, want) in expected.items() if got != want]
    if digest != pattern_digest(pattern):
        bad.append("pattern")
    if bad:
        raise ParameterError(f"{path}: kernel file does not match config ({', '.join(bad)})")

    cache = KernelCache(pattern, window, weighting, precision)
    cdt, rdt = _COMPLEX[precision], _REAL[precision]
    F = W * W
    pos = _TQSK_HEADER.size

    def take(n_items, dtype):
        nonlocal pos
        nbytes = n_items * dtype.itemsize
        if pos + nbytes > len(data):
            raise ParameterError(f"{path}: truncated kernel payload")
        arr = np.frombuffer(data, dtype=dtype, count=n_items, offset=pos)
        pos += nbytes
        return arr

    for _ in range(count):
        if pos + _TQSK_CLASS.size > len(data):
            raise ParameterError(f"{path}: truncated kernel payload")
        row, col, L = _TQSK_CLASS.unpack_from(data, pos)
        pos += _TQSK_CLASS.size
        w = take(L, np.dtype("<f8")).copy()
        B = take(L * F, cdt).reshape(L, F).copy()
        C = take(F * F, cdt).reshape(F, F, order="F").copy(order="F")
        D = take(F, rdt).copy()
        for a in (B, C, D, w):
            a.setflags(write=False)
        cache.put(OffsetClass(row, col),
                  KernelSet(window=W, B=B, C=C, D=D, weights=w, precision=precision))
    if pos != len(data):
        raise ParameterError(f"{path}: trailing bytes after kernel payload")
    return cache
