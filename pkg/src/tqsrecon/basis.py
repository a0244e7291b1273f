"""Fourier model basis, model synthesis and the two weighting functions."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import ParameterError

# relative margin keeping the frequency weight strictly positive at the corner
FREQ_EPS = 1e-6


@dataclass(frozen=True)
class WeightingConfig:
    spatial_decay: float = 0.8
    frequency_exponent: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.spatial_decay < 1.0:
            raise ParameterError("spatial_decay must lie in (0, 1)")
        if self.frequency_exponent < 0:
            raise ParameterError("frequency_exponent must be >= 0")


def fourier_basis(eta, gamma, sigma, rho, W: int):
    """``exp(2j*pi*eta*sigma/W) * exp(2j*pi*gamma*rho/W)``; broadcasts over arrays."""
    eta, gamma, sigma, rho = (np.asarray(v, dtype=np.int64) for v in (eta, gamma, sigma, rho))
    # reduce the integer phase first so large products stay exact
    phase = np.mod(eta * sigma, W) / W + np.mod(gamma * rho, W) / W
    return np.exp(2j * np.pi * phase)


@lru_cache(maxsize=8)
def phase_table(W: int) -> np.ndarray:
    """``exp(2j*pi*k/W)`` for ``k`` in ``[0, W)``; every basis value is a product of two entries."""
    table = np.exp(2j * np.pi * np.arange(W) / W)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=4)
def basis_matrix(W: int) -> np.ndarray:
    """Dense ``(W*W, W*W)`` basis; row ``eta*W + gamma``, column ``sigma*W + rho``."""
    e = phase_table(W)
    k = np.arange(W)
    one_d = e[np.outer(k, k) % W]  # [eta, sigma]
    Phi = np.einsum("as,gr->agsr", one_d, one_d).reshape(W * W, W * W)
    Phi.setflags(write=False)
    return Phi


def synthesize(coeffs) -> np.ndarray:
    """Image-domain model ``sum_{sigma,rho} Phi[eta,gamma,sigma,rho] * c[sigma,rho]``.

    Accepts a ``W x W`` grid or a flat vector of length ``W*W``.  With the
    positive-exponent basis this is an unnormalized inverse DFT.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.ndim == 1:
        W = int(round(np.sqrt(c.size)))
        if W * W != c.size:
            raise ParameterError("flat coefficient vector length must be a square")
        c = c.reshape(W, W)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ParameterError(f"coefficients must be square, got {c.shape}")
    return np.fft.ifft2(c) * c.size


def spatial_weights(cell_origins, W: int, cfg: WeightingConfig) -> np.ndarray:
    """Spatial weight ``decay ** d`` for each measurement.

    ``d`` is the Euclidean distance from the center of the measurement's
    2x2 cell to the window center ``((W-1)/2, (W-1)/2)``.
    """
    centers = np.asarray(cell_origins, dtype=np.float64) + 0.5
    d = np.hypot(centers[:, 0] - (W - 1) / 2, centers[:, 1] - (W - 1) / 2)
    return cfg.spatial_decay ** d


def spatial_weight(m: int, local_matrix, cfg: WeightingConfig) -> float:
    return float(spatial_weights(local_matrix.cell_origins[m:m + 1],
                                 local_matrix.window, cfg)[0])


def frequency_weight(sigma, rho, W: int, cfg: WeightingConfig):
    """Radial low-pass preference over centered frequency indices."""
    sigma = np.asarray(sigma)
    rho = np.asarray(rho)
    s = np.minimum(sigma, W - sigma)
    r = np.minimum(rho, W - rho)
    radius = np.hypot(s, r)
    rmax = np.sqrt(2.0) * (W / 2) * (1.0 + FREQ_EPS)
    return (1.0 - radius / rmax) ** cfg.frequency_exponent


@lru_cache(maxsize=16)
def frequency_weights(W: int, cfg: WeightingConfig) -> np.ndarray:
    """Flattened ``(W*W,)`` frequency weights, index ``sigma*W + rho``."""
    s, r = np.meshgrid(np.arange(W), np.arange(W), indexing="ij")
    q = frequency_weight(s, r, W, cfg).ravel().astype(np.float64)
    q.setflags(write=False)
    return q
