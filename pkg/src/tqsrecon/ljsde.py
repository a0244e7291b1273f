"""Baseline L-JSDE block reconstruction.

Every iteration evaluates the selection criterion by direct summation over
all local measurements and all frequencies, so the per-iteration cost is
``O(L_local * W**2) = O(W**4)``.  No kernels are stored across blocks; the
per-measurement transforms are rebuilt for every window from 1-D phase
tables.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from ._select import TIE_RTOL, argmax_score, d_floor, score_grid
from .basis import frequency_weights, phase_table, spatial_weights, synthesize
from .config import ReconstructionConfig
from .exceptions import NoAdmissibleFrequency, ParameterError

STOP_ENERGY_RTOL = 1e-14


@njit(nogil=True, cache=True)
def _measurement_transforms(pixels, coef, W, table):
    # T[m, sigma*W + rho] = sum_k coef[m,k] * Phi(eta_k, gamma_k, sigma, rho)
    L = pixels.shape[0]
    T = np.zeros((L, W * W), dtype=np.complex128)
    for m in range(L):
        for k in range(pixels.shape[1]):
            eta = pixels[m, k] // W
            gam = pixels[m, k] % W
            a = coef[m, k]
            for s in range(W):
                es = a * table[(eta * s) % W]
                base = s * W
                for r in range(W):
                    T[m, base + r] += es * table[(gam * r) % W]
    return T


@njit(nogil=True, cache=True)
def _weighted_denominator(T, w):
    L, F = T.shape
    D = np.zeros(F)
    for m in range(L):
        for f in range(F):
            z = T[m, f]
            D[f] += w[m] * (z.real * z.real + z.imag * z.imag)
    return D


@njit(nogil=True, cache=True)
def _projected(T, w, r, out):
    # out[f] = sum_m conj(T[m, f]) * w[m] * r[m]
    L, F = T.shape
    for f in range(F):
        out[f] = 0.0
    for m in range(L):
        a = w[m] * r[m]
        for f in range(F):
            out[f] += np.conj(T[m, f]) * a


@njit(nogil=True, cache=True)
def _ljsde_loop(T, w, y, D, q, n_iter, odc, floor, tie_rtol, stop_energy):
    L, F = T.shape
    r = y.astype(np.complex128)
    c = np.zeros(F, dtype=np.complex128)
    numer = np.empty(F, dtype=np.complex128)
    done = 0
    for _ in range(n_iter):
        if stop_energy > 0.0:
            e = 0.0
            for m in range(L):
                e += w[m] * (r[m].real * r[m].real + r[m].imag * r[m].imag)
            if e < stop_energy:
                break
        _projected(T, w, r, numer)
        k = argmax_score(numer, D, q, floor, tie_rtol)
        if k < 0:
            break
        step = odc * (numer[k] / D[k])
        c[k] += step
        for m in range(L):
            r[m] -= step * T[m, k]
        done += 1
    return c, r, done


def measurement_transforms(local_matrix) -> np.ndarray:
    """Per-measurement transforms ``T[m, f] = sum A[m,eta,gamma] Phi[eta,gamma,f]``."""
    W = local_matrix.window
    return _measurement_transforms(np.ascontiguousarray(local_matrix.pixels),
                                   np.ascontiguousarray(local_matrix.coef),
                                   W, phase_table(W))


def weighted_residual_energy(residual, weights) -> float:
    residual = np.asarray(residual)
    weights = np.asarray(weights, dtype=np.float64)
    if residual.shape != weights.shape:
        raise ParameterError("residual and weights must have equal length")
    return float(np.sum(np.abs(residual) ** 2 * weights))


def ljsde_select(residual, local_matrix, weights, q):
    """Select the next frequency by direct evaluation of the criterion.

    Returns ``(u, v, scores)`` with ``scores`` a ``W x W`` grid in which
    inadmissible frequencies hold ``-inf``.  Raises
    :class:`NoAdmissibleFrequency` if every denominator vanishes.
    """
    W = local_matrix.window
    T = measurement_transforms(local_matrix)
    w = np.asarray(weights, dtype=np.float64)
    r = np.asarray(residual, dtype=np.complex128)
    D = _weighted_denominator(T, w)
    numer = np.empty(W * W, dtype=np.complex128)
    _projected(T, w, r, numer)
    q = np.asarray(q, dtype=np.float64).ravel()
    floor = d_floor(D)
    k = argmax_score(numer, D, q, floor, TIE_RTOL)
    if k < 0:
        raise NoAdmissibleFrequency("all frequency denominators are zero")
    return k // W, k % W, score_grid(numer, D, q, floor).reshape(W, W)


def ljsde_coefficients(y_local, local_matrix, config: ReconstructionConfig):
    """Run the L-JSDE iteration; returns (coefficients, residual, iterations)."""
    W = local_matrix.window
    y = np.asarray(y_local, dtype=np.float64)
    if y.shape != (local_matrix.n_measurements,):
        raise ParameterError("y_local length does not match the local matrix")
    w = spatial_weights(local_matrix.cell_origins, W, config.weighting)
    q = frequency_weights(W, config.weighting)
    T = measurement_transforms(local_matrix)
    D = _weighted_denominator(T, w)
    stop = STOP_ENERGY_RTOL * y.size if config.early_stop else -1.0
    return _ljsde_loop(T, w, y, D, q, config.n_iter, config.odc,
                       d_floor(D), TIE_RTOL, stop)


def ljsde_block(y_local, local_matrix, config: ReconstructionConfig) -> np.ndarray:
    """Reconstruct the full ``W x W`` window (real part of the model)."""
    c, _, _ = ljsde_coefficients(y_local, local_matrix, config)
    return synthesize(c).real
