"""Frequency selection rule shared by both reconstruction algorithms."""
import numpy as np
from numba import njit

# scores within this relative distance of the maximum count as tied; conjugate
# frequency pairs tie exactly for real residuals and must not be split by
# summation-order round-off
TIE_RTOL = 1e-9
# denominators below this fraction of max(D) are treated as zero
D_FLOOR_RTOL = 1e-12


@njit(nogil=True, cache=True)
def argmax_score(numer, denom, q, d_floor, tie_rtol):
    """Index maximizing ``q * |numer|**2 / denom`` over ``denom > d_floor``.

    Ties resolve to the smallest index.  Returns -1 when no index is
    admissible.
    """
    n = numer.shape[0]
    best = -1.0
    for k in range(n):
        if denom[k] > d_floor:
            z = numer[k]
            s = q[k] * (z.real * z.real + z.imag * z.imag) / denom[k]
            if s > best:
                best = s
    if best < 0.0:
        return -1
    cut = best * (1.0 - tie_rtol)
    for k in range(n):
        if denom[k] > d_floor:
            z = numer[k]
            s = q[k] * (z.real * z.real + z.imag * z.imag) / denom[k]
            if s >= cut:
                return k
    return -1


def score_grid(numer, denom, q, d_floor):
    """Vectorized scores; inadmissible frequencies get ``-inf``."""
    numer = np.asarray(numer)
    denom = np.asarray(denom, dtype=np.float64)
    out = np.full(denom.shape, -np.inf)
    ok = denom > d_floor
    out[ok] = q[ok] * np.abs(numer[ok]) ** 2 / denom[ok]
    return out


def d_floor(denom) -> float:
    denom = np.asarray(denom, dtype=np.float64)
    return float(D_FLOOR_RTOL * denom.max(initial=0.0))
