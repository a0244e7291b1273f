"""scikit-learn style wrappers around sensor simulation and reconstruction.

A single 2-D array is one image (or one measurement frame), not a
``(n_samples, n_features)`` table.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .basis import WeightingConfig
from .config import ReconstructionConfig
from .exceptions import ParameterError
from .grid import QuadrantPattern, generate_pattern, simulate_measurement
from .pipeline import crop, pad_to_block_multiple, psnr, reconstruct
from .rljsde import KernelCache


def _as_image(X, name="X"):
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=2,
                    ensure_min_features=2, input_name=name)
    return X


class ThreeQuarterSampler(TransformerMixin, BaseEstimator):
    """Simulate a three-quarter sampling sensor.

    ``fit`` draws the periodic pattern; ``transform`` maps a reference
    image in [0, 1] to its measurement frame of half the resolution.  With
    ``pad=True`` images are edge-padded to a multiple of ``block_size``
    first and ``extent_`` records the original size.
    """

    def __init__(self, period=32, seed=0, block_size=4, pad=True):
        self.period = period
        self.seed = seed
        self.block_size = block_size
        self.pad = pad

    def fit(self, X=None, y=None):
        self.pattern_ = generate_pattern(self.seed, self.period, self.block_size)
        return self

    def transform(self, X):
        check_is_fitted(self, "pattern_")
        X = _as_image(X)
        if self.pad:
            X, self.extent_ = pad_to_block_multiple(X, self.block_size)
        else:
            self.extent_ = X.shape
        return simulate_measurement(X, self.pattern_)


class JSDEReconstructor(TransformerMixin, BaseEstimator):
    """Reconstruct full-resolution images from three-quarter sampling frames.

    Parameters
    ----------
    pattern : QuadrantPattern
        Sensor layout the frames were measured with.
    algorithm : {"rljsde", "ljsde"}
        ``"rljsde"`` uses per-offset-class precomputed kernels; ``"ljsde"``
        is the direct baseline.  Both give the same image up to round-off.
    window_size, block_size : int
        Model window ``W`` and target block ``B``.
    n_iter : int
        Iterations per block.
    odc : float
        Step width applied to every coefficient update, in (0, 1].
    spatial_decay, frequency_exponent : float
        Parameters of the spatial and frequency weighting functions.
    precision : {"double", "single"}
        Kernel storage precision.
    clip : bool
        Clip the output to [0, 1].
    n_jobs : int
        Worker threads over blocks; ``-1`` uses all cores.

    Attributes
    ----------
    kernels_ : KernelCache or None
        Kernel cache warmed by ``fit`` (RL-JSDE only); reused by ``transform``.
    report_ : ReconstructionReport
        Report of the most recent ``transform``.
    """

    def __init__(self, pattern=None, algorithm="rljsde", window_size=32, block_size=4,
                 n_iter=200, odc=0.5, spatial_decay=0.8, frequency_exponent=2.0,
                 precision="double", clip=True, early_stop=False, n_jobs=1):
        self.pattern = pattern
        self.algorithm = algorithm
        self.window_size = window_size
        self.block_size = block_size
        self.n_iter = n_iter
        self.odc = odc
        self.spatial_decay = spatial_decay
        self.frequency_exponent = frequency_exponent
        self.precision = precision
        self.clip = clip
        self.early_stop = early_stop
        self.n_jobs = n_jobs

    def _config(self) -> ReconstructionConfig:
        return ReconstructionConfig(
            window=self.window_size, block=self.block_size, n_iter=self.n_iter,
            odc=self.odc, precision=self.precision, clip=self.clip,
            algorithm=self.algorithm, early_stop=self.early_stop,
            weighting=WeightingConfig(self.spatial_decay, self.frequency_exponent))

    def fit(self, X=None, y=None):
        if not isinstance(self.pattern, QuadrantPattern):
            raise ParameterError("JSDEReconstructor needs a QuadrantPattern")
        self.config_ = self._config()
        self.config_.check_period(self.pattern.period)
        self.kernels_ = None
        if self.algorithm == "rljsde":
            self.kernels_ = KernelCache.from_config(self.pattern, self.config_)
            if X is not None:
                # warm the cache for this frame geometry
                reconstruct(_as_image(X), self.pattern, self.config_.replace(n_iter=0),
                            cache=self.kernels_)
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = _as_image(X)
        self.report_ = reconstruct(X, self.pattern, self.config_, n_jobs=self.n_jobs,
                                   cache=self.kernels_)
        return self.report_.image

    def score(self, X, y):
        """PSNR (dB) of the reconstruction of frame ``X`` against reference ``y``.

        ``y`` may be the unpadded reference; the reconstruction is cropped to it.
        """
        y = _as_image(y, "y")
        est = crop(self.transform(X), y.shape)
        return psnr(y, est)
