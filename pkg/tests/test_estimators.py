import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from tqsrecon import JSDEReconstructor, ParameterError, ThreeQuarterSampler, generate_pattern


@pytest.fixture
def image():
    y, x = np.mgrid[0:29, 0:33] / 29.0
    return 0.5 + 0.25 * np.sin(4 * x) * np.cos(3 * y)


def test_sampler_pads_and_measures(image):
    s = ThreeQuarterSampler(period=8, seed=3, block_size=2).fit()
    frame = s.transform(image)
    assert s.extent_ == (29, 33)
    assert frame.shape == (15, 17)
    assert s.pattern_ == generate_pattern(3, 8, 2)


def test_sampler_not_fitted(image):
    with pytest.raises(NotFittedError):
        ThreeQuarterSampler().transform(image)


def test_get_set_params_and_clone():
    est = JSDEReconstructor(pattern=generate_pattern(0, 8, 2), window_size=8, block_size=2)
    params = est.get_params()
    assert params["window_size"] == 8 and params["algorithm"] == "rljsde"
    est.set_params(n_iter=5)
    twin = clone(est)
    assert twin.n_iter == 5 and twin.pattern == est.pattern


def test_reconstructor_roundtrip(image):
    sampler = ThreeQuarterSampler(period=8, seed=3, block_size=2).fit()
    frame = sampler.transform(image)
    common = dict(pattern=sampler.pattern_, window_size=8, block_size=2, n_iter=30, clip=False)
    rl = JSDEReconstructor(algorithm="rljsde", **common).fit(frame)
    lj = JSDEReconstructor(algorithm="ljsde", **common).fit(frame)
    assert len(rl.kernels_) > 0 and lj.kernels_ is None
    a, b = rl.transform(frame), lj.transform(frame)
    assert a.shape == (30, 34)
    assert np.max(np.abs(a - b)) <= 1e-6
    assert rl.report_.cache_stats["misses"] == len(rl.kernels_)
    assert rl.score(frame, image) > 25


def test_pipeline_composition(image):
    pattern = generate_pattern(3, 8, 2)
    pipe = make_pipeline(
        ThreeQuarterSampler(period=8, seed=3, block_size=2),
        JSDEReconstructor(pattern=pattern, window_size=8, block_size=2, n_iter=20))
    out = pipe.fit_transform(image)
    assert out.shape == (30, 34)
    assert out.min() >= 0 and out.max() <= 1


def test_reconstructor_requires_pattern():
    with pytest.raises(ParameterError):
        JSDEReconstructor().fit()
    with pytest.raises(NotFittedError):
        JSDEReconstructor(pattern=generate_pattern(0)).transform(np.zeros((16, 16)))
