"""Equivalence of the compiled and pure-Python compute backends.

The two backends pin the same accumulation order, so results agree bit for
bit wherever both run the same libm-free arithmetic; the exponential weight
goes through different float32 exp implementations and may differ by an ulp.
"""
import numpy as np
import pytest

from ringbf._backend import load_backend
from ringbf.filter import V_CODES, _ring_arrays
from ringbf.kernel import VFamily, WFamily, build_rings

try:
    CYTHON = load_backend("cython")
except ImportError:  # pragma: no cover - compiled core absent
    CYTHON = None

PYTHON = load_backend("python")

needs_cython = pytest.mark.skipif(CYTHON is None, reason="compiled core not built")

EXACT_V = [VFamily.Abs, VFamily.Frac, VFamily.Quad]


def _filter_args(n=3, w=None):
    dxs, dys, starts, weights = _ring_arrays(build_rings(n, w or WFamily.power()))
    return dxs, dys, starts, weights


def _image(seed, shape=(32, 32)):
    return np.round(np.random.default_rng(seed).normal(0, 250, shape))


def test_backend_names():
    assert PYTHON.BACKEND_NAME == "python"
    if CYTHON is not None:
        assert CYTHON.BACKEND_NAME == "cython"


def test_load_backend_rejects_unknown_name():
    with pytest.raises(ValueError):
        load_backend("fortran")


@needs_cython
@pytest.mark.parametrize("v", EXACT_V, ids=lambda v: v.value)
def test_v_weights_bit_identical_rational_families(v):
    d = np.random.default_rng(1).normal(0, 400, 4096).astype(np.float32)
    a = np.asarray(CYTHON.v_weights(d, 0.07, V_CODES[v]))
    b = np.asarray(PYTHON.v_weights(d, 0.07, V_CODES[v]))
    assert np.array_equal(a, b)


@needs_cython
def test_v_weights_exp_within_ulp_tolerance():
    d = np.random.default_rng(2).normal(0, 400, 4096).astype(np.float32)
    a = np.asarray(CYTHON.v_weights(d, 0.01, V_CODES[VFamily.Exp]), dtype=np.float64)
    b = np.asarray(PYTHON.v_weights(d, 0.01, V_CODES[VFamily.Exp]), dtype=np.float64)
    assert np.allclose(a, b, rtol=5e-6, atol=1e-12)


@needs_cython
@pytest.mark.parametrize("border", [0, 1], ids=["clamp", "skip"])
@pytest.mark.parametrize("v", EXACT_V, ids=lambda v: v.value)
def test_filter_values_bit_identical_rational_families(v, border):
    f = _image(3)
    dxs, dys, starts, weights = _filter_args(n=3)
    args = (f, 0.05, V_CODES[v], dxs, dys, starts, weights, border, -100.0, 300.0, True)
    a = np.asarray(CYTHON.filter_values(*args))
    b = np.asarray(PYTHON.filter_values(*args))
    assert np.array_equal(a, b)


@needs_cython
def test_filter_values_exp_within_ulp_tolerance():
    # the two float32 exp implementations differ by an ulp; that relative
    # perturbation of the weights moves the weighted mean by at most a few
    # ulps of the data range
    f = _image(4)
    for n in (1, 5):
        dxs, dys, starts, weights = _filter_args(n=n)
        args = (f, 0.02, V_CODES[VFamily.Exp], dxs, dys, starts, weights, 0, 0.0, 0.0, False)
        a = np.asarray(CYTHON.filter_values(*args))
        b = np.asarray(PYTHON.filter_values(*args))
        atol = 4 * 2.0**-23 * (f.max() - f.min())
        assert np.allclose(a, b, rtol=5e-6, atol=atol)


@needs_cython
@pytest.mark.parametrize("v", EXACT_V, ids=lambda v: v.value)
def test_ensemble_filter_bit_identical_rational_families(v):
    vals = np.random.default_rng(5).normal(0, 1, (500, 13))
    _, _, starts, weights = _filter_args(n=3)
    a = np.asarray(CYTHON.ensemble_filter(vals, 1.3, V_CODES[v], starts, weights))
    b = np.asarray(PYTHON.ensemble_filter(vals, 1.3, V_CODES[v], starts, weights))
    assert np.array_equal(a, b)


@needs_cython
def test_ensemble_filter_exp_within_ulp_tolerance():
    vals = np.random.default_rng(6).normal(0, 1, (500, 29))
    _, _, starts, weights = _filter_args(n=5)
    a = np.asarray(CYTHON.ensemble_filter(vals, 2.0, V_CODES[VFamily.Exp], starts, weights))
    b = np.asarray(PYTHON.ensemble_filter(vals, 2.0, V_CODES[VFamily.Exp], starts, weights))
    atol = 4 * 2.0**-23 * (vals.max() - vals.min())
    assert np.allclose(a, b, rtol=5e-6, atol=atol)


def test_set_backend_roundtrip():
    import ringbf

    original = ringbf.backend_name()
    try:
        ringbf.set_backend("python")
        assert ringbf.backend_name() == "python"
    finally:
        ringbf.set_backend(original)
    assert ringbf.backend_name() == original
