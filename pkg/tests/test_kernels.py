"""Backend parity: the compiled kernels must reproduce the NumPy fallback."""

import numpy as np
import pytest

from gyropic import kernels
from gyropic.kernels import numpy_backend

pytestmark = pytest.mark.skipif(
    not kernels.HAS_COMPILED, reason="compiled backend not available"
)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-5, 5, (n, 2))
    e = np.abs(rng.normal(2, 1, n))
    W = rng.normal(0, 2, (n, 2))
    return X, e, W


def random_grid(seed, nx=17, L=6.0):
    rng = np.random.default_rng(seed)
    return rng.normal(0, 1, (nx, nx, 2)), L


FIELD_CASES = [
    (0, 1.0, 0),   # constant b, no E
    (1, 0.5, 0),   # parabolic b, no E
    (1, 0.5, 1),   # parabolic b, shear E
    (2, 0.0, 0),   # disk b
    (2, 0.0, 2),   # disk b, grid E
]


@pytest.mark.parametrize("order", [1, 2, 3])
@pytest.mark.parametrize("b_kind,b_param,e_kind", FIELD_CASES)
def test_push_matches_numpy(order, b_kind, b_param, e_kind):
    Xc, ec, Wc = random_state(257, seed=order * 10 + e_kind)
    Xn, en, Wn = Xc.copy(), ec.copy(), Wc.copy()
    E_grid, L = random_grid(3)
    for eps, dt in ((1.0, 0.05), (0.04, 0.1)):
        kernels.push_ensemble(Xc, ec, Wc, 0.2, dt, eps, order, b_kind, b_param, e_kind, E_grid, L)
        numpy_backend.push_ensemble(Xn, en, Wn, 0.2, dt, eps, order, b_kind, b_param, e_kind, E_grid, L)
        assert np.allclose(Xc, Xn, rtol=1e-13, atol=1e-14)
        assert np.allclose(ec, en, rtol=1e-13, atol=1e-14)
        assert np.allclose(Wc, Wn, rtol=1e-13, atol=1e-14)


def test_deposit_matches_numpy():
    rng = np.random.default_rng(40)
    X = rng.uniform(-7, 7, (4096, 2))
    w = rng.uniform(0, 1, 4096)
    rho_c = np.zeros((33, 33))
    rho_n = np.zeros((33, 33))
    esc_c = kernels.deposit_cic(X, w, 6.0, rho_c)
    esc_n = numpy_backend.deposit_cic(X, w, 6.0, rho_n)
    assert esc_c == esc_n
    assert np.allclose(rho_c, rho_n, rtol=1e-13, atol=1e-16)


def test_gather_matches_numpy():
    E_grid, L = random_grid(41, nx=33)
    rng = np.random.default_rng(42)
    X = rng.uniform(-7, 7, (2048, 2))
    out_c = kernels.gather_bilinear(E_grid, L, X)
    out_n = numpy_backend.gather_bilinear(E_grid, L, X)
    assert np.allclose(out_c, out_n, rtol=1e-14, atol=1e-15)


def test_disk_clamp_matches_numpy():
    # positions beyond the |x| = 9.9 cap use the same bounded continuation
    X = np.array([[9.95, 0.0], [0.0, -10.4], [8.0, 8.0]])
    e = np.array([1.0, 2.0, 3.0])
    W = np.array([[0.1, 0.2], [-0.3, 0.1], [0.2, -0.2]])
    Xn, en, Wn = X.copy(), e.copy(), W.copy()
    kernels.push_ensemble(X, e, W, 0.0, 0.05, 0.5, 3, 2, 0.0, 0)
    numpy_backend.push_ensemble(Xn, en, Wn, 0.0, 0.05, 0.5, 3, 2, 0.0, 0)
    assert np.allclose(X, Xn, rtol=1e-13)
    assert np.allclose(e, en, rtol=1e-13)
    assert np.allclose(W, Wn, rtol=1e-13)
    assert np.all(np.isfinite(X)) and np.all(np.isfinite(W))


def test_backend_env_override(monkeypatch):
    import importlib
    import gyropic.kernels as K

    monkeypatch.setenv("GYROPIC_BACKEND", "numpy")
    mod = importlib.reload(K)
    try:
        assert mod.BACKEND == "numpy"
    finally:
        monkeypatch.delenv("GYROPIC_BACKEND")
        importlib.reload(K)
