import numpy as np
import pytest

from gnepkit import _kernels_py, kernels

cython = pytest.importorskip("gnepkit._kernels")


def _polytope(rng, m, n):
    A = rng.normal(size=(m, n))
    A /= np.linalg.norm(A, axis=1)[:, None]
    return A, np.abs(rng.normal(size=m)) + 0.1


@pytest.mark.parametrize("seed", range(20))
def test_dykstra_parity(seed):
    rng = np.random.default_rng(seed)
    A, b = _polytope(rng, 5, 4)
    v = 3 * rng.normal(size=4)
    lo, hi = -np.ones(4), np.ones(4)
    xa, sa, _ = cython.dykstra(v, lo, hi, A, b, 1e-13, 100000, 1e-9)
    xb, sb, _ = _kernels_py.dykstra(v, lo, hi, A, b, 1e-13, 100000, 1e-9)
    # summation order may move the stopping sweep by one
    assert abs(sa - sb) <= 1
    np.testing.assert_allclose(xa, xb, atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_box_qp_parity(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(6, 6))
    q = M.T @ M + 0.01 * np.eye(6)
    g = rng.normal(size=6)
    L = float(np.linalg.eigvalsh(q).max())
    lo, hi = -np.ones(6), np.ones(6)
    ya, ia, ra, sa = cython.box_qp(q, g, lo, hi, lo, L, 1e-10, 20000)
    yb, ib, rb, sb = _kernels_py.box_qp(q, g, lo, hi, lo, L, 1e-10, 20000)
    assert (ia, sa) == (ib, sb) and sa == 0
    np.testing.assert_allclose(ya, yb, atol=1e-10)


def test_dykstra_does_not_stop_on_a_stalled_iterate():
    # the iterate sits at the feasible corner (1, 1) for a sweep while the corrections still move
    A = np.array([[0.83118605, -0.55599438], [-0.55379953, 0.83265003], [-0.86406284, -0.50338395]])
    b = np.array([1.00699848, 0.63400348, 0.34093873])
    v = np.array([0.21992582, 4.70038877])
    x, _, _ = kernels.dykstra(v, -np.ones(2), np.ones(2), A, b, 1e-13, 100000, 1e-9)
    # optimality: v - x lies in the normal cone, checked through the active row
    assert np.allclose(x, [0.35869758, 1.0], atol=1e-6)


def test_box_qp_flags_negative_curvature():
    q = np.array([[-1.0, 0.0], [0.0, 1.0]])
    y, _, _, status = _kernels_py.box_qp(q, np.array([0.1, 0.0]), -np.ones(2), np.ones(2),
                                         np.zeros(2), 1.0, 1e-10, 1000)
    assert status == 2


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
