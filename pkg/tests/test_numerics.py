import numpy as np
import pytest

from thzdpp.numerics import integrate_uniform, logdet_hermitian_psd, matmul, svd


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.result_type(a, b))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def power_iteration_spectrum(a, iters=3000):
    """Eigenvalues of ``A^H A`` by power iteration with deflation."""
    g = a.conj().T @ a
    vals = []
    rng = np.random.default_rng(1)
    for _ in range(g.shape[0]):
        x = _crandn(rng, g.shape[0])
        for _ in range(iters):
            y = g @ x
            norm = np.linalg.norm(y)
            if norm == 0:
                break
            x = y / norm
        lam = float(np.real(np.vdot(x, g @ x)))
        vals.append(max(lam, 0.0))
        g = g - lam * np.outer(x, x.conj())
    return np.sort(vals)[::-1]


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(0)
    a, b = _crandn(rng, 3, 5), _crandn(rng, 5, 4)
    assert np.allclose(matmul(a, b), naive_matmul(a, b), atol=1e-13)


def test_matmul_shape_mismatch():
    with pytest.raises(ValueError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@pytest.mark.parametrize("shape", [(1, 1), (4, 4), (6, 3), (3, 6), (8, 8), (8, 1), (1, 7)])
def test_svd_properties(shape):
    rng = np.random.default_rng(sum(shape))
    a = _crandn(rng, *shape)
    res = svd(a)
    s = res.singular_values
    assert np.all(s >= 0)
    assert np.all(np.diff(s) <= 1e-12)
    assert np.max(np.abs(res.reconstruct() - a)) < 1e-12
    u, v = res.left_vectors, res.right_vectors
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=1e-12)
    assert np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-12)


def test_singular_values_match_power_iteration():
    rng = np.random.default_rng(3)
    a = _crandn(rng, 6, 4)
    expected = np.sqrt(power_iteration_spectrum(a))
    assert np.allclose(svd(a).singular_values, expected, atol=1e-8)


def test_svd_rank_deficient_and_zero():
    rng = np.random.default_rng(4)
    x = _crandn(rng, 5, 1)
    a = x @ _crandn(rng, 1, 4)
    res = svd(a)
    assert res.singular_values[0] == pytest.approx(np.linalg.norm(x) * np.linalg.norm(a[0] / x[0, 0]), rel=1e-12)
    assert np.all(res.singular_values[1:] < 1e-12)
    assert np.allclose(res.reconstruct(), a, atol=1e-12)
    zero = svd(np.zeros((3, 2)))
    assert np.all(zero.singular_values == 0)
    assert np.allclose(zero.left_vectors.conj().T @ zero.left_vectors, np.eye(2), atol=1e-12)


def test_svd_batched_matches_single():
    rng = np.random.default_rng(5)
    a = _crandn(rng, 7, 5, 3)
    batch = svd(a)
    for i in range(7):
        assert np.allclose(batch.singular_values[i], svd(a[i]).singular_values, atol=1e-13)
    assert np.allclose(batch.reconstruct(), a, atol=1e-12)


def test_svd_diagonal_known():
    res = svd(np.diag([1.0, 3.0, 2.0]))
    assert np.allclose(res.singular_values, [3, 2, 1])


def test_svd_rejects_non_finite():
    with pytest.raises(ValueError):
        svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_logdet_diagonal_and_batch():
    assert logdet_hermitian_psd(np.diag([2.0, 4.0, 8.0])) == pytest.approx(6.0, abs=1e-14)
    batch = np.stack([np.eye(2) * 2, np.eye(2) * 4])
    assert np.allclose(logdet_hermitian_psd(batch), [2.0, 4.0])


def test_logdet_matches_eigenvalues():
    rng = np.random.default_rng(6)
    b = _crandn(rng, 4, 6)
    g = np.eye(4) + b @ b.conj().T
    assert logdet_hermitian_psd(g) == pytest.approx(np.sum(np.log2(np.linalg.eigvalsh(g))), abs=1e-10)


def test_logdet_rejects_bad_input():
    with pytest.raises(ValueError):
        logdet_hermitian_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        logdet_hermitian_psd(np.diag([1.0, -1.0]))


def test_integrate_uniform_known_integrals():
    assert integrate_uniform(lambda x: x**3, 0.0, 2.0, 10) == pytest.approx(4.0, abs=1e-12)
    assert integrate_uniform(np.cos, 0.0, np.pi / 2, 200) == pytest.approx(1.0, abs=1e-8)
    # odd panel counts are bumped to even
    assert integrate_uniform(lambda x: x**2, -1.0, 1.0, 7) == pytest.approx(2 / 3, abs=1e-12)
