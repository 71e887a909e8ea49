import numpy as np
import pytest

from stylecore import autodiff as ad
from stylecore import selfsim as ss
from stylecore.transport import TransportError


def test_identical_vectors_give_zero_matrix():
    a = np.tile([[1.0, 2.0, 3.0]], (4, 1))
    d = ss.self_sim_matrix(a)
    assert np.abs(d.data).max() <= 1e-12


def test_two_orthogonal_vectors():
    d = ss.self_sim_matrix(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.allclose(d.data, [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)


def test_matches_brute_force(rng):
    a = rng.normal(size=(3, 5))
    d = ss.self_sim_matrix(a).data
    for i in range(3):
        for j in range(3):
            expect = 1 - a[i] @ a[j] / (np.linalg.norm(a[i]) * np.linalg.norm(a[j]))
            assert d[i, j] == pytest.approx(expect, abs=1e-12)


def test_self_matrix_properties(rng):
    a = rng.normal(size=(10, 6))
    d = ss.self_sim_matrix(a).data
    assert np.abs(np.diag(d)).max() <= 1e-12
    assert np.allclose(d, d.T, atol=1e-12)
    assert d.min() >= -1e-12 and d.max() <= 2 + 1e-12


def test_content_loss_self_is_exactly_zero(rng):
    a = rng.normal(size=(12, 7))
    assert float(ss.content_loss(a, a).data) == 0.0


def test_content_loss_orthonormal_invariance(rng):
    o = rng.normal(size=(15, 6))
    c = rng.normal(size=(15, 6))
    base = float(ss.content_loss(o, c).data)
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    rotated = float(ss.content_loss(o @ q.T, c).data)
    assert abs(rotated - base) <= 1e-6
    assert float(ss.content_loss(c @ q.T, c).data) <= 1e-6


def test_content_loss_normalization_quotient():
    # scaled distance structure normalizes away: both matrices become
    # [[0,1],[1,0]] after column normalization
    o = np.array([[1.0, 0.0], [0.0, 1.0]])
    c = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
    assert float(ss.content_loss(o, c).data) <= 1e-12


def test_content_loss_nonnegative(rng):
    for _ in range(10):
        o = rng.normal(size=(8, 4))
        c = rng.normal(size=(8, 4))
        assert float(ss.content_loss(o, c).data) >= 0.0


def test_content_loss_degenerate_sample_rejected():
    a = np.tile([[1.0, 2.0]], (4, 1))  # all identical: zero columns
    b = np.random.default_rng(0).normal(size=(4, 2))
    with pytest.raises(TransportError):
        ss.content_loss(a, b)


def test_content_loss_differentiable(rng):
    c = rng.normal(size=(6, 4))

    def f(x):
        return ss.content_loss(x, ad.Tensor(c))

    x0 = rng.normal(size=(6, 4))
    assert ad.finite_diff_check(f, x0, eps=1e-4) <= 1e-3
