import numpy as np
import pytest

from askl.losses import LossKind, batch_loss_and_grad, loss_gradient, loss_value

HINGE, SQ = LossKind.MulticlassHinge, LossKind.Squared


def test_hinge_examples(kernels):
    assert loss_value(HINGE, [2.0, 0.5, 0.0], 0) == 0.0
    np.testing.assert_array_equal(loss_gradient(HINGE, [2.0, 0.5, 0.0], 0), [0, 0, 0])
    assert loss_value(HINGE, [0.2, 0.5, 0.0], 0) == pytest.approx(1.3, abs=1e-15)
    np.testing.assert_array_equal(loss_gradient(HINGE, [0.2, 0.5, 0.0], 0), [-1, 1, 0])


def test_squared_examples():
    assert loss_value(SQ, [1.0, 2.0], [0.0, 0.0]) == 5.0
    np.testing.assert_array_equal(loss_gradient(SQ, [1.0, 2.0], [0.0, 0.0]), [2.0, 4.0])


def test_hinge_ties_pick_lowest_rival(kernels):
    np.testing.assert_array_equal(loss_gradient(HINGE, [0.0, 0.5, 0.5], 0), [-1, 1, 0])
    np.testing.assert_array_equal(loss_gradient(HINGE, [0.5, 0.5, 0.0], 2), [1, 0, -1])


def test_margin_exactly_one_is_inert(kernels):
    assert loss_value(HINGE, [1.5, 0.5], 0) == 0.0
    np.testing.assert_array_equal(loss_gradient(HINGE, [1.5, 0.5], 0), [0, 0])


def test_argument_errors():
    with pytest.raises(ValueError):
        loss_value(HINGE, [1.0], 0)
    with pytest.raises(ValueError):
        loss_value(HINGE, [1.0, 2.0], 2)
    with pytest.raises(ValueError):
        loss_value(SQ, [1.0, 2.0], [1.0])


def test_hinge_backends_agree(rng):
    pytest.importorskip("askl._kernels")
    from askl import _kernels, _purepy

    F = np.round(rng.standard_normal((200, 5)), 1)
    y = rng.integers(0, 5, 200).astype(np.intp)
    la, ga = _purepy.hinge_batch(F, y)
    lb, gb = _kernels.hinge_batch(F, y)
    np.testing.assert_array_equal(la, lb)
    np.testing.assert_array_equal(ga, gb)


def hinge_margin(f, c):
    return f[c] - np.max(np.delete(f, c))


def rival_gap(f, c):
    others = np.sort(np.delete(f, c))
    return others[-1] - others[-2] if len(others) > 1 else np.inf


def test_hinge_directional_derivative(kernels, rng):
    checked = 0
    while checked < 200:
        K = rng.integers(2, 6)
        f, c = rng.standard_normal(K), rng.integers(K)
        if abs(hinge_margin(f, c) - 1) < 1e-3 or rival_gap(f, c) < 1e-3:
            continue
        v = rng.standard_normal(K)
        v /= np.linalg.norm(v)
        eps = 1e-6
        fd = (loss_value(HINGE, f + eps * v, c) - loss_value(HINGE, f - eps * v, c)) / (2 * eps)
        assert abs(fd - loss_gradient(HINGE, f, c) @ v) <= 1e-6
        checked += 1


def test_squared_directional_derivative(rng):
    for _ in range(200):
        K = rng.integers(1, 6)
        f, y = rng.standard_normal(K), rng.standard_normal(K)
        v = rng.standard_normal(K)
        v /= np.linalg.norm(v)
        eps = 1e-6
        fd = (loss_value(SQ, f + eps * v, y) - loss_value(SQ, f - eps * v, y)) / (2 * eps)
        an = loss_gradient(SQ, f, y) @ v
        assert abs(fd - an) <= 1e-7 * max(abs(an), 1.0)


def test_nonnegative_and_lipschitz(kernels, rng):
    for _ in range(500):
        K = rng.integers(2, 6)
        f, g, c = rng.standard_normal(K), rng.standard_normal(K), rng.integers(K)
        a, b = loss_value(HINGE, f, c), loss_value(HINGE, g, c)
        assert a >= 0 and b >= 0
        assert (a == 0) == (hinge_margin(f, c) >= 1)
        assert abs(a - b) <= 2 * np.max(np.abs(f - g)) + 1e-12
        assert loss_value(SQ, f, g) >= 0


def test_batch_matches_single(kernels, rng):
    F = rng.standard_normal((10, 4))
    y = rng.integers(0, 4, 10)
    losses, grads = batch_loss_and_grad(HINGE, F, y)
    for i in range(10):
        assert losses[i] == loss_value(HINGE, F[i], y[i])
        np.testing.assert_array_equal(grads[i], loss_gradient(HINGE, F[i], y[i]))
