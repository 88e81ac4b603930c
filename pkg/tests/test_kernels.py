import numpy as np
import pytest

from venuetrace import kernels
from venuetrace.kernels import pure


def random_problem(rng, n=400, groups=5, levels=4):
    idx = np.empty((n, groups), dtype=np.int32)
    for j in range(groups):
        idx[:, j] = j * levels + rng.integers(0, levels, size=n)
    n_features = groups * levels
    y = rng.integers(0, 2, size=n).astype(np.float64)
    return idx, n_features, y


class TestBackendParity:
    def test_backend_selected(self):
        assert kernels.BACKEND in ("native", "pure")

    def test_fit_matches_pure(self):
        rng = np.random.default_rng(3)
        idx, d, y = random_problem(rng)
        w_a, b_a = kernels.logreg_fit(idx, d, y, 0.2, 120, 0.01)
        w_b, b_b = pure.logreg_fit(idx, d, y, 0.2, 120, 0.01)
        assert np.allclose(w_a, w_b, atol=1e-9)
        assert b_a == pytest.approx(b_b, abs=1e-9)

    def test_margins_and_predict_match_pure(self):
        rng = np.random.default_rng(4)
        idx, d, y = random_problem(rng)
        w = rng.normal(size=d)
        assert np.allclose(kernels.logreg_margins(idx, w, 0.3), pure.logreg_margins(idx, w, 0.3), atol=1e-12)
        assert np.allclose(kernels.logreg_predict(idx, w, 0.3), pure.logreg_predict(idx, w, 0.3), atol=1e-12)

    def test_warm_start(self):
        rng = np.random.default_rng(5)
        idx, d, y = random_problem(rng)
        w_full, b_full = kernels.logreg_fit(idx, d, y, 0.1, 40, 0.0)
        w_half, b_half = kernels.logreg_fit(idx, d, y, 0.1, 20, 0.0)
        w_resumed, b_resumed = kernels.logreg_fit(idx, d, y, 0.1, 20, 0.0, w0=w_half, b0=b_half)
        assert np.allclose(w_full, w_resumed, atol=1e-9)
        assert b_full == pytest.approx(b_resumed, abs=1e-9)

    def test_zero_iterations_keeps_zero_weights(self):
        rng = np.random.default_rng(6)
        idx, d, y = random_problem(rng)
        w, b = kernels.logreg_fit(idx, d, y, 0.5, 0, 0.0)
        assert not w.any() and b == 0.0
        assert np.allclose(kernels.logreg_predict(idx, w, b), 0.5)


def loss_and_grads(idx, n_features, y, w, b, l2):
    """Reference regularized logistic loss and its analytic gradient."""
    n = len(y)
    z = w[idx].sum(axis=1) + b
    p = 1.0 / (1.0 + np.exp(-np.abs(z)))
    p = np.where(z >= 0, 1.0 / (1.0 + np.exp(-z)), np.exp(z) / (1.0 + np.exp(z)))
    nll = np.logaddexp(0.0, z) - y * z
    loss = nll.mean() + 0.5 * l2 * np.dot(w, w) / n
    residual = p - y
    gw = np.bincount(idx.ravel(), weights=np.repeat(residual, idx.shape[1]), minlength=n_features)
    gw = (gw + l2 * w) / n
    gb = residual.mean()
    return loss, gw, gb


class TestGradientCheck:
    def test_analytic_gradient_matches_central_differences(self):
        rng = np.random.default_rng(42)
        idx, d, y = random_problem(rng, n=80, groups=4, levels=3)
        l2 = 0.5
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            w = rng.normal(scale=1.5, size=d)
            b = float(rng.normal())
            _loss, gw, gb = loss_and_grads(idx, d, y, w, b, l2)
            for coord in rng.choice(d, size=3, replace=False):
                w_plus, w_minus = w.copy(), w.copy()
                w_plus[coord] += h
                w_minus[coord] -= h
                fd = (
                    loss_and_grads(idx, d, y, w_plus, b, l2)[0]
                    - loss_and_grads(idx, d, y, w_minus, b, l2)[0]
                ) / (2 * h)
                rel = abs(gw[coord] - fd) / max(abs(gw[coord]), abs(fd), 1e-8)
                worst = max(worst, rel)
            fd_b = (
                loss_and_grads(idx, d, y, w, b + h, l2)[0]
                - loss_and_grads(idx, d, y, w, b - h, l2)[0]
            ) / (2 * h)
            worst = max(worst, abs(gb - fd_b) / max(abs(gb), abs(fd_b), 1e-8))
        assert worst < 1e-4

    def test_kernel_step_equals_reference_gradient(self):
        # one gradient step by the kernel must equal the analytic update
        rng = np.random.default_rng(7)
        idx, d, y = random_problem(rng, n=60, groups=3, levels=3)
        w0 = rng.normal(size=d)
        b0 = 0.4
        lr, l2 = 0.3, 0.2
        _loss, gw, gb = loss_and_grads(idx, d, y, w0, b0, l2)
        w1, b1 = kernels.logreg_fit(idx, d, y, lr, 1, l2, w0=w0, b0=b0)
        assert np.allclose(w1, w0 - lr * gw, atol=1e-12)
        assert b1 == pytest.approx(b0 - lr * gb, abs=1e-12)
