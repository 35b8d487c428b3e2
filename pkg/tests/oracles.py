"""Independent reference computations used by the tests (dense numpy only)."""

import numpy as np

# non-separable: the folded rows positively span the plane
TINY = np.array([[3.0, 1.0], [2.0, 3.0], [1.0, -1.0], [-0.3, -0.2]])


def newton_oracle(A, x0=None, iters=100):
    """Plain damped Newton on f(x) = sum log(1 + exp(-A x)), dense numpy only."""
    def f(x):
        return float(np.sum(np.logaddexp(0.0, -(A @ x))))

    x = np.zeros(A.shape[1]) if x0 is None else np.array(x0, dtype=float)
    for _ in range(iters):
        z = A @ x
        s = 0.5 * (1.0 - np.tanh(z / 2.0))  # 1 - sigma(z)
        g = -A.T @ s
        if np.max(np.abs(g)) < 1e-14:
            break
        H = A.T @ ((s * (1 - s))[:, None] * A)
        d = -np.linalg.solve(H, g)
        t = 1.0
        while f(x + t * d) > f(x) + 1e-4 * t * (g @ d) and t > 1e-16:
            t /= 2
        x = x + t * d
    return x, f(x)


def svd_beta(A):
    """||A||_2^2 from a dense SVD."""
    return float(np.linalg.svd(np.asarray(A), compute_uv=False)[0] ** 2)


def linear_fit_r2(t, y):
    """Least-squares line through (t, y): returns (slope, R^2)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(slope), 1.0 - float(np.sum(resid ** 2)) / ss_tot
