"""Dense symmetric eigensolver used for every block spectrum in the package.

Cyclic Jacobi rotations in a fixed row-major sweep order, so identical inputs
produce bit-identical output. numba compiles the kernel when it is installed;
the pure Python fallback runs the same arithmetic, only slower.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EigenFailure

OFF_DIAGONAL_FACTOR = 1e-13
MAX_SWEEPS = 100


def _jacobi_kernel(a, v, off_target, max_sweeps):
    # Mutates a toward diagonal and accumulates rotations into v.
    # Returns sweeps used, or -1 if off_target was not reached.
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        if off ** 0.5 <= off_target:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + (1.0 + tau * tau) ** 0.5)
                else:
                    t = -1.0 / (-tau + (1.0 + tau * tau) ** 0.5)
                c = 1.0 / (1.0 + t * t) ** 0.5
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    off = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off += 2.0 * a[i, j] * a[i, j]
    if off ** 0.5 <= off_target:
        return max_sweeps
    return -1


try:  # pragma: no cover - exercised indirectly
    import numba

    _jacobi_kernel = numba.njit(cache=True)(_jacobi_kernel)
except ImportError:  # pragma: no cover
    pass


def jacobi_eigh(block: np.ndarray, *, off_factor: float = OFF_DIAGONAL_FACTOR,
                max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvector columns of a
    symmetric matrix."""
    block = np.asarray(block, dtype=float)
    n = block.shape[0]
    if block.ndim != 2 or block.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {block.shape}")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if n == 1:
        return block[0].copy(), np.ones((1, 1))
    # rotations assume exact symmetry, but residuals of matrix products
    # carry roundoff asymmetry that would regenerate off-diagonal mass
    a = np.ascontiguousarray(0.5 * (block + block.T))
    v = np.eye(n)
    target = off_factor * math.sqrt(float(np.sum(block * block)))
    sweeps = _jacobi_kernel(a, v, target, max_sweeps)
    if sweeps < 0:
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(np.diag(a) ** 2))))
        raise EigenFailure(
            f"no convergence after {max_sweeps} sweeps; "
            f"off-diagonal {off:.3e} > target {target:.3e}"
        )
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def spectral_norm_sym(block: np.ndarray) -> float:
    """Two-norm of a symmetric matrix, via its eigenvalues."""
    w, _ = jacobi_eigh(block)
    if w.size == 0:
        return 0.0
    return float(np.max(np.abs(w)))


def warmup() -> None:
    """Force kernel compilation so later calls are not billed for it."""
    jacobi_eigh(np.array([[2.0, 1.0], [1.0, -1.0]]))
