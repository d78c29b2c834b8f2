"""Metric analysis: nearest-rank percentiles, PCA via power iteration,
cosine-similarity structure of embedding traces."""

from __future__ import annotations

import numpy as np


def percentiles(samples, ps) -> list[float]:
    """Nearest-rank percentiles: the ceil(p/100 * n)-th smallest sample."""
    arr = np.sort(np.asarray(samples, dtype=float))
    if arr.size == 0:
        raise ValueError("percentiles of an empty sample set")
    out = []
    for p in ps:
        if not 0 < p <= 100:
            raise ValueError(f"percentile must be in (0, 100], got {p}")
        rank = int(np.ceil(p / 100.0 * arr.size))
        out.append(float(arr[max(rank - 1, 0)]))
    return out


def power_iteration_top2(cov: np.ndarray, tol: float = 1e-9,
                         max_iter: int = 10_000, seed: int = 0):
    """Top-2 eigenpairs of a symmetric PSD matrix by power iteration with
    deflation."""
    rng = np.random.default_rng(seed)
    eigvals, eigvecs = [], []
    work = cov.copy()
    for _ in range(2):
        v = rng.normal(size=cov.shape[0])
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = work @ v
            norm = np.linalg.norm(w)
            if norm < 1e-300:
                break
            w /= norm
            if np.linalg.norm(w - v) < tol or np.linalg.norm(w + v) < tol:
                v = w
                break
            v = w
        lam = float(v @ work @ v)
        eigvals.append(lam)
        eigvecs.append(v.copy())
        work = work - lam * np.outer(v, v)
    return np.array(eigvals), np.stack(eigvecs, axis=1)


def pca_project_2d(x: np.ndarray, tol: float = 1e-9, max_iter: int = 10_000):
    """Mean-center rows of x and project on the top-2 principal components.

    Returns (scores (n, 2), eigenvalues (2,), components (d, 2))."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 3:
        raise ValueError("PCA needs at least 3 samples")
    centered = x - x.mean(axis=0, keepdims=True)
    cov = centered.T @ centered / (x.shape[0] - 1)
    eigvals, comps = power_iteration_top2(cov, tol=tol, max_iter=max_iter)
    return centered @ comps, eigvals, comps


def cosine_matrix(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    zn = z / np.maximum(norms, 1e-12)
    return zn @ zn.T
