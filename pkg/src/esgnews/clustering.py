"""Seeded k-means (Euclidean or spherical) with k-means++ initialisation."""

from __future__ import annotations

import numpy as np


def _init_centroids(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centroids = [x[rng.integers(n)]]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centroids)


def _assign(x: np.ndarray, centroids: np.ndarray, spherical: bool) -> tuple[np.ndarray, float]:
    if spherical:
        sims = x @ centroids.T
        labels = sims.argmax(axis=1)
        inertia = float((1.0 - sims[np.arange(len(x)), labels]).sum())
    else:
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(len(x)), labels].sum())
    return labels, inertia


def _normalize(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return x / norms


def kmeans(
    x: np.ndarray,
    k: int,
    seed: int = 0,
    n_init: int = 4,
    max_iter: int = 100,
    spherical: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Best-of-``n_init`` Lloyd iterations; returns (labels, centroids).

    ``k`` is capped at the number of distinct points. Spherical mode works on
    unit-normalised rows with cosine assignment and renormalised centroids.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("kmeans needs a non-empty 2-d array")
    if spherical:
        x = _normalize(x)
    distinct = len(np.unique(np.round(x, 12), axis=0))
    k = max(1, min(k, distinct))
    rng = np.random.default_rng(seed)
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for _ in range(n_init):
        centroids = _init_centroids(x, k, rng)
        if spherical:
            centroids = _normalize(centroids)
        labels, inertia = _assign(x, centroids, spherical)
        for _ in range(max_iter):
            new = np.empty_like(centroids)
            for j in range(k):
                members = x[labels == j]
                if len(members):
                    new[j] = members.mean(axis=0)
                else:
                    # Re-seed an empty cluster with the point worst served.
                    if spherical:
                        gaps = 1.0 - (x * centroids[labels]).sum(axis=1)
                    else:
                        gaps = ((x - centroids[labels]) ** 2).sum(axis=1)
                    new[j] = x[int(gaps.argmax())]
            if spherical:
                new = _normalize(new)
            new_labels, inertia = _assign(x, new, spherical)
            converged = np.array_equal(new_labels, labels) and np.allclose(new, centroids)
            centroids, labels = new, new_labels
            if converged:
                break
        if best is None or inertia < best[0] - 1e-12:
            best = (inertia, labels.copy(), centroids.copy())
    return best[1], best[2]
