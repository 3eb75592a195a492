"""Seed mixing and distance helpers used by the fitting and experiment code."""

import math

import numpy as np

_MASK64 = (1 << 64) - 1


def mix_seed(*parts) -> int:
    """Derive a 64-bit seed from an ordered tuple of integer parts.

    SplitMix64 finalizer applied once per part, so (seed, n, k, repeat)
    tuples map to well-separated streams. The function is its own
    documentation of the mixing scheme: cross-run reproducibility only
    requires re-applying this exact chain.
    """
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h ^ (int(p) & _MASK64)) & _MASK64
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 27
        h = (h * 0x94D049BB133111EB) & _MASK64
        h ^= h >> 31
    return h


def min_sqdist(X: np.ndarray, C: np.ndarray, chunk: int = 8192):
    """Per-row min squared distance from X (n,D) to centers C (k,D).

    Distances are computed from explicit differences (no dot-product
    expansion) so small residuals keep full precision. Chunked over rows
    to bound the (chunk, k, D) temporary. Ties resolve to the lowest
    center index via argmin.

    Returns (d2, idx): arrays of shape (n,).
    """
    n = X.shape[0]
    d2 = np.empty(n)
    idx = np.empty(n, dtype=np.intp)
    for i in range(0, n, chunk):
        blk = X[i:i + chunk]
        diff = blk[:, None, :] - C[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        j = np.argmin(dist, axis=1)
        idx[i:i + chunk] = j
        d2[i:i + chunk] = dist[np.arange(blk.shape[0]), j]
    return d2, idx


def fsum_mean(values: np.ndarray) -> float:
    """Compensated (exact) summation mean; order-independent to 1 ulp."""
    return math.fsum(values) / len(values)
