"""GF(2) linear algebra on numpy uint8 arrays."""

from __future__ import annotations

import numpy as np


def row_echelon(
    matrix: np.ndarray, n_pivot_cols: int | None = None, reduced: bool = False
) -> tuple[np.ndarray, list[int]]:
    """Row-reduce over GF(2); pivots are searched in the first n_pivot_cols columns."""
    R = (np.asarray(matrix, dtype=np.uint8) % 2).copy()
    m, n = R.shape
    if n_pivot_cols is None:
        n_pivot_cols = n

    pivot_cols: list[int] = []
    pivot_row = 0
    for col in range(n_pivot_cols):
        if pivot_row == m:
            break
        candidates = np.flatnonzero(R[pivot_row:, col])
        if candidates.size == 0:
            continue
        found = pivot_row + int(candidates[0])
        if found != pivot_row:
            R[[pivot_row, found]] = R[[found, pivot_row]]

        rows = np.flatnonzero(R[:, col])
        rows = rows[rows != pivot_row]
        if not reduced:
            rows = rows[rows > pivot_row]
        R[rows] ^= R[pivot_row]

        pivot_cols.append(col)
        pivot_row += 1

    return R, pivot_cols


def rank(matrix: np.ndarray) -> int:
    _, pivot_cols = row_echelon(matrix)
    return len(pivot_cols)


def is_invertible(matrix: np.ndarray) -> bool:
    m, n = np.shape(matrix)
    return m == n and rank(matrix) == n


def inverse(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.uint8)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError(f"Cannot invert a non-square matrix of shape {matrix.shape}")
    augmented = np.concatenate([matrix % 2, np.eye(n, dtype=np.uint8)], axis=1)
    R, pivot_cols = row_echelon(augmented, n_pivot_cols=n, reduced=True)
    if len(pivot_cols) != n:
        raise ValueError(f"Matrix is singular over GF(2), rank {len(pivot_cols)}")
    return R[:, n:]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    product = np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)
    return (product % 2).astype(np.uint8)


def random_invertible(
    rng: np.random.Generator, n: int, density: float = 0.5
) -> np.ndarray:
    while True:
        candidate = (rng.random((n, n)) < density).astype(np.uint8)
        if is_invertible(candidate):
            return candidate
