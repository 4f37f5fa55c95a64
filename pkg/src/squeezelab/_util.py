import numpy as np


def pairwise_sum(x: np.ndarray) -> np.ndarray:
    """Sum along axis 0 with a fixed binary tree; order depends only on length."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n <= 8:
        acc = np.zeros(x.shape[1:])
        for i in range(n):
            acc = acc + x[i]
        return acc
    half = n // 2
    return pairwise_sum(x[:half]) + pairwise_sum(x[half:])
