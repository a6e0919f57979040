"""In-place subset transforms over dense tables indexed by bitmask."""
import numpy as np


def popcounts(n):
    """Coalition sizes for every mask ``0 .. 2**n - 1``."""
    sizes = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        sizes.reshape(-1, 2, 1 << i)[:, 1, :] += 1
    return sizes


def _n_of(a):
    n = int(a.shape[0]).bit_length() - 1
    if a.ndim != 1 or a.shape[0] != 1 << n:
        raise ValueError(f"table length {a.shape[0]} is not a power of two")
    return n


def zeta(values):
    """Subset sums: ``out[T] = sum(values[S] for S subset of T)``."""
    a = np.array(values, dtype=float)
    for i in range(_n_of(a)):
        view = a.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return a


def moebius(values):
    """Inverse of :func:`zeta`: alternating subset sums, ``n * 2**n`` updates."""
    a = np.array(values, dtype=float)
    for i in range(_n_of(a)):
        view = a.reshape(-1, 2, 1 << i)
        view[:, 1, :] -= view[:, 0, :]
    return a


def superset_zeta(values):
    """Superset sums: ``out[S] = sum(values[T] for T superset of S)``."""
    a = np.array(values, dtype=float)
    for i in range(_n_of(a)):
        view = a.reshape(-1, 2, 1 << i)
        view[:, 0, :] += view[:, 1, :]
    return a


def subset_reduce(values, op=np.maximum):
    """``out[T] = op over values[S] for S subset of T`` (``op`` is ``np.maximum`` or ``np.minimum``)."""
    a = np.array(values, dtype=float)
    for i in range(_n_of(a)):
        view = a.reshape(-1, 2, 1 << i)
        op(view[:, 1, :], view[:, 0, :], out=view[:, 1, :])
    return a
