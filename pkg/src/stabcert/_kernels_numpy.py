"""Pure numpy implementations of the hot kernels.

These are the reference implementations.  The compiled extension in
``stabcert._native`` reproduces them operation for operation so that both
backends return bit-identical floats; ``stabcert.kernels`` picks one at
import time.
"""

from __future__ import annotations

import numpy as np

__all__ = ["fwht_inplace", "pivot_update"]


def fwht_inplace(a: np.ndarray) -> None:
    """Walsh-Hadamard transform of a length 2**n float64 vector, in place.

    Unnormalized: applying it twice multiplies the input by 2**n.
    """
    size = a.shape[0]
    h = 1
    while h < size:
        b = a.reshape(-1, 2, h)
        x = b[:, 0, :].copy()
        y = b[:, 1, :].copy()
        b[:, 0, :] = x + y
        b[:, 1, :] = x - y
        h *= 2


def pivot_update(tableau: np.ndarray, row: int, col: int) -> None:
    """One simplex pivot on a dense tableau, in place.

    Divides ``row`` by the pivot element, then eliminates ``col`` from every
    other row by a rank-1 update.
    """
    tableau[row, :] /= tableau[row, col]
    colv = tableau[:, col].copy()
    colv[row] = 0.0
    tableau[:, :] -= np.outer(colv, tableau[row, :])
