# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Walsh-Hadamard butterfly and simplex pivot update.

Arithmetic matches stabcert._kernels_numpy element for element (same
operation order, no fused multiply-add) so both backends give identical
floats.
"""

__all__ = ["fwht_inplace", "pivot_update"]


def fwht_inplace(double[::1] a):
    """Walsh-Hadamard transform of a length 2**n float64 vector, in place."""
    cdef Py_ssize_t size = a.shape[0]
    cdef Py_ssize_t h = 1
    cdef Py_ssize_t step, start, j
    cdef double x, y
    with nogil:
        while h < size:
            step = 2 * h
            start = 0
            while start < size:
                for j in range(start, start + h):
                    x = a[j]
                    y = a[j + h]
                    a[j] = x + y
                    a[j + h] = x - y
                start += step
            h = step


def pivot_update(double[:, ::1] tableau, Py_ssize_t row, Py_ssize_t col):
    """One simplex pivot on a dense tableau, in place."""
    cdef Py_ssize_t nrow = tableau.shape[0]
    cdef Py_ssize_t ncol = tableau.shape[1]
    cdef Py_ssize_t i, j
    cdef double piv, f
    with nogil:
        piv = tableau[row, col]
        for j in range(ncol):
            tableau[row, j] /= piv
        for i in range(nrow):
            if i == row:
                continue
            f = tableau[i, col]
            if f == 0.0:
                continue
            for j in range(ncol):
                tableau[i, j] = tableau[i, j] - f * tableau[row, j]
