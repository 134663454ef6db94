# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled blade-product kernels (bit-indexed blades, e_i^2 = -1)."""
import numpy as np

cdef extern from *:
    int __builtin_popcount(unsigned int) nogil


cdef void _below_masks(unsigned int size, unsigned int[::1] masks) noexcept nogil:
    # masks[b] has bit i set iff b has an odd number of bits strictly below i,
    # so the reorder parity of (a, b) is popcount(a & masks[b]) mod 2
    cdef unsigned int b, i, run, m
    cdef unsigned int nbits = 0
    while (1u << nbits) < size:
        nbits += 1
    for b in range(size):
        run = 0
        m = 0
        for i in range(nbits):
            if run:
                m |= 1u << i
            run ^= (b >> i) & 1u
        masks[b] = m


cdef object _product(x, y, bint wedge):
    cdef Py_ssize_t size = x.shape[0]
    if y.shape[0] != size:
        raise ValueError("coefficient arrays differ in length")
    out = np.zeros(size, dtype=np.complex128)
    # interleaved (re, im) views; no copies for contiguous complex input
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.complex128).view(np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.complex128).view(np.float64)
    cdef double[::1] ov = out.view(np.float64)
    cdef unsigned int[::1] masks = np.empty(size, dtype=np.uintc)
    cdef unsigned int a, b, c
    cdef double ar, ai, br, bi, pr, pi
    with nogil:
        _below_masks(<unsigned int>size, masks)
        if not wedge:
            for b in range(<unsigned int>size):
                # fold the e_i^2 = -1 overlap sign into the reorder mask
                masks[b] ^= b
        for a in range(<unsigned int>size):
            ar = xv[2 * a]
            ai = xv[2 * a + 1]
            if ar == 0 and ai == 0:
                continue
            for b in range(<unsigned int>size):
                if wedge and (a & b):
                    continue
                br = yv[2 * b]
                bi = yv[2 * b + 1]
                pr = ar * br - ai * bi
                pi = ar * bi + ai * br
                c = 2 * (a ^ b)
                if __builtin_popcount(a & masks[b]) & 1:
                    ov[c] -= pr
                    ov[c + 1] -= pi
                else:
                    ov[c] += pr
                    ov[c + 1] += pi
    return out


def geometric_product(x, y):
    return _product(x, y, False)


def outer_product(x, y):
    return _product(x, y, True)
