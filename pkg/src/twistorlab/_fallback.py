"""NumPy implementations of the blade-product kernels.

Used when the compiled extension is unavailable (or disabled with
``TWISTORLAB_PURE=1``).  Sign tables are cached per blade count.
"""
from functools import lru_cache

import numpy as np


def reorder_parity(a: int, b: int) -> int:
    """Parity of the transpositions needed to sort the concatenation ``a|b``."""
    a >>= 1
    s = 0
    while a:
        s += bin(a & b).count("1")
        a >>= 1
    return s & 1


@lru_cache(maxsize=None)
def _tables(size: int):
    idx = np.arange(size)
    # xor_table[a, c] = a ^ c, i.e. the partner blade b with a*b ~ c
    xor_table = idx[:, None] ^ idx[None, :]
    a = np.repeat(idx, size).reshape(size, size)
    b = xor_table
    # parity of reordering a with b, vectorised bit by bit
    nbits = max(int(size).bit_length() - 1, 0)
    par = np.zeros((size, size), dtype=np.int64)
    for shift in range(1, nbits + 1):
        par += _popcount(((a >> shift) & b))
    par &= 1
    overlap = _popcount(a & b) & 1
    gp_sign = np.where((par + overlap) & 1, -1.0, 1.0)
    op_sign = np.where(par & 1, -1.0, 1.0) * ((a & b) == 0)
    gp_sign.setflags(write=False)
    op_sign.setflags(write=False)
    xor_table.setflags(write=False)
    return xor_table, gp_sign, op_sign


def _popcount(arr):
    arr = arr.copy()
    count = np.zeros_like(arr)
    while np.any(arr):
        count += arr & 1
        arr >>= 1
    return count


def geometric_product(x, y):
    size = x.shape[0]
    if y.shape[0] != size:
        raise ValueError("coefficient arrays differ in length")
    xor_table, gp_sign, _ = _tables(size)
    # out[c] = sum_a x[a] y[a^c] sign(a, a^c)
    return (x[:, None] * gp_sign * y[xor_table]).sum(axis=0)


def outer_product(x, y):
    size = x.shape[0]
    if y.shape[0] != size:
        raise ValueError("coefficient arrays differ in length")
    xor_table, _, op_sign = _tables(size)
    return (x[:, None] * op_sign * y[xor_table]).sum(axis=0)
