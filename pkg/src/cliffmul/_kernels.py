"""Compiled leaf kernel for dense accumulation.

One kernel serves float64 and int64 coefficients; numba compiles one
specialization per dtype.  It is declared ``nogil`` so leaf tasks running on
worker threads execute truly in parallel.
"""

import numba
import numba.extending
import numba.types
import numpy as np


@numba.extending.intrinsic
def _popcount(tyctx, x):
    if isinstance(x, numba.types.Integer):
        def impl(cgctx, builder, sig, args):
            (v,) = args
            return builder.ctpop(v)
        return x(x), impl


@numba.njit(nogil=True, cache=True)
def walsh_leaf(xb, xc, yb, yg, yc, i0, i1, j0, j1, qmask, out):
    """Accumulate xc[i]*yc[j]*sign(xb[i], yb[j]) over i in [i0, i1), j in [j0, j1).

    ``yg`` holds the inverse Gray codes of ``yb``.  The sign is
    walsh(a, inverse_gray(b)) * twist(a, b); rows of x are the outer loop.
    """
    for i in range(i0, i1):
        a = xb[i]
        ca = xc[i]
        for j in range(j0, j1):
            b = yb[j]
            common = a & b
            parity = _popcount(a & yg[j]) + _popcount(common) + _popcount(common & qmask)
            v = ca * yc[j]
            if parity & 1:
                out[a ^ b] -= v
            else:
                out[a ^ b] += v


def warm_up():
    """Force compilation of both specializations."""
    blades = np.zeros(1, dtype=np.uint64)
    for dtype in (np.float64, np.int64):
        walsh_leaf(blades, np.ones(1, dtype), blades, blades, np.ones(1, dtype),
                   0, 1, 0, 1, np.uint64(0), np.zeros(1, dtype))
