"""Batched Gaussian elimination with partial pivoting for small dense systems."""

import numpy as np

SINGULAR_RTOL = 1e-12


def gauss_solve(A, b, rtol=SINGULAR_RTOL):
    """Solve ``A x = b`` for a stack of square systems.

    ``A`` has shape ``(..., d, d)`` and ``b`` shape ``(..., d)``. Returns
    ``(x, singular)`` where ``singular`` flags systems whose pivot fell below
    ``rtol`` times the largest entry of that system; their ``x`` is NaN.
    """
    A = np.array(A, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    batch_shape = A.shape[:-2]
    d = A.shape[-1]
    if A.shape[-2] != d or b.shape != batch_shape + (d,):
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    A = A.reshape(-1, d, d)
    b = b.reshape(-1, d)
    nb = A.shape[0]
    rows = np.arange(nb)
    scale = np.abs(A).max(axis=(1, 2))
    scale[scale == 0] = 1.0
    singular = np.zeros(nb, dtype=bool)

    for c in range(d):
        p = c + np.argmax(np.abs(A[:, c:, c]), axis=1)
        swap = p != c
        if swap.any():
            r, pr = rows[swap], p[swap]
            A[r, c], A[r, pr] = A[r, pr].copy(), A[r, c].copy()
            b[r, c], b[r, pr] = b[r, pr].copy(), b[r, c].copy()
        piv = A[:, c, c]
        bad = np.abs(piv) <= rtol * scale
        singular |= bad
        piv = np.where(bad, 1.0, piv)
        if c + 1 < d:
            f = A[:, c + 1 :, c] / piv[:, None]
            A[:, c + 1 :, c:] -= f[:, :, None] * A[:, None, c, c:]
            b[:, c + 1 :] -= f * b[:, None, c]

    x = np.empty_like(b)
    for c in range(d - 1, -1, -1):
        acc = b[:, c] - np.sum(A[:, c, c + 1 :] * x[:, c + 1 :], axis=1)
        piv = np.where(singular, 1.0, A[:, c, c])
        x[:, c] = acc / piv
    x[singular] = np.nan
    return x.reshape(batch_shape + (d,)), singular.reshape(batch_shape)
