"""Truncated Taylor series with vectorized coefficients.

A series is an array whose first axis is the power index.  Remaining axes
are batch axes (and an optional trailing axis of size 2 for plane vectors).
Everything is truncated to the length of the first argument.
"""

import numpy as np


def _b(a, b):
    # broadcast a scalar series against a vector series
    if b.ndim < a.ndim:
        b = b[..., None]
    return b


def mul(a, b):
    n = a.shape[0]
    b = _b(a, b)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for k in range(n):
        acc = out[k]
        for j in range(k + 1):
            acc = acc + a[j] * b[k - j]
        out[k] = acc
    return out


def recip(a):
    n = a.shape[0]
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc = acc + a[j] * out[k - j]
        out[k] = -acc / a[0]
    return out


def sqrt(a):
    n = a.shape[0]
    out = np.zeros_like(a)
    out[0] = np.sqrt(a[0])
    for k in range(1, n):
        acc = a[k].copy()
        for j in range(1, k):
            acc = acc - out[j] * out[k - j]
        out[k] = acc / (2.0 * out[0])
    return out


def integrate(a, n=None):
    """Antiderivative with zero constant term, truncated to n terms."""
    if n is None:
        n = a.shape[0] + 1
    out = np.zeros((n,) + a.shape[1:], dtype=a.dtype)
    m = min(a.shape[0], n - 1)
    for k in range(m):
        out[k + 1] = a[k] / (k + 1)
    return out


def deriv(a):
    n = a.shape[0]
    out = np.zeros((n - 1,) + a.shape[1:], dtype=a.dtype)
    for k in range(1, n):
        out[k - 1] = k * a[k]
    return out


def compose(f, g):
    """f(g(eps)) where g has zero constant term; result has len(g) terms."""
    n = g.shape[0]
    nf = f.shape[0]
    g = _b(f[0:1], g)
    res = np.zeros((n,) + np.broadcast_shapes(f.shape[1:], g.shape[1:]), dtype=f.dtype)
    res[0] = f[nf - 1]
    for k in range(nf - 2, -1, -1):
        res = mul(res, g)
        res[0] = res[0] + f[k]
    return res
