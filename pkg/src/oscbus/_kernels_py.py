"""Pure-Python reference versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same two functions with identical semantics.
"""

import math

import numpy as np

# below this |ρT| the exact zero-rotation limit is used
ZERO_RATE = 1e-12
# below this |ρT| the area term uses its Taylor series
SERIES_RATE = 1e-3


def _area_kernel(x):
    """(x - sin x) / x**2, continuous through x = 0."""
    ax = abs(x)
    if ax < ZERO_RATE:
        return 0.0
    if ax < SERIES_RATE:
        x2 = x * x
        return x * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 / 5040.0))
    return (x - math.sin(x)) / (x * x)


def accumulate_batch(eig, coef):
    """Integrate the rotating-frame displacement functions over constant segments.

    Parameters
    ----------
    eig : float array (n_tuples, n_segments, 4)
        Eigenvalues (a, b, c, d) of the segment operators A, B, C, D for each
        eigen-tuple.
    coef : float array (n_segments, 5)
        Per-segment (v, w, r, g, duration).

    Returns
    -------
    out : float array (n_tuples, 5)
        Final (R, V, W, S, drift) per tuple.
    verts : float array (n_tuples, n_segments + 1, 2)
        (W, V) after each segment, starting at the origin.
    """
    eig = np.ascontiguousarray(eig, dtype=float)
    coef = np.ascontiguousarray(coef, dtype=float)
    ntup, nseg = eig.shape[0], coef.shape[0]
    out = np.zeros((ntup, 5))
    verts = np.zeros((ntup, nseg + 1, 2))
    for i in range(ntup):
        R = V = W = S = drift = 0.0
        for j in range(nseg):
            a, b, c, d = eig[i, j]
            v, w, r, g, T = coef[j]
            al = v * a
            be = w * b
            x = r * c * T
            h = 0.5 * x
            sinc = 1.0 if abs(x) < ZERO_RATE else math.sin(h) / h
            mid = R + h
            # ∫cos(R) dt and ∫sin(R) dt over the segment
            ic = T * math.cos(mid) * sinc
            is_ = T * math.sin(mid) * sinc
            f = T * T * _area_kernel(x)
            dV = al * ic - be * is_
            dW = be * ic + al * is_
            j_cs = 0.5 * (ic * is_ + f)
            j_sc = 0.5 * (ic * is_ - f)
            S -= V * dW + (0.5 * al * be * ic * ic + al * al * j_cs - be * be * j_sc - 0.5 * al * be * is_ * is_)
            V += dV
            W += dW
            R += x
            drift += g * d * T
            verts[i, j + 1, 0] = W
            verts[i, j + 1, 1] = V
        out[i] = (R, V, W, S, drift)
    return out, verts


def displacement_matrix(alpha, dim):
    """Exact Fock matrix elements <m|D(alpha)|n> for m, n < dim.

    Each diagonal ``m - n = k`` is a normalized associated-Laguerre sequence
    ``f_n = sqrt(n!/(n+k)!) |alpha|^k e^{-|alpha|^2/2} L_n^(k)(|alpha|^2)``,
    generated by its three-term recurrence in ``n`` (stable for all alpha,
    unlike ladder-operator recurrences across columns).
    """
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    phase = alpha / abs(alpha) if x > 0 else 1.0 + 0.0j
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(dim):
        if x == 0.0:
            f = 1.0 if k == 0 else 0.0
        else:
            f = math.exp(0.5 * k * math.log(x) - 0.5 * x - 0.5 * math.lgamma(k + 1))
        fm = 0.0
        below = phase**k
        above = (-phase.conjugate()) ** k
        for n in range(dim - k):
            out[n + k, n] = f * below
            if k:
                out[n, n + k] = f * above
            scale = math.sqrt((n + 1) * (n + k + 1))
            f, fm = ((2 * n + k + 1 - x) * f - math.sqrt(n * (n + k)) * fm) / scale, f
    return out
