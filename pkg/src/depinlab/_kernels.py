"""Compiled inner loops for the explicit Euler stepper.

numpy.fft is not callable from nopython code, so the elastic term uses a
small iterative radix-2 FFT.  Everything here works on plain arrays; the
public wrappers live in ``evolution``.
"""
import math

import numpy as np
from numba import njit

ZERO, SPLINE, COSINE, ABS_LOG, PIECEWISE = 0, 1, 2, 3, 4

CHUNK_DONE, CROSSED, STUCK, BLOWUP = 0, 1, 2, 3


def fft_tables(N):
    """Tables for a length-N real transform done as a length-N/2 complex one.

    ``tw`` holds the N/4 twiddles of the half-length FFT followed by the N/2
    split twiddles ``exp(-2 pi i k / N)``.
    """
    H = N // 2
    bits = H.bit_length() - 1
    rev = np.zeros(H, dtype=np.int64)
    for i in range(H):
        rev[i] = int(format(i, f"0{bits}b")[::-1], 2) if bits else 0
    half_tw = np.exp(-2j * np.pi * np.arange(max(H // 2, 1)) / H)
    split_tw = np.exp(-2j * np.pi * np.arange(H) / N)
    return rev, np.concatenate([half_tw, split_tw])


@njit(cache=True)
def _fft(a, rev, tw, inverse):
    n = rev.size
    for i in range(n):
        j = rev[i]
        if j > i:
            tmp = a[i]
            a[i] = a[j]
            a[j] = tmp
    size = 2
    while size <= n:
        half = size // 2
        stride = n // size
        for start in range(0, n, size):
            for k in range(half):
                w = tw[k * stride]
                if inverse:
                    w = w.conjugate()
                u = a[start + k]
                v = a[start + k + half] * w
                a[start + k] = u + v
                a[start + k + half] = u - v
        size *= 2


@njit(cache=True, inline='always')
def _phi(kind, coef, params, j, y):
    """phi(x_j, y) for the landscape encoded by (kind, coef, params)."""
    if kind == ZERO:
        return 0.0
    if kind == SPLINE:
        # coef rows are padded: column l + 1 holds coefficient l mod M
        M = coef.shape[1] - 3
        u = y * M
        q = math.floor(u)
        t = u - q
        i = int(q) % M
        s = 1.0 - t
        t2 = t * t
        t3 = t2 * t
        return (s * s * s * coef[j, i]
                + (3.0 * t3 - 6.0 * t2 + 4.0) * coef[j, i + 1]
                + (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) * coef[j, i + 2]
                + t3 * coef[j, i + 3]) / 6.0
    if kind == COSINE:
        return params[0] * math.cos(2.0 * math.pi * y)
    s = y - math.floor(y)
    if kind == ABS_LOG:
        return 2.0 * abs(s - 0.5) - 1.0
    if s < 0.25:
        return -4.0 * s
    if s < 0.75:
        return -1.0
    return -1.0 + 4.0 * (s - 0.75)


@njit(cache=True)
def elastic_into(g, out, cbuf, mult, rev, tw):
    """out = -c (-Delta)^{1/2} g, with ``mult[k] = -c |k| / N`` for k <= N/2.

    ``cbuf`` is complex scratch of length N/2 + 1.
    """
    n = g.size
    h = n // 2
    sw = tw[max(h // 2, 1):]
    m = 0.0
    for j in range(n):
        m += g[j]
    m /= n
    for j in range(h):
        cbuf[j] = complex(g[2 * j] - m, g[2 * j + 1] - m)
    _fft(cbuf, rev, tw, False)
    # unpack the half spectrum, apply the multiplier, repack
    z0 = cbuf[0]
    cbuf[h] = complex(z0.real - z0.imag, 0.0) * mult[h]
    cbuf[0] = 0.0
    for k in range(1, h // 2 + 1):
        a = cbuf[k]
        b = cbuf[h - k].conjugate()
        even = 0.5 * (a + b)
        odd = -0.5j * (a - b) * sw[k]
        xk = (even + odd) * mult[k]
        # X_{h-k} = conj(even - odd) by symmetry of the packed transform
        xm = (even - odd).conjugate() * mult[h - k]
        cbuf[k] = xk
        cbuf[h - k] = xm
    # inverse: rebuild the packed half-length spectrum
    last = cbuf[h]
    for k in range(0, h // 2 + 1):
        yk = cbuf[k] if k > 0 else complex(0.0, 0.0)
        ym = cbuf[h - k] if k > 0 else last
        e1 = yk + ym.conjugate()
        o1 = (yk - ym.conjugate()) * sw[k].conjugate()
        e2 = ym + yk.conjugate()
        o2 = (ym - yk.conjugate()) * sw[h - k].conjugate() if k > 0 else complex(0.0, 0.0)
        cbuf[k] = e1 + 1j * o1
        if 0 < k < h - k:
            cbuf[h - k] = e2 + 1j * o2
    _fft(cbuf, rev, tw, True)
    for j in range(h):
        out[2 * j] = cbuf[j].real
        out[2 * j + 1] = cbuf[j].imag


@njit(cache=True)
def rhs_into(g, out, cbuf, mult, rev, tw, kind, coef, params, F):
    elastic_into(g, out, cbuf, mult, rev, tw)
    # one loop per family so the force evaluation inlines
    n = g.size
    if kind == SPLINE:
        for j in range(n):
            out[j] += _phi(SPLINE, coef, params, j, g[j]) + F
    elif kind == COSINE:
        for j in range(n):
            out[j] += _phi(COSINE, coef, params, j, g[j]) + F
    elif kind == ABS_LOG:
        for j in range(n):
            out[j] += _phi(ABS_LOG, coef, params, j, g[j]) + F
    elif kind == PIECEWISE:
        for j in range(n):
            out[j] += _phi(PIECEWISE, coef, params, j, g[j]) + F
    else:
        for j in range(n):
            out[j] += F


@njit(cache=True)
def advance(g, g_prev, r, cbuf, mult, rev, tw, kind, coef, params, F, dt,
            max_steps, target, stuck_tol):
    """Take up to ``max_steps`` Euler steps in place.

    Stops early when the RHS norm drops below ``stuck_tol`` (before stepping),
    when the mean reaches ``target`` (``g_prev`` then holds the state before
    the crossing step) or when the state stops being finite.
    Returns (event, steps_taken, residual_l2).
    """
    n = g.size
    res = 0.0
    for step in range(max_steps):
        rhs_into(g, r, cbuf, mult, rev, tw, kind, coef, params, F)
        acc = 0.0
        for j in range(n):
            acc += r[j] * r[j]
        res = math.sqrt(acc / n)
        if res < stuck_tol:
            return STUCK, step, res
        m = 0.0
        for j in range(n):
            g_prev[j] = g[j]
            g[j] += dt * r[j]
            m += g[j]
        # any inf or nan entry poisons the sum
        if not math.isfinite(m):
            return BLOWUP, step + 1, res
        if m / n >= target:
            return CROSSED, step + 1, res
    return CHUNK_DONE, max_steps, res


@njit(cache=True)
def ode_crossing_time(kind, params, F, dt, max_steps, floor):
    """Euler for g' = phi(g) + F from g = 0 until g reaches 1.

    Returns the interpolated crossing time, or -1 if the velocity fell below
    ``floor`` or the iterate froze in floating point (stuck) and -2 if the
    step budget ran out.
    """
    dummy = np.zeros((1, 4))
    g = 0.0
    for n in range(max_steps):
        v = _phi(kind, dummy, params, 0, g) + F
        if v < floor:
            return -1.0
        g_new = g + dt * v
        if g_new == g:
            return -1.0
        if g_new >= 1.0:
            return (n + (1.0 - g) / (g_new - g)) * dt
        g = g_new
    return -2.0
