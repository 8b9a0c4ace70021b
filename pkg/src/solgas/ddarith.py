"""Vectorized double-double (hi/lo) complex arithmetic and linear algebra.

N-soliton determinants mix matrix entries whose magnitudes differ by factors
up to ~e^600 once |x| or |t| grows, so plain float64 assembly destroys the
cancellation structure long before LAPACK sees the matrix.  This module
provides the ~106-bit compensated arithmetic the solvers fall back on.

A real double-double (dd) array is a pair (hi, lo) of float64 ndarrays with
hi + lo evaluated in exact arithmetic, |lo| <= ulp(hi)/2.  A complex
double-double (cdd) array is a tuple of four float64 ndarrays
(re_hi, re_lo, im_hi, im_lo).  Error-free transforms give ~2^-106 effective
precision for + and *; the O(n^3) kernels route through an Ozaki-style
bit-slice split so inner products run as exact float64 BLAS calls.

Scalar functions accept and return ndarrays throughout; nothing here is
precision-adaptive or interval-checked -- callers pick this engine when the
conditioning estimate says float64 is not enough (see nsoliton.py).
"""
import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def fast_two_sum(a, b):
    s = a + b
    err = b - (s - a)
    return s, err


def two_prod(a, b):
    p = a * b
    ah = _SPLITTER * a
    ah = ah - (ah - a)
    al = a - ah
    bh = _SPLITTER * b
    bh = bh - (bh - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def dd_add(xh, xl, yh, yl):
    sh, sl = two_sum(xh, yh)
    sl = sl + (xl + yl)
    return fast_two_sum(sh, sl)


def dd_mul(xh, xl, yh, yl):
    ph, pl = two_prod(xh, yh)
    pl = pl + (xh * yl + xl * yh)
    return fast_two_sum(ph, pl)


def dd_div(xh, xl, yh, yl):
    q1 = xh / yh
    th, tl = dd_mul(q1, np.zeros_like(q1), yh, yl)
    rh, rl = dd_add(xh, xl, -th, -tl)
    q2 = rh / yh
    th, tl = dd_mul(q2, np.zeros_like(q2), yh, yl)
    rh, rl = dd_add(rh, rl, -th, -tl)
    q3 = rh / yh
    qh, ql = fast_two_sum(q1, q2)
    return dd_add(qh, ql, q3, np.zeros_like(q3))


# ---------------- real transcendentals (QD-style, vectorized) ----------------

_LN2_H = 6.931471805599453e-01
_LN2_L = 2.3190468138462996e-17
_2PI_H = 6.283185307179586
_2PI_L = 2.4492935982947064e-16
_PIO2_H = 1.5707963267948966
_PIO2_L = 6.123233995736766e-17

# factorial reciprocals 1/2!, 1/3!, ... built by exact dd division chain;
# _FACR[k] = dd value of 1/(k+2)!
def _build_facr(nmax=32):
    out = []
    h = np.array([1.0])
    l = np.array([0.0])
    for n in range(2, nmax + 1):
        h, l = dd_div(h, l, np.array([float(n)]), np.array([0.0]))
        out.append((float(h[0]), float(l[0])))
    return out


_FACR = _build_facr()


def dd_ldexp(xh, xl, k):
    return np.ldexp(xh, k), np.ldexp(xl, k)


def dd_exp(xh, xl):
    """exp of real dd array, ~1e-31 relative accuracy for |x| <~ 700."""
    k = np.rint(xh / _LN2_H)
    th, tl = dd_mul(k, np.zeros_like(k), np.full_like(k, _LN2_H), np.full_like(k, _LN2_L))
    rh, rl = dd_add(xh, xl, -th, -tl)
    # scale r down by 2^9, Taylor, then square back up
    rh, rl = np.ldexp(rh, -9), np.ldexp(rl, -9)
    # p = sum_{i>=2} r^i/i!  via Horner in r
    ph, pl = np.zeros_like(rh), np.zeros_like(rh)
    for fh, fl in reversed(_FACR[:10]):
        ph, pl = dd_mul(ph, pl, rh, rl)
        ph, pl = dd_add(ph, pl, np.full_like(rh, fh), np.full_like(rh, fl))
    ph, pl = dd_mul(ph, pl, rh, rl)
    ph, pl = dd_mul(ph, pl, rh, rl)
    sh, sl = dd_add(rh, rl, ph, pl)          # e^r - 1
    for _ in range(9):                        # (1+s) <- (1+s)^2 : s <- 2s + s^2
        qh, ql = dd_mul(sh, sl, sh, sl)
        sh, sl = dd_add(*dd_add(sh, sl, sh, sl), qh, ql)
    yh, yl = dd_add(sh, sl, np.ones_like(sh), np.zeros_like(sh))
    return dd_ldexp(yh, yl, k.astype(int))


def _sin_taylor(rh, rl):
    # sin r = r * sum_i (-1)^i r^(2i)/(2i+1)!, |r| <= pi/4, terms to r^31
    x2h, x2l = dd_mul(rh, rl, rh, rl)
    coeffs = [(1.0, 0.0)] + [_FACR[2 * i - 1] for i in range(1, 16)]
    sh = np.zeros_like(rh)
    sl = np.zeros_like(rh)
    for i in range(len(coeffs) - 1, -1, -1):
        sh, sl = dd_mul(sh, sl, x2h, x2l)
        sgn = -1.0 if i % 2 else 1.0
        fh, fl = coeffs[i]
        sh, sl = dd_add(sh, sl, np.full_like(rh, sgn * fh), np.full_like(rh, sgn * fl))
    return dd_mul(sh, sl, rh, rl)


def _cos_taylor(rh, rl):
    # cos r = sum_i (-1)^i r^(2i)/(2i)!, |r| <= pi/4, terms to r^32
    x2h, x2l = dd_mul(rh, rl, rh, rl)
    coeffs = [(1.0, 0.0)] + [_FACR[2 * i - 2] for i in range(1, 17)]
    sh = np.zeros_like(rh)
    sl = np.zeros_like(rh)
    for i in range(len(coeffs) - 1, -1, -1):
        sh, sl = dd_mul(sh, sl, x2h, x2l)
        sgn = -1.0 if i % 2 else 1.0
        fh, fl = coeffs[i]
        sh, sl = dd_add(sh, sl, np.full_like(rh, sgn * fh), np.full_like(rh, sgn * fl))
    return sh, sl


def dd_sincos(xh, xl):
    """(sin, cos) of real dd array; args assumed |x| <~ 1e6."""
    j = np.rint(xh / _2PI_H)
    th, tl = dd_mul(j, np.zeros_like(j), np.full_like(j, _2PI_H), np.full_like(j, _2PI_L))
    rh, rl = dd_add(xh, xl, -th, -tl)
    q = np.rint(rh / _PIO2_H)
    th, tl = dd_mul(q, np.zeros_like(q), np.full_like(q, _PIO2_H), np.full_like(q, _PIO2_L))
    rh, rl = dd_add(rh, rl, -th, -tl)
    qm = (q.astype(int)) % 4
    s_h, s_l = _sin_taylor(rh, rl)
    c_h, c_l = _cos_taylor(rh, rl)
    sin_h = np.choose(qm, [s_h, c_h, -s_h, -c_h])
    sin_l = np.choose(qm, [s_l, c_l, -s_l, -c_l])
    cos_h = np.choose(qm, [c_h, -s_h, -c_h, s_h])
    cos_l = np.choose(qm, [c_l, -s_l, -c_l, s_l])
    return (sin_h, sin_l), (cos_h, cos_l)


def dd_sqrt(xh, xl):
    r0 = np.sqrt(xh)
    # one dd Newton step: r = (r0 + x/r0)/2
    qh, ql = dd_div(xh, xl, r0, np.zeros_like(r0))
    sh, sl = dd_add(qh, ql, r0, np.zeros_like(r0))
    return np.ldexp(sh, -1), np.ldexp(sl, -1)


def cdd_exp(x):
    """exp of complex dd: e^(a+ib) = e^a (cos b + i sin b)."""
    mag_h, mag_l = dd_exp(x[0], x[1])
    (sh, sl), (ch, cl) = dd_sincos(x[2], x[3])
    rh, rl = dd_mul(mag_h, mag_l, ch, cl)
    ih, il = dd_mul(mag_h, mag_l, sh, sl)
    return (rh, rl, ih, il)


# ---------------- complex double-double ----------------

def cdd(z):
    z = np.asarray(z, dtype=complex)
    zr = np.ascontiguousarray(z.real).astype(float)
    zi = np.ascontiguousarray(z.imag).astype(float)
    return (zr, np.zeros_like(zr), zi, np.zeros_like(zi))


def cdd_zeros(shape):
    return tuple(np.zeros(shape) for _ in range(4))


def cdd_to_complex(x):
    return (x[0] + x[1]) + 1j * (x[2] + x[3])


def cdd_copy(x):
    return tuple(a.copy() for a in x)


def cdd_conj(x):
    return (x[0], x[1], -x[2], -x[3])


def cdd_add(x, y):
    rh, rl = dd_add(x[0], x[1], y[0], y[1])
    ih, il = dd_add(x[2], x[3], y[2], y[3])
    return (rh, rl, ih, il)


def cdd_sub(x, y):
    rh, rl = dd_add(x[0], x[1], -y[0], -y[1])
    ih, il = dd_add(x[2], x[3], -y[2], -y[3])
    return (rh, rl, ih, il)


def cdd_mul(x, y):
    ac = dd_mul(x[0], x[1], y[0], y[1])
    bd = dd_mul(x[2], x[3], y[2], y[3])
    ad = dd_mul(x[0], x[1], y[2], y[3])
    bc = dd_mul(x[2], x[3], y[0], y[1])
    rh, rl = dd_add(ac[0], ac[1], -bd[0], -bd[1])
    ih, il = dd_add(ad[0], ad[1], bc[0], bc[1])
    return (rh, rl, ih, il)


def cdd_div(x, y):
    d1 = dd_mul(y[0], y[1], y[0], y[1])
    d2 = dd_mul(y[2], y[3], y[2], y[3])
    den = dd_add(*d1, *d2)
    num = cdd_mul(x, cdd_conj(y))
    rh, rl = dd_div(num[0], num[1], den[0], den[1])
    ih, il = dd_div(num[2], num[3], den[0], den[1])
    return (rh, rl, ih, il)


def dd_sum(xh, xl, axis=None):
    """Tree-reduction sum of a dd array along axis (dd accuracy)."""
    if axis is None:
        xh = xh.ravel()
        xl = xl.ravel()
        axis = 0
    xh = np.moveaxis(xh, axis, 0)
    xl = np.moveaxis(xl, axis, 0)
    while xh.shape[0] > 1:
        m = xh.shape[0]
        half = (m + 1) // 2
        ah, al = xh[:m // 2], xl[:m // 2]
        bh, bl = xh[half:], xl[half:]
        sh, sl = dd_add(ah, al, bh, bl)
        if m % 2:
            sh = np.concatenate([sh, xh[m // 2:half]], axis=0)
            sl = np.concatenate([sl, xl[m // 2:half]], axis=0)
        xh, xl = sh, sl
    return xh[0], xl[0]


def cdd_sum(x, axis=None):
    rh, rl = dd_sum(x[0], x[1], axis=axis)
    ih, il = dd_sum(x[2], x[3], axis=axis)
    return (rh, rl, ih, il)


# ---------------- Ozaki-split matmul ----------------

def _split_slices(ah, al, delta, axis, max_slices):
    work_h = ah.copy()
    work_l = al.copy()
    out = []
    for _ in range(max_slices):
        mx = np.max(np.abs(work_h), axis=axis, keepdims=True)
        if not np.any(mx > 0.0):
            break
        expo = np.ceil(np.log2(np.where(mx > 0.0, mx, 1.0)))
        sigma = np.where(mx > 0.0, np.exp2(expo + (53.0 - delta)), 0.0)
        chunk = (work_h + sigma) - sigma
        out.append(chunk)
        work_h, work_l = dd_add(work_h, work_l, -chunk, np.zeros_like(chunk))
    return out


def dd_matmul_real(ah, al, bh, bl, pure_a=False, pure_b=False):
    """(ah+al) @ (bh+bl) -> (ch, cl) with ~2^-100 relative-to-scale accuracy.

    pure_a/pure_b flag inputs that are plain doubles (lo == 0), which need
    fewer slices.
    """
    n = ah.shape[1]
    delta = int((53 - int(np.ceil(np.log2(max(n, 2))))) // 2)
    bits_a = 54 if pure_a else 107
    bits_b = 54 if pure_b else 107
    na = int(np.ceil(bits_a / delta))
    nb = int(np.ceil(bits_b / delta))
    asp = _split_slices(ah, al, delta, 1, na)
    bsp = _split_slices(bh, bl, delta, 0, nb)
    ch = np.zeros((ah.shape[0], bh.shape[1]))
    cl = np.zeros_like(ch)
    # keep products down to ~2^-112 relative to the leading slice pair
    pq_max = int(np.ceil(112.0 / delta))
    for p in range(len(asp)):
        for q in range(len(bsp)):
            if p + q > pq_max:
                continue
            prod = asp[p] @ bsp[q]
            ch, cl = dd_add(ch, cl, prod, np.zeros_like(prod))
    return ch, cl


def cdd_matmul(x, y, pure_x=False, pure_y=False):
    rr = dd_matmul_real(x[0], x[1], y[0], y[1], pure_x, pure_y)
    ii = dd_matmul_real(x[2], x[3], y[2], y[3], pure_x, pure_y)
    ri = dd_matmul_real(x[0], x[1], y[2], y[3], pure_x, pure_y)
    ir = dd_matmul_real(x[2], x[3], y[0], y[1], pure_x, pure_y)
    rh, rl = dd_add(rr[0], rr[1], -ii[0], -ii[1])
    ih, il = dd_add(ri[0], ri[1], ir[0], ir[1])
    return (rh, rl, ih, il)


# ---------------- blocked LU with partial pivoting ----------------

def _g(x, idx):
    return tuple(a[idx] for a in x)


def _s(x, idx, v):
    for a, b in zip(x, v):
        a[idx] = b


def cdd_lu(a, block=96):
    """Blocked in-place LU with partial pivoting; returns (a, piv)."""
    n = a[0].shape[0]
    piv = np.arange(n)
    for k0 in range(0, n, block):
        k1 = min(k0 + block, n)
        for k in range(k0, k1):
            mag = a[0][k:, k] ** 2 + a[2][k:, k] ** 2
            p = k + int(np.argmax(mag))
            if p != k:
                piv[[k, p]] = piv[[p, k]]
                for arr in a:
                    arr[[k, p], :] = arr[[p, k], :]
            pv = tuple(arr[k, k:k + 1] for arr in a)
            if pv[0][0] == 0.0 and pv[2][0] == 0.0:
                raise np.linalg.LinAlgError("dd LU: zero pivot")
            if k + 1 < n:
                sub = _g(a, (slice(k + 1, n), k))
                pvb = tuple(np.broadcast_to(v, sub[0].shape) for v in pv)
                mult = cdd_div(sub, pvb)
                _s(a, (slice(k + 1, n), k), mult)
                if k + 1 < k1:
                    row = _g(a, (k, slice(k + 1, k1)))
                    upd = cdd_mul(tuple(m[:, None] for m in mult),
                                  tuple(r[None, :] for r in row))
                    cur = _g(a, (slice(k + 1, n), slice(k + 1, k1)))
                    _s(a, (slice(k + 1, n), slice(k + 1, k1)), cdd_sub(cur, upd))
        if k1 == n:
            break
        # U12 <- L11^{-1} A12 (unit lower triangular forward substitution)
        for k in range(k0 + 1, k1):
            lrow = _g(a, (k, slice(k0, k)))
            a12 = _g(a, (slice(k0, k), slice(k1, n)))
            acc = cdd_mul(tuple(m[:, None] for m in lrow), a12)
            ssum = cdd_sum(acc, axis=0)
            cur = _g(a, (k, slice(k1, n)))
            _s(a, (k, slice(k1, n)), cdd_sub(cur, ssum))
        # A22 -= L21 @ U12
        l21 = _g(a, (slice(k1, n), slice(k0, k1)))
        u12 = _g(a, (slice(k0, k1), slice(k1, n)))
        upd = cdd_matmul(l21, u12)
        cur = _g(a, (slice(k1, n), slice(k1, n)))
        _s(a, (slice(k1, n), slice(k1, n)), cdd_sub(cur, upd))
    return a, piv


def cdd_lu_solve(lu, piv, b):
    """Solve A x = b from cdd_lu output; b is a cdd vector tuple."""
    n = lu[0].shape[0]
    x = tuple(v[piv].copy() for v in b)
    for k in range(n - 1):          # L y = P b, unit diagonal, column sweep
        xk = tuple(v[k:k + 1] for v in x)
        col = _g(lu, (slice(k + 1, n), k))
        upd = cdd_mul(col, tuple(np.broadcast_to(v, col[0].shape) for v in xk))
        rest = tuple(v[k + 1:] for v in x)
        new = cdd_sub(rest, upd)
        for arr, v in zip(x, new):
            arr[k + 1:] = v
    for k in range(n - 1, -1, -1):  # U x = y, column sweep
        xk = tuple(v[k:k + 1] for v in x)
        dk = tuple(arr[k, k:k + 1] for arr in lu)
        val = cdd_div(xk, dk)
        for arr, v in zip(x, val):
            arr[k:k + 1] = v
        if k > 0:
            col = _g(lu, (slice(0, k), k))
            upd = cdd_mul(col, tuple(np.broadcast_to(v, col[0].shape) for v in val))
            rest = tuple(v[:k] for v in x)
            new = cdd_sub(rest, upd)
            for arr, v in zip(x, new):
                arr[:k] = v
    return x


def cdd_lu_logdet(lu, piv):
    """log|det A| and arg(det A) from LU pivots (double output is plenty)."""
    d = np.diag(lu[0] + lu[1]) + 1j * np.diag(lu[2] + lu[3])
    logabs = float(np.sum(np.log(np.abs(d))))
    # sign of permutation
    perm = piv.copy()
    sign = 1.0
    seen = np.zeros(len(perm), bool)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j = i
        clen = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            clen += 1
        if clen % 2 == 0:
            sign = -sign
    ang = float(np.sum(np.angle(d)))
    if sign < 0:
        ang += np.pi
    return logabs, ang
