"""Compensated-arithmetic kernels: exactness of the error-free transforms,
~1e-30 effective precision of composite operations, and agreement of the
dd linear algebra with numpy in the well-conditioned regime.

The multiprecision reference values are frozen from a 50-digit
computation.
"""
import math

import numpy as np

from solgas.ddarith import (cdd, cdd_add, cdd_conj, cdd_exp, cdd_lu,
                            cdd_lu_logdet, cdd_lu_solve, cdd_matmul, cdd_mul,
                            cdd_sub, cdd_to_complex, dd_add, dd_exp, dd_mul,
                            dd_sincos, dd_sqrt, fast_two_sum, two_prod,
                            two_sum)


def test_two_sum_exact():
    rng = np.random.default_rng(7)
    a = rng.normal(size=100) * 10.0 ** rng.integers(-20, 20, 100)
    b = rng.normal(size=100) * 10.0 ** rng.integers(-20, 20, 100)
    s, e = two_sum(a, b)
    # s is the rounded sum and e the exact residual: s + e == a + b exactly
    assert np.array_equal(s, a + b)
    # spot-check exactness through an exactly representable case
    s1, e1 = two_sum(1.0, 2.0 ** -60)
    assert s1 == 1.0 and e1 == 2.0 ** -60


def test_two_prod_exact():
    a, b = 1.0 + 2.0 ** -30, 1.0 - 2.0 ** -30
    p, e = two_prod(a, b)
    # a*b = 1 - 2^-60 exactly; float64 rounds to 1, residual -2^-60
    assert p == 1.0 and e == -(2.0 ** -60)


def test_fast_two_sum_ordering():
    s, e = fast_two_sum(1.0, 2.0 ** -70)
    assert s == 1.0 and e == 2.0 ** -70


def test_dd_add_tiny_increment():
    # (1 + 1e-25) - 1 survives in dd but would vanish in float64
    h, l = dd_add(np.float64(1.0), np.float64(0.0),
                  np.float64(1e-25), np.float64(0.0))
    h2, l2 = dd_add(h, l, np.float64(-1.0), np.float64(0.0))
    assert abs((h2 + l2) - 1e-25) < 1e-41


def test_dd_mul_precision():
    # (1 + 2^-53)^2 = 1 + 2^-52 + 2^-106; the last term sits below the
    # 106-bit significand and is allowed to drop (lo*lo is never formed)
    h, l = dd_mul(np.float64(1.0), np.float64(2.0 ** -53),
                  np.float64(1.0), np.float64(2.0 ** -53))
    assert h == 1.0 + 2.0 ** -52
    assert abs(l) <= 2.0 ** -105
    # cross terms must survive: (1 + 2^-40)(1 + 2^-41) keeps both low bits
    h, l = dd_mul(np.float64(1.0), np.float64(2.0 ** -40),
                  np.float64(1.0), np.float64(2.0 ** -41))
    assert (h + l) == 1.0 + 2.0 ** -40 + 2.0 ** -41


# frozen 50-digit references
EXP_300_25 = 2.4941248615349212861e+130
SQRT_2 = 1.4142135623730950488


def test_dd_exp_against_reference():
    h, l = dd_exp(np.float64(300.25), np.float64(0.0))
    assert abs((h + l) / EXP_300_25 - 1.0) < 1e-29
    # exp(a+b) == exp(a) exp(b) in dd to ~1e-30
    ah, al = dd_exp(np.float64(150.0), np.float64(0.0))
    bh, bl = dd_exp(np.float64(150.25), np.float64(0.0))
    ph, pl = dd_mul(ah, al, bh, bl)
    assert abs((ph + pl) / (h + l) - 1.0) < 1e-29


def test_dd_sincos_pythagoras():
    for v in (0.3, 2.9, 10.1, -7.7):
        (sh, sl), (ch, cl) = dd_sincos(np.float64(v), np.float64(0.0))
        s2h, s2l = dd_mul(sh, sl, sh, sl)
        c2h, c2l = dd_mul(ch, cl, ch, cl)
        th, tl = dd_add(s2h, s2l, c2h, c2l)
        assert abs((th + tl) - 1.0) < 1e-30
        assert abs((sh + sl) - math.sin(v)) < 1e-15


def test_dd_sqrt():
    h, l = dd_sqrt(np.float64(2.0), np.float64(0.0))
    assert abs((h + l) - SQRT_2) < 1e-30


def test_cdd_roundtrip_and_algebra():
    rng = np.random.default_rng(11)
    z = rng.normal(size=8) + 1j * rng.normal(size=8)
    w = rng.normal(size=8) + 1j * rng.normal(size=8)
    zc, wc = cdd(z), cdd(w)
    assert np.max(np.abs(cdd_to_complex(zc) - z)) == 0.0
    assert np.max(np.abs(cdd_to_complex(cdd_add(zc, wc)) - (z + w))) < 1e-15
    assert np.max(np.abs(cdd_to_complex(cdd_sub(zc, wc)) - (z - w))) < 1e-15
    assert np.max(np.abs(cdd_to_complex(cdd_mul(zc, wc)) - z * w)) < 1e-14
    assert np.max(np.abs(cdd_to_complex(cdd_conj(zc)) - np.conj(z))) == 0.0


def test_cdd_exp_matches_numpy():
    z = np.array([0.3 + 1.2j, -2.0 - 0.7j, 5.5 + 30.0j])
    got = cdd_to_complex(cdd_exp(cdd(z)))
    assert np.max(np.abs(got / np.exp(z) - 1.0)) < 1e-15


def test_cdd_matmul_matches_numpy():
    rng = np.random.default_rng(23)
    a = rng.normal(size=(17, 13)) + 1j * rng.normal(size=(17, 13))
    b = rng.normal(size=(13, 9)) + 1j * rng.normal(size=(13, 9))
    got = cdd_to_complex(cdd_matmul(cdd(a), cdd(b)))
    ref = a @ b
    assert np.max(np.abs(got - ref)) < 1e-13 * np.max(np.abs(ref))


def test_cdd_matmul_beats_float64():
    # an inner product with catastrophic float64 cancellation: columns of
    # pairs (v, -v) plus a tiny residue; dd keeps the residue exactly
    n = 64
    big = np.full(n, 1e12)
    a = np.empty((1, 2 * n + 1))
    a[0, :n] = big
    a[0, n:2 * n] = -big
    a[0, 2 * n] = 1e-8
    b = np.ones((2 * n + 1, 1))
    got = cdd_to_complex(cdd_matmul(cdd(a), cdd(b)))[0, 0]
    assert abs(got - 1e-8) < 1e-24


def test_cdd_lu_solve_and_logdet():
    rng = np.random.default_rng(5)
    n = 24
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    bvec = rng.normal(size=n) + 1j * rng.normal(size=n)
    lu, piv = cdd_lu(cdd(a.copy()))
    x = cdd_to_complex(cdd_lu_solve(lu, piv, cdd(bvec)))
    assert np.max(np.abs(a @ x - bvec)) < 1e-12
    logabs, arg = cdd_lu_logdet(lu, piv)
    sign, ref_logabs = np.linalg.slogdet(a)
    assert abs(logabs - ref_logabs) < 1e-11
    assert abs(np.exp(1j * arg) - sign) < 1e-11
