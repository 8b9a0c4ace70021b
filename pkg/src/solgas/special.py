"""Elliptic integrals and Jacobi theta functions.

Everything downstream (period lattice, phase constants, the dn envelope)
funnels through these four primitives, so they are kept dependency-free and
are cross-checked in the test suite against the Legendre relation and the
classical quasi-periodicity identities rather than against scipy alone.

Conventions:
  * elliptic integrals take the *parameter* m = k^2, not the modulus k;
  * theta3(z, tau) = sum_n exp(i pi n^2 tau + 2 pi i n z), periods 1 and tau
    (the "period one" normalization -- no pi inside the argument);
  * dn(u, m) is evaluated through the theta quotient, so the dn-based and
    theta-based formulas downstream agree to rounding instead of to whatever
    an independent AGM-descent implementation would give.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "elliptic_K",
    "elliptic_E",
    "theta3",
    "theta4",
    "jacobi_dn",
]

_MAX_THETA_TERMS = 512


def _agm_chain(m: float):
    """Run the arithmetic-geometric mean for parameter m in [0, 1).

    Returns (a_inf, sum_n 2^(n-1) c_n^2) from which both complete integrals
    follow.  Quadratic convergence: ~5 iterations at double precision.
    """
    if not 0.0 <= m < 1.0:
        raise ValueError(f"elliptic parameter m must lie in [0, 1), got {m}")
    a = 1.0
    b = np.sqrt(1.0 - m)
    c_sum = 0.5 * m  # 2^(-1) * c_0^2 with c_0^2 = a0^2 - b0^2 = m
    pow2 = 0.5
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        pow2 *= 2.0
        c_sum += pow2 * c * c
        if abs(c) < 1e-15 * a:
            # next correction to a is O(c^2/a) ~ 1e-30: below double rounding
            break
    else:  # pragma: no cover - AGM always converges long before this
        raise RuntimeError("AGM failed to converge")
    return a, c_sum


def elliptic_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention."""
    a_inf, _ = _agm_chain(m)
    return float(np.pi / (2.0 * a_inf))


def elliptic_E(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter convention."""
    a_inf, c_sum = _agm_chain(m)
    k_val = np.pi / (2.0 * a_inf)
    return float(k_val * (1.0 - c_sum))


def _theta_tail_bound(q_abs: float, y_max: float, n_cut: int) -> float:
    """Upper bound on the dropped |n| > n_cut part of the theta3 series.

    Term magnitudes are q_abs^(n^2) * e^(+-2 pi n Im z); past the turnover the
    two-sided tail is dominated by a geometric series with ratio
    q_abs^(2n+1) e^(2 pi y_max).
    """
    n = n_cut + 1
    lead = 2.0 * q_abs ** (n * n) * np.exp(2.0 * np.pi * n * y_max)
    ratio = q_abs ** (2 * n + 1) * np.exp(2.0 * np.pi * y_max)
    if ratio >= 1.0:
        return np.inf
    return lead / (1.0 - ratio)


def theta3(z, tau: complex, tol: float = 1e-13):
    """Third Jacobi theta function, z scalar or ndarray, fixed lattice tau.

    The truncation index is grown until a rigorous tail bound drops below
    ``tol`` relative to the largest retained term, and that bound is asserted
    before returning -- a silent under-summed theta would corrupt every
    asymptotic profile downstream in ways that are very hard to localize.
    """
    tau = complex(tau)
    if tau.imag <= 0.0:
        raise ValueError(f"theta3 requires Im tau > 0, got tau={tau}")
    z_arr = np.asarray(z, dtype=complex)
    q_abs = float(np.exp(-np.pi * tau.imag))
    y_max = float(np.max(np.abs(z_arr.imag))) if z_arr.size else 0.0

    n_cut = 1
    while (_theta_tail_bound(q_abs, y_max, n_cut) > tol
           and n_cut < _MAX_THETA_TERMS):
        n_cut += 1
    ns = np.arange(-n_cut, n_cut + 1)
    expo = (1j * np.pi * tau) * ns ** 2 + (2j * np.pi) * ns * z_arr[..., None]
    terms = np.exp(expo)
    scale = max(1.0, float(np.max(np.abs(terms))))
    bound = _theta_tail_bound(q_abs, y_max, n_cut)
    assert bound <= tol * scale, (
        f"theta3 tail bound {bound:.3e} exceeds {tol:.1e} * scale {scale:.3e} "
        f"at n_cut={n_cut}; lattice tau={tau}, max |Im z|={y_max:.3f}")
    out = terms.sum(axis=-1)
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(out)
    return out


def theta4(z, tau: complex, tol: float = 1e-13):
    """Fourth Jacobi theta function: theta3 shifted by a half period."""
    return theta3(np.asarray(z, dtype=complex) + 0.5, tau, tol=tol)


def jacobi_dn(u, m: float):
    """Jacobi dn(u | m) for real u (scalar or ndarray), 0 <= m < 1.

    Uses dn(u) = (theta4(0)/theta3(0)) * theta3(v)/theta4(v) at v = u/(2K),
    with lattice tau = i K(1-m)/K(m).  Evaluating dn through the same theta
    code used for the asymptotic profiles makes the two closed forms agree to
    rounding rather than to quadrature error.
    """
    k_val = elliptic_K(m)
    k_comp = elliptic_K(1.0 - m)
    tau = 1j * k_comp / k_val
    v = np.asarray(u, dtype=float) / (2.0 * k_val)
    # v real: reduce mod 1 so the tail bound never sees a large |Im z|
    v = np.mod(v + 0.5, 1.0) - 0.5
    ratio0 = theta4(0.0, tau) / theta3(0.0, tau)
    vals = ratio0 * theta3(v, tau) / theta4(v, tau)
    vals = np.real(vals)
    if np.isscalar(u) or np.ndim(u) == 0:
        return float(vals)
    return vals
