"""Closed-form left-tail asymptotics on the genus-one spectral curve
w^2 = R(z) = (z^2 + alpha1^2)(z^2 + alpha2^2).

Far to the left the condensed gas profile locks onto a periodic elliptic
wave.  This module evaluates every ingredient of that closed form from the
domain geometry alone: the branch of sqrt(R), the period constants (modulus
m, kappa, Omega), the phase-shift integral Delta, the scalar normalizing
functions g and f with their limits g_infty and phi_infty, the Abel map u,
the 2x2 theta-function model matrix X, the profile center x0, and the two
equivalent closed forms of the asymptotic profile (theta-quotient and
Jacobi-dn).  Each object is accompanied by residual evaluators for its
defining jump relations so the branch bookkeeping is checked numerically
rather than trusted.

Conventions, fixed once and verified by the residual tests:

* Both vertical cuts are oriented upward: the upper cut runs from i*alpha1
  to i*alpha2 and the lower cut from -i*alpha2 to -i*alpha1.  The "+"
  boundary value is the limit from the left (Re z < 0), matching the default
  sign convention of the segment weight r = deltaS * beta^2 (negative real
  on the upper cut).
* sqrt(R) is positive on the middle gap (-i*alpha1, i*alpha1) and on the
  real axis, behaves like z^2 at infinity, and takes one-sided values
  -i*sqrt|R| (upper cut, from the left) and +i*sqrt|R| (lower cut, from the
  left).  It is built as a product of two square roots whose cuts are
  exactly the two segments, so no quadrant-by-quadrant case analysis is
  needed.
* log r on the upper cut means log|r| + i*pi (plus the principal log of
  beta(iy)^2 when beta is not constant); the reflected weight on the lower
  cut uses the conjugate branch log|r| - i*pi.  Using the principal log on
  both cuts instead would push a spurious real part into Delta.

Singular one-dimensional integrals (inverse square-root endpoints times
logarithmic factors from log r, plus near-cut Cauchy kernels) all go through
one shared scheme: the substitution y = alpha1 + (alpha2-alpha1)*sin^2(s/2)
removes the 1/sqrt endpoint weight exactly, and the remaining integrand is
integrated by composite Gauss-Legendre on a panel mesh geometrically graded
toward every remaining singular or near-singular point.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import (EllipseDomain, SolitonDensity, schwarz_delta,
                       schwarz_delta_scale)
from .special import elliptic_E, elliptic_K, jacobi_dn, theta3

__all__ = [
    "SpectralCurve",
    "EllipticParams",
    "elliptic_params",
    "omega_period_quadrature",
    "big_delta",
    "AsymptoticProfile",
]

_BRANCH_POINT_TOL = 1e-6


# ----------------------------------------------------------------------
# quadrature helpers
# ----------------------------------------------------------------------

@lru_cache(maxsize=32)
def _gauss(n: int):
    return leggauss(n)


def _quad_line(f, a, b, n: int = 200) -> complex:
    """Integral of f along the straight segment from a to b (complex ends)."""
    x, w = _gauss(n)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def _quad_sqrt_leg(f, branch_pt, w1, n: int = 200) -> complex:
    """Integral of f from a square-root branch point to w1.

    The substitution zeta = branch_pt + t^2*(w1 - branch_pt) turns the
    integrable 1/sqrt(zeta - branch_pt) behaviour into a smooth integrand.
    """
    x, w = _gauss(n)
    t = 0.5 * (x + 1.0)
    zeta = branch_pt + t * t * (w1 - branch_pt)
    return np.sum(0.5 * w * f(zeta) * 2.0 * t * (w1 - branch_pt))


def _graded_edges(a: float, b: float, special, min_width: float,
                  growth: float) -> np.ndarray:
    """Panel edges on [a, b], geometrically refined toward each special point."""
    edges = {a, b}
    span = b - a
    for p in special:
        width = min_width
        while width < span:
            for e in (p - width, p + width):
                if a < e < b:
                    edges.add(float(e))
            width *= growth
    out = np.array(sorted(edges))
    keep = np.concatenate(([True], np.diff(out) > 1e-14 * max(span, 1.0)))
    return out[keep]


def _quad_graded(f, a: float, b: float, special=(), n: int = 24,
                 min_width: float = 1e-8, growth: float = 3.0) -> complex:
    """Composite Gauss-Legendre on a graded panel mesh.

    Handles endpoint log singularities and interior near-singularities at
    the listed special points: panels shrink geometrically toward each one,
    so the under-resolved region carries negligible measure.
    """
    edges = _graded_edges(a, b, special, min_width, growth)
    x, w = _gauss(n)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halfs = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mids[:, None] + halfs[:, None] * x[None, :]).ravel()
    weights = (halfs[:, None] * w[None, :]).ravel()
    return np.sum(weights * f(nodes))


def _quad_line_graded(f, a, b, n: int = 24, min_width: float = 1e-10) -> complex:
    """Straight-segment integral with panels graded toward the endpoint b.

    Used for the final leg of a path whose target sits close to the jump
    contour: the integrand develops a boundary layer at the b end that a
    single Gauss rule cannot resolve.
    """
    def ft(t):
        t = np.asarray(t)
        return f(a + t * (b - a)) * (b - a)

    return _quad_graded(ft, 0.0, 1.0, special=(1.0,), n=n,
                        min_width=min_width)


def _one_sided(F, z0: complex, direction: complex, h0: float = 0.08,
               levels: int = 5):
    """Boundary value lim_{h->0+} F(z0 + h*direction) by Richardson extrapolation.

    F must be analytic up to the boundary so the offset values admit a
    polynomial expansion in h; a Neville table over h0/2^k then removes the
    first `levels-1` orders.  F may return scalars or arrays.
    """
    hs = h0 / 2.0 ** np.arange(levels)
    vals = [np.asarray(F(z0 + h * direction), dtype=complex) for h in hs]
    for k in range(1, levels):
        fac = 2.0 ** k
        vals = [(fac * vals[i + 1] - vals[i]) / (fac - 1.0)
                for i in range(len(vals) - 1)]
    out = vals[0]
    return out if out.ndim else complex(out)


# ----------------------------------------------------------------------
# the spectral curve and its square root
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralCurve:
    """The quartic R(z) = (z^2+alpha1^2)(z^2+alpha2^2) and its branch of sqrt.

    The branch is realized as a product of two factors, each a principal
    square root after rotating the plane by -i, so that one factor cuts
    exactly along the upper segment and the other along the lower one:

        sqrt(R)(z) = [i*sqrt(-iz - alpha1)*sqrt(-iz - alpha2)]
                   * [i*sqrt(-iz + alpha1)*sqrt(-iz + alpha2)].

    Each bracket is continuous off its own segment because crossing the
    rotated real axis beyond the segment flips both principal roots at
    once.  The product is positive on the middle gap and on the real axis
    and behaves like z^2 at infinity.
    """

    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (0.0 < self.alpha1 < self.alpha2):
            raise ValueError(
                f"branch points need 0 < alpha1 < alpha2, got "
                f"({self.alpha1}, {self.alpha2})")

    @property
    def branch_points(self) -> np.ndarray:
        a1, a2 = self.alpha1, self.alpha2
        return np.array([1j * a1, 1j * a2, -1j * a1, -1j * a2])

    def R(self, z):
        z = np.asarray(z, dtype=complex)
        return (z * z + self.alpha1 ** 2) * (z * z + self.alpha2 ** 2)

    def sqrt_R(self, z):
        z = np.asarray(z, dtype=complex)
        zeta = -1j * z
        upper = 1j * np.sqrt(zeta - self.alpha1) * np.sqrt(zeta - self.alpha2)
        lower = 1j * np.sqrt(zeta + self.alpha1) * np.sqrt(zeta + self.alpha2)
        return upper * lower

    def abs_R_on_cut(self, y):
        """|R(iy)| for cut ordinates alpha1 <= |y| <= alpha2."""
        y = np.abs(np.asarray(y, dtype=float))
        return np.abs((y * y - self.alpha1 ** 2) * (self.alpha2 ** 2 - y * y))

    def sqrt_R_plus(self, y):
        """One-sided value of sqrt(R) at z = iy on the cuts, from the left.

        y > 0 addresses the upper cut (value -i*sqrt|R|), y < 0 the lower
        cut (value +i*sqrt|R|); the minus side is the negative of this.
        """
        y = np.asarray(y, dtype=float)
        mag = np.sqrt(self.abs_R_on_cut(y))
        return np.where(y > 0, -1j, 1j) * mag

    def near_branch_point(self, z, tol: float = _BRANCH_POINT_TOL) -> bool:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return bool(np.min(np.abs(z[:, None] - self.branch_points)) < tol)


# ----------------------------------------------------------------------
# period constants
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticParams:
    """Constants of the genus-one closed form.

    The first block (m through Omega) depends only on the branch points and
    is filled by elliptic_params(); the weight-dependent block (Delta,
    g_infty, phi_infty, x0) is completed by AsymptoticProfile.
    """

    m: float
    m_prime: float
    tau_modulus: complex
    K: float
    K_prime: float
    kappa: float
    Omega: float
    Delta: complex | None = None
    g_infty: float | None = None
    phi_infty: float | None = None
    x0: float | None = None

    def __post_init__(self):
        if not (0.0 < self.m < 1.0):
            raise ValueError(f"modulus m must lie in (0,1), got {self.m}")
        if self.Omega >= 0.0:
            raise ValueError(f"Omega must be negative, got {self.Omega}")
        if self.tau_modulus.imag <= 0.0:
            raise ValueError("tau must have positive imaginary part")


def elliptic_params(alpha1: float, alpha2: float, *,
                    n_quad: int = 240) -> EllipticParams:
    """Branch-point block of EllipticParams, with a quadrature cross-check.

    kappa has the closed form alpha2^2 * (1 - E(m1)/K(m1)) with
    m1 = (alpha1/alpha2)^2; it is also the unique constant for which the
    middle-gap integral of (zeta^2 + kappa)/sqrt(R) vanishes, i.e. the
    ratio of the two middle-gap moment integrals.  Both are computed and
    must agree — a disagreement means the branch of sqrt(R) is
    misconfigured, so this raises instead of returning a silently wrong
    constant.
    """
    if not (0.0 < alpha1 < alpha2):
        raise ValueError("need 0 < alpha1 < alpha2")
    s = alpha1 + alpha2
    m = 4.0 * alpha1 * alpha2 / s ** 2
    K = elliptic_K(m)
    K_prime = elliptic_K(1.0 - m)
    m1 = (alpha1 / alpha2) ** 2
    kappa = alpha2 ** 2 * (1.0 - elliptic_E(m1) / elliptic_K(m1))

    # defining ratio over the middle gap, with y = alpha1*sin(phi) soaking
    # up the inverse-sqrt endpoints
    x, w = _gauss(n_quad)
    phi = 0.5 * np.pi * x
    wphi = 0.5 * np.pi * w
    den = np.sqrt(alpha2 ** 2 - (alpha1 * np.sin(phi)) ** 2)
    i0 = np.sum(wphi / den)
    i2 = np.sum(wphi * (alpha1 * np.sin(phi)) ** 2 / den)
    kappa_ratio = i2 / i0
    if abs(kappa - kappa_ratio) > 1e-8:
        raise RuntimeError(
            "kappa closed form and defining integral disagree "
            f"({kappa:.12g} vs {kappa_ratio:.12g}); the sqrt(R) branch is "
            "misconfigured")

    return EllipticParams(
        m=m, m_prime=1.0 - m, tau_modulus=1j * K_prime / K,
        K=K, K_prime=K_prime, kappa=kappa, Omega=-np.pi * s / K)


def omega_period_quadrature(curve: SpectralCurve, kappa: float, *,
                            n: int = 24, min_width: float = 1e-8) -> float:
    """Loop period of (zeta^2+kappa)/sqrt(R) around the upper cut.

    Direct oracle for Omega: the counterclockwise loop hugging the upper
    cut equals minus twice the plus-side integral along it (the minus side
    contributes the same amount because sqrt(R) flips sign across the cut).
    The plus-side integral reduces to +int (y^2-kappa)/sqrt|R| dy, and the
    sin^2 substitution removes the endpoint weight.
    """
    a1, a2 = curve.alpha1, curve.alpha2

    def integrand(sig):
        y = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
        q = np.sqrt((y + a1) * (y + a2))
        return (y * y - kappa) / q

    val = _quad_graded(integrand, 0.0, np.pi, n=n, min_width=min_width)
    return float(-2.0 * np.real(val))


# ----------------------------------------------------------------------
# the segment weight r and the phase-shift integral Delta
# ----------------------------------------------------------------------

class _CutWeight:
    """log r along the upper cut, split into magnitude and branch parts.

    r(iy) = deltaS(iy) * beta(iy)^2 with the left-limit Schwarz jump, which
    is negative real; its log therefore carries a constant +i*pi on the
    upper cut, while the reflected weight on the lower cut uses the
    conjugate branch.  beta contributes 2*Log(beta(iy)) with the principal
    log, the continuous branch as long as beta does not wind along the cut
    (the zero-free precondition).
    """

    def __init__(self, domain: EllipseDomain, beta: SolitonDensity):
        if beta.is_zero:
            raise ValueError("beta vanishes identically: log r is undefined "
                             "on the whole cut")
        self.domain = domain
        self.beta = beta
        # a root of beta on (or hugging) the closed cut breaks the
        # zero-free precondition even when no quadrature node lands on it
        coeff = np.trim_zeros(beta.coefficients, "b")
        if coeff.size > 1:
            for w in np.roots(coeff[::-1]):
                on_axis = abs(w.real) < 1e-9
                in_range = (domain.alpha1 - 1e-9 <= w.imag
                            <= domain.alpha2 + 1e-9)
                if on_axis and in_range:
                    raise ValueError(
                        f"beta has a zero at {w:.6g} on the focal segment: "
                        "the cut weight log r is singular there")

    def log_r(self, y):
        """log r(iy) on the upper cut, branch as in the module header."""
        y = np.asarray(y, dtype=float)
        delta = schwarz_delta(self.domain, y, plus_side="left")
        bval = self._beta_checked(y)
        return np.log(-delta) + 1j * np.pi + 2.0 * np.log(bval)

    def log_r_sigma(self, sig):
        """log r at y(sigma) = a1 + (a2-a1)*sin^2(sigma/2), endpoint-stable.

        The Schwarz jump factors exactly into a constant times
        sqrt((y-a1)(a2-y)), and in the sigma variable that square root is
        (a2-a1)*sin(sigma/2)*cos(sigma/2); taking logs term by term avoids
        the underflow of y - a1 itself when the panel mesh grades deep into
        an endpoint.
        """
        sig = np.asarray(sig, dtype=float)
        a1, a2 = self.domain.alpha1, self.domain.alpha2
        half = 0.5 * sig
        y = a1 + (a2 - a1) * np.sin(half) ** 2
        mag = (math.log(schwarz_delta_scale(self.domain) * (a2 - a1))
               + np.log(np.sin(half)) + np.log(np.abs(np.cos(half))))
        bval = self._beta_checked(y)
        return mag + 1j * np.pi + 2.0 * np.log(bval)

    def _beta_checked(self, y):
        bval = np.asarray(self.beta(1j * np.asarray(y, dtype=float)),
                          dtype=complex)
        if np.any(np.abs(bval) < 1e-13):
            raise ValueError("beta vanishes on the cut: log r has a "
                             "non-integrable singularity mid-segment")
        return bval


def _delta_integrals(weight: _CutWeight, a1: float, a2: float, *,
                     n: int, min_width: float):
    """The two cut integrals of log r / sqrt(R)_+ entering Delta.

    Both reduce to the upper-cut ordinate via the orientation and
    boundary-value bookkeeping of the module header:

        upper cut:  - int_{a1}^{a2} log r(y) / sqrt|R(y)| dy
        lower cut:  + int_{a1}^{a2} conj(log r(y)) / sqrt|R(y)| dy

    and the sin^2 substitution leaves only the log endpoint singularities
    for the graded mesh.
    """

    def upper(sig):
        y = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
        q = np.sqrt((y + a1) * (y + a2))
        return -weight.log_r_sigma(sig) / q

    def lower(sig):
        y = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
        q = np.sqrt((y + a1) * (y + a2))
        return np.conj(weight.log_r_sigma(sig)) / q

    kw = dict(special=(0.0, np.pi), n=n, min_width=min_width)
    return (_quad_graded(upper, 0.0, np.pi, **kw),
            _quad_graded(lower, 0.0, np.pi, **kw))


def big_delta(domain: EllipseDomain, beta: SolitonDensity | None = None, *,
              n: int = 24, min_width: float = 1e-8) -> complex:
    """Phase shift Delta = -i(a1+a2)/(2K) * [upper - lower cut integral].

    Returned as the full complex quadrature value: the imaginary parts of
    the two cut integrals cancel only if the branch bookkeeping is right,
    so |Re Delta| is a meaningful residual rather than being forced to
    zero.
    """
    if beta is None:
        beta = SolitonDensity.constant(1.0)
    weight = _CutWeight(domain, beta)
    params = elliptic_params(domain.alpha1, domain.alpha2)
    i_upper, i_lower = _delta_integrals(weight, domain.alpha1, domain.alpha2,
                                        n=n, min_width=min_width)
    s = domain.alpha1 + domain.alpha2
    return -1j * s / (2.0 * params.K) * (i_upper - i_lower)


# ----------------------------------------------------------------------
# the profile object: g, f, Abel map, model matrix, psi0
# ----------------------------------------------------------------------

class AsymptoticProfile:
    """All left-tail asymptotic evaluators for one (domain, beta) pair.

    Construction computes the period constants, Delta, the limits g_infty
    and phi_infty (by quadrature, not closed form), and the profile center
    x0, then freezes them in .params.  The scalar functions g and f, the
    Abel map u and the model matrix X stay available as methods because the
    residual tests probe them pointwise off and on the cuts.
    """

    def __init__(self, domain: EllipseDomain,
                 beta: SolitonDensity | None = None, *,
                 panel_nodes: int = 24, min_width: float = 1e-8,
                 path_nodes: int = 200):
        if beta is None:
            beta = SolitonDensity.constant(1.0)
        self.domain = domain
        self.beta = beta
        self.curve = SpectralCurve(domain.alpha1, domain.alpha2)
        self._weight = _CutWeight(domain, beta)
        self._n = panel_nodes
        self._minw = min_width
        self._pn = path_nodes
        self.a1 = domain.alpha1
        self.a2 = domain.alpha2
        self.s = self.a1 + self.a2
        self._anchor_cache: dict[float, complex] = {}

        base = elliptic_params(self.a1, self.a2)
        self._K = base.K
        self._tau = base.tau_modulus
        self._Omega = base.Omega
        self._kappa = base.kappa
        self._m = base.m

        self._delta = big_delta(domain, beta, n=panel_nodes,
                                min_width=min_width)
        g_inf = self._g_infty_quadrature()
        phi_inf = self._phi_infty_quadrature()
        x0, self.x0_residual = self._pin_x0()
        self.params = dataclasses.replace(
            base, Delta=self._delta, g_infty=float(np.real(g_inf)),
            phi_infty=float(phi_inf), x0=float(x0))
        # Abel image of the top branch point, used by the model matrix
        self._u_top = self._abel_top()

    # -------------------------------------------------- g and its limit

    def _g_integrand(self, zeta):
        return (zeta * zeta + self._kappa) / self.curve.sqrt_R(zeta)

    def _g_path(self, z: complex) -> complex:
        """Path integral of (zeta^2+kappa)/sqrt(R) from i*alpha2 to z.

        The path never leaves the closed half-plane of z (making the value
        the branch continuous off the segment [-i*alpha2, i*alpha2]) and it
        leaves the branch point along a square-root-absorbing first leg.
        """
        z = complex(z)
        a2 = self.a2
        top = 1j * a2
        f = self._g_integrand
        n = self._pn
        sigma = float(np.sign(z.real))
        if sigma == 0.0:
            if z.imag > a2:
                return _quad_sqrt_leg(f, top, z, n)
            if z.imag < -a2:
                w1 = complex(a2, a2)
                w2 = complex(a2, z.imag)
                return (_quad_sqrt_leg(f, top, w1, n)
                        + _quad_line(f, w1, w2, n)
                        + _quad_line_graded(f, w2, z))
            raise ValueError(f"{z} lies on the jump contour; use g_boundary")
        w1 = complex(sigma * a2, a2)
        val = _quad_sqrt_leg(f, top, w1, n)
        if abs(z.real) >= a2:
            return val + _quad_line_graded(f, w1, z)
        w2 = complex(sigma * a2, z.imag)
        return val + _quad_line(f, w1, w2, n) + _quad_line_graded(f, w2, z)

    def g(self, z: complex) -> complex:
        """g(z) = -z + path integral; continuous off [-i*alpha2, i*alpha2]."""
        if self.curve.near_branch_point(z):
            raise ValueError("g is square-root singular at the branch points")
        return -complex(z) + self._g_path(z)

    def _offset_h0(self, z0: complex) -> float:
        """Largest safe Richardson base step at z0: the offset expansion in h
        only converges within the distance to the nearest branch point."""
        d = float(np.min(np.abs(complex(z0) - self.curve.branch_points)))
        return min(0.06, 0.35 * d)

    def g_boundary(self, y: float, side: str) -> complex:
        """One-sided value of g at z = iy by Richardson-extrapolated offsets.

        side "+" approaches from the left (Re z < 0).  Deliberately built
        from the off-contour evaluator rather than a one-sided closed form,
        so the jump residuals genuinely test the branch bookkeeping.
        """
        if side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        direction = -1.0 if side == "+" else 1.0
        return _one_sided(self.g, 1j * y, direction,
                          h0=self._offset_h0(1j * y), levels=6)

    def g_plus_direct(self, y: float) -> complex:
        """Plus value on the upper cut via the real integral form.

        g_+(iy) = -iy + int_y^{a2} (kappa - v^2)/sqrt|R(v)| dv; independent
        cross-check of the extrapolated boundary values.  The substitution
        v = a2 - u^2 absorbs the square-root endpoint at a2 exactly; the
        other endpoint is merely graded because its near-singularity (the
        branch point at a1) only matters when y sits close to it.
        """
        a1, a2 = self.a1, self.a2
        kappa = self._kappa
        umax = math.sqrt(a2 - float(y))

        def integrand(u):
            v = a2 - u * u
            return 2.0 * (kappa - v * v) / np.sqrt(
                (v * v - a1 * a1) * (a2 + v))

        val = _quad_graded(integrand, 0.0, umax, special=(umax,),
                           n=self._n, min_width=self._minw)
        return -1j * y + complex(val)

    def _g_infty_quadrature(self) -> complex:
        """g_infty as a convergent integral along a ray.

        Subtracting the limit 1 of the integrand makes the tail integrable;
        compactifying the far leg with zeta = w1/t turns the whole limit
        into two finite smooth quadratures, no radius extrapolation needed.
        """
        a2 = self.a2
        top = 1j * a2
        w1 = complex(3.0 * a2, a2)

        def near(zeta):
            return self._g_integrand(zeta) - 1.0

        def far(t):
            t = np.asarray(t)
            zeta = w1 / t
            return (self._g_integrand(zeta) - 1.0) * (-w1 / (t * t))

        val = _quad_sqrt_leg(near, top, w1, self._pn)
        val += _quad_line(far, 1.0, 0.0, self._pn)
        return -top + val

    # -------------------------------------------------- f and its limit

    def _cauchy_upper(self, z: complex) -> complex:
        """Upper-cut integral of log r / (sqrt(R)_+ (zeta - z)) dzeta."""
        a1, a2 = self.a1, self.a2
        weight = self._weight

        def integrand(sig):
            y = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
            q = np.sqrt((y + a1) * (y + a2))
            return -weight.log_r_sigma(sig) / (q * (1j * y - z))

        special = [0.0, np.pi]
        if abs(z.real) < 0.5 * (a2 - a1) and a1 < z.imag < a2:
            frac = np.clip((z.imag - a1) / (a2 - a1), 1e-12, 1 - 1e-12)
            special.append(2.0 * math.asin(math.sqrt(frac)))
        return _quad_graded(integrand, 0.0, np.pi, special=tuple(special),
                            n=self._n, min_width=self._minw)

    def _cauchy_lower(self, z: complex) -> complex:
        """Lower-cut integral of log r* / (sqrt(R)_+ (zeta - z)) dzeta."""
        a1, a2 = self.a1, self.a2
        weight = self._weight

        def integrand(sig):
            v = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
            q = np.sqrt((v + a1) * (v + a2))
            return np.conj(weight.log_r_sigma(sig)) / (q * (-1j * v - z))

        special = [0.0, np.pi]
        if abs(z.real) < 0.5 * (a2 - a1) and -a2 < z.imag < -a1:
            frac = np.clip((-z.imag - a1) / (a2 - a1), 1e-12, 1 - 1e-12)
            special.append(2.0 * math.asin(math.sqrt(frac)))
        return _quad_graded(integrand, 0.0, np.pi, special=tuple(special),
                            n=self._n, min_width=self._minw)

    def _cauchy_middle(self, z: complex) -> complex:
        """Middle-gap integral of 1 / (sqrt(R) (zeta - z)) dzeta.

        On the gap sqrt(R)(iy) = sqrt((a1^2-y^2)(a2^2-y^2)) > 0 and the
        substitution y = a1*sin(phi) absorbs the endpoint weight.
        """
        a1, a2 = self.a1, self.a2

        def integrand(phi):
            y = a1 * np.sin(phi)
            den = np.sqrt(a2 * a2 - y * y)
            return 1j / (den * (1j * y - z))

        special = []
        if abs(z.real) < 0.5 * (a2 - a1) and abs(z.imag) < a1:
            frac = np.clip(z.imag / a1, -1 + 1e-12, 1 - 1e-12)
            special.append(math.asin(frac))
        return _quad_graded(integrand, -0.5 * np.pi, 0.5 * np.pi,
                            special=tuple(special), n=self._n,
                            min_width=self._minw)

    def _f_exponent_bracket(self, z: complex) -> complex:
        return (-self._cauchy_upper(z) + self._cauchy_lower(z)
                + self._delta * self._cauchy_middle(z))

    def f(self, z: complex) -> complex:
        """The weight-normalizing scalar f, off the jump contour."""
        z = complex(z)
        if self.curve.near_branch_point(z):
            raise ValueError("f is not evaluated at the branch points")
        if z.real == 0.0 and abs(z.imag) <= self.a2:
            raise ValueError(f"{z} lies on the jump contour; use f_boundary")
        expo = complex(self.curve.sqrt_R(z)) * self._f_exponent_bracket(z) \
            / (2j * np.pi)
        return complex(np.exp(expo))

    def _pv_cut_integral(self, y0: float, upper: bool) -> complex:
        """PV of the own-cut Cauchy integral for a point on that cut.

        Computes PV int density(y)/(sqrt|R|(y)(y-y0)) dy by subtracting the
        singular density value against the closed-form principal value of
        1/(y-y0); the sin^2 Jacobian vanishing at the endpoints keeps the
        subtracted term regular there.  Both cut integrals reduce to
        i * (this value) in the contour normalization.
        """
        a1, a2 = self.a1, self.a2
        weight = self._weight

        def density_sigma(sig):
            val = weight.log_r_sigma(sig)
            return val if upper else np.conj(val)

        m0 = complex(weight.log_r(np.array([y0]))[0]) / math.sqrt(
            (y0 * y0 - a1 * a1) * (a2 * a2 - y0 * y0))
        if not upper:
            m0 = np.conj(m0)

        def integrand(sig):
            y = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
            q = np.sqrt((y + a1) * (y + a2))
            jac = (a2 - a1) * np.sin(0.5 * sig) * np.cos(0.5 * sig)
            return (density_sigma(sig) / q - m0 * jac) / (y - y0)

        frac = np.clip((y0 - a1) / (a2 - a1), 1e-12, 1 - 1e-12)
        sig0 = 2.0 * math.asin(math.sqrt(frac))
        val = _quad_graded(integrand, 0.0, np.pi,
                           special=(0.0, np.pi, sig0),
                           n=self._n, min_width=self._minw)
        val += m0 * math.log((a2 - y0) / (y0 - a1))
        return 1j * val

    def f_boundary(self, y: float, side: str) -> complex:
        """One-sided value of f on either cut via the principal-value limit.

        The Cauchy integral over the cut carrying the point acquires its
        principal value plus the Plemelj half-residue +/- i*pi*density;
        the other two integrals stay regular.  Cross-checked in the tests
        against Richardson offsets of f itself.
        """
        if side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        a1, a2 = self.a1, self.a2
        if not (a1 < abs(y) < a2):
            raise ValueError("f_boundary lives on the open cuts")
        sgn = 1.0 if side == "+" else -1.0
        z0 = 1j * y
        sqrt_plus = complex(self.curve.sqrt_R_plus(y))
        if y > 0:
            logr0 = complex(self._weight.log_r(np.array([y]))[0])
            pv_upper = self._pv_cut_integral(y, upper=True)
            w_pv = (-pv_upper + self._cauchy_lower(z0)
                    + self._delta * self._cauchy_middle(z0))
            bracket = w_pv - sgn * 1j * np.pi * logr0 / sqrt_plus
        else:
            logrs0 = complex(np.conj(self._weight.log_r(np.array([-y])))[0])
            pv_lower = self._pv_cut_integral(-y, upper=False)
            w_pv = (-self._cauchy_upper(z0) + pv_lower
                    + self._delta * self._cauchy_middle(z0))
            bracket = w_pv + sgn * 1j * np.pi * logrs0 / sqrt_plus
        return complex(np.exp(sgn * sqrt_plus * bracket / (2j * np.pi)))

    def _phi_infty_quadrature(self) -> float:
        """phi_infty from the large-radius limit of f along a diagonal ray.

        The exponent of f tends to i*phi_infty with a 1/R tail; three radii
        and a Neville sweep remove the first two orders.  The growing mode
        in the exponent cancels only through the quadrature value of Delta,
        so this doubles as a consistency check between the Delta and Cauchy
        quadratures.
        """
        direction = np.exp(0.25j * np.pi)
        vals = []
        for rr in (200.0, 400.0, 800.0):
            z = rr * direction
            expo = complex(self.curve.sqrt_R(z)) \
                * self._f_exponent_bracket(z) / (2j * np.pi)
            vals.append(np.real(expo / 1j))
        for k in range(1, 3):
            fac = 2.0 ** k
            vals = [(fac * vals[i + 1] - vals[i]) / (fac - 1.0)
                    for i in range(len(vals) - 1)]
        return float(vals[0])

    # -------------------------------------------------- Abel map

    def _u_integrand(self, zeta):
        return 1.0 / self.curve.sqrt_R(zeta)

    def _abel_norm(self) -> complex:
        return 1j * self.s / (4.0 * self._K)

    def _abel_anchor(self, sigma: float) -> complex:
        """Raw integral of 1/sqrt(R) from infinity to the real-axis anchor."""
        if sigma in self._anchor_cache:
            return self._anchor_cache[sigma]
        anchor = complex(sigma * 3.0 * self.a2, 0.0)

        def far(t):
            t = np.asarray(t)
            zeta = anchor / t
            return self._u_integrand(zeta) * (-anchor / (t * t))

        val = -_quad_line(far, 1.0, 0.0, self._pn)
        self._anchor_cache[sigma] = val
        return val

    def _ray_distance(self, z: complex) -> float:
        """Distance from the outgoing ray {lam*z, lam >= 1} to the branch points."""
        d = math.inf
        zz = abs(z) ** 2
        for b in self.curve.branch_points:
            lam = max(1.0, float(np.real(b * np.conj(z))) / zz)
            d = min(d, abs(lam * z - b))
        return d

    def abel_u(self, z: complex, sheet: int = 1) -> complex:
        """Abel map based at the infinity point of the first sheet.

        Normalized so the cycle through the middle gap has period one.  The
        second-sheet value is the reflection through the top branch point,
        whose Abel image is cached at construction: the involution fixes
        the branch points, so u(z on sheet 2) = 2*u(top) - u(z on sheet 1).
        """
        z = complex(z)
        if sheet not in (1, 2):
            raise ValueError("sheet must be 1 or 2")
        if abs(z - 1j * self.a2) < _BRANCH_POINT_TOL:
            u1 = self._u_top
        elif self.curve.near_branch_point(z):
            raise ValueError("evaluate the Abel map off the lower branch "
                             "points; only the top one is special-cased")
        else:
            u1 = self._abel_sheet1(z)
        if sheet == 1:
            return u1
        return 2.0 * self._u_top - u1

    def _abel_sheet1(self, z: complex) -> complex:
        z = complex(z)
        if z.real == 0.0 and abs(z.imag) <= self.a2:
            raise ValueError(f"{z} lies on the jump contour; use u_boundary")
        norm = self._abel_norm()
        if abs(z) > 0.5 * self.a1 and self._ray_distance(z) > 0.35 * self.a1:
            def far(t):
                t = np.asarray(t)
                zeta = z / t
                return self._u_integrand(zeta) * (-z / (t * t))

            return norm * (-_quad_line(far, 1.0, 0.0, self._pn))
        sigma = float(np.sign(z.real)) if z.real != 0.0 else 1.0
        anchor = complex(sigma * 3.0 * self.a2, 0.0)
        w2 = complex(sigma * 3.0 * self.a2, z.imag)
        val = self._abel_anchor(sigma)
        val += _quad_line(self._u_integrand, anchor, w2, self._pn)
        val += _quad_line_graded(self._u_integrand, w2, z)
        return norm * val

    def _abel_top(self) -> complex:
        """Abel image of the top branch point (right-limit path class)."""
        anchor = complex(3.0 * self.a2, 0.0)
        w1 = complex(3.0 * self.a2, self.a2)
        val = self._abel_anchor(1.0)
        val += _quad_line(self._u_integrand, anchor, w1, self._pn)
        val += -_quad_sqrt_leg(self._u_integrand, 1j * self.a2, w1, self._pn)
        return self._abel_norm() * val

    def abel_alpha_cycle(self, *, n: int = 240) -> complex:
        """Direct quadrature of the normalizing cycle (should equal 1).

        The cycle crosses both cuts through the middle gap; in the plane
        that is twice the downward gap integral of the normalized
        differential, since sqrt(R) flips sign between the two crossings.
        """
        a1, a2 = self.a1, self.a2
        x, w = _gauss(n)
        phi = 0.5 * np.pi * x
        wphi = 0.5 * np.pi * w
        den = np.sqrt(a2 * a2 - (a1 * np.sin(phi)) ** 2)
        gap_up = 1j * np.sum(wphi / den)
        return complex(2.0 * self._abel_norm() * (-gap_up))

    def u_boundary(self, y: float, side: str, sheet: int = 1) -> complex:
        if side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        direction = -1.0 if side == "+" else 1.0
        return _one_sided(lambda z: self.abel_u(z, sheet), 1j * y, direction,
                          h0=self._offset_h0(1j * y), levels=6)

    # -------------------------------------------------- model matrix

    def phi_quartic(self, z: complex) -> complex:
        """Fourth root ((z+ia1)(z-ia2)/((z+ia2)(z-ia1)))^(1/4), cut on the cuts.

        Built from two principal logs of Moebius ratios: each ratio maps
        exactly its segment onto the negative real axis (the segment is
        where the two reference points are seen in opposite directions), so
        each principal log cuts precisely along its segment and the product
        tends to 1 at infinity.
        """
        z = complex(z)
        a1, a2 = self.a1, self.a2
        upper = np.log((z - 1j * a2) / (z - 1j * a1))
        lower = np.log((z + 1j * a1) / (z + 1j * a2))
        return complex(np.exp(0.25 * (upper + lower)))

    def epsilon_phase(self, x: float) -> complex:
        """theta-argument shift epsilon = (x*Omega - i*Delta)/(2*pi)."""
        return (x * self._Omega - 1j * self._delta) / (2.0 * np.pi)

    def model_X(self, z: complex, x: float) -> np.ndarray:
        """Theta-quotient solution of the constant-jump model problem.

        Entries combine the Abel map on both sheets, the quartic root, and
        theta quotients shifted by epsilon(x); normalized to the identity
        at infinity.  Branch points are genuinely fourth-root singular and
        are reported as errors instead of being evaluated.
        """
        z = complex(z)
        if self.curve.near_branch_point(z):
            raise ValueError("model matrix has fourth-root singularities at "
                             "the branch points; evaluate off them")
        if z.real == 0.0 and abs(z.imag) <= self.a2:
            raise ValueError(f"{z} lies on the jump contour; offset it")
        tau = self._tau
        eps = self.epsilon_phase(x)
        u1 = self.abel_u(z, 1)
        c2 = self._u_top
        phi = self.phi_quartic(z)
        p = phi + 1.0 / phi
        q = phi - 1.0 / phi
        pref = theta3(0.0, tau) / (2.0 * theta3(eps, tau))

        def ratio(a):
            return theta3(a - eps, tau) / theta3(a, tau)

        return np.array([
            [pref * ratio(u1) * p,
             -1j * pref * ratio(2.0 * c2 - u1) * q],
            [1j * pref * ratio(u1 - 2.0 * c2) * q,
             pref * ratio(-u1) * p],
        ])

    def model_X_boundary(self, y: float, x: float, side: str) -> np.ndarray:
        if side not in ("+", "-"):
            raise ValueError("side must be '+' or '-'")
        direction = -1.0 if side == "+" else 1.0
        return _one_sided(lambda z: self.model_X(z, x), 1j * y, direction,
                          h0=self._offset_h0(1j * y), levels=6)

    # -------------------------------------------------- profile closed forms

    def _pin_x0(self):
        """Profile center from the cut integral, pinned by theta/dn agreement.

        The closed formula is T/pi - K/s with T the magnitude integral of
        log r against the cut measure; its sign hinges on which side the
        one-sided root is taken from, and the two choices give mirror-image
        profiles.  Both candidates are therefore tested against the
        theta-quotient form (which comes straight from the model matrix)
        and the agreeing one is returned together with its residual.
        """
        a1, a2 = self.a1, self.a2
        weight = self._weight

        def integrand(sig):
            y = a1 + (a2 - a1) * np.sin(0.5 * sig) ** 2
            q = np.sqrt((y + a1) * (y + a2))
            return np.real(weight.log_r_sigma(sig)) / q

        t_mag = float(np.real(_quad_graded(
            integrand, 0.0, np.pi, special=(0.0, np.pi),
            n=self._n, min_width=self._minw)))
        base = t_mag / np.pi
        cands = (base - self._K / self.s, -base - self._K / self.s)
        xs = np.linspace(-9.7, -1.3, 11)
        theta_vals = np.array([self._theta_quotient(float(x)) for x in xs])

        def mismatch(x0):
            dn_vals = self.s * jacobi_dn(self.s * (xs - x0), self._m)
            return float(np.max(np.abs(theta_vals - dn_vals)))

        errs = [mismatch(c) for c in cands]
        pick = int(np.argmin(errs))
        if errs[pick] > 1e-8 * self.s:
            raise RuntimeError(
                "neither sign of the x0 closed form reproduces the theta "
                f"profile (residuals {errs[0]:.3e}, {errs[1]:.3e}); the "
                "phase constants are inconsistent")
        return cands[pick], errs[pick]

    def _theta_quotient(self, x: float) -> complex:
        tau = self._tau
        w = (self._Omega * x - 1j * self._delta) / (2.0 * np.pi)
        return ((self.a2 - self.a1) * theta3(0.0, tau) / theta3(0.5, tau)
                * theta3(0.5 + w, tau) / theta3(w, tau))

    def _prefactor(self, x):
        gph = self.params.g_infty * np.asarray(x, dtype=float) \
            + self.params.phi_infty
        return -1j * np.exp(2j * gph)

    def psi0_theta(self, x):
        """Theta-quotient closed form of the left-tail profile."""
        x = np.asarray(x, dtype=float)
        quot = np.array([self._theta_quotient(float(xx))
                         for xx in np.atleast_1d(x)])
        out = self._prefactor(np.atleast_1d(x)) * quot
        return out if x.ndim else complex(out[0])

    def psi0_dn(self, x):
        """Jacobi-dn closed form; identical to psi0_theta by construction."""
        x = np.asarray(x, dtype=float)
        env = self.s * jacobi_dn(self.s * (x - self.params.x0), self._m)
        out = self._prefactor(x) * env
        return out if x.ndim else complex(out)

    def envelope(self, x):
        """|psi0| from the dn form (values in [alpha2-alpha1, alpha1+alpha2])."""
        x = np.asarray(x, dtype=float)
        return self.s * jacobi_dn(self.s * (x - self.params.x0), self._m)

    def profile_rows(self, x):
        """CSV-ready rows (x, Re psi0, Im psi0, |psi0|) from the dn form."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        psi = np.atleast_1d(self.psi0_dn(x))
        return np.column_stack([x, psi.real, psi.imag, np.abs(psi)])
