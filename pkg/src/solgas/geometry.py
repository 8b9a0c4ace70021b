"""Spectral domain geometry: the ellipse, its Schwarz-function jump, the
density, and quadrature/sampling rules used by every downstream solver.

The domain is an ellipse in the upper half-plane with both foci on the
positive imaginary axis (at i*alpha1 and i*alpha2) and half focal-distance-sum
rho.  All solvers parametrize it through the unit disk,

    z(r, phi) = semi_minor * r * cos(phi) + i*(y0 + rho * r * sin(phi)),

which maps area measure to r dr dphi times the constant Jacobian
semi_minor * rho.  Keeping one parametrization everywhere means the
quadrature rule, the low-discrepancy sampler and the area formulas are
consistent by construction instead of by separate derivations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.polynomial import polynomial as P

__all__ = [
    "EllipseDomain",
    "SolitonDensity",
    "QuadratureRule2D",
    "quadrature_2d",
    "sample_uniform",
    "sample_uniform_paired",
    "segment_grid",
    "schwarz_delta",
    "cut_function_r",
]


class EllipseDomain:
    """Ellipse with foci i*alpha1, i*alpha2 and focal-distance sum 2*rho.

    Validates at construction that the foci sit on the positive imaginary
    axis in the right order, that the ellipse is nondegenerate (rho exceeds
    the half focal separation) and that it stays strictly inside the upper
    half-plane (y0 - rho > 0); every formula in the package assumes all
    three.
    """

    def __init__(self, alpha1: float, alpha2: float, rho: float):
        alpha1, alpha2, rho = float(alpha1), float(alpha2), float(rho)
        if not (alpha2 > alpha1 > 0.0):
            raise ValueError(
                f"foci must satisfy alpha2 > alpha1 > 0, got ({alpha1}, {alpha2})")
        c = 0.5 * (alpha2 - alpha1)
        y0 = 0.5 * (alpha2 + alpha1)
        if not (rho > c):
            raise ValueError(
                f"rho={rho} must exceed half focal separation c={c} "
                "(degenerate ellipse)")
        if not (y0 - rho > 0.0):
            raise ValueError(
                f"ellipse dips below the real axis: y0 - rho = {y0 - rho}")
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.rho = rho
        self.half_focal = c          # c: half distance between the foci
        self.center_height = y0      # y0: imaginary part of the center
        self.semi_minor = float(np.sqrt(rho * rho - c * c))
        self.area = float(np.pi * rho * self.semi_minor)

    def __repr__(self):
        return (f"EllipseDomain(alpha1={self.alpha1}, alpha2={self.alpha2}, "
                f"rho={self.rho})")

    def contains(self, z) -> bool | np.ndarray:
        """Strict interior test: |z - i a1| + |z - i a2| < 2 rho."""
        z = np.asarray(z, dtype=complex)
        d = (np.abs(z - 1j * self.alpha1) + np.abs(z - 1j * self.alpha2))
        out = d < 2.0 * self.rho
        return bool(out) if out.ndim == 0 else out

    def disk_coords(self, z):
        """Inverse parametrization: (r, phi) in the unit disk for given z."""
        z = np.asarray(z, dtype=complex)
        xr = z.real / self.semi_minor
        yr = (z.imag - self.center_height) / self.rho
        return np.hypot(xr, yr), np.arctan2(yr, xr)


class SolitonDensity:
    """Density beta as a polynomial in z with complex coefficients.

    Entire by construction, hence analytic across the focal segment I as the
    asymptotic formulas require.  Besides plain evaluation the class exposes
    the Schwartz-reflected partner beta*(z) := conj(beta(conj z)), which is
    the object that actually appears in the kernels (it is again a
    polynomial, with conjugated coefficients).
    """

    def __init__(self, coefficients=(1.0,)):
        coeff = np.atleast_1d(np.asarray(coefficients, dtype=complex))
        if coeff.ndim != 1 or coeff.size == 0:
            raise ValueError("density needs a nonempty 1-D coefficient list")
        self.coefficients = coeff

    @classmethod
    def constant(cls, value=1.0):
        return cls([complex(value)])

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.coefficients == 0.0))

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.coefficients[1:] == 0.0))

    def __call__(self, z):
        return P.polyval(np.asarray(z, dtype=complex), self.coefficients)

    def star(self, z):
        """beta*(z) = conj(beta(conj z)), exact by conjugating coefficients."""
        return P.polyval(np.asarray(z, dtype=complex),
                         np.conj(self.coefficients))

    def __repr__(self):
        return f"SolitonDensity({list(self.coefficients)})"


@dataclass(frozen=True)
class QuadratureRule2D:
    """Planar quadrature on the ellipse: sum_j weights[j] f(nodes[j]) ~ integral f dA."""
    nodes: np.ndarray
    weights: np.ndarray
    n_radial: int
    n_angular: int
    domain: EllipseDomain = field(repr=False, compare=False, default=None)

    def integrate(self, values):
        return np.sum(np.asarray(values) * self.weights)


def quadrature_2d(domain: EllipseDomain, n_radial: int,
                  n_angular: int) -> QuadratureRule2D:
    """Tensor Gauss-Legendre rule on the ellipse through the disk map.

    Gauss-Legendre in both r in (0,1) and phi in (0, 2pi); the radial factor
    absorbs the Jacobian r, the constant semi_minor*rho scales weights so
    they sum to the area exactly (up to rounding).  Nodes are strictly
    interior because Gauss nodes avoid the interval endpoints.
    """
    n_radial, n_angular = int(n_radial), int(n_angular)
    if n_radial < 1 or n_angular < 1:
        raise ValueError(f"quadrature orders must be >= 1, got "
                         f"({n_radial}, {n_angular})")
    xr, wr = leggauss(n_radial)
    r = 0.5 * (xr + 1.0)
    wr = 0.5 * wr
    xp, wp = leggauss(n_angular)
    phi = np.pi * (xp + 1.0)
    wp = np.pi * wp
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    wts = np.outer(wr * r, wp) * domain.semi_minor * domain.rho
    nodes = (domain.semi_minor * rr * np.cos(pp)
             + 1j * (domain.center_height + domain.rho * rr * np.sin(pp)))
    rule = QuadratureRule2D(nodes=nodes.ravel(), weights=wts.ravel(),
                            n_radial=n_radial, n_angular=n_angular,
                            domain=domain)
    _validate_rule(rule, domain)
    return rule


def _validate_rule(rule: QuadratureRule2D, domain: EllipseDomain):
    wsum = float(np.sum(rule.weights))
    if abs(wsum - domain.area) > 1e-12 * domain.area:
        raise AssertionError(
            f"quadrature weight sum {wsum!r} != area {domain.area!r}")
    if np.any(rule.weights <= 0.0):
        raise AssertionError("quadrature produced non-positive weights")
    if not np.all(domain.contains(rule.nodes)):
        raise AssertionError("quadrature node escaped the domain")


def sample_uniform_paired(domain: EllipseDomain, n: int):
    """Deterministic area-uniform sample, exactly closed under z -> -conj(z).

    Equal-area concentric rings in the disk parametrization (ring count
    ~sqrt(n)), each ring holding an equally spaced angular orbit whose offset
    alternates ring to ring so the points do not align radially.  Offsets are
    chosen so each ring is setwise invariant under phi -> pi - phi; the
    returned ``pair`` index array realizes that involution bitwise:
    z[pair[j]] == -conj(z[j]) with no rounding slack.  The exact symmetry is
    what lets the t = 0 solvers factor their linear algebra, so it is an
    interface guarantee, not an implementation accident.

    n == 1 returns the centroid.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    n_rings = max(1, int(round(np.sqrt(n))))
    bounds = [int(round(n * i / n_rings)) for i in range(n_rings + 1)]
    z = np.empty(n, complex)
    pair = np.empty(n, int)
    n_even = n_odd = 0
    for i in range(n_rings):
        s0, s1 = bounds[i], bounds[i + 1]
        m = s1 - s0
        if m == 0:
            continue
        u_mid = 0.5 * (s0 + s1) / n       # midpoint of this equal-area band in u = r^2
        r = 0.0 if (i == 0 and m == 1) else float(np.sqrt(u_mid))
        if m % 2 == 0:
            delta = (0.0, 0.5)[n_even % 2]
            half = m // 2
            mirror = lambda j: (half - j - (1 if delta else 0)) % m
            n_even += 1
        else:
            delta = (0.25, 0.75)[n_odd % 2]
            base = (m - 1) // 2 if delta == 0.25 else (m - 3) // 2
            mirror = lambda j: (base - j) % m
            n_odd += 1
        for j in range(m):
            k = mirror(j)
            if j < k:
                continue
            phi = 2.0 * np.pi * (j + delta) / m
            cx, sy = np.cos(phi), np.sin(phi)
            if j == k:
                cx = 0.0  # self-paired point sits exactly on the imaginary axis
            zj = (domain.semi_minor * r * cx
                  + 1j * (domain.center_height + domain.rho * r * sy))
            z[s0 + j] = zj
            pair[s0 + j] = s0 + k
            if j != k:
                z[s0 + k] = -np.conj(zj)
                pair[s0 + k] = s0 + j
    return z, pair


def sample_uniform(domain: EllipseDomain, n: int) -> np.ndarray:
    """Deterministic low-discrepancy sample of n points, area-uniform in D."""
    z, _ = sample_uniform_paired(domain, n)
    return z


def segment_grid(domain: EllipseDomain, m: int):
    """Midpoint grid on the focal segment y in [alpha1, alpha2], m cells.

    Cell edges follow y = alpha1 + (alpha2 - alpha1) sin^2(s/2) on a uniform
    s-grid, concentrating points near both endpoints where the cut function
    vanishes like a square root; the midpoint rule on this grid converges at
    the smooth-integrand rate.  Returns (y_mid, cell_lengths).
    """
    m = int(m)
    if m < 2:
        raise ValueError(f"segment grid needs at least 2 cells, got {m}")
    s_edges = np.pi * np.arange(m + 1) / m
    y_edges = domain.alpha1 + (domain.alpha2 - domain.alpha1) * np.sin(0.5 * s_edges) ** 2
    s_mid = 0.5 * (s_edges[:-1] + s_edges[1:])
    y_mid = domain.alpha1 + (domain.alpha2 - domain.alpha1) * np.sin(0.5 * s_mid) ** 2
    return y_mid, np.diff(y_edges)


def schwarz_delta_scale(domain: EllipseDomain) -> float:
    """The constant -delta S(iy) / sqrt((y-alpha1)(alpha2-y)) > 0.

    The Schwarz-function jump across the focal segment factors exactly into
    this constant times the square-root vanishing profile (left "+"
    convention); exposing the constant lets callers take logs of the jump
    without underflowing the square-root factor near the foci.
    """
    return 4.0 * domain.rho * domain.semi_minor / domain.half_focal ** 2


def schwarz_delta(domain: EllipseDomain, y, plus_side: str = "left"):
    """Jump of the ellipse's Schwarz function across the focal segment, at iy.

    delta S(iy) = (4 rho / c^2) * semi_minor * Stilde_plus(iy), where
    Stilde(z) = sqrt((z - i alpha1)(z - i alpha2)) is cut along the segment
    and behaves like z at infinity.  Which boundary value is called "+" is a
    pure convention; the default takes the limit from Re z < 0, which makes
    delta S negative real on the open segment, and ``plus_side="right"``
    flips the sign.  Vanishes like |y - alpha_j|^(1/2) at both foci.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < domain.alpha1) or np.any(y > domain.alpha2):
        raise ValueError(
            f"schwarz_delta needs y in [{domain.alpha1}, {domain.alpha2}]")
    if plus_side not in ("left", "right"):
        raise ValueError(f"plus_side must be 'left' or 'right', got {plus_side!r}")
    root = np.sqrt((y - domain.alpha1) * (domain.alpha2 - y))
    sign = -1.0 if plus_side == "left" else 1.0
    out = (sign * schwarz_delta_scale(domain)) * root + 0.0j
    return complex(out) if out.ndim == 0 else out


def cut_function_r(domain: EllipseDomain, beta: SolitonDensity, y,
                   plus_side: str = "left"):
    """Cut function r(iy) = delta S(iy) * beta(iy)^2 on the focal segment.

    The lower-segment partner r* follows by conjugation symmetry and is not
    tabulated separately.  The ratio r(iy)/sqrt((y-alpha1)(alpha2-y)) stays
    bounded away from 0 and infinity whenever beta has no zero on the
    segment.
    """
    y = np.asarray(y, dtype=float)
    b = beta(1j * y)
    return schwarz_delta(domain, y, plus_side=plus_side) * b * b
