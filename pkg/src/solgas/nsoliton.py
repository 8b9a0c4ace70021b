"""Exact N-soliton machinery: spectral data, the Hermitian kernel matrix,
log tau determinants, field reconstruction, and the Gram/residue check.

Two condensation routes generate spectral data from the same ellipse:

  * ``condense_2d``     -- N points area-uniform in the ellipse, constants
                           proportional to beta^2 (the genuine 2-D gas);
  * ``condense_segment``-- M points on the focal segment with constants from
                           the cut function r (the "shielded" effective gas).

Both feed the same solvers.  Determinants and the reconstruction linear
system are evaluated either in plain float64 or, when the phase spread makes
the matrices exponentially graded, in compensated double-double arithmetic
(see ddarith.py).  The crossover is the peak exponent mu of the kernel
entries: float64 loses roughly e^mu * 1e-17 of relative accuracy, so beyond
``DOUBLE_PRECISION_EXPONENT`` the dd engine takes over.

At t = 0 both condensation routes produce point sets exactly closed under
z -> -conj(z) with matching real constants; then conj(Phi) = P Phi P for the
pairing permutation P, and the 2N x 2N reconstruction system factors into two
N x N solves (and tau into |det(I + i P Phi)|^2).  That factorization is an
exact algebraic identity, not an approximation, and it quarters the dd cost;
the solvers use it whenever the premises verifiably hold and fall back to the
assembled 2N x 2N system otherwise.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import ddarith as dd
from .geometry import (EllipseDomain, SolitonDensity, cut_function_r,
                       sample_uniform_paired, segment_grid)

__all__ = [
    "SolitonRangeError",
    "SpectralData",
    "PhiMatrix",
    "theta_phase",
    "exponent_extent",
    "peak_exponent",
    "condense_2d",
    "condense_segment",
    "phi_matrix",
    "log_tau_n",
    "psi_n",
    "psi_and_log_tau",
    "gram_residue_check",
    "DEFAULT_EXPONENT_BUDGET",
    "DOUBLE_PRECISION_EXPONENT",
]

# Entry exponents above this budget would push |Phi| products toward the
# float64 overflow threshold e^709 (dd shares float64's exponent range, so it
# cannot help); refuse loudly instead of returning infinities.
DEFAULT_EXPONENT_BUDGET = 600.0

# Calibrated float64/dd crossover: measured relative error of the float64
# determinant route grows like e^mu * 1e-17, so mu = 22 keeps it near 1e-7.
DOUBLE_PRECISION_EXPONENT = 22.0

# Above this size the eigenvalue log-tau route gives way to LU.
_EIG_MAX_N = 512


class SolitonRangeError(ValueError):
    """(x, t) pushes kernel exponents past the representable budget."""


@dataclass(frozen=True)
class SpectralData:
    """Point spectrum and norming constants (z_j, c_j) of an N-soliton.

    ``pair`` (optional) is a permutation with z[pair[j]] == -conj(z[j]) and
    c[pair[j]] == c[j] exactly; solvers use it to factor the t = 0 linear
    algebra.  It is dropped silently whenever the closure cannot be
    guaranteed bitwise.
    """
    z: np.ndarray
    c: np.ndarray
    pair: np.ndarray | None = None
    source: str = "explicit"

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        c = np.atleast_1d(np.asarray(self.c, dtype=complex))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "c", c)
        if z.shape != c.shape or z.ndim != 1:
            raise ValueError("z and c must be 1-D arrays of equal length")
        if z.size:
            if np.any(z.imag <= 0.0):
                raise ValueError("all spectral points need Im z > 0")
            if np.any(c == 0.0):
                raise ValueError("norming constants must be nonzero")
            if len(np.unique(z)) != z.size:
                raise ValueError("spectral points must be distinct")
        if self.pair is not None:
            pair = np.asarray(self.pair, dtype=int)
            object.__setattr__(self, "pair", pair)
            ok = (pair.shape == z.shape
                  and np.array_equal(pair[pair], np.arange(z.size))
                  and np.array_equal(z[pair], -np.conj(z))
                  and np.array_equal(c[pair], c))
            if not ok:
                object.__setattr__(self, "pair", None)

    @property
    def n(self) -> int:
        return int(self.z.size)

    def dump(self, path):
        """Plain-text table, one line per pair: Re z, Im z, Re c, Im c."""
        table = np.column_stack([self.z.real, self.z.imag,
                                 self.c.real, self.c.imag])
        header = f"spectral data ({self.source}): re_z im_z re_c im_c"
        np.savetxt(path, table, fmt="%.17e", header=header)

    @classmethod
    def load(cls, path) -> "SpectralData":
        table = np.atleast_2d(np.loadtxt(path))
        if table.size == 0:
            return cls(z=np.empty(0, complex), c=np.empty(0, complex),
                       source=str(path))
        if table.shape[1] != 4:
            raise ValueError(
                f"expected 4 columns (re_z im_z re_c im_c), got {table.shape[1]}")
        return cls(z=table[:, 0] + 1j * table[:, 1],
                   c=table[:, 2] + 1j * table[:, 3], source=str(path))


class PhiMatrix(NamedTuple):
    """Kernel matrix with its evaluation point, for inspection and tests."""
    matrix: np.ndarray
    x: float
    t: float


def theta_phase(z, x: float, t: float):
    """Dispersion phase theta(z; x, t) = i (z^2 t + z x)."""
    z = np.asarray(z, dtype=complex)
    out = 1j * (z * z * t + z * x)
    return complex(out) if out.ndim == 0 else out


def exponent_extent(spec: SpectralData, x: float, t: float) -> float:
    """Worst-case natural-log magnitude of kernel entries at (x, t)."""
    if spec.n == 0:
        return 0.0
    return float(np.max(2.0 * abs(x) * spec.z.imag
                        + 2.0 * abs(t) * np.abs((spec.z ** 2).imag)))


def peak_exponent(spec: SpectralData, x: float, t: float) -> float:
    """Actual peak entry exponent mu >= 0; drives the precision dispatch."""
    if spec.n == 0:
        return 0.0
    mu = np.max(-2.0 * x * spec.z.imag - 2.0 * t * (spec.z ** 2).imag)
    return float(max(mu, 0.0))


def _check_budget(spec: SpectralData, x: float, t: float, budget: float):
    extent = exponent_extent(spec, x, t)
    if extent > budget:
        raise SolitonRangeError(
            f"kernel exponent extent {extent:.1f} exceeds budget {budget:.1f} "
            f"at (x, t) = ({x}, {t}); shrink |x|, |t| or the spectrum")


# ---------------------------------------------------------------------------
# condensation
# ---------------------------------------------------------------------------

def condense_2d(domain: EllipseDomain, beta: SolitonDensity,
                n: int) -> SpectralData:
    """N-soliton data condensing the 2-D gas: c_j = (A / (pi N)) beta(z_j)^2.

    Sample points come from the deterministic area-uniform sampler; points
    where beta vanishes carry no soliton and are dropped (the returned size
    reflects the retained count).  The symmetric pairing survives only if the
    dropped set is itself symmetric and the constants are exactly real.
    """
    z, pair = sample_uniform_paired(domain, n)
    b = beta(z)
    c = (domain.area / (np.pi * n)) * b * b
    keep = c != 0.0
    if not np.any(keep):
        raise ValueError("density vanishes on every sample point: "
                         "no solitons to condense")
    new_pair = None
    if np.array_equal(keep[pair], keep):
        renum = -np.ones(n, dtype=int)
        renum[keep] = np.arange(int(keep.sum()))
        new_pair = renum[pair[keep]]
    return SpectralData(z=z[keep], c=c[keep], pair=new_pair,
                        source=f"condense_2d(N={n})")


def condense_segment(domain: EllipseDomain, beta: SolitonDensity, m: int,
                     plus_side: str = "left") -> SpectralData:
    """Effective soliton data on the focal segment ("shielding" condensate).

    Grid nodes w_j = i y_j sit strictly inside the segment; constants follow
    the Cauchy-transform weight c_j = r(w_j) dw_j / (2 pi i) with
    dw_j = i * (cell length), i.e. c_j = r(w_j) * length_j / (2 pi).  With the
    default "+ from the left" convention the constants come out negative
    real; flipping the convention flips every c_j, which changes psi only by
    a global sign and leaves |psi| and log tau untouched (asserted in the
    test suite).
    """
    y_mid, lengths = segment_grid(domain, m)
    r_vals = cut_function_r(domain, beta, y_mid, plus_side=plus_side)
    c = r_vals * lengths / (2.0 * np.pi)
    keep = c != 0.0
    if not np.any(keep):
        raise ValueError("cut function vanishes identically on the segment "
                         "(density is zero there)")
    z = 1j * y_mid[keep]
    c = c[keep]
    pair = np.arange(z.size) if np.all(c.imag == 0.0) else None
    return SpectralData(z=z, c=c, pair=pair,
                        source=f"condense_segment(M={m})")


# ---------------------------------------------------------------------------
# kernel assembly
# ---------------------------------------------------------------------------

def _root_constants(c: np.ndarray) -> np.ndarray:
    """One fixed principal square root per constant, reused everywhere."""
    return np.sqrt(np.asarray(c, dtype=complex))


def _assemble_double(spec: SpectralData, x: float, t: float,
                     root_signs=None):
    """(s, Phi) in float64: s_j = sqrt(c_j) e^theta_j, Phi the kernel."""
    z, c = spec.z, spec.c
    s = _root_constants(c) * np.exp(theta_phase(z, x, t))
    if root_signs is not None:
        s = s * np.asarray(root_signs)
    num = np.outer(s, np.conj(s))
    den = 1j * (z[:, None] - np.conj(z)[None, :])
    return s, num / den


def _sqrt_c_cdd(c: np.ndarray):
    """Square roots of the constants as a cdd vector.

    Real constants get the full dd square root.  Complex constants fall back
    to the float64 root lifted into dd: the resulting per-entry error is an
    exact diagonal rescaling of the data (c_j -> c_j (1 + O(1e-16))), which
    perturbs soliton positions at the 1e-16 level but cannot disturb the
    determinant cancellations the dd engine exists to protect.
    """
    c = np.asarray(c, dtype=complex)
    zeros = np.zeros(c.shape)
    if np.all(c.imag == 0.0):
        mag_h, mag_l = dd.dd_sqrt(np.abs(c.real), zeros)
        neg = c.real < 0.0
        re_h = np.where(neg, 0.0, mag_h)
        re_l = np.where(neg, 0.0, mag_l)
        im_h = np.where(neg, mag_h, 0.0)
        im_l = np.where(neg, mag_l, 0.0)
        return (re_h, re_l, im_h, im_l)
    return dd.cdd(np.sqrt(c))


def _assemble_dd(spec: SpectralData, x: float, t: float):
    """s_j, conj(s_j) and Phi fully in dd precision.

    Every arithmetic step from theta onward runs in dd: unstructured
    float64 rounding on individual kernel entries of size e^mu would inject
    absolute noise ~e^mu * 1e-16 that the determinant cancellation then
    amplifies, which is precisely the failure mode being avoided.
    """
    z, c = spec.z, spec.c
    zc = dd.cdd(z)
    z2 = dd.cdd_mul(zc, zc)
    tt = dd.cdd(np.full(len(z), complex(t)))
    xx = dd.cdd(np.full(len(z), complex(x)))
    th = dd.cdd_add(dd.cdd_mul(z2, tt), dd.cdd_mul(zc, xx))
    itheta = (-th[2], -th[3], th[0], th[1])         # multiply by i
    big_e = dd.cdd_exp(itheta)
    s = dd.cdd_mul(_sqrt_c_cdd(c), big_e)
    sbar = dd.cdd_conj(s)
    num = dd.cdd_mul(tuple(a[:, None] for a in s),
                     tuple(a[None, :] for a in sbar))
    # denominator i (z_j - conj z_k): re = -(b_j + b_k), im = a_j - a_k,
    # both exact two_sum splits of plain doubles
    a_, b_ = z.real, z.imag
    im_h, im_l = dd.two_sum(a_[:, None], -a_[None, :])
    re_h, re_l = dd.two_sum(-b_[:, None], -b_[None, :])
    return s, sbar, dd.cdd_div(num, (re_h, re_l, im_h, im_l))


def phi_matrix(spec: SpectralData, x: float, t: float,
               exponent_budget: float = DEFAULT_EXPONENT_BUDGET,
               root_signs=None) -> PhiMatrix:
    """Hermitian negative-semidefinite kernel matrix at (x, t).

    Phi_jk = sqrt(c_j) conj(sqrt(c_k)) e^(theta(z_j) - theta(conj z_k))
             / (i (z_j - conj z_k)).

    ``root_signs`` (entries +-1) flips individual square-root branches; the
    determinant is invariant under any such flip, and a test asserts it.
    """
    _check_budget(spec, x, t, exponent_budget)
    _, phi = _assemble_double(spec, x, t, root_signs=root_signs)
    return PhiMatrix(matrix=phi, x=float(x), t=float(t))


# ---------------------------------------------------------------------------
# solver routes
# ---------------------------------------------------------------------------

def _pair_usable(spec: SpectralData, t: float) -> bool:
    """True when the exact symmetric factorization applies at this t."""
    if spec.pair is None or t != 0.0 or spec.n == 0:
        return False
    c = spec.c
    if np.any(c.imag != 0.0):
        return False
    # mixed-sign constants break sqrt(c) conj(sqrt(c)) = +-c consistency
    return bool(np.all(c.real > 0.0) or np.all(c.real < 0.0))


def _logtau_eig_double(phi: np.ndarray) -> float:
    """log det(I + Phi conj(Phi)) through the PSD spectral factorization.

    With P = -Phi >= 0 and G = P^(1/2), cyclicity gives
    det(I + Phi conj Phi) = prod (1 + sigma_i(G conj G)^2), a manifestly
    nonnegative form.
    """
    lam, vec = np.linalg.eigh(-phi)
    lam = np.clip(lam, 0.0, None)
    g = (vec * np.sqrt(lam)) @ vec.conj().T
    sig = np.linalg.svd(g @ np.conj(g), compute_uv=False)
    return float(np.sum(np.log1p(sig ** 2)))


def _field_double(spec: SpectralData, x: float, t: float):
    """(psi, log tau) in float64; factored when the pairing applies."""
    n = spec.n
    if _pair_usable(spec, t):
        s, phi = _assemble_double(spec, x, t)
        sb = np.conj(s)
        k = phi[spec.pair, :]
        eye = np.eye(n)
        a_plus = eye + 1j * k
        mt = np.linalg.solve(eye - 1j * k, np.linalg.solve(a_plus, sb))
        psi = -2j * np.sum(sb * mt)
        logtau = 2.0 * np.linalg.slogdet(a_plus)[1]
        return complex(psi), float(logtau)
    s, phi = _assemble_double(spec, x, t)
    sb = np.conj(s)
    big = np.eye(2 * n, dtype=complex)
    big[:n, n:] = 1j * phi
    big[n:, :n] = 1j * np.conj(phi)
    rhs = np.concatenate([np.zeros(n, complex), sb])
    sol = np.linalg.solve(big, rhs)
    psi = -2j * np.sum(sb * sol[n:])
    logtau = float(np.linalg.slogdet(big)[1])
    return complex(psi), logtau


def _add_identity_cdd(comp4):
    """I + M for a cdd matrix, adding 1 to the diagonal in dd."""
    re_h, re_l, im_h, im_l = (a.copy() for a in comp4)
    n = re_h.shape[0]
    idx = np.arange(n)
    h, l = dd.two_sum(re_h[idx, idx], np.ones(n))
    l = l + re_l[idx, idx]
    h, l = dd.fast_two_sum(h, l)
    re_h[idx, idx], re_l[idx, idx] = h, l
    return (re_h, re_l, im_h, im_l)


def _field_dd_pair(spec: SpectralData, x: float):
    """(psi, log tau) via the exact symmetric factorization, dd precision.

    With K = P Phi (row permutation), conj(Phi) Phi = K^2, so the 2N system
    splits into (I + iK)(I - iK) m = conj(s) and tau = |det(I + iK)|^2.
    """
    _, sbar, phi = _assemble_dd(spec, x, 0.0)
    k = tuple(a[spec.pair, :] for a in phi)
    ik = (-k[2], -k[3], k[0], k[1])
    a_plus = _add_identity_cdd(ik)
    a_minus = _add_identity_cdd((k[2], k[3], -k[0], -k[1]))
    lu_p, piv_p = dd.cdd_lu(a_plus)
    half = dd.cdd_lu_solve(lu_p, piv_p, sbar)
    lu_m, piv_m = dd.cdd_lu(a_minus)
    mt = dd.cdd_lu_solve(lu_m, piv_m, half)
    psi = -2j * dd.cdd_to_complex(dd.cdd_sum(dd.cdd_mul(sbar, mt)))
    logabs, _ = dd.cdd_lu_logdet(lu_p, piv_p)
    return complex(psi), 2.0 * logabs


def _field_dd_general(spec: SpectralData, x: float, t: float):
    """(psi, log tau) from the assembled 2N x 2N system in dd precision."""
    n = spec.n
    _, sbar, phi = _assemble_dd(spec, x, t)
    big = dd.cdd_zeros((2 * n, 2 * n))
    idx = np.arange(2 * n)
    big[0][idx, idx] = 1.0
    i_phi = (-phi[2], -phi[3], phi[0], phi[1])
    phib = dd.cdd_conj(phi)
    i_phib = (-phib[2], -phib[3], phib[0], phib[1])
    for blk, r0, c0 in ((i_phi, 0, n), (i_phib, n, 0)):
        for dst, src in zip(big, blk):
            dst[r0:r0 + n, c0:c0 + n] = src
    rhs = dd.cdd_zeros(2 * n)
    for dst, src in zip(rhs, sbar):
        dst[n:] = src
    lu, piv = dd.cdd_lu(big)
    sol = dd.cdd_lu_solve(lu, piv, rhs)
    mt = tuple(a[n:] for a in sol)
    psi = -2j * dd.cdd_to_complex(dd.cdd_sum(dd.cdd_mul(sbar, mt)))
    logabs, _ = dd.cdd_lu_logdet(lu, piv)
    return complex(psi), logabs


def _resolve_engine(spec: SpectralData, x: float, t: float,
                    engine: str) -> str:
    if engine not in ("auto", "double", "dd"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine != "auto":
        return engine
    mu = peak_exponent(spec, x, t)
    return "double" if mu <= DOUBLE_PRECISION_EXPONENT else "dd"


def psi_and_log_tau(spec: SpectralData, x: float, t: float,
                    engine: str = "auto",
                    exponent_budget: float = DEFAULT_EXPONENT_BUDGET):
    """Solve the reconstruction system once, returning (psi_N, log tau_N).

    The 2N x 2N residue system [[I, i Phi], [i conj(Phi), I]] [l; m] = [0; s*]
    yields psi_N = -2i sum_j s*_j m_j, and its determinant equals tau_N.
    The engine is chosen from the peak entry exponent unless forced.
    """
    if spec.n == 0:
        return 0j, 0.0
    _check_budget(spec, x, t, exponent_budget)
    engine = _resolve_engine(spec, x, t, engine)
    if engine == "double":
        return _field_double(spec, x, t)
    if _pair_usable(spec, t):
        return _field_dd_pair(spec, x)
    return _field_dd_general(spec, x, t)


def psi_n(spec: SpectralData, x: float, t: float, engine: str = "auto",
          exponent_budget: float = DEFAULT_EXPONENT_BUDGET) -> complex:
    """N-soliton field psi_N(x, t)."""
    psi, _ = psi_and_log_tau(spec, x, t, engine=engine,
                             exponent_budget=exponent_budget)
    return psi


def log_tau_n(spec: SpectralData, x: float, t: float, engine: str = "auto",
              exponent_budget: float = DEFAULT_EXPONENT_BUDGET) -> float:
    """log tau_N(x, t) = log det(I + Phi conj(Phi)) >= 0.

    Small-to-moderate problems in the float64 regime use the eigenvalue
    route, which is nonnegative by construction; large or exponent-heavy
    problems use pivoted LU in the matching precision.  Tiny negative
    rounding residue is clamped to zero.
    """
    if spec.n == 0:
        return 0.0
    _check_budget(spec, x, t, exponent_budget)
    engine = _resolve_engine(spec, x, t, engine)
    if engine == "double" and spec.n <= _EIG_MAX_N:
        _, phi = _assemble_double(spec, x, t)
        val = _logtau_eig_double(phi)
    else:
        _, val = psi_and_log_tau(spec, x, t, engine=engine,
                                 exponent_budget=exponent_budget)
    if val < -1e-6:
        raise RuntimeError(
            f"log tau came out {val:.3e} < 0: determinant route broke down")
    return max(val, 0.0)


# ---------------------------------------------------------------------------
# Gram / residue cross-check
# ---------------------------------------------------------------------------

def gram_residue_check(spec: SpectralData, x: float, t: float,
                       contour_radius: float | None = None,
                       n_nodes: int = 256) -> float:
    """Contour-integral verification of the Gram identity.

    Evaluates the bilinear form
        A~(v_j, v_k) = oint v_j(w) A(w) v_k(w) dw,
        A(w) = sum_l c_l e^(2 theta(w)) / (2 i pi (w - z_l)),
        v_j(w) = conj(sqrt(c_j)) e^(-theta(conj z_j)) / (conj(z_j) - w),
    by trapezoidal quadrature on a circle about the centroid of {z_j}, and
    returns max_jk |A~_jk + (conj(Phi) Phi)_jk| -- zero in exact arithmetic
    by the residue theorem.  The circle must enclose every z_j and exclude
    every conj(z_j) (whose poles belong to the lower contour).
    """
    if spec.n == 0:
        raise ValueError("empty spectrum has no Gram matrix to check")
    z, c = spec.z, spec.c
    centroid = complex(np.mean(z))
    r_pts = float(np.max(np.abs(z - centroid)))
    r_conj = float(np.min(np.abs(np.conj(z) - centroid)))
    if contour_radius is None:
        contour_radius = min(1.25 * r_pts + 0.1 * r_conj, 0.9 * r_conj)
    if contour_radius <= r_pts:
        raise ValueError(
            f"contour radius {contour_radius:.4f} fails to enclose all "
            f"spectral points (need > {r_pts:.4f})")
    if contour_radius >= r_conj:
        raise ValueError(
            f"contour radius {contour_radius:.4f} reaches the conjugate "
            f"poles (need < {r_conj:.4f})")

    phi_nodes = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    w = centroid + contour_radius * np.exp(1j * phi_nodes)
    dw = 1j * (w - centroid) * (2.0 * np.pi / n_nodes)

    roots = _root_constants(c)
    a_w = (np.exp(2.0 * theta_phase(w, x, t))
           * np.sum(c[None, :] / (w[:, None] - z[None, :]), axis=1)
           / (2j * np.pi))
    v = (np.conj(roots)[:, None]
         * np.exp(-theta_phase(np.conj(z), x, t))[:, None]
         / (np.conj(z)[:, None] - w[None, :]))
    gram = np.einsum("jw,w,kw->jk", v, a_w * dw, v)

    _, phi = _assemble_double(spec, x, t)
    target = -(np.conj(phi) @ phi)
    return float(np.max(np.abs(gram - target)))
