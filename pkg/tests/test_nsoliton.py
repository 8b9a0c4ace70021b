"""Exact N-soliton route: data validation, closed-form one-soliton oracle,
an independently assembled two-soliton determinant, condensation weights,
engine agreement across the precision switch, and the budget guard.
"""
import math

import numpy as np
import pytest

from solgas.geometry import EllipseDomain, SolitonDensity
from solgas.nsoliton import (SolitonRangeError, SpectralData, condense_2d,
                             condense_segment, exponent_extent,
                             gram_residue_check, log_tau_n, psi_and_log_tau,
                             psi_n, theta_phase)


def test_spectral_data_validation():
    with pytest.raises(ValueError):
        SpectralData(z=np.array([1.0 - 0.5j]), c=np.array([1.0]))  # Im z < 0
    with pytest.raises(ValueError):
        SpectralData(z=np.array([1j, 1j]), c=np.array([1.0, 2.0]))  # dupes
    with pytest.raises(ValueError):
        SpectralData(z=np.array([1j]), c=np.array([0.0]))  # zero constant
    with pytest.raises(ValueError):
        SpectralData(z=np.array([[1j]]), c=np.array([[1.0]]))  # not 1-D


def test_spectral_data_pair_dropped_when_wrong():
    z = np.array([0.3 + 1.0j, -0.3 + 1.0j])
    c = np.array([1.0 + 0j, 2.0 + 0j])          # c not pair-symmetric
    spec = SpectralData(z=z, c=c, pair=np.array([1, 0]))
    assert spec.pair is None
    spec_ok = SpectralData(z=z, c=np.array([1.5 + 0j, 1.5 + 0j]),
                           pair=np.array([1, 0]))
    assert spec_ok.pair is not None


def test_dump_load_roundtrip(tmp_path):
    z = np.array([0.2 + 0.8j, -0.1 + 1.3j])
    c = np.array([1.0 - 2.0j, 0.5 + 0.25j])
    spec = SpectralData(z=z, c=c)
    path = tmp_path / "spec.txt"
    spec.dump(path)
    back = SpectralData.load(path)
    assert np.max(np.abs(back.z - z)) == 0.0
    assert np.max(np.abs(back.c - c)) == 0.0


def test_theta_phase():
    z = np.array([0.4 + 0.9j])
    x, t = 1.3, -0.7
    assert abs(theta_phase(z, x, t)[0]
               - 1j * (z[0] ** 2 * t + z[0] * x)) < 1e-15


def test_empty_spectrum():
    spec = SpectralData(z=np.empty(0, complex), c=np.empty(0, complex))
    psi, lt = psi_and_log_tau(spec, 0.3, 0.2)
    assert psi == 0j and lt == 0.0


# ----------------------------------------------------------------------
# one-soliton closed form:
#   psi_1(x,t) = 2b exp(-2i(a x + (a^2-b^2) t) + i phi0)
#                  * sech(2b (x - x_peak(t))),  x_peak(t) = x0 - 2 a t
# with x0 = log(|c|/(2b)) / (2b); phi0 is fitted below.
# ----------------------------------------------------------------------

def test_one_soliton_envelope_and_position():
    z0 = 0.4 + 0.9j
    c0 = 1.7 - 0.6j
    a, b = z0.real, z0.imag
    spec = SpectralData(z=np.array([z0]), c=np.array([c0]))
    x0 = math.log(abs(c0) / (2.0 * b)) / (2.0 * b)
    for t in (0.0, 0.3):
        xp = x0 - 2.0 * a * t
        for x in np.linspace(xp - 2.5, xp + 2.5, 21):
            envelope = 2.0 * b / math.cosh(2.0 * b * (x - xp))
            assert abs(abs(psi_n(spec, float(x), t)) - envelope) < 1e-12


def test_one_soliton_phase_structure():
    z0 = -0.25 + 1.1j
    c0 = 0.9 + 0.4j
    a, b = z0.real, z0.imag
    spec = SpectralData(z=np.array([z0]), c=np.array([c0]))
    x0 = math.log(abs(c0) / (2.0 * b)) / (2.0 * b)
    # fit phi0 once at the peak, then the full complex profile must follow
    t1 = 0.2
    xp = x0 - 2.0 * a * t1
    psi_peak = psi_n(spec, xp, t1)
    carrier = np.exp(-2j * (a * xp + (a * a - b * b) * t1))
    phi0 = np.angle(psi_peak / (2.0 * b * carrier))
    for x in np.linspace(xp - 2.0, xp + 2.0, 17):
        pred = (2.0 * b * np.exp(-2j * (a * x + (a * a - b * b) * t1))
                * np.exp(1j * phi0) / np.cosh(2.0 * b * (x - xp)))
        assert abs(psi_n(spec, float(x), t1) - pred) < 1e-12


def test_two_soliton_determinant_oracle():
    """Assemble tau_2 = det(I + Phi conj(Phi)) from scratch and compare."""
    z = np.array([0.3 + 0.8j, -0.5 + 1.2j])
    c = np.array([1.2 - 0.3j, 0.7 + 0.9j])
    x, t = 0.35, -0.15

    theta = 1j * (z ** 2 * t + z * x)
    # Hermitian kernel Phi_jk = sqrt(c_j) conj(sqrt(c_k))
    #                  e^{theta_j + conj(theta_k)} / (z_j - conj(z_k)) / i
    # (the residue system's Cauchy-type Gram matrix)
    root_c = np.sqrt(c)
    num = np.exp(theta[:, None] + np.conj(theta)[None, :])
    phi = (root_c[:, None] * np.conj(root_c)[None, :] * num
           / (1j * (z[:, None] - np.conj(z)[None, :])))
    tau = np.linalg.det(np.eye(2) + phi @ np.conj(phi))
    assert abs(tau.imag) < 1e-12
    spec = SpectralData(z=z, c=c)
    got = log_tau_n(spec, x, t)
    assert abs(got - math.log(tau.real)) < 1e-11


def test_separated_solitons_additive():
    """Far-apart solitons interact exponentially weakly: log tau of the
    pair splits into the sum of one-soliton log taus, and psi into the sum
    of fields.  This pins the multi-soliton assembly against any
    single-soliton convention drift."""
    z = np.array([0.0 + 1.0j, 0.0 + 0.7j])
    # peaks at x = -9 and x = +9 via the norming constants
    c = np.array([2.0 * np.exp(-2.0 * 1.0 * 9.0) + 0j,
                  1.4 * np.exp(+2.0 * 0.7 * 9.0) + 0j])
    pair_spec = SpectralData(z=z, c=c)
    one = [SpectralData(z=z[k:k + 1], c=c[k:k + 1]) for k in (0, 1)]
    # test points keep at most one soliton non-negligible: to the LEFT of a
    # peak the soliton stays excited, so near the left peak the right
    # soliton's tail still contributes the classical interaction shift and
    # additivity genuinely fails there (by design, not by bug)
    for x in (0.0, 9.0, 13.0):
        lt_pair = log_tau_n(pair_spec, x, 0.0)
        lt_sum = sum(log_tau_n(s, x, 0.0) for s in one)
        assert abs(lt_pair - lt_sum) < 1e-5
        psi_pair = psi_n(pair_spec, x, 0.0)
        psi_sum = sum(psi_n(s, x, 0.0) for s in one)
        assert abs(psi_pair - psi_sum) < 1e-5


def test_log_tau_nonnegative_random():
    rng = np.random.default_rng(99)
    z = rng.uniform(-1, 1, 6) + 1j * rng.uniform(0.3, 1.5, 6)
    c = rng.normal(size=6) + 1j * rng.normal(size=6)
    spec = SpectralData(z=z, c=c)
    for x in (-4.0, -1.0, 0.0, 2.5):
        assert log_tau_n(spec, x, 0.4) >= 0.0


def test_condense_2d_weights():
    domain = EllipseDomain(0.5, 1.5, 0.75)
    beta = SolitonDensity([0.3, 0.0, 1.0])
    n = 32
    spec = condense_2d(domain, beta, n)
    from solgas.geometry import sample_uniform_paired
    z, _ = sample_uniform_paired(domain, n)
    b = beta(z)
    expected = (domain.area / (np.pi * n)) * b * b
    keep = expected != 0.0
    assert np.array_equal(spec.z, z[keep])
    assert np.max(np.abs(spec.c - expected[keep])) == 0.0
    assert spec.n == int(np.count_nonzero(keep))


def test_condense_segment_weights(domain, beta):
    spec = condense_segment(domain, beta, 128)
    assert spec.n == 128
    assert np.all(spec.z.real == 0.0)
    assert np.all((spec.z.imag > domain.alpha1)
                  & (spec.z.imag < domain.alpha2))
    # beta == 1: constants are negative real, from the Schwarz-jump weight
    assert np.all(spec.c.real < 0) and np.all(spec.c.imag == 0.0)
    assert spec.pair is not None
    # flipping the +/- side flips every constant; |psi| must not care
    spec_r = condense_segment(domain, beta, 128, plus_side="right")
    assert np.max(np.abs(spec_r.c + spec.c)) < 1e-16
    for x in (-2.0, 0.5):
        assert abs(abs(psi_n(spec, x, 0.0)) - abs(psi_n(spec_r, x, 0.0))) \
            < 1e-10
        assert abs(log_tau_n(spec, x, 0.0) - log_tau_n(spec_r, x, 0.0)) \
            < 1e-10


def test_segment_mass_rule(domain, beta):
    """Total condensed charge approaches -(1/pi) * integral beta^2 dA at
    the midpoint-rule O(M^-2) pace."""
    from solgas.geometry import quadrature_2d
    rule = quadrature_2d(domain, 24, 48)
    bulk = rule.integrate(np.asarray(beta(rule.nodes)) ** 2) / np.pi
    errs = []
    for m in (250, 500, 1000):
        spec = condense_segment(domain, beta, m)
        errs.append(abs(np.sum(spec.c) + bulk))
    assert errs[0] > errs[1] > errs[2]
    # halving the cell size quarters the defect
    assert errs[0] / errs[2] > 10.0
    assert errs[2] < 1e-6


def test_engines_agree_across_switch(domain, beta):
    """The double and dd engines must agree where both are trustworthy."""
    spec = condense_segment(domain, beta, 96)
    x = -7.0          # peak exponent ~21: right at the dispatch boundary
    psi_d, lt_d = psi_and_log_tau(spec, x, 0.0, engine="double")
    psi_q, lt_q = psi_and_log_tau(spec, x, 0.0, engine="dd")
    assert abs(psi_d - psi_q) < 1e-8 * abs(psi_q)
    assert abs(lt_d - lt_q) < 1e-8 * max(lt_q, 1.0)


def test_dd_general_engine_with_time(domain, beta):
    """t != 0 kills the symmetric factorization; the general dd path and
    the double path still have to agree in the overlap."""
    spec = condense_segment(domain, beta, 48)
    x, t = -6.0, 0.5
    psi_d, lt_d = psi_and_log_tau(spec, x, t, engine="double")
    psi_q, lt_q = psi_and_log_tau(spec, x, t, engine="dd")
    assert abs(psi_d - psi_q) < 1e-7 * abs(psi_q)
    assert abs(lt_d - lt_q) < 1e-7 * max(lt_q, 1.0)


def test_budget_guard(domain, beta):
    spec = condense_segment(domain, beta, 32)
    assert exponent_extent(spec, -300.0, 0.0) > 600.0
    with pytest.raises(SolitonRangeError):
        psi_n(spec, -300.0, 0.0)
    with pytest.raises(SolitonRangeError):
        psi_n(spec, -30.0, 0.0, exponent_budget=50.0)
    # a wider budget admits the same point
    psi_n(spec, -30.0, 0.0, exponent_budget=200.0)


def test_gram_residue_check_small():
    rng = np.random.default_rng(20240817)
    z = rng.uniform(-1, 1, 4) + 1j * rng.uniform(0.4, 1.4, 4)
    c = rng.normal(size=4) + 1j * rng.normal(size=4)
    spec = SpectralData(z=z, c=c)
    assert gram_residue_check(spec, 0.3, 0.2) < 1e-6
    with pytest.raises(ValueError):
        gram_residue_check(spec, 0.0, 0.0, contour_radius=1e-3)  # too small
    with pytest.raises(ValueError):
        gram_residue_check(spec, 0.0, 0.0, contour_radius=50.0)  # too big
