"""Domain, sampler, quadrature, and cut-weight tests.

The ellipse moment oracles are closed forms: for the ellipse with center
i(a1+a2)/2, semi-axes (b, a) = (sqrt(rho) * c_f, ... ), area pi * ab, the
centroid integral of z is area * center and the variance integrals follow
from the axis lengths.
"""
import math

import numpy as np
import pytest

from solgas.geometry import (EllipseDomain, SolitonDensity, cut_function_r,
                             quadrature_2d, sample_uniform, sample_uniform_paired,
                             schwarz_delta, schwarz_delta_scale, segment_grid)


def test_domain_validation():
    with pytest.raises(ValueError):
        EllipseDomain(1.5, 0.5, 0.75)      # foci out of order
    with pytest.raises(ValueError):
        EllipseDomain(-0.5, 1.5, 0.75)     # negative focus
    with pytest.raises(ValueError):
        EllipseDomain(0.5, 1.5, 0.0)       # degenerate thickness
    EllipseDomain(0.5, 1.5, 0.75)          # the default is fine


def test_domain_geometry_numbers(domain):
    assert abs(domain.half_focal - 0.5) < 1e-15
    assert abs(domain.center_height - 1.0) < 1e-15
    # semi axes: minor b along real, major a = sqrt(b^2 + c^2) along imag
    b = domain.semi_minor
    a = math.hypot(b, domain.half_focal)
    assert abs(domain.area - math.pi * a * b) < 1e-14
    assert domain.contains(1j * domain.center_height)
    # the ellipse spans [center - a, center + a] on the imaginary axis and
    # holds the focal segment strictly inside
    assert domain.contains(1j * 0.26) and domain.contains(1j * 1.74)
    assert not domain.contains(1j * 0.24)
    assert not domain.contains(1j * 1.76)
    assert not domain.contains(2.0 + 1j)
    assert domain.contains(1j * domain.alpha1)
    assert domain.contains(1j * domain.alpha2)


def test_quadrature_moments(domain):
    rule = quadrature_2d(domain, 20, 40)
    ones = np.ones_like(rule.nodes.real)
    assert abs(rule.integrate(ones) - domain.area) < 1e-13
    # centroid: integral of z over the ellipse = area * center
    centroid = rule.integrate(rule.nodes) / domain.area
    assert abs(centroid - 1j * domain.center_height) < 1e-13
    # axis second moments: var(Re) = b^2/4, var(Im) = a^2/4
    b = domain.semi_minor
    a = math.hypot(b, domain.half_focal)
    var_re = rule.integrate(rule.nodes.real ** 2) / domain.area
    dz = rule.nodes.imag - domain.center_height
    var_im = rule.integrate(dz ** 2) / domain.area
    assert abs(var_re - b * b / 4.0) < 1e-13
    assert abs(var_im - a * a / 4.0) < 1e-13


def test_quadrature_analytic_function(domain):
    # entire functions integrate to area * f(center) only for linear f;
    # check an analytic oracle: integral of z^2 = area * (center^2 variance
    # correction): E[z^2] = center^2 + E[(z-center)^2], and for the ellipse
    # E[(z-center)^2] = (b^2 - a^2)/4 (real axis minus imaginary axis).
    rule = quadrature_2d(domain, 24, 48)
    b = domain.semi_minor
    a = math.hypot(b, domain.half_focal)
    second = rule.integrate(rule.nodes ** 2) / domain.area
    center = 1j * domain.center_height
    expected = center ** 2 + (b * b - a * a) / 4.0
    assert abs(second - expected) < 1e-13


def test_quadrature_order_validation(domain):
    with pytest.raises(ValueError):
        quadrature_2d(domain, 0, 8)
    with pytest.raises(ValueError):
        quadrature_2d(domain, 8, 0)


def test_sampler_pairing(domain):
    z, pair = sample_uniform_paired(domain, 64)
    assert z.shape == (64,)
    assert np.array_equal(pair[pair], np.arange(64))
    assert np.array_equal(z[pair], -np.conj(z))
    assert np.all(domain.contains(z))
    assert np.all(z.imag > 0)
    # deterministic: same call, same points
    z2, _ = sample_uniform_paired(domain, 64)
    assert np.array_equal(z, z2)


def test_sampler_odd_count(domain):
    z, pair = sample_uniform_paired(domain, 33)
    assert z.shape == (33,)
    assert np.array_equal(z[pair], -np.conj(z))
    # an odd count forces an odd number of self-paired points, all of which
    # must sit exactly on the imaginary axis
    self_paired = pair == np.arange(33)
    assert np.count_nonzero(self_paired) % 2 == 1
    assert np.all(z[self_paired].real == 0.0)


def test_sample_uniform_matches_paired(domain):
    z, _ = sample_uniform_paired(domain, 48)
    assert np.array_equal(sample_uniform(domain, 48), z)


def test_segment_grid(domain):
    y, lengths = segment_grid(domain, 200)
    assert y.shape == lengths.shape == (200,)
    assert np.all(np.diff(y) > 0)
    assert y[0] > domain.alpha1 and y[-1] < domain.alpha2
    assert abs(np.sum(lengths) - (domain.alpha2 - domain.alpha1)) < 1e-14
    # the grid follows y = a1 + (a2-a1) sin^2(s/2) on uniform s: nodes are
    # the images of the s-cell midpoints, and stay inside their cells
    a1, a2 = domain.alpha1, domain.alpha2
    s_edges = np.pi * np.arange(201) / 200
    y_edges = a1 + (a2 - a1) * np.sin(0.5 * s_edges) ** 2
    assert np.max(np.abs(np.diff(y_edges) - lengths)) < 1e-15
    assert np.all(y > y_edges[:-1]) and np.all(y < y_edges[1:])
    # grading: endpoint cells much shorter than central ones
    assert lengths[0] < 0.05 * lengths[100]
    with pytest.raises(ValueError):
        segment_grid(domain, 1)


def test_schwarz_delta_structure(domain):
    y = np.linspace(0.6, 1.4, 17)
    d_left = schwarz_delta(domain, y, plus_side="left")
    # the jump of the Schwarz function across the segment is real negative
    # with the "+ from the left" convention
    assert np.all(np.abs(d_left.imag) < 1e-14)
    assert np.all(d_left.real < 0)
    # flipping the side conjugates (here: negates) the jump
    d_right = schwarz_delta(domain, y, plus_side="right")
    assert np.max(np.abs(d_left + d_right)) < 1e-13
    # scale factorization: delta = -scale * sqrt((y-a1)(a2-y))
    scale = schwarz_delta_scale(domain)
    root = np.sqrt((y - domain.alpha1) * (domain.alpha2 - y))
    assert np.max(np.abs(d_left + scale * root)) < 1e-13


def test_cut_function_r(domain, beta):
    y = np.linspace(0.55, 1.45, 11)
    r = cut_function_r(domain, beta, y)
    assert np.all(r.real < 0) and np.all(np.abs(r.imag) < 1e-14)
    # bounded ratio against the square-root vanishing at the endpoints
    ratio = np.abs(r) / np.sqrt((y - domain.alpha1) * (domain.alpha2 - y))
    assert np.max(ratio) / np.min(ratio) < 1.0 + 1e-12   # beta == 1: constant
    # a nonconstant density reweights by beta(iy)^2
    beta2 = SolitonDensity([0.5, 0.0, 1.0])               # 0.5 + z^2
    r2 = cut_function_r(domain, beta2, y)
    b_iy = 0.5 - y ** 2
    assert np.max(np.abs(r2 - r * b_iy ** 2)) < 1e-12


def test_density_algebra():
    beta = SolitonDensity([1.0, 2.0j, -0.5])
    z = np.array([0.3 + 0.2j, -1.0 + 0.7j])
    direct = 1.0 + 2.0j * z - 0.5 * z ** 2
    assert np.max(np.abs(beta(z) - direct)) < 1e-15
    # beta*(z) = conj(beta(conj z))
    assert np.max(np.abs(beta.star(z) - np.conj(beta(np.conj(z))))) < 1e-15
    assert not beta.is_zero
    assert not beta.is_constant
    assert SolitonDensity([0.0, 0.0]).is_zero
    assert SolitonDensity.constant(2.0).is_constant
    with pytest.raises(ValueError):
        SolitonDensity([])
