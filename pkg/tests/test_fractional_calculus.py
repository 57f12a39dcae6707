#!/usr/bin/env python3
# Fractional gradient, Riesz potential and their identities

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import DomainError, PreconditionError
from src.core.fractional_calculus import (QuadratureSpec, bessel_norm, classical_gradient, commute_defect,
                                          continuity_probe, decay_check, frac_divergence, frac_gradient_quadrature,
                                          frac_gradient_spectral, ftc_difference, ftc_reconstruct,
                                          half_sphere_rule, integration_by_parts_defect, lp_convergence_proxy,
                                          riesz_potential, riesz_potential_field)
from src.core.grid_spectral import Box, Domain
from src.core.profiles import SmoothBump, canonical_family

OMEGA = Domain("interval", 1.0)


@pytest.fixture
def bump_1d():
    return canonical_family(1, OMEGA)[0]


def test_order_one_is_classical_derivative():
    box = Box(1, np.pi, 64)
    u = box.sample(lambda X: np.sin(2.0 * X[:, 0]))
    assert_allclose(classical_gradient(u).array[0], 2.0 * np.cos(2.0 * box.axis), atol=1e-11)


def test_order_out_of_range():
    u = Box(1, 4.0, 32).zeros()
    with pytest.raises(DomainError):
        frac_gradient_spectral(u, 0.0)
    with pytest.raises(DomainError):
        frac_gradient_spectral(u, 1.2)


def test_riesz_potential_semigroup(bump_1d):
    u = bump_1d.sample(Box(1, 8.0, 256))
    composed = riesz_potential(riesz_potential(u, 0.3), 0.4).values
    direct = riesz_potential(u, 0.7).values
    assert_allclose(composed, direct, atol=1e-12 * np.max(np.abs(direct)))
    with pytest.raises(DomainError):
        riesz_potential(u, 1.0)


@pytest.mark.parametrize("s, s_bar", [(0.8, 0.4), (0.6, 0.3), (0.9, 0.45)])
def test_riesz_composition(bump_1d, s, s_bar):
    u = bump_1d.sample(Box(1, 8.0, 256))
    lhs = frac_gradient_spectral(u, s_bar).array
    rhs = riesz_potential_field(frac_gradient_spectral(u, s), s - s_bar).array
    assert np.linalg.norm(lhs - rhs) <= 1e-6 * np.linalg.norm(lhs)


def test_riesz_composition_2d():
    box = Box(2, 8.0, 64)
    u = canonical_family(2)[0].sample(box)
    lhs = frac_gradient_spectral(u, 0.4).array
    rhs = riesz_potential_field(frac_gradient_spectral(u, 0.8), 0.4).array
    assert np.linalg.norm(lhs - rhs) <= 1e-6 * np.linalg.norm(lhs)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.7])
def test_ftc_roundtrip(s):
    # the odd symbol drops the Nyquist mode, so the bumps must be resolved to it
    box = Box(1, 8.0, 8192)
    for bump in canonical_family(1, OMEGA)[:3]:
        u = bump.sample(box)
        rec = ftc_reconstruct(frac_gradient_spectral(u, s), s)
        assert (rec - u).lp_norm(np.inf, OMEGA.mask(box)) <= 1e-5


def test_ftc_difference_ignores_constant(bump_1d):
    box = Box(1, 8.0, 256)
    u = bump_1d.sample(box)
    Dsu = frac_gradient_spectral(u, 0.5)
    x, y = (120,), (130,)
    assert_allclose(ftc_difference(Dsu, 0.5, x, y), u.values[y] - u.values[x], atol=1e-6)


def test_integration_by_parts_and_commutation(rng):
    box = Box(2, 6.0, 32)
    family = canonical_family(2)
    phi = family[1].sample(box)
    v = frac_gradient_spectral(family[2].sample(box), 1.0)
    assert integration_by_parts_defect(v, phi, 0.6) < 1e-10
    assert commute_defect(family[0].sample(box), 0.4, 1) < 1e-10


def test_divergence_of_gradient_is_negative_definite(bump_1d):
    u = bump_1d.sample(Box(1, 8.0, 256))
    value = (frac_divergence(frac_gradient_spectral(u, 0.5), 0.5) * u).integral()
    assert value < 0


def test_s_to_one_convergence(bump_1d):
    u = bump_1d.sample(Box(1, 8.0, 1024))
    du = classical_gradient(u)
    errors = [(frac_gradient_spectral(u, s) - du).lp_norm(np.inf) for s in (0.9, 0.99, 0.999)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] <= 0.01 * du.lp_norm(np.inf)
    proxy = lp_convergence_proxy(u, [0.9, 0.99, 0.999])
    assert proxy[0] > proxy[1] > proxy[2]


def test_bessel_norm_dominates_parts(bump_1d):
    u = bump_1d.sample(Box(1, 8.0, 256))
    total = bessel_norm(u, 0.5, 2.0)
    assert total >= u.lp_norm(2.0)
    assert total >= frac_gradient_spectral(u, 0.5).lp_norm(2.0)


@pytest.mark.parametrize("n, total", [(2, np.pi), (3, 2.0 * np.pi)])
def test_half_sphere_weights(n, total):
    dirs, weights = half_sphere_rule(n, 12)
    assert_allclose(weights.sum(), total, rtol=1e-12)
    assert_allclose(np.linalg.norm(dirs, axis=-1), 1.0, rtol=1e-12)


def test_quadrature_matches_spectral_1d():
    bump = SmoothBump((0.0,), 0.8, 1.0)
    box = Box(1, 32.0, 8192)
    spectral = frac_gradient_spectral(bump.sample(box), 0.5)
    for k in (4096 - 40, 4096, 4096 + 25):
        x = box.points[k]
        spec = QuadratureSpec(truncation_radius=abs(float(x[0])) + bump.support_radius + 1.5)
        q = frac_gradient_quadrature(bump, 0.5, x, spec)
        scale = spectral.lp_norm(np.inf)
        assert np.max(np.abs(spectral.value_at(x) - q)) <= 1e-3 * scale


def test_quadrature_rejects_small_truncation():
    with pytest.raises(PreconditionError):
        QuadratureSpec(truncation_radius=1.0, core_radius=2.0)


def test_decay_bound_and_slope():
    bump = SmoothBump((0.0,), 1.0, 1.0)
    report = decay_check(bump, 0.5, [[4.0], [6.0], [8.0], [12.0]])
    assert report.max_ratio <= 1.0
    assert abs(report.slope + 1.5) <= 0.05
    with pytest.raises(PreconditionError):
        decay_check(bump, 0.5, [[1.0]])


def test_continuity_probe_ratios_settle():
    bump = SmoothBump((0.0,), 1.0)
    spec = QuadratureSpec(truncation_radius=0.3 + bump.support_radius + 1.5)
    ratios = continuity_probe(bump, 0.5, [0.3], [1e-2, 5e-3], spec)
    assert [h for h, _ in ratios] == [1e-2, 5e-3]
    assert all(np.isfinite(r) and r > 0 for _, r in ratios)
    assert_allclose(ratios[0][1], ratios[1][1], rtol=0.05)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
