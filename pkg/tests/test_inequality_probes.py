#!/usr/bin/env python3
# Inequality probes, the scaling family and the non-compact sweep

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.coefficients import p_delta
from src.core.errors import DomainError, PreconditionError, ResolutionError
from src.core.grid_spectral import Box, Domain, GridFunction
from src.core.inequality_probes import (ProbeReport, calibrate_tail_threshold, critical_exponent, family_constant,
                                        grad_control_probe, noncompact_sweep, order_comparison_probe,
                                        poincare_probe, scaling_family, tail_probe, weighted_holder_probe)
from src.core.profiles import SmoothBump, canonical_family

OMEGA = Domain("interval", 1.0)


@pytest.fixture(scope="module")
def box():
    return Box(1, 8.0, 512)


@pytest.fixture(scope="module")
def family(box):
    return [b.sample(box) for b in canonical_family(1, OMEGA)[:5]]


def test_weighted_holder_holds_with_degenerate_weight(box, family):
    h = box.sample(lambda X: np.abs(X[:, 0]) ** 0.5)
    for u in family:
        report = weighted_holder_probe(u, h, 1.0, 2.0, OMEGA)
        assert report.asserted and report.passed, report


def test_weighted_holder_is_equality_for_unit_weight(box, family):
    h = GridFunction(box, np.ones(box.shape))
    report = weighted_holder_probe(family[0], h, np.inf, 2.0, OMEGA)
    assert_allclose(report.lhs, report.rhs, rtol=1e-12)
    assert report.passed


def test_weighted_holder_preconditions(box, family):
    h = GridFunction(box, np.ones(box.shape))
    with pytest.raises(PreconditionError):
        # t = 1 needs p >= 2
        weighted_holder_probe(family[0], h, 1.0, 1.5, OMEGA)
    with pytest.raises(PreconditionError):
        weighted_holder_probe(family[0], -h, 1.0, 2.0, OMEGA)


def test_tail_probe_asserted_beyond_calibrated_radius():
    box = Box(1, 32.0, 2048)
    u = SmoothBump((0.0,), 0.5).sample(box)
    s, p = 0.5, 2.0
    threshold = calibrate_tail_threshold(u, s, p)
    R_star = (threshold / s ** 2) ** (1.0 / s)
    far = tail_probe(u, s, p, 2.0 * R_star, threshold)
    assert far.asserted and far.passed
    assert far.lhs <= 2.0 * far.rhs
    near = tail_probe(u, s, p, 0.5 * R_star, threshold)
    assert not near.asserted and near.passed is None
    assert 0.0 <= far.extra["tail_fraction"] <= near.extra["tail_fraction"] <= 1.0


def test_poincare_probe(box, family):
    reports = [poincare_probe(u, 0.5, 2.0, OMEGA) for u in family]
    assert all(np.isfinite(r.ratio) and r.ratio > 0 for r in reports)
    assert family_constant(reports) == max(r.ratio for r in reports)
    outside = SmoothBump((3.0,), 0.5).sample(box)
    with pytest.raises(PreconditionError):
        poincare_probe(outside, 0.5, 2.0, OMEGA)
    with pytest.raises(DomainError):
        poincare_probe(family[0], 0.5, 0.5, OMEGA)


def test_family_constant_skips_degenerate_reports():
    assert np.isnan(family_constant([ProbeReport("x", 1.0, 0.0)]))
    assert family_constant([ProbeReport("x", 1.0, 0.0), ProbeReport("x", 1.0, 4.0)]) == 0.25


def test_order_comparison_probe(box, family):
    same = order_comparison_probe(family[0], 0.4, 0.4, 2.0)
    assert same.ratio == 1.0
    assert np.isfinite(order_comparison_probe(family[0], 0.3, 0.7, 4.0).ratio)
    with pytest.raises(DomainError):
        order_comparison_probe(family[0], 0.8, 0.5, 2.0)


def test_grad_control_is_tight_at_order_one(box, family):
    report = grad_control_probe(family[1], 1.0, 2.0, OMEGA)
    assert_allclose(report.ratio, 1.0, rtol=1e-6)


def test_critical_exponent_matches_p_delta():
    for n, s_bar in ((1, 0.25), (2, 0.5), (3, 0.75)):
        delta = (n - 2.0 * s_bar) / (2.0 * s_bar)
        assert_allclose(critical_exponent(n, s_bar), p_delta(delta), rtol=1e-14)


def test_scaling_identities_on_contracted_box():
    box = Box(2, 8.0, 64)
    phi = SmoothBump((0.0, 0.0), 1.0)
    for lam in (2.0, 4.0):
        record = scaling_family(phi, lam, 0.7, 0.5, box, fixed_box=False)
        assert record.identities_hold, record


@pytest.mark.parametrize("lam", [2.0, 4.0, 16.0])
def test_scaling_identities_on_resolved_fixed_box(lam):
    box = Box(1, 256.0, 2 ** 20)
    record = scaling_family(SmoothBump((0.0,), 1.0), lam, 0.5, 0.4, box)
    assert record.member.box == box
    assert record.gradient_residual <= 1e-5
    assert record.seminorm_drift <= 1e-2
    assert record.l1_residual <= 1e-8


def test_coarse_fixed_box_shows_discretization_error():
    # the scaled profile spans exactly 8 cells; periodic images and aliasing are visible
    record = scaling_family(SmoothBump((0.0,), 1.0), 2.0, 0.5, 0.5, Box(1, 8.0, 128))
    assert record.gradient_residual > 1e-5
    assert not record.identities_hold


def test_scaling_family_parameter_errors():
    box = Box(1, 8.0, 256)
    phi = SmoothBump((0.0,), 1.0)
    with pytest.raises(DomainError):
        scaling_family(phi, 0.5, 0.5, 0.5, box)
    with pytest.raises(DomainError):
        scaling_family(phi, 2.0, 0.5, 1.0, box)
    with pytest.raises(ResolutionError):
        # support of 2 cells at lambda = 16
        scaling_family(phi, 16.0, 0.5, 0.5, box)
    with pytest.raises(ResolutionError):
        scaling_family(phi, 64.0, 0.5, 0.5, Box(1, 8.0, 64))
    assert np.isnan(scaling_family(phi, 2.5, 0.5, 0.5, box).gradient_residual)
    assert np.isfinite(scaling_family(phi, 2.0, 0.5, 0.5, box).gradient_residual)


def test_noncompact_sweep_grows():
    sweep = noncompact_sweep(SmoothBump((0.0, 0.0), 1.0), Box(2, 8.0, 512), 0.5, (1, 2, 4))
    k = sweep.k_values
    assert all(b >= a for a, b in zip(k, k[1:]))
    assert sweep.growth > 10.0
    assert_allclose(sweep.eps0, 1.0 / (2.0 * sweep.M ** 2))
    assert sweep.rows[0]["l1_residual"] == 0.0
    for row in sweep.rows:
        assert np.isfinite(row["gradient_residual"])


def test_noncompact_sweep_rejects_unresolved_lambda():
    with pytest.raises(ResolutionError):
        noncompact_sweep(SmoothBump((0.0, 0.0), 1.0), Box(2, 8.0, 64), 0.5, (1, 2, 4, 16))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
