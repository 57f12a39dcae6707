#!/usr/bin/env python3
# Galerkin assembly, the resonance set and the Fredholm trichotomy

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.coefficients import LowerOrder, identity
from src.core.errors import PreconditionError, SizeCapError
from src.core.fredholm_solver import (INCOMPATIBLE, INFINITE_COMPATIBLE, UNIQUE, assemble, inf_sup_proxy,
                                      kernel_angles, kernel_dimension_check, lax_milgram_solve, solve,
                                      spectrum)
from src.core.grid_spectral import Box, Domain
from src.core.measure_mu import dirac, mixed_local_nonlocal
from src.core.variational import FormContext
from src.core.verification import spectral_stiffness

OMEGA = Domain("interval", 1.0)


@pytest.fixture(scope="module")
def system():
    cs = identity(1, a=LowerOrder("linear", (1.0,)), b=LowerOrder("constant", (1.0,)), a0=1.0)
    ctx = FormContext(mixed_local_nonlocal([0.6], 0.5), cs, OMEGA, Box(1, 8.0, 256))
    return assemble(ctx)


@pytest.fixture(scope="module")
def resonances(system):
    report = spectrum(system)
    assert report.values, "expected resonance values below sigma0"
    return report


def test_basis_keeps_two_cell_margin(system):
    h = system.ctx.box.spacing
    x = system.ctx.box.points[system.basis, 0]
    assert np.all(np.abs(x) <= 1.0 - 2.0 * h + 1e-12)
    assert system.K.shape == (system.size, system.size)


def test_adjoint_matrix_is_transpose(system):
    assert system.adjoint_defect <= 1e-10


@pytest.mark.parametrize("N", [256, 512])
def test_local_laplacian_matches_spectral_differentiation(N):
    ctx = FormContext(dirac(1.0), identity(1), OMEGA, Box(1, 8.0, N))
    system = assemble(ctx)
    ref = spectral_stiffness(ctx.box, system.basis)
    assert np.linalg.norm(system.K - ref) / np.linalg.norm(ref) <= 1e-6


def test_local_laplacian_ground_state_approaches_dirichlet_value():
    ctx = FormContext(dirac(1.0), identity(1), OMEGA, Box(1, 8.0, 512))
    system = assemble(ctx)
    h = ctx.box.spacing
    lam = np.linalg.eigvalsh(0.5 * (system.K + system.K.T))[0] / h
    x = ctx.box.points[system.basis, 0]
    ell = x[-1] - x[0] + 2.0 * h
    assert abs(lam / (math.pi / ell) ** 2 - 1.0) <= 0.05


def test_spectrum_lies_below_sigma0(system, resonances):
    values = resonances.values
    assert values == sorted(values)
    assert all(v < resonances.sigma0 for v in values)
    assert resonances.sigma0 == system.ctx.sigma0
    assert all(m >= 1 for _, m in resonances.sigmas)


def test_unique_solve_above_sigma0(system, rng):
    sigma = system.ctx.sigma0 + 1.0
    T = rng.normal(size=system.size)
    assert kernel_dimension_check(system, sigma) == (0, 0)
    report = solve(system, sigma, T)
    assert report.status == UNIQUE
    assert report.residual <= 1e-10
    assert_allclose(lax_milgram_solve(system, sigma, T), report.solution, rtol=1e-10, atol=1e-12)
    assert inf_sup_proxy(system, sigma) > system.tolerance


def test_trichotomy_at_resonant_sigma(system, resonances, rng):
    sigma = resonances.values[-1]
    d, d_star = kernel_dimension_check(system, sigma)
    assert d >= 1 and d == d_star
    assert len(kernel_angles(system, sigma)) == d

    U, S, _ = np.linalg.svd(system.shifted(sigma))
    adjoint = U[:, S <= system.tolerance]
    T = rng.normal(size=system.size)
    T = T - adjoint @ (adjoint.T @ T)
    compatible = solve(system, sigma, T)
    assert compatible.status == INFINITE_COMPATIBLE
    assert compatible.residual <= 1e-8
    assert len(compatible.kernel_basis) == d

    incompatible = solve(system, sigma, adjoint[:, 0])
    assert incompatible.status == INCOMPATIBLE
    assert incompatible.solution is None
    assert max(incompatible.compatibility_defects) > 0.5


def test_status_tracks_kernel_dimension(system, resonances, rng):
    top = resonances.values[-3:]
    sweep = sorted(set(np.linspace(min(top) - 1.0, max(top) + 1.0, 25).tolist()) | set(top))
    for sigma in sweep:
        d, d_star = kernel_dimension_check(system, sigma)
        report = solve(system, sigma, rng.normal(size=system.size))
        assert (report.status == UNIQUE) == (d == 0)
        assert d == d_star


def test_lax_milgram_requires_sigma0(system):
    T = np.ones(system.size)
    with pytest.raises(PreconditionError):
        lax_milgram_solve(system, system.ctx.sigma0 - 1.0, T)
    with pytest.raises(PreconditionError):
        lax_milgram_solve(system, system.ctx.sigma0, T, bounded_certified=False)


def test_solve_rejects_bad_right_hand_side(system):
    with pytest.raises(PreconditionError):
        solve(system, 0.0, np.ones(system.size + 1))
    bad = np.ones(system.size)
    bad[0] = np.nan
    with pytest.raises(PreconditionError):
        solve(system, 0.0, bad)


def test_basis_size_cap():
    ctx = FormContext(dirac(1.0), identity(2), Domain("ball", 1.0), Box(2, 8.0, 1024))
    with pytest.raises(SizeCapError):
        assemble(ctx)


def test_empty_basis_is_a_precondition_error():
    ctx = FormContext(dirac(1.0), identity(1), OMEGA, Box(1, 8.0, 8))
    with pytest.raises(PreconditionError):
        assemble(ctx)


def test_embed_and_functional(system):
    coefficients = np.arange(system.size, dtype=float)
    u = system.embed(coefficients)
    assert_allclose(u.values.ravel()[system.basis], coefficients)
    assert_allclose(system.functional(u), coefficients * system.ctx.box.cell_volume)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
