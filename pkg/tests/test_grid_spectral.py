#!/usr/bin/env python3
# Box, grid functions and Fourier multipliers

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import DomainError, GridMismatchError, RealityLossError
from src.core.grid_spectral import (Box, Domain, GridFunction, Multiplier, apply_multiplier, embed_box, forward,
                                    parseval_gap, supported_in, transform_roundtrip)


def test_box_layout():
    box = Box(2, 4.0, 16)
    assert box.spacing == 0.5
    assert box.cell_volume == 0.25
    assert box.points.shape == (256, 2)
    assert_allclose(box.axis[0], -4.0)
    assert_allclose(box.axis[-1], 4.0 - 0.5)


@pytest.mark.parametrize("args", [(4, 1.0, 16), (1, -1.0, 16), (1, 1.0, 7), (1, 1.0, 15)])
def test_box_rejects_bad_parameters(args):
    with pytest.raises(DomainError):
        Box(*args)


def test_grid_function_arithmetic_checks_box():
    a = Box(1, 4.0, 16).zeros()
    b = Box(1, 4.0, 32).zeros()
    with pytest.raises(GridMismatchError):
        _ = a + b
    assert_allclose((a + 1.0).integral(), 8.0)


def test_roundtrip_and_parseval(rng):
    box = Box(2, 3.0, 16)
    u = GridFunction(box, rng.normal(size=box.shape))
    assert_allclose(transform_roundtrip(u).values, u.values, atol=1e-13)
    assert parseval_gap(u) < 1e-12


def test_forward_matches_direct_dft(rng):
    box = Box(1, 2.0, 16)
    u = GridFunction(box, rng.normal(size=box.shape))
    k = np.arange(16)
    direct = np.exp(-2j * np.pi * np.outer(k, k) / 16) @ u.values
    assert_allclose(forward(u), direct, atol=1e-12)


def test_multiplier_derivative_of_sine():
    box = Box(1, np.pi, 64)
    u = box.sample(lambda X: np.sin(3.0 * X[:, 0]))
    d = Multiplier(lambda xi: 2j * np.pi * xi[0], odd_axes=(0,))
    assert_allclose(apply_multiplier(u, d).values, 3.0 * np.cos(3.0 * box.axis), atol=1e-11)


def test_non_hermitian_symbol_loses_reality():
    box = Box(1, 2.0, 32)
    u = box.sample(lambda X: np.exp(-X[:, 0] ** 2))
    with pytest.raises(RealityLossError):
        apply_multiplier(u, Multiplier(lambda xi: 1j * np.ones_like(xi[0])))


def test_domain_mask_and_embedding():
    box = Box(1, 8.0, 64)
    omega = Domain("interval", 1.0)
    inside = omega.mask(box)
    assert_allclose(box.axis[inside].min(), -0.75)
    assert omega.mask(box, margin_cells=2).sum() == inside.sum() - 2
    omega.check_embedding(box, 3.0)
    with pytest.raises(DomainError):
        omega.check_embedding(Box(1, 4.0, 64), 3.0)
    assert embed_box(omega, 1, 64).half_width == 8.0


def test_supported_in():
    box = Box(1, 8.0, 64)
    omega = Domain("interval", 1.0)
    assert supported_in(box.sample(lambda X: np.where(np.abs(X[:, 0]) < 0.5, 1.0, 0.0)), omega)
    assert not supported_in(box.sample(lambda X: np.exp(-X[:, 0] ** 2)), omega)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
