#!/usr/bin/env python3
# Mixed-order measures and their s-quadrature

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import ConfigError, DomainError
from src.core.measure_mu import (MeasureSpec, constant_density, dirac, from_config, integrate, mass_at_one,
                                 mixed_local_nonlocal, table_density, total_mass, truncated_series)


def test_dirac_integrates_exactly():
    mu = dirac(0.7, 2.0)
    assert_allclose(integrate(lambda s: s ** 3, mu), 2.0 * 0.7 ** 3)
    assert total_mass(mu) == 2.0
    assert mass_at_one(mu) == 0.0
    assert mass_at_one(dirac()) == 1.0


def test_constant_density_polynomial_exact():
    mu = constant_density(0.2, 0.9, value=3.0)
    assert_allclose(integrate(lambda s: s ** 5, mu), 3.0 * (0.9 ** 6 - 0.2 ** 6) / 6.0, rtol=1e-13)
    assert_allclose(total_mass(mu), 2.1)


def test_table_density_mass_and_refinement():
    mu = table_density([0.1, 0.5, 1.0], [0.0, 2.0, 1.0], atoms=[(1.0, 0.5)])
    assert_allclose(total_mass(mu), 0.4 + 0.75 + 0.5)
    coarse = integrate(np.exp, mu)
    fine = integrate(np.exp, mu.refined(4))
    assert_allclose(coarse, fine, rtol=1e-12)


def test_integrate_grid_objects():
    mu = mixed_local_nonlocal([0.3, 0.6], 0.5)
    value = integrate(lambda s: np.array([s, 1.0]), mu)
    assert_allclose(value, [0.3 + 0.6 + 0.5, 2.5])
    assert mass_at_one(mu) == 0.5


def test_truncated_series_tail():
    mu = truncated_series(10)
    assert len(mu.atoms) == 9
    assert_allclose(total_mass(mu) + mu.truncated_mass, 0.5)
    assert mu.support_min == 0.5
    with pytest.raises(DomainError):
        truncated_series(1)


@pytest.mark.parametrize("atoms", [((0.0, 1.0),), ((1.2, 1.0),), ((0.5, -1.0),), ()])
def test_measure_rejects_bad_atoms(atoms):
    with pytest.raises(DomainError):
        MeasureSpec(atoms=atoms)


def test_from_config_blocks():
    mu = from_config({"atoms": [[0.5, 1.0]], "density": {"kind": "constant", "support": [0.2, 0.4], "value": 2.0}})
    assert_allclose(total_mass(mu), 1.4)
    series = from_config({"series": {"K": 5}})
    assert_allclose(series.truncated_mass, 2.0 ** -5)


@pytest.mark.parametrize("block, field", [
    ({"atom": []}, "measure.atom"),
    ({"atoms": [[0.5]]}, "measure.atoms[0]"),
    ({"density": {"kind": "spline"}}, "measure.density.kind"),
    ({"series": {}}, "measure.series.K"),
])
def test_from_config_errors_carry_field(block, field):
    with pytest.raises(ConfigError) as info:
        from_config(block)
    assert info.value.field == field


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v"]))
