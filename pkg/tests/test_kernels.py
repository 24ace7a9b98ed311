from __future__ import annotations

import numpy as np
import pytest

from cvplab import (ChartManifold, CompactSupportKernel, GaussianKernel,
                    InversePowerKernel, SchemaError, UnsupportedOrderError,
                    kernel_from_dict, lagrangian_derivatives, lagrangian_eval,
                    pair_tables, verify_lagrangian)

EUC1 = ChartManifold(kind="euclidean", dim=1)
EUC2 = ChartManifold(kind="euclidean", dim=2)


def test_gaussian_frozen_values():
    k = GaussianKernel(sigma=1.0)
    assert k.profile(0.0) == 1.0
    assert k.profile(1.0) == pytest.approx(np.exp(-1.0), rel=1e-15)
    # at coincidence: grad1 = 0, hess11 = 2 g'(0) I = -2, hess12 = +2
    x = np.array([0.3])
    assert lagrangian_derivatives(k, EUC1, x, x, "grad1")[0] == 0.0
    assert lagrangian_derivatives(k, EUC1, x, x, "hess11")[0, 0] == -2.0
    assert lagrangian_derivatives(k, EUC1, x, x, "hess12")[0, 0] == 2.0


def test_symmetry_bit_identical():
    k = InversePowerKernel(sigma=0.7, exponent=2.5)
    rng = np.random.default_rng(5)
    for _ in range(20):
        x, y = rng.normal(size=(2, 2))
        assert lagrangian_eval(k, EUC2, x, y) == lagrangian_eval(k, EUC2, y, x)


def test_compact_support_vanishes_beyond_cutoff():
    k = CompactSupportKernel(radius=1.0, power=3)
    assert k.profile(1.0) == 0.0
    assert k.profile(2.0) == 0.0
    assert k.profile_d1(1.5) == 0.0
    assert k.profile_d2(1.5) == 0.0
    assert k.profile(0.0) == 1.0
    # C^2 continuity at the cutoff: value and two derivatives tend to 0
    eps = 1e-6
    assert abs(k.profile(1.0 - eps)) < 1e-17
    assert abs(k.profile_d1(1.0 - eps)) < 1e-11
    assert abs(k.profile_d2(1.0 - eps)) < 1e-5


@pytest.mark.parametrize("kernel", [
    GaussianKernel(sigma=1.3),
    InversePowerKernel(sigma=0.9, exponent=2.0),
    CompactSupportKernel(radius=2.0, power=4),
])
def test_analytic_derivatives_match_finite_differences(kernel):
    report = verify_lagrangian(kernel, EUC2, sample_count=15, step=1e-4, seed=2)
    assert report.symmetry_defect == 0.0
    assert report.max_rel_error() < 1e-6


def test_verify_on_torus():
    m = ChartManifold(kind="torus", dim=1, periods=(6.0,))
    report = verify_lagrangian(GaussianKernel(sigma=1.0), m,
                               sample_count=20, step=1e-4, seed=4)
    assert report.max_rel_error() < 1e-6


def test_pair_tables_structure():
    k = GaussianKernel(sigma=1.0)
    pts = np.array([[0.0], [1.0], [2.5]])
    t = pair_tables(k, EUC1, pts)
    assert t.L.shape == (3, 3) and t.G.shape == (3, 3, 1)
    assert np.array_equal(t.L, t.L.T)
    assert np.array_equal(t.G, -t.G.transpose(1, 0, 2))
    assert np.array_equal(t.H11, t.H11.transpose(1, 0, 2, 3))
    # entries agree with the single-pair evaluators
    for i in range(3):
        for j in range(3):
            assert t.L[i, j] == lagrangian_eval(k, EUC1, pts[i], pts[j])
            g = lagrangian_derivatives(k, EUC1, pts[i], pts[j], "grad1")
            assert np.array_equal(t.G[i, j], g)


def test_param_validation_and_orders():
    with pytest.raises(SchemaError):
        GaussianKernel(sigma=0.0)
    with pytest.raises(SchemaError):
        InversePowerKernel(sigma=1.0, exponent=-1.0)
    with pytest.raises(SchemaError):
        CompactSupportKernel(radius=1.0, power=2)
    with pytest.raises(UnsupportedOrderError):
        lagrangian_derivatives(GaussianKernel(sigma=1.0), EUC1,
                               np.zeros(1), np.ones(1), "hess22")


def test_kernel_from_dict_round_trip():
    for k in (GaussianKernel(sigma=1.5),
              InversePowerKernel(sigma=0.8, exponent=3.0),
              CompactSupportKernel(radius=1.2, power=3)):
        rebuilt = kernel_from_dict(k.to_dict())
        assert rebuilt == k
    with pytest.raises(SchemaError):
        kernel_from_dict({"family": "lorentzian", "params": {}})
    with pytest.raises(SchemaError):
        kernel_from_dict({"family": "gaussian", "params": {}})
