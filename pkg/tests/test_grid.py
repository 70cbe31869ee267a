"""Radial mesh, operator stencils, flux stencil, banded linear solves."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radbif import (ConfigError, SystemState, apply_operator,
                    banded_matvec_extended, boundary_flux, build_grid,
                    load_state_csv, operator_bands, pair_norm, save_state_csv,
                    solve_flux_bvp)

MU1_N3_R1 = 2.0 / (math.e ** 2 - 1.0)


def kernel_g(r):
    """Regular radial solution sinh(r)/r of the N=3 operator kernel."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    nz = r != 0.0
    out[nz] = np.sinh(r[nz]) / r[nz]
    return out


def test_build_grid_nodes_and_spacing():
    g = build_grid(3, 1.0, 16)
    assert g.h == 1.0 / 16
    np.testing.assert_allclose(g.r, np.arange(17) / 16.0, atol=0)
    assert g.r[0] == 0.0 and g.r[-1] == 1.0
    assert build_grid(4, 2.0, 64).h == 0.03125


def test_build_grid_rejects_bad_parameters():
    with pytest.raises(ConfigError):
        build_grid(3, 1.0, 15)  # M too small
    with pytest.raises(ConfigError):
        build_grid(3, 1.0, 4)
    with pytest.raises(ConfigError):
        build_grid(2, 1.0, 64)
    with pytest.raises(ConfigError):
        build_grid(3, 0.0, 64)


def test_operator_on_constant_is_the_constant():
    g = build_grid(3, 1.0, 32)
    res = apply_operator(g, np.full(33, 2.5))
    np.testing.assert_allclose(res, 2.5, rtol=1e-13)


def test_operator_annihilates_kernel_at_second_order():
    errs = []
    for M in (64, 128, 256):
        g = build_grid(3, 1.0, M)
        errs.append(float(np.abs(apply_operator(g, kernel_g(g.r))).max()))
    # halving h cuts the residual by 4 +- 15%
    for a, b in zip(errs[:-1], errs[1:]):
        assert 4.0 * 0.85 <= a / b <= 4.0 * 1.15
    assert errs[-1] < 2e-5


def test_operator_pointwise_on_r_squared():
    # -u'' - (2/r) u' + u at u = r^2, N=3: -2 - 4 + r^2
    g = build_grid(3, 1.0, 256)
    res = apply_operator(g, g.r ** 2)
    j = 128  # r = 0.5
    assert res[j] == pytest.approx(-2.0 - 4.0 + 0.25, abs=1e-8)


def test_operator_is_linear():
    g = build_grid(3, 1.0, 64)
    rng = np.random.default_rng(7)
    u, v = rng.standard_normal(65), rng.standard_normal(65)
    lhs = apply_operator(g, 2.0 * u - 3.0 * v)
    rhs = 2.0 * apply_operator(g, u) - 3.0 * apply_operator(g, v)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_boundary_flux_exact_on_quadratics():
    g = build_grid(3, 1.0, 32)
    assert boundary_flux(g, np.ones(33)) == 0.0
    assert boundary_flux(g, g.r.copy()) == pytest.approx(1.0, abs=1e-13)
    assert boundary_flux(g, g.r ** 2) == pytest.approx(2.0, abs=1e-12)


def test_boundary_flux_on_kernel():
    # u = sinh(r)/r at R=1: u'(1) = cosh(1) - sinh(1)
    exact = math.cosh(1.0) - math.sinh(1.0)
    errs = [abs(boundary_flux(build_grid(3, 1.0, M),
                              kernel_g(build_grid(3, 1.0, M).r)) - exact)
            for M in (128, 256)]
    assert errs[0] == pytest.approx(0.0, abs=1e-4)
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_pair_norm_conventions():
    g = build_grid(3, 1.0, 16)
    zero = SystemState.zero(g)
    assert pair_norm(zero) == 0.0
    assert pair_norm(SystemState(np.full(17, 2.0), np.full(17, 3.0))) == 5.0


def test_solve_flux_bvp_zero_flux_is_zero():
    g = build_grid(3, 1.0, 64)
    assert np.all(solve_flux_bvp(g, 0.0) == 0.0)


def test_solve_flux_bvp_unit_flux_boundary_value():
    # v = g/g'(R): v(R) = 1/mu1 up to O(h^2)
    g = build_grid(3, 1.0, 512)
    v = solve_flux_bvp(g, 1.0)
    assert v[-1] == pytest.approx(1.0 / MU1_N3_R1, rel=5e-6)
    assert v.min() > 0.0
    assert np.all(np.diff(v) >= 0.0)  # radially increasing


def test_solve_flux_bvp_satisfies_the_discrete_rows():
    g = build_grid(3, 1.0, 512)
    v = solve_flux_bvp(g, 1.0)
    res_int = apply_operator(g, v)
    # backward error at the operator row scale, near machine precision
    assert np.abs(res_int).max() / (2.0 / g.h ** 2 + 1.0) < 1e-14
    assert abs(boundary_flux(g, v) - 1.0) < 1e-11


def test_solve_flux_bvp_linear_in_flux():
    g = build_grid(3, 1.0, 64)
    a = solve_flux_bvp(g, 0.7)
    b = solve_flux_bvp(g, -0.2)
    c = solve_flux_bvp(g, 0.5)
    np.testing.assert_allclose(a + b, c, rtol=0, atol=1e-13)


def test_banded_matvec_extended_matches_dense():
    # small tridiagonal-ish banded matrix, compare against dense product
    rng = np.random.default_rng(3)
    n, n_upper, n_lower = 12, 1, 2
    ab = rng.standard_normal((n_upper + n_lower + 1, n))
    x = rng.standard_normal(n)
    dense = np.zeros((n, n))
    for j in range(n):
        for i in range(max(0, j - n_upper), min(n, j + n_lower + 1)):
            dense[i, j] = ab[n_upper + i - j, j]
    got = np.asarray(banded_matvec_extended(ab, n_upper, x), dtype=float)
    np.testing.assert_allclose(got, dense @ x, rtol=0, atol=1e-13)


def test_banded_matvec_extended_beats_double_cancellation():
    # residual of the solved system must sit well below the double floor
    g = build_grid(3, 1.0, 512)
    ab = operator_bands(g)
    v = solve_flux_bvp(g, 1.0)
    r = np.asarray(banded_matvec_extended(ab, 1, v), dtype=float)
    r[-1] -= 1.0
    scale = 2.0 / g.h ** 2 + 1.0
    assert np.abs(r).max() / scale < 1e-14


def test_operator_bands_cached_and_frozen():
    g = build_grid(3, 1.0, 64)
    ab1 = operator_bands(g)
    ab2 = operator_bands(g)
    assert ab1 is ab2
    assert not ab1.flags.writeable


def test_system_state_vector_roundtrip():
    g = build_grid(3, 1.0, 16)
    rng = np.random.default_rng(11)
    s = SystemState(rng.standard_normal(17), rng.standard_normal(17))
    t = SystemState.from_vector(s.to_vector())
    np.testing.assert_array_equal(t.u1, s.u1)
    np.testing.assert_array_equal(t.u2, s.u2)
    assert s.to_vector()[0] == s.u1[0] and s.to_vector()[1] == s.u2[0]
    with pytest.raises(ValueError):
        SystemState(np.zeros(17), np.zeros(16))


def test_state_csv_roundtrip(tmp_path):
    g = build_grid(3, 1.0, 16)
    s = SystemState(np.linspace(0, 1, 17) ** 2, np.linspace(1, 2, 17))
    path = tmp_path / "state.csv"
    save_state_csv(path, g, s, comment="roundtrip")
    r, u1, u2 = load_state_csv(path)
    np.testing.assert_array_equal(r, g.r)
    np.testing.assert_array_equal(u1, s.u1)
    np.testing.assert_array_equal(u2, s.u2)


@given(st.floats(min_value=-10, max_value=10),
       st.floats(min_value=-10, max_value=10))
def test_flux_bvp_superposition(f1, f2):
    g = build_grid(3, 1.0, 32)
    lhs = solve_flux_bvp(g, f1) + solve_flux_bvp(g, f2)
    rhs = solve_flux_bvp(g, f1 + f2)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-11)
