import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metastab.spectral import (
    GridField2D,
    TorusGrid,
    WeightedNormParams,
    delta1_apply,
    delta1_symbol,
    delta1_symbol_table,
    fold_coeffs,
    forward_transform,
    galerkin_project,
    inverse_transform,
    mode_radii,
    signed_modes,
    translate_coeffs,
    weighted_norm,
)


def test_signed_modes_orders():
    assert signed_modes(5).tolist() == [0, 1, 2, -2, -1]
    assert signed_modes(4).tolist() == [0, 1, -2, -1]


def test_constant_field_coefficients():
    g = TorusGrid(8, 6)
    c = g.coeffs(np.ones((8, 6)))
    assert abs(c[0, 0] - 2.0) < 1e-14
    c[0, 0] = 0.0
    assert np.max(np.abs(c)) < 1e-14
    assert g.integral(np.ones((8, 6))) == 4.0
    assert abs(g.l2sq(g.coeffs(np.ones((8, 6)))) - 4.0) < 1e-13


def test_cosine_coefficients():
    g = TorusGrid(12, 5)
    f = np.cos(np.pi * g.y1)[:, None] * np.ones((1, 5))
    c = g.coeffs(f)
    assert abs(c[1, 0] - 1.0) < 1e-14
    assert abs(c[-1, 0] - 1.0) < 1e-14
    assert abs(g.integral(f)) < 1e-14
    # int cos^2 over [-1,1]^2 is half the area
    assert abs(g.l2sq(c) - 2.0) < 1e-13


def test_round_trips(rng):
    g = TorusGrid(16, 9)
    f = rng.standard_normal((16, 9))
    assert np.max(np.abs(g.field(g.coeffs(f)) - f)) < 1e-13
    c = g.coeffs(f).astype(complex)
    back = g.coeffs(g.field(c, real=False))
    assert np.max(np.abs(back - c)) < 1e-13


def test_parseval_identity(rng):
    g = TorusGrid(24, 11)
    f = rng.standard_normal((24, 11))
    direct = g.integral(f * f)
    assert abs(direct - g.l2sq(g.coeffs(f))) < 1e-12 * direct


def test_grid_field_transforms(rng):
    v = rng.standard_normal((9, 7))
    lat = GridField2D(v, domain="lattice")
    spec = forward_transform(lat)
    assert spec.spectral and spec.domain == "lattice"
    # unitary transform: plain sum-of-squares Parseval
    assert abs(np.sum(v**2) - np.sum(np.abs(spec.values) ** 2)) < 1e-12
    back = inverse_transform(spec)
    assert np.max(np.abs(back.values.real - v)) < 1e-13

    tor = GridField2D(v, domain="torus")
    tspec = forward_transform(tor)
    g = TorusGrid(9, 7)
    assert np.max(np.abs(tspec.values - g.coeffs(v))) < 1e-14
    assert np.max(np.abs(inverse_transform(tspec).values.real - v)) < 1e-13

    with pytest.raises(ValueError):
        forward_transform(GridField2D(rng.standard_normal((8, 7)), domain="lattice"))
    with pytest.raises(ValueError):
        forward_transform(tspec)
    with pytest.raises(ValueError):
        inverse_transform(tor)


def test_grid_field_validation():
    with pytest.raises(ValueError):
        GridField2D(np.zeros(5))
    with pytest.raises(ValueError):
        GridField2D(np.zeros((4, 4)), domain="plane")
    with pytest.raises(ValueError):
        TorusGrid(1, 5)


def test_translate_matches_shifted_samples():
    g = TorusGrid(12, 7)
    f = np.cos(np.pi * g.y1)[:, None] + 0.3 * np.sin(2 * np.pi * g.y2)[None, :]
    c = g.coeffs(f)
    a1, a2 = 0.37, -0.81
    shifted = (
        np.cos(np.pi * (g.y1 - a1))[:, None]
        + 0.3 * np.sin(2 * np.pi * (g.y2 - a2))[None, :]
    )
    assert np.max(np.abs(g.field(translate_coeffs(c, a1, a2)) - shifted)) < 1e-13


def test_translate_full_period_is_identity(rng):
    g = TorusGrid(10, 6)
    c = g.coeffs(rng.standard_normal((10, 6)))
    assert np.max(np.abs(translate_coeffs(c, 2.0, 2.0) - c)) < 1e-13


def test_fold_matches_subgrid_sampling(rng):
    big = TorusGrid(12, 9)
    small = TorusGrid(4, 3)
    f = rng.standard_normal((12, 9))
    c = big.coeffs(f)
    # sampling on the commensurate coarse grid aliases modes congruent
    # mod (4, 3); the coherent fold must reproduce exactly that
    coarse = small.coeffs(f[::3, ::3])
    assert np.max(np.abs(fold_coeffs(c, 4, 3) - coarse)) < 1e-13


def test_pad_interpolates(rng):
    g = TorusGrid(6, 4)
    f = rng.standard_normal((6, 4))
    c = g.coeffs(f)
    big = TorusGrid(12, 8)
    fine = big.field(g.pad(c, 2))
    assert np.max(np.abs(fine[::2, ::2] - f)) < 1e-13


def test_weighted_norm_single_mode():
    c = np.zeros((8, 8), dtype=complex)
    c[1, 0] = 3.0
    w = WeightedNormParams(rho=0.7, s=2.0)
    assert abs(weighted_norm(c, w) - 3.0 * np.exp(0.7)) < 1e-12
    # zero mode never contributes
    c0 = np.zeros((8, 8), dtype=complex)
    c0[0, 0] = 5.0
    assert weighted_norm(c0, w) == 0.0
    spec = GridField2D(c, spectral=True)
    assert weighted_norm(spec, w) == weighted_norm(c, w)
    with pytest.raises(ValueError):
        weighted_norm(GridField2D(np.zeros((8, 8))), w)
    with pytest.raises(ValueError):
        WeightedNormParams(rho=-1.0)


def test_galerkin_project(rng):
    c = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    out = galerkin_project(c, 2.5)
    r = mode_radii(10, 10)
    assert np.all(out[r > 2.5] == 0.0)
    assert np.max(np.abs(out[r <= 2.5] - c[r <= 2.5])) == 0.0
    again = galerkin_project(out, 2.5)
    assert np.max(np.abs(again - out)) == 0.0
    wrapped = galerkin_project(GridField2D(c, spectral=True), 2.5)
    assert np.max(np.abs(wrapped.values - out)) == 0.0
    with pytest.raises(ValueError):
        galerkin_project(c, -1.0)


def test_stencil_matches_symbol(rng):
    for N1, N2 in [(4, 7), (10, 3)]:
        v = rng.standard_normal((2 * N1 + 1, 2 * N2 + 1))
        spec = np.fft.fft2(delta1_apply(v))
        via_symbol = delta1_symbol_table(N1, N2) * np.fft.fft2(v)
        scale = np.max(np.abs(spec))
        assert np.max(np.abs(spec - via_symbol)) < 1e-12 * scale


def test_delta1_symbol_values():
    table = delta1_symbol_table(3, 2)
    assert abs(table[0, 0]) == 0.0
    assert abs(delta1_symbol((2, -1), (3, 2)) - table[2, -1]) < 1e-15
    # one hand value: -4 sin^2(pi/7) at k = (1, 0), N1 = 3
    assert abs(delta1_symbol((1, 0), (3, 2)) + 4 * np.sin(np.pi / 7) ** 2) < 1e-15
    with pytest.raises(ValueError):
        delta1_symbol((4, 0), (3, 2))


def test_dealias_masks():
    g = TorusGrid(12, 9)
    quad = g.dealias_mask("quadratic")
    cub = g.dealias_mask("cubic")
    h1 = signed_modes(12)
    assert quad.shape == (12, 9)
    # axis-1 rule only: every h2 column identical
    assert np.all(quad == quad[:, :1])
    assert np.array_equal(quad[:, 0], np.abs(h1) <= 4)
    assert np.array_equal(cub[:, 0], np.abs(h1) <= 3)
    two = g.dealias_mask_2d("quadratic")
    h2 = signed_modes(9)
    assert np.array_equal(two, (np.abs(h1[:, None]) <= 4) & (np.abs(h2[None, :]) <= 3))
    with pytest.raises(KeyError):
        g.dealias_mask("quartic")


@settings(max_examples=30, deadline=None)
@given(
    n1=st.integers(2, 14),
    n2=st.integers(1, 10),
    seed=st.integers(0, 2**31),
    shift=st.floats(-3, 3, allow_nan=False),
)
def test_translate_inverse_property(n1, n2, seed, shift):
    g = TorusGrid(n1, n2)
    c = np.random.default_rng(seed).standard_normal((n1, n2)).astype(complex)
    back = translate_coeffs(translate_coeffs(c, shift), -shift)
    assert np.max(np.abs(back - c)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(
    n1=st.integers(2, 12),
    n2=st.integers(1, 12),
    m1=st.integers(1, 16),
    m2=st.integers(1, 16),
    seed=st.integers(0, 2**31),
)
def test_fold_preserves_coefficient_sum(n1, n2, m1, m2, seed):
    # every source coefficient lands in exactly one congruence class
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2))
    out = fold_coeffs(c, m1, m2)
    assert out.shape == (m1, m2)
    assert abs(np.sum(out) - np.sum(c)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**31), M=st.floats(0, 30))
def test_galerkin_contractive_property(n, seed, M):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    out = galerkin_project(c, M)
    assert np.sum(np.abs(out) ** 2) <= np.sum(np.abs(c) ** 2) + 1e-12
