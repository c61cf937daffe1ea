import json

import numpy as np
import pytest

import metastab.lattice as lat
import metastab.normalform as nf
from metastab.bridge import (
    ErrorReport,
    GAMMA_TARGETS,
    RegimeSpec,
    WindowError,
    build_approx_etl,
    build_approx_kg,
    fit_gamma,
    fit_localization,
    fourier_exponents,
    leading_energy_table,
    pair_from_lattice,
    psi_to_qp,
    qp_to_psi,
    qp_to_xieta,
    run_comparison,
    spec_energy_from_pde,
    spec_energy_table,
    tail_fraction,
    xieta_to_qp,
)
from metastab.spectral import GridField2D, TorusGrid

from _helpers import cosine_pair, random_psi, random_xieta


def test_qp_xieta_round_trip(rng):
    g = TorusGrid(16, 5)
    q = rng.standard_normal((16, 5))
    pc = g.coeffs(rng.standard_normal((16, 5)))
    pc[0, :] = 0.0
    p = g.field(pc)
    fp = qp_to_xieta(q, p)
    assert fp.kind == "xieta"
    q2, p2 = xieta_to_qp(fp)
    assert np.max(np.abs(q2 - q)) < 1e-12
    assert np.max(np.abs(p2 - p)) < 1e-12


def test_qp_xieta_rejects_line_means(rng):
    g = TorusGrid(16, 5)
    q = rng.standard_normal((16, 5))
    with pytest.raises(nf.ConstraintError):
        qp_to_xieta(q, np.ones((16, 5)))
    with pytest.raises(ValueError):
        qp_to_xieta(GridField2D(g.coeffs(q), spectral=True), q)


def test_qp_psi_orientation(rng):
    # pure momentum maps to +i/sqrt2, on the clockwise-rotating branch
    q = np.zeros((8, 4))
    p = np.ones((8, 4))
    fp = qp_to_psi(q, p)
    f = fp.grid.field(fp.a, real=False)
    assert np.max(np.abs(f - 1j / np.sqrt(2.0))) < 1e-14
    qr = rng.standard_normal((8, 4))
    pr = rng.standard_normal((8, 4))
    q2, p2 = psi_to_qp(qp_to_psi(qr, pr))
    assert np.max(np.abs(q2 - qr)) < 1e-12
    assert np.max(np.abs(p2 - pr)) < 1e-12


def test_fourier_exponents_scalings():
    # quadratic regimes carry (aq, ap) = (2, 1), cubic/rotating (1, *)
    assert fourier_exponents("kdv", 3.0) == (0.0, -1.0)
    assert fourier_exponents("kp", 2.0) == (0.5, -0.5)
    assert fourier_exponents("nls1d", 2.0) == (-0.5, -0.5)
    assert fourier_exponents("mkdv", 3.0) == (-1.0, -2.0)


def test_lattice_pair_round_trip_etl(rng):
    params = lat.LatticeParams.from_aspect("etl", 8, 3.0, alpha=1.0)
    g = TorusGrid(32, 9)
    fp = random_xieta(g, rng, amp=0.4, frac=4, zero_line_means=True)
    state = build_approx_etl(fp, params, 0.0, regime="kdv")
    back = pair_from_lattice(state, params, "kdv", g)
    assert np.max(np.abs(back.a - fp.a)) < 1e-12
    assert np.max(np.abs(back.b - fp.b)) < 1e-12
    with pytest.raises(ValueError):
        build_approx_kg(fp, params, 0.0)


def test_lattice_pair_round_trip_kg(rng):
    params = lat.LatticeParams.from_aspect("kg", 8, 2.0, beta=1.0)
    g = TorusGrid(32, 9)
    fp = random_psi(g, rng, amp=0.4, frac=4)
    state = build_approx_kg(fp, params, 0.0, regime="nls1d")
    back = pair_from_lattice(state, params, "nls1d", g)
    assert np.max(np.abs(back.a - fp.a)) < 1e-12
    with pytest.raises(ValueError):
        build_approx_etl(fp, params, 0.0)


def test_kg_carrier_modulus():
    # Q^2 + P^2 = 2 mu^2 |psi|^2 at the lattice points, at any t
    params = lat.LatticeParams.from_aspect("kg", 6, 2.0, beta=1.0)
    g = TorusGrid(16, 5)
    fp = cosine_pair(g, amp=0.8, k=(1, 1), kind="psi")
    state = build_approx_kg(fp, params, 0.7)
    f = g.field(fp.a, real=False)
    n1, n2 = params.shape
    # same sampling map as the builder: torus series at (mu j1, mu^sigma j2)
    from metastab.spectral import fold_coeffs

    tg = TorusGrid(n1, n2)
    samples = tg.field(fold_coeffs(fp.a, n1, n2), real=False)
    lhs = state.Q**2 + state.P**2
    rhs = 2.0 * params.mu**2 * np.abs(samples) ** 2
    assert np.max(np.abs(lhs - rhs)) < 1e-14


@pytest.mark.parametrize("regime, model, sigma, kind", [
    ("kdv", "etl", 3.0, "xieta"),
    ("kp", "etl", 2.0, "xieta"),
    ("nls1d", "kg", 2.0, "psi"),
])
def test_energy_dual_route(regime, model, sigma, kind, rng):
    coeff = dict(alpha=1.0) if kind == "xieta" else dict(beta=1.0)
    params = lat.LatticeParams.from_aspect(model, 8, sigma, **coeff)
    g = TorusGrid(16, 7)
    if kind == "xieta":
        fp = random_xieta(g, rng, amp=0.4, zero_line_means=True)
    else:
        fp = random_psi(g, rng, amp=0.4)
    table = spec_energy_table(fp, params, regime)
    build = build_approx_etl if model == "etl" else build_approx_kg
    state = build(fp, params, 0.0, regime=regime)
    direct = lat.mode_energies(state, params).specific
    scale = float(np.max(direct))
    assert np.max(np.abs(table - direct)) < 1e-12 * scale
    # scalar accessor agrees and clips out-of-range modes to zero
    assert spec_energy_from_pde(fp, params, (1, 1), regime) == table[1, 1]
    assert spec_energy_from_pde(fp, params, (-2, 3), regime) == table[2, 3]
    assert spec_energy_from_pde(fp, params, (params.N1 + 1, 0), regime) == 0.0


def test_leading_energy_table_close(rng):
    params = lat.LatticeParams.from_aspect("etl", 8, 3.0, alpha=1.0)
    g = TorusGrid(16, 5)
    fp = cosine_pair(g, amp=0.9, k=(1, 1))
    lead = leading_energy_table(fp, params, "kdv")
    exact = spec_energy_table(fp, params, "kdv")
    # leading order drops the O(mu^2) dispersion corrections
    i = np.unravel_index(np.argmax(exact), exact.shape)
    assert i == (1, 1)
    assert abs(lead[i] - exact[i]) < 0.05 * exact[i]


def test_fit_localization_recovers_synthetic():
    N1, N2 = 12, 8
    k1 = np.repeat(np.arange(N1 + 1), N2 + 1)
    k2 = np.tile(np.arange(N2 + 1), N1 + 1)
    mu, p, gamma = 0.1, 4.0, 1.0
    rho_true, c1_true, c2_true = 1.7, 2.0, 0.3
    E = c1_true * mu**p * np.exp(-rho_true * (k1 + k2)) + c2_true * mu ** (p + gamma)
    fit = fit_localization(k1, k2, E, mu, p, gamma)
    assert abs(fit.rho - rho_true) < 0.02 * rho_true
    assert abs(fit.c1 - c1_true) < 0.05 * c1_true
    assert abs(fit.c2 - c2_true) < 0.05 * c2_true
    assert fit.resid < 0.01
    bound = fit.bound(np.array([0.0]), mu, p, gamma)
    assert abs(bound[0] - (fit.c1 * mu**p + fit.c2 * mu ** (p + gamma))) < 1e-15


def test_fit_localization_ignores_roundoff_floor():
    # parity-empty shells sit ~16 decades down; they must not drag the fit
    N1, N2 = 12, 8
    k1 = np.repeat(np.arange(N1 + 1), N2 + 1)
    k2 = np.tile(np.arange(N2 + 1), N1 + 1)
    mu = 0.1
    E = 2.0 * mu**4 * np.exp(-1.7 * (k1 + k2))
    E[(k1 + k2) % 2 == 1] = 1e-16 * np.max(E)
    fit = fit_localization(k1, k2, E, mu, 4.0, 1.0)
    assert abs(fit.rho - 1.7) < 0.05
    with pytest.raises(ValueError):
        fit_localization([0, 1], [0, 0], [1.0, 0.1], mu, 4.0, 1.0)


def test_tail_fraction_hand_cases():
    k1 = [0, 1, 2]
    k2 = [0, 0, 1]
    E = [1.0, 1.0, 2.0]
    assert tail_fraction(k1, k2, E, 1.5) == 0.5
    assert tail_fraction(k1, k2, E, 10.0) == 0.0
    assert tail_fraction(k1, k2, [0.0, 0.0, 0.0], 1.5) == 0.0


def test_fit_gamma_slope():
    mus = np.array([0.2, 0.1, 0.05])
    assert abs(fit_gamma(mus, 3.0 * mus**1.4) - 1.4) < 1e-12
    assert np.isnan(fit_gamma(mus, [0.0, 0.0, 1.0]))


def test_regime_spec_windows():
    spec = RegimeSpec("kdv", 1.0)
    spec.validate_sigma(3.0)
    with pytest.raises(WindowError, match="2 < sigma < 7"):
        spec.validate_sigma(2.0)
    with pytest.raises(WindowError, match="sigma = 2 required"):
        RegimeSpec("kp", 0.4).validate_sigma(3.0)
    with pytest.raises(WindowError, match="0 < gamma < 1/2"):
        RegimeSpec("kp", 0.6).validate_sigma(2.0)
    with pytest.raises(WindowError, match="sigma > 2"):
        RegimeSpec("mkdv", 0.5).validate_sigma(1.5)
    with pytest.raises(WindowError, match="1 < sigma < 7"):
        RegimeSpec("nls1d", 0.5).validate_sigma(7.5)
    with pytest.raises(ValueError):
        RegimeSpec("kdv", -1.0)
    with pytest.raises(ValueError):
        RegimeSpec("sine-gordon", 1.0)
    mu = 0.1
    w = RegimeSpec("kdv", 1.0, rho=2.0, delta=0.5).mode_window(mu)
    assert abs(w - 2.5 * abs(np.log(mu)) / 2.0) < 1e-14


def toy_run(**kw):
    params = lat.LatticeParams.from_aspect("etl", 4, 3.0, alpha=1.0)
    args = dict(C0=1.0, T0=0.1, samples=3, pde_shape=(32, 9), k0=(1, 1))
    args.update(kw)
    return run_comparison("kdv", params, **args)


def test_run_comparison_toy():
    report = toy_run()
    params = lat.LatticeParams.from_aspect("etl", 4, 3.0, alpha=1.0)
    mu = params.mu
    assert not report.aborted
    assert report.times[0] == 0.0
    assert abs(report.times[-1] - 0.1 / mu**3) < 1e-12
    assert len(report.times) == len(report.sup_error) == 3
    # the seeded data itself is reproduced exactly at t = 0
    assert report.sup_error[0] < 1e-12
    # seeded specific energy: first snapshot carries C0 mu^4 at k0
    snap = report.snapshot_at(0.0)
    i = 1 * (params.N2 + 1) + 1
    assert abs(snap.E[i] - mu**4) < 1e-12 * mu**4
    assert report.max_sup_error == max(report.sup_error)
    assert len(report.tail_fraction) == 3
    with pytest.raises(KeyError):
        report.snapshot_at(0.123)


def test_run_comparison_json_round_trip(tmp_path):
    report = toy_run()
    path = tmp_path / "report.json"
    report.save(path)
    loaded = ErrorReport.load(path)
    assert loaded.regime == report.regime
    assert loaded.times == report.times
    assert loaded.sup_error == report.sup_error
    assert np.isnan(loaded.gamma_fit) and np.isnan(report.gamma_fit)
    assert loaded.rho_fit == report.rho_fit
    assert loaded.k0 == report.k0
    assert len(loaded.spectra) == len(report.spectra)
    np.testing.assert_array_equal(loaded.spectra[0].E, report.spectra[0].E)
    # runtime is environment noise, not part of the artifact
    payload = json.loads(path.read_text())
    assert "runtime_s" not in payload


def test_run_comparison_budget_abort():
    report = toy_run(budget_s=1e-6)
    assert report.aborted
    assert len(report.times) < 3


def test_run_comparison_validation():
    params = lat.LatticeParams.from_aspect("etl", 4, 3.0, alpha=1.0)
    with pytest.raises(ValueError):
        run_comparison("nls1d", params)
    with pytest.raises(ValueError):
        run_comparison("kdv", params, samples=1)
    with pytest.raises(ValueError):
        run_comparison("kdv", params, alpha=2.0)
    with pytest.raises(WindowError):
        run_comparison("kp", params)  # sigma = 3 outside the kp window
    assert GAMMA_TARGETS["kdv"] == 1.0
