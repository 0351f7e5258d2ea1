import numpy as np
import pytest

from scarlab.lattice import LatticeModel
from scarlab import meanfield as mf


@pytest.fixture(scope="module")
def lat():
    return LatticeModel(256)


@pytest.fixture(scope="module")
def converged(lat):
    params = mf.MeanFieldParams(lat, coupling=1.0, temperature=1.0)
    return mf.solve_mf(params, tol=1e-11), params


def bose_density(lat, T):
    xi = lat.dispersion_table()
    return float(np.mean(1.0 / np.expm1(xi / T)))


def test_quasiparticle_zero_deltas(lat):
    params = mf.MeanFieldParams(lat, 1.0, 1.0)
    sol = mf.MeanFieldSolution(0.0, 0.0, 0.7, 0.9)
    ea, eb = mf.quasiparticle_energies(sol, params)
    xi = lat.dispersion_table()
    assert np.allclose(ea, xi, rtol=1e-14)
    assert np.allclose(eb, xi + 1.0 * 0.7 * 0.9, rtol=1e-14)


def test_quasiparticle_domain_error(lat):
    params = mf.MeanFieldParams(lat, 1.0, 1.0)
    bad = mf.MeanFieldSolution(5.0, 0.0, 1.0, 1.0)  # xi - 2*delta_a < 0 somewhere
    with pytest.raises(mf.QuasiparticleDomainError):
        mf.quasiparticle_energies(bad, params)


def test_free_fixed_point_residual(lat):
    params = mf.MeanFieldParams(lat, 0.0, 1.0)
    res = mf.mf_residual(mf.free_solution(params), params)
    assert np.max(np.abs(res)) < 1e-14


def test_residual_structure_at_zero_fields(lat):
    params = mf.MeanFieldParams(lat, 2.0, 1.0)
    sol = mf.MeanFieldSolution(0.0, 0.0, 0.0, 0.0)
    res = mf.mf_residual(sol, params)
    expect = -np.mean(mf.coth_half(lat.dispersion_table(), 1.0))
    assert res[0] == pytest.approx(0.0, abs=1e-14)
    assert res[1] == pytest.approx(0.0, abs=1e-14)
    assert res[2] == pytest.approx(expect)
    assert res[3] == pytest.approx(expect)


def test_converged_solution(converged):
    sol, params = converged
    assert sol.residual_norm < 1e-10
    assert sol.delta_a < 0.0
    ea, eb = mf.quasiparticle_energies(sol, params)
    assert np.all(ea > 0) and np.all(eb > 0)
    # delta_a/v_b == delta_b/v_a (gap-equation ratio identity)
    assert sol.delta_a / sol.v_b == pytest.approx(sol.delta_b / sol.v_a, abs=1e-9)


def test_multistart_uniqueness(lat, converged):
    sol, params = converged
    other = mf.solve_mf(params, init=mf.MeanFieldSolution(-0.2, -0.3, 1.4, 1.2),
                        tol=1e-11)
    assert np.max(np.abs(other.as_vector() - sol.as_vector())) < 10 * 1e-11 * 100


def test_thermo_cross_check(converged):
    sol, params = converged
    rep = mf.thermo_report(sol, params)
    assert rep.rho_b_occupation > 0
    assert abs(rep.rho_b_occupation - rep.rho_b_relation) < 1e-8


def test_j_zero_matches_bose_gas(lat):
    params = mf.MeanFieldParams(lat, 0.0, 1.0)
    rep = mf.thermo_report(mf.free_solution(params), params)
    assert rep.rho_b_occupation == pytest.approx(bose_density(lat, 1.0), abs=1e-10)
    assert np.isnan(rep.rho_b_relation)


def test_j_to_zero_continuity(lat):
    params = mf.MeanFieldParams(lat, 1e-6, 1.0)
    sol = mf.solve_mf(params, tol=1e-12)
    free = mf.free_solution(params)
    assert np.max(np.abs(sol.as_vector() - free.as_vector())) < 1e-4


def test_temperature_sweep_invariants(lat):
    prev_free = np.inf
    prev = None
    for T in (0.2, 0.5, 1.0, 2.0, 5.0):
        params = mf.MeanFieldParams(lat, 1.0, T)
        prev = mf.solve_mf(params, init=prev, tol=1e-11)
        rep = mf.thermo_report(prev, params)
        assert prev.residual_norm < 1e-10
        assert rep.rho_b_occupation > 0.0
        assert np.isfinite(rep.free_energy_density)
        assert np.isfinite(rep.energy_density)
        assert rep.free_energy_density < prev_free
        prev_free = rep.free_energy_density


def test_coth_half_stability():
    # overflow-safe at low temperature, exact high-argument limit
    assert mf.coth_half(1e4, 1.0) == 1.0
    assert mf.coth_half(1.0, 1.0) == pytest.approx(1.0 / np.tanh(0.5), rel=1e-12)
    assert np.isfinite(mf.coth_half(np.array([1e-8]), 1.0)).all()


def test_nonconvergence_reported(lat):
    params = mf.MeanFieldParams(lat, 1.0, 1.0)
    with pytest.raises(mf.NonConvergenceError):
        mf.solve_mf(params, tol=1e-11, max_iter=3)


def test_ssb_examples():
    assert mf.ssb_solution(0.5, 1.0) == mf.SSBResult(0.0, 0.0)
    res = mf.ssb_solution(-1.0, 1.0)
    assert (res.a_sq, res.b_sq) == (0.125, 0.25)
    res4 = mf.ssb_solution(-4.0, 1.0)
    assert (res4.a_sq, res4.b_sq) == (0.25, 0.5)
    assert mf.ssb_solution(0.0, 1.0).degenerate
    with pytest.raises(ValueError):
        mf.ssb_solution(-1.0, 0.0)
