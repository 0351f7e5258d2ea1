import numpy as np
import pytest

from scarlab.lattice import LatticeModel
from scarlab import floquet as fl


@pytest.fixture(scope="module")
def lat():
    return LatticeModel(64)


def test_zero_drive_monodromy(lat):
    drive = fl.lattice_drive(lat, 0.0, 0.1)
    k = 10
    xi = lat.dispersion_table()[k]
    res = fl.integrate_monodromy(drive, k, 2048)
    T = drive.period
    expect = np.diag([np.exp(-1j * xi * T), np.exp(1j * xi * T)])
    assert np.max(np.abs(res.fundamental - expect)) < 1e-9
    assert np.max(np.abs(res.exponents.real)) < 1e-10


def test_exponent_pairing(lat):
    drive = fl.lattice_drive(lat, 2.0, 0.1)
    for k in (0, 7, 31):
        res = fl.integrate_monodromy(drive, k)
        assert res.exponents.real.sum() == pytest.approx(0.0, abs=1e-8)
        assert res.pseudo_unitarity_defect < 1e-9


def test_constant_drive_closed_form():
    xi, eps = 0.3, 0.5
    drive = fl.constant_drive(np.array([[xi, eps], [eps, xi]]), period=2.0)
    res = fl.integrate_monodromy(drive, 0, 4096)
    assert np.max(res.exponents.real) == pytest.approx(np.sqrt(eps**2 - xi**2), rel=1e-8)


def test_defect_gate_triggers(lat):
    drive = fl.lattice_drive(lat, 3.0, 0.1)
    with pytest.raises(fl.IntegratorAccuracyError, match="halve"):
        fl.integrate_monodromy(drive, 0, steps_per_period=64)


def test_steps_minimum(lat):
    drive = fl.lattice_drive(lat, 0.0, 0.1)
    with pytest.raises(ValueError):
        fl.integrate_monodromy(drive, 0, steps_per_period=32)


def test_mode_reconstruction_beyond_one_period(lat):
    """Floquet decomposition from one period reproduces Phi at 1.5 periods."""
    drive = fl.lattice_drive(lat, 1.0, 0.1)
    k = 3
    res = fl.integrate_monodromy(drive, k, 4096)
    assert not res.degenerate
    T = drive.period
    half_steps = 2048
    phi_half = fl._rk4_evolve(drive, np.array([k]), T / 2, half_steps)[0]
    phi_3half = fl._rk4_evolve(drive, np.array([k]), 1.5 * T, 3 * half_steps)[0]
    V = res.modes
    W = np.linalg.inv(V)
    lam = res.exponents
    # u_alpha(T/2) = e^{-lam T/2} Phi(T/2) v_alpha, periodic in T
    recon = sum(np.exp(lam[a] * 1.5 * T)
                * np.outer(np.exp(-lam[a] * T / 2) * (phi_half @ V[:, a]), W[a])
                for a in range(2))
    assert np.max(np.abs(recon - phi_3half)) < 1e-6


def test_lyapunov_scan_zero_drive(lat):
    re, _, defect = fl.lyapunov_scan(0.0, 0.1, lat, 2048)
    assert np.max(np.abs(re)) < 1e-10
    assert defect.max() < 1e-9


def test_lyapunov_scan_unstable_peaks(lat):
    re, _, defect = fl.lyapunov_scan(1.0, 0.1, lat, 2048)
    assert re.max() > 0
    assert defect.max() < 1e-9
    # parity of the drive: lambda_k even in k
    assert np.max(np.abs(re - re[(-np.arange(lat.L)) % lat.L])) < 1e-9


def test_peak_positions_stable_under_refinement():
    coarse = LatticeModel(64)
    fine = LatticeModel(256)
    re_c, _, _ = fl.lyapunov_scan(1.0, 0.1, coarse, 2048)
    re_f, _, _ = fl.lyapunov_scan(1.0, 0.1, fine, 2048)
    k_c = coarse.grid.momenta[np.argmax(re_c)]
    k_f = fine.grid.momenta[np.argmax(re_f)]
    assert abs(abs(k_c) - abs(k_f)) <= 2 * np.pi / 64 + 1e-12


def test_bare_retarded_gf_identity(lat):
    drive = fl.lattice_drive(lat, 0.0, 0.1)
    k, t = 5, 1.7
    xi = lat.dispersion_table()[k]
    igr = fl.retarded_gf_bare(drive, k, t)
    expect = np.diag([np.exp(-1j * xi * t), -np.exp(1j * xi * t)])
    assert np.max(np.abs(igr - expect)) < 1e-9
    assert not np.any(fl.retarded_gf_bare(drive, k, -0.5))


def test_otoc_envelope_zero_drive(lat):
    drive = fl.lattice_drive(lat, 0.0, 0.1)
    env = fl.otoc_envelope(drive, lat, t_max=2 * drive.period, steps_per_period=512)
    assert env.aggregate[0] == pytest.approx(1.0)
    assert np.max(np.abs(env.aggregate - 1.0)) < 1e-10


def test_otoc_envelope_slope_matches_scan(lat):
    re, _, _ = fl.lyapunov_scan(1.0, 0.1, lat, 2048)
    drive = fl.lattice_drive(lat, 1.0, 0.1)
    t_max = 14 * drive.period
    env = fl.otoc_envelope(drive, lat, t_max, steps_per_period=512)
    sel = env.times >= t_max - drive.period
    tw = env.times[sel] - env.times[sel].mean()
    yw = np.log(env.aggregate[sel])
    slope = float(tw @ (yw - yw.mean()) / (tw @ tw))
    assert slope == pytest.approx(2.0 * re.max(), rel=0.15)


def test_otoc_envelope_per_k_storage(lat):
    drive = fl.lattice_drive(lat, 0.5, 0.1)
    env = fl.otoc_envelope(drive, lat, drive.period, steps_per_period=256,
                           store_per_k=True)
    assert set(env.per_k) == set(range(lat.L))
    stacked = np.vstack([env.per_k[k] for k in range(lat.L)])
    assert np.allclose(stacked.mean(axis=0), env.aggregate, rtol=1e-12)
    assert np.all(stacked[:, 0] == 1.0)


def test_tabulated_drive_round_trip(tmp_path, lat):
    """Tabulated samples of the lattice drive reproduce its monodromy."""
    k = 9
    xi = lat.dispersion_table()[k]
    E = lat.gap()
    period = np.pi / E
    samples = 4096
    rows = []
    for i in range(samples):
        t = period * i / samples
        j = 4 * 0.1 * 1.0 * np.cos(E * t) ** 2
        rows.append(f"{xi + j} {j} {j} {xi + j}")
    path = tmp_path / "drive.txt"
    path.write_text("\n".join([str(period), str(samples)] + rows) + "\n")
    tab = fl.tabulated_drive(path)
    ref = fl.integrate_monodromy(fl.lattice_drive(lat, 1.0, 0.1), k, 2048)
    got = fl.integrate_monodromy(tab, k, 2048)
    assert np.max(np.abs(np.sort(got.exponents.real) - np.sort(ref.exponents.real))) < 1e-4


def test_tabulated_drive_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1.0\n2\n1 0 0 1\n")
    with pytest.raises(ValueError, match="promises"):
        fl.tabulated_drive(p)
    p.write_text("1.0\n1\n1 2j 0 1\n")
    with pytest.raises(ValueError, match="Hermitian"):
        fl.tabulated_drive(p)


def test_otoc_envelope_hbar_prefactor(lat):
    drive = fl.lattice_drive(lat, 0.0, 0.1)
    env = fl.otoc_envelope(drive, lat, drive.period, steps_per_period=256, hbar=0.5)
    assert env.aggregate[0] == pytest.approx(0.25)
