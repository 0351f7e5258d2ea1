import numpy as np
import pytest
from hypothesis import given, strategies as st

from scarlab.lattice import LatticeModel, delta_broadened, dispersion, gap, wrap_index


def test_dispersion_examples():
    m = LatticeModel(8, hopping=1.0, chem_potential=2.5)
    assert dispersion(m, 0.0) == pytest.approx(0.5)
    assert dispersion(m, np.pi) == pytest.approx(4.5)
    assert dispersion(m, np.pi / 2) == pytest.approx(2.5)


def test_gap_examples():
    assert gap(LatticeModel(8, 1.0, 2.5)) == pytest.approx(0.5)
    assert gap(LatticeModel(8, 0.5, 3.0)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        LatticeModel(8, 1.0, 2.0)  # E = 0 is not gapped


def test_gap_is_grid_minimum():
    m = LatticeModel(128, 0.7, 2.1)
    assert gap(m) == pytest.approx(m.dispersion_table().min(), abs=1e-12)


def test_delta_broadened_values():
    assert delta_broadened(0.0, 0.1) == pytest.approx(1.0 / (0.1 * np.pi))
    assert delta_broadened(0.1, 0.1) == pytest.approx(1.0 / (2 * np.pi * 0.1))
    assert delta_broadened(10.0, 3.0 / 1024) < 1e-4


def test_delta_broadened_normalization():
    eta = 0.05
    x = np.linspace(-60.0, 60.0, 400_001)
    total = np.trapezoid(delta_broadened(x, eta), x)
    assert total == pytest.approx(1.0, abs=2 * eta)


def test_wrap_index_examples():
    assert wrap_index(-1, 8) == 7
    assert wrap_index(8, 8) == 0
    assert wrap_index(13, 8) == 5


@given(st.integers(-200, 200), st.integers(-200, 200),
       st.sampled_from([4, 8, 12, 64]))
def test_wrap_consistency_with_dispersion(a, b, L):
    m = LatticeModel(L, 1.0, 2.5)
    k = m.grid.momenta
    idx = wrap_index(a + b, L)
    assert dispersion(m, k[wrap_index(a, L)] + k[wrap_index(b, L)]) == pytest.approx(
        float(m.dispersion_table()[idx]), abs=1e-12)


@given(st.floats(-20, 20, allow_nan=False), st.floats(0.001, 2.0))
def test_delta_symmetric_nonnegative(x, eta):
    assert delta_broadened(x, eta) >= 0.0
    assert delta_broadened(x, eta) == pytest.approx(delta_broadened(-x, eta), rel=1e-12)


def test_dispersion_even_on_grid():
    m = LatticeModel(64, 1.3, 3.1)
    xi = m.dispersion_table()
    assert np.allclose(xi, xi[(-np.arange(64)) % 64], atol=0, rtol=0)


def test_grid_covers_bz_half_open():
    g = LatticeModel(16).grid
    assert g.momenta[0] == pytest.approx(-np.pi)
    assert g.momenta[-1] < np.pi
    assert np.allclose(np.diff(g.momenta), 2 * np.pi / 16)


def test_default_eta_is_three_over_L():
    assert LatticeModel(1024).eta == pytest.approx(3.0 / 1024)
