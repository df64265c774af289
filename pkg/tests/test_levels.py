import numpy as np
import pytest
from hypothesis import given, strategies as st

from qundo.errors import DomainError
from qundo.levels import (M_F, RB87, TWO_PI, PhysicalConstants, breit_rabi_levels,
                          drift_hamiltonian)

QUOTED_KHZ = np.array([8635.0, 4320.0, 0.0, -4326.0, -8657.0])


def test_reference_field_matches_quoted_diagonal():
    lv = breit_rabi_levels(6.179)
    assert np.all(np.abs(lv.in_khz() - QUOTED_KHZ) <= 2.0)
    assert lv.bias_field == 6.179


def test_zero_field_is_degenerate():
    assert np.all(breit_rabi_levels(0.0).energies == 0.0)


def test_small_field_linear_zeeman_oracle():
    # independent oracle: g_F mu_B m B with g_F from the Lande formula
    gj, gi, i = RB87.electron_g_factor, RB87.nuclear_g_factor, RB87.nuclear_spin
    j, f = 0.5, 2.0
    gf = (gj * (f * (f + 1) - i * (i + 1) + j * (j + 1))
          + gi * (f * (f + 1) + i * (i + 1) - j * (j + 1))) / (2 * f * (f + 1))
    B = 0.1
    linear = gf * RB87.bohr_magneton_over_hbar * M_F * B
    got = breit_rabi_levels(B).energies
    mask = M_F != 0
    assert np.all(np.abs(got[mask] / linear[mask] - 1) < 5e-3)
    assert np.allclose(got[mask] / TWO_PI / 1e3 / M_F[mask], 69.98, rtol=5e-3)


def test_zero_reference_and_ordering():
    e = breit_rabi_levels(6.179).energies
    assert e[2] == 0.0
    assert np.all(np.diff(e) < 0)


def test_second_difference_is_resolved():
    e = breit_rabi_levels(6.179).energies / TWO_PI
    assert abs((e[0] - e[1]) - (e[1] - e[2])) > 1e3


@pytest.mark.parametrize("B", [-0.1, 1000.0, 5000.0, np.nan, np.inf])
def test_out_of_range_field(B):
    with pytest.raises(DomainError, match=r"\[0, 1000\)"):
        breit_rabi_levels(B)


def test_drift_hamiltonian_is_diagonal():
    lv = breit_rabi_levels(6.179)
    h = drift_hamiltonian(lv)
    assert np.all(h[~np.eye(5, dtype=bool)] == 0)
    assert np.array_equal(np.diag(h).real, lv.energies)
    assert np.allclose(h, h.conj().T)
    assert np.all(drift_hamiltonian(breit_rabi_levels(0.0)) == 0)


def test_constants_validation():
    with pytest.raises(ValueError):
        PhysicalConstants(hyperfine_splitting=-1.0)
    PhysicalConstants(nuclear_g_factor=0.001)


def test_energies_read_only():
    lv = breit_rabi_levels(1.0)
    with pytest.raises(ValueError):
        lv.energies[0] = 1.0


@given(st.floats(min_value=0.01, max_value=100.0))
def test_strictly_decreasing_property(B):
    e = breit_rabi_levels(B).energies
    assert e[2] == 0.0
    assert np.all(np.diff(e) < 0)
