from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photocell.physics import (
    K_B,
    InvalidParameterError,
    ModelParams,
    build_occupations,
    dimer_eigensystem,
    effective_photon_temperature,
    interference_rates,
    planck_occupation,
)

energies = st.floats(0.5, 3.0)
couplings = st.floats(0.0, 0.1)


def eigh_oracle(E1, E2, J12):
    return np.linalg.eigvalsh(np.array([[E1, J12], [J12, E2]]))[::-1]


class TestDimerEigensystem:
    def test_degenerate_table_values(self):
        eig = dimer_eigensystem(1.8, 1.8, 0.015)
        assert eig.E_x1 == pytest.approx(1.815, abs=1e-12)
        assert eig.E_x2 == pytest.approx(1.785, abs=1e-12)
        assert eig.theta == pytest.approx(math.pi / 4)

    def test_zero_coupling(self):
        eig = dimer_eigensystem(1.8, 1.8, 0.0)
        assert eig.E_x1 == eig.E_x2 == pytest.approx(1.8)

    def test_detuned_matches_numerical_diagonalisation(self):
        eig = dimer_eigensystem(1.8, 1.7, 0.015)
        upper, lower = eigh_oracle(1.8, 1.7, 0.015)
        assert eig.E_x1 == pytest.approx(upper, abs=1e-12)
        assert eig.E_x2 == pytest.approx(lower, abs=1e-12)
        assert eig.E_x1 == pytest.approx(1.802202, abs=1e-6)
        assert eig.E_x2 == pytest.approx(1.697798, abs=1e-6)

    def test_mixing_angle_diagonalises(self):
        eig = dimer_eigensystem(1.8, 1.7, 0.015)
        c, s = math.cos(eig.theta), math.sin(eig.theta)
        H = np.array([[1.8, 0.015], [0.015, 1.7]])
        bright = np.array([c, s])
        assert H @ bright == pytest.approx(eig.E_x1 * bright, abs=1e-12)

    @given(energies, energies, couplings)
    def test_trace_conserved(self, E1, E2, J12):
        eig = dimer_eigensystem(E1, E2, J12)
        assert abs(eig.E_x1 + eig.E_x2 - (E1 + E2)) <= 1e-12
        assert eig.E_x1 >= eig.E_x2

    @given(energies, couplings)
    def test_degenerate_splitting_is_twice_coupling(self, E, J12):
        assert dimer_eigensystem(E, E, J12).splitting == pytest.approx(2 * J12, abs=1e-15)


class TestInterferenceRates:
    @pytest.mark.parametrize(
        "rates, expected",
        [
            ((0.62e-6, 0.62e-6, 6e-3, 6e-3), (1.24e-6, 12e-3)),
            ((0, 0, 0, 0), (0, 0)),
            ((1e-6, 1e-6, 5e-3, 5e-3), (2e-6, 1e-2)),
        ],
    )
    def test_examples(self, rates, expected):
        assert interference_rates(*rates) == pytest.approx(expected, rel=1e-15)

    @given(*(st.floats(0, 1) for _ in range(4)))
    def test_output_is_sum_of_inputs(self, g1h, g2h, g1c, g2c):
        gh, gc = interference_rates(g1h, g2h, g1c, g2c)
        assert gh == g1h + g2h and gc == g1c + g2c


class TestPlanck:
    def test_bright_dark_phonons(self):
        assert planck_occupation(0.030, 300) == pytest.approx(0.46, abs=0.01)

    def test_independent_evaluation(self):
        oracle = 1.0 / (math.exp(0.2 / (8.617333e-5 * 300)) - 1.0)
        assert planck_occupation(0.2, 300) == pytest.approx(oracle, rel=1e-12)
        assert planck_occupation(0.2, 300) == pytest.approx(4.40e-4, rel=0.01)

    def test_large_gap_vanishes(self):
        assert planck_occupation(10.0, 300) < 1e-14

    @pytest.mark.parametrize("dE, T", [(0.0, 300), (-0.1, 300), (0.1, 0.0)])
    def test_invalid(self, dE, T):
        with pytest.raises(ValueError):
            planck_occupation(dE, T)


class TestEffectiveTemperature:
    def test_concentrated_sunlight(self):
        T_S = effective_photon_temperature(60000, 1.8)
        assert T_S == pytest.approx(1.8 / (K_B * math.log1p(1 / 60000)), rel=1e-12)
        assert T_S == pytest.approx(1.25e9, rel=0.01)
        assert 1 - 300 / T_S == pytest.approx(1.0, abs=1e-6)

    def test_inverse_of_thermal_occupation(self):
        dE = K_B * 300
        assert effective_photon_temperature(1 / (math.e - 1), dE) == pytest.approx(300, rel=1e-12)

    def test_small_occupation_means_cold(self):
        temps = [effective_photon_temperature(10.0**-k, 1.8) for k in (1, 10, 100, 300)]
        assert temps == sorted(temps, reverse=True)
        assert temps[-1] < 0.01 * temps[0]

    @settings(max_examples=200)
    @given(st.floats(-6, 6), st.floats(0.01, 3.0))
    def test_round_trip(self, log_n, dE):
        n = 10**log_n
        back = planck_occupation(dE, effective_photon_temperature(n, dE))
        assert back == pytest.approx(n, rel=1e-10)


class TestModelParams:
    def test_defaults(self):
        p = ModelParams()
        assert (p.J12, p.Gamma, p.n_h_override) == (0.015, 0.124, 60000.0)
        assert p.gamma_h == pytest.approx(1.24e-6)
        assert p.gamma_c == pytest.approx(12e-3)

    def test_with_rates_splits_evenly(self):
        p = ModelParams().with_rates(gamma_c=0.02, gamma_h=4e-6, gamma_x=0.01)
        assert (p.gamma_1c, p.gamma_2c, p.gamma_1h, p.gamma_2h, p.gamma_x) == (0.01, 0.01, 2e-6, 2e-6, 0.01)

    @pytest.mark.parametrize(
        "change, field",
        [({"J12": -0.01}, "J12"), ({"Gamma": -1.0}, "Gamma"), ({"T_a": 0.0}, "T_a"), ({"gamma_x": float("nan")}, "gamma_x")],
    )
    def test_rejects_invalid(self, change, field):
        with pytest.raises(InvalidParameterError) as info:
            ModelParams(**change)
        assert info.value.field == field


class TestOccupations:
    def test_table_defaults_coupled(self):
        occ = build_occupations(ModelParams(), coupled=True)
        assert occ.n_x == pytest.approx(0.46, abs=0.01)
        assert occ.n_h == occ.n_1h == occ.n_2h == 60000
        assert occ.N_c == pytest.approx(planck_occupation(0.2, 300), rel=1e-15)
        assert occ.N_c == pytest.approx(4.4e-4, rel=0.01)
        assert occ.n_1c == pytest.approx(planck_occupation(0.215, 300), rel=1e-9)
        assert occ.n_2c == pytest.approx(planck_occupation(0.185, 300), rel=1e-9)

    def test_uncoupled_transfer_gaps_degenerate(self):
        occ = build_occupations(ModelParams(), coupled=False)
        assert occ.n_1c == occ.n_2c

    def test_cold_limit(self):
        occ = build_occupations(ModelParams(T_a=1e-3), coupled=True)
        assert max(occ.n_1c, occ.n_2c, occ.n_x, occ.N_c) < 1e-30

    def test_planck_photons_without_override(self):
        occ = build_occupations(ModelParams(n_h_override=None), coupled=True)
        assert occ.n_h == pytest.approx(planck_occupation(1.815, 300), rel=1e-12)
