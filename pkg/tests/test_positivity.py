from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photocell.acceptance import REFERENCE, random_params
from photocell.kinetics import build_generator, evolve, relaxation_time
from photocell.positivity import (
    Superoperator,
    SuperoperatorFormatError,
    audit_positivity,
    dump_superoperator,
    evolve_density_matrix,
    lindblad_superoperator,
    load_superoperator,
    nonsecular_toy_superoperator,
    pauli_superoperator,
    toy_first_negative_time,
    unvec,
    vec,
)

SIGMA_Z = np.diag([1.0, -1.0])
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |g><e| in basis (g, e)
PLUS = np.full((2, 2), 0.5, dtype=complex)
EXCITED = np.diag([0.0, 1.0]).astype(complex)

DEPHASING_TABLE = """\
# pure dephasing at rate 1 on a qubit
d=2
0+0i, 0+0i, 0+0i, 0+0i
0+0i, -2+0i, 0+0i, 0+0i
0+0i, 0+0i, -2+0i, 0+0i
0+0i, 0+0i, 0+0i, 0+0i
"""


def ground_dm(d=5):
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


class TestVectorisation:
    def test_column_stacking(self):
        X = np.arange(9.0).reshape(3, 3)
        assert vec(X)[1] == X[1, 0]
        assert np.array_equal(unvec(vec(X), 3), X)

    def test_kron_identity(self):
        rng = np.random.default_rng(0)
        A, X, B = (rng.normal(size=(3, 3)) for _ in range(3))
        assert np.allclose(vec(A @ X @ B), np.kron(B.T, A) @ vec(X))


class TestLoad:
    def test_dephasing_table(self):
        L = load_superoperator(DEPHASING_TABLE)
        assert L.d == 2 and L.trace_preserving
        assert np.allclose(L.matrix, lindblad_superoperator(None, [SIGMA_Z]).matrix)

    def test_fifteen_entries(self):
        text = "d=2\n" + "\n".join(["0,0,0,0"] * 3) + "\n0,0,0\n"
        with pytest.raises(SuperoperatorFormatError, match="dimension mismatch"):
            load_superoperator(text)

    @pytest.mark.parametrize(
        "text, message",
        [("", "empty"), ("dim 2\n", "header"), ("d=1\nfoo\n", "line 2"), ("d=0\n", "dimension")],
    )
    def test_malformed(self, text, message):
        with pytest.raises(SuperoperatorFormatError, match=message):
            load_superoperator(text)

    def test_trace_violation_warns(self):
        with pytest.warns(UserWarning, match="not trace-preserving"):
            L = load_superoperator("d=1\n-1\n")
        assert not L.trace_preserving

    def test_pauli_embedding_round_trip(self):
        L = pauli_superoperator(build_generator(REFERENCE, True))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            back = load_superoperator(dump_superoperator(L))
        assert back.trace_preserving
        assert np.array_equal(back.matrix, L.matrix)

    def test_accepts_python_imaginary_unit(self):
        rows = ["0, 0, 0, 0", "0, 0+1j, 0, 0", "0, 0, 0-1j, 0", "0, 0, 0, 0"]
        L = load_superoperator("d=2\n" + "\n".join(rows) + "\n")
        assert L.trace_preserving
        assert L.matrix[1, 1] == 1j and L.matrix[2, 2] == -1j

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            Superoperator(np.zeros((3, 3)), 2)


class TestEvolveDensityMatrix:
    def test_zero_generator(self):
        traj = evolve_density_matrix(Superoperator(np.zeros((4, 4)), 2), PLUS, 3.0, 0.5)
        assert np.array_equal(traj.rhos, np.tile(PLUS, (7, 1, 1)))

    def test_amplitude_damping(self):
        gamma = 0.7
        L = lindblad_superoperator(None, [np.sqrt(gamma) * LOWER])
        traj = evolve_density_matrix(L, EXCITED, 5.0, 0.1)
        assert np.abs(traj.rhos[:, 1, 1].real - np.exp(-gamma * traj.times)).max() <= 1e-9

    def test_dephasing_coherence(self):
        L = load_superoperator(DEPHASING_TABLE)
        traj = evolve_density_matrix(L, PLUS, 2.0, 0.1)
        assert np.abs(traj.rhos[:, 0, 1].real - 0.5 * np.exp(-2 * traj.times)).max() <= 1e-9

    def test_pauli_diagonal_matches_rate_equations(self):
        gen = build_generator(REFERENCE, True)
        t_end = 5 * relaxation_time(gen)
        dm = evolve_density_matrix(pauli_superoperator(gen), ground_dm(), t_end, t_end / 50)
        pops = evolve(gen, t_end=t_end, dt_out=t_end / 50).populations
        diag = np.einsum("nii->ni", dm.rhos).real
        assert np.abs(diag - pops).max() <= 1e-8
        assert np.abs(dm.rhos - np.einsum("ni,ij->nij", diag, np.eye(5))).max() <= 1e-15

    def test_coherences_decay_under_embedding(self):
        gen = build_generator(REFERENCE, False)
        dephasing = 0.002
        rho0 = np.zeros((5, 5), dtype=complex)
        rho0[1, 1] = rho0[2, 2] = rho0[1, 2] = rho0[2, 1] = 0.5
        traj = evolve_density_matrix(pauli_superoperator(gen, dephasing), rho0, 200.0, 10.0)
        exits = -np.diag(gen.matrix)
        rate = 0.5 * (exits[1] + exits[2]) + dephasing
        assert np.abs(traj.rhos[:, 1, 2] - 0.5 * np.exp(-rate * traj.times)).max() <= 1e-11

    def test_trace_conserved(self):
        rng = np.random.default_rng(3)
        H = rng.normal(size=(3, 3))
        jumps = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2)]
        L = lindblad_superoperator(H + H.T, jumps)
        assert L.trace_preserving
        rho0 = np.diag([0.2, 0.3, 0.5]).astype(complex)
        traj = evolve_density_matrix(L, rho0, 4.0, 0.1)
        assert np.abs(traj.traces - 1).max() <= 1e-10
        assert not traj.drift_flagged
        assert traj.hermiticity_drift.max() < 1e-6

    def test_hermiticity_drift_flagged(self):
        # a generator that rotates rho_01 without touching rho_10
        m = np.zeros((4, 4), dtype=complex)
        m[2, 2] = 1j
        with pytest.warns(UserWarning, match="drift"):
            traj = evolve_density_matrix(Superoperator(m, 2), PLUS, 1.0, 0.1)
        assert traj.drift_flagged

    @pytest.mark.parametrize(
        "rho0, message",
        [(np.eye(2), "trace"), (np.array([[1, 1], [0, 0]]), "Hermitian"), (np.eye(3) / 3, "dimension")],
    )
    def test_rejects_invalid_initial_state(self, rho0, message):
        L = nonsecular_toy_superoperator()
        with pytest.raises(ValueError, match=message):
            evolve_density_matrix(L, rho0, 1.0)


class TestAudit:
    def test_pauli_models_stay_positive(self):
        for coupled in (False, True):
            gen = build_generator(REFERENCE, coupled)
            t_end = 20 * relaxation_time(gen)
            report = audit_positivity(evolve_density_matrix(pauli_superoperator(gen), ground_dm(), t_end, t_end / 40))
            assert not report.negative and report.first_negative_time is None
            assert not report.diverged
            assert report.steady_min_eigenvalue > 0

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_pauli_models_stay_positive(self, seed):
        gen = build_generator(random_params(np.random.default_rng(seed)), True)
        t_end = 20 * relaxation_time(gen)
        report = audit_positivity(evolve_density_matrix(pauli_superoperator(gen), ground_dm(), t_end, t_end / 20))
        assert not report.negative

    def test_dephasing_stays_positive(self):
        traj = evolve_density_matrix(load_superoperator(DEPHASING_TABLE), PLUS, 5.0, 0.05)
        assert audit_positivity(traj).min_eigenvalues.min() >= -1e-12

    def test_toy_counterexample(self):
        L = nonsecular_toy_superoperator(gamma=1.0, kappa=2.0)
        assert L.trace_preserving
        dt = 0.001
        report = audit_positivity(evolve_density_matrix(L, EXCITED, 2.0, dt))
        t_star = toy_first_negative_time(1.0, 2.0)
        assert report.negative
        assert t_star == pytest.approx(0.2503, abs=1e-4)
        assert t_star <= report.first_negative_time <= t_star + 0.01

    def test_toy_min_eigenvalue_matches_direct_diagonalisation(self):
        gamma, kappa = 1.0, 2.0
        traj = evolve_density_matrix(nonsecular_toy_superoperator(gamma, kappa), EXCITED, 3.0, 0.05)
        t = traj.times
        p_e = np.exp(-gamma * t)
        c = 2 * kappa / gamma * (np.exp(-gamma * t / 2) - np.exp(-gamma * t))
        exact = np.array([np.linalg.eigvalsh(np.array([[1 - pe, cc], [cc, pe]]))[0] for pe, cc in zip(p_e, c)])
        assert np.abs(audit_positivity(traj).min_eigenvalues - exact).max() <= 1e-8

    def test_weak_driving_is_harmless(self):
        assert toy_first_negative_time(1.0, 0.4) is None
        traj = evolve_density_matrix(nonsecular_toy_superoperator(1.0, 0.4), EXCITED, 20.0, 0.1)
        assert not audit_positivity(traj).negative

    def test_divergence_flag(self):
        L = Superoperator(np.diag([0, 0, 0, 2.0]).astype(complex), 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = evolve_density_matrix(L, EXCITED, 5.0, 0.5)
        assert audit_positivity(traj).diverged

    def test_tolerance(self):
        traj = evolve_density_matrix(nonsecular_toy_superoperator(1.0, 2.0), EXCITED, 0.5, 0.01)
        loose = audit_positivity(traj, tolerance=10.0)
        assert not loose.negative and loose.tolerance == 10.0
