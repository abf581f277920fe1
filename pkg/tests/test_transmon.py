import numpy as np
import pytest

from sfqsim.constants import HBAR, PHI0
from sfqsim.transmon import (
    CouplingParams,
    DecoherenceParams,
    DensityMatrix,
    TransmonParams,
    apply_decoherence,
    delta_theta,
    dephasing_rate,
    free_evolve,
    invert_self_capacitance,
    kick_unitary,
    level_energies,
    sfq_kick,
)

OMEGA10 = 2 * np.pi * 4.958e9
ALPHA = -2 * np.pi * 220e6


def two_level(dim=2):
    return TransmonParams(omega10=OMEGA10, alpha=ALPHA, dim=dim)


class TestTransmonParams:
    def test_valid(self):
        p = two_level(4)
        assert p.dim == 4

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(omega10=0.0, alpha=ALPHA, dim=2),
            dict(omega10=-1.0, alpha=ALPHA, dim=2),
            dict(omega10=OMEGA10, alpha=ALPHA, dim=1),
            dict(omega10=OMEGA10, alpha=-2 * OMEGA10, dim=3),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TransmonParams(**kwargs)


class TestLevelEnergies:
    def test_ground_state_reference(self):
        assert level_energies(two_level(4))[0] == 0.0

    def test_fundamental(self):
        assert level_energies(two_level(4))[1] == pytest.approx(2 * np.pi * 4.958e9, rel=1e-15)

    def test_second_level(self):
        # ladder arithmetic: 2*4.958 GHz - 220 MHz = 9.696 GHz
        assert level_energies(two_level(4))[2] == pytest.approx(2 * np.pi * 9.696e9, rel=1e-12)

    def test_length(self):
        assert len(level_energies(two_level(6))) == 6


class TestCoupling:
    def test_zero_coupling_gives_zero_angle(self):
        c = CouplingParams(c_c=0.0, c=86.6e-15)
        assert delta_theta(c, OMEGA10) == 0.0

    def test_paper_point_gives_pi_over_46(self):
        # C_c = 400 aF with the qubit capacitance recovered from the
        # 46-pulses-per-pi calibration
        c = CouplingParams(c_c=400e-18, c=86.6e-15)
        assert delta_theta(c, OMEGA10) == pytest.approx(np.pi / 46, rel=0.01)

    def test_linear_in_coupling_capacitance(self):
        c1 = CouplingParams(c_c=400e-18, c=86.6e-15)
        c2 = CouplingParams(c_c=800e-18, c=86.6e-15)
        assert delta_theta(c2, OMEGA10) == pytest.approx(2 * delta_theta(c1, OMEGA10), rel=1e-15)

    def test_inverse_sqrt_in_self_capacitance(self):
        c1 = CouplingParams(c_c=400e-18, c=86.6e-15)
        c4 = CouplingParams(c_c=400e-18, c=4 * 86.6e-15)
        assert delta_theta(c4, OMEGA10) == pytest.approx(0.5 * delta_theta(c1, OMEGA10), rel=1e-15)

    def test_capacitance_inversion_round_trip(self):
        c_inv = invert_self_capacitance(400e-18, OMEGA10, np.pi / 46)
        # close-form inversion lands near 87 fF
        assert 80e-15 < c_inv < 95e-15
        assert c_inv == pytest.approx(86.658e-15, rel=1e-4)
        coupling = CouplingParams(c_c=400e-18, c=c_inv)
        assert delta_theta(coupling, OMEGA10) == pytest.approx(np.pi / 46, rel=1e-12)

    def test_strong_coupling_warns(self):
        with pytest.warns(UserWarning, match="c_c/c"):
            CouplingParams(c_c=20e-15, c=86.6e-15)

    def test_invalid(self):
        with pytest.raises(ValueError):
            CouplingParams(c_c=-1e-18, c=86.6e-15)
        with pytest.raises(ValueError):
            CouplingParams(c_c=400e-18, c=0.0)
        with pytest.raises(ValueError):
            delta_theta(CouplingParams(c_c=400e-18, c=86.6e-15), 0.0)


class TestDecoherenceParams:
    def test_valid_and_rate(self):
        d = DecoherenceParams(t1_residual=23.6e-6, t2_star_residual=24.4e-6, t1_per_qp=1e-6)
        expected = 1 / 24.4e-6 - 0.5 / 23.6e-6
        assert dephasing_rate(d) == pytest.approx(expected, rel=1e-12)

    def test_t2_bound(self):
        with pytest.raises(ValueError, match="t2_star"):
            DecoherenceParams(t1_residual=10e-6, t2_star_residual=21e-6, t1_per_qp=1e-6)

    def test_t2_at_limit_clamps_with_warning(self):
        d = DecoherenceParams(t1_residual=10e-6, t2_star_residual=20e-6, t1_per_qp=1e-6)
        assert dephasing_rate(d) == 0.0
        d2 = DecoherenceParams(t1_residual=10e-6, t2_star_residual=19.9999999e-6, t1_per_qp=1e-6)
        rate = dephasing_rate(d2)
        assert rate >= 0.0

    def test_invalid_fields(self):
        with pytest.raises(ValueError):
            DecoherenceParams(t1_residual=-1.0, t2_star_residual=1e-6, t1_per_qp=1e-6)
        with pytest.raises(ValueError):
            DecoherenceParams(t1_residual=1e-6, t2_star_residual=1e-6, t1_per_qp=0.0)
        with pytest.raises(ValueError):
            DecoherenceParams(t1_residual=1e-6, t2_star_residual=1e-6, t1_per_qp=1e-6,
                              qp_dispersion_factor=0.0)


class TestDensityMatrix:
    def test_ground(self):
        rho = DensityMatrix.ground(4)
        assert rho.population(0) == 1.0
        assert rho.purity == pytest.approx(1.0)

    def test_from_state_vector_normalizes(self):
        rho = DensityMatrix.from_state_vector([1.0, 1.0])
        assert rho.population(0) == pytest.approx(0.5)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(np.array([[1.0, 0.1], [0.0, 0.0]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.diag([0.6, 0.6]))

    def test_rejects_negative_eigenvalue(self):
        m = np.array([[0.5, 0.6], [0.6, 0.5]])
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix(m)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.zeros((2, 3)))

    def test_immutable(self):
        rho = DensityMatrix.ground(2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 0.5


class TestFreeEvolve:
    def test_dt_zero_identity(self):
        rho = DensityMatrix.from_state_vector([1.0, 1.0j])
        out = free_evolve(rho, two_level(), 0.0)
        np.testing.assert_array_equal(out.matrix, rho.matrix)

    def test_populations_invariant(self):
        rho = DensityMatrix.from_state_vector([0.6, 0.8])
        out = free_evolve(rho, two_level(), 3.7e-9)
        np.testing.assert_allclose(out.populations, rho.populations, atol=1e-15)

    def test_full_period_returns_state(self):
        # phase wraps by 2 pi over one qubit period
        rho = DensityMatrix.from_state_vector([1.0, 1.0])
        out = free_evolve(rho, two_level(), 2 * np.pi / OMEGA10)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_known_phase(self):
        rho = DensityMatrix.from_state_vector([1.0, 1.0])
        dt = 0.31e-9
        out = free_evolve(rho, two_level(), dt)
        assert out.matrix[0, 1] == pytest.approx(0.5 * np.exp(1j * OMEGA10 * dt), abs=1e-12)

    def test_negative_dt_rejected(self):
        with pytest.raises(ValueError):
            free_evolve(DensityMatrix.ground(2), two_level(), -1e-12)


class TestSfqKick:
    def test_zero_angle_identity(self):
        rho = DensityMatrix.from_state_vector([0.6, 0.8j])
        out = sfq_kick(rho, 0.0, two_level())
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_pi_kick_inverts_two_level(self):
        out = sfq_kick(DensityMatrix.ground(2), np.pi, two_level())
        assert out.population(1) == pytest.approx(1.0, abs=1e-12)

    def test_two_level_kick_is_y_rotation(self):
        theta = 0.3
        u = kick_unitary(theta, 2)
        ry = np.array([[np.cos(theta / 2), -np.sin(theta / 2)],
                       [np.sin(theta / 2), np.cos(theta / 2)]])
        np.testing.assert_allclose(u, ry, atol=1e-14)

    def test_unitary_all_dims(self):
        for dim in (2, 3, 4, 6):
            u = kick_unitary(0.27, dim)
            np.testing.assert_allclose(u @ u.conj().T, np.eye(dim), atol=1e-13)

    def test_purity_preserved(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        state = DensityMatrix(rho)
        out = sfq_kick(state, 0.41, two_level(4))
        assert out.purity == pytest.approx(state.purity, abs=1e-10)

    def test_ten_pulse_inversion_at_resonant_spacing(self):
        # delta_theta = pi/10: ten kicks separated by full qubit periods invert
        params = two_level()
        rho = DensityMatrix.ground(2)
        period = 2 * np.pi / OMEGA10
        for _ in range(10):
            rho = sfq_kick(rho, np.pi / 10, params)
            rho = free_evolve(rho, params, period)
        assert rho.population(1) == pytest.approx(1.0, abs=1e-8)

    def test_kick_composition_matches_rotation(self):
        # N resonant-spaced kicks compose to a y rotation by N*delta_theta
        params = two_level()
        dtheta = np.pi / 46
        period = 2 * np.pi / OMEGA10
        rho = DensityMatrix.ground(2)
        for n in range(1, 24):
            rho = sfq_kick(rho, dtheta, params)
            assert rho.population(1) == pytest.approx(np.sin(n * dtheta / 2) ** 2, abs=1e-8)
            rho = free_evolve(rho, params, period)


class TestApplyDecoherence:
    def test_dt_zero_identity(self):
        rho = DensityMatrix.from_state_vector([0.6, 0.8])
        out = apply_decoherence(rho, 0.0, 1e5, 1e4)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_excited_state_decay(self):
        t1 = 23.6e-6
        rho = DensityMatrix.from_state_vector([0.0, 1.0])
        out = apply_decoherence(rho, t1, 1.0 / t1, 0.0)
        assert out.population(1) == pytest.approx(np.exp(-1.0), abs=1e-6)

    def test_pure_dephasing(self):
        g = 3.1e4
        dt = 11e-6
        rho = DensityMatrix.from_state_vector([1.0, 1.0])
        out = apply_decoherence(rho, dt, 0.0, g)
        assert abs(out.matrix[0, 1]) == pytest.approx(0.5 * np.exp(-g * dt), rel=1e-12)
        np.testing.assert_allclose(out.populations, rho.populations, atol=1e-15)

    def test_frequency_shift_phase(self):
        dphase = 2 * np.pi * 1e6
        dt = 0.2e-6
        rho = DensityMatrix.from_state_vector([1.0, 1.0])
        out = apply_decoherence(rho, dt, 0.0, 0.0, dphase=dphase)
        assert out.matrix[0, 1] == pytest.approx(0.5 * np.exp(1j * dphase * dt), abs=1e-12)

    def test_trace_preserved(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        out = apply_decoherence(DensityMatrix(rho), 5e-6, 2e4, 1e4, 1e5)
        assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-10)

    def test_negative_rates_rejected(self):
        rho = DensityMatrix.ground(2)
        with pytest.raises(ValueError):
            apply_decoherence(rho, 1e-6, -1.0, 0.0)
        with pytest.raises(ValueError):
            apply_decoherence(rho, 1e-6, 0.0, -1.0)
        with pytest.raises(ValueError):
            apply_decoherence(rho, -1e-6, 0.0, 0.0)

    def test_commutes_with_free_evolution_when_undamped(self):
        params = two_level(4)
        rho = DensityMatrix(np.full((4, 4), 0.25, dtype=complex))
        dt = 3.3e-9
        a = apply_decoherence(free_evolve(rho, params, dt), dt, 0.0, 2e4, 1e5)
        b = free_evolve(apply_decoherence(rho, dt, 0.0, 2e4, 1e5), params, dt)
        np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-14)

    def test_additive_in_dt(self):
        rho = DensityMatrix.from_state_vector([1.0, 1.0j, 0.3, 0.1])
        one = apply_decoherence(rho, 2e-6, 3e4, 1e4, 2e5)
        two = apply_decoherence(apply_decoherence(rho, 1.3e-6, 3e4, 1e4, 2e5), 0.7e-6, 3e4, 1e4, 2e5)
        np.testing.assert_allclose(one.matrix, two.matrix, atol=1e-13)


class TestValidityInvariant:
    """Every operation maps a valid density matrix to a valid one."""

    @staticmethod
    def random_state(rng, dim):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        return DensityMatrix(rho)

    def test_random_op_sweep(self):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            dim = int(rng.integers(2, 5))
            params = two_level(dim)
            state = self.random_state(rng, dim)
            op = rng.integers(0, 3)
            if op == 0:
                out = free_evolve(state, params, float(rng.uniform(0, 5e-9)))
            elif op == 1:
                out = sfq_kick(state, float(rng.uniform(-1, 1)), params)
            else:
                out = apply_decoherence(
                    state, float(rng.uniform(0, 2e-6)),
                    float(rng.uniform(0, 1e5)), float(rng.uniform(0, 1e5)),
                    float(rng.uniform(-1e6, 1e6)),
                )
            out.validate()


class TestLeakage:
    def test_leakage_decreases_with_anharmonicity(self, paper_coupling):
        # calibrated pi gate at the n=3 operating point, factor-4 sweep of |alpha|
        from sfqsim.engine import Physics, Timeline, simulate
        from sfqsim.sequencer import make_gate

        leakages = []
        for alpha_hz in np.linspace(110e6, 440e6, 5):
            physics = Physics(
                transmon=TransmonParams(omega10=OMEGA10, alpha=-2 * np.pi * alpha_hz, dim=4),
                coupling=paper_coupling,
            )
            gate = make_gate("X", physics.delta_theta(), 3)
            timeline = Timeline()
            timeline.add_gate(gate, physics.trigger_frequency(3))
            pops = simulate(timeline, physics).final_state.populations
            leakages.append(pops[2] + pops[3])
        assert all(b < a for a, b in zip(leakages, leakages[1:]))
        assert leakages[0] > 1e-4
