import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpband.backends import ExactBackend, SamplingBackend
from qpband.mitigation import (
    CalibrationMatrix,
    Distribution,
    FoldFactor,
    MitigationError,
    RepeatError,
    apply_rem,
    fold_circuit,
    measure_calibration,
    repeat_average,
    zne_extrapolate,
)
from qpband.simulator import (
    Circuit,
    Gate,
    NoiseModel,
    apply_circuit,
    zero_state,
)


def _noisy_backend(f0=0.981, f1=0.996, **kwargs):
    return SamplingBackend(
        noise=NoiseModel(readout=((f0, f0), (f1, f1)), **kwargs)
    )


class TestMeasureCalibration:
    def test_noiseless_backend_gives_identity(self):
        cal = measure_calibration(SamplingBackend(), 2, shots=1_000, seed=3)
        assert np.allclose(cal.m, np.eye(4))

    def test_exact_backend_gives_identity(self):
        cal = measure_calibration(ExactBackend(), 2, shots=1_000, seed=3)
        assert np.allclose(cal.m, np.eye(4))

    def test_confusion_product_structure(self):
        # per-qubit fidelities multiply: P(00 stays 00) = f_q0 * f_q1
        shots = 1_000_000
        cal = measure_calibration(_noisy_backend(), 2, shots=shots, seed=7)
        expected = 0.981 * 0.996
        sigma = math.sqrt(expected * (1 - expected) / shots)
        assert abs(cal.m[0, 0] - expected) < 3 * sigma

    def test_default_shots(self):
        cal = measure_calibration(SamplingBackend(), 1, seed=0)
        assert cal.shots_per_basis_state == 10_000

    def test_noiseless_off_diagonal_mass_bounded(self):
        shots = 100_000
        cal = measure_calibration(SamplingBackend(), 2, shots=shots, seed=5)
        off = cal.m - np.diag(np.diag(cal.m))
        assert np.max(np.abs(off)) <= 4 * math.sqrt(0.25 / shots)

    def test_columns_are_distributions(self):
        cal = measure_calibration(_noisy_backend(), 2, shots=5_000, seed=1)
        assert np.allclose(cal.m.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(cal.m >= 0)


class TestApplyRem:
    def test_identity_calibration_is_noop(self):
        dist = Distribution(np.array([0.5, 0.25, 0.25, 0.0]))
        cal = CalibrationMatrix(m=np.eye(4), shots_per_basis_state=1, cycle=0)
        out = apply_rem(dist, cal)
        assert np.allclose(out.p, dist.p)

    def test_inverse_consistency(self):
        rng = np.random.default_rng(2)
        m = np.eye(4) * 0.94
        m += 0.06 / 3 * (np.ones((4, 4)) - np.eye(4))
        cal = CalibrationMatrix(m=m, shots_per_basis_state=1, cycle=0)
        p_true = rng.dirichlet(np.ones(4))
        noisy = Distribution(m @ p_true)
        recovered = apply_rem(noisy, cal)
        assert np.allclose(recovered.p, p_true, atol=1e-10)

    def test_tv_distance_reduced_for_vqe_like_state(self):
        # state concentrated on |11> with small weight elsewhere, pushed
        # through a realistic confusion map
        ideal = np.array([0.004, 0.001, 0.001, 0.994])
        m0 = np.array([[0.981, 0.019], [0.019, 0.981]])
        m1 = np.array([[0.996, 0.004], [0.004, 0.996]])
        confusion = np.kron(m0, m1)
        rng = np.random.default_rng(4)
        shots = 10_000
        counts = rng.multinomial(shots, confusion @ ideal)
        noisy = Distribution(counts / shots)
        cal = CalibrationMatrix(m=confusion, shots_per_basis_state=shots, cycle=0)
        mitigated = apply_rem(noisy, cal)
        tv_raw = 0.5 * np.sum(np.abs(noisy.p - ideal))
        tv_mitigated = 0.5 * np.sum(np.abs(mitigated.p - ideal))
        assert tv_mitigated < tv_raw / 2

    def test_singular_matrix_reports_condition_number(self):
        m = np.full((2, 2), 0.5)
        cal = CalibrationMatrix(m=m, shots_per_basis_state=1, cycle=0)
        with pytest.raises(MitigationError, match="condition"):
            apply_rem(Distribution(np.array([0.6, 0.4])), cal)

    @given(
        st.integers(min_value=0, max_value=10_000),
        st.floats(min_value=0.6, max_value=1.0),
    )
    @settings(max_examples=40, deadline=None)
    def test_output_is_always_a_distribution(self, seed, fidelity):
        rng = np.random.default_rng(seed)
        m = np.eye(4) * fidelity + (1 - fidelity) / 3 * (np.ones((4, 4)) - np.eye(4))
        cal = CalibrationMatrix(m=m, shots_per_basis_state=1, cycle=0)
        noisy = Distribution(rng.dirichlet(np.ones(4) * 0.5))
        out = apply_rem(noisy, cal)
        assert np.all(out.p >= 0)
        assert out.p.sum() == pytest.approx(1.0, abs=1e-12)


class TestFoldCircuit:
    def _ansatz_like(self, params=(0.3, -0.4, 0.8, 0.1)):
        t1, t2, t3, t4 = params
        return Circuit(
            2,
            (
                Gate("X", (0,)), Gate("X", (1,)),
                Gate("Ry", (0,), t1), Gate("Ry", (1,), t2),
                Gate("CZ", (0, 1)),
                Gate("Ry", (0,), t3), Gate("Ry", (1,), t4),
            ),
        )

    def test_factor_one_is_unchanged(self):
        circuit = self._ansatz_like()
        assert fold_circuit(circuit, 1) == circuit

    def test_factor_three_triples_gates_and_preserves_state(self):
        circuit = self._ansatz_like()
        folded = fold_circuit(circuit, 3)
        assert len(folded.gates) == 21
        a = apply_circuit(zero_state(2), circuit)
        b = apply_circuit(zero_state(2), folded)
        assert np.allclose(a, b, atol=1e-12)

    def test_rotation_folds_to_forward_backward_forward(self):
        circuit = Circuit(1, (Gate("Ry", (0,), 0.7),))
        folded = fold_circuit(circuit, 3)
        kinds = [(g.kind, g.angle) for g in folded.gates]
        assert kinds == [("Ry", 0.7), ("Ry", -0.7), ("Ry", 0.7)]

    def test_even_factor_rejected(self):
        with pytest.raises(ValueError):
            fold_circuit(Circuit(1, (Gate("X", (0,)),)), 2)
        with pytest.raises(ValueError):
            FoldFactor(0)

    @given(
        st.sampled_from([1, 3, 5, 7]),
        st.tuples(*[st.floats(min_value=-3, max_value=3) for _ in range(4)]),
    )
    @settings(max_examples=30, deadline=None)
    def test_unitary_preserved_for_any_odd_factor(self, lam, params):
        circuit = self._ansatz_like(params)
        folded = fold_circuit(circuit, lam)
        assert len(folded.gates) == lam * len(circuit.gates)
        a = apply_circuit(zero_state(2), circuit)
        b = apply_circuit(zero_state(2), folded)
        assert np.allclose(a, b, atol=1e-12)


class TestZneExtrapolate:
    def test_two_point_closed_form(self):
        value, err = zne_extrapolate([(1, 2.0, 0.1), (3, 2.6, 0.2)])
        assert value == pytest.approx((3 * 2.0 - 2.6) / 2)
        assert err == pytest.approx(math.sqrt((1.5 * 0.1) ** 2 + (0.5 * 0.2) ** 2))

    def test_exact_on_affine_data(self):
        slope, intercept = -0.37, 1.234
        points = [(lam, intercept + slope * lam, 0.0) for lam in (1, 3, 5)]
        value, err = zne_extrapolate(points)
        assert value == pytest.approx(intercept, abs=1e-12)
        assert err == 0.0

    def test_duplicate_factors_rejected(self):
        with pytest.raises(ValueError):
            zne_extrapolate([(1, 1.0, 0.0), (1, 2.0, 0.0)])

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            zne_extrapolate([(1, 1.0, 0.0)])

    def test_depolarizing_bias_reduced_in_most_trials(self, si_gamma_tapered):
        # small version of the acceptance study: one depolarizing strength
        from qpband.pauli import group_qubitwise
        from qpband.simulator import expectation
        from qpband.vqe import build_ansatz

        params = [0.0, 0.0, 0.0, 0.0]
        circuit = build_ansatz(params)
        exact = expectation(
            apply_circuit(zero_state(2), circuit), si_gamma_tapered
        ).real
        noise = NoiseModel(
            readout=((1.0, 1.0), (1.0, 1.0)),
            depolarizing_1q=0.01,
            depolarizing_2q=0.01,
        )
        backend = SamplingBackend(noise=noise)
        constant, rest = si_gamma_tapered.split_identity()
        groups = group_qubitwise(rest)
        wins = 0
        trials = 20
        for trial in range(trials):
            values = {}
            for lam in (1, 3):
                folded = fold_circuit(circuit, lam)
                total, var = complex(constant), 0.0
                for g_idx, group in enumerate(groups):
                    v, e = backend.group_expectation(
                        folded, group, 2_000, seed=trial * 100 + lam * 10 + g_idx
                    )
                    total += v
                    var += e ** 2
                values[lam] = (total.real, math.sqrt(var))
            est0, _ = zne_extrapolate(
                [(1, *values[1]), (3, *values[3])]
            )
            if abs(est0 - exact) < abs(values[1][0] - exact):
                wins += 1
        assert wins >= trials * 0.7


class TestRepeatAverage:
    def test_constant_task_has_zero_sem(self):
        summary = repeat_average(lambda r: 1.5, repeats=10)
        assert summary.mean == 1.5
        assert summary.sem == 0.0
        assert len(summary.samples) == 10

    def test_default_repeats(self):
        calls = []
        summary = repeat_average(lambda r: calls.append(r) or float(r), repeats=40)
        assert len(summary.samples) == 40
        assert calls == list(range(40))

    def test_sinusoidal_drift_cancels_in_the_mean(self):
        # zero-mean drift across full periods: the average converges on the
        # clean value well within statistical error
        rng_master = np.random.default_rng(0)

        def task(r):
            rng = np.random.default_rng(1000 + r)
            drift = 0.05 * math.sin(2 * math.pi * r / 8)
            return 2.0 + drift + rng.normal(scale=0.01)

        summary = repeat_average(task, repeats=40)
        assert abs(summary.mean - 2.0) < 3 * summary.sem

    def test_failure_carries_partial_samples(self):
        def task(r):
            if r == 3:
                raise RuntimeError("boom")
            return float(r)

        with pytest.raises(RepeatError) as info:
            repeat_average(task, repeats=5)
        assert info.value.samples == [0.0, 1.0, 2.0]

    def test_minimum_repeats(self):
        with pytest.raises(ValueError):
            repeat_average(lambda r: 0.0, repeats=1)

    def test_parallel_matches_serial(self):
        def task(r):
            rng = np.random.default_rng(r)
            return float(rng.normal())

        serial = repeat_average(task, repeats=12, jobs=1)
        parallel = repeat_average(task, repeats=12, jobs=4)
        assert np.array_equal(serial.samples, parallel.samples)
