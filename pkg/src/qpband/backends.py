"""Measurement backends: the exact statevector reference and shot sampling.

Both backends expose the same two methods:

``group_expectation(circuit, group, shots, seed, cycle)``
    estimate of the group's operator sum, as ``(value, stderr)``;
``sample(circuit, shots, seed, cycle, basis=None)``
    raw bitstring counts in the given measurement basis (default Z).

The exact backend evaluates expectation values on the final statevector and
reports zero error; the sampling backend draws shots through its noise
model and optionally applies readout-error mitigation before estimating.
"""

from __future__ import annotations

from dataclasses import dataclass

from .mitigation import CalibrationMatrix, Distribution, apply_rem
from .pauli import MeasurementGroup, PauliString, PauliSum
from .simulator import (
    Circuit,
    NoiseModel,
    ShotResult,
    apply_circuit,
    expectation,
    expectation_from_counts,
    sample_group,
    zero_state,
)


def _trivial_group(n_qubits: int, basis: PauliString | None) -> MeasurementGroup:
    if basis is None:
        basis = PauliString("Z" * n_qubits)
    return MeasurementGroup(members=(), basis=basis)


@dataclass(frozen=True)
class ExactBackend:
    """Infinite-shot reference: exact expectations from the statevector."""

    def group_expectation(
        self,
        circuit: Circuit,
        group: MeasurementGroup,
        shots: int,
        seed: int,
        cycle: int = 0,
    ) -> tuple[complex, float]:
        state = apply_circuit(zero_state(circuit.n_qubits), circuit)
        value = expectation(
            state, PauliSum(circuit.n_qubits, dict(group.members))
        )
        return value, 0.0

    def sample(
        self,
        circuit: Circuit,
        shots: int,
        seed: int,
        cycle: int = 0,
        basis: PauliString | None = None,
    ) -> ShotResult:
        noise = NoiseModel.ideal(circuit.n_qubits)
        return sample_group(
            circuit, _trivial_group(circuit.n_qubits, basis), shots, noise, seed, cycle
        )


@dataclass(frozen=True)
class SamplingBackend:
    """Shot-based backend with an optional noise model and optional REM.

    With ``calibration`` set, sampled counts are turned into a distribution,
    readout-mitigated, and only then folded into the group estimate; the
    binomial error model keeps the raw shot count.
    """

    noise: NoiseModel | None = None
    calibration: CalibrationMatrix | None = None

    def _noise_for(self, n_qubits: int) -> NoiseModel:
        if self.noise is None:
            return NoiseModel.ideal(n_qubits)
        if self.noise.n_qubits != n_qubits:
            raise ValueError("noise model width does not match the circuit")
        return self.noise

    def group_expectation(
        self,
        circuit: Circuit,
        group: MeasurementGroup,
        shots: int,
        seed: int,
        cycle: int = 0,
    ) -> tuple[complex, float]:
        result = sample_group(
            circuit, group, shots, self._noise_for(circuit.n_qubits), seed, cycle
        )
        if self.calibration is None:
            return expectation_from_counts(group, result)
        mitigated = apply_rem(
            Distribution.from_counts(result, circuit.n_qubits), self.calibration
        )
        return expectation_from_counts(group, mitigated, shots=shots)

    def sample(
        self,
        circuit: Circuit,
        shots: int,
        seed: int,
        cycle: int = 0,
        basis: PauliString | None = None,
    ) -> ShotResult:
        return sample_group(
            circuit,
            _trivial_group(circuit.n_qubits, basis),
            shots,
            self._noise_for(circuit.n_qubits),
            seed,
            cycle,
        )

    def with_calibration(self, calibration: CalibrationMatrix | None) -> "SamplingBackend":
        return SamplingBackend(noise=self.noise, calibration=calibration)
