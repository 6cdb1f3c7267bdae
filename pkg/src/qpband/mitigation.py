"""Readout-error mitigation, zero-noise extrapolation, and repeat averaging.

REM models readout as ``p_noisy = M p_ideal`` with a column-stochastic
calibration matrix ``M`` measured by preparing every computational basis
state; mitigation solves the linear system and projects back onto the
probability simplex. ZNE amplifies gate noise by replacing each gate ``A``
with ``A A' A`` (``A'`` the adjoint) and extrapolates measured values
linearly to the zero-noise point. Repeat averaging re-runs a seeded
computation at advancing measurement cycles so that slowly drifting noise
biases cancel in the mean.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .simulator import Circuit, Gate, ShotResult

_COLUMN_TOL = 1e-12


class MitigationError(RuntimeError):
    """Mitigation could not be applied to the given data."""


@dataclass(frozen=True)
class CalibrationMatrix:
    """Empirical readout confusion over the full register."""

    m: np.ndarray
    shots_per_basis_state: int
    cycle: int

    def __post_init__(self) -> None:
        if self.m.ndim != 2 or self.m.shape[0] != self.m.shape[1]:
            raise ValueError("calibration matrix must be square")
        if np.any(self.m < -_COLUMN_TOL) or np.any(self.m > 1 + _COLUMN_TOL):
            raise ValueError("calibration entries must be probabilities")
        if np.max(np.abs(self.m.sum(axis=0) - 1.0)) > _COLUMN_TOL:
            raise ValueError("calibration columns must sum to 1")

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.m.shape[0])))


@dataclass(frozen=True)
class Distribution:
    """A normalized probability vector over bitstrings."""

    p: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.p, dtype=float)
        if np.any(arr < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(arr.sum() - 1.0) > _COLUMN_TOL:
            raise ValueError(f"distribution sums to {arr.sum()}, not 1")
        object.__setattr__(self, "p", arr)

    @classmethod
    def from_counts(cls, result: ShotResult, n_qubits: int) -> "Distribution":
        return cls(result.probabilities(n_qubits))


@dataclass(frozen=True)
class FoldFactor:
    """Odd noise-amplification factor: 1 leaves a circuit unchanged."""

    lam: int

    def __post_init__(self) -> None:
        if self.lam < 1 or self.lam % 2 == 0:
            raise ValueError(f"fold factor must be an odd positive integer, got {self.lam}")


def measure_calibration(
    backend,
    n_qubits: int,
    shots: int = 10_000,
    cycle: int = 0,
    seed: int = 0,
) -> CalibrationMatrix:
    """Measure the confusion matrix by preparing each basis state with X gates.

    Column ``y`` is the empirical outcome distribution when preparing basis
    state ``y`` and measuring in the computational basis.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    dim = 2 ** n_qubits
    m = np.zeros((dim, dim))
    for y in range(dim):
        bits = format(y, f"0{n_qubits}b")
        gates = tuple(Gate("X", (q,)) for q, b in enumerate(bits) if b == "1")
        circuit = Circuit(n_qubits, gates)
        result = backend.sample(circuit, shots=shots, seed=_column_seed(seed, y), cycle=cycle)
        m[:, y] = result.probabilities(n_qubits)
    return CalibrationMatrix(m=m, shots_per_basis_state=shots, cycle=cycle)


def _column_seed(seed: int, column: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(column,)).generate_state(1)[0])


def apply_rem(noisy: Distribution, cal: CalibrationMatrix) -> Distribution:
    """Invert the calibration map and project back onto the simplex.

    The linear system is solved by least squares; negative components are
    clipped to zero and the vector renormalized, so the output is always a
    valid distribution.
    """
    if noisy.p.shape[0] != cal.m.shape[0]:
        raise ValueError("distribution and calibration dimensions differ")
    cond = float(np.linalg.cond(cal.m))
    if not math.isfinite(cond) or cond > 1e12:
        raise MitigationError(
            f"calibration matrix is numerically singular (condition number {cond:.3e})"
        )
    solution, *_ = np.linalg.lstsq(cal.m, noisy.p, rcond=None)
    clipped = np.clip(solution, 0.0, None)
    total = clipped.sum()
    if total <= 0:
        raise MitigationError("mitigated distribution vanished after clipping")
    return Distribution(clipped / total)


def fold_circuit(circuit: Circuit, factor: FoldFactor | int) -> Circuit:
    """Replace every gate A with the length-``lam`` sequence A (A' A)^k.

    The unitary action is unchanged while the gate count, and with it the
    accumulated gate noise, scales by ``lam``.
    """
    if isinstance(factor, int):
        factor = FoldFactor(factor)
    repeats = (factor.lam - 1) // 2
    gates: list[Gate] = []
    for gate in circuit.gates:
        gates.append(gate)
        for _ in range(repeats):
            gates.append(gate.adjoint())
            gates.append(gate)
    return Circuit(circuit.n_qubits, tuple(gates))


def zne_extrapolate(
    points: Sequence[tuple[float, float, float]]
) -> tuple[float, float]:
    """Ordinary least-squares linear fit in the fold factor, evaluated at 0.

    ``points`` holds ``(lam, value, stderr)`` triples. The returned standard
    error propagates the per-point errors through the fixed fit weights.
    """
    if len(points) < 2:
        raise ValueError("need at least two noise levels to extrapolate")
    lams = [p[0] for p in points]
    if len(set(lams)) != len(lams):
        raise ValueError(f"duplicate fold factors in {lams}")
    x = np.array(lams, dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    err = np.array([p[2] for p in points], dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    weights = np.linalg.pinv(design)[0]  # row mapping y -> intercept
    value0 = float(weights @ y)
    stderr0 = float(np.sqrt(np.sum((weights * err) ** 2)))
    return value0, stderr0


class RepeatError(RuntimeError):
    """A repeated task failed; partial samples are attached."""

    def __init__(self, message: str, samples: list[float]):
        super().__init__(message)
        self.samples = samples


@dataclass(frozen=True)
class RepeatSummary:
    mean: float
    sem: float
    samples: np.ndarray


def repeat_average(
    task: Callable[[int], float],
    repeats: int = 40,
    jobs: int = 1,
) -> RepeatSummary:
    """Run ``task(repeat_index)`` ``repeats`` times and average the outcomes.

    The task is expected to derive a fresh seed and an advancing measurement
    cycle from its index, so independent repeats sample different noise
    conditions. Raises :class:`RepeatError` with the partial sample list if
    any repeat fails.
    """
    if repeats < 2:
        raise ValueError("repeats must be at least 2")
    samples: list[float] = []
    try:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                for value in pool.map(task, range(repeats)):
                    samples.append(float(value))
        else:
            for r in range(repeats):
                samples.append(float(task(r)))
    except Exception as exc:
        raise RepeatError(f"repeat {len(samples)} failed: {exc}", samples) from exc
    arr = np.array(samples)
    sem = float(arr.std(ddof=1) / math.sqrt(repeats))
    return RepeatSummary(mean=float(arr.mean()), sem=sem, samples=arr)
