"""Dense statevector simulation with a shot-based, noisy measurement path.

The simulator stands in for a small noisy quantum processor:

* circuits are lists of gates from a restricted set (state preparation,
  Ry/Rz rotations, CZ/CNOT, and measurement basis changes),
* gate noise is a depolarizing channel unravelled into stochastic Pauli
  insertions on individual shot trajectories,
* readout noise is a per-qubit confusion map applied to classical
  bitstrings after sampling, optionally drifting with the measurement
  cycle index.

Basis-state indexing treats qubit 0 as the most significant bit, matching
the bitstring convention of :mod:`qpband.pauli`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .pauli import MeasurementGroup, PauliString, PauliSum

_NORM_TOL = 1e-12


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


_FIXED_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": np.diag([1, 1j]).astype(complex),
    "Sdg": np.diag([1, -1j]).astype(complex),
}

_FIXED_2Q = {
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}

_ROTATIONS = {"Ry": _ry, "Rz": _rz}

_SELF_ADJOINT = {"X", "H", "CZ", "CNOT"}


@dataclass(frozen=True)
class Gate:
    """One gate application: a kind, target qubits, and an optional angle."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind in _FIXED_1Q:
            arity, needs_angle = 1, False
        elif self.kind in _FIXED_2Q:
            arity, needs_angle = 2, False
        elif self.kind in _ROTATIONS:
            arity, needs_angle = 1, True
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")
        if any(t < 0 for t in self.targets):
            raise ValueError("negative qubit index")
        if needs_angle:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{self.kind} needs a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def matrix(self) -> np.ndarray:
        if self.kind in _FIXED_1Q:
            return _FIXED_1Q[self.kind]
        if self.kind in _FIXED_2Q:
            return _FIXED_2Q[self.kind]
        return _ROTATIONS[self.kind](self.angle)

    def adjoint(self) -> "Gate":
        if self.kind in _SELF_ADJOINT:
            return self
        if self.kind == "S":
            return Gate("Sdg", self.targets)
        if self.kind == "Sdg":
            return Gate("S", self.targets)
        return Gate(self.kind, self.targets, -self.angle)


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on a fixed register."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        for g in self.gates:
            if max(g.targets) >= self.n_qubits:
                raise ValueError(f"gate {g} does not fit {self.n_qubits} qubits")

    def then(self, *gates: Gate) -> "Circuit":
        return Circuit(self.n_qubits, self.gates + gates)


def zero_state(n_qubits: int) -> np.ndarray:
    state = np.zeros(2 ** n_qubits, dtype=complex)
    state[0] = 1.0
    return state


def basis_state(bits: str) -> np.ndarray:
    state = np.zeros(2 ** len(bits), dtype=complex)
    state[int(bits, 2)] = 1.0
    return state


def _apply_matrix(state: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Apply a 1- or 2-qubit matrix to the given axes of the state tensor."""
    tensor = state.reshape((2,) * n_qubits)
    k = len(targets)
    op = mat.reshape((2,) * (2 * k))
    tensor = np.tensordot(op, tensor, axes=(tuple(range(k, 2 * k)), targets))
    # tensordot moves the contracted axes to the front in target order
    tensor = np.moveaxis(tensor, tuple(range(k)), targets)
    return tensor.reshape(-1)


def apply_circuit(state: np.ndarray, circuit: Circuit) -> np.ndarray:
    """Apply every gate of ``circuit`` in order, checking norm preservation."""
    if state.shape != (2 ** circuit.n_qubits,):
        raise ValueError(
            f"state dimension {state.shape} does not match {circuit.n_qubits} qubits"
        )
    out = np.array(state, dtype=complex)
    for gate in circuit.gates:
        out = _apply_matrix(out, gate.matrix(), gate.targets, circuit.n_qubits)
        norm = float(np.vdot(out, out).real)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ArithmeticError(f"norm drifted to {norm} after {gate}")
    return out


_PAULI_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def _apply_pauli(state: np.ndarray, pauli: PauliString, n_qubits: int) -> np.ndarray:
    out = state
    for q, ch in enumerate(pauli.letters):
        if ch != "I":
            out = _apply_matrix(out, _PAULI_1Q[ch], (q,), n_qubits)
    return out


def expectation(state: np.ndarray, h: PauliSum) -> complex:
    """Exact expectation value of ``h`` in ``state``."""
    n = h.n_qubits
    if state.shape != (2 ** n,):
        raise ValueError(f"state dimension {state.shape} does not match {n} qubits")
    total: complex = 0
    for pauli, coeff in h.items():
        total += coeff * np.vdot(state, _apply_pauli(state, pauli, n))
    return complex(total)


@dataclass(frozen=True)
class DriftSchedule:
    """Sinusoidal readout-fidelity drift as a function of measurement cycle."""

    amplitude: float
    period_cycles: float

    def offset(self, cycle: int) -> float:
        return self.amplitude * math.sin(2 * math.pi * cycle / self.period_cycles)


@dataclass(frozen=True)
class NoiseModel:
    """Readout confusion, depolarizing gate noise, and optional drift.

    ``readout`` holds per-qubit diagonal fidelities ``(f00, f11)``: the
    probabilities of reading 0 given 0 and 1 given 1. The corresponding
    column-stochastic confusion matrix is ``[[f00, 1-f11], [1-f00, f11]]``.
    """

    readout: tuple[tuple[float, float], ...]
    depolarizing_1q: float = 0.0
    depolarizing_2q: float = 0.0
    drift: DriftSchedule | None = None

    def __post_init__(self) -> None:
        for pair in self.readout:
            if len(pair) != 2 or not all(0.0 <= f <= 1.0 for f in pair):
                raise ValueError(f"readout fidelities out of [0, 1]: {pair}")
        for p in (self.depolarizing_1q, self.depolarizing_2q):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"depolarizing probability out of [0, 1]: {p}")

    @classmethod
    def ideal(cls, n_qubits: int) -> "NoiseModel":
        return cls(readout=((1.0, 1.0),) * n_qubits)

    @property
    def n_qubits(self) -> int:
        return len(self.readout)

    @property
    def is_noiseless(self) -> bool:
        return (
            self.depolarizing_1q == 0.0
            and self.depolarizing_2q == 0.0
            and self.drift is None
            and all(f == (1.0, 1.0) for f in self.readout)
        )

    def fidelities_at(self, cycle: int) -> np.ndarray:
        """Per-qubit ``(f00, f11)`` with the drift offset applied and clipped."""
        fid = np.array(self.readout, dtype=float)
        if self.drift is not None:
            fid = np.clip(fid + self.drift.offset(cycle), 0.0, 1.0)
        return fid

    def confusion_matrix(self, qubit: int, cycle: int = 0) -> np.ndarray:
        f00, f11 = self.fidelities_at(cycle)[qubit]
        return np.array([[f00, 1.0 - f11], [1.0 - f00, f11]])

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        drift = None
        if data.get("drift"):
            drift = DriftSchedule(
                amplitude=float(data["drift"]["amplitude"]),
                period_cycles=float(data["drift"]["period_cycles"]),
            )
        return cls(
            readout=tuple((float(f0), float(f1)) for f0, f1 in data["readout"]),
            depolarizing_1q=float(data.get("depolarizing_1q", 0.0)),
            depolarizing_2q=float(data.get("depolarizing_2q", 0.0)),
            drift=drift,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "NoiseModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out: dict = {
            "readout": [list(pair) for pair in self.readout],
            "depolarizing_1q": self.depolarizing_1q,
            "depolarizing_2q": self.depolarizing_2q,
        }
        if self.drift is not None:
            out["drift"] = {
                "amplitude": self.drift.amplitude,
                "period_cycles": self.drift.period_cycles,
            }
        return out


@dataclass(frozen=True)
class ShotResult:
    """Bitstring counts from repeated preparation and measurement."""

    counts: dict[str, int]
    shots: int

    def __post_init__(self) -> None:
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("negative count")
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")

    def probabilities(self, n_qubits: int) -> np.ndarray:
        """Empirical distribution over all ``2^n`` bitstrings."""
        p = np.zeros(2 ** n_qubits)
        for bits, count in self.counts.items():
            p[int(bits, 2)] = count / self.shots
        return p


def basis_change_gates(basis: PauliString) -> tuple[Gate, ...]:
    """Gates mapping the given single-qubit measurement bases onto Z.

    X is read after H, Y after Sdg then H, and Z or I directly.
    """
    gates: list[Gate] = []
    for q, ch in enumerate(basis.letters):
        if ch == "X":
            gates.append(Gate("H", (q,)))
        elif ch == "Y":
            gates.append(Gate("Sdg", (q,)))
            gates.append(Gate("H", (q,)))
        elif ch not in ("Z", "I"):
            raise ValueError(f"invalid basis letter {ch!r}")
    return tuple(gates)


def _pauli_errors(n_targets: int) -> list[tuple[str, ...]]:
    """Non-identity Pauli labels on the gate's targets (3 for 1q, 15 for 2q)."""
    if n_targets == 1:
        return [("X",), ("Y",), ("Z",)]
    singles = ("I", "X", "Y", "Z")
    return [(a, b) for a in singles for b in singles if (a, b) != ("I", "I")]


def _full_matrix(mat: np.ndarray, targets: tuple[int, ...], n_qubits: int) -> np.ndarray:
    """Expand a 1- or 2-qubit matrix to the full register (for batched shots)."""
    dim = 2 ** n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    basis = np.eye(dim, dtype=complex)
    for col in range(dim):
        out[:, col] = _apply_matrix(basis[:, col], mat, targets, n_qubits)
    return out


_FULL_GATE_CACHE: dict = {}
_FULL_PAULI_CACHE: dict = {}


def _full_gate_matrix(gate: Gate, n_qubits: int) -> np.ndarray:
    key = (gate.kind, gate.angle, gate.targets, n_qubits)
    if key not in _FULL_GATE_CACHE:
        _FULL_GATE_CACHE[key] = _full_matrix(gate.matrix(), gate.targets, n_qubits)
    return _FULL_GATE_CACHE[key]


def _full_pauli_matrix(letter: str, target: int, n_qubits: int) -> np.ndarray:
    key = (letter, target, n_qubits)
    if key not in _FULL_PAULI_CACHE:
        _FULL_PAULI_CACHE[key] = _full_matrix(_PAULI_1Q[letter], (target,), n_qubits)
    return _FULL_PAULI_CACHE[key]


def _readout_and_count(
    bits: np.ndarray, fidelities: np.ndarray, rng: np.random.Generator, n_qubits: int
) -> dict[str, int]:
    """Push sampled bit arrays through the per-qubit confusion map and tally."""
    flip_prob = np.where(bits == 0, 1.0 - fidelities[:, 0], 1.0 - fidelities[:, 1])
    flips = rng.random(bits.shape) < flip_prob
    observed = bits ^ flips
    weights = 1 << np.arange(n_qubits - 1, -1, -1)
    indices = observed @ weights
    counts: dict[str, int] = {}
    for idx, count in zip(*np.unique(indices, return_counts=True)):
        counts[format(int(idx), f"0{n_qubits}b")] = int(count)
    return counts


def _sample_state_bits(
    probs: np.ndarray, shots: int, rng: np.random.Generator, n_qubits: int
) -> np.ndarray:
    outcomes = rng.choice(len(probs), size=shots, p=probs)
    weights = 1 << np.arange(n_qubits - 1, -1, -1)
    return (outcomes[:, None] & weights[None, :]) > 0


def sample_group(
    circuit: Circuit,
    group: MeasurementGroup,
    shots: int,
    noise: NoiseModel,
    seed: int,
    cycle: int = 0,
) -> ShotResult:
    """Sample bitstrings for one qubit-wise commuting group.

    Appends the group's basis-change gates, simulates with depolarizing
    noise inserted after each gate as stochastic Pauli errors on individual
    trajectories, then passes sampled bitstrings through the readout
    confusion map at the given cycle. Deterministic for a fixed seed.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    n = circuit.n_qubits
    if group.n_qubits != n:
        raise ValueError("group does not match circuit width")
    if noise.n_qubits != n:
        raise ValueError("noise model does not match circuit width")
    full = circuit.then(*basis_change_gates(group.basis))
    rng = np.random.default_rng(seed)
    fidelities = noise.fidelities_at(cycle)

    if noise.depolarizing_1q == 0.0 and noise.depolarizing_2q == 0.0:
        state = apply_circuit(zero_state(n), full)
        probs = np.abs(state) ** 2
        probs /= probs.sum()
        bits = _sample_state_bits(probs, shots, rng, n)
        counts = _readout_and_count(bits.astype(np.uint8), fidelities, rng, n)
        return ShotResult(counts=counts, shots=shots)

    # batched trajectories: one statevector per shot, Pauli errors sampled per gate
    dim = 2 ** n
    states = np.zeros((shots, dim), dtype=complex)
    states[:, 0] = 1.0
    for gate in full.gates:
        states = states @ _full_gate_matrix(gate, n).T
        p_err = noise.depolarizing_1q if gate.n_targets == 1 else noise.depolarizing_2q
        if p_err == 0.0:
            continue
        errors = _pauli_errors(gate.n_targets)
        hit = rng.random(shots) < p_err
        which = rng.integers(len(errors), size=shots)
        for e_idx, letters in enumerate(errors):
            mask = hit & (which == e_idx)
            if not mask.any():
                continue
            for q, ch in zip(gate.targets, letters):
                if ch != "I":
                    states[mask] = states[mask] @ _full_pauli_matrix(ch, q, n).T
    probs = np.abs(states) ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs, axis=1)
    u = rng.random(shots)
    outcomes = (cum < u[:, None]).sum(axis=1)
    weights = 1 << np.arange(n - 1, -1, -1)
    bits = ((outcomes[:, None] & weights[None, :]) > 0).astype(np.uint8)
    counts = _readout_and_count(bits, fidelities, rng, n)
    return ShotResult(counts=counts, shots=shots)


def _parities(n_qubits: int, support: tuple[int, ...]) -> np.ndarray:
    """``(-1)**(bit parity on support)`` for every basis-state index."""
    indices = np.arange(2 ** n_qubits)
    acc = np.zeros(2 ** n_qubits, dtype=np.int64)
    for q in support:
        acc ^= (indices >> (n_qubits - 1 - q)) & 1
    return 1.0 - 2.0 * acc


def expectation_from_counts(
    group: MeasurementGroup,
    result: "ShotResult | np.ndarray",
    shots: int | None = None,
) -> tuple[complex, float]:
    """Estimate the group's operator sum from measured bitstrings.

    ``result`` may be a :class:`ShotResult` or a probability vector (for
    mitigated distributions; pass the underlying ``shots`` so the binomial
    error propagation stays meaningful). The standard error treats terms as
    independent.
    """
    n = group.n_qubits
    if isinstance(result, ShotResult):
        probs = result.probabilities(n)
        shots = result.shots
    else:
        probs = np.asarray(getattr(result, "p", result), dtype=float)
        if probs.shape != (2 ** n,):
            raise ValueError("distribution length does not match group width")
        if shots is None:
            raise ValueError("pass shots when estimating from a bare distribution")
    if shots <= 0 or probs.sum() <= 0:
        raise ValueError("empty measurement result")
    probs = probs / probs.sum()

    value: complex = 0
    var = 0.0
    for pauli, coeff in group.members:
        mean = float(np.dot(probs, _parities(n, pauli.support())))
        value += coeff * mean
        var += abs(coeff) ** 2 * max(0.0, 1.0 - mean ** 2) / shots
    return value, math.sqrt(var)
