"""The two-qubit hardware-style ansatz and its sequential optimizer.

The ansatz prepares the |11> reference with X gates, then applies a pair of
Ry rotations, one CZ entangler, and a second pair of Ry rotations: four
parameters and seven gates in total. Because every parameter enters through
an Ry rotation, the energy restricted to any single parameter is an exact
sinusoid E(x) = a0 + a1*cos(x - a2), so each sequential update can jump
straight to the axis minimizer from three evaluations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .pauli import PauliSum, group_qubitwise
from .simulator import Circuit, Gate

N_PARAMETERS = 4
ANSATZ_QUBITS = 2

_FLAT_TOL = 1e-12


def build_ansatz(params: Sequence[float]) -> Circuit:
    """The X-X | Ry-Ry | CZ | Ry-Ry circuit on two qubits."""
    if len(params) != N_PARAMETERS:
        raise ValueError(f"ansatz takes {N_PARAMETERS} parameters, got {len(params)}")
    t1, t2, t3, t4 = (float(p) for p in params)
    for p in (t1, t2, t3, t4):
        if not math.isfinite(p):
            raise ValueError("ansatz parameters must be finite")
    return Circuit(
        ANSATZ_QUBITS,
        (
            Gate("X", (0,)),
            Gate("X", (1,)),
            Gate("Ry", (0,), t1),
            Gate("Ry", (1,), t2),
            Gate("CZ", (0, 1)),
            Gate("Ry", (0,), t3),
            Gate("Ry", (1,), t4),
        ),
    )


def estimate_energy(
    h: PauliSum,
    params: Sequence[float],
    backend,
    shots_per_group: int = 5_000,
    seed: int = 0,
    cycle: int = 0,
) -> tuple[float, float]:
    """Grouped estimate of the energy of the ansatz state.

    The identity part of ``h`` is added exactly; the remaining terms are
    partitioned qubit-wise and each group gets ``shots_per_group`` shots.
    The standard error combines group errors in quadrature.
    """
    if shots_per_group <= 0:
        raise ValueError("shots_per_group must be positive")
    constant, rest = h.split_identity()
    circuit = build_ansatz(params)
    total = complex(constant)
    var = 0.0
    for g_index, group in enumerate(group_qubitwise(rest)):
        value, err = backend.group_expectation(
            circuit,
            group,
            shots_per_group,
            seed=_group_seed(seed, g_index),
            cycle=cycle,
        )
        total += value
        var += err ** 2
    if abs(total.imag) > 1e-8:
        raise ArithmeticError(f"energy estimate has imaginary part {total.imag}")
    return float(total.real), math.sqrt(var)


def _group_seed(seed: int, group_index: int) -> int:
    return int(
        np.random.SeedSequence(entropy=seed, spawn_key=(group_index,)).generate_state(1)[0]
    )


@dataclass(frozen=True)
class TracePoint:
    params: tuple[float, ...]
    energy: float
    stderr: float
    shots: int


@dataclass
class OptimizationTrace:
    """One entry per parameter update performed."""

    points: list[TracePoint]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "theta1", "theta2", "theta3", "theta4",
                 "energy_hartree", "stderr_hartree", "shots"]
            )
            for i, pt in enumerate(self.points):
                writer.writerow(
                    [i, *[f"{p!r}" for p in pt.params], f"{pt.energy!r}",
                     f"{pt.stderr!r}", pt.shots]
                )


def _wrap_angle(x: float) -> float:
    """Map onto (-pi, pi], keeping the +pi boundary at +pi."""
    wrapped = (x + math.pi) % (2 * math.pi) - math.pi
    return math.pi if wrapped == -math.pi else wrapped


def smo_optimize(
    initial: Sequence[float],
    estimator: Callable[[Sequence[float]], tuple[float, float]],
    sweeps: int = 3,
    shots_per_evaluation: int = 0,
) -> tuple[list[float], OptimizationTrace]:
    """Sequential single-parameter minimization over full sweeps.

    For each parameter in round-robin order the energy is evaluated at the
    current angle and at +/- pi/2 offsets, the exact sinusoid through the
    three points is reconstructed, and the parameter jumps to its analytic
    minimizer. A flat axis (amplitude below 1e-12) leaves the parameter
    unchanged. With a stochastic estimator, fresh randomness must be used
    for every evaluation; reusing seeds would let the optimizer fit one
    noise realization.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    params = [float(p) for p in initial]
    trace = OptimizationTrace(points=[])
    for _ in range(sweeps):
        for i in range(len(params)):
            theta = params[i]
            e_center, s_center = estimator(params)
            params[i] = theta + math.pi / 2
            e_plus, s_plus = estimator(params)
            params[i] = theta - math.pi / 2
            e_minus, s_minus = estimator(params)
            params[i] = theta

            a0 = (e_plus + e_minus) / 2.0
            cos_part = e_center - a0
            sin_part = (e_minus - e_plus) / 2.0
            a1 = math.hypot(cos_part, sin_part)
            if a1 >= _FLAT_TOL:
                phi = math.atan2(sin_part, cos_part)
                params[i] = _wrap_angle(theta - phi + math.pi)
            minimum = a0 - a1
            stderr = _propagate_min_error(
                cos_part, sin_part, a1, (s_center, s_plus, s_minus)
            )
            trace.points.append(
                TracePoint(
                    params=tuple(params),
                    energy=minimum,
                    stderr=stderr,
                    shots=3 * shots_per_evaluation,
                )
            )
    return params, trace


def _propagate_min_error(
    cos_part: float, sin_part: float, a1: float, errs: tuple[float, float, float]
) -> float:
    """First-order error of a0 - a1 with respect to the three evaluations."""
    s_center, s_plus, s_minus = errs
    if a1 < _FLAT_TOL:
        d_center, d_plus, d_minus = 0.0, 0.5, 0.5
    else:
        c, s = cos_part / a1, sin_part / a1
        d_center = -c
        d_plus = 0.5 + (c + s) / 2.0
        d_minus = 0.5 + (c - s) / 2.0
    return math.sqrt(
        (d_center * s_center) ** 2 + (d_plus * s_plus) ** 2 + (d_minus * s_minus) ** 2
    )
