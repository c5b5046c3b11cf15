"""Eigenphase arc of a unitary and the minimal number of uses for perfect discrimination."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmat import TWO_PI, eigenphases_2x2, require_unitary, wrap_phase

SNAP_TOL = 1e-9


@dataclass(frozen=True)
class ArcResult:
    theta: float
    phases: tuple[float, ...]
    largest_gap: float


@dataclass(frozen=True)
class DiscriminationPlan:
    n_runs: int
    distinguishable: bool
    theta: float


def eigenphase_arc(w) -> ArcResult:
    """Length of the smallest arc of the unit circle containing every eigenvalue of ``w``.

    Works for any square unitary; the 2x2 case uses the closed-form solver.
    """
    w = require_unitary(w, "W")
    if w.shape == (2, 2):
        phases = list(eigenphases_2x2(w).phases)
    else:
        phases = [wrap_phase(np.angle(z)) for z in np.linalg.eigvals(w)]
    phases.sort()
    gaps = [b - a for a, b in zip(phases, phases[1:])]
    gaps.append(phases[0] + TWO_PI - phases[-1])
    largest = max(gaps)
    theta = min(max(TWO_PI - largest, 0.0), TWO_PI)
    return ArcResult(theta=theta, phases=tuple(phases), largest_gap=largest)


def min_runs(arc: ArcResult | float, tol: float = SNAP_TOL) -> DiscriminationPlan:
    """Smallest ``N`` with ``N * theta >= pi``.

    ``pi / theta`` within ``tol`` of an integer snaps to it, so floating-point
    noise on exact arcs such as ``pi/2`` cannot bump ``N`` by one.
    """
    theta = arc.theta if isinstance(arc, ArcResult) else float(arc)
    if theta <= tol:
        return DiscriminationPlan(n_runs=0, distinguishable=False, theta=theta)
    if theta >= math.pi - tol:
        return DiscriminationPlan(n_runs=1, distinguishable=True, theta=theta)
    ratio = math.pi / theta
    nearest = round(ratio)
    n = int(nearest) if abs(ratio - nearest) < tol else math.ceil(ratio)
    return DiscriminationPlan(n_runs=n, distinguishable=True, theta=theta)


def plan_for(u, v, tol: float = SNAP_TOL) -> DiscriminationPlan:
    """Arc and run count for the pair ``(U, V)`` via ``W = U^dagger V``."""
    u = require_unitary(u, "U")
    v = require_unitary(v, "V")
    return min_runs(eigenphase_arc(u.conj().T @ v), tol)
