"""Parallel (entangled-input) discrimination and the resource comparison between schemes."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import qmat
from .arc import SNAP_TOL, eigenphase_arc, min_runs
from .errors import DimensionCap, Infeasible, NotDistinguishable, VerificationFailed

WEIGHT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ParallelProtocol:
    n_runs: int
    theta: float
    weights: np.ndarray
    input_state: np.ndarray
    output_u: np.ndarray
    output_v: np.ndarray

    def to_json(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "theta_rad": self.theta,
            "weights": [float(p) for p in self.weights],
            "input_state": qmat.state_to_json(self.input_state),
            "output_u": qmat.state_to_json(self.output_u),
            "output_v": qmat.state_to_json(self.output_v),
        }


@dataclass(frozen=True)
class ResourceReport:
    scheme: str
    circuit_uses: int
    aux_op_count: int
    total_sequential_steps: int
    qubit_count: int
    needs_entanglement: bool
    needs_nonlocal_measurement: bool

    def to_json(self) -> dict:
        return asdict(self)


def weight_residual(weights, theta: float) -> float:
    """``|sum_k p_k e^{i k theta}|``."""
    k = np.arange(len(weights))
    return float(abs(np.dot(weights, np.exp(1j * k * theta))))


def _barycentric_origin(points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of 0 in the triangle of three complex points."""
    a = np.vstack([points.real, points.imag, np.ones(3)])
    return np.linalg.solve(a, np.array([0.0, 0.0, 1.0]))


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(y - css[rho] / (rho + 1), 0.0)


def _projected_descent(theta, n_runs, max_iter=10_000, target=1e-10):
    k = np.arange(n_runs + 1)
    a = np.vstack([np.cos(k * theta), np.sin(k * theta)])
    step = 1.0 / (2 * np.linalg.norm(a, 2) ** 2)
    p = np.full(n_runs + 1, 1.0 / (n_runs + 1))
    y, t = p.copy(), 1.0
    for _ in range(max_iter):
        p_next = project_simplex(y - step * 2 * a.T @ (a @ y))
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = p_next + (t - 1) / t_next * (p_next - p)
        p, t = p_next, t_next
        if np.linalg.norm(a @ p) < target:
            break
    return p


def feasible_weights(theta: float, n_runs: int, tol: float = WEIGHT_TOL) -> np.ndarray:
    """Probability weights ``p_0..p_N`` with ``sum_k p_k e^{i k theta} = 0``.

    Tries an antipodal pair first, then a triangle of points around the
    origin, then projected descent on ``|sum|^2`` over the simplex.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    if n_runs * theta < math.pi - SNAP_TOL:
        raise Infeasible(f"N * theta = {n_runs * theta:.6g} < pi")
    z = np.exp(1j * np.arange(n_runs + 1) * theta)
    p = np.zeros(n_runs + 1)

    for d in range(1, n_runs + 1):
        off = (d * theta - math.pi) % qmat.TWO_PI
        if min(off, qmat.TWO_PI - off) < tol:
            p[0] = p[d] = 0.5
            return p

    triples = [(0, m, n_runs) for m in range(n_runs - 1, 0, -1)]
    triples += [t for t in itertools.combinations(range(n_runs + 1), 3) if t not in triples]
    for tri in triples:
        try:
            bary = _barycentric_origin(z[list(tri)])
        except np.linalg.LinAlgError:
            continue
        if np.all(bary >= -1e-14):
            p[:] = 0.0
            p[list(tri)] = np.clip(bary, 0.0, None)
            p /= p.sum()
            if weight_residual(p, theta) < tol:
                return p

    p = _projected_descent(theta, n_runs)
    if weight_residual(p, theta) >= tol:
        raise Infeasible(f"no zero-sum weights found (residual {weight_residual(p, theta):.3g})")
    return p


def build_parallel(u, v, tol: float = WEIGHT_TOL, cap: int = qmat.MAX_QUBITS,
                   orderings=None) -> ParallelProtocol:
    """N-qubit input ``sum_k sqrt(p_k) e1^{(x)k} (x) e2^{(x)(N-k)}`` with orthogonal outputs.

    ``orderings`` optionally maps a weight index ``k`` to the tensor slots that
    hold ``e1``; by default they are the first ``k`` slots.
    """
    u = qmat.require_unitary(qmat.as_mat2(u), "U")
    v = qmat.require_unitary(qmat.as_mat2(v), "V")
    w = u.conj().T @ v
    arc = eigenphase_arc(w)
    plan = min_runs(arc, SNAP_TOL)
    if not plan.distinguishable or arc.theta <= tol:
        raise NotDistinguishable("operations differ at most by a global phase")
    n = plan.n_runs
    if n > cap:
        raise DimensionCap(f"parallel scheme needs {n} qubits, cap is {cap}")

    eig = qmat.eigenphases_2x2(w)
    e1, e2 = eig.vectors
    # W^{(x)N} acts on a product with k copies of e1 as e^{i N th2} e^{i k (th1 - th2)}
    delta = (eig.phases[0] - eig.phases[1]) % qmat.TWO_PI
    weights = feasible_weights(delta, n, tol)

    psi = np.zeros(2 ** n, dtype=complex)
    for k, pk in enumerate(weights):
        if pk == 0:
            continue
        slots = set(orderings[k]) if orderings and k in orderings else set(range(k))
        if len(slots) != k:
            raise ValueError(f"ordering for k={k} must name exactly {k} slots")
        psi += math.sqrt(pk) * qmat.kron_states([e1 if i in slots else e2 for i in range(n)])

    out_u = qmat.apply_each_qubit(u, psi)
    out_v = qmat.apply_each_qubit(v, psi)
    ov = abs(np.vdot(out_u, out_v))
    if ov >= tol:
        raise VerificationFailed(f"parallel outputs overlap {ov:.3g}")
    return ParallelProtocol(n_runs=n, theta=arc.theta, weights=weights,
                            input_state=psi, output_u=out_u, output_v=out_v)


def compare_schemes(u, v, tol: float = SNAP_TOL) -> tuple[ResourceReport, ResourceReport]:
    u = qmat.require_unitary(qmat.as_mat2(u), "U")
    v = qmat.require_unitary(qmat.as_mat2(v), "V")
    plan = min_runs(eigenphase_arc(u.conj().T @ v), tol)
    if not plan.distinguishable:
        raise NotDistinguishable("operations differ at most by a global phase")
    n = plan.n_runs
    seq = ResourceReport("sequential", circuit_uses=n, aux_op_count=n - 1,
                         total_sequential_steps=2 * n - 1, qubit_count=1,
                         needs_entanglement=False, needs_nonlocal_measurement=False)
    par = ResourceReport("parallel", circuit_uses=n, aux_op_count=0,
                         total_sequential_steps=1, qubit_count=n,
                         needs_entanglement=n >= 2, needs_nonlocal_measurement=n >= 2)
    return seq, par
