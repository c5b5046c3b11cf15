"""Small dense complex linear algebra for qubit operators.

Operators are plain ``numpy`` arrays of dtype ``complex128``: a ``Mat2`` is a
``(2, 2)`` array, a state vector is a 1-D array of length ``2**n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionCap, NonUnitary

TWO_PI = 2.0 * np.pi
UNITARY_TOL = 1e-10
DEGENERATE_TOL = 1e-9
MAX_QUBITS = 12

KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)


@dataclass(frozen=True)
class EigenPair:
    """Eigenphases in ``[0, 2pi)`` and the matching orthonormal eigenvectors."""

    phases: tuple[float, float]
    vectors: tuple[np.ndarray, np.ndarray]

    def reconstruct(self) -> np.ndarray:
        return sum(
            np.exp(1j * th) * np.outer(v, v.conj())
            for th, v in zip(self.phases, self.vectors)
        )


def as_mat2(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def unitary_check(m, tol: float = UNITARY_TOL) -> bool:
    """True iff ``max|M^dagger M - I| < tol``."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.all(np.isfinite(a)):
        return False
    return bool(np.max(np.abs(dagger(a) @ a - np.eye(a.shape[0]))) < tol)


def require_unitary(m, name: str = "operator", tol: float = UNITARY_TOL) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if not unitary_check(a, tol):
        raise NonUnitary(f"{name} is not unitary within {tol:g}")
    return a


def wrap_phase(theta) -> float:
    """Reduce an angle to the half-open range ``[0, 2pi)``."""
    t = float(np.mod(theta, TWO_PI))
    return 0.0 if t >= TWO_PI else t


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Normalize ``v`` and rotate its global phase so the largest component is real-positive.

    Ties go to the first component.
    """
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    k = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    return v * np.exp(-1j * np.angle(v[k]))


def _circular_diff(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def eigenphases_2x2(u) -> EigenPair:
    """Closed-form eigendecomposition of a 2x2 unitary.

    The first eigenvalue is the root of the characteristic polynomial whose
    discriminant branch is aligned with ``(a - d)``, so a diagonal matrix keeps
    its diagonal order. The second eigenvector is the orthogonal complement of
    the first, which is exact for normal matrices.
    """
    u = require_unitary(as_mat2(u), "U")
    a, b = u[0, 0], u[0, 1]
    c, d = u[1, 0], u[1, 1]
    half = (a - d) / 2
    disc = np.sqrt(half * half + b * c)
    if abs(half) > 1e-14 and (np.conj(half) * disc).real < 0:
        disc = -disc
    lam1 = (a + d) / 2 + disc
    lam2 = (a + d) / 2 - disc
    th1, th2 = wrap_phase(np.angle(lam1)), wrap_phase(np.angle(lam2))
    if _circular_diff(th1, th2) < DEGENERATE_TOL:
        ph = wrap_phase(np.angle((a + d) / 2))
        return EigenPair((ph, ph), (KET_H.copy(), KET_V.copy()))

    # two candidate kernel vectors of (U - lam1 I); take the better conditioned one
    r1 = np.array([b, lam1 - a])
    r2 = np.array([lam1 - d, c])
    v1 = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
    v1 = canonical_phase(v1)
    v2 = canonical_phase(np.array([-np.conj(v1[1]), np.conj(v1[0])]))
    # Rayleigh quotients are more accurate than the raw roots
    th1 = wrap_phase(np.angle(np.vdot(v1, u @ v1)))
    th2 = wrap_phase(np.angle(np.vdot(v2, u @ v2)))
    return EigenPair((th1, th2), (v1, v2))


def phase_invariant_distance(a, b) -> float:
    """``1 - |Tr(A^dagger B)| / 2``; zero iff ``A = e^{i phi} B``."""
    a = require_unitary(as_mat2(a), "A")
    b = require_unitary(as_mat2(b), "B")
    val = 1.0 - abs(np.trace(dagger(a) @ b)) / 2.0
    return float(min(max(val, 0.0), 1.0))


def state_fidelity(a, b) -> float:
    """``|<a|b>|^2`` of the normalized inputs."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def state_distance(a, b) -> float:
    """Global-phase-insensitive state distance ``1 - |<a|b>|`` in ``[0, 1]``."""
    return float(max(0.0, 1.0 - np.sqrt(state_fidelity(a, b))))


def tensor_power(u, n: int, cap: int = MAX_QUBITS) -> np.ndarray:
    """Kronecker power ``U^{(x)n}`` as a dense ``2**n`` square matrix."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > cap:
        raise DimensionCap(f"n={n} exceeds the qubit cap {cap}")
    u = as_mat2(u)
    return reduce(np.kron, [u] * n)


def apply_each_qubit(u, state: np.ndarray) -> np.ndarray:
    """Apply ``U^{(x)n}`` to ``state`` without forming the dense power."""
    u = as_mat2(u)
    n = int(round(np.log2(state.size)))
    psi = np.asarray(state, dtype=complex).reshape((2,) * n)
    for axis in range(n):
        psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def kron_states(vectors) -> np.ndarray:
    return reduce(np.kron, vectors)


def mat_to_json(m) -> list:
    """Row-major nested lists of ``[re, im]`` pairs."""
    a = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def mat_from_json(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise ValueError("matrix JSON must be rows of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def state_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def state_from_json(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.ndim != 2 or a.shape[-1] != 2:
        raise ValueError("state JSON must be a list of [re, im] pairs")
    return a[:, 0] + 1j * a[:, 1]


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """U(2) element from two random phases and one rotation, with a random global phase."""
    alpha, beta, delta = rng.uniform(0, TWO_PI, size=3)
    # cos of the rotation half-angle distributed so the result is Haar on SU(2)
    gamma = 2 * np.arccos(np.sqrt(rng.uniform()))
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    ry = np.array([[np.cos(gamma / 2), -np.sin(gamma / 2)], [np.sin(gamma / 2), np.cos(gamma / 2)]])
    return np.exp(1j * delta) * rz(alpha) @ ry @ rz(beta)
