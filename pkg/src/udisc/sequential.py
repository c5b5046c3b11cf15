"""Sequential (entanglement-free) perfect discrimination of two qubit unitaries.

The unknown box is applied ``N`` times to a single qubit with fixed auxiliary
unitaries ``X_1 .. X_{N-1}`` in between::

    out_U = U X_{N-1} U ... X_1 U |psi>,   out_V = V X_{N-1} V ... X_1 V |psi>

Working in the frame of ``W = U^dagger V``, one auxiliary ``X`` (a real rotation
by ``alpha`` in the eigenbasis of ``W``) makes the eigenvalues of
``M = X^dagger W X W^{N-1}`` antipodal; the balanced superposition of the
eigenvectors of the physical round-trip operator then gives orthogonal outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import qmat
from .arc import SNAP_TOL, eigenphase_arc, min_runs
from .errors import FormulaDomain, NotDistinguishable, VerificationFailed

VERIFY_TOL = 1e-9
PAPER_VALUE_TOL = 5e-3
PLACEMENTS = ("auto", "paper", "telescoping")


@dataclass(frozen=True, eq=False)
class SequentialProtocol:
    n_runs: int
    theta: float
    alpha: float
    aux_w_frame: np.ndarray
    aux_physical: tuple[np.ndarray, ...]
    input_state: np.ndarray
    output_u: np.ndarray
    output_v: np.ndarray
    measurement_basis: np.ndarray
    placement: str = "telescoping"
    # eigenvectors of P_U^dagger P_V whose balanced sum is input_state
    input_basis: tuple[np.ndarray, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "theta_rad": self.theta,
            "alpha_rad": self.alpha,
            "placement": self.placement,
            "aux_physical": [qmat.mat_to_json(x) for x in self.aux_physical],
            "aux_w_frame": qmat.mat_to_json(self.aux_w_frame),
            "input_state": qmat.state_to_json(self.input_state),
            "output_u": qmat.state_to_json(self.output_u),
            "output_v": qmat.state_to_json(self.output_v),
            "measurement_basis": qmat.state_to_json(self.measurement_basis),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SequentialProtocol":
        return cls(
            n_runs=int(obj["n_runs"]),
            theta=float(obj.get("theta_rad", float("nan"))),
            alpha=float(obj["alpha_rad"]),
            aux_w_frame=qmat.mat_from_json(obj["aux_w_frame"]),
            aux_physical=tuple(qmat.mat_from_json(x) for x in obj["aux_physical"]),
            input_state=qmat.state_from_json(obj["input_state"]),
            output_u=qmat.state_from_json(obj["output_u"]),
            output_v=qmat.state_from_json(obj["output_v"]),
            measurement_basis=qmat.state_from_json(obj["measurement_basis"]),
            placement=obj.get("placement", "telescoping"),
        )


def aux_rotation_angle(n_runs: int, theta: float) -> float:
    """Rotation angle of the auxiliary operation in the eigenbasis of ``W``.

    ``alpha = arctan sqrt(-cos(N theta / 2) / cos((N - 2) theta / 2))``, the
    value that makes ``Tr(X^dagger W X W^{N-1})`` vanish.
    """
    if n_runs < 2:
        raise ValueError("the auxiliary rotation needs n_runs >= 2")
    num = -math.cos(n_runs * theta / 2)
    den = math.cos((n_runs - 2) * theta / 2)
    if den <= 0:
        raise FormulaDomain(f"N={n_runs} is too large for theta={theta!r}")
    radicand = num / den
    if radicand < -1e-9:
        raise FormulaDomain(f"N={n_runs} is too small for theta={theta!r} (radicand {radicand:.3g})")
    return math.atan(math.sqrt(max(radicand, 0.0)))


def rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]], dtype=complex)


def apply_sequence(box, aux_ops, state) -> np.ndarray:
    """``box X_{N-1} box ... X_1 box |state>``."""
    out = box @ np.asarray(state, dtype=complex)
    for x in aux_ops:
        out = box @ (x @ out)
    return out


def sequence_operator(box, aux_ops) -> np.ndarray:
    return apply_sequence(box, aux_ops, np.eye(2, dtype=complex))


def _overlap(a, b) -> float:
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


def _candidate_aux(u, x, n_runs, placement):
    ident = np.eye(2, dtype=complex)
    ud = u.conj().T
    if placement in ("auto", "paper"):
        # X inserted as-is after N-1 uses; X^dagger is the alpha -> -alpha mirror
        for xc in (x, x.conj().T):
            yield "paper", [ident] * (n_runs - 2) + [xc]
    if placement in ("auto", "telescoping"):
        # X_i = U^dagger, X_{N-1} = X U^dagger makes P_U^dagger P_V = X^dagger W X W^{N-1}
        yield "telescoping", [ud] * (n_runs - 2) + [x @ ud]


def build_sequential(u, v, tol: float = VERIFY_TOL, placement: str = "auto") -> SequentialProtocol:
    """Synthesize a verified sequential protocol discriminating ``u`` from ``v``.

    ``placement`` selects how the W-frame auxiliary maps to the physical
    ``X_i``: ``"paper"`` inserts ``X`` unchanged, ``"telescoping"`` is exact for
    any pair, ``"auto"`` prefers ``"paper"`` when it verifies.
    """
    if placement not in PLACEMENTS:
        raise ValueError(f"placement must be one of {PLACEMENTS}")
    u = qmat.require_unitary(qmat.as_mat2(u), "U")
    v = qmat.require_unitary(qmat.as_mat2(v), "V")
    w = u.conj().T @ v
    arc = eigenphase_arc(w)
    plan = min_runs(arc, SNAP_TOL)
    if not plan.distinguishable or arc.theta <= tol:
        raise NotDistinguishable("operations differ at most by a global phase")
    n = plan.n_runs

    if n == 1:
        alpha = 0.0
        x = np.eye(2, dtype=complex)
        candidates = [("direct", [])]
    else:
        alpha = aux_rotation_angle(n, arc.theta)
        g = np.column_stack(qmat.eigenphases_2x2(w).vectors)
        x = g @ rotation(alpha) @ g.conj().T
        candidates = list(_candidate_aux(u, x, n, placement))

    best = math.inf
    for name, aux in candidates:
        p_u = sequence_operator(u, aux)
        p_v = sequence_operator(v, aux)
        round_trip = p_u.conj().T @ p_v
        eig = qmat.eigenphases_2x2(round_trip)
        psi = (eig.vectors[0] + eig.vectors[1]) / math.sqrt(2)
        out_u = p_u @ psi
        out_v = p_v @ psi
        ov = _overlap(out_u, out_v)
        best = min(best, ov)
        if ov < tol:
            out_u = qmat.canonical_phase(out_u)
            return SequentialProtocol(
                n_runs=n,
                theta=arc.theta,
                alpha=alpha,
                aux_w_frame=x,
                aux_physical=tuple(aux),
                input_state=psi,
                output_u=out_u,
                output_v=qmat.canonical_phase(out_v),
                measurement_basis=out_u,
                placement=name,
                input_basis=eig.vectors,
            )
    raise VerificationFailed(f"no placement produced orthogonal outputs (best overlap {best:.3g})")


def verify_protocol(p: SequentialProtocol, u, v) -> float:
    """Recompute both outputs from scratch and return ``|<out_U|out_V>|``."""
    u = qmat.as_mat2(u)
    v = qmat.as_mat2(v)
    out_u = apply_sequence(u, p.aux_physical, p.input_state)
    out_v = apply_sequence(v, p.aux_physical, p.input_state)
    return _overlap(out_u, out_v)


def with_input_state(p: SequentialProtocol, psi, u, v) -> SequentialProtocol:
    """Copy of ``p`` driven by a different input state, outputs recomputed."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    out_u = qmat.canonical_phase(apply_sequence(qmat.as_mat2(u), p.aux_physical, psi))
    out_v = qmat.canonical_phase(apply_sequence(qmat.as_mat2(v), p.aux_physical, psi))
    return replace(p, input_state=psi, output_u=out_u, output_v=out_v, measurement_basis=out_u, input_basis=())
