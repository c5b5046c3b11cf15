"""Jones-calculus compiler between qubit operators and quarter/half waveplate angles.

A retarder with retardance ``delta`` whose fast axis sits at ``theta`` is
``R(s theta) diag(1, e^{i r delta}) R(-s theta)``. The signs ``s`` and ``r``
and the basis order are not fixed a priori; :func:`calibrate_convention`
selects them against the published settings table.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import qmat
from .errors import CalibrationAmbiguous, CalibrationFailed, UncalibratedTrain
from .fixtures import TABLE_I, TableRow

QWP = "QWP"
HWP = "HWP"
RETARDANCE = {QWP: math.pi / 2, HWP: math.pi}
CALIBRATION_TOL = 1e-3
_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


def normalize_angle(deg: float) -> float:
    """Map an angle in degrees to ``(-90, 90]``; plates are 180-degree periodic."""
    a = math.fmod(float(deg), 180.0)
    if a > 90.0:
        a -= 180.0
    elif a <= -90.0:
        a += 180.0
    return a + 0.0


@dataclass(frozen=True)
class Convention:
    rotation_sign: int = 1
    retardance_sign: int = 1
    basis_order: str = "H-first"
    pbs_transmits: str = "V"
    # physical order of the two state-preparation plates after the polarizer
    prep_order: str = "QH"

    def __post_init__(self):
        if self.rotation_sign not in (1, -1) or self.retardance_sign not in (1, -1):
            raise ValueError("signs must be +1 or -1")
        if self.basis_order not in ("H-first", "V-first"):
            raise ValueError("basis_order must be 'H-first' or 'V-first'")
        if self.pbs_transmits != "V":
            raise ValueError("the polarizing beam splitter transmits V")
        if self.prep_order not in ("QH", "HQ"):
            raise ValueError("prep_order must be 'QH' or 'HQ'")

    def canonical(self) -> "Convention":
        """Physically identical convention written in H-first form."""
        if self.basis_order == "H-first":
            return self
        return replace(self, rotation_sign=-self.rotation_sign,
                       retardance_sign=-self.retardance_sign, basis_order="H-first")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PlateSetting:
    kind: str
    angle_deg: float
    label: str = ""

    def __post_init__(self):
        if self.kind not in RETARDANCE:
            raise ValueError(f"unknown plate kind {self.kind!r}")
        object.__setattr__(self, "angle_deg", normalize_angle(self.angle_deg))

    def to_json(self) -> dict:
        d = {"kind": self.kind, "angle_deg": round(self.angle_deg, 4)}
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_json(cls, obj) -> "PlateSetting":
        return cls(obj["kind"], float(obj["angle_deg"]), obj.get("label", ""))


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def plate_matrix(kind: str, angle_deg: float, convention: Convention = Convention()) -> np.ndarray:
    theta = convention.rotation_sign * math.radians(normalize_angle(angle_deg))
    delta = convention.retardance_sign * RETARDANCE[kind]
    m = _rot(theta) @ np.diag([1.0, np.exp(1j * delta)]) @ _rot(-theta)
    if convention.basis_order == "V-first":
        m = _SWAP @ m @ _SWAP
    return m


def plate_matrices(kind: str, angles_deg: np.ndarray, convention: Convention) -> np.ndarray:
    """Vectorized :func:`plate_matrix` over an array of angles; returns ``(..., 2, 2)``."""
    theta = convention.rotation_sign * np.radians(np.asarray(angles_deg, dtype=float))
    phase = np.exp(1j * convention.retardance_sign * RETARDANCE[kind])
    c2, s2 = np.cos(2 * theta), np.sin(2 * theta)
    # R D R^T expanded: diagonal mixes 1 and e^{i delta} by cos^2 / sin^2
    diag_mean = (1 + phase) / 2
    diag_diff = (1 - phase) / 2
    m = np.empty(theta.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = diag_mean + diag_diff * c2
    m[..., 1, 1] = diag_mean - diag_diff * c2
    m[..., 0, 1] = diag_diff * s2
    m[..., 1, 0] = diag_diff * s2
    if convention.basis_order == "V-first":
        m = m[..., ::-1, ::-1]
    return m


def evaluate_stage(plates, convention: Convention = Convention()) -> np.ndarray:
    """Ordered product of the plates; the first plate the light meets is the rightmost factor."""
    plates = list(plates)
    if not plates:
        raise ValueError("a stage needs at least one plate")
    m = np.eye(2, dtype=complex)
    for p in plates:
        m = plate_matrix(p.kind, p.angle_deg, convention) @ m
    return m


def _reduce(convention: Convention):
    c = convention.canonical()
    return c.rotation_sign, c.retardance_sign


def _stokes_angles(v: np.ndarray) -> tuple[float, float]:
    """Orientation and ellipticity angles (radians) of a polarization state."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    x, y = v
    s1 = abs(x) ** 2 - abs(y) ** 2
    s2 = 2 * (np.conj(x) * y).real
    s3 = 2 * (np.conj(x) * y).imag
    return 0.5 * math.atan2(s2, s1), 0.5 * math.asin(max(-1.0, min(1.0, s3)))


def _finish(angles_rad, s_sign):
    return [normalize_angle(s_sign * math.degrees(a)) for a in angles_rad]


def compile_unitary(u, convention: Convention = Convention()) -> list[PlateSetting]:
    """QWP-HWP-QWP angles realizing ``u`` up to global phase.

    In the canonical convention ``Q(c) H(b) Q(a) = e^{-ic Y} e^{i(2b-a-c) X} e^{ia Y}``,
    so a Y-X-Y Euler decomposition of ``u`` gives the angles directly.
    """
    u = qmat.require_unitary(qmat.as_mat2(u), "U")
    s, r = _reduce(convention)
    if r < 0:
        u = np.conj(u)
    su = u / np.sqrt(np.linalg.det(u))
    p, q = su[0, 0], su[0, 1]
    along = complex(p.real, q.real)  # u0 + i u2
    across = complex(q.imag, -p.imag)  # u1 - i u3
    phi = math.atan2(abs(across), abs(along))
    diff = np.angle(along) if abs(along) > 1e-15 else 0.0
    total = np.angle(across) if abs(across) > 1e-15 else 0.0
    a = (total + diff) / 2
    c = (total - diff) / 2
    b = (phi + a + c) / 2
    qa, hb, qc = _finish((a, b, c), s)
    return [PlateSetting(QWP, qa), PlateSetting(HWP, hb), PlateSetting(QWP, qc)]


def _two_plate_angles(target, order: str):
    """Canonical-convention angles so the two plates map ``|H>`` onto ``target``.

    Returns ``(qwp_angle, hwp_angle)`` in radians for the given physical order.
    """
    orient, ellip = _stokes_angles(target)
    if order == "QH":
        # QWP at a turns H into ellipticity -a at orientation a; the HWP mirrors it
        return ellip, (orient + ellip) / 2
    # HWP first gives linear light at 2b; the QWP then sets the ellipse
    return orient, (orient + ellip) / 2


def compile_state_prep(target, convention: Convention = Convention()) -> list[PlateSetting]:
    """Plates after the H polarizer that prepare ``target`` (in physical order)."""
    target = np.asarray(target, dtype=complex)
    s, r = _reduce(convention)
    if r < 0:
        target = np.conj(target)
    qa, hb = _finish(_two_plate_angles(target, convention.prep_order), s)
    q, h = PlateSetting(QWP, qa), PlateSetting(HWP, hb)
    return [q, h] if convention.prep_order == "QH" else [h, q]


def compile_measurement(basis, convention: Convention = Convention()) -> list[PlateSetting]:
    """QWP then HWP mapping ``basis`` onto the transmitted port ``|V>`` (detector D1)."""
    basis = np.asarray(basis, dtype=complex)
    s, r = _reduce(convention)
    if r < 0:
        basis = np.conj(basis)
    # H Q |basis> ~ |V>  <=>  Q H |H> ~ conj(basis_perp) in the canonical frame
    perp = np.array([-np.conj(basis[1]), np.conj(basis[0])])
    qa, hb = _finish(_two_plate_angles(np.conj(perp), "HQ"), s)
    return [PlateSetting(QWP, qa), PlateSetting(HWP, hb)]


# --- optical train -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OpticalTrain:
    """Polarizer, preparation plates, operation slots and analysis plates before the PBS.

    ``hidden_slots`` are the indices of ``op_slots`` that hold the unknown box.
    """

    prep: tuple[PlateSetting, ...]
    op_slots: tuple[tuple[PlateSetting, ...], ...]
    measurement: tuple[PlateSetting, ...]
    convention: Convention | None
    hidden_slots: tuple[int, ...] = ()

    def __post_init__(self):
        labelled = _label_plates(self.prep, self.op_slots, self.measurement)
        object.__setattr__(self, "prep", labelled[0])
        object.__setattr__(self, "op_slots", labelled[1])
        object.__setattr__(self, "measurement", labelled[2])

    def plates(self) -> list[PlateSetting]:
        """All plates in beam order."""
        out = list(self.prep)
        for slot in self.op_slots:
            out.extend(slot)
        out.extend(self.measurement)
        return out

    def with_hidden(self, op) -> "OpticalTrain":
        if self.convention is None:
            raise UncalibratedTrain("train has no calibrated convention")
        plates = tuple(compile_unitary(op, self.convention))
        slots = tuple(plates if i in self.hidden_slots else s for i, s in enumerate(self.op_slots))
        return replace(self, op_slots=slots)

    def with_offsets(self, offsets: dict) -> "OpticalTrain":
        """Copy with ``{label: degrees}`` added to the named plates."""
        def shift(p):
            return replace(p, angle_deg=p.angle_deg + offsets.get(p.label, 0.0))
        return replace(
            self,
            prep=tuple(map(shift, self.prep)),
            op_slots=tuple(tuple(map(shift, s)) for s in self.op_slots),
            measurement=tuple(map(shift, self.measurement)),
        )

    def to_json(self) -> dict:
        return {
            "convention": self.convention.to_json() if self.convention else None,
            "prep": [p.to_json() for p in self.prep],
            "op_slots": [[p.to_json() for p in s] for s in self.op_slots],
            "hidden_slots": list(self.hidden_slots),
            "measurement": [p.to_json() for p in self.measurement],
        }

    @classmethod
    def from_json(cls, obj) -> "OpticalTrain":
        conv = obj.get("convention")
        return cls(
            prep=tuple(PlateSetting.from_json(p) for p in obj["prep"]),
            op_slots=tuple(tuple(PlateSetting.from_json(p) for p in s) for s in obj["op_slots"]),
            measurement=tuple(PlateSetting.from_json(p) for p in obj["measurement"]),
            convention=Convention(**conv) if conv else None,
            hidden_slots=tuple(obj.get("hidden_slots", ())),
        )


def _label_plates(prep, slots, meas):
    counts = {QWP: 0, HWP: 0}

    def lab(p):
        counts[p.kind] += 1
        name = f"{'Q' if p.kind == QWP else 'H'}{counts[p.kind]}"
        return replace(p, label=name)

    return (tuple(map(lab, prep)),
            tuple(tuple(map(lab, s)) for s in slots),
            tuple(map(lab, meas)))


def compile_protocol(protocol, u, v=None, convention: Convention | None = None) -> OpticalTrain:
    """Optical train for a sequential protocol with the hidden slots set to ``u``."""
    convention = convention or default_convention()
    hidden = compile_unitary(u, convention)
    slots, hidden_idx = [tuple(hidden)], [0]
    for x in protocol.aux_physical:
        slots.append(tuple(compile_unitary(x, convention)))
        slots.append(tuple(hidden))
        hidden_idx.append(len(slots) - 1)
    return OpticalTrain(
        prep=tuple(compile_state_prep(protocol.input_state, convention)),
        op_slots=tuple(slots),
        measurement=tuple(compile_measurement(protocol.measurement_basis, convention)),
        convention=convention,
        hidden_slots=tuple(hidden_idx),
    )


def table_train(row: TableRow, convention: Convention | None = None) -> OpticalTrain:
    """Optical train holding the literal angles of one published table row."""
    convention = convention or default_convention()
    q, h = row.prep
    prep = [PlateSetting(QWP, q), PlateSetting(HWP, h)]
    if convention.prep_order == "HQ":
        prep.reverse()
    slots = tuple(tuple(PlateSetting(k, a) for k, a in zip((QWP, HWP, QWP), s)) for s in row.slots)
    mq, mh = row.measurement
    return OpticalTrain(tuple(prep), slots, (PlateSetting(QWP, mq), PlateSetting(HWP, mh)),
                        convention, hidden_slots=(0, 2))


# --- calibration ---------------------------------------------------------


def _port_residual(state: np.ndarray) -> tuple[float, str]:
    """Distance of ``state`` from the nearer PBS port and that port's name."""
    state = state / np.linalg.norm(state)
    amp_v, amp_h = abs(state[1]), abs(state[0])
    return (max(0.0, 1.0 - amp_v), "V") if amp_v >= amp_h else (max(0.0, 1.0 - amp_h), "H")


def stage_residuals(row: TableRow, convention: Convention) -> dict:
    """Per-stage distances between what the row's angles realize and its targets."""
    train = table_train(row, convention)
    res = {}
    prepared = evaluate_stage(train.prep, convention) @ qmat.KET_H
    res["prep"] = qmat.state_distance(prepared, row.input_state)
    for i, (slot, target) in enumerate(zip(train.op_slots, row.slot_targets), start=1):
        res[f"slot{i}"] = qmat.phase_invariant_distance(evaluate_stage(slot, convention), target)
    analysed = evaluate_stage(train.measurement, convention) @ row.basis
    res["measurement"], res["measurement_port"] = _port_residual(analysed)
    return res


@dataclass(frozen=True)
class CalibrationReport:
    convention: Convention
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"convention": self.convention.to_json(), "residuals": self.residuals}


def candidate_conventions() -> list[Convention]:
    return [Convention(s, r, b, "V", o) for s, r, b, o in
            itertools.product((1, -1), (1, -1), ("H-first", "V-first"), ("QH", "HQ"))]


def calibrate(fixtures=TABLE_I, tol: float = CALIBRATION_TOL) -> CalibrationReport:
    """Pick the single physical convention under which every fixture stage fits within ``tol``.

    Conventions that differ only by writing the basis V-first with both signs
    flipped are the same physics and count once. The measurement stage is
    judged by how cleanly the basis exits one PBS port; which port is
    recorded in the residual table.
    """
    fixtures = list(fixtures)
    table, passing = {}, {}
    for conv in candidate_conventions():
        per_row = {row.name: stage_residuals(row, conv) for row in fixtures}
        key = _conv_key(conv)
        table[key] = per_row
        worst = max((v for r in per_row.values() for k, v in r.items() if k != "measurement_port"),
                    default=0.0)
        if worst < tol:
            passing.setdefault(conv.canonical(), per_row)
    if not passing:
        raise CalibrationFailed(_failure_message(table, tol), table)
    if len(passing) > 1:
        names = ", ".join(_conv_key(c) for c in passing)
        raise CalibrationAmbiguous(f"{len(passing)} conventions fit the fixtures: {names}", table)
    conv, per_row = next(iter(passing.items()))
    return CalibrationReport(conv, per_row)


def calibrate_convention(fixtures=TABLE_I, tol: float = CALIBRATION_TOL) -> Convention:
    return calibrate(fixtures, tol).convention


@lru_cache(maxsize=1)
def default_convention() -> Convention:
    return calibrate_convention(TABLE_I)


def _conv_key(c: Convention) -> str:
    return f"s={c.rotation_sign:+d},r={c.retardance_sign:+d},{c.basis_order},{c.prep_order}"


def _failure_message(table: dict, tol: float) -> str:
    def bad_stages(per_row):
        return [(f"{row}.{stage}", val) for row, stages in per_row.items()
                for stage, val in stages.items() if stage != "measurement_port" and val >= tol]

    best_key = min(table, key=lambda k: len(bad_stages(table[k])))
    bad = bad_stages(table[best_key])
    detail = ", ".join(f"{name}={val:.3g}" for name, val in bad)
    return f"no convention fits within {tol:g}; closest ({best_key}) fails at {detail}"
