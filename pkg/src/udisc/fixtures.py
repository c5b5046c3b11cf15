"""Named operator pairs and the published waveplate table used as calibration fixtures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_S2 = np.sqrt(2.0)
_S3 = np.sqrt(3.0)

U1 = np.diag([np.exp(2j * np.pi / 3), 1.0]).astype(complex)
V1 = np.diag([np.exp(1j * np.pi / 6), 1.0]).astype(complex)
U2 = U1.copy()
V2 = np.eye(2, dtype=complex)

CASE2_AUX = np.array([[_S2, -1.0], [1.0, _S2]], dtype=complex) / _S3

CASE1_INPUT = np.array([1.0, 1.0], dtype=complex) / _S2
# printed to three decimals in the source, so only ~1e-3 accurate
CASE2_INPUT_PRINTED = np.array([-0.151 + 0.262j, 0.953], dtype=complex)

CASE1_OUTPUT_U = np.array([-np.exp(1j * np.pi / 3), 1.0]) / _S2
CASE1_OUTPUT_V = np.array([-np.exp(1j * np.pi / 3), -1.0]) / _S2
CASE2_OUTPUT_U = np.array([np.exp(-1j * np.pi / 6), 1.0]) / _S2
CASE2_OUTPUT_V = np.array([np.exp(-1j * np.pi / 6), -1.0]) / _S2

CASE1_BASIS = CASE1_OUTPUT_U
CASE2_BASIS = CASE2_OUTPUT_U

# pair whose W = U^dagger V has antipodal eigenvalues (one use suffices)
PI_PAIR = (np.eye(2, dtype=complex), np.diag([-1.0, 1.0]).astype(complex))

FIXTURES = {
    "case1": (U1, V1),
    "case2": (U2, V2),
    "pi": PI_PAIR,
}


@dataclass(frozen=True)
class TableRow:
    """One row of the published settings: angles in degrees plus the intended targets."""

    name: str
    prep: tuple[float, float]
    slots: tuple[tuple[float, float, float], ...]
    measurement: tuple[float, float]
    input_state: np.ndarray
    slot_targets: tuple[np.ndarray, ...]
    basis: np.ndarray


def _row(name, prep, hidden, aux, meas, psi, op, x, basis):
    return TableRow(name, prep, (hidden, aux, hidden), meas, psi, (op, x, op), basis)


_I = np.eye(2, dtype=complex)

TABLE_I = (
    _row("U1", (0, 22.5), (45, 15, 45), (0, 0, 0), (45, 37.5), CASE1_INPUT, U1, _I, CASE1_BASIS),
    _row("V1", (0, 22.5), (45, 37.5, 45), (0, 0, 0), (45, 37.5), CASE1_INPUT, V1, _I, CASE1_BASIS),
    _row("U2", (-15, 42.4), (45, 15, 45), (27.4, 45, 62.6), (45, 15), CASE2_INPUT_PRINTED, U2, CASE2_AUX, CASE2_BASIS),
    _row("V2", (-15, 42.4), (0, 0, 0), (27.4, 45, 62.6), (45, 15), CASE2_INPUT_PRINTED, V2, CASE2_AUX, CASE2_BASIS),
)


def fixture_pair(name: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        u, v = FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
    return u.copy(), v.copy()
