import dataclasses

import numpy as np
import pytest

from udisc import fixtures as fx
from udisc import qmat
from udisc.errors import CalibrationAmbiguous, CalibrationFailed
from udisc.waveplate import (
    HWP,
    QWP,
    Convention,
    OpticalTrain,
    PlateSetting,
    calibrate,
    calibrate_convention,
    candidate_conventions,
    compile_measurement,
    compile_state_prep,
    compile_unitary,
    default_convention,
    evaluate_stage,
    normalize_angle,
    plate_matrices,
    plate_matrix,
    stage_residuals,
    table_train,
)

from conftest import random_unitaries

CONV = Convention()


def stage(*spec):
    return [PlateSetting(k, a) for k, a in spec]


def test_hwp_and_qwp_at_zero():
    assert qmat.phase_invariant_distance(plate_matrix(HWP, 0), np.diag([1, -1])) < 1e-15
    np.testing.assert_allclose(plate_matrix(QWP, 0), np.diag([1, 1j]), atol=1e-15)


def test_hwp_22_5_makes_diagonal():
    out = plate_matrix(HWP, 22.5) @ qmat.KET_H
    assert qmat.state_fidelity(out, fx.CASE1_INPUT) > 1 - 1e-15


@pytest.mark.parametrize("deg", [-89.5, -45.0, 0.0, 12.25, 22.5, 90.0])
@pytest.mark.parametrize("kind", [QWP, HWP])
def test_plate_periodicity(kind, deg):
    np.testing.assert_array_equal(plate_matrix(kind, deg), plate_matrix(kind, deg + 180))
    np.testing.assert_array_equal(plate_matrix(kind, deg), plate_matrix(kind, deg - 360))


def test_normalize_angle_range():
    assert normalize_angle(90) == 90 and normalize_angle(-90) == 90
    assert normalize_angle(270) == 90 and normalize_angle(181) == 1
    assert normalize_angle(-135) == 45
    assert PlateSetting(QWP, 242.6).angle_deg == pytest.approx(62.6)


def test_vectorized_plates_match_scalar(rng):
    angles = rng.uniform(-180, 180, 50)
    for conv in candidate_conventions():
        for kind in (QWP, HWP):
            batch = plate_matrices(kind, angles, conv)
            for a, m in zip(angles, batch):
                np.testing.assert_allclose(m, plate_matrix(kind, a, conv), atol=1e-14)


def test_table_stages_realize_operators():
    u1 = evaluate_stage(stage((QWP, 45), (HWP, 15), (QWP, 45)))
    assert qmat.phase_invariant_distance(u1, fx.U1) < 1e-10
    ident = evaluate_stage(stage((QWP, 0), (HWP, 0), (QWP, 0)))
    assert qmat.phase_invariant_distance(ident, np.eye(2)) < 1e-15
    v1 = evaluate_stage(stage((QWP, 45), (HWP, 37.5), (QWP, 45)))
    assert qmat.phase_invariant_distance(v1, fx.V1) < 1e-10


def test_stage_order_first_plate_is_rightmost():
    plates = stage((QWP, 27.4), (HWP, 45), (QWP, 62.6))
    expected = plate_matrix(QWP, 62.6) @ plate_matrix(HWP, 45) @ plate_matrix(QWP, 27.4)
    np.testing.assert_allclose(evaluate_stage(plates), expected, atol=1e-15)
    with pytest.raises(ValueError):
        evaluate_stage([])


def test_compile_unitary_examples():
    plates = compile_unitary(fx.U1)
    assert [p.kind for p in plates] == [QWP, HWP, QWP]
    assert qmat.phase_invariant_distance(evaluate_stage(plates), fx.U1) < 1e-9
    assert qmat.phase_invariant_distance(evaluate_stage(compile_unitary(np.eye(2))), np.eye(2)) < 1e-12
    x_plates = compile_unitary(fx.CASE2_AUX)
    assert qmat.phase_invariant_distance(evaluate_stage(x_plates), fx.CASE2_AUX) < 1e-9
    table_x = evaluate_stage(stage((QWP, 27.4), (HWP, 45), (QWP, 62.6)))
    assert qmat.phase_invariant_distance(evaluate_stage(x_plates), table_x) < 1e-4


def test_compile_unitary_random_round_trip(rng):
    for u in random_unitaries(rng, 1000):
        plates = compile_unitary(u)
        assert all(-90 < p.angle_deg <= 90 for p in plates)
        assert qmat.phase_invariant_distance(evaluate_stage(plates), u) < 1e-9


@pytest.mark.parametrize("conv", candidate_conventions(), ids=str)
def test_compilers_under_every_convention(conv, rng):
    for u in random_unitaries(rng, 50):
        assert qmat.phase_invariant_distance(evaluate_stage(compile_unitary(u, conv), conv), u) < 1e-9
        psi = u @ qmat.KET_H
        prep = compile_state_prep(psi, conv)
        assert [p.kind for p in prep] == ([QWP, HWP] if conv.prep_order == "QH" else [HWP, QWP])
        assert qmat.state_fidelity(evaluate_stage(prep, conv) @ qmat.KET_H, psi) > 1 - 1e-9
        meas = compile_measurement(psi, conv)
        assert abs((evaluate_stage(meas, conv) @ psi)[1]) ** 2 > 1 - 1e-9


def test_state_prep_examples():
    prep = compile_state_prep(fx.CASE1_INPUT)
    assert qmat.state_fidelity(evaluate_stage(prep) @ qmat.KET_H, fx.CASE1_INPUT) > 1 - 1e-12
    assert [(p.kind, p.angle_deg) for p in prep] == [(QWP, 0.0), (HWP, 22.5)]
    assert [p.angle_deg for p in compile_state_prep(qmat.KET_H)] == [0.0, 0.0]
    psi2 = fx.CASE2_INPUT_PRINTED
    table = evaluate_stage(stage((QWP, -15), (HWP, 42.4))) @ qmat.KET_H
    ours = evaluate_stage(compile_state_prep(psi2)) @ qmat.KET_H
    assert 1 - qmat.state_fidelity(table, ours) < 5e-3


def test_state_prep_random(rng):
    for u in random_unitaries(rng, 1000):
        psi = u[:, 0]
        out = evaluate_stage(compile_state_prep(psi)) @ qmat.KET_H
        assert qmat.state_fidelity(out, psi) > 1 - 1e-9


def test_measurement_examples():
    m1 = compile_measurement(fx.CASE1_BASIS)
    assert [p.angle_deg for p in m1] == pytest.approx([45.0, 37.5])
    m2 = compile_measurement(fx.CASE2_BASIS)
    assert abs((evaluate_stage(m2) @ fx.CASE2_BASIS)[1]) ** 2 > 1 - 1e-12
    assert [p.angle_deg for p in compile_measurement(qmat.KET_V)] == [0.0, 0.0]


def test_calibration_unique():
    report = calibrate()
    assert report.convention == Convention(1, 1, "H-first", "V", "QH")
    assert calibrate_convention() == default_convention() == report.convention
    for row, stages in report.residuals.items():
        assert all(v < 1e-3 for k, v in stages.items() if k != "measurement_port"), row


def test_calibration_records_measurement_ports():
    ports = {row: r["measurement_port"] for row, r in calibrate().residuals.items()}
    # published case 2 analysis angles send the stated basis to the reflected port
    assert ports == {"U1": "V", "V1": "V", "U2": "H", "V2": "H"}


def test_calibration_detects_corrupted_angle():
    row = fx.TABLE_I[2]
    bad = dataclasses.replace(row, slots=(row.slots[0], (27.4, 55.0, 62.6), row.slots[2]))
    fixtures = [fx.TABLE_I[0], fx.TABLE_I[1], bad, fx.TABLE_I[3]]
    with pytest.raises(CalibrationFailed) as info:
        calibrate_convention(fixtures)
    assert "U2.slot2" in str(info.value)
    key = "s=+1,r=+1,H-first,QH"
    assert info.value.residuals[key]["U2"]["slot2"] > 1e-2


def test_calibration_empty_is_ambiguous():
    with pytest.raises(CalibrationAmbiguous):
        calibrate_convention([])


def test_v_first_is_equivalent_to_flipped_signs(rng):
    a = Convention(1, -1, "V-first", "V", "QH")
    b = a.canonical()
    assert b == Convention(-1, 1, "H-first", "V", "QH")
    for deg in rng.uniform(-90, 90, 20):
        for kind in (QWP, HWP):
            assert qmat.phase_invariant_distance(plate_matrix(kind, deg, a), plate_matrix(kind, deg, b)) < 1e-14


def test_every_table_row_reproduces_under_calibrated_convention():
    conv = default_convention()
    for row in fx.TABLE_I:
        res = stage_residuals(row, conv)
        assert res["prep"] < 1e-3
        assert res["slot1"] < 1e-3 and res["slot2"] < 1e-3 and res["slot3"] < 1e-3
        assert res["measurement"] < 1e-3


def test_table_train_labels_follow_figure_numbering():
    train = table_train(fx.TABLE_I[0])
    labels = [p.label for p in train.plates()]
    assert labels == ["Q1", "H1", "Q2", "H2", "Q3", "Q4", "H3", "Q5", "Q6", "H4", "Q7", "Q8", "H5"]


def test_train_json_round_trip():
    train = table_train(fx.TABLE_I[2])
    doc = train.to_json()
    assert set(doc) >= {"convention", "prep", "op_slots", "measurement"}
    assert doc["prep"][1] == {"kind": HWP, "angle_deg": 42.4, "label": "H1"}
    back = OpticalTrain.from_json(doc)
    assert [p.angle_deg for p in back.plates()] == [p.angle_deg for p in train.plates()]
    assert back.convention == train.convention and back.hidden_slots == (0, 2)
