import math

import pytest

from altm.errors import ArtifactIOError, NumericalError, ParameterError, RangeError, UsageError
from altm.linalg import Rng
from altm.network import build_network
from altm.regime import EvalRow, RunRecord, TaskSpec
from report.csv_writer import CURVE_COLUMNS, emit_csv, read_csv
from report.curves import CurvePoint, curve_points, zoom_window
from report.interference import interference_stats, series_interference
from report.retention import retention_table

SPIKE = [(0, 1.0), (1, 1.0), (2, 1.0), (3, 8.0), (4, 4.0), (5, 1.05)]


def _record(name, old_acc, new_acc, *, old_labels="semantic"):
    net = build_network(2, [2], "tanh", {"old": 2}, 0.1, Rng(0))
    rows = [
        EvalRow(1, 0, {"old": 1.0}, {"old": 0.5}),
        EvalRow(2, 10, {"old": 0.5, "new": 0.5}, {"old": old_acc, "new": new_acc}),
    ]
    tasks = {"old": TaskSpec("old", old_labels), "new": TaskSpec("new")}
    return RunRecord(regime=name, rows=rows, network=net, tasks=tasks)


# ------------------------------------------------------------------
# Interference
# ------------------------------------------------------------------
def test_spike_statistics():
    stats = series_interference(SPIKE, 3)
    assert stats.converged == 1.0
    assert (stats.peak, stats.peak_epoch) == (8.0, 3)
    assert stats.recovery_epoch == 5
    assert stats.ratio == 8.0


def test_flat_curve_recovers_immediately():
    stats = series_interference([(e, 0.25) for e in range(10)], 5)
    assert stats.peak == stats.converged == 0.25
    assert stats.peak_epoch == stats.recovery_epoch == 5


def test_shifting_epochs_shifts_the_result():
    shifted = series_interference([(e + 5, v) for e, v in SPIKE], 8)
    assert (shifted.peak_epoch, shifted.recovery_epoch) == (8, 10)
    assert shifted.converged == 1.0


def test_no_recovery_within_the_run():
    stats = series_interference([(0, 1.0), (1, 1.0), (2, 5.0), (3, 4.0)], 2)
    assert stats.recovery_epoch is None


def test_repeated_epoch_keeps_the_later_value():
    stats = series_interference([(0, 1.0), (1, 1.0), (1, 3.0), (2, 2.0)], 1)
    assert stats.peak == 3.0
    assert stats.converged == 1.0


@pytest.mark.parametrize("switch", [0, 6])
def test_switch_outside_the_series(switch):
    with pytest.raises(RangeError):
        series_interference(SPIKE, switch)


def _loss_record(series):
    net = build_network(2, [2], "tanh", {"A": 2}, 0.1, Rng(0))
    rows = [EvalRow(1, epoch, {"A": loss}, {"A": 0.5}) for epoch, loss in series]
    return RunRecord(regime="seq", rows=rows, network=net, tasks={"A": TaskSpec("A")})


@pytest.mark.parametrize("offset", [1, 7, 40])
def test_record_statistics_move_with_the_epochs(offset):
    base = interference_stats(_loss_record(SPIKE), "A", 3)
    moved = interference_stats(_loss_record([(e + offset, v) for e, v in SPIKE]), "A", 3 + offset)
    assert (moved.converged, moved.peak) == (base.converged, base.peak)
    assert moved.peak_epoch == base.peak_epoch + offset
    assert moved.recovery_epoch == base.recovery_epoch + offset


def test_band_below_one_is_rejected():
    with pytest.raises(ParameterError):
        series_interference(SPIKE, 3, band=0.9)


# ------------------------------------------------------------------
# Retention
# ------------------------------------------------------------------
def test_single_record_ranks_first():
    (row,) = retention_table([_record("only", 0.8, 0.9)], "old", "new")
    assert (row.regime, row.old_accuracy, row.new_accuracy, row.retention, row.rank) == ("only", 0.8, 0.9, 0.8, 1)


def test_rows_sorted_by_retention_with_stable_ties():
    records = [_record("a", 0.9, 1.0), _record("b", 0.3, 1.0), _record("c", 0.9, 0.5)]
    table = retention_table(records, "old", "new", reference=0.9)
    assert [r.regime for r in table] == ["b", "a", "c"]
    assert [r.rank for r in table] == [1, 2, 3]
    assert table[1].retention == pytest.approx(1.0)


def test_retention_requires_both_heads():
    with pytest.raises(UsageError):
        retention_table([_record("a", 0.9, 1.0)], "old", "missing")


def test_retention_requires_consistent_tasks():
    records = [_record("a", 0.9, 1.0), _record("b", 0.5, 1.0, old_labels="graphical")]
    with pytest.raises(UsageError):
        retention_table(records, "old", "new")


def test_reference_must_be_positive():
    with pytest.raises(ParameterError):
        retention_table([_record("a", 0.9, 1.0)], "old", "new", reference=0.0)


# ------------------------------------------------------------------
# Curves
# ------------------------------------------------------------------
def test_curve_points_follow_row_then_head_order():
    points = curve_points(_record("seq", 0.25, 0.75), "seq-0")
    keys = [(p.phase, p.epoch, p.head, p.metric.value) for p in points]
    assert keys == [
        (1, 0, "old", "loss"),
        (1, 0, "old", "accuracy"),
        (2, 10, "new", "loss"),
        (2, 10, "new", "accuracy"),
        (2, 10, "old", "loss"),
        (2, 10, "old", "accuracy"),
    ]
    assert {p.run_id for p in points} == {"seq-0"}


def test_non_finite_values_are_rejected():
    with pytest.raises(NumericalError):
        CurvePoint("r", "seq", 1, 0, "old", "loss", math.nan)
    with pytest.raises(ParameterError):
        CurvePoint("r", "seq", 1, 0, "old", "accuracy", 1.5)


def test_zoom_window_is_inclusive():
    points = curve_points(_record("seq", 0.25, 0.75), "seq-0")
    assert len(zoom_window(points, 0, 0)) == 2
    assert len(zoom_window(points, 0, 10)) == len(points)
    assert zoom_window(points, 11, 20) == []
    with pytest.raises(ParameterError):
        zoom_window(points, 5, 4)


# ------------------------------------------------------------------
# CSV
# ------------------------------------------------------------------
def test_empty_curve_file_has_only_the_header(tmp_path):
    path = emit_csv([], tmp_path / "empty.csv")
    assert path.read_bytes() == (",".join(CURVE_COLUMNS) + "\n").encode()
    assert read_csv(path) == []


def test_curve_values_survive_a_round_trip(tmp_path):
    points = [
        CurvePoint("r", "seq", 1, 0, "old", "loss", 0.1 + 0.2),
        CurvePoint("r", "seq", 1, 1, "old", "loss", 1e-300),
        CurvePoint("r", "seq", 1, 1, "old", "accuracy", 1 / 3),
    ]
    assert read_csv(emit_csv(points, tmp_path / "c.csv")) == points


def test_retention_round_trip(tmp_path):
    table = retention_table([_record("a", 0.9, 1.0), _record("b", 0.3, 0.7)], "old", "new", reference=0.9)
    path = emit_csv(table, tmp_path / "retention.csv")
    assert path.read_text().splitlines()[0] == "regime,old_accuracy,new_accuracy,retention,rank"
    assert read_csv(path) == table


def test_equal_inputs_give_identical_bytes(tmp_path):
    points = curve_points(_record("seq", 0.25, 0.75), "seq-0")
    first = emit_csv(points, tmp_path / "a.csv").read_bytes()
    second = emit_csv(points, tmp_path / "b.csv").read_bytes()
    assert first == second
    assert b"\r" not in first


def test_unwritable_target_raises(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ArtifactIOError):
        emit_csv([], blocker / "out.csv")


def test_unknown_header_is_rejected(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(UsageError):
        read_csv(path)
