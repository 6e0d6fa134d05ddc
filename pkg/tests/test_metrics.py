import pytest

from platoonsim.metrics import (
    CHANNEL_HEADER,
    LINK_HEADER,
    CsvSink,
    MetricsError,
    aggregate,
    fmt,
)


def test_single_sample_mean_is_identity():
    rec = aggregate([(0.4, {"rsrp": -71.5})], 1.0, "channel", {"veh": "v1"})
    assert rec.values["rsrp"] == -71.5
    assert rec.count == 1


def test_db_values_average_arithmetically():
    rec = aggregate([(0.2, {"rsrp": -70.0}), (0.7, {"rsrp": -80.0})], 1.0, "channel", {})
    assert rec.values["rsrp"] == pytest.approx(-75.0)


def test_window_count_at_channel_cadence():
    samples = [(0.01 * (k + 1), {"bler": 0.0}) for k in range(100)]
    rec = aggregate(samples, 1.0, "channel", {})
    assert rec.count == 100


def test_empty_window_is_gap_not_fabrication():
    rec = aggregate([], 1.0, "link", {})
    assert rec.count == 0
    assert rec.values == {}


def test_mean_within_sample_range():
    samples = [(0.1 * k, {"x": float(k % 7)}) for k in range(50)]
    rec = aggregate(samples, 5.0, "link", {})
    values = [v["x"] for _, v in samples]
    assert min(values) <= rec.values["x"] <= max(values)


def test_fmt_six_significant_digits_and_gap_marker():
    assert fmt(None) == ""
    assert fmt(True) == "1"
    assert fmt(3) == "3"
    assert fmt(-71.6260500153) == "-71.6261"
    assert fmt(0.06) == "0.06"
    assert fmt(100.0) == "100"


def test_sink_writes_header_once_and_rejects_bad_width(tmp_path):
    sink = CsvSink(tmp_path / "x.csv", ["a", "b"])
    sink.open()
    sink.append_row([1, 2.5])
    with pytest.raises(MetricsError):
        sink.append_row([1])
    sink.close()
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines == ["a,b", "1,2.5"]


def test_sink_duplicate_window_guard(tmp_path):
    sink = CsvSink(tmp_path / "w.csv", ["t", "v"])
    sink.open()
    sink.flush_window(1.0, [[1.0, 0.5]])
    with pytest.raises(MetricsError):
        sink.flush_window(1.0, [[1.0, 0.7]])
    sink.flush_window(2.0, [[2.0, None]])
    sink.close()
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines == ["t,v", "1,0.5", "2,"]


def test_documented_headers():
    assert CHANNEL_HEADER == ["t", "veh", "los", "d3d", "pl_db", "shadow_db", "rsrp_dbm", "snr_db"]
    assert LINK_HEADER == ["t", "veh", "dir", "avg_mcs", "avg_bler", "retx_count", "tx_ok", "tx_drop"]
