"""Windowed aggregation and CSV emission of run metrics.

All files are UTF-8 with LF line endings, '.' decimal separator and floats
rendered to 6 significant digits. Averages over dB quantities are plain
arithmetic means of the dB values. Empty windows keep their row with blank
value fields (a gap marker) instead of fabricating numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class MetricsError(Exception):
    pass


def fmt(value) -> str:
    """Locale-independent cell formatting; None becomes a blank gap marker."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


@dataclass
class MetricRecord:
    window_t: float  # window end, s
    group: str  # channel | link | app | mobility
    key: dict
    values: dict  # name -> float | None
    count: int = 0


def aggregate(samples: list[tuple[float, dict]], window_t: float, group: str, key: dict) -> MetricRecord:
    """Arithmetic mean per named value over the window's samples.

    An empty sample list yields a gap record: count 0, every value None.
    """
    if not samples:
        return MetricRecord(window_t=window_t, group=group, key=key, values={}, count=0)
    names = samples[0][1].keys()
    sums = {n: 0.0 for n in names}
    for _, vals in samples:
        for n in names:
            sums[n] += vals[n]
    n_samples = len(samples)
    means = {n: sums[n] / n_samples for n in names}
    return MetricRecord(window_t=window_t, group=group, key=key, values=means, count=n_samples)


@dataclass
class CsvSink:
    """Append-only CSV writer with a fixed header and duplicate-window guard.

    Rows belonging to one window are flushed in a single write call; flushing
    the same window twice is rejected so replays cannot double-emit.
    """

    path: Path
    header: list[str]
    _fh: object = field(default=None, repr=False)
    _last_window: float = field(default=float("-inf"), repr=False)

    def open(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        self._fh.write(",".join(self.header) + "\n")

    def append_row(self, cells: list) -> None:
        if len(cells) != len(self.header):
            raise MetricsError(f"{self.path.name}: row width {len(cells)} != header {len(self.header)}")
        self._fh.write(",".join(fmt(c) for c in cells) + "\n")

    def flush_window(self, window_t: float, rows: list[list]) -> None:
        if window_t <= self._last_window:
            raise MetricsError(f"{self.path.name}: window {window_t} already flushed")
        self._last_window = window_t
        chunk = []
        for cells in rows:
            if len(cells) != len(self.header):
                raise MetricsError(f"{self.path.name}: row width {len(cells)} != header {len(self.header)}")
            chunk.append(",".join(fmt(c) for c in cells) + "\n")
        self._fh.write("".join(chunk))

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


MOBILITY_HEADER = ["t", "veh", "s", "x", "y", "speed", "accel", "gap_front", "mode"]
CHANNEL_HEADER = ["t", "veh", "los", "d3d", "pl_db", "shadow_db", "rsrp_dbm", "snr_db"]
LINK_HEADER = ["t", "veh", "dir", "avg_mcs", "avg_bler", "retx_count", "tx_ok", "tx_drop"]
APP_HEADER = ["t", "veh", "from", "seq", "delay_ms", "mode"]
