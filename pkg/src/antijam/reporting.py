"""Run artifacts: the metrics CSV schema and PGM waterfall images.

CSV columns are ``epoch,epsilon,reward,throughput_ma,loss,action`` with
floats at 6 significant digits. Waterfalls are written as binary PGM (P5)
with the same dBm-to-[0,1] mapping the network input uses, newest slot at the
top of the image.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .spectrum import DISPLAY_DBM_HI, DISPLAY_DBM_LO

CSV_HEADER = "epoch,epsilon,reward,throughput_ma,loss,action"


@dataclass(frozen=True)
class MetricsRow:
    epoch: int
    epsilon: float
    reward: float
    throughput_ma: float
    loss: float
    action: int


def report_rows(report) -> Iterator[MetricsRow]:
    """Adapt a TrainingReport's arrays into CSV rows."""
    for i in range(report.epoch.size):
        yield MetricsRow(
            epoch=int(report.epoch[i]),
            epsilon=float(report.epsilon[i]),
            reward=float(report.reward[i]),
            throughput_ma=float(report.throughput_ma[i]),
            loss=float(report.loss[i]),
            action=int(report.action[i]),
        )


def write_metrics_csv(rows: Iterable[MetricsRow], path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.epoch},{r.epsilon:#.6g},{r.reward:#.6g},"
                f"{r.throughput_ma:#.6g},{r.loss:#.6g},{r.action}\n"
            )


def read_metrics_csv(path) -> list[MetricsRow]:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {header!r}")
        rows = []
        for line in fh:
            epoch, eps, reward, ma, loss, action = line.strip().split(",")
            rows.append(MetricsRow(int(epoch), float(eps), float(reward),
                                   float(ma), float(loss), int(action)))
    return rows


def export_waterfall_pgm(waterfall_dbm: np.ndarray, path) -> None:
    """8-bit binary PGM; pixel = round(255 * clamp((dBm + 100) / 135))."""
    m = np.asarray(waterfall_dbm, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"waterfall must be 2-D, got shape {m.shape}")
    scaled = np.clip((m - DISPLAY_DBM_LO) / (DISPLAY_DBM_HI - DISPLAY_DBM_LO), 0.0, 1.0)
    pixels = np.rint(255.0 * scaled).astype(np.uint8)
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    """Load an 8-bit binary PGM back into a (height, width) uint8 array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    parts = blob.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    width, height = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError(f"{path}: expected 8-bit maxval")
    data = parts[3]
    if len(data) != width * height:
        raise ValueError(f"{path}: pixel payload has {len(data)} bytes, "
                         f"expected {width * height}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width)
