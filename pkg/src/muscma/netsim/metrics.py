"""Scheduling log and throughput/coverage metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

LOG_COLUMNS = ("drop", "tti", "cell", "subband", "user1", "user2", "alpha",
               "served_rate_u1", "served_rate_u2", "gamma_u1", "gamma_u2")
SUMMARY_COLUMNS = ("mode", "throughput_mbps", "coverage_kbps", "pairing_fraction",
                   "throughput_gain_pct", "coverage_gain_pct")

_LOG_DTYPE = np.dtype([
    ("drop", np.int32), ("tti", np.int32), ("cell", np.int32), ("subband", np.int32),
    ("user1", np.int32), ("user2", np.int32), ("alpha", np.float64),
    ("served_rate_u1", np.float64), ("served_rate_u2", np.float64),
    ("gamma_u1", np.float64), ("gamma_u2", np.float64),
])


@dataclass
class ScheduleLog:
    """One row per scheduling decision; rates in bit/s, ``user2 = -1`` when unpaired.

    ``user_cells`` holds, per drop, the serving cell of every user so that
    users who were never scheduled still count towards coverage.
    """

    tti_s: float
    ttis: int
    n_cells: int
    user_cells: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def add(self, *row):
        self.rows.append(row)

    def table(self) -> np.ndarray:
        return np.array(self.rows, dtype=_LOG_DTYPE)

    def __len__(self):
        return len(self.rows)

    def extend(self, other: ScheduleLog) -> None:
        self.user_cells.extend(other.user_cells)
        self.rows.extend(other.rows)


@dataclass
class RunMetrics:
    cell_throughput_mbps: float
    coverage_kbps: float
    pairing_fraction: float
    per_cell_throughput_mbps: np.ndarray
    user_avg_rate_bps: np.ndarray
    log: ScheduleLog | None = None


def percentile5(values) -> float:
    """5th percentile with linear interpolation between order statistics."""
    return float(np.percentile(np.asarray(values, dtype=float), 5.0))


def compute_metrics(log: ScheduleLog) -> RunMetrics:
    """Cell throughput (mean over cells and drops) and 5th-percentile user rate."""
    drops = len(log.user_cells)
    duration = log.ttis * log.tti_s
    if drops == 0 or duration == 0:
        return RunMetrics(0.0, 0.0, 0.0, np.zeros(0), np.zeros(0), log)
    t = log.table()
    user_rates, cell_tp = [], []
    for d, cells in enumerate(log.user_cells):
        n_users = cells.size
        rows = t[t["drop"] == d]
        bits = np.zeros(n_users)
        np.add.at(bits, rows["user1"], rows["served_rate_u1"] * log.tti_s)
        paired = rows["user2"] >= 0
        np.add.at(bits, rows["user2"][paired], rows["served_rate_u2"][paired] * log.tti_s)
        user_rates.append(bits / duration)
        cell_bits = np.bincount(cells, weights=bits, minlength=log.n_cells)
        cell_tp.append(cell_bits / duration)
    user_rates = np.concatenate(user_rates)
    cell_tp = np.concatenate(cell_tp) / 1e6
    pairing = float(np.mean(t["user2"] >= 0)) if t.size else 0.0
    return RunMetrics(float(cell_tp.mean()), percentile5(user_rates) / 1e3, pairing,
                      cell_tp, user_rates, log)


def write_log_csv(log: ScheduleLog, path) -> None:
    t = log.table()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for r in t:
            w.writerow([int(r["drop"]), int(r["tti"]), int(r["cell"]), int(r["subband"]),
                        int(r["user1"]), int(r["user2"]),
                        "" if np.isnan(r["alpha"]) else f"{r['alpha']:.6f}",
                        f"{r['served_rate_u1']:.3f}", f"{r['served_rate_u2']:.3f}",
                        f"{r['gamma_u1']:.6g}", f"{r['gamma_u2']:.6g}"])


def write_summary_csv(rows, path) -> None:
    """``rows``: iterable of ``(mode, RunMetrics)``; gains are relative to the OFDMA row."""
    rows = list(rows)
    base = next((m for mode, m in rows if mode == "OFDMA"), None)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for mode, m in rows:
            tg = cg = ""
            if base is not None and base.cell_throughput_mbps > 0:
                tg = f"{100 * (m.cell_throughput_mbps / base.cell_throughput_mbps - 1):.2f}"
            if base is not None and base.coverage_kbps > 0:
                cg = f"{100 * (m.coverage_kbps / base.coverage_kbps - 1):.2f}"
            w.writerow([mode, f"{m.cell_throughput_mbps:.4f}", f"{m.coverage_kbps:.3f}",
                        f"{m.pairing_fraction:.4f}", tg, cg])
