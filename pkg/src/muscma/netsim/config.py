"""Scenario parameters for the system-level simulator."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

MODES = ("OFDMA", "SCMA", "MU-SCMA")
SCHEDULERS = ("wideband", "subband")

# section -> keys, in serialisation order
SECTIONS = {
    "deployment": (
        "sites", "sectors_per_site", "inter_site_distance_m", "users_total", "min_distance_m",
        "penetration_loss_db", "shadowing_std_db", "antenna_gain_dbi", "tx_power_dbm",
        "noise_figure_db", "rx_antennas",
    ),
    "spectrum": ("bandwidth_rb", "subband_width_rb", "rb_bandwidth_hz", "carrier_hz", "tti_s"),
    "mobility": ("user_speed_kmh",),
    "scheduler": (
        "mode", "scheduler", "beta", "resource_utilization", "pf_window_tti", "avg_rate_floor",
        "alpha_min", "alpha_max", "rate_backoff", "cqi_delay_tti", "scma_layers", "lds_only",
    ),
    "run": ("ttis", "drops", "seed"),
}


def hex_rings(sites: int) -> int | None:
    """Ring count ``n`` with ``3n^2 + 3n + 1 == sites``, else ``None``."""
    n = 0
    while 3 * n * n + 3 * n + 1 < sites:
        n += 1
    return n if 3 * n * n + 3 * n + 1 == sites else None


@dataclass(frozen=True)
class ScenarioConfig:
    """Deployment, traffic and scheduler parameters of one simulation run.

    Defaults are the 19-site, 570-user, 10 MHz macro scenario. Fields not
    named by that scenario (noise figure, power, backoff, PF window, ...)
    carry common LTE evaluation values.
    """

    sites: int = 19
    sectors_per_site: int = 3
    inter_site_distance_m: float = 500.0
    users_total: int = 570
    min_distance_m: float = 35.0
    penetration_loss_db: float = 20.0
    shadowing_std_db: float = 8.0
    antenna_gain_dbi: float = 14.0
    tx_power_dbm: float = 46.0
    noise_figure_db: float = 9.0
    rx_antennas: int = 2
    bandwidth_rb: int = 50
    subband_width_rb: int = 5
    rb_bandwidth_hz: float = 180e3
    carrier_hz: float = 2e9
    tti_s: float = 1e-3
    user_speed_kmh: float = 3.0
    mode: str = "OFDMA"
    scheduler: str = "wideband"
    beta: float = 1.0
    resource_utilization: float = 1.0
    pf_window_tti: int = 100
    avg_rate_floor: float = 1e-3
    alpha_min: float = 0.05
    alpha_max: float = 0.95
    rate_backoff: float = 0.75
    cqi_delay_tti: int = 1
    scma_layers: int = 6
    lds_only: bool = False
    ttis: int = 200
    drops: int = 1
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ValueError(msg)

        need(hex_rings(self.sites) is not None,
             f"sites={self.sites} is not a hexagonal cluster size (1, 7, 19, 37, ...)")
        need(self.sectors_per_site >= 1, "sectors_per_site must be >= 1")
        need(self.inter_site_distance_m > 0, "inter_site_distance_m must be positive")
        need(self.users_total >= 1, "users_total must be >= 1")
        need(self.min_distance_m >= 0, "min_distance_m must be >= 0")
        need(self.shadowing_std_db >= 0, "shadowing_std_db must be >= 0")
        need(self.rx_antennas >= 1, "rx_antennas must be >= 1")
        need(self.bandwidth_rb >= 1, "bandwidth_rb must be >= 1")
        need(self.subband_width_rb >= 1 and self.bandwidth_rb % self.subband_width_rb == 0,
             "subband_width_rb must divide bandwidth_rb")
        need(self.rb_bandwidth_hz > 0 and self.carrier_hz > 0 and self.tti_s > 0,
             "rb_bandwidth_hz, carrier_hz and tti_s must be positive")
        need(self.user_speed_kmh >= 0, "user_speed_kmh must be >= 0")
        need(self.mode in MODES, f"mode must be one of {MODES}")
        need(self.scheduler in SCHEDULERS, f"scheduler must be one of {SCHEDULERS}")
        need(self.beta >= 0, "beta must be >= 0")
        need(0 < self.resource_utilization <= 1, "resource_utilization must lie in (0, 1]")
        need(self.pf_window_tti >= 1, "pf_window_tti must be >= 1")
        need(self.avg_rate_floor > 0, "avg_rate_floor must be positive")
        need(0 < self.alpha_min < self.alpha_max < 1, "need 0 < alpha_min < alpha_max < 1")
        need(0 < self.rate_backoff <= 1, "rate_backoff must lie in (0, 1]")
        need(self.cqi_delay_tti >= 0, "cqi_delay_tti must be >= 0")
        need(self.scma_layers >= 1, "scma_layers must be >= 1")
        need(self.ttis >= 0, "ttis must be >= 0")
        need(self.drops >= 1, "drops must be >= 1")
        need(self.seed >= 0, "seed must be >= 0")

    @property
    def cells(self) -> int:
        return self.sites * self.sectors_per_site

    @property
    def subbands(self) -> int:
        return self.bandwidth_rb // self.subband_width_rb

    @property
    def users_per_cell(self) -> float:
        return self.users_total / self.cells

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)


FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}
