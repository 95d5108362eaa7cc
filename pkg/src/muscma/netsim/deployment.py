"""Hexagonal macro deployment with wraparound, path loss, shadowing and sector antennas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, hex_rings

SECTOR_BEAMWIDTH_DEG = 70.0
FRONT_TO_BACK_DB = 25.0
THERMAL_NOISE_DBM_HZ = -174.0


def path_loss_db(distance_m, min_distance_m: float = 35.0):
    """Macro path loss ``128.1 + 37.6 log10(D[km])`` with ``D`` clamped below."""
    d = np.maximum(np.asarray(distance_m, dtype=float), min_distance_m)
    return 128.1 + 37.6 * np.log10(d / 1000.0)


def antenna_gain_db(angle_deg, max_gain_dbi: float = 14.0):
    """Horizontal sector pattern ``-min(12 (theta/70)^2, 25) + G_max``."""
    theta = (np.asarray(angle_deg, dtype=float) + 180.0) % 360.0 - 180.0
    return -np.minimum(12.0 * (theta / SECTOR_BEAMWIDTH_DEG) ** 2, FRONT_TO_BACK_DB) + max_gain_dbi


def site_positions(sites: int, isd: float) -> np.ndarray:
    """Site centres of a hexagonal cluster, centre site first, ``(S, 2)`` metres."""
    n = hex_rings(sites)
    axial = [(0, 0)]
    for ring in range(1, n + 1):
        q, r = -ring, ring  # start corner, walk the six sides
        for dq, dr in ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)):
            for _ in range(ring):
                axial.append((q, r))
                q, r = q + dq, r + dr
    axial = np.array(axial, dtype=float)
    return _axial_to_xy(axial, isd)


def _axial_to_xy(axial, isd):
    axial = np.asarray(axial, dtype=float)
    x = isd * (axial[:, 0] + axial[:, 1] / 2.0)
    y = isd * (np.sqrt(3.0) / 2.0) * axial[:, 1]
    return np.stack([x, y], axis=1)


def wraparound_shifts(sites: int, isd: float) -> np.ndarray:
    """Translation vectors of the cluster itself and its six neighbouring copies, ``(7, 2)``."""
    n = hex_rings(sites)
    q, r = n + 1, n
    shifts = [(0, 0)]
    for _ in range(6):
        shifts.append((q, r))
        q, r = -r, q + r  # 60 degree rotation in axial coordinates
    return _axial_to_xy(shifts, isd)


def _in_hexagon(p, isd):
    # Voronoi cell of a lattice site: |p . n_i| <= isd/2 for the three neighbour directions
    out = np.ones(p.shape[0], dtype=bool)
    for ang in (0.0, np.pi / 3, 2 * np.pi / 3):
        n = np.array([np.cos(ang), np.sin(ang)])
        out &= np.abs(p @ n) <= isd / 2.0
    return out


def drop_users(rng: np.random.Generator, n_users: int, sites_xy: np.ndarray, isd: float) -> np.ndarray:
    """Users uniform over the union of the site hexagons."""
    site = rng.integers(0, sites_xy.shape[0], n_users)
    R = isd / np.sqrt(3.0)
    pts = np.empty((n_users, 2))
    todo = np.arange(n_users)
    while todo.size:
        cand = rng.uniform(-R, R, (todo.size, 2))
        ok = _in_hexagon(cand, isd)
        pts[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return pts + sites_xy[site]


@dataclass
class NetworkState:
    """Per-drop network geometry plus the mutable per-TTI channel state."""

    config: ScenarioConfig
    sites_xy: np.ndarray
    tp_site: np.ndarray          # (T,)
    tp_boresight_deg: np.ndarray  # (T,)
    users_xy: np.ndarray         # (U, 2)
    gain: np.ndarray             # (U, T) linear large-scale gain incl. antenna
    serving: np.ndarray          # (U,)
    distance_m: np.ndarray       # (U, T) wraparound distance
    noise_rb_w: float
    power_rb_w: float
    fading: np.ndarray | None = None       # (U, subbands, R) complex
    avg_rate: np.ndarray | None = None     # (U,) PF averages, bits/s/Hz
    cqi_history: list | None = None        # past (U, RB) full-power SINRs
    power_fraction: np.ndarray | None = None  # (T, RB) of the current TTI

    @property
    def n_users(self) -> int:
        return self.users_xy.shape[0]

    @property
    def n_tp(self) -> int:
        return self.tp_site.size

    def users_of(self, tp: int) -> np.ndarray:
        return np.flatnonzero(self.serving == tp)


def deploy(config: ScenarioConfig, rng: np.random.Generator, users_xy=None) -> NetworkState:
    """Build geometry and large-scale gains for one drop.

    ``users_xy`` overrides the random user drop (positions in metres).
    """
    isd = config.inter_site_distance_m
    sites_xy = site_positions(config.sites, isd)
    S = sites_xy.shape[0]
    n_sec = config.sectors_per_site
    tp_site = np.repeat(np.arange(S), n_sec)
    tp_bore = np.tile(30.0 + 360.0 / n_sec * np.arange(n_sec), S) % 360.0

    if users_xy is None:
        users_xy = drop_users(rng, config.users_total, sites_xy, isd)
    else:
        users_xy = np.asarray(users_xy, dtype=float).reshape(-1, 2)
    U = users_xy.shape[0]

    shifts = wraparound_shifts(config.sites, isd)
    # (U, S, images, 2) vectors from each site image to each user
    vec = users_xy[:, None, None, :] - (sites_xy[None, :, None, :] + shifts[None, None, :, :])
    dist = np.linalg.norm(vec, axis=-1)
    img = np.argmin(dist, axis=2)
    best = np.take_along_axis(vec, img[:, :, None, None], axis=2)[:, :, 0, :]
    site_dist = np.take_along_axis(dist, img[:, :, None], axis=2)[:, :, 0]
    site_angle = np.degrees(np.arctan2(best[..., 1], best[..., 0]))

    shadow = rng.standard_normal((U, S)) * config.shadowing_std_db
    d_tp = site_dist[:, tp_site]
    ang_tp = site_angle[:, tp_site] - tp_bore[None, :]
    gain_db = (-path_loss_db(d_tp, config.min_distance_m) - config.penetration_loss_db
               - shadow[:, tp_site] + antenna_gain_db(ang_tp, config.antenna_gain_dbi))
    gain = 10.0 ** (gain_db / 10.0)
    serving = np.argmax(gain, axis=1)

    noise_dbm = (THERMAL_NOISE_DBM_HZ + 10 * np.log10(config.rb_bandwidth_hz)
                 + config.noise_figure_db)
    noise_rb_w = 10.0 ** ((noise_dbm - 30.0) / 10.0)
    power_rb_w = 10.0 ** ((config.tx_power_dbm - 30.0) / 10.0) / config.bandwidth_rb

    return NetworkState(config, sites_xy, tp_site, tp_bore, users_xy, gain, serving, d_tp,
                        noise_rb_w, power_rb_w)
