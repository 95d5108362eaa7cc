"""TTI-level downlink simulation: channel update, activity masks, PF scheduling
with optional two-user pairing, capacity-abstraction rate accounting.

Rates follow the capacity abstraction: a transport block is sent at
``rate_backoff`` times the rate supported by the (delayed) CQI and is
received only if that rate lies inside the rate region of the SINR actually
experienced in the TTI; otherwise nothing is delivered. Other-cell
interference enters as extra white noise.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..codebook import build_factor_graph, build_lds_signatures
from ..linkrate import TRIVIAL_PROFILE, EigenProfile, UserLinkState, rate_region_check
from ..pairing import SchedulerWeights, greedy_pair, pf_select
from .channel import apply_utilization, init_fading, jakes_correlation, rb_interference, step_fading
from .config import ScenarioConfig
from .deployment import deploy
from .metrics import RunMetrics, ScheduleLog, compute_metrics

STREAM_DEPLOY, STREAM_FADING, STREAM_MASKS = 0, 1, 2

# LDS layer order: the first two layers are tone-disjoint
LDS_LAYER_ORDER = (0, 5, 1, 4, 2, 3)
MU_LDS_SPLIT = ((0, 5, 1), (2, 3, 4))


def drop_rng(seed: int, drop: int, stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, drop, stream)``; drops never share state."""
    return np.random.default_rng(np.random.SeedSequence([seed, drop, stream]))


def scma_profiles(lds_only: bool = False):
    """Single-user link-adaptation candidates and the (strong, weak) paired profiles.

    Candidates are the canonical 4-tone LDS signatures with 1..6 layers plus,
    unless ``lds_only``, the one-tone trivial signature.
    """
    graph = build_factor_graph(4, 2)
    S = build_lds_signatures(graph, 0)
    lds = [EigenProfile.from_signatures(S.columns(LDS_LAYER_ORDER[:J])) for J in range(1, 7)]
    if lds_only:
        mu = tuple(EigenProfile.from_signatures(S.columns(c)) for c in MU_LDS_SPLIT)
        return tuple(lds), mu
    return (TRIVIAL_PROFILE,) + tuple(lds), (TRIVIAL_PROFILE, TRIVIAL_PROFILE)


def effective_sinr(sinr, axis=-1):
    """SINR whose Shannon rate equals the mean rate over ``axis``."""
    return np.exp2(np.mean(np.log2(1.0 + sinr), axis=axis)) - 1.0


@dataclass(frozen=True)
class Allocation:
    tp: int
    unit: int
    users: tuple
    power_fraction: tuple   # per user, share of full per-RB power
    active_fraction: float  # TP power fraction on this unit's RBs
    served_bps: tuple
    alpha: float | None


class Simulator:
    """One drop of one scenario. Drive it with :meth:`step` or :meth:`run`."""

    def __init__(self, config: ScenarioConfig, drop: int = 0, users_xy=None):
        self.config = config
        self.drop = drop
        self.state = deploy(config, drop_rng(config.seed, drop, STREAM_DEPLOY), users_xy)
        self._fading_rng = drop_rng(config.seed, drop, STREAM_FADING)
        self._mask_rng = drop_rng(config.seed, drop, STREAM_MASKS)
        st = self.state
        n_sb = config.subbands
        st.fading = init_fading(self._fading_rng, (st.n_users, n_sb, config.rx_antennas))
        st.avg_rate = np.full(st.n_users, config.avg_rate_floor)
        st.cqi_history = []
        self.rho = jakes_correlation(config.user_speed_kmh, config.carrier_hz, config.tti_s)
        self.su_profiles, self.mu_profiles = scma_profiles(config.lds_only)
        self.weights = SchedulerWeights(config.beta)
        rb = np.arange(config.bandwidth_rb)
        if config.scheduler == "wideband":
            self.units = [rb]
        else:
            self.units = [rb[s * config.subband_width_rb:(s + 1) * config.subband_width_rb]
                          for s in range(n_sb)]
        self._tp_users = [st.users_of(tp) for tp in range(st.n_tp)]
        self._sb_of_rb = rb // config.subband_width_rb
        self.sinr = None

    # -- per-TTI pieces ---------------------------------------------------

    def apply_utilization(self) -> np.ndarray:
        c = self.config
        pf = apply_utilization(self._mask_rng, self.state.n_tp, c.bandwidth_rb, c.subband_width_rb,
                               "OFDMA" if c.mode == "OFDMA" else "SCMA",
                               c.resource_utilization, c.scma_layers)
        self.state.power_fraction = pf
        return pf

    def channel_step(self, tti: int) -> np.ndarray:
        """Advance fading and return full-power SINR per user and RB."""
        st = self.state
        if tti > 0:
            st.fading = step_fading(self._fading_rng, st.fading, self.rho)
        fade = np.sum(np.abs(st.fading) ** 2, axis=2)[:, self._sb_of_rb]  # (U, RB)
        interference = rb_interference(st.gain, st.serving, st.power_fraction, st.power_rb_w)
        g_serv = st.gain[np.arange(st.n_users), st.serving]
        self.sinr = st.power_rb_w * g_serv[:, None] * fade / (st.noise_rb_w + interference)
        return self.sinr

    def _cqi(self) -> np.ndarray:
        hist = self.state.cqi_history
        d = self.config.cqi_delay_tti
        return hist[-1 - d] if len(hist) > d else hist[0]

    def _su_rates(self, gamma):
        """Per-tone rate of each SCMA candidate profile, ``(P, ...)``."""
        return np.stack([p.log_det(np.asarray(gamma) / p.J) / p.K for p in self.su_profiles])

    def schedule_tti(self, tti: int, log: ScheduleLog | None = None) -> list[Allocation]:
        c = self.config
        st = self.state
        cqi = self._cqi()
        rb_bits = c.rb_bandwidth_hz
        served_se = np.zeros(st.n_users)
        total_bw = c.bandwidth_rb * c.rb_bandwidth_hz
        allocations = []
        for tp, users in enumerate(self._tp_users):
            if users.size == 0:
                continue
            for ui, rbs in enumerate(self.units):
                pf = st.power_fraction[tp, rbs]
                if c.mode == "OFDMA":
                    used = rbs[pf > 0]
                    f = 1.0
                else:
                    used = rbs
                    f = float(pf.mean())
                if used.size == 0 or f == 0.0:
                    continue
                g_cqi = effective_sinr(cqi[np.ix_(users, rbs)]) * f
                g_act = effective_sinr(self.sinr[np.ix_(users, used)]) * f
                pool = [UserLinkState(int(u), float(g), float(st.avg_rate[u]))
                        for u, g in zip(users, g_cqi)]
                alloc = self._decide(pool, users, g_cqi, g_act, used.size * rb_bits, f)
                alloc = Allocation(tp, ui, *alloc)
                for u, bps in zip(alloc.users, alloc.served_bps):
                    served_se[u] += bps / total_bw
                allocations.append(alloc)
                if log is not None:
                    u1 = alloc.users[0]
                    u2 = alloc.users[1] if len(alloc.users) > 1 else -1
                    i1 = int(np.flatnonzero(users == u1)[0])
                    i2 = int(np.flatnonzero(users == u2)[0]) if u2 >= 0 else -1
                    log.add(self.drop, tti, tp, ui if c.scheduler == "subband" else -1, u1, u2,
                            np.nan if alloc.alpha is None else alloc.alpha,
                            alloc.served_bps[0], alloc.served_bps[1] if u2 >= 0 else 0.0,
                            g_cqi[i1], g_cqi[i2] if u2 >= 0 else np.nan)
        inv_t = 1.0 / c.pf_window_tti
        st.avg_rate = (1.0 - inv_t) * st.avg_rate + inv_t * served_se
        return allocations

    def _decide(self, pool, users, g_cqi, g_act, bandwidth_hz, f):
        c = self.config
        b = c.rate_backoff
        idx = {int(u): i for i, u in enumerate(users)}
        if c.mode == "OFDMA":
            u = pf_select(pool, self.weights, "OFDMA")
            i = idx[u]
            r = b * np.log2(1.0 + g_cqi[i])
            ok = r <= np.log2(1.0 + g_act[i])
            return (u,), (1.0,), 1.0, (ok * r * bandwidth_hz,), None
        if c.mode == "SCMA":
            u = pf_select(pool, self.weights, "SCMA", self.su_profiles)
            return self._single_scma(u, idx[u], g_cqi, g_act, bandwidth_hz, f)
        d = greedy_pair(pool, self.weights, "SCMA", (c.alpha_min, c.alpha_max),
                        self.mu_profiles, self.su_profiles)
        if not d.paired:
            return self._single_scma(d.user1, idx[d.user1], g_cqi, g_act, bandwidth_hz, f)
        i1, i2 = idx[d.user1], idx[d.user2]
        p1, p2 = self.mu_profiles
        r1, r2 = b * d.rate1, b * d.rate2
        if p1 is TRIVIAL_PROFILE and p2 is TRIVIAL_PROFILE:
            v = rate_region_check(r1, r2, d.alpha, g_act[i1], g_act[i2])
        else:
            v = rate_region_check(r1 * p1.K, r2 * p2.K, d.alpha, g_act[i1], g_act[i2], p1, p2)
        ok1 = not {"sum", "weak_at_strong", "strong"} & set(v.violated)
        ok2 = "weak" not in v.violated
        return ((d.user1, d.user2), (d.alpha * f, (1.0 - d.alpha) * f), f,
                (ok1 * r1 * bandwidth_hz, ok2 * r2 * bandwidth_hz), d.alpha)

    def _single_scma(self, u, i, g_cqi, g_act, bandwidth_hz, f):
        rates = self._su_rates(g_cqi[i])
        best = int(np.argmax(rates))
        r = self.config.rate_backoff * rates[best]
        p = self.su_profiles[best]
        ok = r <= p.log_det(g_act[i] / p.J) / p.K
        return (u,), (f,), f, (ok * r * bandwidth_hz,), None

    def step(self, tti: int, log: ScheduleLog | None = None) -> list[Allocation]:
        self.apply_utilization()
        self.channel_step(tti)
        self.state.cqi_history.append(self.sinr)
        del self.state.cqi_history[:-(self.config.cqi_delay_tti + 1)]
        return self.schedule_tti(tti, log)

    def run(self) -> ScheduleLog:
        c = self.config
        log = ScheduleLog(c.tti_s, c.ttis, c.cells, [self.state.serving.copy()])
        for tti in range(c.ttis):
            self.step(tti, log)
        return log


def run_drop(config: ScenarioConfig, drop: int) -> ScheduleLog:
    return Simulator(config, drop).run()


def run(config: ScenarioConfig, workers: int = 1) -> RunMetrics:
    """All drops of a scenario; results do not depend on ``workers``."""
    drops = range(config.drops)
    if workers > 1 and config.drops > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            logs = list(ex.map(run_drop, [config] * config.drops, drops))
    else:
        logs = [run_drop(config, d) for d in drops]
    merged = ScheduleLog(config.tti_s, config.ttis, config.cells)
    for lg in logs:
        merged.extend(lg)
    return compute_metrics(merged)
