"""Proportional fair user selection, two-user pairing and power sharing.

Rates handled here are per tone (bits/s/Hz): sparse-spreading rates are
divided by the signature length ``K`` so that OFDMA and SCMA candidates
compare on the same footing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linkrate import TRIVIAL_PROFILE, EigenProfile

__all__ = [
    "SINGLE",
    "PAIRED",
    "DEFAULT_ALPHA_RANGE",
    "PairingDecision",
    "SchedulerWeights",
    "single_user_rate",
    "pf_select",
    "optimal_alpha_ofdma",
    "optimal_alpha_scma",
    "optimal_alpha_scma_batch",
    "wsr_point_A",
    "wsr_point_B",
    "wsr_derivative_scma",
    "greedy_pair",
    "exhaustive_pair",
]

SINGLE = "single"
PAIRED = "paired"
DEFAULT_ALPHA_RANGE = (0.05, 0.95)
ROOT_SUBINTERVALS = 64
ROOT_TOL = 1e-10
EXHAUSTIVE_CAP = 64


@dataclass(frozen=True)
class SchedulerWeights:
    """PF weights ``w_u = 1 / R_u**beta``; ``beta = 1`` is classic PF, ``0`` max-rate."""

    beta: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    def of(self, avg_rate):
        return np.asarray(avg_rate, dtype=float) ** (-self.beta)


@dataclass(frozen=True)
class PairingDecision:
    mode: str
    user1: int
    user2: int | None = None
    alpha: float | None = None
    rate1: float = 0.0
    rate2: float = 0.0
    wsr: float = 0.0

    def __post_init__(self):
        if self.mode == PAIRED:
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("paired decision needs alpha in (0, 1)")
            if self.user2 is None or self.user2 == self.user1:
                raise ValueError("paired decision needs two distinct users")
        elif self.mode == SINGLE:
            if self.alpha is not None or self.rate2 != 0.0 or self.user2 is not None:
                raise ValueError("single-user decision carries no partner, alpha or rate2")
        else:
            raise ValueError(f"unknown decision mode {self.mode!r}")

    @property
    def paired(self) -> bool:
        return self.mode == PAIRED

    @property
    def users(self) -> tuple[int, ...]:
        return (self.user1,) if self.user2 is None else (self.user1, self.user2)


def _as_profiles(profiles):
    if profiles is None:
        return (TRIVIAL_PROFILE,)
    if isinstance(profiles, EigenProfile):
        return (profiles,)
    return tuple(profiles)


def single_user_rate(gamma, mode: str = "OFDMA", profiles=None):
    """Per-tone single-user rate; for SCMA the best of ``profiles`` (link adaptation)."""
    gamma = np.asarray(gamma, dtype=float)
    if mode == "OFDMA":
        return np.log2(1.0 + gamma)
    if mode != "SCMA":
        raise ValueError(f"unknown mode {mode!r}")
    rates = [p.log_det(gamma / p.J) / p.K for p in _as_profiles(profiles)]
    return np.max(rates, axis=0)


def _sorted(users):
    if not users:
        raise ValueError("empty user pool")
    return sorted(users, key=lambda u: u.user_id)


def pf_select(users, weights: SchedulerWeights = SchedulerWeights(), mode: str = "OFDMA",
              profiles=None) -> int:
    """User maximising ``w_u * r_u``; ties go to the lowest user id."""
    users = _sorted(users)
    g = np.array([u.gamma for u in users])
    R = np.array([u.avg_rate for u in users])
    metric = weights.of(R) * single_user_rate(g, mode, profiles)
    return users[int(np.argmax(metric))].user_id


def optimal_alpha_ofdma(gamma1, gamma2, R1, R2, alpha_range=None):
    """Stationary point of the point-A weighted sum-rate, or ``None``.

    ``None`` is returned when ``R1 == R2`` or the stationary point falls
    outside ``(0, 1)``. A valid point is clipped into ``alpha_range``.
    """
    if gamma1 < gamma2:
        raise ValueError("gamma1 must be >= gamma2; swap the users")
    if gamma2 <= 0 or R1 <= 0 or R2 <= 0:
        raise ValueError("gammas and average rates must be positive")
    if R1 == R2:
        return None
    a = (R1 * gamma2 - R2 * gamma1) / ((R2 - R1) * gamma1 * gamma2)
    if not 0.0 < a < 1.0:
        return None
    if alpha_range is not None:
        a = float(np.clip(a, *alpha_range))
    return float(a)


def _alpha_ofdma_batch(g1, g2, w1, w2):
    R1, R2 = 1.0 / w1, 1.0 / w2
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (R1 * g2 - R2 * g1) / ((R2 - R1) * g1 * g2)
    ok = (R1 != R2) & (a > 0.0) & (a < 1.0) & (g1 > g2)
    return np.where(ok, a, np.nan)


def wsr_point_A(alpha, gamma1, gamma2, w1, w2, prof1=None, prof2=None):
    """Weighted sum-rate at point A (SIC at user 1, single-user detection at user 2).

    Without profiles this is the single-tone form; with profiles the
    eigenvalue form, in bits per codeword (not divided by ``K``).
    """
    a = np.asarray(alpha, dtype=float)
    if prof1 is None and prof2 is None:
        r1 = np.log2(1 + a * gamma1)
        r2 = np.log2(1 + (1 - a) * gamma2 / (1 + a * gamma2))
    else:
        prof1 = prof1 or TRIVIAL_PROFILE
        prof2 = prof2 or TRIVIAL_PROFILE
        r1 = prof1.log_det(a * gamma1 / prof1.J)
        r2 = prof2.log_det((1 - a) * gamma2 / (prof2.J * (1 + a * gamma2)))
    out = w1 * r1 + w2 * r2
    return float(out) if np.ndim(out) == 0 else out


def wsr_point_B(alpha, gamma1, gamma2, R1, R2):
    """Weighted sum-rate at point B with both terms in ``gamma2``.

    Kept in this literal form for comparison only; the scheduler never
    operates at point B.
    """
    a = np.asarray(alpha, dtype=float)
    out = (np.log2(1 + a * gamma2 / (1 + (1 - a) * gamma2)) / R1
           + np.log2(1 + (1 - a) * gamma2) / R2)
    return float(out) if np.ndim(out) == 0 else out


def wsr_derivative_scma(alpha, gamma1, gamma2, w1, w2, prof1: EigenProfile, prof2: EigenProfile):
    """``ln(2) * dWSR_A/dalpha`` for the eigenvalue form; broadcasts over arrays."""
    a = np.asarray(alpha, dtype=float)[..., None]
    g1 = np.asarray(gamma1, dtype=float)[..., None]
    g2 = np.asarray(gamma2, dtype=float)[..., None]
    w1 = np.asarray(w1, dtype=float)[..., None]
    w2 = np.asarray(w2, dtype=float)[..., None]
    l1, J1 = prof1.eigenvalues, prof1.J
    l2, J2 = prof2.eigenvalues, prof2.J
    t1 = np.sum(w1 * g1 * l1 / (J1 + g1 * l1 * a), axis=-1)
    t2 = np.sum(w2 * g2 * l2 * (1 + g2) / ((1 + g2 * a) * (J2 + g2 * l2 + (J2 - l2) * g2 * a)),
                axis=-1)
    return t1 - t2


def optimal_alpha_scma_batch(gamma1, gamma2, w1, w2, prof1: EigenProfile, prof2: EigenProfile,
                             alpha_range=None, subintervals: int = ROOT_SUBINTERVALS,
                             tol: float = ROOT_TOL) -> np.ndarray:
    """Vectorised :func:`optimal_alpha_scma`; ``nan`` marks "no valid alpha".

    The derivative is scanned on ``subintervals`` equal pieces of ``[0, 1]``;
    each ``+ -> -`` sign change (a local maximum of the sum-rate) is refined
    by bisection to ``tol``. Among several maxima the one with the largest
    weighted sum-rate wins.
    """
    g1, g2, w1, w2 = np.broadcast_arrays(*(np.asarray(x, dtype=float).ravel()
                                           for x in (gamma1, gamma2, w1, w2)))
    C = g1.size
    grid = np.linspace(0.0, 1.0, subintervals + 1)
    D = wsr_derivative_scma(grid[None, :], g1[:, None], g2[:, None], w1[:, None], w2[:, None],
                            prof1, prof2)
    ci, ii = np.nonzero((D[:, :-1] > 0) & (D[:, 1:] <= 0))
    out = np.full(C, np.nan)
    if ci.size == 0:
        return out
    lo, hi = grid[ii].copy(), grid[ii + 1].copy()
    exact = D[ci, ii + 1] == 0
    lo[exact] = hi[exact]
    args = (g1[ci], g2[ci], w1[ci], w2[ci], prof1, prof2)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        pos = wsr_derivative_scma(mid, *args) > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    roots = 0.5 * (lo + hi)
    valid = (roots > 0.0) & (roots < 1.0)
    if alpha_range is not None:
        roots = np.clip(roots, *alpha_range)
    wsr = _wsr_A_vec(roots, g1[ci], g2[ci], w1[ci], w2[ci], prof1, prof2)
    wsr = np.where(valid, wsr, -np.inf)
    best = np.full(C, -np.inf)
    for c, r, v in zip(ci, roots, wsr):
        if v > best[c]:
            best[c] = v
            out[c] = r
    return out


def _wsr_A_vec(a, g1, g2, w1, w2, prof1, prof2):
    r1 = prof1.log_det(a * g1 / prof1.J)
    r2 = prof2.log_det((1 - a) * g2 / (prof2.J * (1 + a * g2)))
    return w1 * r1 + w2 * r2


def optimal_alpha_scma(gamma1, gamma2, w1, w2, prof1: EigenProfile, prof2: EigenProfile,
                       alpha_range=None):
    """Power split maximising the eigenvalue-form sum-rate, or ``None``.

    Roots of the stationarity condition are searched in ``(0, 1)``; if none
    is a maximum the result is ``None``.
    """
    if gamma1 < gamma2:
        raise ValueError("gamma1 must be >= gamma2; swap the users")
    if gamma2 <= 0:
        raise ValueError("gamma2 must be positive")
    a = optimal_alpha_scma_batch(gamma1, gamma2, w1, w2, prof1, prof2, alpha_range)[0]
    return None if np.isnan(a) else float(a)


def _candidates(anchor: int, g, w, mode, profiles, alpha_range):
    """Best power split and point-A rates for ``anchor`` paired with every other user.

    Returns arrays over the non-anchor users (in input order): partner index,
    strong-role index, alpha (nan if invalid), strong rate, weak rate, wsr.
    """
    n = g.size
    others = np.array([i for i in range(n) if i != anchor], dtype=int)
    anchor_strong = g[anchor] > g[others]
    strong = np.where(anchor_strong, anchor, others)
    weak = np.where(anchor_strong, others, anchor)
    g1, g2, w1, w2 = g[strong], g[weak], w[strong], w[weak]
    usable = g1 > g2
    if mode == "OFDMA":
        a = _alpha_ofdma_batch(g1, g2, w1, w2)
        if alpha_range is not None:
            a = np.clip(a, *alpha_range)
        r1 = np.log2(1 + a * g1)
        r2 = np.log2(1 + (1 - a) * g2 / (1 + a * g2))
    else:
        p1, p2 = profiles
        if p1.K != p2.K:
            raise ValueError("paired profiles must share the signature length K")
        a = np.full(others.size, np.nan)
        if usable.any():
            a[usable] = optimal_alpha_scma_batch(g1[usable], g2[usable], w1[usable], w2[usable],
                                                 p1, p2, alpha_range)
        r1 = p1.log_det(np.nan_to_num(a) * g1 / p1.J) / p1.K
        r2 = p2.log_det((1 - np.nan_to_num(a)) * g2 / (p2.J * (1 + np.nan_to_num(a) * g2))) / p2.K
    a = np.where(usable, a, np.nan)
    wsr = np.where(np.isnan(a), -np.inf, w1 * r1 + w2 * r2)
    return others, strong, weak, a, r1, r2, wsr


def _pair_decision(users, strong, weak, a, r1, r2, wsr):
    return PairingDecision(PAIRED, users[strong].user_id, users[weak].user_id,
                           float(a), float(r1), float(r2), float(wsr))


def _pool_arrays(users, weights, mode, su_profiles):
    g = np.array([u.gamma for u in users], dtype=float)
    w = weights.of([u.avg_rate for u in users])
    r = single_user_rate(g, mode, su_profiles)
    return g, w, r


def greedy_pair(users, weights: SchedulerWeights = SchedulerWeights(), mode: str = "OFDMA",
                alpha_range=DEFAULT_ALPHA_RANGE, profiles=None, su_profiles=None) -> PairingDecision:
    """Greedy two-user pairing.

    The first user is the PF choice; the partner maximises the paired
    weighted sum-rate. The pair is kept only if it strictly beats the first
    user alone.

    Parameters
    ----------
    users : list of UserLinkState
    weights : SchedulerWeights
    mode : {"OFDMA", "SCMA"}
        ``"SCMA"`` uses the eigenvalue rate forms and numerical power split.
    alpha_range : tuple or None
        Allowed ``(alpha_min, alpha_max)``.
    profiles : (EigenProfile, EigenProfile), optional
        Signature profiles of the strong and weak roles in SCMA mode.
    su_profiles : EigenProfile or sequence, optional
        Candidate single-user configurations in SCMA mode.
    """
    users = _sorted(users)
    if mode == "SCMA" and profiles is None:
        profiles = (TRIVIAL_PROFILE, TRIVIAL_PROFILE)
    g, w, r = _pool_arrays(users, weights, mode, su_profiles)
    metric = w * r
    u1 = int(np.argmax(metric))
    single = PairingDecision(SINGLE, users[u1].user_id, rate1=float(r[u1]), wsr=float(metric[u1]))
    if len(users) == 1:
        return single
    others, strong, weak, a, r1, r2, wsr = _candidates(u1, g, w, mode, profiles, alpha_range)
    best = int(np.argmax(wsr))
    if not wsr[best] > metric[u1]:
        return single
    return _pair_decision(users, strong[best], weak[best], a[best], r1[best], r2[best], wsr[best])


def exhaustive_pair(users, weights: SchedulerWeights = SchedulerWeights(), mode: str = "OFDMA",
                    alpha_range=DEFAULT_ALPHA_RANGE, profiles=None, su_profiles=None,
                    cap: int = EXHAUSTIVE_CAP) -> PairingDecision:
    """Global optimum over all single users and all user pairs."""
    users = _sorted(users)
    if len(users) > cap:
        raise ValueError(f"pool of {len(users)} users exceeds exhaustive cap {cap}")
    if mode == "SCMA" and profiles is None:
        profiles = (TRIVIAL_PROFILE, TRIVIAL_PROFILE)
    g, w, r = _pool_arrays(users, weights, mode, su_profiles)
    metric = w * r
    u1 = int(np.argmax(metric))
    best = PairingDecision(SINGLE, users[u1].user_id, rate1=float(r[u1]), wsr=float(metric[u1]))
    for anchor in range(len(users)):
        if len(users) == 1:
            break
        others, strong, weak, a, r1, r2, wsr = _candidates(anchor, g, w, mode, profiles,
                                                           alpha_range)
        i = int(np.argmax(wsr))
        if wsr[i] > best.wsr:
            best = _pair_decision(users, strong[i], weak[i], a[i], r1[i], r2[i], wsr[i])
    return best
