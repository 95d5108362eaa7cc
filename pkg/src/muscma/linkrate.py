"""Rate and SINR relations for sparse spreading and two-user power sharing.

All quantities are linear (no dB). Rates are in bits per codeword period
(per tone when ``K = 1``); divide by ``K`` for a per-tone figure.

User ordering follows the paired-user convention: user 1 is the stronger
user (``gamma1 > gamma2``). Under the whitening approximation the model is
degraded, so user 1 can decode anything user 2 can.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codebook import SignatureMatrix

__all__ = [
    "UserLinkState",
    "SpectrumShare",
    "EigenProfile",
    "RegionVerdict",
    "sparse_capacity",
    "sparse_capacity_det",
    "effective_sinrs",
    "detection_margin",
    "rate_region_check",
    "adjusted_rates_scma",
    "scma_rate",
    "whitened_interference",
    "TRIVIAL_PROFILE",
]


@dataclass(frozen=True)
class UserLinkState:
    """Scheduler view of one user: CQI ``gamma`` and long-term average rate."""

    user_id: int
    gamma: float
    avg_rate: float
    noise_power: float | None = None
    channel: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.avg_rate > 0:
            raise ValueError(f"avg_rate must be > 0, got {self.avg_rate}")

    @classmethod
    def from_channel(cls, user_id, channel, power, noise_power, avg_rate):
        """State whose ``gamma`` is ``||h||^2 P / N``."""
        h = np.asarray(channel, dtype=complex)
        gamma = float(np.sum(np.abs(h) ** 2) * power / noise_power)
        return cls(user_id, gamma, avg_rate, noise_power, h)


@dataclass(frozen=True)
class SpectrumShare:
    """Power split: user 1 gets ``alpha * total_power``, user 2 the rest."""

    alpha: float
    total_power: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")


@dataclass(frozen=True, eq=False)
class EigenProfile:
    """Eigenvalues of ``S^H S`` for a user's ``J`` signatures of length ``K``."""

    eigenvalues: np.ndarray
    J: int
    K: int

    def __post_init__(self):
        lam = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())[::-1]
        if (lam < -1e-9 * max(1.0, lam.max(initial=0.0))).any():
            raise ValueError("eigenvalues must be non-negative")
        lam = np.clip(lam, 0.0, None)
        if self.J < 1:
            raise ValueError("J must be >= 1")
        if not np.isclose(lam.sum(), self.J * self.K, rtol=0, atol=1e-9 * self.J * self.K):
            raise ValueError(f"eigenvalues sum to {lam.sum()}, expected J*K={self.J * self.K}")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def from_signatures(cls, S) -> EigenProfile:
        S = S.S if isinstance(S, SignatureMatrix) else np.asarray(S, dtype=complex)
        lam = np.linalg.eigvalsh(S.conj().T @ S)
        return cls(lam, S.shape[1], S.shape[0])

    def log_det(self, rho) -> np.ndarray:
        """``sum_i log2(1 + rho * lambda_i)``, vectorised over ``rho``."""
        rho = np.asarray(rho, dtype=float)
        return np.sum(np.log2(1.0 + rho[..., None] * self.eigenvalues), axis=-1)

    def __eq__(self, other):
        return (isinstance(other, EigenProfile) and (self.J, self.K) == (other.J, other.K)
                and np.array_equal(self.eigenvalues, other.eigenvalues))

    def __hash__(self):
        return hash((self.J, self.K, self.eigenvalues.tobytes()))


# S = [1]: one layer on one tone (plain OFDMA)
TRIVIAL_PROFILE = EigenProfile(np.ones(1), 1, 1)


@dataclass(frozen=True)
class RegionVerdict:
    feasible: bool
    violated: tuple[str, ...] = ()

    def __bool__(self):
        return self.feasible


def _S(S) -> np.ndarray:
    return S.S if isinstance(S, SignatureMatrix) else np.atleast_2d(np.asarray(S, dtype=complex))


def sparse_capacity(S, J: int, gamma: float) -> float:
    """``log2 det(I + gamma/J * S^H S)`` evaluated through the eigenvalues of ``S^H S``."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    S = _S(S)
    lam = np.clip(np.linalg.eigvalsh(S.conj().T @ S), 0.0, None)
    return float(np.sum(np.log2(1.0 + gamma / J * lam)))


def sparse_capacity_det(S, J: int, gamma: float) -> float:
    """Same quantity through a direct log-determinant; kept as a cross-check."""
    S = _S(S)
    A = np.eye(S.shape[1]) + gamma / J * (S.conj().T @ S)
    sign, logdet = np.linalg.slogdet(A)
    return float(logdet / np.log(2))


def _check_order(gamma1, gamma2):
    if not gamma1 > gamma2:
        raise ValueError(
            f"user ordering violated: gamma1={gamma1} must exceed gamma2={gamma2}; swap the users")
    if gamma2 < 0:
        raise ValueError("gamma2 must be >= 0")


def _alpha(share):
    return share.alpha if isinstance(share, SpectrumShare) else float(share)


def effective_sinrs(share, gamma1: float, gamma2: float):
    """Effective SINRs ``(user 1 after SIC, user 2 at user 2, user 2 at user 1)``.

    The weak user's signal observed at the strong receiver travels through the
    strong user's channel, so its SINR there is ``(1-a) g1 / (1 + a g1)``.
    """
    _check_order(gamma1, gamma2)
    a = _alpha(share)
    g1_eff = a * gamma1
    g2_eff = (1 - a) * gamma2 / (1 + a * gamma2)
    g21_eff = (1 - a) * gamma1 / (1 + a * gamma1)
    return g1_eff, g2_eff, g21_eff


def detection_margin(share, gamma1: float, gamma2: float) -> float:
    """Ratio of user 2's SINR at user 1 to its SINR at user 2."""
    if gamma2 == 0:
        raise ValueError("detection margin undefined for gamma2 = 0")
    if gamma1 == gamma2:
        return 1.0
    _check_order(gamma1, gamma2)
    a = _alpha(share)
    return gamma1 / gamma2 * (1 + a * gamma2) / (1 + a * gamma1)


def rate_region_check(r1: float, r2: float, share, gamma1: float, gamma2: float,
                      prof1: EigenProfile | None = None, prof2: EigenProfile | None = None,
                      tol: float = 1e-12) -> RegionVerdict:
    """Is ``(r1, r2)`` decodable by both paired users?

    Without profiles the single-tone constraints are checked:
    ``sum`` (joint decoding at user 1), ``weak_at_strong`` (user 2's data at
    user 1), ``strong`` (user 1 after SIC) and ``weak`` (user 2 at user 2).
    With eigen profiles the same constraints use the sparse-spreading rates;
    the sum constraint is then implied by the other two and not reported.
    """
    if r1 < 0 or r2 < 0:
        raise ValueError("rates must be non-negative")
    a = _alpha(share)
    g1, g2 = gamma1, gamma2
    violated = []
    if prof1 is None and prof2 is None:
        g1e = a * g1
        g2e = (1 - a) * g2 / (1 + a * g2)
        g21e = (1 - a) * g1 / (1 + a * g1)
        if r1 + r2 > np.log2(1 + g1) + tol:
            violated.append("sum")
        if r2 > np.log2(1 + g21e) + tol:
            violated.append("weak_at_strong")
        if r1 > np.log2(1 + g1e) + tol:
            violated.append("strong")
        if r2 > np.log2(1 + g2e) + tol:
            violated.append("weak")
    else:
        prof1 = prof1 or TRIVIAL_PROFILE
        prof2 = prof2 or TRIVIAL_PROFILE
        if r2 > float(prof2.log_det((1 - a) * g1 / (prof2.J * (1 + a * g1)))) + tol:
            violated.append("weak_at_strong")
        if r1 > float(prof1.log_det(a * g1 / prof1.J)) + tol:
            violated.append("strong")
        if r2 > float(prof2.log_det((1 - a) * g2 / (prof2.J * (1 + a * g2)))) + tol:
            violated.append("weak")
    return RegionVerdict(not violated, tuple(violated))


def adjusted_rates_scma(share, gamma1: float, gamma2: float,
                        prof1: EigenProfile, prof2: EigenProfile):
    """Point-A rates of the paired users with sparse signatures."""
    a = _alpha(share)
    r1 = prof1.log_det(a * gamma1 / prof1.J)
    r2 = prof2.log_det((1 - a) * gamma2 / (prof2.J * (1 + a * gamma2)))
    return float(r1), float(r2)


def scma_rate(gamma, profile: EigenProfile):
    """Single-user rate ``sum_i log2(1 + gamma/J * lambda_i)`` (vectorised)."""
    return profile.log_det(np.asarray(gamma, dtype=float) / profile.J)


def whitened_interference(share, P: float, h2, N2: float) -> float:
    """White noise level ``N2 + alpha P ||h2||^2`` standing in for the
    co-paired user's coloured interference at user 2."""
    a = _alpha(share)
    if not 0.0 <= a <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    h2 = np.asarray(h2, dtype=complex)
    return float(N2 + a * P * np.sum(np.abs(h2) ** 2))
