"""Joint multi-layer detection.

Message passing (sum-product) on the tone/layer factor graph in the log
domain, an exhaustive MAP reference, and the two receivers used by paired
users: SIC at the strong user and interference-as-noise at the weak user.

Batched entry points (``*_batch``) take observations with a leading trial
axis ``(B, R, K)`` and are what the Monte Carlo tests use; the single-block
functions wrap them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .codebook import FactorGraph

__all__ = [
    "ReceivedBlock",
    "LayerPosteriors",
    "DEFAULT_ITERATIONS",
    "MAP_ENUMERATION_CAP",
    "graph_from_codebooks",
    "mpa_detect",
    "mpa_detect_batch",
    "map_oracle",
    "map_oracle_batch",
    "sic_receive_strong",
    "single_user_receive_weak",
    "write_trace_csv",
]

DEFAULT_ITERATIONS = 6
MAP_ENUMERATION_CAP = 2**20


@dataclass(frozen=True, eq=False)
class ReceivedBlock:
    """Observation of one codeword period at one user.

    ``y`` and ``h`` are ``(R, K)``; a 1-D array is read as a single antenna.
    ``noise_var`` is a scalar or broadcastable to ``(R, K)``.
    """

    y: np.ndarray
    h: np.ndarray
    noise_var: float | np.ndarray

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.y, dtype=complex))
        h = np.atleast_2d(np.asarray(self.h, dtype=complex))
        if y.shape != h.shape:
            raise ValueError(f"y {y.shape} and h {h.shape} dimensions differ")
        nv = np.broadcast_to(np.asarray(self.noise_var, dtype=float), y.shape)
        if not (nv > 0).all():
            raise ValueError("noise_var must be positive")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "noise_var", np.array(nv))

    @property
    def R(self) -> int:
        return self.y.shape[0]

    @property
    def K(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True, eq=False)
class LayerPosteriors:
    """``probs[j, m]``: posterior probability that layer ``j`` sent codeword ``m``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if (p < 0).any() or not np.allclose(p.sum(axis=-1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("posteriors must be non-negative and sum to one per layer")
        object.__setattr__(self, "probs", p)

    def decisions(self) -> np.ndarray:
        return np.argmax(self.probs, axis=-1)

    def entropy(self) -> np.ndarray:
        return _entropy(self.probs)


def _entropy(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(p), 0.0)
    return t.sum(axis=-1)


def graph_from_codebooks(codebooks) -> FactorGraph:
    """Factor graph whose column ``j`` is the support of ``codebooks[j]``."""
    F = np.stack([np.any(cb.codewords != 0, axis=0) for cb in codebooks], axis=1)
    return FactorGraph(F.astype(np.int8))


def _stack(codebooks, graph: FactorGraph) -> np.ndarray:
    if len(codebooks) != graph.J:
        raise ValueError(f"{len(codebooks)} codebooks for a graph with J={graph.J}")
    Ms = {cb.M for cb in codebooks}
    if len(Ms) != 1:
        raise ValueError("all layers must use the same codebook size")
    X = np.stack([cb.codewords for cb in codebooks])  # (J, M, K)
    if X.shape[2] != graph.K:
        raise ValueError(f"codeword length {X.shape[2]} != graph K={graph.K}")
    outside = np.any(X != 0, axis=1) & (graph.mapping.T == 0)
    if outside.any():
        raise ValueError("codebook support does not match the factor graph")
    return X


def _batch_inputs(y, h, noise_var, K):
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if y.ndim == 2:
        y = y[:, None, :]
    if h.ndim == 2:
        h = h[:, None, :]
    h = np.broadcast_to(h, y.shape)
    if y.ndim != 3 or y.shape[2] != K:
        raise ValueError(f"expected observations of shape (B, R, {K}), got {y.shape}")
    nv = np.broadcast_to(np.asarray(noise_var, dtype=float), y.shape)
    if not (nv > 0).all():
        raise ValueError("noise_var must be positive")
    return y, h, nv


def _tone_loglik(y, h, nv, X, layers, k):
    """Gaussian log-likelihood of every codeword combination on tone ``k``.

    Returns ``(B, M, ..., M)`` with one axis per layer in ``layers``.
    """
    M = X.shape[1]
    d = len(layers)
    s = np.zeros((M,) * d, dtype=complex)
    for i, j in enumerate(layers):
        shape = [1] * d
        shape[i] = M
        s = s + X[j, :, k].reshape(shape)
    s = s.ravel()
    diff = y[:, :, k, None] - h[:, :, k, None] * s[None, None, :]
    ll = -np.sum(np.abs(diff) ** 2 / nv[:, :, k, None], axis=1)
    return ll.reshape((y.shape[0],) + (M,) * d)


def mpa_detect_batch(y, h, noise_var, codebooks, graph: FactorGraph,
                     iterations: int = DEFAULT_ITERATIONS, damping: float = 0.0,
                     trace: list | None = None) -> np.ndarray:
    """Log-domain sum-product detection for a batch of blocks.

    Parameters
    ----------
    y, h : array_like
        ``(B, R, K)`` observations and channels (``(B, K)`` for one antenna).
    noise_var : float or array_like
        Noise variance, broadcastable to ``(B, R, K)``.
    codebooks : list of Codebook
        One codebook per graph column, already scaled by the layer amplitude.
    graph : FactorGraph
    iterations : int
        Flooding rounds (all tone updates, then all layer updates).
    damping : float
        Weight of the previous tone-to-layer message, in ``[0, 1)``.
    trace : list, optional
        If given, ``(iteration, layer, mean posterior entropy)`` tuples are
        appended after every round.

    Returns
    -------
    ndarray
        ``(B, J, M)`` posterior probabilities.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    X = _stack(codebooks, graph)
    J, M, K = X.shape
    y, h, nv = _batch_inputs(y, h, noise_var, K)
    B = y.shape[0]
    logprior = np.full((B, M), -np.log(M))

    tones = [(k, list(graph.layers_on(k))) for k in range(K) if graph.row_degrees[k] > 0]
    ll = {k: _tone_loglik(y, h, nv, X, layers, k) for k, layers in tones}
    v2f = {(k, j): logprior.copy() for k, layers in tones for j in layers}
    f2v = {(k, j): np.zeros((B, M)) for k, layers in tones for j in layers}

    for it in range(iterations):
        new_f2v = {}
        for k, layers in tones:
            d = len(layers)
            for i, j in enumerate(layers):
                total = ll[k]
                for i2, j2 in enumerate(layers):
                    if i2 == i:
                        continue
                    shape = [B] + [1] * d
                    shape[1 + i2] = M
                    total = total + v2f[(k, j2)].reshape(shape)
                axes = tuple(1 + a for a in range(d) if a != i)
                msg = logsumexp(total, axis=axes) if axes else total
                msg = msg - logsumexp(msg, axis=1, keepdims=True)
                if damping and it > 0:
                    msg = (1 - damping) * msg + damping * f2v[(k, j)]
                new_f2v[(k, j)] = msg
        f2v = new_f2v
        for j in range(J):
            ks = [k for k in graph.tones_of(j) if (k, j) in f2v]
            for k in ks:
                m = logprior + sum(f2v[(k2, j)] for k2 in ks if k2 != k)
                v2f[(k, j)] = m - logsumexp(m, axis=1, keepdims=True)
        if trace is not None:
            post = _posteriors(f2v, graph, logprior, J)
            ent = _entropy(post)
            for j in range(J):
                trace.append((it + 1, j, float(ent[:, j].mean())))

    return _posteriors(f2v, graph, logprior, J)


def _posteriors(f2v, graph, logprior, J):
    B, M = logprior.shape
    out = np.empty((B, J, M))
    for j in range(J):
        lp = logprior + sum((f2v[(k, j)] for k in graph.tones_of(j) if (k, j) in f2v),
                            np.zeros_like(logprior))
        out[:, j] = np.exp(lp - logsumexp(lp, axis=1, keepdims=True))
    return out


def mpa_detect(rx: ReceivedBlock, codebooks, graph: FactorGraph,
               iterations: int = DEFAULT_ITERATIONS, damping: float = 0.0,
               trace: list | None = None) -> LayerPosteriors:
    post = mpa_detect_batch(rx.y[None], rx.h[None], rx.noise_var[None], codebooks, graph,
                            iterations=iterations, damping=damping, trace=trace)
    return LayerPosteriors(post[0])


def map_oracle_batch(y, h, noise_var, codebooks, graph: FactorGraph,
                     cap: int = MAP_ENUMERATION_CAP, chunk: int = 2**16) -> np.ndarray:
    """Exact per-layer marginals by enumerating all ``M**J`` hypotheses."""
    X = _stack(codebooks, graph)
    J, M, K = X.shape
    if M**J > cap:
        raise ValueError(f"MAP enumeration of {M}**{J} hypotheses exceeds cap {cap}")
    y, h, nv = _batch_inputs(y, h, noise_var, K)
    B = y.shape[0]
    grids = np.indices((M,) * J).reshape(J, -1)  # (J, M**J), last layer fastest
    sig = sum(X[j][grids[j]] for j in range(J))  # (H, K)
    H = sig.shape[0]
    per = max(1, chunk // H)
    out = np.empty((B, J, M))
    for b0 in range(0, B, per):
        sl = slice(b0, b0 + per)
        diff = y[sl, :, None, :] - h[sl, :, None, :] * sig[None, None]
        ll = -np.sum(np.abs(diff) ** 2 / nv[sl, :, None, :], axis=(1, 3))  # (b, H)
        ll = ll.reshape((-1,) + (M,) * J)
        for j in range(J):
            axes = tuple(1 + a for a in range(J) if a != j)
            lm = logsumexp(ll, axis=axes) if axes else ll
            out[sl, j] = np.exp(lm - logsumexp(lm, axis=1, keepdims=True))
    return out


def map_oracle(rx: ReceivedBlock, codebooks, graph: FactorGraph,
               cap: int = MAP_ENUMERATION_CAP) -> LayerPosteriors:
    post = map_oracle_batch(rx.y[None], rx.h[None], rx.noise_var[None], codebooks, graph, cap=cap)
    return LayerPosteriors(post[0])


def _user_amplitudes(alpha, power, J1, J2):
    return np.sqrt(alpha * power / J1), np.sqrt((1.0 - alpha) * power / J2)


def _scaled(codebooks, amp):
    return [cb.scaled(amp) for cb in codebooks]


def _whitened_noise(rx: ReceivedBlock, alpha, power):
    # interferer replaced by white noise at its per-tone power, per antenna
    return rx.noise_var + alpha * power * np.abs(rx.h) ** 2


def sic_receive_strong(rx: ReceivedBlock, pair, codebooks, power: float = 1.0,
                       iterations: int = DEFAULT_ITERATIONS):
    """Successive interference cancellation at the strong (paired user 1) receiver.

    Parameters
    ----------
    rx : ReceivedBlock
        User 1's observation of the superimposed transmission.
    pair : PairingDecision or float
        Carries the power split ``alpha`` (user 1 gets ``alpha * power``).
    codebooks : tuple(list of Codebook, list of Codebook)
        Unit-energy codebooks of user 1's and user 2's layers.

    Returns
    -------
    (ndarray, ndarray)
        Codeword decisions for user 1's layers and user 2's layers.
    """
    alpha = float(getattr(pair, "alpha", pair))
    cbs1, cbs2 = codebooks
    a1, a2 = _user_amplitudes(alpha, power, len(cbs1), len(cbs2))
    g1, g2 = graph_from_codebooks(cbs1), graph_from_codebooks(cbs2)
    sc1, sc2 = _scaled(cbs1, a1), _scaled(cbs2, a2)

    # stage 1: user 2 with user 1 as noise
    stage1 = ReceivedBlock(rx.y, rx.h, _whitened_noise(rx, alpha, power))
    dec2 = mpa_detect(stage1, sc2, g2, iterations).decisions()
    # stage 2: cancel user 2 (hard decisions)
    x2 = sum(cb.codewords[m] for cb, m in zip(sc2, dec2))
    clean = ReceivedBlock(rx.y - rx.h * x2, rx.h, rx.noise_var)
    # stage 3: user 1 alone
    dec1 = mpa_detect(clean, sc1, g1, iterations).decisions()
    return dec1, dec2


def single_user_receive_weak(rx: ReceivedBlock, pair, codebooks, power: float = 1.0,
                             iterations: int = DEFAULT_ITERATIONS) -> np.ndarray:
    """Detect user 2's layers at user 2, user 1's signal whitened into the noise."""
    alpha = float(getattr(pair, "alpha", pair))
    cbs1, cbs2 = codebooks
    _, a2 = _user_amplitudes(alpha, power, max(len(cbs1), 1), len(cbs2))
    g2 = graph_from_codebooks(cbs2)
    obs = ReceivedBlock(rx.y, rx.h, _whitened_noise(rx, alpha, power))
    return mpa_detect(obs, _scaled(cbs2, a2), g2, iterations).decisions()


def write_trace_csv(rows, path) -> None:
    """Rows are ``(trial, iteration, layer, entropy)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "iteration", "layer", "entropy"])
        w.writerows(rows)
