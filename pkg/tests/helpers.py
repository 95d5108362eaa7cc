"""Shared test fixtures that are plain functions rather than pytest fixtures."""

import numpy as np

from muscma.codebook import FactorGraph


def cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_tree(rng, K):
    """Factor graph whose layers are the edges of a random labelled tree on K tones."""
    # Pruefer decoding
    seq = rng.integers(0, K, K - 2)
    degree = np.ones(K, dtype=int)
    for s in seq:
        degree[s] += 1
    edges = []
    for s in seq:
        leaf = int(np.flatnonzero(degree == 1)[0])
        edges.append((leaf, int(s)))
        degree[leaf] -= 1
        degree[s] -= 1
    u, v = np.flatnonzero(degree == 1)
    edges.append((int(u), int(v)))
    F = np.zeros((K, K - 1), dtype=int)
    for j, (a, b) in enumerate(edges):
        F[[a, b], j] = 1
    return FactorGraph(F)


def simulate(rng, graph, cbs, snr_db, trials, R=1, fading=False):
    """Random codeword indices and the matching noisy observations."""
    J, K = graph.J, graph.K
    tx = rng.integers(0, cbs[0].M, (trials, J))
    X = np.stack([cb.codewords for cb in cbs])
    x = sum(X[j][tx[:, j]] for j in range(J))
    h = cn(rng, (trials, R, K)) if fading else np.ones((trials, R, K), complex)
    nv = 10 ** (-snr_db / 10)
    y = h * x[:, None, :] + np.sqrt(nv) * cn(rng, (trials, R, K))
    return tx, y, h, nv
