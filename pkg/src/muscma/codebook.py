"""Sparse factor graphs, LDS signatures and SCMA codebooks.

A layer occupies ``N`` of the ``K`` tones of a codeword. The factor graph
enumerates every ``N``-subset of tones as one layer, which for ``K=4,
N=2`` gives the usual 6-layer graph with overloading factor 1.5.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

__all__ = [
    "FactorGraph",
    "SignatureMatrix",
    "Codebook",
    "LayerAllocation",
    "build_factor_graph",
    "build_lds_signatures",
    "build_scma_codebook",
    "build_scma_codebooks",
    "encode",
    "decode_index",
    "write_codebooks_csv",
    "SUPPORTED_M",
]

SUPPORTED_M = (4, 8, 16)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FactorGraph:
    """Binary ``K x J`` tone/layer incidence matrix."""

    mapping: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.mapping)
        if F.ndim != 2 or F.size == 0:
            raise ValueError("factor graph mapping must be a non-empty 2-D array")
        if not np.isin(F, (0, 1)).all():
            raise ValueError("factor graph mapping must be binary")
        F = F.astype(np.int8)
        if (F.sum(axis=0) == 0).any():
            raise ValueError("every layer must occupy at least one tone")
        if len({tuple(col) for col in F.T}) != F.shape[1]:
            raise ValueError("factor graph has identical columns")
        object.__setattr__(self, "mapping", _frozen(F))

    @property
    def K(self) -> int:
        return self.mapping.shape[0]

    @property
    def J(self) -> int:
        return self.mapping.shape[1]

    @property
    def N(self) -> int | None:
        """Column weight, or ``None`` for an irregular graph."""
        w = np.unique(self.mapping.sum(axis=0))
        return int(w[0]) if w.size == 1 else None

    @property
    def row_degrees(self) -> np.ndarray:
        return self.mapping.sum(axis=1)

    def tones_of(self, layer: int) -> np.ndarray:
        return np.flatnonzero(self.mapping[:, layer])

    def layers_on(self, tone: int) -> np.ndarray:
        return np.flatnonzero(self.mapping[tone])

    def subgraph(self, layers) -> FactorGraph:
        return FactorGraph(self.mapping[:, list(layers)])

    def is_tree(self) -> bool:
        """True if the bipartite tone/layer graph is a forest."""
        edges = int(self.mapping.sum())
        nodes = self.K + self.J
        # union-find on tones + layers
        parent = list(range(nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for k, j in zip(*np.nonzero(self.mapping)):
            ra, rb = find(int(k)), find(self.K + int(j))
            if ra == rb:
                return False
            parent[ra] = rb
        components = len({find(a) for a in range(nodes)})
        return edges == nodes - components

    def __eq__(self, other):
        return isinstance(other, FactorGraph) and np.array_equal(self.mapping, other.mapping)

    def __hash__(self):
        return hash(self.mapping.tobytes() + bytes(self.mapping.shape))


@dataclass(frozen=True, eq=False)
class SignatureMatrix:
    """Low density spreading matrix; column ``j`` is the signature of layer ``j``."""

    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=complex)
        if S.ndim != 2:
            raise ValueError("signature matrix must be 2-D")
        norms = np.sum(np.abs(S) ** 2, axis=0)
        if not np.allclose(norms, S.shape[0], rtol=0, atol=1e-9):
            raise ValueError("every signature must have squared norm K")
        object.__setattr__(self, "S", _frozen(S))

    @property
    def K(self) -> int:
        return self.S.shape[0]

    @property
    def J(self) -> int:
        return self.S.shape[1]

    def columns(self, layers) -> SignatureMatrix:
        return SignatureMatrix(self.S[:, list(layers)])


@dataclass(frozen=True, eq=False)
class Codebook:
    """``M`` sparse ``K``-dimensional codewords of one layer (rows of ``codewords``)."""

    codewords: np.ndarray
    layer_index: int = 0

    def __post_init__(self):
        C = np.asarray(self.codewords, dtype=complex)
        if C.ndim != 2:
            raise ValueError("codewords must be an (M, K) array")
        object.__setattr__(self, "codewords", _frozen(C))

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def K(self) -> int:
        return self.codewords.shape[1]

    @property
    def bits_per_codeword(self) -> int:
        return int(np.log2(self.M))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.any(self.codewords != 0, axis=0))

    @property
    def mean_energy(self) -> float:
        return float(np.mean(np.sum(np.abs(self.codewords) ** 2, axis=1)))

    def scaled(self, factor: float) -> Codebook:
        """Codebook with every codeword multiplied by ``factor`` (amplitude)."""
        return Codebook(self.codewords * factor, self.layer_index)

    def min_distance(self) -> float:
        C = self.codewords
        d = np.linalg.norm(C[:, None, :] - C[None, :, :], axis=2)
        return float(d[np.triu_indices(self.M, 1)].min())


@dataclass(frozen=True)
class LayerAllocation:
    user: int
    layers: tuple[int, ...] = field(default_factory=tuple)

    @property
    def J_u(self) -> int:
        return len(self.layers)

    @staticmethod
    def validate(allocations, graph: FactorGraph) -> None:
        """Raise if allocations overlap or exceed the graph's layers."""
        seen: set[int] = set()
        for a in allocations:
            for j in a.layers:
                if not 0 <= j < graph.J:
                    raise ValueError(f"layer {j} not in graph with J={graph.J}")
                if j in seen:
                    raise ValueError(f"layer {j} allocated twice")
                seen.add(j)


def build_factor_graph(K: int, N: int) -> FactorGraph:
    """All ``N``-subsets of ``K`` tones, lexicographic, one per layer."""
    if not 1 <= N <= K:
        raise ValueError(f"invalid dimensions: need 1 <= N <= K, got K={K}, N={N}")
    J = comb(K, N)
    F = np.zeros((K, J), dtype=np.int8)
    for j, tones in enumerate(itertools.combinations(range(K), N)):
        F[list(tones), j] = 1
    return FactorGraph(F)


def build_lds_signatures(graph: FactorGraph, phase_seed: int = 0) -> SignatureMatrix:
    """Sparse signatures with ``K``-th root of unity phases.

    The nonzero entry of layer ``j`` on tone ``k`` is
    ``sqrt(K / N_j) * exp(2j*pi*((k*(j+1) + seed) mod K) / K)``, so every
    signature has squared norm ``K``.
    """
    F = graph.mapping
    K = graph.K
    S = np.zeros(F.shape, dtype=complex)
    for j in range(graph.J):
        tones = graph.tones_of(j)
        amp = np.sqrt(K / tones.size)
        idx = (tones * (j + 1) + phase_seed) % K
        S[tones, j] = amp * np.exp(2j * np.pi * idx / K)
    return SignatureMatrix(S)


def _qam(M: int) -> np.ndarray:
    if M == 4:
        re, im = np.array([-1.0, 1.0]), np.array([-1.0, 1.0])
    elif M == 8:
        re, im = np.array([-3.0, -1.0, 1.0, 3.0]), np.array([-1.0, 1.0])
    elif M == 16:
        re, im = np.array([-3.0, -1.0, 1.0, 3.0]), np.array([-3.0, -1.0, 1.0, 3.0])
    else:
        raise ValueError(f"unsupported codebook size M={M}; expected one of {SUPPORTED_M}")
    pts = (re[:, None] + 1j * im[None, :]).ravel()
    return pts


# rotation that makes the real/imag projections of every supported QAM distinct
_MOTHER_ROTATION = np.arctan(1 / 3)


def _mother_constellation(M: int, N: int) -> np.ndarray:
    """``(M, N)`` constellation from rotated QAM with coordinate interleaving.

    Dimension ``n`` uses the QAM rotated by ``theta + n*pi/(2N)``; its real
    part comes from that rotation and its imaginary part from the next
    dimension's rotation, so every dimension carries information about every
    real coordinate of the QAM point.
    """
    q = _qam(M)
    rot = np.stack([q * np.exp(1j * (_MOTHER_ROTATION + n * np.pi / (2 * N))) for n in range(N)], axis=1)
    mother = rot.real + 1j * np.roll(rot, -1, axis=1).imag
    return mother


def build_scma_codebook(graph: FactorGraph, layer: int, M: int) -> Codebook:
    """Codebook of ``layer``: mother constellation on the layer's tones,
    rotated by the layer phases ``exp(2j*pi*layer*n/J)`` (``n = 1..N``) and
    normalised to mean energy ``K``."""
    if M not in SUPPORTED_M:
        raise ValueError(f"unsupported codebook size M={M}; expected one of {SUPPORTED_M}")
    if not 0 <= layer < graph.J:
        raise ValueError(f"layer {layer} out of range for J={graph.J}")
    tones = graph.tones_of(layer)
    N = tones.size
    mother = _mother_constellation(M, N)
    phases = np.exp(2j * np.pi * layer * np.arange(1, N + 1) / graph.J)
    C = np.zeros((M, graph.K), dtype=complex)
    C[:, tones] = mother * phases
    energy = np.mean(np.sum(np.abs(C) ** 2, axis=1))
    C *= np.sqrt(graph.K / energy)
    return Codebook(C, layer)


def build_scma_codebooks(graph: FactorGraph, M: int) -> list[Codebook]:
    return [build_scma_codebook(graph, j, M) for j in range(graph.J)]


def _bits_to_index(bits) -> int:
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0/1, got {b!r}")
        idx = (idx << 1) | int(b)
    return idx


def encode(bits, cb: Codebook) -> np.ndarray:
    """Map ``log2(M)`` bits (MSB first) to a codeword."""
    bits = list(np.asarray(bits).ravel())
    if len(bits) != cb.bits_per_codeword:
        raise ValueError(f"expected {cb.bits_per_codeword} bits, got {len(bits)}")
    return cb.codewords[_bits_to_index(bits)]


def decode_index(index: int, cb: Codebook) -> np.ndarray:
    """Bits (MSB first) carried by codeword ``index``."""
    if not 0 <= index < cb.M:
        raise ValueError(f"codeword index {index} out of range")
    n = cb.bits_per_codeword
    return np.array([(index >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


def write_codebooks_csv(codebooks, path) -> None:
    """Rows ``layer, codeword, tone, real, imag`` for every tone of every codeword."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["layer", "codeword", "tone", "real", "imag"])
        for cb in codebooks:
            for m, cw in enumerate(cb.codewords):
                for k, v in enumerate(cw):
                    w.writerow([cb.layer_index, m, k, repr(float(v.real)), repr(float(v.imag))])
