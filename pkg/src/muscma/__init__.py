"""Sparse code multiple access link and system-level simulation toolkit."""

from .codebook import (Codebook, FactorGraph, LayerAllocation, SignatureMatrix, build_factor_graph,
                       build_lds_signatures, build_scma_codebook, build_scma_codebooks, decode_index,
                       encode)
from .detector import (LayerPosteriors, ReceivedBlock, map_oracle, mpa_detect, sic_receive_strong,
                       single_user_receive_weak)
from .linkrate import (EigenProfile, RegionVerdict, SpectrumShare, UserLinkState, detection_margin,
                       effective_sinrs, rate_region_check, sparse_capacity)
from .pairing import (PairingDecision, SchedulerWeights, exhaustive_pair, greedy_pair,
                      optimal_alpha_ofdma, optimal_alpha_scma, pf_select)

__version__ = "0.1.0"

__all__ = [
    "Codebook", "FactorGraph", "LayerAllocation", "SignatureMatrix", "build_factor_graph",
    "build_lds_signatures", "build_scma_codebook", "build_scma_codebooks", "decode_index", "encode",
    "LayerPosteriors", "ReceivedBlock", "map_oracle", "mpa_detect", "sic_receive_strong",
    "single_user_receive_weak", "EigenProfile", "RegionVerdict", "SpectrumShare", "UserLinkState",
    "detection_margin", "effective_sinrs", "rate_region_check", "sparse_capacity",
    "PairingDecision", "SchedulerWeights", "exhaustive_pair", "greedy_pair", "optimal_alpha_ofdma",
    "optimal_alpha_scma", "pf_select",
]
