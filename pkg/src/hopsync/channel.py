"""Stochastic link availability: one Bernoulli coin per undirected edge per
round, and the effective (renormalized) averaging matrices for a round.

Mask draws are keyed by (seed, round), so a round's mask never depends on the
horizon or on the order in which rounds are sampled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SystemMatrices, Topology

# Stream labels keeping the per-purpose RNG streams disjoint under one seed.
_INIT_STREAM = 0
_MASK_STREAM = 1


@dataclass(frozen=True)
class ChannelModel:
    """Per-link availability probability and the seed driving every draw."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must be in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


def sample_mask(model: ChannelModel, topo: Topology, round: int) -> np.ndarray:
    """Availability mask for one round, aligned with topo.edges order.

    Each edge is available independently with probability p; the same coin
    serves both directions. Identical (seed, topology, round) always produce
    the identical mask.
    """
    n_edges = len(topo.edges)
    if model.p >= 1.0:
        return np.ones(n_edges, dtype=bool)
    if model.p <= 0.0:
        return np.zeros(n_edges, dtype=bool)
    rng = np.random.default_rng(
        np.random.SeedSequence([int(model.seed), _MASK_STREAM, int(round)]))
    return rng.random(n_edges) < model.p


def sample_masks(model: ChannelModel, topo: Topology, rounds: int) -> np.ndarray:
    """Masks for rounds 0..rounds-1 as a (rounds, n_edges) bool array."""
    n_edges = len(topo.edges)
    if model.p >= 1.0:
        return np.ones((rounds, n_edges), dtype=bool)
    if model.p <= 0.0:
        return np.zeros((rounds, n_edges), dtype=bool)
    out = np.empty((rounds, n_edges), dtype=bool)
    for n in range(rounds):
        out[n] = sample_mask(model, topo, n)
    return out


def effective_matrices(topo: Topology, mask: np.ndarray) -> SystemMatrices:
    """Averaging matrices restricted to the edges available this round.

    Neighbor counts are recomputed over available edges only; a node with no
    available neighbor holds its value (a[i][i] = 1, b[i] = 0), so every row
    of (a | b) stays stochastic.
    """
    n = topo.node_count
    gw = topo.gateway_id
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (len(topo.edges),):
        raise ValueError("mask length must equal the edge count")
    deg = np.zeros(n, dtype=np.int64)
    for k, (u, v) in enumerate(topo.edges):
        if not mask[k]:
            continue
        if u < n:
            deg[u] += 1
        if v < n:
            deg[v] += 1
    a = np.zeros((n, n), dtype=np.float64)
    b = np.zeros(n, dtype=np.float64)
    for k, (u, v) in enumerate(topo.edges):
        if not mask[k]:
            continue
        if v == gw:
            b[u] = 1.0 / deg[u]
        else:
            a[u, v] = 1.0 / deg[u]
            a[v, u] = 1.0 / deg[v]
    for i in range(n):
        if deg[i] == 0:
            a[i, i] = 1.0
    return SystemMatrices(a, b)
