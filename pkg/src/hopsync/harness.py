"""Experiment harness: full runs, Table-style summaries, scaling sweeps, and
CSV emission.

A run evolves all clocks to the round budget. By default a node's detection
only records where it would have frozen; with halt_on_detect the node
actually drops out after its decision round (its clock stays frozen and its
links go silent), which changes the dynamics its neighbors see.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .channel import ChannelModel, effective_matrices, sample_masks
from .detector import DetectionEvent, DetectorConfig, OnlineDetector, detect, node_filter_input
from .model import Topology, grid_topology, has_spanning_path

# Uniform initial clocks are drawn from stream 0 of the run seed; channel
# masks use stream 1 (see channel.py), so the two never collide.
_INIT_STREAM = 0

_TRACE_HEADER = ["round", "node", "clock", "error", "filter_out", "detected"]
_SUMMARY_HEADER = ["node", "min_error_instant", "min_error_value",
                   "ss_error_instant", "ss_error_value",
                   "detected_instant", "detected_error_value"]
_SWEEP_HEADER = ["nodes", "instant_mean", "instant_min", "instant_max"]


class ConfigInvalid(ValueError):
    """A SimConfig field is out of range or inconsistent."""


@dataclass(frozen=True)
class SimConfig:
    """Everything a run needs: topology, timing, channel, seed, detector.

    init_max defaults to 100 * delta_t when not given; initial clocks are
    uniform draws from [init_min, init_max].
    """

    topology: Topology
    delta_t: float = 0.001
    n_max: int = 500
    p: float = 1.0
    seed: int = 0
    init_min: float = 0.0
    init_max: Optional[float] = None
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    halt_on_detect: bool = False

    def __post_init__(self):
        if self.delta_t <= 0:
            raise ConfigInvalid("delta_t must be positive")
        if self.init_max is None:
            object.__setattr__(self, "init_max", 100.0 * self.delta_t)
        if self.init_min > self.init_max:
            raise ConfigInvalid("init_min must not exceed init_max")
        if not (0.0 <= self.p <= 1.0):
            raise ConfigInvalid("p must be in [0, 1]")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigInvalid("seed must be a nonnegative integer")
        if self.topology.node_count < 1:
            raise ConfigInvalid("topology must have at least one ordinary node")
        if self.n_max < self.detector.k_guard + 7:
            raise ConfigInvalid("n_max must be at least k_guard + 7")


@dataclass(frozen=True)
class RunTrace:
    """Complete run record: clock/error/filter series and detection events.

    times, errors, filter_outputs are (n_max + 1, N) arrays indexed by round
    then node; filter_outputs is NaN where the filter window is undefined.
    """

    config: SimConfig
    topology: Topology
    connected: bool
    times: np.ndarray
    errors: np.ndarray
    filter_outputs: np.ndarray
    events: Tuple[DetectionEvent, ...]

    @property
    def n_max(self) -> int:
        return self.times.shape[0] - 1


@dataclass(frozen=True)
class NodeSummary:
    """Table-style row for one node.

    detected_instant is the flagged instant (the event's target round) and
    detected_error_value is |e| read at that instant; both are None when the
    rule never fired.
    """

    node_id: int
    min_error_instant: int
    min_error_value: float
    ss_error_instant: int
    ss_error_value: float
    detected_instant: Optional[int]
    detected_error_value: Optional[float]


@dataclass(frozen=True)
class SweepPoint:
    node_count: int
    instant_mean: float
    instant_min: float
    instant_max: float


@dataclass(frozen=True)
class SweepResult:
    points: Tuple[SweepPoint, ...]
    slope: Optional[float]
    intercept: Optional[float]
    r_squared: Optional[float]


def initial_clocks(cfg: SimConfig) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), _INIT_STREAM]))
    return rng.uniform(cfg.init_min, cfg.init_max, size=cfg.topology.node_count)


def run(cfg: SimConfig) -> RunTrace:
    """Evolve the system for cfg.n_max rounds and run every node's detector.

    Deterministic for a fixed config, including across kernel backends. A
    disconnected topology is simulated anyway and flagged via ``connected``.
    """
    topo = cfg.topology
    n = topo.node_count
    connected = has_spanning_path(topo)
    eu, ev = topo.edge_arrays()
    masks = sample_masks(ChannelModel(p=cfg.p, seed=cfg.seed), topo, cfg.n_max)
    t0 = initial_clocks(cfg)

    if not cfg.halt_on_detect:
        times = kernels.run_rounds(t0, eu, ev, n, masks, cfg.delta_t)
        events = []
        for i in range(n):
            x = node_filter_input(times[:, i], cfg.delta_t)
            event = detect(x, cfg.detector, node_id=i, clocks=times[:, i])
            if event is not None:
                events.append(event)
    else:
        times, events = _run_halting(cfg, t0, eu, ev, masks)

    rounds = np.arange(cfg.n_max + 1, dtype=np.float64)
    errors = cfg.delta_t * rounds[:, None] - times
    filter_outputs = np.full((cfg.n_max + 1, n), np.nan)
    for i in range(n):
        y = kernels.filter_series(node_filter_input(times[:, i], cfg.delta_t),
                                  cfg.detector.c_f)
        filter_outputs[3:cfg.n_max - 2, i] = y
    return RunTrace(config=cfg, topology=topo, connected=connected, times=times,
                    errors=errors, filter_outputs=filter_outputs,
                    events=tuple(sorted(events, key=lambda e: e.node_id)))


def _run_halting(cfg: SimConfig, t0, eu, ev, masks):
    """Round-by-round loop where detected nodes leave the exchange."""
    n = cfg.topology.node_count
    halted = np.zeros(n, dtype=bool)
    detectors = [OnlineDetector(cfg.detector, node_id=i) for i in range(n)]
    times = np.empty((cfg.n_max + 1, n), dtype=np.float64)
    times[0] = t0
    events = []

    def push_all(rnd):
        for i in range(n):
            if halted[i]:
                continue
            x = abs(times[rnd, i] - rnd * cfg.delta_t)
            event = detectors[i].push(x, clock=times[rnd, i])
            if event is not None:
                events.append(event)
                halted[i] = True

    push_all(0)
    t = t0.copy()
    for rnd in range(cfg.n_max):
        # silence every edge touching a halted node, then advance one round
        row = masks[rnd] & ~halted[eu]
        if len(ev):
            row &= (ev >= n) | ~halted[np.minimum(ev, n - 1)]
        stepped = kernels.run_rounds(t, eu, ev, n, row[None, :], cfg.delta_t,
                                     round0=rnd)
        t = np.where(halted, t, stepped[1])
        times[rnd + 1] = t
        push_all(rnd + 1)
    return times, events


def run_error_recursion(cfg: SimConfig) -> np.ndarray:
    """Reference error path: iterate E' = a_eff @ E + delta_t directly.

    Used for cross-checks against the trace errors; shares the exact same
    mask stream as run().
    """
    topo = cfg.topology
    masks = sample_masks(ChannelModel(p=cfg.p, seed=cfg.seed), topo, cfg.n_max)
    t0 = initial_clocks(cfg)
    e = -t0.copy()
    out = np.empty((cfg.n_max + 1, topo.node_count))
    out[0] = e
    for rnd in range(cfg.n_max):
        mats = effective_matrices(topo, masks[rnd])
        e = mats.a @ e + cfg.delta_t
        out[rnd + 1] = e
    return out


def summarize(trace: RunTrace) -> List[NodeSummary]:
    """One NodeSummary per node from a complete trace."""
    n = trace.topology.node_count
    abs_err = np.abs(trace.errors)
    by_node = {e.node_id: e for e in trace.events}
    out = []
    for i in range(n):
        col = abs_err[:, i]
        mi = int(np.argmin(col))
        event = by_node.get(i)
        det_instant = event.target_round if event is not None else None
        det_value = float(col[det_instant]) if event is not None else None
        out.append(NodeSummary(
            node_id=i,
            min_error_instant=mi,
            min_error_value=float(col[mi]),
            ss_error_instant=trace.n_max,
            ss_error_value=float(col[-1]),
            detected_instant=det_instant,
            detected_error_value=det_value,
        ))
    return out


def _sweep_point(size, seed_offset, template: SimConfig) -> float:
    rows, cols = size
    topo = grid_topology(rows, cols, gateway="corner")
    cfg = replace(template, topology=topo, seed=template.seed + seed_offset)
    trace = run(cfg)
    mins = np.argmin(np.abs(trace.errors), axis=0)
    return float(mins.mean())


def scaling_sweep(sizes: Sequence[Tuple[int, int]], template: SimConfig,
                  seeds: int = 5, workers: Optional[int] = None) -> SweepResult:
    """Mean min-error instant versus network size over grid topologies.

    Each size runs ``seeds`` seeds (template.seed, template.seed+1, ...); the
    per-run metric is the node-average min-|e| instant. Returns the per-size
    mean/min/max plus a least-squares line over (total nodes, mean instant)
    with its R-squared, which is None when fewer than two sizes are swept.
    Results are independent of ``workers``.
    """
    jobs = [(si, s) for si in range(len(sizes)) for s in range(seeds)]
    values = {}
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_sweep_point, sizes[si], s, template): (si, s)
                    for si, s in jobs}
            for fut, key in futs.items():
                values[key] = fut.result()
    else:
        for si, s in jobs:
            values[(si, s)] = _sweep_point(sizes[si], s, template)

    points = []
    for si, (rows, cols) in enumerate(sizes):
        vals = [values[(si, s)] for s in range(seeds)]
        points.append(SweepPoint(node_count=rows * cols,
                                 instant_mean=float(np.mean(vals)),
                                 instant_min=float(np.min(vals)),
                                 instant_max=float(np.max(vals))))
    if len(points) < 2:
        return SweepResult(points=tuple(points), slope=None, intercept=None,
                           r_squared=None)
    x = np.array([p.node_count for p in points], dtype=np.float64)
    y = np.array([p.instant_mean for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = None if ss_tot == 0.0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return SweepResult(points=tuple(points), slope=float(slope),
                       intercept=float(intercept), r_squared=r2)


def _fmt(v) -> str:
    if v is None:
        return ""
    f = float(v)
    if np.isnan(f):
        return ""
    return repr(f)


def write_trace_csv(trace: RunTrace, path) -> None:
    """Rows are (round, node) pairs, round-major. ``filter_out`` is empty
    where the filter window is undefined; ``detected`` is 1 exactly at a
    node's flagged instant."""
    flagged = {(e.target_round, e.node_id) for e in trace.events}
    n = trace.topology.node_count
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_TRACE_HEADER)
        for rnd in range(trace.n_max + 1):
            for i in range(n):
                w.writerow([rnd, i,
                            repr(float(trace.times[rnd, i])),
                            repr(float(trace.errors[rnd, i])),
                            _fmt(trace.filter_outputs[rnd, i]),
                            1 if (rnd, i) in flagged else 0])


def write_summary_csv(summaries: Sequence[NodeSummary], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SUMMARY_HEADER)
        for s in summaries:
            w.writerow([s.node_id, s.min_error_instant, _fmt(s.min_error_value),
                        s.ss_error_instant, _fmt(s.ss_error_value),
                        "" if s.detected_instant is None else s.detected_instant,
                        _fmt(s.detected_error_value)])


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SWEEP_HEADER)
        for p in result.points:
            w.writerow([p.node_count, _fmt(p.instant_mean),
                        _fmt(p.instant_min), _fmt(p.instant_max)])
