"""The seven-tap difference filter and the polarity-change stopping rule.

Each node runs one detector over its own rectified detrended clock series.
The filter output at index m compares a weighted look-ahead block of the
series against a weighted look-back block; its first sign change after the
guard period marks the transient dip, and the node can freeze its clock
there instead of waiting for steady state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels

# Number of look-ahead samples the filter consumes past its output index.
_LOOKAHEAD = 3


class SeriesTooShort(ValueError):
    """Fewer samples than one filter window."""


@dataclass(frozen=True)
class DetectorConfig:
    """Filter gain, guard length, and the implied 7-point impulse response."""

    c_f: float = 1.002
    k_guard: int = 11

    def __post_init__(self):
        if not (0.95 <= self.c_f <= 1.05):
            raise ValueError("c_f must lie in [0.95, 1.05]")
        if int(self.k_guard) != self.k_guard or self.k_guard < 0:
            raise ValueError("k_guard must be a nonnegative integer")
        object.__setattr__(self, "k_guard", int(self.k_guard))

    @property
    def taps(self) -> np.ndarray:
        """Impulse response h(-3)..h(+3) in convolution form
        y(m) = sum_k h(k) x(m - k)."""
        cf = self.c_f
        return np.array([0.2 * cf, 0.5 * cf, 0.2 * cf, 0.0, -0.2, -0.5, -0.2])


@dataclass(frozen=True)
class DetectionEvent:
    """A stopping decision.

    target_round is the flagged instant m (where the polarity change sits);
    detect_round = m + 3 is when the last sample feeding that output arrived
    and the node actually acts; frozen_time is the clock value it keeps.
    """

    node_id: int
    detect_round: int
    target_round: int
    frozen_time: float

    def __post_init__(self):
        if self.detect_round != self.target_round + _LOOKAHEAD:
            raise ValueError("detect_round must equal target_round + 3")
        if self.target_round < 0:
            raise ValueError("target_round must be nonnegative")


def filter_response(series, cfg: DetectorConfig) -> np.ndarray:
    """Filter outputs y(m) for m in [3, len(series)-4].

    y(m) = c_f*(0.2 x(m+3) + 0.5 x(m+2) + 0.2 x(m+1))
             - (0.2 x(m-1) + 0.5 x(m-2) + 0.2 x(m-3));
    entry j of the result is y(j+3). Outputs outside the window do not exist.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if x.shape[0] < 7:
        raise SeriesTooShort(f"need at least 7 samples, got {x.shape[0]}")
    return kernels.filter_series(x, float(cfg.c_f))


def _sign(v: float) -> int:
    if v > 0.0:
        return 1
    if v < 0.0:
        return -1
    return 0


def scan_polarity(y, k_guard: int, first_m: int = _LOOKAHEAD) -> Optional[int]:
    """Index m of the first polarity change with m >= k_guard, else None.

    y[j] is the filter output at m = first_m + j. Zero outputs carry the
    previous polarity: a flip is judged against the last nonzero output, and
    a zero itself never fires. Flips before the guard still update the
    reference polarity, so an early flip is suppressed rather than deferred.
    """
    prev = 0
    for j, val in enumerate(y):
        s = _sign(val)
        if s == 0:
            continue
        m = first_m + j
        if prev != 0 and s != prev and m >= k_guard:
            return m
        prev = s
    return None


def detect(series, cfg: DetectorConfig, node_id: int = 0,
           clocks=None) -> Optional[DetectionEvent]:
    """Run the stopping rule over a complete series.

    Returns the event for the first accepted polarity change, or None when
    the rule never fires (including series too short to produce any output).
    frozen_time is taken from ``clocks`` at the decision round when given.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.shape[0] < 7:
        return None
    y = kernels.filter_series(x, float(cfg.c_f))
    m = scan_polarity(y, cfg.k_guard)
    if m is None:
        return None
    decision = m + _LOOKAHEAD
    frozen = float(clocks[decision]) if clocks is not None else math.nan
    return DetectionEvent(node_id=node_id, detect_round=decision,
                          target_round=m, frozen_time=frozen)


def node_filter_input(clock_series, delta_t: float) -> np.ndarray:
    """Rectified detrended series |t_i(n) - n*delta_t|, the detector input.

    A node computes this from its own clock, the exchange period, and its
    round counter. The error dip becomes a V-shaped extremum here, so the
    smoothed slope the filter estimates reverses sign right at the dip; the
    signed detrended series is monotone through the dip and would never
    produce a reversal.
    """
    t = np.asarray(clock_series, dtype=np.float64)
    n = np.arange(t.shape[0], dtype=np.float64)
    return np.abs(t - n * delta_t)


class OnlineDetector:
    """Incremental form of detect(): feed one sample per round.

    push() returns the DetectionEvent the moment the rule fires, and None
    before that and forever after. Produces exactly the same decision as the
    offline detect() on the same series.
    """

    def __init__(self, cfg: DetectorConfig, node_id: int = 0):
        self.cfg = cfg
        self.node_id = node_id
        self._window = []
        self._count = 0
        self._prev_sign = 0
        self._fired = False

    def push(self, sample: float, clock: float = math.nan) -> Optional[DetectionEvent]:
        if self._fired:
            return None
        self._window.append(float(sample))
        if len(self._window) > 7:
            self._window.pop(0)
        self._count += 1
        if self._count < 7:
            return None
        x = self._window
        cf = self.cfg.c_f
        # same expression tree as kernels.filter_series, hence bit-identical
        y = 0.2 * ((cf * x[6] - x[2]) + (cf * x[4] - x[0])) + 0.5 * (cf * x[5] - x[1])
        m = self._count - 1 - _LOOKAHEAD
        s = _sign(y)
        if s == 0:
            return None
        if self._prev_sign != 0 and s != self._prev_sign and m >= self.cfg.k_guard:
            self._fired = True
            return DetectionEvent(node_id=self.node_id, detect_round=m + _LOOKAHEAD,
                                  target_round=m, frozen_time=float(clock))
        self._prev_sign = s
        return None
