"""From an EM-like waveform back to BEEA shift-count components.

Pipeline: rectify and smooth to an envelope, pick peaks, mask interrupt
bursts, split the inter-peak distances into 17 equal-count windows and map
each distance to a shift count with that window's linear model. Components
that are likely wrong get hints the error-correction stage can use.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted
from .errors import EmptyTraceError, FittingError, InvalidParameterError
from .leaksim import (
    BOUNDARY_ROUND,
    HIGH_COUNT,
    HIGH_COUNT_THRESHOLD,
    INTERRUPT_AMPLITUDE,
    MARKER_AMPLITUDE,
    NUM_WINDOWS,
    PEAK_AMPLITUDE,
    ZERO_MERGE,
    BeeaComponents,
    window_of,
)

BOUNDARY_BAND = (0.3, 0.5)


@dataclass(frozen=True)
class WindowModel:
    """shifts = slope * distance + intercept, for one of the 17 windows."""

    window_index: int
    slope: float
    intercept: float
    residual: float = 0.0

    def __post_init__(self):
        if not 0 <= self.window_index < NUM_WINDOWS:
            raise InvalidParameterError("window_index out of range")
        if not self.slope > 0:
            raise FittingError(f"window {self.window_index}: non-positive slope", window=self.window_index)

    def predict(self, distance):
        return self.slope * np.asarray(distance, dtype=float) + self.intercept


# A recovered sequence has exactly the shape of a simulated one.
RecoveredSeq = BeeaComponents


def _smoothing_kernel(length):
    length = max(int(length), 1)
    if length <= 2:
        return np.ones(length) / length
    k = np.hanning(length + 2)[1:-1]
    return k / k.sum()


def envelope(waveform, cutoff: float, sample_rate: float = 1.0):
    """Rectify and low-pass the waveform.

    ``cutoff`` is in the same unit as ``sample_rate`` and must lie below the
    Nyquist frequency. The smoothing kernel spans about one cutoff period
    and is symmetric, so peak positions do not move.
    """
    x = np.asarray(waveform, dtype=float)
    if x.size == 0:
        raise EmptyTraceError("empty waveform")
    if not 0 < cutoff < sample_rate / 2:
        raise InvalidParameterError("cutoff must lie in (0, Nyquist)")
    length = int(round(sample_rate / cutoff))
    if length % 2 == 0:
        length += 1
    kernel = _smoothing_kernel(length)
    half = len(kernel) // 2
    padded = np.pad(np.abs(x), half, mode="reflect" if x.size > half else "edge")
    return np.convolve(padded, kernel, mode="valid")


def detect_peaks(env, threshold: float, min_gap: int, *, return_merged: bool = False):
    """Local maxima above ``threshold``; maxima closer than ``min_gap`` merge.

    When two maxima merge the taller one survives. With ``return_merged`` the
    indices (into the returned list) of survivors that absorbed a neighbour
    are returned as well.
    """
    if not threshold > 0:
        raise InvalidParameterError("threshold must be positive")
    x = np.asarray(env, dtype=float)
    if x.size < 3:
        return ([], []) if return_merged else []
    mid = x[1:-1]
    cand = np.nonzero((mid > threshold) & (mid >= x[:-2]) & (mid > x[2:]))[0] + 1
    peaks: List[int] = []
    merged: List[int] = []
    for c in cand:
        c = int(c)
        if peaks and c - peaks[-1] < min_gap:
            if x[c] > x[peaks[-1]]:
                peaks[-1] = c
            if not merged or merged[-1] != len(peaks) - 1:
                merged.append(len(peaks) - 1)
            continue
        peaks.append(c)
    if return_merged:
        return peaks, merged
    return peaks


def _interrupt_mask(x, level, pad):
    hot = np.abs(x) > level
    if not hot.any():
        return np.zeros(x.size, dtype=bool)
    k = np.ones(2 * pad + 1)
    return np.convolve(hot.astype(float), k, mode="same") > 0


@dataclass(frozen=True)
class PeakScan:
    peaks: Tuple[int, ...]
    merged: Tuple[int, ...]
    marker: bool
    interrupted_lead: bool


class _Scanner:
    def __init__(self, sample_rate=1.0, cutoff=0.125, min_gap=3, threshold=None):
        self.sample_rate = sample_rate
        self.cutoff = cutoff
        self.min_gap = min_gap
        self.threshold = threshold

    def scan(self, waveform) -> PeakScan:
        x = np.asarray(waveform, dtype=float)
        env = envelope(x, self.cutoff * self.sample_rate, self.sample_rate)
        ref = _smoothed_pulse_peak()
        thr = self.threshold if self.threshold is not None else 0.45 * ref * PEAK_AMPLITUDE
        mask = _interrupt_mask(x, 0.5 * (INTERRUPT_AMPLITUDE + MARKER_AMPLITUDE), pad=12)
        env = np.where(mask, 0.0, env)
        peaks, merged = detect_peaks(env, thr, self.min_gap, return_merged=True)
        if not peaks:
            raise EmptyTraceError("no peaks found")
        interrupted_lead = bool(mask[: peaks[0]].any())
        marker = bool(env[peaks[0]] > 0.5 * (PEAK_AMPLITUDE + MARKER_AMPLITUDE) * ref) and not interrupted_lead
        return PeakScan(tuple(peaks), tuple(merged), marker, interrupted_lead)


@lru_cache(maxsize=None)
def _smoothed_pulse_peak(cutoff=0.125) -> float:
    # envelope height of a unit pulse, used to scale thresholds
    from .leaksim import _render_pulse

    buf = np.zeros(64)
    _render_pulse(buf, 32.0, 1.0)
    return float(np.max(envelope(buf, cutoff, 1.0)))


def _distances(scan: PeakScan):
    return np.diff(np.asarray(scan.peaks, dtype=float))


def fit_window_models(training, *, sample_rate=1.0, cutoff=0.125, min_gap=3, min_traces=20) -> List[WindowModel]:
    """Least-squares line per window from (waveform, true components) pairs.

    Only traces whose peak count matches the ground truth are used, so a
    split or lost peak in the training set cannot shift the alignment.
    """
    training = list(training)
    if len(training) < min_traces:
        raise InvalidParameterError(f"need at least {min_traces} training traces, got {len(training)}")
    scanner = _Scanner(sample_rate, cutoff, min_gap)
    xs = [[] for _ in range(NUM_WINDOWS)]
    ys = [[] for _ in range(NUM_WINDOWS)]
    for waveform, comps in training:
        comps = list(comps)
        scan = scanner.scan(waveform)
        d = _distances(scan)
        if len(d) != len(comps):
            continue
        n = len(comps)
        for i, (dist, c) in enumerate(zip(d, comps)):
            w = window_of(i, n)
            xs[w].append(dist)
            ys[w].append(c)
    models = []
    for w in range(NUM_WINDOWS):
        x = np.asarray(xs[w])
        y = np.asarray(ys[w], dtype=float)
        if x.size < 2 or np.ptp(x) == 0:
            raise FittingError(f"window {w} has too few distinct points to fit", window=w)
        A = np.column_stack([x, np.ones_like(x)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
        models.append(WindowModel(w, float(coef[0]), float(coef[1]), resid))
    return models


def _hint_set(value, frac):
    hints = set()
    if BOUNDARY_BAND[0] <= frac <= BOUNDARY_BAND[1]:
        hints.add(BOUNDARY_ROUND)
    if value > HIGH_COUNT_THRESHOLD:
        hints.add(HIGH_COUNT)
    return hints


def recover_sequence(waveform, models: Sequence[WindowModel], *, sample_rate=1.0, cutoff=0.125, min_gap=3) -> RecoveredSeq:
    """Map a waveform to components and error hints with fitted window models."""
    if len(models) != NUM_WINDOWS:
        raise InvalidParameterError(f"need {NUM_WINDOWS} window models")
    scan = _Scanner(sample_rate, cutoff, min_gap).scan(waveform)
    d = _distances(scan)
    if d.size == 0:
        raise EmptyTraceError("a single peak carries no component")
    n = d.size
    est = np.array([models[window_of(i, n)].predict(x) for i, x in enumerate(d)])
    comps, hints, dirs = [], [], []
    zero_flag_next = False
    for i, v in enumerate(est):
        r = int(np.floor(v + 0.5))
        frac = float(v - np.floor(v))
        if r <= 0:
            # two peaks that should have been one: drop the component and
            # flag whatever sits on either side of it
            if hints:
                hints[-1].add(ZERO_MERGE)
            zero_flag_next = True
            continue
        h = _hint_set(r, frac)
        if zero_flag_next:
            h.add(ZERO_MERGE)
            zero_flag_next = False
        comps.append(r)
        hints.append(h)
        dirs.append(1 if BOUNDARY_ROUND in h else 0)
    # peaks merged during detection hide a component boundary
    for m in scan.merged:
        for j in (m - 1, m):
            if 0 <= j < len(hints):
                hints[j].add(ZERO_MERGE)
    if not comps:
        raise EmptyTraceError("no components recovered")
    leading_unknown = not scan.marker
    return BeeaComponents(tuple(comps), tuple(frozenset(h) for h in hints), tuple(dirs), leading_unknown)


def component_error_rate(recovered, truth) -> float:
    """Edit distance between component lists divided by the true length."""
    a = list(recovered)
    b = list(truth)
    if not b:
        raise InvalidParameterError("empty ground truth")
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1] / len(b)


class SequenceRecoverer(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` learns the 17 window models, ``transform``
    maps waveforms to recovered sequences.

    ``fit(X, y)`` takes waveforms ``X`` and their true component lists ``y``.
    """

    def __init__(self, sample_rate=1.0, cutoff=0.125, min_gap=3, min_traces=20):
        self.sample_rate = sample_rate
        self.cutoff = cutoff
        self.min_gap = min_gap
        self.min_traces = min_traces

    def fit(self, X, y):
        if len(X) != len(y):
            raise InvalidParameterError("X and y have different lengths")
        self.models_ = fit_window_models(
            zip(X, y), sample_rate=self.sample_rate, cutoff=self.cutoff,
            min_gap=self.min_gap, min_traces=self.min_traces,
        )
        self.n_windows_ = len(self.models_)
        return self

    def transform(self, X):
        check_is_fitted(self, "models_")
        return [
            recover_sequence(x, self.models_, sample_rate=self.sample_rate, cutoff=self.cutoff, min_gap=self.min_gap)
            for x in X
        ]

    def predict(self, X):
        return [list(seq.components) for seq in self.transform(X)]

    def score(self, X, y):
        """One minus the mean component error rate."""
        pred = self.predict(X)
        return 1.0 - float(np.mean([component_error_rate(p, t) for p, t in zip(pred, y)]))


__all__ = [
    "BOUNDARY_BAND",
    "RecoveredSeq",
    "SequenceRecoverer",
    "WindowModel",
    "component_error_rate",
    "detect_peaks",
    "envelope",
    "fit_window_models",
    "recover_sequence",
]
