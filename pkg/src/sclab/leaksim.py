"""Leakage simulators for every side channel the attacks consume.

* ``Timing``          network-observed signing latency (fixed-window exponent length)
* ``DaSeq``           double/add sequence of a wNAF scalar multiplication
* ``SignedDigits``    positions and signs of nonzero wNAF digits
* ``BeeaComponents``  shift counts between SUB operations of the binary GCD

``synth_em_waveform`` renders SUB/SHIFT transcripts into an EM-like sampled
signal that the ``dsp`` module turns back into components.
"""

import math
from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple

import numpy as np

from ._validation import check_int, check_rate, check_random_state, check_window, numpy_rng
from .arith import OpTrace, beea_gcd_traced, mod_exp_fixed_window
from .errors import InvalidParameterError
from .groups import ADD, DOUBLE, DaSequence, wnaf_recode

ZERO_MERGE = "ZeroMerge"
BOUNDARY_ROUND = "BoundaryRound"
HIGH_COUNT = "HighCount"
HINT_NAMES = (ZERO_MERGE, BOUNDARY_ROUND, HIGH_COUNT)

HIGH_COUNT_THRESHOLD = 8
NUM_WINDOWS = 17


@dataclass(frozen=True)
class NoiseModel:
    """Knobs for every simulator; unused fields are ignored by a given channel.

    Timing:   base_latency, per_window_cost, gaussian_sigma (seconds)
    DA:       flip_rate, drop_rate
    BEEA:     miss_leading_max, zero_merge_rate, boundary_round_rate,
              high_count_bias, plus the finer controls below
    Waveform: unit_start/unit_end (samples per shift at the first/last of the
              17 windows), sub_offset (extra units per SUB), jitter
              (symmetric, samples), compression (one-sided gap shortening,
              in shifts), em_noise_sigma, split_peak_rate, interrupts
    """

    base_latency: float = 1e-3
    per_window_cost: float = 2e-5
    gaussian_sigma: float = 0.0
    flip_rate: float = 0.0
    drop_rate: float = 0.0
    miss_leading_max: int = 0
    zero_merge_rate: float = 0.0
    boundary_round_rate: float = 0.0
    high_count_bias: float = 0.0
    # fraction of BoundaryRound hints sitting on a component that is actually right
    boundary_false_alarm: float = 0.5
    # probability that a zero-merge leaves one of its neighbours off by one
    zero_merge_error: float = 0.5
    unhinted_rate: float = 0.0
    extra_leading_rate: float = 0.0
    unit_start: float = 24.0
    unit_end: float = 12.0
    sub_offset: float = 1.0
    jitter: float = 0.0
    compression: float = 0.0
    em_noise_sigma: float = 0.0
    split_peak_rate: float = 0.0
    interrupts: Tuple[int, ...] = ()
    seed: Optional[int] = None

    def __post_init__(self):
        for name in ("flip_rate", "drop_rate", "zero_merge_rate", "boundary_round_rate",
                     "high_count_bias", "boundary_false_alarm", "zero_merge_error",
                     "unhinted_rate", "extra_leading_rate", "split_peak_rate"):
            check_rate(getattr(self, name), name)
        check_int(self.miss_leading_max, "miss_leading_max", min_value=0, max_value=4)
        for name in ("base_latency", "per_window_cost"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        for name in ("gaussian_sigma", "jitter", "compression", "em_noise_sigma"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative")
        if not self.unit_start > 0 or not self.unit_end > 0:
            raise InvalidParameterError("waveform units must be positive")
        object.__setattr__(self, "interrupts", tuple(int(x) for x in self.interrupts))

    def rng(self, rng=None):
        return check_random_state(rng if rng is not None else self.seed)


# Waveform noise at which the dsp pipeline recovers components with well
# under 1% errors and every wrong component carries a hint.
CALIBRATED_EM_NOISE = NoiseModel(jitter=0.5, compression=0.2, em_noise_sigma=0.05, split_peak_rate=0.005)

# Component-level error rates in line with what the dsp pipeline produces at
# CALIBRATED_EM_NOISE (measured on 300 traces of 256-bit primes), with lost
# leading iterations on top.
CALIBRATED_BEEA_NOISE = NoiseModel(
    miss_leading_max=4,
    zero_merge_rate=0.005,
    zero_merge_error=0.1,
    boundary_round_rate=0.003,
    boundary_false_alarm=0.5,
    high_count_bias=0.05,
    unhinted_rate=0.0005,
)


# ---------------------------------------------------------------------------
# Leak records


@dataclass(frozen=True)
class Timing:
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise InvalidParameterError("latency must be positive")

    def to_record(self):
        return {"kind": "timing", "omega": self.omega}


@dataclass(frozen=True)
class DaSeq:
    ops: Tuple[str, ...]
    dropped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def __str__(self):
        return "".join(self.ops)

    def to_record(self):
        return {"kind": "da", "ops": "".join(self.ops), "dropped": self.dropped}


@dataclass(frozen=True)
class SignedDigits:
    """(position, sign) for each nonzero digit, LSB first; sign is +1 or -1."""

    digits: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple((int(j), int(b)) for j, b in self.digits))

    def to_record(self):
        return {"kind": "signed", "digits": [list(d) for d in self.digits]}


@dataclass(frozen=True)
class BeeaComponents:
    """Observed shift counts between SUB peaks plus per-component error hints.

    ``hints[i]`` is a subset of HINT_NAMES. ``round_dir[i]`` is the direction
    (+1/-1) a BoundaryRound correction should move component i, 0 otherwise.
    """

    components: Tuple[int, ...]
    hints: Tuple[FrozenSet[str], ...] = ()
    round_dir: Tuple[int, ...] = ()
    leading_unknown: bool = False

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        n = len(comps)
        hints = tuple(frozenset(h) for h in self.hints) or tuple(frozenset() for _ in range(n))
        dirs = tuple(int(d) for d in self.round_dir) or (0,) * n
        if len(hints) != n or len(dirs) != n:
            raise InvalidParameterError("hints and round_dir must match the component count")
        for h in hints:
            if not h <= set(HINT_NAMES):
                raise InvalidParameterError(f"unknown hint in {sorted(h)}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "hints", hints)
        object.__setattr__(self, "round_dir", dirs)

    def __len__(self):
        return len(self.components)

    def hinted(self):
        return [i for i, h in enumerate(self.hints) if h]

    def to_record(self):
        return {
            "kind": "beea",
            "components": list(self.components),
            "hints": [sorted(h) for h in self.hints],
            "round_dir": list(self.round_dir),
            "leading_unknown": self.leading_unknown,
        }


def record_to_leak(rec):
    kind = rec.get("kind")
    if kind == "timing":
        return Timing(rec["omega"])
    if kind == "da":
        return DaSeq(tuple(rec["ops"]), bool(rec.get("dropped", False)))
    if kind == "signed":
        return SignedDigits(tuple(tuple(d) for d in rec["digits"]))
    if kind == "beea":
        return BeeaComponents(
            tuple(rec["components"]),
            tuple(frozenset(h) for h in rec["hints"]),
            tuple(rec.get("round_dir", ())),
            bool(rec.get("leading_unknown", False)),
        )
    raise InvalidParameterError(f"unknown leak kind {kind!r}")


# ---------------------------------------------------------------------------
# Timing


def latency_from_windows(windows: int, model: NoiseModel, rng=None) -> Timing:
    rng = check_random_state(rng)
    omega = model.base_latency + model.per_window_cost * windows
    if model.gaussian_sigma:
        omega += rng.gauss(0.0, model.gaussian_sigma)
    # a latency is a duration; clamp the (astronomically rare) negative tail
    return Timing(max(omega, model.per_window_cost * 1e-6))


def simulate_dsa_latency(k: int, q: int, w: int, model: NoiseModel, rng=None, *, mode=None) -> Timing:
    """Latency of one fixed-window exponentiation with the mode-processed nonce.

    ``mode`` defaults to PADDED_THEN_REDUCED, the defective path that feeds
    the bare nonce to the exponentiation.
    """
    from .sign import PADDED_THEN_REDUCED, processed_nonce

    k = check_int(k, "k", min_value=1)
    w = check_window(w)
    rng = model.rng(rng)
    exp = processed_nonce(k, q, mode or PADDED_THEN_REDUCED, rng)
    # only the window count matters; any odd modulus above exp will do
    modulus = (1 << (exp.bit_length() + 1)) + 1
    res = mod_exp_fixed_window(3, exp, modulus, w)
    return latency_from_windows(res.windows_processed, model, rng)


# ---------------------------------------------------------------------------
# Double/add sequences and signed digits


def noisy_da_sequence(clean, model: NoiseModel, rng=None) -> DaSeq:
    """Corrupt each symbol with probability ``flip_rate`` (flip, insert or delete)."""
    ops = clean.ops if isinstance(clean, (DaSequence, DaSeq)) else tuple(clean)
    if not ops:
        raise InvalidParameterError("empty double/add sequence")
    rng = model.rng(rng)
    dropped = model.drop_rate > 0 and rng.random() < model.drop_rate
    if model.flip_rate == 0:
        return DaSeq(tuple(ops), dropped)
    out = []
    for op in ops:
        if rng.random() >= model.flip_rate:
            out.append(op)
            continue
        kind = rng.randrange(3)
        if kind == 0:
            out.append(ADD if op == DOUBLE else DOUBLE)
        elif kind == 1:
            out.append(op)
            out.append(rng.choice((DOUBLE, ADD)))
        # kind 2: deletion
    return DaSeq(tuple(out), dropped)


def signed_wnaf_oracle(k: int, w: int) -> SignedDigits:
    """Exact positions and signs of the nonzero wNAF digits of ``k``."""
    k = check_int(k, "k", min_value=1)
    digits = wnaf_recode(k, w).digits
    return SignedDigits(tuple((j, 1 if d > 0 else -1) for j, d in enumerate(digits) if d))


# ---------------------------------------------------------------------------
# BEEA component sequences


def beea_oracle(e: int, p_minus_1: int, model: NoiseModel, rng=None, *, return_truth=False):
    """Simulated output of the SUB/SHIFT recovery stage for gcd(e, p - 1).

    Error injection, in order:

    * zero merge: a split peak produced a 0 component that was deleted; both
      neighbours get the ZeroMerge hint and, with ``zero_merge_error``, one
      of them is off by one;
    * boundary rounding: the component is flagged BoundaryRound; a fraction
      ``1 - boundary_false_alarm`` of flagged components were rounded down
      wrongly (observed = true - 1, correction direction +1);
    * high counts: components observed above 8 get HighCount; with
      ``high_count_bias`` the observation underestimates by 1 or 2 as long
      as it stays above 8;
    * ``unhinted_rate``: silent +-1 errors;
    * leading truncation: 0..miss_leading_max leading components removed
      (uniform), or with ``extra_leading_rate`` a spurious leading component.
    """
    e = check_int(e, "e", min_value=1)
    if e % 2 == 0:
        raise InvalidParameterError("e must be odd")
    if not e < p_minus_1:
        raise InvalidParameterError("need e < p - 1")
    rng = model.rng(rng)
    _, trace = beea_gcd_traced(e, p_minus_1)
    truth = trace.components()
    comps = list(truth)
    n = len(comps)
    hints = [set() for _ in range(n)]
    dirs = [0] * n

    for i in range(n):
        if model.zero_merge_rate and rng.random() < model.zero_merge_rate:
            nbrs = [j for j in (i - 1, i) if 0 <= j < n]
            for j in nbrs:
                hints[j].add(ZERO_MERGE)
            if rng.random() < model.zero_merge_error:
                j = rng.choice(nbrs)
                if comps[j] == truth[j]:
                    step = rng.choice((-1, 1))
                    if comps[j] + step >= 1:
                        comps[j] += step
    for i in range(n):
        if model.boundary_round_rate and rng.random() < model.boundary_round_rate:
            hints[i].add(BOUNDARY_ROUND)
            dirs[i] = 1
            if rng.random() >= model.boundary_false_alarm and comps[i] == truth[i] and comps[i] > 1:
                comps[i] -= 1
    for i in range(n):
        if comps[i] > HIGH_COUNT_THRESHOLD and model.high_count_bias and rng.random() < model.high_count_bias:
            drop = rng.choice((1, 2))
            if comps[i] - drop > HIGH_COUNT_THRESHOLD:
                comps[i] -= drop
    for i in range(n):
        if model.unhinted_rate and rng.random() < model.unhinted_rate:
            step = rng.choice((-1, 1))
            if comps[i] + step >= 1:
                comps[i] += step
    for i in range(n):
        if comps[i] > HIGH_COUNT_THRESHOLD:
            hints[i].add(HIGH_COUNT)

    miss = rng.randint(0, model.miss_leading_max) if model.miss_leading_max else 0
    leading_unknown = miss > 0
    comps, hints, dirs = comps[miss:], hints[miss:], dirs[miss:]
    extra = 0
    if miss == 0 and model.extra_leading_rate and rng.random() < model.extra_leading_rate:
        extra = rng.randint(1, 3)
        comps = [extra] + comps
        hints = [set()] + hints
        dirs = [0] + dirs
        leading_unknown = True
    obs = BeeaComponents(tuple(comps), tuple(frozenset(h) for h in hints), tuple(dirs), leading_unknown)
    if return_truth:
        return obs, {"components": truth, "missing": miss, "extra": extra}
    return obs


# ---------------------------------------------------------------------------
# EM waveform synthesis


def window_of(index: int, count: int, windows: int = NUM_WINDOWS) -> int:
    """Equal-count window holding element ``index`` out of ``count``."""
    if count <= 0:
        return 0
    return min(index * windows // count, windows - 1)


def window_units(model: NoiseModel, windows: int = NUM_WINDOWS):
    """Samples per shift in each window, decaying linearly from start to end."""
    if windows == 1:
        return [model.unit_start]
    return [model.unit_start + (model.unit_end - model.unit_start) * i / (windows - 1) for i in range(windows)]


@dataclass(frozen=True)
class WaveformTruth:
    """Ground truth that ``synth_em_waveform`` can report alongside the signal."""

    peak_positions: Tuple[int, ...]
    marker: Optional[int]
    components: Tuple[int, ...]
    split_after: Tuple[int, ...] = ()


PEAK_AMPLITUDE = 1.0
MARKER_AMPLITUDE = 2.5
INTERRUPT_AMPLITUDE = 6.0
PULSE_WIDTH = 2.0
CARRIER = 0.25  # cycles per sample


def _render_pulse(buf, center, amp, width=PULSE_WIDTH):
    half = int(math.ceil(4 * width))
    lo = max(int(center) - half, 0)
    hi = min(int(center) + half + 1, buf.size)
    if lo >= hi:
        return
    n = np.arange(lo, hi, dtype=float)
    env = amp * np.exp(-((n - center) ** 2) / (2 * width * width))
    buf[lo:hi] += env * np.cos(2 * np.pi * CARRIER * (n - center))


def synth_em_waveform(trace, sample_rate: float, model: NoiseModel, rng=None, *, return_truth=False):
    """Render a SUB/SHIFT transcript as a sampled EM-like signal.

    Every SUB is a carrier-modulated pulse; the gap between consecutive
    pulses is ``unit * (shifts + sub_offset)`` samples where ``unit`` comes
    from the window the component falls in, minus an optional one-sided
    ``compression`` term. A complete capture starts with a
    taller marker pulse one gap before the first SUB; a capture with missing
    leading iterations has no marker and begins at the last lost SUB.
    """
    if isinstance(trace, OpTrace):
        comps = trace.components()
        missing = trace.leading_truncated
    elif isinstance(trace, BeeaComponents):
        comps = list(trace.components)
        missing = 1 if trace.leading_unknown else 0
    else:
        comps = [int(c) for c in trace]
        missing = 0
    if not comps:
        raise InvalidParameterError("empty trace")
    if not sample_rate > 0:
        raise InvalidParameterError("sample_rate must be positive")
    rng = model.rng(rng)
    nrng = numpy_rng(rng)
    units = window_units(model)
    n = len(comps)

    lead = int(round(3 * model.unit_start))
    pos = float(lead)
    peaks = []
    for i, c in enumerate(comps):
        gap = c + model.sub_offset
        if model.compression:
            # iterations occasionally run short, never long
            gap -= abs(nrng.normal(0.0, model.compression))
        pos += units[window_of(i, n)] * gap
        peaks.append(pos)
    total = int(math.ceil(pos + lead))

    jit = nrng.normal(0.0, model.jitter, size=n + 1) if model.jitter else np.zeros(n + 1)
    buf = np.zeros(total)
    marker = None
    if missing == 0:
        marker = lead + jit[0]
        _render_pulse(buf, marker, MARKER_AMPLITUDE)
    else:
        _render_pulse(buf, lead + jit[0], PEAK_AMPLITUDE)
    split = []
    rendered = []
    for i, p in enumerate(peaks):
        c = p + jit[i + 1]
        if model.split_peak_rate and rng.random() < model.split_peak_rate:
            delta = 0.25 * units[window_of(i, n)] * (0.5 + rng.random())
            _render_pulse(buf, c - delta, PEAK_AMPLITUDE)
            _render_pulse(buf, c + delta, PEAK_AMPLITUDE)
            split.append(i)
            rendered.append(c)
        else:
            _render_pulse(buf, c, PEAK_AMPLITUDE)
            rendered.append(c)
    for start in model.interrupts:
        lo = max(int(start), 0)
        hi = min(lo + int(4 * model.unit_start), total)
        if lo < hi:
            burst = nrng.normal(0.0, 1.0, size=hi - lo)
            burst = INTERRUPT_AMPLITUDE * np.sign(burst) * (0.8 + 0.2 * np.abs(np.tanh(burst)))
            buf[lo:hi] += burst
    if model.em_noise_sigma:
        buf += nrng.normal(0.0, model.em_noise_sigma, size=total)
    if return_truth:
        truth = WaveformTruth(
            tuple(int(round(p)) for p in rendered),
            None if marker is None else int(round(marker)),
            tuple(comps),
            tuple(split),
        )
        return buf, truth
    return buf


__all__ = [
    "BOUNDARY_ROUND",
    "BeeaComponents",
    "CALIBRATED_BEEA_NOISE",
    "CALIBRATED_EM_NOISE",
    "DaSeq",
    "HIGH_COUNT",
    "HIGH_COUNT_THRESHOLD",
    "HINT_NAMES",
    "NUM_WINDOWS",
    "NoiseModel",
    "SignedDigits",
    "Timing",
    "WaveformTruth",
    "ZERO_MERGE",
    "beea_oracle",
    "latency_from_windows",
    "noisy_da_sequence",
    "record_to_leak",
    "signed_wnaf_oracle",
    "simulate_dsa_latency",
    "synth_em_waveform",
    "window_of",
    "window_units",
]
