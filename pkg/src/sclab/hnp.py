"""Hidden-number-problem instances from nonce leakage, and the recovery loop.

Two leak sources feed the same lattice:

* timing: a fast signature means a short nonce, k < q / 2^ell;
* wNAF transcripts: two consecutive nonzero digits at positions j and j+l
  fix the bits in between, which bounds k * 2^(m-j-l-1) mod q.

Every equation says that alpha * t - u_tilde is small modulo q, scaled by W.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from sklearn.base import BaseEstimator

from ._validation import check_int, check_is_fitted, check_random_state
from .arith import centered_mod, mod_inv
from .errors import InvalidParameterError, NoInverseError, SampleTooSmallError, SkipSample
from .groups import DaSequence, da_is_consistent, da_positions
from .lattice import ReductionParams, bkz_reduce, embed_cvp, gnr_randomize, unpermute_columns
from .leaksim import DaSeq, SignedDigits, Timing
from .sign import public_from_alpha

TIMING = "timing"
WNAF_UNSIGNED = "wnaf_unsigned"
WNAF_SIGNED = "wnaf_signed"
KINDS = (TIMING, WNAF_UNSIGNED, WNAF_SIGNED)


@dataclass(frozen=True)
class HnpEquation:
    """|centered(alpha*t - u_tilde)| <= q / (2W), shifted by q/(2W) for timing.

    ``j``, ``ell`` and ``z`` describe the digit pair of a wNAF equation;
    ``b`` is 0 or -1 (sign of the lower digit) in signed mode.
    """

    t: int
    u_tilde: int
    W: int
    kind: str = TIMING
    j: Optional[int] = None
    ell: Optional[int] = None
    z: Optional[int] = None
    b: Optional[int] = None
    source: Optional[int] = None  # index of the signature it came from

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown equation kind {self.kind!r}")
        if self.W < 2 or self.W & (self.W - 1):
            raise InvalidParameterError("W must be a power of two >= 2")
        if self.t < 0 or self.u_tilde < 0:
            raise InvalidParameterError("t and u_tilde must be reduced residues")

    @property
    def centering(self) -> bool:
        # timing targets are k in [0, q/W); the +q term moves them to [-q, q)
        return self.kind == TIMING

    def to_record(self):
        rec = {"kind": self.kind, "t": str(self.t), "u_tilde": str(self.u_tilde), "W": self.W}
        for name in ("j", "ell", "z", "b", "source"):
            v = getattr(self, name)
            if v is not None:
                rec[name] = v
        return rec

    @classmethod
    def from_record(cls, rec):
        opt = {k: rec[k] for k in ("j", "ell", "z", "b", "source") if k in rec}
        return cls(int(rec["t"]), int(rec["u_tilde"]), int(rec["W"]), rec.get("kind", TIMING), **opt)


@dataclass(frozen=True)
class AttackConfig:
    N: int = 0
    f: int = 0
    d: int = 0
    ell: int = 4
    z_min: int = 1
    c: float = 1.25
    delta: float = 1.5
    m: int = 0
    w: int = 5
    block_size: int = 20
    rerandomize: int = 2
    max_lattices: int = 50
    time_budget: Optional[float] = None  # seconds
    per_signature_cap: int = 0  # 0 means no cap
    length_filter: bool = True
    seed: Optional[int] = None
    backend: str = "auto"

    def __post_init__(self):
        if self.c <= 0:
            raise InvalidParameterError("c must be positive")
        if not 1 < self.delta <= 2:
            raise InvalidParameterError("delta must lie in (1, 2]")
        if self.f and self.N and self.f > self.N:
            raise InvalidParameterError("f must not exceed N")
        if self.d and self.f and self.d > self.f:
            raise InvalidParameterError("d must not exceed f")
        check_int(self.max_lattices, "max_lattices", min_value=1)
        check_int(self.rerandomize, "rerandomize", min_value=0)
        check_int(self.z_min, "z_min", min_value=1)


# ---------------------------------------------------------------------------
# Parameter selection


def derive_params(N: int, m: int, ell: int, delta: float = 1.5, c: float = 1.25) -> Tuple[int, int, float]:
    """Filtered count f, lattice dimension d and the filter exponent theta.

    theta = lg N + lg ell - lg m - lg(c * delta); f = floor(N / 2^theta);
    d = ceil(c * m / ell).
    """
    N = check_int(N, "N", min_value=1)
    m = check_int(m, "m", min_value=1)
    ell = check_int(ell, "ell", min_value=1, max_value=m)
    if not delta > 0 or not c > 0:
        raise InvalidParameterError("delta and c must be positive")
    theta = math.log2(N) + math.log2(ell) - math.log2(m) - math.log2(c * delta)
    if theta <= 0:
        raise SampleTooSmallError(f"theta = {theta:.3f} <= 0: too few samples for ell={ell}")
    f = int(math.floor(N / 2 ** theta))
    d = math.ceil(c * m / ell)
    return f, d, theta


def success_estimate(c: float = 1.25) -> float:
    """Nominal success probability 1 - exp(-c) of the filter heuristic."""
    return 1.0 - math.exp(-c)


def filter_fastest(samples: Sequence, f: int) -> list:
    """The ``f`` samples with the smallest latency; ties keep input order."""
    samples = list(samples)
    f = check_int(f, "f", min_value=0)
    if f > len(samples):
        raise InvalidParameterError(f"f = {f} exceeds the {len(samples)} samples")
    for s in samples:
        if not isinstance(s.leak, Timing):
            raise InvalidParameterError("every sample needs a Timing leak")
    order = sorted(range(len(samples)), key=lambda i: (samples[i].leak.omega, i))
    return [samples[i] for i in order[:f]]


# ---------------------------------------------------------------------------
# Equations


def _sinv(sample, q):
    try:
        return mod_inv(sample.s, q)
    except NoInverseError as exc:
        raise SkipSample("s is not invertible") from exc


def build_timing_equation(sample, ell: int, q: int, source=None) -> HnpEquation:
    """Equation for a nonce assumed to be below q / 2^ell."""
    ell = check_int(ell, "ell", min_value=1)
    if sample.r % q == 0:
        raise SkipSample("r is zero mod q")
    sinv = _sinv(sample, q)
    return HnpEquation(sample.r * sinv % q, -sample.h * sinv % q, 1 << ell, TIMING, ell=ell, source=source)


def effective_width(w: int) -> int:
    # digits are bounded by 2^(w-1) in absolute value, so the pair formulas
    # run with w - 1 in place of w
    return w - 1


@dataclass(frozen=True)
class WnafPair:
    j: int
    ell: int
    z: int
    b: Optional[int] = None


def extract_wnaf_pairs(leak, w: int, z_min: int = 1, signed: bool = False) -> List[WnafPair]:
    """Consecutive nonzero digit pairs carrying at least ``z_min`` known bits.

    ``leak`` is a list of nonzero positions, a WnafDigits, a double/add
    transcript (DaSeq or DaSequence) or, for signed mode, SignedDigits.
    """
    wp = effective_width(w)
    signs = None
    if isinstance(leak, SignedDigits):
        positions = [j for j, _ in leak.digits]
        signs = [s for _, s in leak.digits]
    elif isinstance(leak, (DaSeq, DaSequence)):
        positions = da_positions(leak.ops)
    elif hasattr(leak, "nonzero_positions"):
        positions = leak.nonzero_positions()
        signs = [1 if leak.digits[j] > 0 else -1 for j in positions]
    else:
        positions = [int(p) for p in leak]
    if any(b <= a for a, b in zip(positions, positions[1:])):
        raise InvalidParameterError("positions must be strictly increasing")
    if signed and signs is None:
        raise InvalidParameterError("signed mode needs digit signs")
    out = []
    for i in range(len(positions) - 1):
        j, gap = positions[i], positions[i + 1] - positions[i]
        z = gap - wp + (1 if signed else 0)
        if z < z_min:
            continue
        b = (0 if signs[i] > 0 else -1) if signed else None
        out.append(WnafPair(j, gap, z, b))
    return out


def _low_digits_bound(j: int, w: int) -> int:
    """Ceiling of max |sum of wNAF digits at positions <= j| times 2^w - 1.

    The digit at j is at most 2^(w-1) - 1 and the next lower one sits at
    most at j - w, so the geometric bound is (2^(w-1) - 1) 2^j 2^w / (2^w - 1).
    Returned scaled by (2^w - 1) to stay in integers.
    """
    if j < 0:
        return 0
    return ((1 << (w - 1)) - 1) * (1 << (j + w))


def pair_is_sound(pair: WnafPair, w: int, q: int, signed: bool) -> bool:
    """Public check that an honest pair always satisfies its residual bound.

    Uses only j, the gap and q: the low digits contribute at most
    C(j) * 2^e, and the part above the pair wraps around q at a cost of at
    most (2^m mod q) * 2^e. Pairs near the bottom of a scalar can exceed
    q / (2W) when 2^m is not very close to q.
    """
    m = q.bit_length()
    wp = effective_width(w)
    e = m - pair.j - pair.ell - 1
    if e < 0:
        return False
    eps = (1 << m) % q
    den = (1 << w) - 1
    W = 1 << pair.z
    if signed:
        # K lies on one side of zero: [2^j - C(j-w), C(j)] for a positive digit
        mid = 1 << (pair.j + wp - 1)
        hi = _low_digits_bound(pair.j, w) - mid * den
        lo = mid * den - ((1 << pair.j) * den - _low_digits_bound(pair.j - w, w))
        spread = max(hi, lo)
    else:
        spread = _low_digits_bound(pair.j, w)
    # spread/den * 2^e + eps * (2^e + 1) <= q / (2W)
    lhs = 2 * W * (spread * (1 << e) + den * eps * ((1 << e) + 1))
    return lhs <= q * den


def build_wnaf_equation(sample, pair: WnafPair, w: int, q: int, signed: bool = False, source=None) -> HnpEquation:
    """Equation from one digit pair of a wNAF nonce.

    t = r s^-1 2^e with e = m - j - l - 1. Unsigned: u = 2^(m+w'-l-1) -
    (h s^-1 + 2^(j+w') - 2^(j+l)) 2^e, W = 2^(l-w'). Signed: the lower digit's
    sign b in {0, -1} puts the low part on one side of zero, u = (2b+1)
    2^(m+w'-l-2) + 2^(m-1) - h s^-1 2^e, W = 2^(l-w'+1).
    """
    m = q.bit_length()
    wp = effective_width(w)
    j, ell = pair.j, pair.ell
    e = m - j - ell - 1
    if e < 0:
        raise SkipSample("pair reaches past the top bit")
    sinv = _sinv(sample, q)
    p2e = 1 << e
    t = sample.r * sinv * p2e % q
    hs = sample.h * sinv
    if signed:
        if pair.b not in (0, -1):
            raise InvalidParameterError("signed pairs need b in {0, -1}")
        z = ell - wp + 1
        u = ((2 * pair.b + 1) * (1 << (m + wp - ell - 2)) + (1 << (m - 1)) - hs * p2e) % q
        kind = WNAF_SIGNED
    else:
        z = ell - wp
        u = ((1 << (m + wp - ell - 1)) - (hs + (1 << (j + wp)) - (1 << (j + ell))) * p2e) % q
        kind = WNAF_UNSIGNED
    if z < 1:
        raise SkipSample("pair carries no information")
    return HnpEquation(t, u, 1 << z, kind, j=j, ell=ell, z=z, b=pair.b if signed else None, source=source)


def residual_check(eq: HnpEquation, alpha: int, q: int) -> bool:
    """Does the lattice column of ``eq`` stay within [-q, q] at ``alpha``?

    For wNAF equations this is |centered(alpha*t - u)| <= q/(2W); timing
    columns carry the extra -q centring term.
    """
    W2 = 2 * eq.W
    v = W2 * (alpha * eq.t - eq.u_tilde) - (q if eq.centering else 0)
    return abs(centered_mod(v, W2 * q)) <= q


def timing_equations(samples: Sequence, ell: int, q: int) -> List[HnpEquation]:
    out = []
    for i, s in enumerate(samples):
        try:
            out.append(build_timing_equation(s, ell, q, source=i))
        except SkipSample:
            continue
    return out


def transcript_passes(leak, w: int, m: int, length_filter: bool = True) -> bool:
    """Sanity filters on a double/add transcript before it is used."""
    if isinstance(leak, DaSeq):
        if leak.dropped:
            return False
        seq = leak.ops
    elif isinstance(leak, DaSequence):
        seq = leak.ops
    else:
        return True
    if not da_is_consistent(seq, w):
        return False
    if length_filter and seq.count("D") < m:
        return False
    return True


def wnaf_equations(samples: Sequence, w: int, q: int, *, signed: bool = False, z_min: int = 1,
                   per_signature_cap: int = 0, length_filter: bool = True, sound_only: bool = True) -> List[HnpEquation]:
    """All usable pair equations of a signature set.

    Unsigned mode reads DaSeq transcripts; signed mode reads SignedDigits.
    With ``per_signature_cap`` only the highest-z pairs of each signature
    are kept.
    """
    m = q.bit_length()
    out = []
    for i, s in enumerate(samples):
        leak = s.leak
        if leak is None:
            raise InvalidParameterError(f"sample {i} carries no leak")
        if not transcript_passes(leak, w, m, length_filter):
            continue
        pairs = extract_wnaf_pairs(leak, w, z_min, signed)
        if sound_only:
            pairs = [p for p in pairs if pair_is_sound(p, w, q, signed)]
        if per_signature_cap:
            pairs = sorted(pairs, key=lambda p: (-p.z, p.j))[:per_signature_cap]
        for p in pairs:
            try:
                out.append(build_wnaf_equation(s, p, w, q, signed, source=i))
            except SkipSample:
                continue
    return out


# ---------------------------------------------------------------------------
# Lattice


def build_lattice(equations: Sequence[HnpEquation], q: int):
    """Basis B and target u with (lambda, alpha) B - u = y short.

    B has 2 W_i q on the diagonal and (2 W_i t_i, ..., 1) as its last row;
    u_i = 2 W_i u_tilde_i (+ q for timing), with a trailing 0.
    """
    d = len(equations)
    if d < 2:
        raise InvalidParameterError("need at least two equations")
    B = [[0] * (d + 1) for _ in range(d + 1)]
    u = [0] * (d + 1)
    for i, eq in enumerate(equations):
        W2 = 2 * eq.W
        B[i][i] = W2 * q
        B[d][i] = W2 * eq.t
        u[i] = W2 * eq.u_tilde + (q if eq.centering else 0)
    B[d][d] = 1
    return B, u


def target_vector(equations: Sequence[HnpEquation], alpha: int, q: int) -> List[int]:
    """The short vector y for a known alpha (test helper)."""
    y = []
    for eq in equations:
        W2 = 2 * eq.W
        v = W2 * (alpha * eq.t - eq.u_tilde) - (q if eq.centering else 0)
        y.append(centered_mod(v, W2 * q))
    y.append(alpha)
    return y


@dataclass
class RecoveryResult:
    alpha: Optional[int]
    stats: Dict[str, object] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.alpha is not None


def _candidates(rows, col, q):
    seen = set()
    for row in rows:
        a = row[col] % q
        for cand in (a, (q - a) % q):
            if cand and cand not in seen:
                seen.add(cand)
                yield cand


def _plausible(equations, alpha, q):
    # cheap public pre-check before the group operation: an honest alpha
    # satisfies most equations, a random one about 1/W of them
    ok = sum(residual_check(eq, alpha, q) for eq in equations)
    return 2 * ok >= len(equations)


def recover_key(equations: Sequence[HnpEquation], config: AttackConfig, public, params, rng=None) -> RecoveryResult:
    """Randomized lattice loop.

    Draw d equations, reduce the embedded lattice, scan every row for a
    coordinate that reproduces the public key; re-randomize the reduced basis
    ``config.rerandomize`` times before drawing a fresh subset. Stops on
    success, after ``max_lattices`` reductions or when the time budget runs
    out.
    """
    rng = check_random_state(config.seed if rng is None else rng)
    q = params.q
    pool = list(equations)
    d = config.d or len(pool)
    if d > len(pool):
        raise SampleTooSmallError(f"need {d} equations, have {len(pool)}")
    if d < 2:
        raise InvalidParameterError("d must be at least 2")
    red = ReductionParams(block_size=config.block_size)
    start = time.perf_counter()
    lattices = 0
    checked = 0
    stats = {"d": d, "pool": len(pool), "lattices_built": 0, "elapsed": 0.0, "candidates_checked": 0}

    def out_of_time():
        return config.time_budget is not None and time.perf_counter() - start > config.time_budget

    while lattices < config.max_lattices and not out_of_time():
        chosen = rng.sample(pool, d) if d < len(pool) else list(pool)
        B, u = build_lattice(chosen, q)
        basis = embed_cvp(B, u, q)
        perm = list(range(d + 2))
        for round_ in range(config.rerandomize + 1):
            if lattices >= config.max_lattices or out_of_time():
                break
            if round_:
                rnd = gnr_randomize(basis, rng=rng, return_details=True)
                basis, perm = rnd.matrix, rnd.perm
            reduced = bkz_reduce(basis, red, backend=config.backend)
            lattices += 1
            plain = unpermute_columns(reduced, perm)
            for cand in _candidates(plain, d, q):
                if not _plausible(chosen, cand, q):
                    continue
                checked += 1
                if public_from_alpha(cand, params) == public:
                    stats.update(lattices_built=lattices, elapsed=time.perf_counter() - start, candidates_checked=checked)
                    return RecoveryResult(cand, stats)
            basis = plain
            perm = list(range(d + 2))
    stats.update(lattices_built=lattices, elapsed=time.perf_counter() - start, candidates_checked=checked)
    return RecoveryResult(None, stats)


class HnpKeyRecovery(BaseEstimator):
    """Estimator front end: ``fit`` on signatures with leaks recovers alpha.

    ``source`` picks the leak model (timing, wnaf_unsigned or wnaf_signed).
    After ``fit``, ``alpha_`` is the key or None and ``stats_`` holds the
    loop counters.
    """

    def __init__(self, params=None, public=None, source=TIMING, ell=4, w=5, z_min=1, d=None, f=None,
                 c=1.25, delta=1.5, block_size=20, rerandomize=2, max_lattices=50, time_budget=None,
                 per_signature_cap=0, length_filter=True, random_state=None, backend="auto"):
        self.params = params
        self.public = public
        self.source = source
        self.ell = ell
        self.w = w
        self.z_min = z_min
        self.d = d
        self.f = f
        self.c = c
        self.delta = delta
        self.block_size = block_size
        self.rerandomize = rerandomize
        self.max_lattices = max_lattices
        self.time_budget = time_budget
        self.per_signature_cap = per_signature_cap
        self.length_filter = length_filter
        self.random_state = random_state
        self.backend = backend

    def _equations(self, samples):
        q = self.params.q
        m = q.bit_length()
        if self.source == TIMING:
            f, d, _ = derive_params(len(samples), m, self.ell, self.delta, self.c)
            f = self.f or f
            d = self.d or d
            kept = filter_fastest(samples, f)
            return timing_equations(kept, self.ell, q), d
        if self.source not in (WNAF_UNSIGNED, WNAF_SIGNED):
            raise InvalidParameterError(f"unknown source {self.source!r}")
        eqs = wnaf_equations(
            samples, self.w, q, signed=self.source == WNAF_SIGNED, z_min=self.z_min,
            per_signature_cap=self.per_signature_cap, length_filter=self.length_filter,
        )
        d = self.d or math.ceil(self.c * m / max(1.0, sum(e.z for e in eqs) / max(len(eqs), 1)))
        return eqs, min(d, len(eqs))

    def fit(self, X, y=None):
        if self.params is None or self.public is None:
            raise InvalidParameterError("params and public must be set")
        eqs, d = self._equations(list(X))
        self.equations_ = eqs
        cfg = AttackConfig(
            N=len(X), d=d, ell=self.ell, z_min=self.z_min, c=self.c, delta=self.delta, m=self.params.q.bit_length(),
            w=self.w, block_size=self.block_size, rerandomize=self.rerandomize, max_lattices=self.max_lattices,
            time_budget=self.time_budget, seed=None, backend=self.backend,
        )
        res = recover_key(eqs, cfg, self.public, self.params, check_random_state(self.random_state))
        self.alpha_ = res.alpha
        self.stats_ = res.stats
        return self

    def predict(self, X=None):
        check_is_fitted(self, "alpha_")
        return self.alpha_


__all__ = [
    "KINDS",
    "TIMING",
    "WNAF_SIGNED",
    "WNAF_UNSIGNED",
    "AttackConfig",
    "HnpEquation",
    "HnpKeyRecovery",
    "RecoveryResult",
    "WnafPair",
    "build_lattice",
    "build_timing_equation",
    "build_wnaf_equation",
    "derive_params",
    "effective_width",
    "extract_wnaf_pairs",
    "filter_fastest",
    "pair_is_sound",
    "recover_key",
    "residual_check",
    "success_estimate",
    "target_vector",
    "timing_equations",
    "transcript_passes",
    "wnaf_equations",
]
