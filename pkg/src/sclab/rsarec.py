"""RSA private key recovery from binary-GCD SUB/SHIFT leakage.

Key generation checks gcd(e, p - 1) with the binary extended Euclidean
algorithm, whose control flow reveals the low bits of p. For odd e and
v_0 = p - 1 every iteration shifts v right ``a_k`` times and subtracts e, so
as long as v stays above e

    p - 1 = e * (2^A_0 + 2^A_1 + ... + 2^A_(n-1)) + 2^A_n * w,   A_k = a_0 + ... + a_k

and the shift counts a_k pin down p mod 2^A_n. The pieces here turn
(possibly noisy) shift counts into those bits, repair damaged leading
iterations, correct errors jointly over the p and q traces, and finish with
a Coppersmith lattice that recovers the whole prime from about a quarter of
the bits of N.
"""

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ._validation import check_int, check_random_state
from .arith import beea_gcd_traced, mod_inv, random_prime
from .errors import InvalidParameterError, NoCandidateError
from .lattice import lll_reduce
from .leaksim import BOUNDARY_ROUND, HIGH_COUNT, ZERO_MERGE, BeeaComponents

MAX_CANDIDATES = 150_000
DEFAULT_MARGIN = 5


class NotFound(Exception):
    """An attack stage ran out of options; ``stats`` says how far it got."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


# ---------------------------------------------------------------------------
# Keys


@dataclass(frozen=True)
class RsaKey:
    N: int
    e: int
    p: int
    q: int
    d: int
    d_p: int
    d_q: int
    i_q: int

    @classmethod
    def from_primes(cls, p: int, q: int, e: int = 65537) -> "RsaKey":
        lam = math.lcm(p - 1, q - 1)
        d = mod_inv(e, lam)
        return cls(p * q, e, p, q, d, d % (p - 1), d % (q - 1), mod_inv(q, p))

    def validate(self):
        p, q, e = self.p, self.q, self.e
        if p * q != self.N:
            raise InvalidParameterError("N != p*q")
        if math.gcd(e, p - 1) != 1 or math.gcd(e, q - 1) != 1:
            raise InvalidParameterError("e is not coprime to p-1 and q-1")
        if self.d * e % math.lcm(p - 1, q - 1) != 1:
            raise InvalidParameterError("d is not the inverse of e mod lcm(p-1, q-1)")
        if self.d_p != self.d % (p - 1) or self.d_q != self.d % (q - 1):
            raise InvalidParameterError("CRT exponents disagree with d")
        if self.i_q * q % p != 1:
            raise InvalidParameterError("i_q is not q^-1 mod p")
        return self

    def encrypt(self, m: int) -> int:
        return pow(m, self.e, self.N)

    def decrypt(self, c: int) -> int:
        return pow(c, self.d, self.N)

    def decrypt_crt(self, c: int) -> int:
        mp = pow(c, self.d_p, self.p)
        mq = pow(c, self.d_q, self.q)
        h = self.i_q * (mp - mq) % self.p
        return mq + h * self.q

    def fields(self) -> Dict[str, int]:
        return {k: getattr(self, k) for k in ("N", "e", "p", "q", "d", "d_p", "d_q", "i_q")}


@dataclass(frozen=True)
class KeygenResult:
    key: RsaKey
    trace_p: object
    trace_q: object


def rsa_keygen(modulus_bits: int, e: int = 65537, rng=None) -> KeygenResult:
    """Balanced RSA key; the coprimality check runs the traced binary GCD.

    Both primes get their two top bits set so N has exactly ``modulus_bits``
    bits. The SUB/SHIFT transcripts of gcd(e, p-1) and gcd(e, q-1) are
    returned with the key.
    """
    modulus_bits = check_int(modulus_bits, "modulus_bits", min_value=64)
    if modulus_bits % 2:
        raise InvalidParameterError("modulus_bits must be even")
    e = check_int(e, "e", min_value=3)
    if e % 2 == 0:
        raise InvalidParameterError("e must be odd")
    rng = check_random_state(rng)
    half = modulus_bits // 2
    if e >= 1 << (half - 2):
        raise InvalidParameterError("e too large for this modulus size")

    def draw(avoid=None):
        while True:
            p = random_prime(half, rng, top_two_bits=True)
            if p == avoid:
                continue
            g, trace = beea_gcd_traced(e, p - 1)
            if g == 1:
                return p, trace

    p, tp = draw()
    q, tq = draw(avoid=p)
    return KeygenResult(RsaKey.from_primes(p, q, e), tp, tq)


# ---------------------------------------------------------------------------
# From shift counts to bits


def _components(seq):
    if isinstance(seq, BeeaComponents):
        return list(seq.components)
    if hasattr(seq, "components") and callable(seq.components):
        return seq.components()
    return [int(c) for c in seq]


def replay_recover_lsbs(e: int, components, t: int) -> int:
    """(p - 1) mod 2^t from error-free shift counts, one bit at a time.

    A residue r mod 2^i survives when running the binary GCD on (e, r),
    with the subtraction always taken as v - e (valid while v > e), repeats
    the observed counts for as many shifts as r determines. Each step
    extends the survivors by one bit; clean input leaves exactly one.
    """
    e = check_int(e, "e", min_value=1)
    if e % 2 == 0:
        raise InvalidParameterError("e must be odd")
    comps = _components(components)
    t = check_int(t, "t", min_value=1)
    if sum(comps) < t:
        raise InvalidParameterError(f"components cover {sum(comps)} shifts, fewer than t={t}")

    def consistent(r, bits):
        v, known, k, run = r, bits, 0, 0
        while known > 0:
            if k >= len(comps):
                return True
            if v & 1 == 0:
                v >>= 1
                known -= 1
                run += 1
                if run > comps[k]:
                    return False
            else:
                if run != comps[k]:
                    return False
                k += 1
                run = 0
                v = (v - e) % (1 << known)
        return True

    survivors = [0]
    for i in range(1, t + 1):
        nxt = []
        for r in survivors:
            for bit in (0, 1):
                cand = r | (bit << (i - 1))
                if consistent(cand, i):
                    nxt.append(cand)
        if not nxt:
            raise NoCandidateError(f"no residue mod 2^{i} reproduces the observed counts")
        survivors = nxt
    if len(survivors) != 1:
        raise NoCandidateError(f"{len(survivors)} residues remain ambiguous")
    return survivors[0]


def lsbs_from_components(e: int, components, t: int) -> int:
    """Closed form of the same map: (p - 1) = e * sum 2^A_k  (mod 2^t)."""
    comps = _components(components)
    if sum(comps) < t:
        raise InvalidParameterError(f"components cover {sum(comps)} shifts, fewer than t={t}")
    x = 0
    pos = 0
    for a in comps:
        pos += a
        if pos >= t:
            break
        x |= 1 << pos
    return e * x % (1 << t)


def shift_coverage(e: int, p_minus_1: int) -> int:
    """Number of leading shifts during which v stays above e (bits the leak fixes)."""
    v = p_minus_1
    total = 0
    while v > e:
        while v % 2 == 0:
            v >>= 1
            total += 1
        if v <= e:
            break
        v -= e
    return total


# ---------------------------------------------------------------------------
# Leading-iteration repair


@dataclass(frozen=True)
class Variant:
    """A repaired component sequence; the first ``flexible`` entries are guesses."""

    components: Tuple[int, ...]
    hints: Tuple[frozenset, ...]
    round_dir: Tuple[int, ...]
    flexible: int = 0
    label: str = ""

    @classmethod
    def from_seq(cls, seq, label="z=0"):
        if isinstance(seq, BeeaComponents):
            return cls(seq.components, seq.hints, seq.round_dir, 0, label)
        comps = tuple(_components(seq))
        return cls(comps, tuple(frozenset() for _ in comps), (0,) * len(comps), 0, label)

    def as_seq(self) -> BeeaComponents:
        return BeeaComponents(self.components, self.hints, self.round_dir, False)


def _prepend(var: Variant, values, label):
    z = len(values)
    return Variant(
        tuple(values) + var.components,
        tuple(frozenset() for _ in range(z)) + var.hints,
        (0,) * z + var.round_dir,
        z,
        label,
    )


def leading_repair_bruteforce(seq, max_lost: int = 4, max_shift: int = 6) -> List[BeeaComponents]:
    """Every completion with 0..max_lost lost iterations of 1..max_shift shifts.

    Output order: by number of lost iterations, then lexicographic.
    sum_{z=0}^{4} 6^z = 1555 sequences with the defaults.
    """
    if isinstance(seq, BeeaComponents) and not seq.leading_unknown:
        raise InvalidParameterError("sequence is not flagged leading_unknown")
    base = Variant.from_seq(seq)
    out = []
    for z in range(max_lost + 1):
        for vals in itertools.product(range(1, max_shift + 1), repeat=z):
            out.append(_prepend(base, vals, f"z={z}").as_seq())
    return out


def prime_variants(seq, max_lost: int = 4) -> List[Variant]:
    """Six repairs of one trace: 0..4 lost iterations filled with one shift
    each, and the first iteration dropped and treated as lost."""
    base = Variant.from_seq(seq)
    out = [base]
    for z in range(1, max_lost + 1):
        out.append(_prepend(base, (1,) * z, f"z={z}"))
    if base.components:
        rest = Variant(base.components[1:], base.hints[1:], base.round_dir[1:], 0)
        out.append(_prepend(rest, (1,), "drop-first"))
    return out


@dataclass(frozen=True)
class JointVariant:
    p: Variant
    q: Variant
    index: int

    @property
    def label(self):
        return f"p[{self.p.label}] q[{self.q.label}]"


def leading_repair_reduced(seq_p, seq_q) -> List[JointVariant]:
    """The 6 x 6 = 36 joint repairs, identity pair first.

    Pairs are ordered by how many iterations they invent in total, so the
    cheap explanations of the traces are tried first.
    """
    vp = prime_variants(seq_p)
    vq = prime_variants(seq_q)
    pairs = [(a, b) for a in range(len(vp)) for b in range(len(vq))]
    pairs.sort(key=lambda ab: (ab[0] + ab[1], ab))
    return [JointVariant(vp[a], vq[b], i) for i, (a, b) in enumerate(pairs)]


# ---------------------------------------------------------------------------
# Joint extend-and-prune


@dataclass
class PruneFilters:
    max_candidates: int = MAX_CANDIDATES
    beam_width: int = 4000
    error_budget: int = 8
    flexible_cost: int = 1
    hint_cost: int = 1
    unhinted_cost: int = 3
    max_seconds: Optional[float] = None

    def __post_init__(self):
        check_int(self.max_candidates, "max_candidates", min_value=1)
        check_int(self.beam_width, "beam_width", min_value=1)
        check_int(self.error_budget, "error_budget", min_value=0)
        if self.beam_width > self.max_candidates:
            self.beam_width = self.max_candidates


@dataclass(frozen=True)
class CandidatePair:
    """LSBs of p and q (mod 2^bits) with p*q = N mod 2^bits."""

    p_bits: int
    q_bits: int
    bits: int
    error_count: int
    rank_score: Tuple[int, int]


@dataclass
class PruneResult:
    candidates: List[CandidatePair]
    peak_live: int
    work: int
    seconds: float
    status: str  # "ok", "empty", "timeout"


def _allowed_sets(var: Variant, f: PruneFilters):
    """Per component: dict value -> cost, plus the largest allowed value."""
    sets = []
    for i, c in enumerate(var.components):
        if i < var.flexible:
            allowed = {v: (0 if v == 1 else f.flexible_cost) for v in range(1, 7)}
        else:
            allowed = {c: 0}
            h = var.hints[i]
            extra = []
            if ZERO_MERGE in h:
                extra += [c - 1, c + 1]
            if BOUNDARY_ROUND in h:
                extra.append(c + (var.round_dir[i] or 1))
            if HIGH_COUNT in h:
                extra += [c + 1, c + 2]
            for v in extra:
                if v >= 1 and v not in allowed:
                    allowed[v] = f.hint_cost
            if f.unhinted_cost <= f.error_budget:
                for v in (c - 1, c + 1):
                    if v >= 1 and v not in allowed:
                        allowed[v] = f.unhinted_cost
        sets.append((allowed, max(allowed)))
    return sets


def extend_and_prune(variant_p, variant_q, N: int, e: int, bits: int, filters: PruneFilters = None, *,
                     lookahead: int = 8, check_invariant: bool = False) -> PruneResult:
    """Beam search over the low bits of p, guided by both shift-count traces.

    Each live candidate holds p, q mod 2^i and, per trace, the index of the
    next component plus the bit position of the last SUB. Extending by one
    bit tries p_i in {0, 1}; q_i then follows from N, and each trace must
    accept the implied bit of (prime - 1)/e. Accepting a component value that
    differs from the observed one costs according to the hints. Candidates
    above the error budget die; when the frontier exceeds the beam width
    the cheapest survive, ties broken by how long ago the last error was.

    The search runs ``lookahead`` bits past ``bits`` so that a component
    still open at the cut has been charged for, then projects the survivors
    to ``bits`` bits (keeping the cheapest copy of each).
    """
    f = filters or PruneFilters()
    vp = variant_p if isinstance(variant_p, Variant) else Variant.from_seq(variant_p)
    vq = variant_q if isinstance(variant_q, Variant) else Variant.from_seq(variant_q)
    if N % 2 == 0 or e % 2 == 0:
        raise InvalidParameterError("N and e must be odd")
    sp = _allowed_sets(vp, f)
    sq = _allowed_sets(vq, f)
    np_, nq = len(sp), len(sq)
    total = bits + max(int(lookahead), 0)
    einv = mod_inv(e, 1 << (total + 1))
    budget = f.error_budget
    start = time.perf_counter()

    # candidate: (p, q, kp, lp, kq, lq, cost, last_err)
    live = [(1, 1, 0, 0, 0, 0, 0, -1)]
    peak = 1
    work = 0
    status = "ok"
    for i in range(1, total):
        Ni = (N >> i) & 1
        nxt = []
        for (p, q, kp, lp, kq, lq, cost, last) in live:
            hp = (((p - 1) * einv) >> i) & 1
            hq = (((q - 1) * einv) >> i) & 1
            base_q = Ni ^ (((p * q) >> i) & 1)
            for xi in (0, 1):
                pi = xi ^ hp
                qi = base_q ^ pi
                yi = hq ^ qi
                # p trace
                c1 = cost
                if kp < np_:
                    allowed, vmax = sp[kp]
                    run = i - lp
                    if xi:
                        dc = allowed.get(run)
                        if dc is None:
                            continue
                        c1 += dc
                        nkp, nlp = kp + 1, i
                    else:
                        if run >= vmax:
                            continue
                        nkp, nlp = kp, lp
                else:
                    nkp, nlp = kp, lp
                if c1 > budget:
                    continue
                c2 = c1
                if kq < nq:
                    allowed, vmax = sq[kq]
                    run = i - lq
                    if yi:
                        dc = allowed.get(run)
                        if dc is None:
                            continue
                        c2 += dc
                        nkq, nlq = kq + 1, i
                    else:
                        if run >= vmax:
                            continue
                        nkq, nlq = kq, lq
                else:
                    nkq, nlq = kq, lq
                if c2 > budget:
                    continue
                nxt.append((p | (pi << i), q | (qi << i), nkp, nlp, nkq, nlq, c2, i if c2 > cost else last))
        work += len(live)
        if len(nxt) > f.beam_width:
            nxt = heapq.nsmallest(f.beam_width, nxt, key=lambda c: (c[6], c[7]))
        if len(nxt) > f.max_candidates:  # pragma: no cover - beam_width <= max_candidates
            raise AssertionError("candidate cap exceeded")
        if check_invariant:
            mod = 1 << (i + 1)
            for c in nxt:
                assert c[0] * c[1] % mod == N % mod
        live = nxt
        peak = max(peak, len(live))
        if not live:
            status = "empty"
            break
        if f.max_seconds is not None and time.perf_counter() - start > f.max_seconds:
            status = "timeout"
            live = []
            break
    live.sort(key=lambda c: (c[6], c[7]))
    mask = (1 << bits) - 1
    cands = []
    seen = set()
    for c in live:
        pb = c[0] & mask
        if pb in seen:
            continue
        seen.add(pb)
        cands.append(CandidatePair(pb, c[1] & mask, bits, c[6], (c[6], c[7])))
    return PruneResult(cands, peak, work, time.perf_counter() - start, status)


# ---------------------------------------------------------------------------
# Coppersmith: the whole prime from its low bits


def _poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_eval(c, x):
    acc = 0
    for a in reversed(c):
        acc = acc * x + a
    return acc


def _integer_roots(coeffs, bound):
    """Integer roots in [-bound, bound] of an integer polynomial.

    Float roots of the rescaled polynomial seed an exact integer Newton
    iteration; only exact roots are returned.
    """
    deg = len(coeffs) - 1
    while deg > 0 and coeffs[deg] == 0:
        deg -= 1
    if deg <= 0:
        return []
    c = coeffs[: deg + 1]
    # y = bound * z keeps the float problem well scaled
    scaled = [a * bound**k for k, a in enumerate(c)]
    top = max(abs(a) for a in scaled).bit_length()
    sh = max(top - 900, 0)
    fl = [float(a >> sh) if a >= 0 else -float((-a) >> sh) for a in scaled]
    try:
        zs = np.roots(fl[::-1])
    except np.linalg.LinAlgError:
        return []
    deriv = [k * a for k, a in enumerate(c)][1:]
    found = set()
    for z in zs:
        if abs(z.imag) > 1e-6 * max(1.0, abs(z.real)) or abs(z.real) > 1.5:
            continue
        y = int(round(z.real * bound)) if abs(z.real * bound) < 2**1000 else 0
        for _ in range(200):
            g = _poly_eval(c, y)
            if g == 0:
                break
            dg = _poly_eval(deriv, y)
            if dg == 0:
                break
            step = g // dg if (g >= 0) == (dg >= 0) else -((-g) // dg)
            if step == 0:
                step = 1 if (g > 0) == (dg > 0) else -1
                for cand in (y - step, y + step):
                    if _poly_eval(c, cand) == 0:
                        y = cand
                        break
                break
            y -= step
        if abs(y) <= bound and _poly_eval(c, y) == 0:
            found.add(y)
    return sorted(found)


def coppersmith_params(n_bits: int, log_x: float, log_p: float, max_m: int = 20) -> Tuple[int, int]:
    """Smallest (m, m + 1) meeting the determinant condition.

    The lattice holds N^(m-i) f^i for i < m and y^j f^m for j <= m, so its
    determinant is N^(m(m+1)/2) X^(n(n-1)/2) with n = 2m + 1. A short vector
    below p^m (size factors ignored) exists once
    (m(m+1)/2 * log N + n(n-1)/2 * log X) / n <= m * log p.
    """
    for m in range(1, max_m + 1):
        n = 2 * m + 1
        lhs = (m * (m + 1) / 2 * n_bits + n * (n - 1) / 2 * log_x) / n
        if lhs <= m * log_p:
            return m, m + 1
    raise InvalidParameterError("too few known bits for this modulus")


def coppersmith_from_lsbs(N: int, p0: int, t: int, *, margin: int = DEFAULT_MARGIN, m: int = None,
                          extra: int = None, prime_bits: int = None, backend: str = "auto") -> int:
    """Recover a prime factor p of N from p mod 2^t.

    Writes p = p0 + 2^t * x with x centred in the range allowed by
    ``prime_bits``-bit primes whose two top bits are set (what
    ``rsa_keygen`` produces), builds the Howgrave-Graham lattice for the
    monic f(y) = y + c with c = (p0 + 2^t * x_mid) / 2^t mod N, reduces it
    and checks every small integer root against N.
    """
    N = check_int(N, "N", min_value=15)
    n_bits = N.bit_length()
    t = check_int(t, "t", min_value=1)
    if t < n_bits // 4 + margin:
        raise InvalidParameterError(f"need t >= bitlen(N)/4 + {margin} = {n_bits // 4 + margin}, got {t}")
    hb = prime_bits or (n_bits + 1) // 2
    M = 1 << t
    p0 %= M
    if p0 % 2 == 0:
        raise NotFound("an odd prime cannot have an even residue")
    lo = (3 << (hb - 2)) - p0
    hi = (1 << hb) - p0
    xlo = -(-lo // M)
    xhi = hi // M
    if xhi < xlo:
        raise NotFound("no prime of the expected size has these low bits")
    xc = (xlo + xhi) // 2
    X = (xhi - xlo) // 2 + 1
    if m is None:
        m, extra_default = coppersmith_params(n_bits, math.log2(X), math.log2(3) + hb - 2)
        extra = extra if extra is not None else extra_default
    elif extra is None:
        extra = m + 1
    c0 = (p0 + M * xc) * mod_inv(M, N) % N
    f = [c0, 1]
    powers = [[1]]
    for _ in range(m):
        powers.append(_poly_mul(powers[-1], f))
    polys = [[N ** (m - i) * a for a in powers[i]] for i in range(m)]
    polys += [[0] * j + powers[m] for j in range(extra)]
    dim = len(polys)
    basis = [[(P[k] if k < len(P) else 0) * X**k for k in range(dim)] for P in polys]
    reduced = lll_reduce(basis, backend=backend)
    for row in reduced[:3]:
        g = [row[k] // X**k for k in range(dim)]
        for y in _integer_roots(g, X):
            p = p0 + M * (xc + y)
            if 1 < p < N and N % p == 0:
                return p
    raise NotFound("no small root yields a factor")


# ---------------------------------------------------------------------------
# Orchestration


@dataclass
class RsaAttackConfig:
    margin: int = DEFAULT_MARGIN
    filters: PruneFilters = field(default_factory=PruneFilters)
    max_oracle_calls: int = 64
    oracle_calls_per_variant: int = 8
    variant_seconds: Optional[float] = 60.0
    time_budget: Optional[float] = None
    backend: str = "auto"


@dataclass
class RsaAttackResult:
    key: Optional[RsaKey]
    stats: Dict[str, object]


def _candidate_bits(N: int, margin: int) -> int:
    return N.bit_length() // 4 + margin


def full_rsa_attack(trace_p, trace_q, N: int, e: int, config: RsaAttackConfig = None) -> RsaAttackResult:
    """Leading repair, joint correction and the lattice oracle, end to end.

    All 36 joint variants go through extend-and-prune first. Surviving
    candidates are then handed to the lattice oracle cheapest first: by
    error count, then by the work their variant needed (a variant with
    the right number of leading iterations finishes fast), then rank.
    Raises ``NotFound`` with the stats when nothing factors N.
    """
    cfg = config or RsaAttackConfig()
    t = _candidate_bits(N, cfg.margin)
    start = time.perf_counter()
    variants = leading_repair_reduced(trace_p, trace_q)
    filt = cfg.filters
    if cfg.variant_seconds is not None and filt.max_seconds is None:
        filt = PruneFilters(**{**filt.__dict__, "max_seconds": cfg.variant_seconds})
    runs = []
    peak = 0
    for jv in variants:
        res = extend_and_prune(jv.p, jv.q, N, e, t, filt)
        peak = max(peak, res.peak_live)
        runs.append((jv, res))
        if cfg.time_budget is not None and time.perf_counter() - start > cfg.time_budget:
            break
    queue = []
    for jv, res in runs:
        for rank, cand in enumerate(res.candidates[: cfg.oracle_calls_per_variant]):
            queue.append(((cand.error_count, res.work, rank, jv.index), jv, cand))
    queue.sort(key=lambda item: item[0])
    stats = {
        "variants": len(variants),
        "variants_run": len(runs),
        "variants_with_candidates": sum(1 for _, r in runs if r.candidates),
        "peak_live": peak,
        "oracle_calls": 0,
        "bits": t,
    }
    seen = set()
    for _, jv, cand in queue:
        if stats["oracle_calls"] >= cfg.max_oracle_calls:
            break
        if cand.p_bits in seen:
            continue
        seen.add(cand.p_bits)
        stats["oracle_calls"] += 1
        try:
            p = coppersmith_from_lsbs(N, cand.p_bits, t, margin=cfg.margin, backend=cfg.backend)
        except NotFound:
            continue
        q = N // p
        key = RsaKey.from_primes(p, q, e).validate()
        stats.update(variant=jv.label, error_count=cand.error_count, seconds=time.perf_counter() - start)
        return RsaAttackResult(key, stats)
    stats["seconds"] = time.perf_counter() - start
    raise NotFound("no variant produced a factor of N", stats)


__all__ = [
    "CandidatePair",
    "JointVariant",
    "KeygenResult",
    "MAX_CANDIDATES",
    "NotFound",
    "PruneFilters",
    "PruneResult",
    "RsaAttackConfig",
    "RsaAttackResult",
    "RsaKey",
    "Variant",
    "coppersmith_from_lsbs",
    "coppersmith_params",
    "extend_and_prune",
    "full_rsa_attack",
    "leading_repair_bruteforce",
    "leading_repair_reduced",
    "lsbs_from_components",
    "prime_variants",
    "replay_recover_lsbs",
    "rsa_keygen",
    "shift_coverage",
]
