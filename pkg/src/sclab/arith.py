"""Modular arithmetic primitives with side-channel relevant bookkeeping.

Two routines here record what an observer of the computation would see:

* ``mod_exp_fixed_window`` reports how many fixed-size windows it processed.
  The exponent is padded up to a multiple of the window width, so the work
  done only depends on ``ceil(bitlen(exp) / w)``.
* ``beea_gcd_traced`` runs the binary extended Euclidean algorithm and keeps
  the sequence of subtractions and single-bit shifts it performed.
"""

from dataclasses import dataclass
from typing import List, Tuple

import gmpy2

from ._validation import check_int, check_window
from .errors import InvalidParameterError, NoInverseError

SUB = "SUB"
SHIFT = "SHIFT"


@dataclass(frozen=True)
class WindowedExpResult:
    value: int
    windows_processed: int
    padded_bitlen: int


@dataclass(frozen=True)
class OpTrace:
    """SUB/SHIFT transcript of one BEEA run.

    ``leading_truncated`` counts SUB-delimited iterations removed from the
    front, which happens when a capture starts late.
    """

    ops: Tuple[str, ...]
    leading_truncated: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        bad = [op for op in self.ops if op not in (SUB, SHIFT)]
        if bad:
            raise InvalidParameterError(f"unknown trace symbols: {sorted(set(bad))}")
        check_int(self.leading_truncated, "leading_truncated", min_value=0)

    def __len__(self):
        return len(self.ops)

    def components(self) -> List[int]:
        return trace_to_components(self.ops)


def mod_inv(a: int, m: int) -> int:
    if m <= 0:
        raise InvalidParameterError("modulus must be positive")
    try:
        return pow(a, -1, m)
    except ValueError:
        raise NoInverseError(f"{a} is not invertible modulo {m}") from None


def padded_bitlen(bitlen: int, w: int) -> int:
    """Smallest multiple of ``w`` that is >= ``bitlen`` (at least ``w``)."""
    return max(1, -(-bitlen // w)) * w


def mod_exp_fixed_window(base: int, exp: int, modulus: int, w: int) -> WindowedExpResult:
    """Left-to-right fixed-window exponentiation.

    Every window costs exactly ``w`` squarings and one table multiplication,
    including windows whose digit is zero.
    """
    w = check_window(w)
    modulus = check_int(modulus, "modulus")
    if modulus <= 2 or modulus % 2 == 0:
        raise InvalidParameterError("modulus must be an odd integer > 2")
    exp = check_int(exp, "exp")
    if not 0 < exp < modulus:
        raise InvalidParameterError("exponent must satisfy 0 < exp < modulus")
    base = check_int(base, "base")
    if not 0 <= base < modulus:
        raise InvalidParameterError("base must lie in [0, modulus)")

    table = [1] * (1 << w)
    for i in range(1, 1 << w):
        table[i] = table[i - 1] * base % modulus

    plen = padded_bitlen(exp.bit_length(), w)
    windows = plen // w
    mask = (1 << w) - 1
    acc = 1
    for idx in range(windows - 1, -1, -1):
        for _ in range(w):
            acc = acc * acc % modulus
        acc = acc * table[(exp >> (idx * w)) & mask] % modulus
    return WindowedExpResult(value=acc, windows_processed=windows, padded_bitlen=plen)


def beea_gcd_traced(a: int, b: int) -> Tuple[int, OpTrace]:
    """Binary GCD of ``0 < a < b`` together with its SUB/SHIFT transcript.

    Halvings of the common power of two emit one SHIFT per step. Which
    variable got shifted is not recorded.
    """
    a = check_int(a, "a")
    b = check_int(b, "b")
    if not 0 < a < b:
        raise InvalidParameterError("need 0 < a < b")
    u, v, i = a, b, 0
    ops = []
    while u % 2 == 0 and v % 2 == 0:
        u >>= 1
        v >>= 1
        i += 1
        ops.append(SHIFT)
    while u != 0:
        while u % 2 == 0:
            u >>= 1
            ops.append(SHIFT)
        while v % 2 == 0:
            v >>= 1
            ops.append(SHIFT)
        if u >= v:
            u -= v
        else:
            v -= u
        ops.append(SUB)
    return v << i, OpTrace(ops)


def replay_beea(a: int, b: int, trace) -> bool:
    """Check that running the binary GCD on (a, b) yields exactly ``trace``.

    The check walks the operations symbol by symbol and fails at the first
    step where the observed symbol is impossible for the current state.
    """
    ops = trace.ops if isinstance(trace, OpTrace) else tuple(trace)
    if not 0 < a < b:
        return False
    u, v = a, b
    pos = 0
    n = len(ops)
    while u % 2 == 0 and v % 2 == 0:
        if pos >= n or ops[pos] != SHIFT:
            return False
        u >>= 1
        v >>= 1
        pos += 1
    while u != 0:
        for_shift = u % 2 == 0 or v % 2 == 0
        if pos >= n:
            return False
        if ops[pos] == SHIFT:
            if not for_shift:
                return False
            if u % 2 == 0:
                u >>= 1
            else:
                v >>= 1
        else:
            if for_shift:
                return False
            if u >= v:
                u -= v
            else:
                v -= u
        pos += 1
    return pos == n


def trace_to_components(ops) -> List[int]:
    """Shift counts preceding each SUB, in order.

    A trace ``SHIFT SHIFT SUB SUB SHIFT SUB`` maps to ``[2, 0, 1]``. Trailing
    shifts after the last SUB are dropped; they carry no SUB delimiter.
    """
    comps = []
    run = 0
    for op in ops:
        if op == SHIFT:
            run += 1
        else:
            comps.append(run)
            run = 0
    return comps


def components_to_ops(components) -> Tuple[str, ...]:
    ops = []
    for c in components:
        ops.extend([SHIFT] * int(c))
        ops.append(SUB)
    return tuple(ops)


def is_probable_prime(n: int) -> bool:
    return n >= 2 and bool(gmpy2.is_prime(n, 40))


def random_prime(bits: int, rng, *, top_two_bits=True, condition=None) -> int:
    """Uniform-ish random prime of exactly ``bits`` bits.

    With ``top_two_bits`` the two most significant bits are forced to 1, so
    the product of two such primes has exactly ``2 * bits`` bits.
    """
    bits = check_int(bits, "bits", min_value=8)
    while True:
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if top_two_bits:
            cand |= 1 << (bits - 2)
        if is_probable_prime(cand) and (condition is None or condition(cand)):
            return cand


def centered_mod(x: int, m: int) -> int:
    """Representative of ``x mod m`` in (-m/2, m/2]."""
    r = x % m
    if r > m // 2:
        r -= m
    return r


__all__ = [
    "SUB",
    "SHIFT",
    "OpTrace",
    "WindowedExpResult",
    "mod_inv",
    "padded_bitlen",
    "mod_exp_fixed_window",
    "beea_gcd_traced",
    "replay_beea",
    "trace_to_components",
    "components_to_ops",
    "is_probable_prime",
    "random_prime",
    "centered_mod",
]
