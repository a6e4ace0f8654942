"""DSA and ECDSA signing with selectable nonce handling.

The nonce mode decides which exponent/scalar the group operation sees:

RAW                  k itself
PADDED               k + q or k + 2q, always bitlen(q) + 1 bits long
PADDED_THEN_REDUCED  the padded value reduced mod q again, i.e. k (the defect)
RANDOM_WORD_PAD      k + b*q with a random multiplier b of ``word_bits`` bits
"""

import enum
from dataclasses import dataclass, field
from typing import Any, Optional

from ._validation import check_int, check_random_state
from .arith import mod_exp_fixed_window, mod_inv
from .errors import InvalidParameterError, RangeError
from .groups import CurveParams, DsaParams, scalar_mult_reference, scalar_mult_wnaf


class NonceTag(enum.Enum):
    RAW = "RAW"
    PADDED = "PADDED"
    PADDED_THEN_REDUCED = "PADDED_THEN_REDUCED"
    RANDOM_WORD_PAD = "RANDOM_WORD_PAD"


@dataclass(frozen=True)
class NonceMode:
    tag: NonceTag = NonceTag.RAW
    word_bits: int = 0

    def __post_init__(self):
        tag = self.tag if isinstance(self.tag, NonceTag) else NonceTag(str(self.tag).upper())
        object.__setattr__(self, "tag", tag)
        if tag is NonceTag.RANDOM_WORD_PAD:
            check_int(self.word_bits, "word_bits", min_value=1)
        elif self.word_bits:
            raise InvalidParameterError("word_bits only applies to RANDOM_WORD_PAD")

    @classmethod
    def parse(cls, text: str, word_bits: int = 0):
        tag = NonceTag(text.strip().upper())
        if tag is NonceTag.RANDOM_WORD_PAD and not word_bits:
            word_bits = 32
        return cls(tag, word_bits if tag is NonceTag.RANDOM_WORD_PAD else 0)


RAW = NonceMode(NonceTag.RAW)
PADDED = NonceMode(NonceTag.PADDED)
PADDED_THEN_REDUCED = NonceMode(NonceTag.PADDED_THEN_REDUCED)


@dataclass(frozen=True)
class KeyPair:
    alpha: int
    public: Any


@dataclass
class SignatureSample:
    r: int
    s: int
    h: int
    leak: Any = None
    truth_nonce: Optional[int] = field(default=None, repr=False)


def nonce_pad(k: int, q: int) -> int:
    """Add q or 2q so the result always has bitlen(q) + 1 bits."""
    if not 0 < k < q:
        raise InvalidParameterError("nonce must satisfy 0 < k < q")
    if (k + q).bit_length() == q.bit_length():
        return k + 2 * q
    return k + q


def nonce_unpad_bug(k_hat: int, q: int) -> int:
    if k_hat < q:
        raise InvalidParameterError("padded nonce must be >= q")
    return k_hat % q


def random_word_pad(k: int, q: int, word_bits: int, rng) -> int:
    """k + b*q for random b whose top bit is set.

    b is drawn from [ceil(2^(m+wb-1) / q), 2^wb) with m = bitlen(q), which
    keeps bitlen(k + b*q) = m + wb for every k in (0, q).
    """
    if not 0 < k < q:
        raise InvalidParameterError("nonce must satisfy 0 < k < q")
    wb = check_int(word_bits, "word_bits", min_value=1)
    m = q.bit_length()
    lo = -(-(1 << (m + wb - 1)) // q)
    hi = 1 << wb
    if lo >= hi:
        raise InvalidParameterError(f"word_bits={wb} leaves no multiplier with a fixed bit length")
    b = lo + rng.randrange(hi - lo)
    return k + b * q


def processed_nonce(k: int, q: int, mode: NonceMode, rng=None) -> int:
    """The value actually fed to the exponentiation or scalar multiplication."""
    tag = mode.tag
    if tag is NonceTag.RAW:
        return k
    if tag is NonceTag.PADDED:
        return nonce_pad(k, q)
    if tag is NonceTag.PADDED_THEN_REDUCED:
        return nonce_unpad_bug(nonce_pad(k, q), q)
    return random_word_pad(k, q, mode.word_bits, check_random_state(rng))


def dsa_keygen(params: DsaParams, rng) -> KeyPair:
    rng = check_random_state(rng)
    alpha = rng.randrange(1, params.q)
    return KeyPair(alpha, pow(params.g, alpha, params.p))


def ecdsa_keygen(curve: CurveParams, rng) -> KeyPair:
    rng = check_random_state(rng)
    alpha = rng.randrange(1, curve.q)
    return KeyPair(alpha, scalar_mult_reference(alpha, curve.G, curve))


def _check_hash(h, q):
    h = check_int(h, "h")
    if not 0 < h < q:
        raise InvalidParameterError("hash value must satisfy 0 < h < q")
    return h


def dsa_sign(h, key: KeyPair, params: DsaParams, mode: NonceMode = RAW, rng=None, *,
             w: int = 4, leak_model=None, record_nonce: bool = False) -> SignatureSample:
    """Sign ``h``; with ``leak_model`` attach a simulated signing latency."""
    q = params.q
    h = _check_hash(h, q)
    rng = check_random_state(rng)
    while True:
        k = rng.randrange(1, q)
        exp = processed_nonce(k, q, mode, rng)
        res = mod_exp_fixed_window(params.g, exp, params.p, w)
        r = res.value % q
        if r == 0:
            continue
        s = mod_inv(k, q) * (h + key.alpha * r) % q
        if s == 0:
            continue
        break
    leak = None
    if leak_model is not None:
        from .leaksim import latency_from_windows

        leak = latency_from_windows(res.windows_processed, leak_model, rng)
    return SignatureSample(r, s, h, leak, k if record_nonce else None)


def ecdsa_sign(h, key: KeyPair, curve: CurveParams, mode: NonceMode = RAW, rng=None, *,
               w: int = 5, capture_sequence: bool = False, record_nonce: bool = False) -> SignatureSample:
    """Sign ``h``; with ``capture_sequence`` attach the clean double/add transcript."""
    q = curve.q
    h = _check_hash(h, q)
    rng = check_random_state(rng)
    while True:
        k = rng.randrange(1, q)
        scalar = processed_nonce(k, q, mode, rng)
        R, seq = scalar_mult_wnaf(scalar, w, curve)
        r = R[0] % q
        if r == 0:
            continue
        s = mod_inv(k, q) * (h + key.alpha * r) % q
        if s == 0:
            continue
        break
    leak = None
    if capture_sequence:
        from .leaksim import DaSeq

        leak = DaSeq(seq.ops, dropped=False)
    return SignatureSample(r, s, h, leak, k if record_nonce else None)


def verify(sig: SignatureSample, h: int, public, params) -> bool:
    """Standard DSA/ECDSA verification.

    Raises ``RangeError`` when r or s is outside (0, q); otherwise returns
    whether the signature is valid for ``public``.
    """
    q = params.q
    if not (0 < sig.r < q and 0 < sig.s < q):
        raise RangeError("signature components must lie in (0, q)")
    w_ = mod_inv(sig.s, q)
    u1 = h * w_ % q
    u2 = sig.r * w_ % q
    if isinstance(params, DsaParams):
        v = pow(params.g, u1, params.p) * pow(public, u2, params.p) % params.p % q
        return v == sig.r
    from .groups import _add

    P = _add(scalar_mult_reference(u1, params.G, params), scalar_mult_reference(u2, public, params), params)
    return P is not None and P[0] % q == sig.r


def public_from_alpha(alpha: int, params):
    if isinstance(params, DsaParams):
        return pow(params.g, alpha, params.p)
    return scalar_mult_reference(alpha, params.G, params)


__all__ = [
    "KeyPair",
    "NonceMode",
    "NonceTag",
    "PADDED",
    "PADDED_THEN_REDUCED",
    "RAW",
    "SignatureSample",
    "dsa_keygen",
    "dsa_sign",
    "ecdsa_keygen",
    "ecdsa_sign",
    "nonce_pad",
    "nonce_unpad_bug",
    "processed_nonce",
    "public_from_alpha",
    "random_word_pad",
    "verify",
]
