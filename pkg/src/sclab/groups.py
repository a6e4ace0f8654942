"""DSA groups, short-Weierstrass curves, and wNAF scalar multiplication.

Points are affine ``(x, y)`` tuples; the point at infinity is ``None``.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

from ._validation import check_int, check_window
from .arith import is_probable_prime, mod_inv
from .errors import InvalidParameterError, PointValidationError

Point = Optional[Tuple[int, int]]
INFINITY: Point = None

DOUBLE = "D"
ADD = "A"


@dataclass(frozen=True)
class DsaParams:
    p: int
    q: int
    g: int

    def validate(self, check_primality=True):
        if check_primality and not (is_probable_prime(self.p) and is_probable_prime(self.q)):
            raise InvalidParameterError("p and q must be prime")
        if (self.p - 1) % self.q:
            raise InvalidParameterError("q must divide p - 1")
        if not 1 < self.g < self.p or pow(self.g, self.q, self.p) != 1:
            raise InvalidParameterError("g must be a non-trivial element of order q")
        return self


@dataclass(frozen=True)
class CurveParams:
    """Curve y^2 = x^3 + a*x + b over GF(field_prime) with base point G of order q."""

    field_prime: int
    a: int
    b: int
    G: Tuple[int, int]
    q: int
    f: int = 1
    name: str = ""

    def validate(self, check_order=True):
        p = self.field_prime
        if not is_probable_prime(p) or not is_probable_prime(self.q):
            raise InvalidParameterError("field prime and order must be prime")
        if (4 * self.a**3 + 27 * self.b**2) % p == 0:
            raise InvalidParameterError("singular curve")
        if not on_curve(self.G, self):
            raise PointValidationError("generator is not on the curve")
        if check_order and scalar_mult_reference(self.q, self.G, self) is not INFINITY:
            raise InvalidParameterError("generator order is not q")
        return self


@dataclass(frozen=True)
class WnafDigits:
    digits: Tuple[int, ...]
    w: int

    def value(self) -> int:
        return sum(d << i for i, d in enumerate(self.digits))

    def nonzero_positions(self) -> List[int]:
        return [i for i, d in enumerate(self.digits) if d]

    def __len__(self):
        return len(self.digits)


@dataclass(frozen=True)
class DaSequence:
    ops: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    @property
    def doubles(self) -> int:
        return self.ops.count(DOUBLE)

    @property
    def adds(self) -> int:
        return self.ops.count(ADD)

    def __str__(self):
        return " ".join(self.ops)


def on_curve(P: Point, curve: CurveParams) -> bool:
    if P is INFINITY:
        return True
    x, y = P
    p = curve.field_prime
    if not (0 <= x < p and 0 <= y < p):
        return False
    return (y * y - (x * x * x + curve.a * x + curve.b)) % p == 0


def _check_point(P, curve):
    if not on_curve(P, curve):
        raise PointValidationError(f"point {P} is not on the curve")


def point_neg(P: Point, curve: CurveParams) -> Point:
    if P is INFINITY:
        return INFINITY
    return (P[0], (-P[1]) % curve.field_prime)


def _add(P, Q, curve):
    # unchecked group law; callers validate at the boundary
    if P is INFINITY:
        return Q
    if Q is INFINITY:
        return P
    p = curve.field_prime
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return INFINITY
        lam = (3 * x1 * x1 + curve.a) * mod_inv(2 * y1, p) % p
    else:
        lam = (y2 - y1) * mod_inv(x2 - x1, p) % p
    x3 = (lam * lam - x1 - x2) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def _double(P, curve):
    if P is INFINITY:
        return INFINITY
    p = curve.field_prime
    x1, y1 = P
    if y1 == 0:
        return INFINITY
    lam = (3 * x1 * x1 + curve.a) * mod_inv(2 * y1, p) % p
    x3 = (lam * lam - 2 * x1) % p
    return (x3, (lam * (x1 - x3) - y1) % p)


def point_add(P: Point, Q: Point, curve: CurveParams) -> Point:
    _check_point(P, curve)
    _check_point(Q, curve)
    return _add(P, Q, curve)


def point_double(P: Point, curve: CurveParams) -> Point:
    _check_point(P, curve)
    return _double(P, curve)


def scalar_mult_reference(k: int, P: Point, curve: CurveParams) -> Point:
    """Plain right-to-left double-and-add, used as an oracle."""
    if k < 0:
        return scalar_mult_reference(-k, point_neg(P, curve), curve)
    R = INFINITY
    while k:
        if k & 1:
            R = _add(R, P, curve)
        P = _double(P, curve)
        k >>= 1
    return R


def wnaf_recode(k: int, w: int) -> WnafDigits:
    """Width-w NAF of ``k``, least significant digit first."""
    k = check_int(k, "k", min_value=0)
    w = check_window(w)
    full = 1 << w
    half = 1 << (w - 1)
    out = []
    while k != 0:
        if k & 1:
            d = k % full
            if d > half:
                d -= full
            k -= d
        else:
            d = 0
        out.append(d)
        k >>= 1
    return WnafDigits(tuple(out), w)


def scalar_mult_wnaf(k: int, w: int, curve: CurveParams, P: Point = None) -> Tuple[Point, DaSequence]:
    """[k]P through the wNAF loop, returning the double/add transcript.

    The loop runs from index floor(lg k) + 1 down to 0 and doubles once per
    index, so the number of doublings is bitlen(k) + 1.
    """
    k = check_int(k, "k", min_value=1)
    w = check_window(w)
    if P is None:
        P = curve.G
    _check_point(P, curve)
    digits = wnaf_recode(k, w).digits

    table = {1: P}
    twoP = _double(P, curve)
    for i in range(3, 1 << (w - 1), 2):
        table[i] = _add(table[i - 2], twoP, curve)
    for i in list(table):
        table[-i] = point_neg(table[i], curve)

    R = INFINITY
    ops = []
    for i in range(k.bit_length(), -1, -1):
        R = _double(R, curve)
        ops.append(DOUBLE)
        d = digits[i] if i < len(digits) else 0
        if d:
            R = _add(R, table[d], curve)
            ops.append(ADD)
    return R, DaSequence(tuple(ops))


def da_positions(seq) -> List[int]:
    """Digit indices carrying an add, decoded from a double/add transcript.

    Index 0 is the last doubling of the transcript.
    """
    ops = seq.ops if isinstance(seq, DaSequence) else tuple(seq)
    total = ops.count(DOUBLE)
    pos = []
    seen = 0
    for op in ops:
        if op == DOUBLE:
            seen += 1
        elif op == ADD:
            if seen == 0:
                raise InvalidParameterError("transcript starts with an add")
            pos.append(total - seen)
    return sorted(pos)


def da_is_consistent(seq, w: int) -> bool:
    """wNAF encoding rules a clean transcript must satisfy.

    No add before the first double, no two adds in one iteration, and any
    two adds separated by at least ``w`` digit positions.
    """
    ops = seq.ops if isinstance(seq, DaSequence) else tuple(seq)
    if not ops or ops[0] != DOUBLE:
        return False
    for a, b in zip(ops, ops[1:]):
        if a == ADD and b == ADD:
            return False
    pos = da_positions(ops)
    return all(y - x >= w for x, y in zip(pos, pos[1:]))


__all__ = [
    "ADD",
    "DOUBLE",
    "INFINITY",
    "CurveParams",
    "DaSequence",
    "DsaParams",
    "WnafDigits",
    "da_is_consistent",
    "da_positions",
    "on_curve",
    "point_add",
    "point_double",
    "point_neg",
    "scalar_mult_reference",
    "scalar_mult_wnaf",
    "wnaf_recode",
]
