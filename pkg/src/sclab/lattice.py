"""Integer lattices: LLL, BKZ, Hermite normal form, CVP embedding, re-randomization.

Bases are lists of integer rows (Python ints, so entries are unbounded).
Reduction keeps the Gram matrix exactly and runs Gram-Schmidt in floating
point. The float type is picked from the size of the Gram entries (float64,
then extended precision); when size reduction fails to settle, the
reduction restarts with an exact rational Gram-Schmidt.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from ._validation import check_int, check_random_state
from .errors import InvalidParameterError, RankDeficiencyError

IntMatrix = List[List[int]]


@dataclass(frozen=True)
class ReductionParams:
    lll_delta: float = 0.99
    block_size: int = 2
    max_rounds: int = 8
    eta: float = 0.51

    def __post_init__(self):
        if not 0.25 < float(self.lll_delta) < 1:
            raise InvalidParameterError("lll_delta must lie in (0.25, 1)")
        if not 0.5 <= float(self.eta) < math.sqrt(float(self.lll_delta)):
            raise InvalidParameterError("eta must lie in [0.5, sqrt(delta))")
        check_int(self.block_size, "block_size", min_value=2)
        check_int(self.max_rounds, "max_rounds", min_value=1)


def as_matrix(M) -> IntMatrix:
    rows = [[int(x) for x in row] for row in M]
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise InvalidParameterError("matrix is not rectangular")
    return rows


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> IntMatrix:
    cols = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in cols] for row in A]


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def determinant(M) -> int:
    """Exact determinant of a square integer matrix (Bareiss elimination)."""
    A = as_matrix(M)
    n = len(A)
    if any(len(r) != n for r in A):
        raise InvalidParameterError("determinant needs a square matrix")
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        for i in range(k + 1, n):
            aik = A[i][k]
            row_i = A[i]
            row_k = A[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * A[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Hermite normal form


def hnf(basis) -> IntMatrix:
    """Row-style Hermite normal form of the lattice spanned by the rows.

    Pivots are positive, entries above a pivot lie in [0, pivot), zero rows
    are dropped. Two bases span the same lattice iff their HNFs are equal.
    """
    A = [row[:] for row in as_matrix(basis)]
    if not A:
        return []
    ncols = len(A[0])
    r = 0
    for col in range(ncols):
        if r == len(A):
            break
        while True:
            nz = [i for i in range(r, len(A)) if A[i][col] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(A[i][col]))
            A[r], A[piv] = A[piv], A[r]
            pr = A[r]
            pv = pr[col]
            done = True
            for i in range(r + 1, len(A)):
                c = A[i][col]
                if c:
                    f = c // pv
                    if f:
                        A[i] = [a - f * b for a, b in zip(A[i], pr)]
                    if A[i][col]:
                        done = False
            if done:
                break
        if r < len(A) and A[r][col] != 0:
            if A[r][col] < 0:
                A[r] = [-a for a in A[r]]
            pr = A[r]
            pv = pr[col]
            for i in range(r):
                f = A[i][col] // pv
                if f:
                    A[i] = [a - f * b for a, b in zip(A[i], pr)]
            r += 1
    return [row for row in A if any(row)]


def same_lattice(A, B) -> bool:
    return hnf(A) == hnf(B)


# ---------------------------------------------------------------------------
# LLL


class _PrecisionFailure(Exception):
    pass


def _to_float_factory(maxbits):
    if maxbits < 1000:
        return np.float64, float
    if maxbits < 16000:
        return np.longdouble, np.longdouble
    return None, None


class _LLLState:
    """Basis, exact (symmetric) Gram matrix, and floating Gram-Schmidt data."""

    def __init__(self, rows, exact=False):
        self.b = rows
        self.n = len(rows)
        n = self.n
        G = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1):
                G[i][j] = G[j][i] = _dot(rows[i], rows[j])
        self.G = G
        self.exact = exact
        self._setup_float()

    def _setup_float(self):
        maxbits = max((self.G[i][i].bit_length() for i in range(self.n)), default=1)
        dtype, conv = _to_float_factory(maxbits)
        if dtype is None:
            self.exact = True
        if self.exact:
            self.conv = Fraction
            self.r = [[Fraction(0)] * self.n for _ in range(self.n)]
            self.mu = [[Fraction(0)] * self.n for _ in range(self.n)]
        else:
            self.dtype = dtype
            self.conv = conv
            self.r = np.zeros((self.n, self.n), dtype=dtype)
            self.mu = np.zeros((self.n, self.n), dtype=dtype)

    def compute_row(self, k):
        """Gram-Schmidt coefficients of row k against rows 0..k-1."""
        conv = self.conv
        r = self.r
        mu = self.mu
        Gk = self.G[k]
        if self.exact:
            for j in range(k):
                s = Fraction(Gk[j])
                for i in range(j):
                    s -= mu[j][i] * r[k][i]
                r[k][j] = s
                mu[k][j] = s / r[j][j]
            s = Fraction(Gk[k])
            for j in range(k):
                s -= mu[k][j] * r[k][j]
            r[k][k] = s
            return
        rk = r[k]
        muk = mu[k]
        if k and self.dtype is np.float64:
            # r_k solves the unit lower-triangular system mu[:k, :k] r_k = G_k
            g = np.array([float(v) for v in Gk[:k]])
            rk[:k] = solve_triangular(mu[:k, :k], g, lower=True, unit_diagonal=True, check_finite=False)
            muk[:k] = rk[:k] / np.diagonal(r)[:k]
        else:
            for j in range(k):
                s = conv(Gk[j])
                if j:
                    s = s - np.dot(mu[j, :j], rk[:j])
                rk[j] = s
                muk[j] = s / r[j, j]
        s = conv(Gk[k])
        if k:
            s = s - np.dot(muk[:k], rk[:k])
        rk[k] = s

    def sub_row(self, k, j, x):
        """b_k <- b_k - x * b_j, keeping the Gram matrix exact."""
        self.b[k] = [a - x * c for a, c in zip(self.b[k], self.b[j])]
        G = self.G
        Gk = G[k]
        Gj = G[j]
        gkk = Gk[k] - 2 * x * Gk[j] + x * x * Gj[j]
        for i in range(self.n):
            if i != k:
                v = Gk[i] - x * Gj[i]
                Gk[i] = v
                G[i][k] = v
        Gk[k] = gkk

    def swap(self, k):
        """Swap rows k-1 and k."""
        a = k - 1
        self.b[a], self.b[k] = self.b[k], self.b[a]
        G = self.G
        G[a], G[k] = G[k], G[a]
        for row in G:
            row[a], row[k] = row[k], row[a]


def _size_reduce(st: _LLLState, k: int, eta: float, max_iter: int):
    for _ in range(max_iter):
        st.compute_row(k)
        if k == 0:
            return
        muk = st.mu[k]
        if st.exact:
            if all(abs(muk[j]) <= Fraction(1, 2) for j in range(k)):
                return
        elif float(np.max(np.abs(muk[:k]))) <= eta:
            return
        for j in range(k - 1, -1, -1):
            m = muk[j]
            if st.exact:
                x = round(m)
            else:
                if not np.isfinite(m):
                    raise _PrecisionFailure
                x = int(np.rint(m))
            if x:
                st.sub_row(k, j, x)
                if st.exact:
                    for i in range(j):
                        muk[i] -= x * st.mu[j][i]
                    muk[j] -= x
                else:
                    muk[:j] -= x * st.mu[j, :j]
                    muk[j] -= x
    if not st.exact:
        raise _PrecisionFailure
    st.compute_row(k)


def _lll_core(st: _LLLState, delta: float, eta: float, start: int = 0):
    k = min(max(start, 0), st.n)
    for i in range(k):
        st.compute_row(i)
    max_iter = 60 if not st.exact else 3
    delta_exact = Fraction(delta).limit_denominator(10**6)
    swaps = 0
    while k < st.n:
        _size_reduce(st, k, eta, max_iter)
        if st.G[k][k] == 0:
            raise RankDeficiencyError("basis vectors are linearly dependent")
        if st.exact:
            rk = st.r[k][k]
            if rk == 0:
                raise RankDeficiencyError("basis vectors are linearly dependent")
            if k == 0:
                k = 1
                continue
            rprev = st.r[k - 1][k - 1]
            mu = st.mu[k][k - 1]
            lovasz = delta_exact * rprev <= rk + mu * mu * rprev
        else:
            # r_kk can come out slightly negative from cancellation when it is
            # tiny next to r_(k-1); the Lovasz test then just fails and swaps
            rk = st.r[k, k]
            if k == 0:
                if not rk > 0:
                    raise _PrecisionFailure
                k = 1
                continue
            rprev = st.r[k - 1, k - 1]
            mu = st.mu[k, k - 1]
            lovasz = delta * rprev <= rk + mu * mu * rprev
        if lovasz:
            k += 1
        else:
            st.swap(k)
            swaps += 1
            k = max(k - 1, 0)
    return swaps


def _reduced_state(rows, delta, eta, start=0):
    try:
        st = _LLLState([r[:] for r in rows])
        _lll_core(st, delta, eta, start)
        return st
    except _PrecisionFailure:
        st = _LLLState([r[:] for r in rows], exact=True)
        _lll_core(st, delta, eta)
        return st


try:
    import flint as _flint
except ImportError:  # pragma: no cover - optional accelerator
    _flint = None

BACKENDS = ("auto", "native", "flint")


def _pick_backend(backend):
    if backend not in BACKENDS:
        raise InvalidParameterError(f"backend must be one of {BACKENDS}")
    if backend == "auto":
        return "flint" if _flint is not None else "native"
    if backend == "flint" and _flint is None:
        raise InvalidParameterError("python-flint is not installed")
    return backend


def _flint_lll(rows, delta, eta):
    out = _flint.fmpz_mat(rows).lll(delta=float(delta), eta=float(eta))
    red = [[int(x) for x in row] for row in out.tolist()]
    if any(not any(row) for row in red):
        raise RankDeficiencyError("basis vectors are linearly dependent")
    return red


def lll_reduce(basis, params: ReductionParams = None, *, delta: float = None, backend: str = "auto") -> IntMatrix:
    """LLL-reduce the rows of ``basis``; raises on linearly dependent rows.

    ``backend="native"`` forces the pure Python reduction below, ``"flint"``
    hands the matrix to FLINT's fmpz_lll. Both honour the same delta/eta.
    """
    params = params or ReductionParams()
    d = params.lll_delta if delta is None else delta
    rows = as_matrix(basis)
    if not rows:
        return []
    if _pick_backend(backend) == "flint":
        return _flint_lll(rows, d, params.eta)
    return _reduced_state(rows, d, params.eta).b


def _gso_state(rows):
    """Gram-Schmidt data for an already reduced basis (no reduction steps)."""
    try:
        st = _LLLState([r[:] for r in rows])
        for k in range(st.n):
            st.compute_row(k)
            if not (np.all(np.isfinite(st.mu[k])) and st.r[k, k] > 0):
                raise _PrecisionFailure
        return st
    except _PrecisionFailure:
        st = _LLLState([r[:] for r in rows], exact=True)
        for k in range(st.n):
            st.compute_row(k)
        return st


def gram_schmidt_exact(basis):
    """Exact ``(mu, bstar_sq)`` of the rows, as Fractions."""
    B = as_matrix(basis)
    n = len(B)
    bstar = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms = []
    for i in range(n):
        v = [Fraction(x) for x in B[i]]
        for j in range(i):
            if norms[j] == 0:
                continue
            mu[i][j] = sum(Fraction(a) * c for a, c in zip(B[i], bstar[j])) / norms[j]
            v = [a - mu[i][j] * c for a, c in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(sum(x * x for x in v))
    return mu, norms


def is_lll_reduced(basis, delta=0.99, eta=0.51) -> bool:
    """Exact check of size reduction (|mu| <= eta) and the Lovasz condition."""
    mu, norms = gram_schmidt_exact(basis)
    n = len(norms)
    eta_f = Fraction(eta).limit_denominator(10**6)
    delta_f = Fraction(delta).limit_denominator(10**6)
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > eta_f:
                return False
    for k in range(1, n):
        if delta_f * norms[k - 1] > norms[k] + mu[k][k - 1] ** 2 * norms[k - 1]:
            return False
    return True


# ---------------------------------------------------------------------------
# BKZ


def _enumerate(mu, r, lo, hi, radius, max_nodes=2_000_000):
    """Schnorr-Euchner enumeration on the projected block [lo, hi).

    Returns integer coefficients (relative to rows lo..hi-1) of the shortest
    nonzero projected vector whose squared norm is below ``radius``, or None.
    Norms are divided by r[lo] to stay in float range.
    """
    n = hi - lo
    scale = r[lo]
    rr = [float(r[lo + i] / scale) for i in range(n)]
    mm = [[float(mu[lo + i][lo + j]) for j in range(n)] for i in range(n)]
    bound = float(radius / scale)
    x = [0] * n
    c = [0.0] * n
    ell = [0.0] * (n + 1)
    dx = [0] * n
    ddx = [0] * n
    x[0] = 1
    k = 0
    best = None
    nodes = 0
    while nodes < max_nodes:
        nodes += 1
        diff = x[k] - c[k]
        newl = ell[k + 1] + diff * diff * rr[k]
        if newl < bound:
            if k == 0:
                if newl > 0:
                    bound = newl
                    best = x[:]
            else:
                ell[k] = newl
                k -= 1
                s = 0.0
                for j in range(k + 1, n):
                    if x[j]:
                        s -= x[j] * mm[j][k]
                c[k] = s
                x[k] = round(s)
                if s >= x[k]:
                    dx[k] = ddx[k] = 1
                else:
                    dx[k] = ddx[k] = -1
                continue
        else:
            k += 1
            if k >= n:
                break
        if ell[k + 1] == 0.0:
            x[k] += 1
        else:
            x[k] += dx[k]
            ddx[k] = -ddx[k]
            dx[k] = ddx[k] - dx[k]
    if best is None:
        return None
    return best, bound * scale


def _block_insert(rows, lo, coeffs):
    """Rewrite rows lo.. so that row lo becomes sum(coeffs[i] * rows[lo + i]).

    The coefficient vector must be primitive. Pairwise Euclid steps keep the
    transformation unimodular, so the lattice is unchanged.
    """
    x = list(coeffs)
    idx = [i for i, c in enumerate(x) if c]
    while len(idx) > 1:
        i, j = idx[-2], idx[-1]
        # invariant: v = sum x_t * b_t over the block
        while x[j]:
            qt = x[i] // x[j]
            if qt:
                x[i] -= qt * x[j]
                bi = rows[lo + i]
                rows[lo + j] = [a + qt * b for a, b in zip(rows[lo + j], bi)]
            x[i], x[j] = x[j], x[i]
            rows[lo + i], rows[lo + j] = rows[lo + j], rows[lo + i]
        idx.pop()
    i = idx[0]
    if x[i] not in (1, -1):
        raise InvalidParameterError("enumeration returned a non-primitive vector")
    v = rows[lo + i] if x[i] == 1 else [-a for a in rows[lo + i]]
    del rows[lo + i]
    rows.insert(lo, v)


def bkz_reduce(basis, params: ReductionParams = None, *, backend: str = "auto") -> IntMatrix:
    """Blockwise reduction: LLL plus enumeration on projected blocks.

    With ``block_size`` 2 this is plain LLL.
    """
    params = params or ReductionParams(block_size=10)
    delta, eta = params.lll_delta, params.eta
    backend = _pick_backend(backend)
    rows = as_matrix(basis)
    if not rows:
        return []

    def reduce(rows, start=0):
        if backend == "flint":
            return _gso_state(_flint_lll(rows, delta, eta))
        return _reduced_state(rows, delta, eta, start=start)

    st = reduce(rows)
    n = st.n
    beta = min(params.block_size, n)
    if beta <= 2:
        return st.b
    for _ in range(params.max_rounds):
        changed = False
        for k in range(n - 1):
            hi = min(k + beta, n)
            if st.exact:
                mu = [[float(v) for v in row] for row in st.mu]
                r = [float(st.r[i][i]) for i in range(n)]
            else:
                mu = st.mu
                r = [float(st.r[i, i]) for i in range(n)]
            found = _enumerate(mu, r, k, hi, delta * r[k])
            if found is None:
                continue
            coeffs, _ = found
            if not any(coeffs[1:]) and abs(coeffs[0]) == 1:
                continue
            rows = st.b
            _block_insert(rows, k, coeffs)
            st = reduce(rows, start=k)
            changed = True
        if not changed:
            break
    return st.b


# ---------------------------------------------------------------------------
# Embedding and randomization


def embed_cvp(B, u, q) -> IntMatrix:
    """Border ``B`` with a zero column and append the row ``(u | q)``."""
    B = as_matrix(B)
    u = [int(x) for x in u]
    if B and len(u) != len(B[0]):
        raise InvalidParameterError("target length does not match basis width")
    out = [row + [0] for row in B]
    out.append(u + [int(q)])
    return out


@dataclass(frozen=True)
class Randomized:
    matrix: IntMatrix
    perm: List[int]  # new column c holds old column perm[c]
    nnz: int


def random_unimodular(n: int, nnz: int, rng) -> IntMatrix:
    """Lower unitriangular n x n matrix with ``nnz`` random +-1 entries below the diagonal."""
    rng = check_random_state(rng)
    U = identity(n)
    slots = n * (n - 1) // 2
    nnz = min(max(int(nnz), 0), slots)
    if nnz:
        picks = rng.sample(range(slots), nnz)
        for s in picks:
            i = int((1 + math.isqrt(1 + 8 * s)) // 2)
            while i * (i - 1) // 2 > s:
                i -= 1
            while (i + 1) * i // 2 <= s:
                i += 1
            j = s - i * (i - 1) // 2
            U[i][j] = rng.choice((-1, 1))
    return U


def permute_columns(M, perm) -> IntMatrix:
    return [[row[p] for p in perm] for row in M]


def unpermute_columns(M, perm) -> IntMatrix:
    inv = [0] * len(perm)
    for new, old in enumerate(perm):
        inv[old] = new
    return [[row[inv[c]] for c in range(len(perm))] for row in M]


def gnr_randomize(B_hat, density_target=None, rng=None, *, return_details=False):
    """Shuffle columns and multiply by a sparse unimodular matrix.

    ``density_target`` is the number of off-diagonal +-1 entries; the default
    is d + sqrt(d) with d = dim - 2.
    """
    rng = check_random_state(rng)
    M = as_matrix(B_hat)
    n = len(M)
    if any(len(r) != n for r in M):
        raise InvalidParameterError("gnr_randomize needs a square matrix")
    if density_target is None:
        d = max(n - 2, 1)
        density_target = round(d + math.sqrt(d))
    perm = list(range(n))
    rng.shuffle(perm)
    P = permute_columns(M, perm)
    U = random_unimodular(n, density_target, rng)
    out = [list(row) for row in P]
    # U is lower unitriangular: row i of U*P = P_i + sum_{j<i} U_ij P_j
    for i in range(n):
        acc = P[i][:]
        for j in range(i):
            if U[i][j]:
                s = U[i][j]
                acc = [a + s * b for a, b in zip(acc, P[j])]
        out[i] = acc
    nnz = sum(1 for i in range(n) for j in range(i) if U[i][j])
    if return_details:
        return Randomized(out, perm, nnz)
    return out


def norm_sq(v) -> int:
    return sum(x * x for x in v)


__all__ = [
    "BACKENDS",
    "IntMatrix",
    "Randomized",
    "ReductionParams",
    "as_matrix",
    "bkz_reduce",
    "determinant",
    "embed_cvp",
    "gnr_randomize",
    "gram_schmidt_exact",
    "hnf",
    "identity",
    "is_lll_reduced",
    "lll_reduce",
    "matmul",
    "norm_sq",
    "permute_columns",
    "random_unimodular",
    "same_lattice",
    "unpermute_columns",
]
