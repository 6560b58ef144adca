"""Lattice bases: generator matrices, orthogonalization, 2D reduction, exact CVP.

A lattice is the integer span of the columns of a full-rank generator matrix
V.  Everything downstream (nearest-plane rounding, cell geometry, distributed
protocols) consumes the types defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

# Bases whose determinant is smaller than this fraction of the column-norm
# product are rejected as numerically degenerate.
NEAR_SINGULAR_RTOL = 1e-9

# cvp_bruteforce enumerates (2K+1)^n candidates; past n = 6 that blows up.
MAX_CVP_DIM = 6


class DegenerateBasisError(ValueError):
    pass


class UnsupportedDimensionError(ValueError):
    pass


def _require(cond, exc, msg):
    if not cond:
        raise exc(msg)


def _parse_entry(value):
    """Return (float_value, Fraction_or_None) for a JSON matrix entry.

    Integers and strings ("p/q" or a decimal literal) are exact; floats are
    kept as floats and never promoted to rationals.
    """
    if isinstance(value, bool):
        raise ValueError("matrix entries must be numbers or rational strings")
    if isinstance(value, int):
        return float(value), Fraction(value)
    if isinstance(value, float):
        return value, None
    if isinstance(value, Fraction):
        return float(value), value
    if isinstance(value, str):
        try:
            f = Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"bad rational entry {value!r}") from e
        return float(f), f
    raise ValueError(f"bad matrix entry {value!r}")


@dataclass(frozen=True)
class GramSchmidt:
    """Orthogonalization of a basis: columns of `orthogonal` are v_i^perp.

    mu[i, j] = <v_i, v_j^perp> / ||v_j^perp||^2 for j < i (zero elsewhere),
    sq_norms[i] = ||v_i^perp||^2.
    """

    orthogonal: np.ndarray
    mu: np.ndarray
    sq_norms: np.ndarray


class GeneratorMatrix:
    """Full-rank square generator matrix; column i is the basis vector v_i.

    `rational` optionally carries exact values per entry (Fraction or None),
    used by the distributed protocol which needs exact ratios of entries.
    Derived data (Gram-Schmidt, QR, inverse) is computed lazily and cached.
    """

    def __init__(self, matrix, rational=None):
        m = np.asarray(matrix, dtype=float)
        _require(m.ndim == 2 and m.shape[0] == m.shape[1],
                 UnsupportedDimensionError,
                 f"generator matrix must be square, got shape {m.shape}")
        n = m.shape[0]
        _require(n >= 1, UnsupportedDimensionError, "empty matrix")
        norms = np.linalg.norm(m, axis=0)
        _require(np.all(norms > 0), DegenerateBasisError, "zero basis vector")
        det = float(np.linalg.det(m))
        _require(abs(det) >= NEAR_SINGULAR_RTOL * float(np.prod(norms)),
                 DegenerateBasisError,
                 "basis is singular or near-singular")
        if rational is not None:
            rational = tuple(tuple(row) for row in rational)
            _require(len(rational) == n and all(len(r) == n for r in rational),
                     ValueError, "rational table shape mismatch")
            for i in range(n):
                for j in range(n):
                    f = rational[i][j]
                    if f is None:
                        continue
                    # the float entry must be the correctly rounded rational
                    _require(abs(m[i, j] - float(f)) <= math.ulp(max(1.0, abs(m[i, j]))),
                             ValueError,
                             f"entry ({i},{j}) disagrees with its rational value")
        self.matrix = m
        self.matrix.setflags(write=False)
        self.rational = rational
        self.n = n
        self.det = det
        self._gram = None
        self._qr = None
        self._inv = None

    @classmethod
    def from_columns(cls, columns):
        """Build from a sequence of basis vectors.

        Entries may be ints, floats, Fractions, or "p/q" strings; exact
        entries populate the rational table.
        """
        cols = list(columns)
        n = len(cols)
        m = np.zeros((n, n))
        rat = [[None] * n for _ in range(n)]
        any_rat = False
        for j, col in enumerate(cols):
            _require(len(col) == n, UnsupportedDimensionError,
                     "generator matrix must be square")
            for i, entry in enumerate(col):
                f, r = _parse_entry(entry)
                m[i, j] = f
                rat[i][j] = r
                any_rat = any_rat or r is not None
        return cls(m, rat if any_rat else None)

    @classmethod
    def from_json(cls, obj):
        _require(isinstance(obj, dict), ValueError, "matrix JSON must be an object")
        _require("n" in obj and "columns" in obj, ValueError,
                 'matrix JSON needs "n" and "columns"')
        n = obj["n"]
        cols = obj["columns"]
        _require(isinstance(n, int) and isinstance(cols, list) and len(cols) == n,
                 ValueError, 'matrix JSON: "columns" must list n columns')
        return cls.from_columns(cols)

    def to_json(self):
        cols = []
        for j in range(self.n):
            col = []
            for i in range(self.n):
                f = self.rational[i][j] if self.rational is not None else None
                if f is None:
                    col.append(float(self.matrix[i, j]))
                elif f.denominator == 1:
                    col.append(int(f))
                else:
                    col.append(f"{f.numerator}/{f.denominator}")
            cols.append(col)
        return {"n": self.n, "columns": cols}

    def column(self, j):
        return self.matrix[:, j].copy()

    @property
    def column_norms(self):
        return np.linalg.norm(self.matrix, axis=0)

    def is_upper_triangular(self, tol=0.0):
        m = self.matrix
        return bool(np.all(np.abs(m[np.tril_indices(self.n, -1)]) <= tol))

    def scaled(self, c):
        """Generator of the scaled lattice c * Lambda (c a nonzero number).

        Exact entries stay exact: the float scale converts to a Fraction,
        which is lossless for any finite float.
        """
        cf = float(c)
        _require(cf != 0.0 and math.isfinite(cf), ValueError, "bad scale")
        rat = None
        if self.rational is not None:
            cr = c if isinstance(c, Fraction) else Fraction(cf)
            rat = [[None if f is None else f * cr for f in row]
                   for row in self.rational]
        return GeneratorMatrix(self.matrix * cf, rat)

    def gram(self):
        if self._gram is None:
            self._gram = gram_schmidt(self)
        return self._gram

    def qr(self):
        if self._qr is None:
            self._qr = qr_upper_triangular(self)
        return self._qr

    def inverse(self):
        if self._inv is None:
            self._inv = np.linalg.inv(self.matrix)
        return self._inv


@dataclass(frozen=True)
class LatticeVector:
    """A lattice point together with its integer coordinates: point = V @ coeffs."""

    coeffs: np.ndarray
    point: np.ndarray

    @classmethod
    def from_coeffs(cls, V: GeneratorMatrix, coeffs):
        u = np.asarray(coeffs, dtype=np.int64)
        return cls(coeffs=u, point=V.matrix @ u.astype(float))


def round_half_up(z: float) -> int:
    """Nearest integer with halfway cases rounded toward +infinity.

    [0.5] = 1, [-0.5] = 0, [-1.5] = -1.  The comparison 2z < 2*floor(z)+1 is
    exact in floating point (doubling a double is exact, and Python compares
    float to int without rounding), so values just below a tie are never
    misrounded.
    """
    if not math.isfinite(z):
        raise ValueError(f"cannot round {z!r}")
    fl = math.floor(z)
    return fl if 2.0 * z < 2 * fl + 1 else fl + 1


def gram_schmidt(V: GeneratorMatrix) -> GramSchmidt:
    """Sequential orthogonalization of the basis columns (no normalization)."""
    m = V.matrix
    n = V.n
    ortho = np.array(m, dtype=float)
    mu = np.zeros((n, n))
    sq = np.zeros(n)
    for i in range(n):
        for j in range(i):
            mu[i, j] = float(ortho[:, j] @ m[:, i]) / sq[j]
            ortho[:, i] = ortho[:, i] - mu[i, j] * ortho[:, j]
        sq[i] = float(ortho[:, i] @ ortho[:, i])
        _require(sq[i] > 0, DegenerateBasisError, "basis is linearly dependent")
    return GramSchmidt(orthogonal=ortho, mu=mu, sq_norms=sq)


def qr_upper_triangular(V: GeneratorMatrix):
    """QR decomposition V = Q R with orthonormal Q and R_ii > 0.

    Returns (Q, R) where R is wrapped as a GeneratorMatrix: it generates the
    same lattice up to the isometry Q.
    """
    Q, R = np.linalg.qr(V.matrix)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    R = R * signs[:, None]
    return Q, GeneratorMatrix(R)


def _norm_sq(v):
    return float(v @ v)


def gauss_reduce_2d(V: GeneratorMatrix):
    """Lagrange-Gauss reduction of a 2D basis.

    Returns (W, U) with W = V U, U integer and |det U| = 1, W.column(0) a
    shortest vector, and 0 <= 2 <w1, w2> <= ||w1||^2 after the final sign
    canonicalization.  The interchange/translation loop stops as soon as a
    step no longer strictly shortens the longer vector, so a strictly reduced
    basis is returned unchanged; at exact ties (equal norms, half-integer
    Gram ratio) float rounding picks one of the equivalent reduced outputs.
    """
    _require(V.n == 2, UnsupportedDimensionError, "2D reduction needs n = 2")
    v1 = V.column(0)
    v2 = V.column(1)
    U = np.eye(2, dtype=np.int64)
    for _ in range(10000):
        if _norm_sq(v1) > _norm_sq(v2):
            v1, v2 = v2, v1
            U = U[:, ::-1].copy()
        mcoef = round_half_up(float(v1 @ v2) / _norm_sq(v1))
        if mcoef == 0:
            break
        w = v2 - mcoef * v1
        if _norm_sq(w) >= _norm_sq(v2):
            break
        v2 = w
        U[:, 1] -= mcoef * U[:, 0]
    else:  # pragma: no cover - loop always terminates by norm descent
        raise RuntimeError("reduction did not terminate")
    if float(v1 @ v2) < 0:
        v2 = -v2
        U[:, 1] = -U[:, 1]
    W = GeneratorMatrix(np.column_stack([v1, v2]))
    return W, U


def is_minkowski_reduced_2d(V: GeneratorMatrix, tol=1e-12) -> bool:
    """Check ||v1|| <= ||v2|| and 2|<v1,v2>| <= ||v1||^2 (tolerance on the
    squared-norm scale).  Equivalent to ||v1|| <= ||v2|| <= ||v1 +- v2||."""
    _require(V.n == 2, UnsupportedDimensionError, "2D check needs n = 2")
    v1 = V.column(0)
    v2 = V.column(1)
    a = _norm_sq(v1)
    b = _norm_sq(v2)
    ip = float(v1 @ v2)
    return a <= b + tol and 2 * abs(ip) <= a + tol


@dataclass(frozen=True)
class ReducedBasis2D:
    """Canonical form {(1,0), (a,b)} of a reduced 2D basis, up to isometry
    and uniform scale: 0 <= a <= 1/2, b >= sqrt(3)/2, a^2 + b^2 >= 1."""

    a: float
    b: float

    def __post_init__(self):
        _require(0.0 <= self.a <= 0.5, ValueError, f"a out of range: {self.a}")
        _require(self.b >= math.sqrt(3) / 2 - 1e-12, ValueError,
                 f"b out of range: {self.b}")
        _require(self.a ** 2 + self.b ** 2 >= 1 - 1e-12, ValueError,
                 f"(a,b) inside the unit circle: ({self.a}, {self.b})")

    def matrix(self) -> GeneratorMatrix:
        return GeneratorMatrix(np.array([[1.0, self.a], [0.0, self.b]]))


def canonicalize_2d(V: GeneratorMatrix):
    """Reduce a 2D basis and normalize it to the canonical {(1,0),(a,b)} form.

    Returns (ReducedBasis2D, scale, isometry): V @ U = isometry @ (scale * [[1,a],[0,b]])
    for the unimodular U produced by reduction.
    """
    W, _ = gauss_reduce_2d(V)
    Q, R = W.qr()
    r = R.matrix
    scale = float(r[0, 0])
    a = float(r[0, 1]) / scale
    b = float(r[1, 1]) / scale
    if -1e-9 <= a < 0.0:
        a = 0.0
    if 0.5 < a <= 0.5 + 1e-9:
        a = 0.5
    return ReducedBasis2D(a=a, b=b), scale, Q


def _round_half_up_array(z):
    fl = np.floor(z)
    return (fl + (2.0 * z >= 2.0 * fl + 1.0)).astype(np.int64)


def _cvp_enumerate(V, X, centers, radii, best_d, best_u):
    """Enumerate integer offsets within per-coordinate `radii` around `centers`
    in lexicographic order, keeping the first strict minimizer per row."""
    n = V.n
    M = V.matrix
    ranges = [np.arange(-int(r), int(r) + 1) for r in radii]
    mesh = np.meshgrid(*ranges, indexing="ij")
    offsets = np.stack([g.ravel() for g in mesh], axis=1)
    for off in offsets:
        u = centers + off
        D = X - u.astype(float) @ M.T
        d = np.einsum("ij,ij->i", D, D)
        better = d < best_d
        best_d[better] = d[better]
        best_u[better] = u[better]
    return best_d, best_u


def cvp_bruteforce_batch(V: GeneratorMatrix, X):
    """Exact closest-vector solve for each row of X (n <= 6).

    Enumerates a box of integer coefficient vectors around the rounded real
    solve, sized from the rounding residual; a dual-norm certificate then
    guarantees the minimizer was inside, re-enumerating a larger box in the
    rare case it is not.  Ties go to the lexicographically smallest
    coefficient vector.
    """
    _require(V.n <= MAX_CVP_DIM, UnsupportedDimensionError,
             f"exhaustive CVP supports n <= {MAX_CVP_DIM}")
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    _require(X.shape[1] == V.n, ValueError, "target dimension mismatch")
    _require(np.all(np.isfinite(X)), ValueError, "target must be finite")
    n = V.n
    C = X @ V.inverse().T
    C0 = _round_half_up_array(C)
    R0 = X - C0.astype(float) @ V.matrix.T
    res = np.sqrt(np.einsum("ij,ij->i", R0, R0))
    h_min = float(np.sqrt(np.min(V.gram().sq_norms)))
    K = np.ceil(res / h_min).astype(np.int64) + 1

    best_d = np.full(len(X), np.inf)
    best_u = np.zeros((len(X), n), dtype=np.int64)
    for k in np.unique(K):
        mask = K == k
        d, u = _cvp_enumerate(V, X[mask], C0[mask], [int(k)] * n,
                              best_d[mask], best_u[mask])
        best_d[mask] = d
        best_u[mask] = u

    # Certificate: any u with ||x - Vu|| <= d* satisfies
    # |u_i - c_i| <= d* ||row_i(V^-1)|| , so if that box fits inside the
    # enumerated one the answer is provably optimal.
    row_norms = np.linalg.norm(V.inverse(), axis=1)
    dist = np.sqrt(best_d)
    need = np.ceil(dist[:, None] * row_norms[None, :] + 0.5 + 1e-9).astype(np.int64)
    short = np.any(need > K[:, None], axis=1)
    for idx in np.nonzero(short)[0]:
        radii = np.maximum(need[idx], K[idx])
        d, u = _cvp_enumerate(V, X[idx:idx + 1], C0[idx:idx + 1], list(radii),
                              best_d[idx:idx + 1], best_u[idx:idx + 1])
        best_d[idx:idx + 1] = d
        best_u[idx:idx + 1] = u

    if single:
        return best_u[0]
    return best_u


def cvp_bruteforce(V: GeneratorMatrix, x) -> LatticeVector:
    """Closest lattice point to x by exhaustive search (exact; n <= 6)."""
    u = cvp_bruteforce_batch(V, x)
    return LatticeVector.from_coeffs(V, u)
