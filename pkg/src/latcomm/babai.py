"""Nearest-plane rounding of a target to a lattice, and its partition cells.

The recursion walks basis levels from last to first, rounding the coefficient
of the target along each successive orthogonal direction.  The induced
partition of space is a tiling by identical boxes, axis-aligned in the QR
frame of the basis, with side lengths given by the R diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    GeneratorMatrix,
    LatticeVector,
    cvp_bruteforce,
    round_half_up,
)

# Nearest integer, ties toward +infinity: the rounding used everywhere here.
round_nearest = round_half_up


@dataclass(frozen=True)
class NearestPlaneResult:
    """coeffs / point: the chosen lattice vector; residuals[i] is the real
    coefficient at level i immediately before it was rounded."""

    coeffs: np.ndarray
    point: np.ndarray
    residuals: np.ndarray


def _nearest_plane_upper(matrix, x):
    """Rounding recursion specialized to an upper-triangular generator.

    Shared verbatim with the interactive protocol simulation so that both
    compute bit-identical coefficients.
    """
    n = matrix.shape[0]
    b = np.zeros(n, dtype=np.int64)
    residuals = np.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = float(matrix[i, i + 1:] @ b[i + 1:].astype(float))
        r = (float(x[i]) - acc) / float(matrix[i, i])
        residuals[i] = r
        b[i] = round_nearest(r)
    return b, residuals


def nearest_plane(V: GeneratorMatrix, x, method="auto") -> NearestPlaneResult:
    """Round x to a nearby lattice point, one basis level at a time.

    method: "auto" uses the direct recursion when V is upper triangular and
    the orthogonalized recursion otherwise; "triangular" / "gram_schmidt"
    force a path (the former requires an upper-triangular V).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (V.n,):
        raise ValueError("target dimension mismatch")
    if not np.all(np.isfinite(x)):
        raise ValueError("target must be finite")
    if method not in ("auto", "triangular", "gram_schmidt"):
        raise ValueError(f"unknown method {method!r}")
    if method == "triangular" and not V.is_upper_triangular():
        raise ValueError("triangular method needs an upper-triangular matrix")
    use_triangular = method == "triangular" or (
        method == "auto" and V.is_upper_triangular())
    if use_triangular:
        b, residuals = _nearest_plane_upper(V.matrix, x)
    else:
        gs = V.gram()
        n = V.n
        # t holds the coordinates of the running target in the orthogonal
        # frame; projecting onto the lower span just drops coordinates.
        t = (gs.orthogonal.T @ x) / gs.sq_norms
        b = np.zeros(n, dtype=np.int64)
        residuals = np.zeros(n)
        for i in range(n - 1, -1, -1):
            residuals[i] = t[i]
            b[i] = round_nearest(float(t[i]))
            t[:i] -= b[i] * gs.mu[i, :i]
    return NearestPlaneResult(
        coeffs=b, point=V.matrix @ b.astype(float), residuals=residuals)


@dataclass(frozen=True)
class BabaiCell:
    """Axis-aligned box (in the `frame` coordinates) of points that round to
    `center` under the nearest-plane recursion; half-open on the upper side."""

    center: LatticeVector
    half_widths: np.ndarray
    frame: np.ndarray

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * self.half_widths))

    def contains(self, x, tol=0.0) -> bool:
        y = self.frame.T @ (np.asarray(x, dtype=float) - self.center.point)
        return bool(np.all(y >= -self.half_widths - tol)
                    and np.all(y < self.half_widths + tol))


def babai_cell(V: GeneratorMatrix, lattice_point) -> BabaiCell:
    """Partition cell of a lattice point: its translate of the origin box."""
    if isinstance(lattice_point, LatticeVector):
        lp = lattice_point
    else:
        lp = LatticeVector.from_coeffs(V, lattice_point)
    Q, R = V.qr()
    half = np.abs(np.diag(R.matrix)) / 2.0
    return BabaiCell(center=lp, half_widths=half, frame=Q)


def np_matches_cvp(V: GeneratorMatrix, x, tol=1e-9) -> bool:
    """True iff nearest-plane rounding finds an exact closest point for x."""
    a = nearest_plane(V, x).point
    b = cvp_bruteforce(V, x).point
    return bool(np.linalg.norm(a - b) <= tol)
