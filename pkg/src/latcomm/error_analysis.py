"""Error probability of nearest-plane rounding on 2D lattices.

For a canonical reduced basis {(1,0),(a,b)} the probability that the
nearest-plane point differs from the true closest point, for a target
uniform in the origin rounding cell, has the closed form

    F(a, b) = (a - a^2) / (4 b^2),

which ranges over [0, 1/12]: zero exactly for orthogonal bases and maximal
at the hexagonal point (1/2, sqrt(3)/2).  This module computes that formula,
its polar form, the exact cell-overlap area for arbitrary 2D bases, and a
Monte Carlo estimate driven by the exhaustive CVP oracle.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lattice import (
    GeneratorMatrix,
    ReducedBasis2D,
    UnsupportedDimensionError,
    cvp_bruteforce_batch,
    gauss_reduce_2d,
    is_minkowski_reduced_2d,
)

__all__ = [
    "ReducedBasis2D",
    "VoronoiPolygon2D",
    "PeEstimate",
    "third_relevant_vector",
    "voronoi_vertices_reduced",
    "voronoi_polygon_general",
    "analytic_pe",
    "analytic_pe_polar",
    "exact_pe_area",
    "monte_carlo_pe",
    "level_curve_points",
    "PE_CSV_HEADER",
    "format_csv_value",
    "pe_csv_line",
]

PE_CSV_HEADER = "a,b,pe_analytic,pe_exact,pe_mc,mc_stderr"

_CLIP_TOL = 1e-10


@dataclass(frozen=True)
class VoronoiPolygon2D:
    """Convex, centrally symmetric Voronoi cell of the origin.

    vertices: (k, 2) array in counterclockwise order, k in {4, 6};
    relevant_vectors: (m, 2) array, one representative per +- pair of the
    lattice vectors whose bisectors support the cell edges (m in {2, 3}).
    """

    vertices: np.ndarray
    relevant_vectors: np.ndarray

    @property
    def area(self) -> float:
        return _polygon_area(self.vertices)


@dataclass(frozen=True)
class PeEstimate:
    """Monte Carlo estimate with its binomial standard error."""

    estimate: float
    std_error: float
    n_samples: int
    seed: int


def _polygon_area(vertices) -> float:
    """Shoelace area; positive for counterclockwise orientation."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _clip_halfplane(poly, normal, offset, tol):
    """Keep the part of a convex polygon with <x, normal> <= offset."""
    if len(poly) == 0:
        return poly
    d = poly @ normal - offset
    inside = d <= tol
    out = []
    k = len(poly)
    for i in range(k):
        j = (i + 1) % k
        if inside[i]:
            out.append(poly[i])
            if not inside[j]:
                t = d[i] / (d[i] - d[j])
                out.append(poly[i] + t * (poly[j] - poly[i]))
        elif inside[j]:
            t = d[i] / (d[i] - d[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.zeros((0, 2))


def _clip_convex(subject, clip):
    """Intersection of two convex CCW polygons (Sutherland-Hodgman)."""
    scale = max(1.0, float(np.max(np.abs(clip))))
    poly = np.asarray(subject, dtype=float)
    k = len(clip)
    for i in range(k):
        p, q = clip[i], clip[(i + 1) % k]
        edge = q - p
        normal = np.array([edge[1], -edge[0]])  # outward for CCW interior
        poly = _clip_halfplane(poly, normal, float(normal @ p),
                               _CLIP_TOL * scale)
        if len(poly) == 0:
            break
    return poly


def _dedupe_ring(vertices, tol):
    out = []
    for v in vertices:
        if not out or np.linalg.norm(v - out[-1]) > tol:
            out.append(v)
    if len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= tol:
        out.pop()
    return np.array(out)


def third_relevant_vector(a: float, b: float) -> np.ndarray:
    """Third +- pair of Voronoi-relevant vectors of the lattice {(1,0),(a,b)}.

    The first two pairs are the basis vectors themselves; the third is
    (a-1, b) when <v1, v2> >= 0 and (a+1, b) otherwise.  Requires the basis
    to be reduced (so the cell is a hexagon, degenerating for a = 0).
    """
    if b <= 0:
        raise ValueError("b must be positive")
    V = GeneratorMatrix(np.array([[1.0, a], [0.0, b]]))
    if not is_minkowski_reduced_2d(V):
        raise ValueError(f"basis {{(1,0),({a},{b})}} is not reduced")
    if a >= 0:
        return np.array([a - 1.0, b])
    return np.array([a + 1.0, b])


def _bisector_intersection(w1, w2):
    A = np.vstack([w1, w2])
    rhs = np.array([float(w1 @ w1) / 2.0, float(w2 @ w2) / 2.0])
    return np.linalg.solve(A, rhs)


def voronoi_vertices_reduced(a: float, b: float) -> VoronoiPolygon2D:
    """Voronoi cell of the origin for a canonical reduced basis {(1,0),(a,b)}.

    Vertices are computed as intersections of perpendicular bisectors of the
    relevant vectors, never from a tabulated formula.  For a = 0 the cell is
    the rectangle [-1/2,1/2] x [-b/2,b/2].
    """
    rb = ReducedBasis2D(a, b)  # validates the domain
    a, b = rb.a, rb.b
    w1 = np.array([1.0, 0.0])
    w2 = np.array([a, b])
    if a <= 1e-12:
        vertices = np.array([
            [0.5, b / 2.0], [-0.5, b / 2.0], [-0.5, -b / 2.0], [0.5, -b / 2.0]])
        relevant = np.array([w1, w2])
        return VoronoiPolygon2D(vertices=vertices, relevant_vectors=relevant)
    w3 = third_relevant_vector(a, b)
    upper = [
        _bisector_intersection(w1, w2),
        _bisector_intersection(w2, w3),
        _bisector_intersection(w3, -w1),
    ]
    vertices = np.array(upper + [-v for v in upper])
    if _polygon_area(vertices) < 0:  # pragma: no cover - construction is CCW
        vertices = vertices[::-1]
    return VoronoiPolygon2D(vertices=vertices,
                            relevant_vectors=np.array([w1, w2, w3]))


def voronoi_polygon_general(V: GeneratorMatrix) -> VoronoiPolygon2D:
    """Voronoi cell of the origin for an arbitrary 2D basis, in the original
    coordinates.

    Reduces the basis to bound the search, enumerates lattice vectors w with
    ||w|| <= 2 ||w2||, and clips a bounding square by each half-plane
    <x, w> <= ||w||^2 / 2.  Edges of the final polygon identify the relevant
    vectors.
    """
    if V.n != 2:
        raise UnsupportedDimensionError("Voronoi construction needs n = 2")
    W, _ = gauss_reduce_2d(V)
    w1 = W.column(0)
    w2 = W.column(1)
    bound = 2.0 * float(np.linalg.norm(w2))
    h2 = abs(W.det) / float(np.linalg.norm(w1))
    jmax = int(math.ceil(bound / h2)) + 1
    imax = int(math.ceil((bound + jmax * float(np.linalg.norm(w2)))
                         / float(np.linalg.norm(w1)))) + 1
    cands = []
    for i in range(-imax, imax + 1):
        for j in range(-jmax, jmax + 1):
            if i == 0 and j == 0:
                continue
            w = i * w1 + j * w2
            nw = float(np.linalg.norm(w))
            if nw <= bound + 1e-9:
                cands.append((nw, w))
    cands.sort(key=lambda t: t[0])

    scale = max(1.0, bound)
    big = 2.0 * bound
    poly = np.array([[big, big], [-big, big], [-big, -big], [big, -big]])
    for _, w in cands:
        poly = _clip_halfplane(poly, w, float(w @ w) / 2.0, _CLIP_TOL * scale)
    poly = _dedupe_ring(poly, 1e-9 * scale)
    if _polygon_area(poly) < 0:  # pragma: no cover - clipping keeps order
        poly = poly[::-1]

    relevant = []
    k = len(poly)
    for i in range(k):
        mid = (poly[i] + poly[(i + 1) % k]) / 2.0
        best = min(cands, key=lambda t: abs(float(mid @ t[1]) - t[0] ** 2 / 2.0))
        slack = abs(float(mid @ best[1]) - best[0] ** 2 / 2.0)
        if slack > 1e-7 * scale ** 2:  # pragma: no cover - defensive
            raise RuntimeError("polygon edge not supported by a bisector")
        w = best[1]
        if w[1] < -1e-12 * scale or (abs(w[1]) <= 1e-12 * scale and w[0] < 0):
            w = -w
        if not any(np.linalg.norm(w - r) <= 1e-9 * scale for r in relevant):
            relevant.append(w)
    return VoronoiPolygon2D(vertices=poly, relevant_vectors=np.array(relevant))


def analytic_pe(a: float, b: float) -> float:
    """Closed-form error probability F(a, b) = (a - a^2) / (4 b^2) for the
    canonical reduced basis {(1,0),(a,b)}."""
    rb = ReducedBasis2D(a, b)  # domain check
    return (rb.a - rb.a ** 2) / (4.0 * rb.b ** 2)


def analytic_pe_polar(theta: float, rho: float) -> float:
    """Polar form of the error probability: the second basis vector at angle
    theta (pi/3 <= theta <= 2pi/3) and length ratio rho >= 1."""
    if not (math.pi / 3 - 1e-12 <= theta <= 2 * math.pi / 3 + 1e-12):
        raise ValueError(f"theta out of range: {theta}")
    if rho < 1 - 1e-12:
        raise ValueError(f"rho out of range: {rho}")
    c = abs(math.cos(theta))
    if rho * c > 0.5 + 1e-9:
        raise ValueError("(theta, rho) does not describe a reduced basis")
    s2 = math.sin(theta) ** 2
    return (1.0 / (4.0 * rho)) * (c / s2) * (1.0 - rho * c)


def _babai_box_polygon(V: GeneratorMatrix):
    Q, R = V.qr()
    h1 = abs(float(R.matrix[0, 0])) / 2.0
    h2 = abs(float(R.matrix[1, 1])) / 2.0
    corners = np.array([[h1, h2], [-h1, h2], [-h1, -h2], [h1, -h2]])
    box = corners @ Q.T
    if _polygon_area(box) < 0:  # Q may be a reflection
        box = box[::-1]
    return box


def exact_pe_area(V: GeneratorMatrix) -> float:
    """Exact rounding-error probability of a 2D basis as an area ratio.

    Intersects the origin rounding box (axis-aligned in the QR frame) with
    the origin Voronoi cell; the error probability is the fraction of the
    box outside the cell.
    """
    if V.n != 2:
        raise UnsupportedDimensionError("area computation needs n = 2")
    box = _babai_box_polygon(V)
    vor = voronoi_polygon_general(V)
    inter = _clip_convex(box, vor.vertices)
    area = _polygon_area(inter) if len(inter) >= 3 else 0.0
    pe = 1.0 - area / abs(V.det)
    return min(1.0, max(0.0, pe))


_MC_CHUNK = 1 << 16


def _mc_chunk_errors(V, half, Q, seed, chunk_index, count):
    rng = np.random.Generator(np.random.Philox(key=seed).jumped(chunk_index))
    u = rng.uniform(-1.0, 1.0, size=(count, V.n)) * half
    coeffs = cvp_bruteforce_batch(V, u @ Q.T)
    return int(np.any(coeffs != 0, axis=1).sum())


def monte_carlo_pe(V: GeneratorMatrix, n_samples: int, seed: int = 0,
                   workers: int = 1) -> PeEstimate:
    """Estimate the rounding-error probability by sampling the origin box.

    Each sample is drawn uniformly in the origin rounding cell and checked
    against the exhaustive CVP oracle.  Sampling uses counter-based
    substreams per fixed-size chunk, so the result depends only on
    (seed, n_samples), regardless of the worker count.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    Q, R = V.qr()
    half = np.abs(np.diag(R.matrix)) / 2.0
    chunks = []
    start = 0
    idx = 0
    while start < n_samples:
        count = min(_MC_CHUNK, n_samples - start)
        chunks.append((idx, count))
        start += count
        idx += 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda c: _mc_chunk_errors(V, half, Q, seed, c[0], c[1]),
                chunks))
    else:
        results = [_mc_chunk_errors(V, half, Q, seed, i, c) for i, c in chunks]
    errors = sum(results)
    est = errors / n_samples
    se = math.sqrt(est * (1.0 - est) / n_samples)
    return PeEstimate(estimate=est, std_error=se, n_samples=n_samples,
                      seed=seed)


def level_curve_points(k: float, a_grid_count: int = 64):
    """Points (a, b) of the level set F(a, b) = k inside the admissible
    region, for 0 < k <= 1/12: b = sqrt((a - a^2) / (4k)) over a uniform
    a-grid.  Along each curve (a - 1/2)^2 + 4 k b^2 = 1/4."""
    if not (0.0 < k <= 1.0 / 12.0 + 1e-15):
        raise ValueError(f"k out of range: {k}")
    if a_grid_count < 1:
        raise ValueError("a_grid_count must be positive")
    disc = max(0.0, 1.0 - 12.0 * k)
    a_lo = max((1.0 - math.sqrt(disc)) / 2.0, 4.0 * k / (1.0 - 4.0 * k))
    a_lo = min(max(a_lo, 0.0), 0.5)
    points = []
    for a in np.linspace(a_lo, 0.5, a_grid_count):
        a = min(max(float(a), 0.0), 0.5)
        b = math.sqrt((a - a * a) / (4.0 * k))
        try:
            ReducedBasis2D(a, b)
        except ValueError:
            continue
        if points and abs(points[-1][0] - a) <= 1e-9 \
                and abs(points[-1][1] - b) <= 1e-9:
            continue
        points.append((a, b))
    return points


def format_csv_value(x) -> str:
    """12-significant-digit rendering; None becomes an empty field."""
    if x is None:
        return ""
    return f"{float(x):.12g}"


def pe_csv_line(a, b, pe_analytic=None, pe_exact=None, pe_mc=None,
                mc_stderr=None) -> str:
    return ",".join(format_csv_value(v)
                    for v in (a, b, pe_analytic, pe_exact, pe_mc, mc_stderr))
