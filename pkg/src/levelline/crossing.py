"""Quadrilateral crossings: conformal modulus, crossing detection and the
ball-hitting surrogate used to estimate crossing probabilities of thin
boundary-anchored quadrilaterals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from matplotlib.path import Path as MplPath
from scipy import stats
from scipy.spatial import Delaunay

from .boundary import LAMBDA, AdmissibilityMargin, MeasurePair, RadonMeasure, _cdf_left_array, _cdf_right_array


class CrossingError(ValueError):
    pass


@dataclass
class Quadrilateral:
    """Simple polygon (counterclockwise vertices) with four marked corner
    indices; arc k runs counterclockwise from corner k to corner k+1."""

    vertices: np.ndarray
    corners: tuple[int, int, int, int]

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=complex)
        c = tuple(int(i) for i in self.corners)
        n = len(self.vertices)
        if len(c) != 4 or len(set(c)) != 4 or any(not 0 <= i < n for i in c):
            raise CrossingError("need four distinct corner indices")
        # corners must appear in cyclic counterclockwise order
        shifted = [(i - c[0]) % n for i in c]
        if shifted != sorted(shifted):
            raise CrossingError("corners must be in counterclockwise order")
        v = self.vertices
        area = 0.5 * np.sum(v.real * np.roll(v.imag, -1) - np.roll(v.real, -1) * v.imag)
        if area <= 0:
            raise CrossingError("vertices must be counterclockwise")
        self.corners = c

    def edge_arcs(self) -> np.ndarray:
        """Arc label of every edge (edge j joins vertex j and j+1)."""
        n = len(self.vertices)
        lab = np.empty(n, dtype=np.int64)
        for k in range(4):
            i = self.corners[k]
            stop = self.corners[(k + 1) % 4]
            while i != stop:
                lab[i] = k
                i = (i + 1) % n
        return lab

    def rotated(self) -> "Quadrilateral":
        """Same domain with arcs relabelled (S1, S2, S3, S0)."""
        c = self.corners
        return Quadrilateral(self.vertices, (c[1], c[2], c[3], c[0]))

    def mapped(self, fn, refine: int = 1) -> "Quadrilateral":
        """Image under a conformal map, each edge subdivided `refine` times."""
        v = self.vertices
        nxt = np.roll(v, -1)
        s = np.arange(refine) / refine
        pts = (v[:, None] + (nxt - v)[:, None] * s).ravel()
        return Quadrilateral(fn(pts), tuple(refine * c for c in self.corners))

    def contains(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        path = MplPath(np.column_stack([self.vertices.real, self.vertices.imag]))
        return path.contains_points(np.column_stack([z.real, z.imag]))


def rectangle(L: float, H: float = 1.0, x0: float = 0.0, y0: float = 0.0) -> Quadrilateral:
    """[x0, x0+L] x [y0, y0+H] with S0 the left side and S2 the right side."""
    v = np.array([x0 + 1j * (y0 + H), x0 + 1j * y0, x0 + L + 1j * y0, x0 + L + 1j * (y0 + H)])
    return Quadrilateral(v, (0, 1, 2, 3))


def _boundary_samples(Q: Quadrilateral, h: float):
    v = Q.vertices
    n = len(v)
    lab = Q.edge_arcs()
    pts, arcs = [], []
    for j in range(n):
        a, b = v[j], v[(j + 1) % n]
        m = max(1, int(math.ceil(abs(b - a) / h)))
        s = np.arange(m) / m
        pts.append(a + (b - a) * s)
        arcs.append(np.full(m, lab[j]))
        # the corner that starts the edge also ends the previous arc
    pts = np.concatenate(pts)
    arcs = np.concatenate(arcs)
    corner_flags = np.zeros(len(pts), bool)
    # vertex j sits at the first sample of edge j
    starts = np.concatenate([[0], np.cumsum([max(1, int(math.ceil(abs(v[(j + 1) % n] - v[j]) / h))) for j in range(n)])[:-1]])
    prev_arc = np.roll(lab, 1)
    return pts, arcs, starts, prev_arc, corner_flags


def modulus(Q: Quadrilateral, mesh: int = 128) -> float:
    """Extremal length of curves joining S0 to S2 inside Q.

    Mixed problem u = 0 on S0, u = 1 on S2, zero flux on S1 and S3, solved
    with piecewise linear elements on a Delaunay mesh of spacing
    h = (bounding box size) / mesh; the modulus is 1 / Dirichlet energy."""
    v = Q.vertices
    size = max(np.ptp(v.real), np.ptp(v.imag))
    h = size / mesh
    bpts, barcs, starts, prev_arc, _ = _boundary_samples(Q, h)
    # interior lattice points kept away from the boundary
    xs = np.arange(v.real.min() + h / 2, v.real.max(), h)
    ys = np.arange(v.imag.min() + h / 2, v.imag.max(), h)
    X, Y = np.meshgrid(xs, ys)
    cand = (X + 1j * Y).ravel()
    cand = cand[Q.contains(cand)]
    if cand.size:
        d = _dist_to_polyline(cand, np.append(v, v[0]))
        cand = cand[d > 0.4 * h]
    pts = np.concatenate([bpts, cand])
    xy = np.column_stack([pts.real, pts.imag])
    tri = Delaunay(xy).simplices
    cen = pts[tri].mean(axis=1)
    tri = tri[Q.contains(cen)]
    K = _stiffness(xy, tri)
    nb = len(bpts)
    u = np.full(len(pts), np.nan)
    on0 = np.zeros(len(pts), bool)
    on2 = np.zeros(len(pts), bool)
    on0[:nb] = barcs == 0
    on2[:nb] = barcs == 2
    # corner samples belong to both adjacent arcs
    on0[starts[prev_arc == 0]] = True
    on2[starts[prev_arc == 2]] = True
    if not on0.any() or not on2.any():
        raise CrossingError("mesh too coarse to resolve S0 and S2")
    u[on0] = 0.0
    u[on2] = 1.0
    fixed = on0 | on2
    free = ~fixed
    Kff = K[free][:, free].tocsc()
    rhs = -K[free][:, fixed] @ u[fixed]
    u[free] = spla.spsolve(Kff, rhs)
    energy = float(u @ (K @ u))
    return 1.0 / energy


def _stiffness(xy: np.ndarray, tri: np.ndarray) -> sp.csr_matrix:
    p = xy[tri]  # (nt, 3, 2)
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * np.abs(e[:, 1, 0] * e[:, 2, 1] - e[:, 1, 1] * e[:, 2, 0])
    keep = area > 1e-14
    e, area, tri = e[keep], area[keep], tri[keep]
    loc = np.einsum("tik,tjk->tij", e, e) / (4.0 * area[:, None, None])
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = len(xy)
    return sp.coo_matrix((loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _dist_to_polyline(z: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Distance from each point in z to the polyline poly."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    a = poly[:-1]
    b = poly[1:]
    out = np.full(z.shape, np.inf)
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for i in range(0, len(z), chunk):
        zz = z[i : i + chunk, None]
        ab = b - a
        L2 = np.abs(ab) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.clip(((zz - a) * np.conj(ab)).real / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
        out[i : i + chunk] = np.abs(zz - (a + s * ab)).min(axis=1)
    return out


def distance_to_curve(curve: np.ndarray, point: complex) -> float:
    return float(_dist_to_polyline(np.array([point]), np.asarray(curve, dtype=complex))[0])


def detect_crossing(curve: np.ndarray, Q: Quadrilateral, tol: float = 1e-9) -> bool:
    """True if some piece of the polygonal curve runs inside Q from a point of
    S0 to a point of S2 (or back) without touching the boundary in between."""
    z = np.asarray(curve, dtype=complex)
    v = Q.vertices
    a = v
    b = np.roll(v, -1)
    lab = Q.edge_arcs()
    p, q = z[:-1, None], z[1:, None]
    r = q - p
    s = b - a
    den = (np.conj(r) * s).imag
    qp = a - p
    with np.errstate(divide="ignore", invalid="ignore"):
        tpar = (np.conj(qp) * s).imag / den
        upar = (np.conj(qp) * r).imag / den
    hit = (np.abs(den) > tol) & (tpar >= -tol) & (tpar <= 1 + tol) & (upar >= -tol) & (upar <= 1 + tol)
    seg, edge = np.nonzero(hit)
    if seg.size == 0:
        return False
    pos = seg + np.clip(tpar[seg, edge], 0.0, 1.0)
    arcs = lab[edge]
    order = np.argsort(pos, kind="stable")
    pos, arcs = pos[order], arcs[order]
    # inside test between consecutive boundary contacts
    mid = 0.5 * (pos[:-1] + pos[1:])
    k = np.clip(np.floor(mid).astype(int), 0, len(z) - 2)
    frac = mid - k
    mpts = z[k] + frac * (z[k + 1] - z[k])
    inside = Q.contains(mpts) & (pos[1:] - pos[:-1] > tol)
    ends = {0, 2}
    for i in np.nonzero(inside)[0]:
        if {int(arcs[i]), int(arcs[i + 1])} == ends:
            return True
    return False


def nu_of_M(M: float) -> float:
    """Radius of the ball at 1 whose hitting bounds crossings of a
    boundary-anchored quadrilateral of modulus M."""
    d = math.exp(math.pi * M) / 16.0 - 1.0
    if d <= 0:
        raise CrossingError("modulus too small: need M > log(16)/pi")
    return 1.0 / d


def _partial_sums(m: RadonMeasure) -> np.ndarray:
    """Distribution function of m, read from the origin outward at every
    atom and every density break (both sides of each)."""
    sgn = 1.0 if m.side == "R" else -1.0
    pts = [x for x, _ in m.atoms] + [p.a for p in m.pieces] + [p.b for p in m.pieces]
    if not pts:
        return np.zeros(0)
    xs = np.unique(np.array(pts, float))
    xs = xs[np.argsort(sgn * xs)]
    if m.side == "R":
        return _cdf_right_array(m, xs)
    # (x, 0] just outside each point includes it; at the point it does not
    return np.concatenate([_cdf_left_array(m, xs), _cdf_left_array(m, xs - 1e-12)])


def partial_sum_condition(pair: MeasurePair, margin: AdmissibilityMargin, tol: float = 1e-12) -> bool:
    """Every partial sum of each measure, taken from the origin outward, lies
    in [-2 + c/LAMBDA, -1 + C/LAMBDA]."""
    lo = -2.0 + margin.c / LAMBDA - tol
    hi = -1.0 + margin.C / LAMBDA + tol
    for m in (pair.left, pair.right):
        s = _partial_sums(m)
        if s.size and (s.min() < lo or s.max() > hi):
            return False
    return True


def comparison_pair(margin: AdmissibilityMargin) -> MeasurePair:
    """Extremal force points at the origin: rhoL = -1 + C/LAMBDA at 0-,
    rhoR = -2 + c/LAMBDA at 0+."""
    mL = -1.0 + margin.C / LAMBDA
    mR = -2.0 + margin.c / LAMBDA
    left = RadonMeasure("L", ((0.0, mL),) if mL != 0 else ())
    right = RadonMeasure("R", ((0.0, mR),) if mR != 0 else ())
    return MeasurePair(left, right)


@dataclass
class HitEstimate:
    nu: float
    hits: int
    n: int

    @property
    def p(self) -> float:
        return self.hits / self.n

    @property
    def ci(self) -> tuple[float, float]:
        r = stats.binomtest(self.hits, self.n).proportion_ci(0.95, method="wilson")
        return float(r.low), float(r.high)


def distance_estimates(distances: np.ndarray, nus) -> list[HitEstimate]:
    """Hit frequencies of the closed balls B(1, nu) given, per path, the
    distance from 1 to the sampled curve."""
    d = np.asarray(distances, dtype=float)
    return [HitEstimate(float(nu), int(np.sum(d <= nu)), int(d.size)) for nu in nus]


def swallow_index(sim, x: float) -> float:
    """First grid index at which the right boundary point x has merged with
    the image of 0+ (inf if it never does)."""
    X = sim.tracker_images
    j = np.nonzero((sim.trackers == x) & (sim.tracker_side == 1))[0][0]
    v = np.nonzero((sim.trackers == 0.0) & (sim.tracker_side == 1))[0][0]
    gap = X[:, j] - X[:, v]
    k = np.nonzero(gap <= 1e-12 * np.maximum(1.0, np.abs(X[:, j])))[0]
    return float(k[0]) if k.size else math.inf


@dataclass
class SurrogatePath:
    """Per-path record: distance from 1 to the coarse curve and, for every
    radius, whether the boundary interval [1 - nu, 1 + nu] was touched."""

    distance: float
    interval_hit: np.ndarray

    def hits(self, nus) -> np.ndarray:
        return (self.distance <= np.asarray(nus)) | self.interval_hit


def surrogate_paths(
    margin: AdmissibilityMargin,
    nus,
    n_paths: int,
    seed: int,
    *,
    T: float = 10.0,
    dt: float = 2.5e-5,
    curve_T: float = 2.0,
    curve_dt: float = 1e-3,
    kappa: float = 4.0,
) -> list[SurrogatePath]:
    """Simulate the comparison process with trackers at 1 -+ nu.

    The interval [1 - nu, 1 + nu] is touched when 1 - nu is swallowed
    strictly before 1 + nu.  The curve is rebuilt from the driving function
    subsampled to curve_dt on [0, curve_T], which keeps the quadratic zipper
    cheap while the trackers see the fine path."""
    from .driver import SleConfig, simulate
    from .loewner import DrivingPath, extract_curve

    nus = tuple(float(v) for v in nus)
    mesh = tuple((x, 1) for nu in nus for x in (1.0 - nu, 1.0 + nu) if x > 0)
    cfg = SleConfig(kappa=kappa, pair=comparison_pair(margin), margin=margin, dt=dt, seed=seed)
    stride = max(1, int(round(curve_dt / dt)))
    n_curve = int(round(curve_T / (stride * dt)))
    out = []
    for i in range(n_paths):
        sim = simulate(cfg, T, index=i, mesh=mesh)
        if sim.events:
            raise CrossingError(f"threshold event in the comparison process (path {i})")
        hit = np.array([1.0 - nu <= 0 or swallow_index(sim, 1.0 - nu) < swallow_index(sim, 1.0 + nu) for nu in nus])
        W = sim.path.W[:: stride][: n_curve + 1]
        curve = extract_curve(DrivingPath(stride * dt, W, None)).z
        out.append(SurrogatePath(distance_to_curve(curve, 1.0), hit))
    return out


def ball_surrogate(margin: AdmissibilityMargin, nus, n_paths: int, seed: int, **kw) -> list[HitEstimate]:
    """Monte Carlo estimate of P(curve meets the closed ball B(1, nu)) for each
    nu, all radii read off the same paths."""
    paths = surrogate_paths(margin, nus, n_paths, seed, **kw)
    H = np.array([p.hits(nus) for p in paths]).reshape(len(paths), -1)
    return [HitEstimate(float(nu), int(H[:, q].sum()), len(paths)) for q, nu in enumerate(nus)]


def nonincreasing_within_ci(estimates: list[HitEstimate]) -> bool:
    """Estimates ordered by decreasing nu never rise beyond their confidence
    intervals (an increase counts only if the intervals separate)."""
    est = sorted(estimates, key=lambda e: -e.nu)
    return all(b.ci[0] <= a.ci[1] for a, b in zip(est, est[1:]))
