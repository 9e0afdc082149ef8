"""Discrete Gaussian free field on a rectangular grid.

Vertices are indexed (j, i) with row j = 0 the bottom edge (the image of the
real line) and column i; the outer ring is the boundary.  The zero-boundary
field has covariance SCALAR * (-Delta)^{-1} for the 5-point Laplacian with
diagonal 4, so that it behaves like -log|z - w| at separated points.
Boundary data come from a boundary function read along the bottom edge, with
its limits at -inf and +inf on the left and right halves of the other three
sides; the level line then runs from the bottom origin to the top middle.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import special

from .boundary import LAMBDA, BoundaryFunction, PiecewiseConstant

SCALAR = 2.0 * math.pi
MAX_DENSE = 64 * 64
# boundary values are scaled by this factor before extraction; fitted once so
# that welded driving functions of chordal interfaces grow like 4t
CALIBRATION = 1.0


class DgffError(ValueError):
    pass


def chordal_function(scale: float = 1.0) -> PiecewiseConstant:
    """-scale*LAMBDA left of the origin, +scale*LAMBDA from it on."""
    return PiecewiseConstant((0.0,), (-scale * LAMBDA, scale * LAMBDA))


@dataclass
class Lattice:
    nx: int
    ny: int
    spacing: float | None = None
    boundary: BoundaryFunction | None = None

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise DgffError("need nx, ny >= 3")
        if self.spacing is None:
            self.spacing = 4.0 / (self.nx - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def n_interior(self) -> int:
        return (self.nx - 2) * (self.ny - 2)

    def x_bottom(self) -> np.ndarray:
        """Real coordinate of each bottom column; the origin sits midway."""
        return (np.arange(self.nx) - (self.nx - 1) / 2.0) * self.spacing

    def plane(self, jj, ii) -> np.ndarray:
        """Lattice position (row, column), possibly fractional, to the plane."""
        return ((np.asarray(ii) - (self.nx - 1) / 2.0) + 1j * np.asarray(jj)) * self.spacing

    def boundary_values(self, F: BoundaryFunction | None = None, calibration: float = 1.0) -> np.ndarray:
        """Full grid with boundary data on the ring and zeros inside."""
        F = self.boundary if F is None else F
        out = np.zeros(self.shape)
        if F is None:
            return out
        x = self.x_bottom()
        left = x < 0
        out[0, :] = F(x)
        out[1:, 0] = F.minus_inf
        out[1:, -1] = F.plus_inf
        out[-1, :] = np.where(left, F.minus_inf, F.plus_inf)
        return calibration * out


def laplacian(nx: int, ny: int) -> sp.csr_matrix:
    """-Delta on the interior of an nx-by-ny grid (Dirichlet), row-major."""
    mx, my = nx - 2, ny - 2
    Tx = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(mx, mx))
    Ty = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(my, my))
    return (sp.kron(sp.identity(my), Tx) + sp.kron(Ty, sp.identity(mx))).tocsr()


def green_matrix(lat: Lattice) -> np.ndarray:
    """Covariance of the zero-boundary field on the interior, row-major."""
    if lat.n_interior > MAX_DENSE:
        raise DgffError("interior too large for a dense Green matrix")
    A = laplacian(lat.nx, lat.ny).toarray()
    G = SCALAR * sla.inv(A)
    return 0.5 * (G + G.T)


def harmonic_extension(lat: Lattice, values: np.ndarray) -> np.ndarray:
    """Discrete-harmonic function with the ring values of `values`."""
    ny, nx = lat.shape
    b = np.zeros((ny - 2, nx - 2))
    b[0, :] += values[0, 1:-1]
    b[-1, :] += values[-1, 1:-1]
    b[:, 0] += values[1:-1, 0]
    b[:, -1] += values[1:-1, -1]
    out = values.copy()
    if np.any(b):
        out[1:-1, 1:-1] = spla.spsolve(laplacian(nx, ny).tocsc(), b.ravel()).reshape(ny - 2, nx - 2)
    else:
        out[1:-1, 1:-1] = 0.0
    return out


class Sampler:
    """Exact sampler for the zero-boundary field: banded Cholesky factor U of
    the precision (-Delta)/SCALAR, then x = U^{-1} z."""

    def __init__(self, lat: Lattice):
        self.lat = lat
        mx = lat.nx - 2
        A = laplacian(lat.nx, lat.ny) / SCALAR
        n = A.shape[0]
        band = np.zeros((mx + 1, n))
        for k in range(mx + 1):
            d = A.diagonal(k)
            band[mx - k, k:] = d
        self.u = mx
        self.U = sla.cholesky_banded(band, lower=False)

    def draw(self, z: np.ndarray) -> np.ndarray:
        """Interior samples (rows of the result) from standard normals with
        one column per sample."""
        return sla.solve_banded((0, self.u), self.U, z).T


@dataclass
class LatticeField:
    lattice: Lattice
    mean: np.ndarray
    fluct: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.mean + self.fluct


def _embed(lat: Lattice, interior: np.ndarray) -> np.ndarray:
    out = np.zeros(lat.shape)
    out[1:-1, 1:-1] = interior.reshape(lat.ny - 2, lat.nx - 2)
    return out


def sample_interiors(lat: Lattice, n: int, seed: int, sampler: Sampler | None = None) -> np.ndarray:
    """n zero-boundary samples, one interior vector per row."""
    sampler = Sampler(lat) if sampler is None else sampler
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((lat.n_interior, n))
    return sampler.draw(z)


def sample(lat: Lattice, seed: int, sampler: Sampler | None = None) -> LatticeField:
    fl = _embed(lat, sample_interiors(lat, 1, seed, sampler)[0])
    mean = harmonic_extension(lat, lat.boundary_values())
    return LatticeField(lat, mean, fl)


# ---------------------------------------------------------------- checks


@dataclass
class CovarianceReport:
    max_z: float
    max_z_probe: float
    exceed: int
    expected_exceed: float
    bonferroni: float
    n: int
    passed: bool


def covariance_check(X: np.ndarray, G: np.ndarray, probes=None, k: float = 4.0, alpha: float = 0.01) -> CovarianceReport:
    """Compare the mean-zero empirical covariance of the rows of X with G.

    Every entry gets a z-score with the exact standard error
    sqrt((G_ii G_jj + G_ij^2) / n).  The probe entries (index pairs) must sit
    within k standard errors; the full matrix is held to the Bonferroni
    threshold at level alpha, since at k = 4 a large matrix of exact samples
    exceeds somewhere with probability close to one."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    S = X.T @ X / n
    dg = np.diag(G)
    se = np.sqrt((np.outer(dg, dg) + G**2) / n)
    Z = np.abs(S - G) / se
    iu = np.triu_indices(d)
    zu = Z[iu]
    m = zu.size
    from scipy.stats import norm

    bonf = float(norm.isf(alpha / (2 * m)))
    if probes is None:
        probes = default_probes(d)
    pi, pj = np.asarray(probes).T
    zp = float(Z[pi, pj].max())
    ok = zp <= k and float(zu.max()) <= bonf
    return CovarianceReport(float(zu.max()), zp, int(np.sum(zu > k)), float(m * 2 * norm.sf(k)), bonf, n, bool(ok))


def default_probes(d: int, count: int = 64) -> np.ndarray:
    """Fixed probe entries: diagonal and row entries of evenly spread indices."""
    idx = np.unique(np.linspace(0, d - 1, count // 2).astype(int))
    centre = d // 2
    return np.array([(i, i) for i in idx] + [(centre, i) for i in idx])


def sub_box(lat: Lattice, j0: int, j1: int, i0: int, i1: int) -> np.ndarray:
    """Boolean grid mask of the sub-box interior rows j0..j1-1, columns
    i0..i1-1; its ring must lie inside the grid."""
    if j0 < 1 or i0 < 1 or j1 > lat.ny - 1 or i1 > lat.nx - 1 or j1 - j0 < 1 or i1 - i0 < 1:
        raise DgffError("sub-box must lie in the interior")
    m = np.zeros(lat.shape, bool)
    m[j0:j1, i0:i1] = True
    return m


@dataclass
class MarkovReport:
    covariance: CovarianceReport
    max_cross_z: float
    passed: bool


def markov_check(lat: Lattice, X: np.ndarray, box: tuple[int, int, int, int], k: float = 4.0, subtract: bool = True) -> MarkovReport:
    """For each zero-boundary sample (rows of X), subtract inside the sub-box
    the harmonic extension of the field on the sub-box ring.  The residual
    must have the sub-box Green covariance and be uncorrelated with the
    field on the ring.  subtract=False skips the extension (negative
    control)."""
    j0, j1, i0, i1 = box
    sub_box(lat, j0, j1, i0, i1)
    sl = Lattice(i1 - i0 + 2, j1 - j0 + 2)
    ny, nx = lat.shape
    n = X.shape[0]
    full = np.zeros((n, ny, nx))
    full[:, 1:-1, 1:-1] = X.reshape(n, ny - 2, nx - 2)
    blk = full[:, j0 - 1 : j1 + 1, i0 - 1 : i1 + 1]
    ring = blk.copy()
    ring[:, 1:-1, 1:-1] = 0.0
    if subtract:
        A = laplacian(sl.nx, sl.ny).tocsc()
        b = np.zeros((n, sl.ny - 2, sl.nx - 2))
        b[:, 0, :] += ring[:, 0, 1:-1]
        b[:, -1, :] += ring[:, -1, 1:-1]
        b[:, :, 0] += ring[:, 1:-1, 0]
        b[:, :, -1] += ring[:, 1:-1, -1]
        h = spla.splu(A).solve(b.reshape(n, -1).T).T
    else:
        h = 0.0
    R = blk[:, 1:-1, 1:-1].reshape(n, -1) - h
    d = R.shape[1]
    # small boxes probe every entry; large ones fall back to the fixed probes
    probes = np.array([(i, j) for i in range(d) for j in range(i, d)]) if d <= 20 else None
    cov = covariance_check(R, green_matrix(sl), probes=probes, k=k)
    # cross-correlation with the ring values
    ringv = np.concatenate([blk[:, 0, :], blk[:, -1, :], blk[:, 1:-1, 0], blk[:, 1:-1, -1]], axis=1)
    ringv = ringv[:, np.std(ringv, axis=0) > 0]
    if ringv.size:
        C = R.T @ ringv / n
        se = np.sqrt(np.outer(np.mean(R**2, 0), np.mean(ringv**2, 0)) / n)
        cz = float(np.max(np.abs(C) / se))
    else:
        cz = 0.0
    ok = cov.passed and cz <= k
    return MarkovReport(cov, cz, bool(ok))


# ---------------------------------------------------------------- interfaces


@dataclass
class Interface:
    """Dual path separating positive from negative vertices, started at the
    bottom edge across the origin.  `crossed` lists the primal edges as
    ((jL, iL), (jR, iR)) with the negative vertex first; `right` marks the
    vertices on its right side."""

    lattice: Lattice
    crossed: list
    right: np.ndarray = field(repr=False)
    closed: bool = True

    @property
    def path(self) -> np.ndarray:
        """Dual points (edge midpoints) in lattice coordinates i + 1j*j."""
        return np.array([0.5 * ((a[1] + b[1]) + 1j * (a[0] + b[0])) for a, b in self.crossed])

    @property
    def curve(self) -> np.ndarray:
        """The dual path in plane coordinates (bottom edge on the real line)."""
        p = self.path
        return self.lattice.plane(p.imag, p.real)

    @property
    def left(self) -> np.ndarray:
        return ~self.right

    def is_simple(self) -> bool:
        p = self.path
        return len(np.unique(np.round(p * 2).astype(complex))) == len(p)

    def boundary_touches(self) -> int:
        """Crossed edges with both ends on the ring (start and end included)."""
        ny, nx = self.lattice.shape

        def ring(v):
            return v[0] in (0, ny - 1) or v[1] in (0, nx - 1)

        return sum(1 for a, b in self.crossed if ring(a) and ring(b))


def _start_edge(lat: Lattice):
    x = lat.x_bottom()
    iL = int(np.nonzero(x < 0)[0][-1])
    return (0, iL), (0, iL + 1)


def extract_interface(f: LatticeField, F: BoundaryFunction | None = None, calibration: float = CALIBRATION) -> Interface:
    """Explore the interface of field + boundary data from the bottom origin.

    With (L, R) the current crossed edge (L negative, R positive) and the
    next face ahead, let A be the vertex ahead of L and B the one ahead of
    R: if A is positive turn left onto (L, A), else if B is positive go
    straight onto (A, B), else turn right onto (B, R).  A positive A at a
    saddle therefore always turns left.  Zero values count as positive.
    The walk stops when it crosses a ring edge or leaves the grid."""
    lat = f.lattice
    if F is None:
        H = f.values
    else:
        H = f.fluct + harmonic_extension(lat, lat.boundary_values(F, calibration))
    pos = H >= 0.0  # ties perturbed upwards
    ny, nx = lat.shape
    L, R = _start_edge(lat)
    if pos[L] or not pos[R]:
        raise DgffError("boundary data must be negative left of the origin and positive right of it")
    crossed = [(L, R)]
    seen = {(L, R)}
    closed = False
    for _ in range(4 * nx * ny):
        # direction of travel: R - L rotated counterclockwise
        dj, di = R[0] - L[0], R[1] - L[1]
        tj, ti = di, -dj  # rotate (row, col) so the walk heads with R on its right
        A = (L[0] + tj, L[1] + ti)
        B = (R[0] + tj, R[1] + ti)
        if not (0 <= A[0] < ny and 0 <= A[1] < nx and 0 <= B[0] < ny and 0 <= B[1] < nx):
            closed = True
            break
        if pos[A]:
            L, R = L, A
        elif pos[B]:
            L, R = A, B
        else:
            L, R = B, R
        if (L, R) in seen:
            break
        seen.add((L, R))
        crossed.append((L, R))
        if _on_ring(L, ny, nx) and _on_ring(R, ny, nx):
            closed = True
            break
    right = _flood(pos.shape, crossed, [b for _, b in crossed])
    return Interface(lat, crossed, right, closed)


def _on_ring(v, ny, nx) -> bool:
    return v[0] in (0, ny - 1) or v[1] in (0, nx - 1)


def _flood(shape, crossed, seeds) -> np.ndarray:
    """Vertices reachable from the seeds without using a crossed edge.

    Seeding with every positive endpoint of the path matters where the
    walk circles a pocket of positive sites: the pocket lies on the right
    of the path but is cut off from the rest of that side."""
    ny, nx = shape
    blocked = set()
    for a, b in crossed:
        blocked.add((a, b))
        blocked.add((b, a))
    seen = np.zeros(shape, bool)
    for v in seeds:
        seen[v] = True
    q = deque(seeds)
    while q:
        v = q.popleft()
        for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            w = (v[0] + dj, v[1] + di)
            if 0 <= w[0] < ny and 0 <= w[1] < nx and not seen[w] and (v, w) not in blocked:
                seen[w] = True
                q.append(w)
    return seen


def ordering_check(a: Interface, b: Interface) -> bool:
    """True iff a lies weakly left of b: a's right side contains b's."""
    if a.lattice.shape != b.lattice.shape:
        raise DgffError("interfaces live on different lattices")
    return bool(np.all(a.right[b.right]))


# ---------------------------------------------------------------- to the half-plane


def _sn(z: np.ndarray, m: float) -> np.ndarray:
    """Jacobi sn(z | m) for complex z via the addition formula."""
    x, y = np.real(z), np.imag(z)
    s, c, d, _ = special.ellipj(x, m)
    s1, c1, d1, _ = special.ellipj(y, 1.0 - m)
    den = c1**2 + m * s**2 * s1**2
    return (s * d1 + 1j * c * d * s1 * c1) / den


def _parameter_for_ratio(ratio: float) -> float:
    """m with K(1-m)/K(m) = ratio."""
    from scipy.optimize import brentq

    return brentq(lambda m: special.ellipk(1.0 - m) / special.ellipk(m) - ratio, 1e-12, 1 - 1e-12)


def to_half_plane(lat: Lattice, z: np.ndarray) -> np.ndarray:
    """Conformal map of the grid rectangle onto the upper half-plane sending
    the bottom origin to 0 and the top middle to infinity; the bottom edge
    goes onto [-1, 1]."""
    a = (lat.nx - 1) / 2.0 * lat.spacing
    b = (lat.ny - 1) * lat.spacing
    m = _parameter_for_ratio(b / a)
    K = special.ellipk(m)
    return _sn(np.asarray(z, dtype=complex) * K / a, m)


def driving_estimate(iface: Interface, t_max: float):
    """Driving function of the interface mapped to the half-plane, up to
    capacity time t_max (returns times and values)."""
    from .loewner import driving_from_curve

    w = to_half_plane(iface.lattice, iface.curve)
    w = np.concatenate([[0.0], w[1:]])
    w = np.where(w.imag < 0, w.real + 0j, w)
    t, W = driving_from_curve(w)
    keep = t <= t_max
    return t[keep], W[keep]
