"""The coupling observable of a level line and its Brownian test.

For a marked point z with image g = g_t(z) and f = g - W, the harmonic
function with the transported boundary data is

    2 eta = - sum rhoL arg(g - VL) - arg(f) + (pi - arg(f)) + sum rhoR (pi - arg(g - VR))

with every argument in (0, pi).  In radius time s (the loss of log conformal
radius of z) eta is a standard Brownian motion, and its quadratic variation
matches the radius clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .boundary import LAMBDA, BoundaryFunction, General
from .driver import Simulation
from .loewner import RadiusClock


class ObservableError(ValueError):
    pass


class MeshRefinementError(ObservableError):
    pass


def _arg(z):
    return np.angle(z)


def eta_bv(g, W, VL=None, mL=None, VR=None, mR=None):
    """Closed form of eta for atomic measures.

    g, W: arrays (or scalars) over time; VL/VR: force point images with one
    column per point; mL/mR: the matching masses."""
    g = np.asarray(g, dtype=complex)
    f = g - np.asarray(W, dtype=float)
    two = math.pi - 2.0 * _arg(f)
    if VL is not None and np.size(mL):
        VL = np.asarray(VL, dtype=float).reshape(g.shape + (-1,))
        two = two - np.sum(np.asarray(mL) * _arg(g[..., None] - VL), axis=-1)
    if VR is not None and np.size(mR):
        VR = np.asarray(VR, dtype=float).reshape(g.shape + (-1,))
        two = two + np.sum(np.asarray(mR) * (math.pi - _arg(g[..., None] - VR)), axis=-1)
    out = 0.5 * two
    return float(out) if out.ndim == 0 else out


def harmonic_weight(w, a, b):
    """Harmonic measure of [a, b) seen from w in the upper half-plane;
    a may be -inf and b may be +inf."""
    w = np.asarray(w, dtype=complex)
    ab = np.where(np.isinf(b), math.pi, _arg(w - np.where(np.isinf(b), 0.0, b)))
    aa = np.where(np.isinf(a), 0.0, _arg(w - np.where(np.isinf(a), 0.0, a)))
    return (ab - aa) / math.pi


def eta_general(
    w,
    F: BoundaryFunction,
    y_right: np.ndarray,
    a_right: np.ndarray,
    y_left: np.ndarray,
    b_left: np.ndarray,
    max_angle: float = math.pi / 8,
):
    """eta for a general boundary function by harmonic-measure quadrature.

    w: f_t(z) at one or more times.  y_right holds the right boundary mesh in
    increasing order starting at 0 (the point 0+), a_right its images minus W
    (columns match y_right); y_left and b_left are the same for the left
    side, starting at 0 (the point 0-) and decreasing.  Piece values are read
    at the end of each mesh interval nearest to the origin on the right and
    farthest from it on the left, which is exact for right-continuous piecewise
    constant F whose breaks are all in the mesh."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    a = np.asarray(a_right, dtype=float).reshape(len(w), -1)
    b = np.asarray(b_left, dtype=float).reshape(len(w), -1)
    yr = np.asarray(y_right, dtype=float)
    yl = np.asarray(y_left, dtype=float)
    if yr[0] != 0.0 or yl[0] != 0.0:
        raise ObservableError("meshes must start at the origin")
    wc = w[:, None]
    # right: [0, a0) -> LAMBDA, [a_j, a_{j+1}) -> F(y_j), [a_M, inf) -> F(y_M)
    r_lo = np.concatenate([np.zeros((len(w), 1)), a], axis=1)
    r_hi = np.concatenate([a, np.full((len(w), 1), np.inf)], axis=1)
    r_val = np.concatenate([[LAMBDA], F(yr)])
    # left: [b0, 0) -> -LAMBDA, [b_{j+1}, b_j) -> F(y_{j+1}), (-inf, b_M) -> F(-inf)
    l_lo = np.concatenate([b, np.full((len(w), 1), -np.inf)], axis=1)
    l_hi = np.concatenate([np.zeros((len(w), 1)), b], axis=1)
    l_val = np.concatenate([[-LAMBDA], F(yl[1:]), [F.minus_inf]])
    wr = harmonic_weight(wc, r_lo, r_hi)
    wl = harmonic_weight(wc, l_lo, l_hi)
    if isinstance(F, General):
        ang = math.pi * np.concatenate([wr[:, 1:], wl[:, 1:]], axis=1)
        if np.nanmax(ang) > max_angle:
            raise MeshRefinementError("boundary mesh too coarse for the general boundary function")
    out = np.sum(wr * r_val, axis=1) + np.sum(wl * l_val, axis=1)
    return out


def mesh_points(F: BoundaryFunction, extent: float = 1e3, per_decade: int = 24, inner: float = 1e-3):
    """Boundary mesh: breakpoints of F plus a geometric grid out to +-extent,
    returned as (right, left) arrays starting at the origin."""
    geo = np.geomspace(inner, extent, int(per_decade * math.log10(extent / inner)) + 1)
    br = np.asarray(getattr(F, "breaks", ()), dtype=float)
    right = np.unique(np.concatenate([[0.0], geo, br[br > 0]]))
    left = -np.unique(np.concatenate([[0.0], geo, -br[br < 0]]))
    return right, left


def eta_from_simulation(sim: Simulation, k: int = 0, F: BoundaryFunction | None = None) -> np.ndarray:
    """eta along a simulated path for the tracked point number k; the
    closed form for atomic pairs, quadrature over the passive mesh when a
    general F is given."""
    tp = sim.tracked[k]
    W = sim.path.W
    if F is None:
        fi = sim.force_index
        side = sim.tracker_side[fi]
        m = sim.tracker_mass[fi]
        V = sim.tracker_images[:, fi]
        return eta_bv(tp.g, W, V[:, side < 0], m[side < 0], V[:, side > 0], m[side > 0])
    x = sim.trackers
    s = sim.tracker_side
    ri = np.nonzero(s > 0)[0]
    li = np.nonzero(s < 0)[0]
    ri = ri[np.argsort(x[ri])]
    li = li[np.argsort(-x[li])]
    alive = np.isfinite(tp.g)
    out = np.full(len(W), np.nan)
    out[alive] = eta_general(
        (tp.g - W)[alive],
        F,
        x[ri],
        (sim.tracker_images[:, ri] - W[:, None])[alive],
        x[li],
        (sim.tracker_images[:, li] - W[:, None])[alive],
    )
    return out


@dataclass
class ObservableTrace:
    t: np.ndarray
    eta: np.ndarray
    U: np.ndarray
    C: np.ndarray
    f: np.ndarray

    @property
    def clock(self) -> RadiusClock:
        return RadiusClock(self.t, self.C, self.C)


def u_process(eta, f):
    """U = eta + arg f."""
    return np.asarray(eta) + _arg(np.asarray(f, dtype=complex))


def trace(sim: Simulation, k: int = 0, F: BoundaryFunction | None = None) -> ObservableTrace:
    tp = sim.tracked[k]
    f = tp.g - sim.path.W
    eta = eta_from_simulation(sim, k, F)
    C = math.log(tp.z0.imag) - np.log(tp.g.imag) + tp.logd.real
    return ObservableTrace(sim.path.t, eta, u_process(eta, f), C, f)


def reparam(tr: ObservableTrace, s_grid: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
    """eta in radius time on the given grid (linear interpolation of the
    capacity-time samples).

    Past the last simulated radius time the grid holds nan, unless `rng` is
    given: then the path is continued by an independent Brownian motion.
    The last simulated radius time is a stopping time for eta in radius
    time, so the continued path is again a Brownian motion when eta is."""
    C = tr.C
    ok = np.isfinite(C) & np.isfinite(tr.eta)
    C = np.maximum.accumulate(C[ok])
    eta = tr.eta[ok]
    s = np.asarray(s_grid, dtype=float)
    out = np.full(s.shape, np.nan)
    inside = s <= C[-1]
    # C is nondecreasing; interpolate eta against it directly
    k = np.clip(np.searchsorted(C, s[inside], side="left"), 1, len(C) - 1)
    c0, c1 = C[k - 1], C[k]
    frac = np.where(c1 > c0, (s[inside] - c0) / np.where(c1 > c0, c1 - c0, 1.0), 1.0)
    out[inside] = eta[k - 1] + frac * (eta[k] - eta[k - 1])
    if rng is not None and not inside.all():
        j = int(np.argmin(inside))
        pts = np.concatenate([[C[-1]], s[j:]])
        steps = rng.standard_normal(len(pts) - 1) * np.sqrt(np.diff(pts))
        out[j:] = eta[-1] + np.cumsum(steps)
    return out


def filled_fraction(tr: ObservableTrace, s_max: float) -> float:
    """Share of [0, s_max] in radius time not covered by the simulation."""
    C = tr.C[np.isfinite(tr.C) & np.isfinite(tr.eta)]
    return max(0.0, 1.0 - float(C.max()) / s_max)


@dataclass
class BmTestReport:
    ks_stat: float
    ks_p: float
    variance_ratio: float
    lag1: float
    n: int
    passed: bool


def bm_test(samples: np.ndarray, ds: float, *, alpha: float = 0.01, var_band=(0.9, 1.1), max_lag1: float = 0.1) -> BmTestReport:
    """Pool the increments of paths sampled on a common radius-time grid with
    spacing ds, normalise by sqrt(ds) and test them against N(0, 1).

    The variance ratio is the pooled mean square of the normalised
    increments; the autocorrelation pairs consecutive increments within a
    path."""
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[1] < 3:
        raise ObservableError("need an array of paths x grid points")
    if np.isnan(X).any():
        raise ObservableError("paths must cover the whole radius-time grid")
    inc = np.diff(X, axis=1) / math.sqrt(ds)
    pooled = inc.ravel()
    ks = stats.kstest(pooled, "norm")
    var = float(np.mean(pooled**2))
    a = inc[:, :-1].ravel()
    b = inc[:, 1:].ravel()
    lag1 = float(np.corrcoef(a, b)[0, 1])
    ok = ks.pvalue >= alpha and var_band[0] <= var <= var_band[1] and abs(lag1) <= max_lag1
    return BmTestReport(float(ks.statistic), float(ks.pvalue), var, lag1, int(pooled.size), bool(ok))


def qv_consistency(tr: ObservableTrace, s_max: float | None = None) -> float:
    """|sum (d eta)^2 - C_T| / C_T on the capacity grid up to the last time
    (or the first time C reaches s_max)."""
    ok = np.isfinite(tr.eta) & np.isfinite(tr.C)
    eta, C = tr.eta[ok], tr.C[ok]
    if s_max is not None:
        stop = np.searchsorted(np.maximum.accumulate(C), s_max)
        eta, C = eta[: stop + 1], C[: stop + 1]
    q = float(np.sum(np.diff(eta) ** 2))
    CT = float(C[-1])
    if CT <= 0:
        raise ObservableError("radius clock did not advance")
    return abs(q - CT) / CT
