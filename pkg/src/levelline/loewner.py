"""Chordal Loewner chains driven by piecewise constant driving functions.

Each step of length dt with constant driving value w is the vertical slit map

    h(z) = w + sqrt((z - w)^2 + 4 dt),    Im h >= 0,

so a driving path sampled on a uniform grid is an exact composition of slit
maps.  On a grid path W_0..W_n the k-th step (from t_{k-1} to t_k) uses the
value W_k, which puts the tip gamma(t_k) exactly at g_{t_k}^{-1}(W_k).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from scipy.spatial.distance import directed_hausdorff

SWALLOW_IM = 1e-9


class LoewnerError(ValueError):
    pass


@dataclass(frozen=True)
class SlitStep:
    w: float
    dt: float


@dataclass
class DrivingPath:
    """Driving function on the grid t_k = k*dt, optionally with the images of
    force points (one column per point) on the same grid."""

    dt: float
    W: np.ndarray
    force: np.ndarray | None = None

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        if self.dt <= 0:
            raise LoewnerError("dt must be positive")
        if self.force is not None:
            self.force = np.asarray(self.force, dtype=float).reshape(len(self.W), -1)

    @property
    def n(self) -> int:
        return len(self.W) - 1

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(len(self.W))

    @property
    def T(self) -> float:
        return self.dt * self.n


@dataclass
class TrackedPoint:
    """Images g_t(z0) on the driving grid and the running complex log of
    g_t'(z0).  After the swallow time the arrays hold nan."""

    z0: complex
    g: np.ndarray
    logd: np.ndarray
    swallow_time: float = math.inf

    def f(self, path: DrivingPath) -> np.ndarray:
        return self.g - path.W


@dataclass
class CurveSample:
    t: np.ndarray
    z: np.ndarray


@dataclass
class RadiusClock:
    """Loss of log conformal radius C_t of a marked point, from the direct
    formula and from the integrated rate 4 Im(f)^2 / |f|^4."""

    t: np.ndarray
    C: np.ndarray
    C_ode: np.ndarray
    z0: complex = 1j

    def tau(self, s):
        """Capacity time at which C first reaches s (linear interpolation)."""
        C = np.maximum.accumulate(np.where(np.isfinite(self.C), self.C, np.inf))
        s = np.asarray(s, dtype=float)
        if np.any(s > C[-1]):
            raise LoewnerError("radius time beyond the simulated horizon")
        k = np.searchsorted(C, s, side="left")
        k = np.clip(k, 1, len(C) - 1)
        c0, c1 = C[k - 1], C[k]
        frac = np.where(c1 > c0, (s - c0) / np.where(c1 > c0, c1 - c0, 1.0), 1.0)
        out = self.t[k - 1] + frac * (self.t[k] - self.t[k - 1])
        out = np.where(s <= C[0], self.t[0], out)
        return float(out) if out.ndim == 0 else out


@njit(cache=True)
def _slit(z, w, dt):
    d = z - w
    s = np.sqrt(d * d + 4.0 * dt)
    if s.imag < 0.0 or (s.imag == 0.0 and d.real < 0.0):
        s = -s
    return w + s, d / s


@njit(cache=True)
def _slit_inv(u, w, dt):
    d = u - w
    s = np.sqrt(d * d - 4.0 * dt)
    if s.imag < 0.0 or (s.imag == 0.0 and d.real < 0.0):
        s = -s
    return w + s


def step_map(z, step: SlitStep):
    """Apply one slit step to points z; returns (h(z), h'(z), swallowed).

    A point is swallowed when it sits on the slit segment above w, or when
    its image lands within SWALLOW_IM of the real line."""
    z = np.asarray(z, dtype=complex)
    d = z - step.w
    s = np.sqrt(d * d + 4.0 * step.dt)
    flip = (s.imag < 0) | ((s.imag == 0) & (d.real < 0))
    s = np.where(flip, -s, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        deriv = d / s
    hz = step.w + s
    on_slit = (np.abs(d.real) <= 1e-12 * (1 + np.abs(z))) & (d.imag > 0) & (d.imag**2 <= 4 * step.dt * (1 + 1e-9))
    swallowed = (z.imag > 0) & (on_slit | (hz.imag < SWALLOW_IM))
    return hz, deriv, swallowed


def inverse_step(u, step: SlitStep):
    u = np.asarray(u, dtype=complex)
    d = u - step.w
    s = np.sqrt(d * d - 4.0 * step.dt)
    flip = (s.imag < 0) | ((s.imag == 0) & (d.real < 0))
    return step.w + np.where(flip, -s, s)


@njit(cache=True)
def _flow(W, dt, z0):
    n = W.shape[0] - 1
    g = np.full(n + 1, complex(np.nan, np.nan))
    logd = np.full(n + 1, complex(np.nan, np.nan))
    g[0] = z0
    logd[0] = 0j
    z = z0
    ld = 0j
    for k in range(1, n + 1):
        w = W[k]
        d = z - w
        if abs(d.real) <= 1e-12 * (1.0 + abs(z)) and d.imag * d.imag <= 4.0 * dt * (1.0 + 1e-9):
            return g, logd, k
        z, hp = _slit(z, w, dt)
        if z.imag < SWALLOW_IM:
            return g, logd, k
        ld += np.log(hp)
        g[k] = z
        logd[k] = ld
    return g, logd, -1


def forward_flow(path: DrivingPath, z0: complex) -> TrackedPoint:
    """Track an interior point z0 through the chain of slit maps."""
    if not z0.imag > 0:
        raise LoewnerError("tracked point must lie in the upper half-plane")
    g, logd, k = _flow(path.W, path.dt, complex(z0))
    return TrackedPoint(complex(z0), g, logd, math.inf if k < 0 else k * path.dt)


@njit(cache=True)
def _flow_boundary(W, dt, x0, side):
    # side +1: point right of the hull, -1: left.  Images that W passes are
    # merged with W before the step (they have been swallowed).
    n = W.shape[0] - 1
    out = np.empty(n + 1)
    out[0] = x0
    x = x0
    for k in range(1, n + 1):
        w = W[k]
        if side > 0:
            x = max(x, w)
            x = w + np.sqrt((x - w) ** 2 + 4.0 * dt)
        else:
            x = min(x, w)
            x = w - np.sqrt((x - w) ** 2 + 4.0 * dt)
        out[k] = x
    return out


def flow_boundary(path: DrivingPath, x0: float, side: int | None = None) -> np.ndarray:
    """Images of a real boundary point; side defaults to the side of x0
    relative to W_0 (0 counts as the right side)."""
    if side is None:
        side = 1 if x0 >= path.W[0] else -1
    return _flow_boundary(path.W, path.dt, float(x0), int(side))


@njit(cache=True)
def _zipper(W, dt):
    n = W.shape[0] - 1
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = W[0] + 0j
    a = 2.0 * math.sqrt(dt)
    for k in range(1, n + 1):
        u = W[k] + 1j * a
        for j in range(k - 1, 0, -1):
            u = _slit_inv(u, W[j], dt)
        out[k] = u
    return out


@njit(cache=True)
def _tips(W, dt, idx):
    out = np.empty(idx.shape[0], dtype=np.complex128)
    a = 2.0 * math.sqrt(dt)
    for q in range(idx.shape[0]):
        k = idx[q]
        if k == 0:
            out[q] = W[0] + 0j
            continue
        u = W[k] + 1j * a
        for j in range(k - 1, 0, -1):
            u = _slit_inv(u, W[j], dt)
        out[q] = u
    return out


def curve_points(path: DrivingPath, idx) -> np.ndarray:
    """Curve tips at the given grid indices only (each costs one pass over
    the earlier steps)."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() > path.n):
        raise LoewnerError("grid index out of range")
    return _tips(path.W, path.dt, idx)


def extract_curve(path: DrivingPath) -> CurveSample:
    """Tip of the hull at every grid time, gamma(t_k) = g_{t_k}^{-1}(W_k),
    by composing inverse slit maps (quadratic in the number of steps)."""
    return CurveSample(path.t, _zipper(path.W, path.dt))


def conformal_radius(p: TrackedPoint) -> np.ndarray:
    """Conformal radius of the tracked point in the slit domain,
    2 Im g / |g'| (it equals 2 Im z0 at time 0)."""
    return 2.0 * p.g.imag / np.exp(p.logd.real)


def radius_clock(path: DrivingPath, z0: complex = 1j, p: TrackedPoint | None = None) -> RadiusClock:
    if p is None:
        p = forward_flow(path, z0)
    C = math.log(2 * z0.imag) - np.log(conformal_radius(p))
    C = np.where(np.isnan(C), np.inf, C)
    # step k runs with driving value W_k: trapezoid of the rate in g
    g = p.g
    Wn = path.W[1:]

    def rate(gk, w):
        f = gk - w
        return 4.0 * f.imag**2 / np.abs(f) ** 4

    inc = 0.5 * path.dt * (rate(g[:-1], Wn) + rate(g[1:], Wn))
    C_ode = np.concatenate([[0.0], np.cumsum(inc)])
    C_ode = np.where(np.isnan(C_ode), np.inf, C_ode)
    return RadiusClock(path.t, C, C_ode, complex(z0))


def _to_disc(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex).reshape(-1)
    out = np.ones(z.shape, dtype=complex)
    fin = np.isfinite(z)
    out[fin] = (z[fin] - 1j) / (z[fin] + 1j)
    return np.column_stack([out.real, out.imag])


def dstar_distance(a, b) -> float:
    """Hausdorff distance between two point sets after mapping the closed
    upper half-plane to the unit disc by (z - i)/(z + i)."""
    pa, pb = _to_disc(a), _to_disc(b)
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def dstar_diameter(z) -> float:
    p = _to_disc(z)
    d = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


@njit(cache=True)
def _weld(z):
    n = z.shape[0] - 1
    pts = z.copy()
    t = np.zeros(n + 1)
    W = np.zeros(n + 1)
    W[0] = pts[0].real
    acc = 0.0
    for k in range(1, n + 1):
        u = pts[k]
        w = u.real
        d = max(u.imag, 0.0) ** 2 / 4.0
        acc += d
        t[k] = acc
        W[k] = w
        if d > 0.0:
            for j in range(k + 1, n + 1):
                pts[j] = _slit(pts[j], w, d)[0]
    return t, W


def driving_from_curve(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Capacity times and driving values of a polygonal curve from the real
    line, by unzipping it with vertical slit maps."""
    z = np.asarray(z, dtype=complex)
    return _weld(z)


@dataclass
class HcapReport:
    max_rel_err: float
    t_est: np.ndarray = field(repr=False)
    W_est: np.ndarray = field(repr=False)


def hcap_check(path: DrivingPath, curve: CurveSample | None = None) -> HcapReport:
    """Re-drive the extracted curve and compare its half-plane capacity
    (twice the recovered time) with the grid times."""
    if curve is None:
        curve = extract_curve(path)
    t_est, W_est = driving_from_curve(curve.z)
    t = path.t
    rel = np.abs(t_est[1:] - t[1:]) / t[1:]
    return HcapReport(float(rel.max()) if rel.size else 0.0, t_est, W_est)


def write_curve_csv(fname: str | Path, curve: CurveSample) -> None:
    with open(fname, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im"])
        for t, z in zip(curve.t, curve.z):
            w.writerow([repr(float(t)), repr(float(z.real)), repr(float(z.imag))])


def read_curve_csv(fname: str | Path) -> CurveSample:
    a = np.loadtxt(fname, delimiter=",", skiprows=1, ndmin=2)
    return CurveSample(a[:, 0], a[:, 1] + 1j * a[:, 2])


def write_path_csv(fname: str | Path, path: DrivingPath) -> None:
    k = 0 if path.force is None else path.force.shape[1]
    with open(fname, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "W"] + [f"V{j + 1}" for j in range(k)])
        for i, (t, x) in enumerate(zip(path.t, path.W)):
            row = [repr(float(t)), repr(float(x))]
            if k:
                row += [repr(float(v)) for v in path.force[i]]
            w.writerow(row)


def read_path_csv(fname: str | Path) -> DrivingPath:
    a = np.loadtxt(fname, delimiter=",", skiprows=1, ndmin=2)
    t = a[:, 0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
    force = a[:, 2:] if a.shape[1] > 2 else None
    return DrivingPath(dt, a[:, 1], force)
