"""SLE_4 with force points: the driving function and force-point images.

    dW = sqrt(kappa) dB + sum_i rho_i / (W - V_i) dt,    dV_i = 2 / (V_i - W) dt

Substeps are adaptive,

    delta = min(dt, (gap/4)^2 / kappa, gap / (4 |drift| + 1)),

with gaps below the collision radius floored at that radius.  Over a substep
the force points follow the exact slit map of the frozen driving value, and
the drift is integrated along the same frozen flow, which keeps it finite at
contact.  The Brownian increments on the output grid come from a per-path
Philox stream; substeps refine them by Brownian bridges whose normals come
from a counter-based hash, so the coarse noise does not depend on how a step
was subdivided.

W is reflected (mirror fold) at the images of the force points nearest to it
on either side.  The points 0- and 0+ always take part in the reflection,
with zero mass when the measures have no atom there.  A ThresholdEvent stops
a path when the force points within the collision radius of W on one side
carry total mass <= -2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, uint64

from .boundary import AdmissibilityMargin, MeasurePair
from .loewner import SWALLOW_IM, DrivingPath, TrackedPoint

THRESHOLD = -2.0 + 1e-9
MAX_SUBSTEPS = 200_000_000


class DriverError(RuntimeError):
    pass


class CollisionError(DriverError):
    pass


@dataclass(frozen=True)
class SleConfig:
    kappa: float = 4.0
    pair: MeasurePair = field(default_factory=MeasurePair)
    margin: AdmissibilityMargin | None = None
    dt: float = 1e-3
    eps_coll: float | None = None
    seed: int = 0

    @property
    def eps(self) -> float:
        return 0.05 * math.sqrt(self.dt) if self.eps_coll is None else self.eps_coll


@dataclass
class SdeState:
    t: float
    W: float
    x: np.ndarray
    side: np.ndarray
    mass: np.ndarray
    reflect: np.ndarray


@dataclass(frozen=True)
class ThresholdEvent:
    time: float
    side: str
    cluster_mass: float


@dataclass
class BesselMonitor:
    """Gap Z = V(0+) - W on the output grid."""

    t: np.ndarray
    Z: np.ndarray

    @property
    def zmin(self) -> float:
        return float(self.Z[1:].min()) if len(self.Z) > 1 else math.inf


@dataclass
class Simulation:
    path: DrivingPath
    events: list[ThresholdEvent]
    monitor: BesselMonitor
    tracked: list[TrackedPoint]
    trackers: np.ndarray  # starting positions of all boundary trackers
    tracker_side: np.ndarray
    tracker_mass: np.ndarray
    tracker_images: np.ndarray  # (n+1, m)
    force_index: np.ndarray  # columns of tracker_images holding force points
    B: np.ndarray  # standard Brownian motion on the grid
    substeps: int
    config: SleConfig

    def __iter__(self):
        yield self.path
        yield self.events
        yield self.monitor

    def image(self, x: float, side: int) -> np.ndarray:
        """Images of the tracker that started at x on the given side."""
        hit = np.nonzero((self.trackers == x) & (self.tracker_side == side))[0]
        if not hit.size:
            raise KeyError((x, side))
        return self.tracker_images[:, hit[0]]


# counter-based normals for the Brownian bridge refinements


@njit(cache=True)
def _mix(x):
    x = (x ^ (x >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> uint64(27))) * uint64(0x94D049BB133111EB)
    return x ^ (x >> uint64(31))


@njit(cache=True)
def _uniform(key, a, b):
    h = _mix(key ^ _mix(uint64(a) * uint64(0x9E3779B97F4A7C15) + uint64(b)))
    return (float(h >> uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _normal(key, k, j):
    u1 = _uniform(key, k, 2 * j)
    u2 = _uniform(key, k, 2 * j + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def _plan(W, x, side, mass, reflect, eps):
    cl = 0.0
    cr = 0.0
    gmin = np.inf
    drift = 0.0
    for i in range(x.shape[0]):
        if not reflect[i]:
            continue
        gap = abs(x[i] - W)
        if gap < eps:
            if side[i] > 0:
                cr += mass[i]
            else:
                cl += mass[i]
            gap = eps
        else:
            drift += mass[i] / (W - x[i])
        if gap < gmin:
            gmin = gap
    return cl, cr, gmin, drift


@njit(cache=True)
def _substep(W, x, side, mass, reflect, z, ld, alive, delta, dB, kappa):
    dW = 0.0
    for i in range(x.shape[0]):
        if reflect[i] and mass[i] != 0.0:
            gap = abs(x[i] - W)
            dW -= side[i] * mass[i] * 0.5 * (math.sqrt(gap * gap + 4.0 * delta) - gap)
    for i in range(x.shape[0]):
        d = x[i] - W
        x[i] = W + side[i] * math.sqrt(d * d + 4.0 * delta)
    for j in range(z.shape[0]):
        if not alive[j]:
            continue
        d = z[j] - W
        if abs(d.real) <= 1e-12 * (1.0 + abs(z[j])) and d.imag * d.imag <= 4.0 * delta * (1.0 + 1e-9):
            alive[j] = False
            continue
        s = np.sqrt(d * d + 4.0 * delta)
        if s.imag < 0.0:
            s = -s
        if s.imag < SWALLOW_IM:
            alive[j] = False
            continue
        z[j] = W + s
        ld[j] += np.log(d / s)
    Wn = W + dW + math.sqrt(kappa) * dB
    lo = -np.inf
    hi = np.inf
    for i in range(x.shape[0]):
        if reflect[i]:
            if side[i] > 0:
                hi = min(hi, x[i])
            else:
                lo = max(lo, x[i])
    for _ in range(64):
        if Wn > hi:
            Wn = 2.0 * hi - Wn
        elif Wn < lo:
            Wn = 2.0 * lo - Wn
        else:
            break
    Wn = min(max(Wn, lo), hi)
    for i in range(x.shape[0]):
        if not reflect[i]:
            if side[i] > 0:
                x[i] = max(x[i], Wn)
            else:
                x[i] = min(x[i], Wn)
    return Wn


@njit(cache=True)
def _run(W0, x, side, mass, reflect, z, dt, n, kappa, eps, xi, key, max_sub, c_stop):
    m = x.shape[0]
    q = z.shape[0]
    Wg = np.empty(n + 1)
    Xg = np.empty((n + 1, m))
    Zg = np.full((n + 1, q), complex(np.nan, np.nan))
    Lg = np.full((n + 1, q), complex(np.nan, np.nan))
    swallow = np.full(q, -1, dtype=np.int64)
    alive = np.ones(q, dtype=np.bool_)
    ld = np.zeros(q, dtype=np.complex128)
    Wg[0] = W0
    Xg[0] = x
    for j in range(q):
        Zg[0, j] = z[j]
        Lg[0, j] = 0j
    W = W0
    nsub = 0
    thr = (-1, 0, 0.0, 0.0)  # step, side, mass, time
    done = n
    for k in range(1, n + 1):
        Btot = math.sqrt(dt) * xi[k - 1]
        Bs = 0.0
        s = 0.0
        j = 0
        stop = False
        while True:
            cl, cr, gmin, drift = _plan(W, x, side, mass, reflect, eps)
            if cl <= -2.0 + 1e-9 or cr <= -2.0 + 1e-9:
                sd = -1 if cl <= -2.0 + 1e-9 else 1
                thr = (k, sd, cl if sd < 0 else cr, (k - 1) * dt + s)
                stop = True
                break
            r = dt - s
            delta = min(r, (gmin / 4.0) ** 2 / kappa, gmin / (4.0 * abs(drift) + 1.0))
            last = delta >= r * (1.0 - 1e-12)
            if last:
                delta = r
                dB = Btot - Bs
            else:
                dB = (Btot - Bs) * delta / r + math.sqrt(delta * (r - delta) / r) * _normal(key, k, j)
            alive_before = alive.copy()
            W = _substep(W, x, side, mass, reflect, z, ld, alive, delta, dB, kappa)
            for jj in range(q):
                if alive_before[jj] and not alive[jj]:
                    swallow[jj] = k
            Bs += dB
            s += delta
            j += 1
            nsub += 1
            if nsub > max_sub:
                stop = True
                thr = (-2, 0, 0.0, 0.0)
                break
            if last:
                break
        if stop:
            done = k - 1
            break
        Wg[k] = W
        Xg[k] = x
        for jj in range(q):
            if alive[jj]:
                Zg[k, jj] = z[jj]
                Lg[k, jj] = ld[jj]
        if q > 0:
            # radius clock of the first tracked point
            if not alive[0]:
                done = k
                break
            if math.log(Zg[0, 0].imag) - math.log(z[0].imag) + ld[0].real >= c_stop:
                done = k
                break
    return Wg[: done + 1], Xg[: done + 1], Zg[: done + 1], Lg[: done + 1], swallow, thr, nsub


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for path `index` of a run."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _trackers(pair: MeasurePair, mesh: tuple[tuple[float, int], ...] = ()):
    """Boundary trackers: force points, the 0-/0+ sentinels, then passive
    mesh points not already present."""
    xs, ms, ss = pair.force_points()
    x = list(xs)
    m = list(ms)
    s = list(ss)
    refl = [True] * len(x)
    force_idx = list(range(len(x)))
    for sd in (-1, 1):
        if not any(xx == 0.0 and si == sd for xx, si in zip(x, s)):
            x.append(0.0)
            m.append(0.0)
            s.append(sd)
            refl.append(True)
    for px, sd in mesh:
        if not any(xx == px and si == sd for xx, si in zip(x, s)):
            x.append(float(px))
            m.append(0.0)
            s.append(int(sd))
            refl.append(False)
    return (
        np.array(x, float),
        np.array(s, np.int64),
        np.array(m, float),
        np.array(refl, np.bool_),
        np.array(force_idx, np.int64),
    )


def simulate(
    cfg: SleConfig,
    T: float,
    *,
    index: int = 0,
    track: tuple[complex, ...] = (),
    mesh: tuple[tuple[float, int], ...] = (),
    stop_radius: float = math.inf,
) -> Simulation:
    """Simulate one path on [0, T] with output grid spacing cfg.dt.

    `track` lists interior points to carry through the same substeps;
    `mesh` lists extra passive boundary points as (position, side).  The run
    ends early once the first tracked point is swallowed or its radius clock
    reaches `stop_radius`."""
    if cfg.margin is not None:
        from .crossing import partial_sum_condition

        if not partial_sum_condition(cfg.pair, cfg.margin):
            raise DriverError("measure pair violates the partial-sum condition for the given margin")
    n = int(round(T / cfg.dt))
    if n < 1:
        raise DriverError("horizon shorter than one step")
    gen = path_generator(cfg.seed, index)
    key = np.uint64(gen.integers(0, 2**63))
    xi = gen.standard_normal(n)
    x, side, mass, refl, fidx = _trackers(cfg.pair, mesh)
    z = np.array(track, dtype=np.complex128)
    Wg, Xg, Zg, Lg, sw, thr, nsub = _run(
        0.0, x.copy(), side, mass, refl, z.copy(), cfg.dt, n, cfg.kappa, cfg.eps, xi, key, MAX_SUBSTEPS, float(stop_radius)
    )
    if thr[0] == -2:
        raise DriverError("substep budget exhausted")
    events = []
    if thr[0] >= 0:
        events.append(ThresholdEvent(float(thr[3]), "L" if thr[1] < 0 else "R", float(thr[2])))
    path = DrivingPath(cfg.dt, Wg, Xg[:, fidx] if fidx.size else None)
    zero = np.nonzero((x == 0.0) & (side == 1) & refl)[0][0]
    monitor = BesselMonitor(path.t, Xg[:, zero] - Wg)
    tracked = []
    for j, z0 in enumerate(z):
        st = math.inf if sw[j] < 0 else sw[j] * cfg.dt
        tracked.append(TrackedPoint(complex(z0), Zg[:, j], Lg[:, j], st))
    B = np.concatenate([[0.0], np.cumsum(xi)]) * math.sqrt(cfg.dt)
    return Simulation(path, events, monitor, tracked, x, side, mass, Xg, fidx, B[: len(Wg)], int(nsub), cfg)


def initial_state(cfg: SleConfig) -> SdeState:
    x, side, mass, refl, _ = _trackers(cfg.pair)
    return SdeState(0.0, 0.0, x, side, mass, refl)


def drift(state: SdeState, eps: float = 0.0) -> float:
    """Instantaneous drift sum rho_i / (W - V_i).  Raises CollisionError if a
    force point with nonzero mass is within eps of W."""
    d = state.x - state.W
    live = state.reflect & (state.mass != 0)
    if np.any(np.abs(d[live]) <= eps):
        raise CollisionError("force point in contact with the driving function")
    return float(np.sum(state.mass[live] / -d[live]))


def step_size(state: SdeState, cfg: SleConfig, limit: float | None = None) -> float:
    cl, cr, gmin, dr = _plan(state.W, state.x, state.side, state.mass, state.reflect, cfg.eps)
    lim = cfg.dt if limit is None else limit
    return float(min(lim, (gmin / 4.0) ** 2 / cfg.kappa, gmin / (4.0 * abs(dr) + 1.0)))


def advance(state: SdeState, cfg: SleConfig, delta: float, dB: float) -> SdeState:
    """One substep of length delta with Brownian increment dB.  Raises
    ThresholdReached if a contact cluster carries mass <= -2."""
    cl, cr, _, _ = _plan(state.W, state.x, state.side, state.mass, state.reflect, cfg.eps)
    if min(cl, cr) <= THRESHOLD:
        raise ThresholdReached(ThresholdEvent(state.t, "L" if cl <= cr else "R", float(min(cl, cr))))
    x = state.x.copy()
    z = np.zeros(0, np.complex128)
    W = _substep(state.W, x, state.side, state.mass, state.reflect, z, z.copy(), np.zeros(0, np.bool_), delta, dB, cfg.kappa)
    return SdeState(state.t + delta, float(W), x, state.side, state.mass, state.reflect)


class ThresholdReached(DriverError):
    def __init__(self, event: ThresholdEvent):
        super().__init__(f"continuation threshold reached at t={event.time}")
        self.event = event


def integral_residual(sim: Simulation) -> np.ndarray:
    """W_t - W_0 - sqrt(kappa) B_t - int sum rho_i/(W - V_i) ds on the grid,
    with the integral by the trapezoid rule."""
    path = sim.path
    W = path.W
    if path.force is None or not np.any(sim.tracker_mass[sim.force_index] != 0):
        dr = np.zeros_like(W)
    else:
        V = path.force
        m = sim.tracker_mass[sim.force_index]
        with np.errstate(divide="ignore"):
            dr = np.sum(m[None, :] / (W[:, None] - V), axis=1)
    integral = np.concatenate([[0.0], np.cumsum(0.5 * path.dt * (dr[1:] + dr[:-1]))])
    return W - W[0] - math.sqrt(sim.config.kappa) * sim.B - integral


def force_residual(sim: Simulation) -> float:
    """max over force points and grid times of |V_t - V_0 - int 2/(V - W) ds|,
    trapezoid rule on the grid; steps where a point is within the collision
    radius of W are left out of the sum."""
    path = sim.path
    if path.force is None:
        return 0.0
    V, W = path.force, path.W[:, None]
    with np.errstate(divide="ignore"):
        rate = 2.0 / (V - W)
    near = np.abs(V - W) < sim.config.eps
    inc = 0.5 * path.dt * (rate[1:] + rate[:-1])
    skip = near[1:] | near[:-1]
    inc = np.where(skip, np.diff(V, axis=0), inc)
    res = V - V[0] - np.concatenate([np.zeros((1, V.shape[1])), np.cumsum(inc, axis=0)])
    return float(np.max(np.abs(res)))


def qv(path: DrivingPath) -> float:
    return float(np.sum(np.diff(path.W) ** 2))
