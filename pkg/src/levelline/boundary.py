"""Boundary data for level lines: signed Radon measures on the two half-lines
and the piecewise boundary function they generate.

A right measure lives on [0, inf) and a left measure on (-inf, 0]; a left atom
at position 0 means the point 0- (it affects F only for x < 0).  The boundary
function is

    F(x) =  LAMBDA * (1 + rhoR([0, x]))    for x >= 0
    F(x) = -LAMBDA * (1 + rhoL((x, 0]))    for x < 0

which is right-continuous on the whole line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

LAMBDA = math.pi / 2


class BoundaryError(ValueError):
    pass


class AdmissibilityError(BoundaryError):
    pass


@dataclass(frozen=True)
class DensityPiece:
    """Constant density `value` on the interval [a, b]."""

    a: float
    b: float
    value: float

    @property
    def mass(self) -> float:
        return self.value * (self.b - self.a)


@dataclass(frozen=True)
class RadonMeasure:
    side: str
    atoms: tuple[tuple[float, float], ...] = ()
    pieces: tuple[DensityPiece, ...] = ()

    def __post_init__(self):
        if self.side not in ("L", "R"):
            raise BoundaryError(f"side must be 'L' or 'R', got {self.side!r}")
        sgn = 1.0 if self.side == "R" else -1.0
        atoms = []
        for x, m in self.atoms:
            x, m = float(x), float(m)
            if not (math.isfinite(x) and math.isfinite(m)):
                raise BoundaryError("atom position and mass must be finite")
            if sgn * x < 0:
                raise BoundaryError(f"atom at {x} lies on the wrong half-line")
            atoms.append((x, m))
        # merge coincident atoms, order by distance from the origin
        merged: dict[float, float] = {}
        for x, m in atoms:
            merged[x] = merged.get(x, 0.0) + m
        atoms = sorted(((x, m) for x, m in merged.items() if m != 0.0), key=lambda a: abs(a[0]))
        pieces = []
        for p in self.pieces:
            p = DensityPiece(float(p.a), float(p.b), float(p.value))
            if not (p.a < p.b) or not all(map(math.isfinite, (p.a, p.b, p.value))):
                raise BoundaryError(f"bad density piece {p}")
            if sgn * p.a < 0 or sgn * p.b < 0:
                raise BoundaryError(f"density piece {p} lies on the wrong half-line")
            pieces.append(p)
        pieces.sort(key=lambda p: p.a)
        for p, q in zip(pieces, pieces[1:]):
            if q.a < p.b:
                raise BoundaryError("density pieces overlap")
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "pieces", tuple(pieces))

    @property
    def is_atomic(self) -> bool:
        return not self.pieces

    @property
    def total_mass(self) -> float:
        return sum(m for _, m in self.atoms) + sum(p.mass for p in self.pieces)

    @property
    def total_variation(self) -> float:
        return sum(abs(m) for _, m in self.atoms) + sum(abs(p.mass) for p in self.pieces)

    @classmethod
    def from_cdf(
        cls,
        side: str,
        cdf: Callable[[float], float],
        *,
        extent: float = 20.0,
        step: float = 1.0 / 64,
        total: float | None = None,
        atoms: Sequence[tuple[float, float]] = (),
    ) -> "RadonMeasure":
        """Pre-sample an absolutely continuous part given by its distribution
        function `cdf(r) = mass of the density between 0 and distance r`.

        The density is replaced by constant pieces on a uniform grid of the
        given `step` out to `extent`; piece masses are exact increments of
        `cdf`, and the mass beyond `extent` (if `total` is given) is folded
        into the outermost piece so the total is preserved.
        """
        n = int(round(extent / step))
        r = np.arange(n + 1) * step
        c = np.array([cdf(float(v)) for v in r])
        masses = np.diff(c)
        if total is not None:
            masses[-1] += total - c[-1]
        sgn = 1.0 if side == "R" else -1.0
        pieces = []
        for k in range(n):
            a, b = sgn * r[k], sgn * r[k + 1]
            lo, hi = min(a, b), max(a, b)
            if masses[k] != 0.0:
                pieces.append(DensityPiece(lo, hi, masses[k] / step))
        return cls(side, tuple(atoms), tuple(pieces))

    def to_dict(self) -> dict:
        return {
            "atoms": [[x, m] for x, m in self.atoms],
            "density": [[p.a, p.b, p.value] for p in self.pieces],
        }


@dataclass(frozen=True)
class MeasurePair:
    left: RadonMeasure = field(default_factory=lambda: RadonMeasure("L"))
    right: RadonMeasure = field(default_factory=lambda: RadonMeasure("R"))

    def __post_init__(self):
        if self.left.side != "L" or self.right.side != "R":
            raise BoundaryError("MeasurePair needs a left and a right measure")

    @property
    def is_atomic(self) -> bool:
        return self.left.is_atomic and self.right.is_atomic

    def force_points(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Atomic force points as arrays (positions, masses, sides) where side
        is -1 for left and +1 for right.  Raises for non-atomic pairs."""
        if not self.is_atomic:
            raise BoundaryError("force points need an atomic measure pair")
        xs, ms, ss = [], [], []
        for side, m in ((-1, self.left), (1, self.right)):
            for x, w in m.atoms:
                xs.append(x)
                ms.append(w)
                ss.append(side)
        return np.array(xs, float), np.array(ms, float), np.array(ss, np.int64)

    def to_dict(self) -> dict:
        left, right = self.left.to_dict(), self.right.to_dict()
        return {
            "atomsL": left["atoms"],
            "atomsR": right["atoms"],
            "densityL": left["density"],
            "densityR": right["density"],
        }


@dataclass(frozen=True)
class AdmissibilityMargin:
    c: float
    C: float

    def __post_init__(self):
        if not (0 < self.c <= LAMBDA):
            raise BoundaryError("need 0 < c <= LAMBDA")
        if self.C < LAMBDA:
            raise BoundaryError("need C >= LAMBDA")


def _cdf_right_array(m: RadonMeasure, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    for a, w in m.atoms:
        out += np.where(x >= a, w, 0.0)
    for p in m.pieces:
        out += p.value * np.clip(x - p.a, 0.0, p.b - p.a)
    return out


def _cdf_left_array(m: RadonMeasure, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x, dtype=float)
    for a, w in m.atoms:
        out += np.where(x < a, w, 0.0)
    for p in m.pieces:
        out += p.value * np.clip(p.b - x, 0.0, p.b - p.a)
    return out


def cdf_right(m: RadonMeasure, x):
    """m([0, x]) for x >= 0."""
    if m.side != "R":
        raise BoundaryError("cdf_right needs a right measure")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise BoundaryError("cdf_right is defined for x >= 0")
    out = _cdf_right_array(m, np.atleast_1d(xa))
    return float(out[0]) if xa.ndim == 0 else out


def cdf_left(m: RadonMeasure, x):
    """m((x, 0]) for x <= 0."""
    if m.side != "L":
        raise BoundaryError("cdf_left needs a left measure")
    xa = np.asarray(x, dtype=float)
    if np.any(xa > 0):
        raise BoundaryError("cdf_left is defined for x <= 0")
    out = _cdf_left_array(m, np.atleast_1d(xa))
    return float(out[0]) if xa.ndim == 0 else out


class BoundaryFunction:
    """Common interface: vectorised evaluation, one-sided limits and the
    values at -inf and +inf."""

    minus_inf: float
    plus_inf: float

    def __call__(self, x):
        raise NotImplementedError

    def left_limit(self, x):
        raise NotImplementedError

    def right_limit(self, x):
        return self(x)


@dataclass(frozen=True)
class PiecewiseConstant(BoundaryFunction):
    """values[0] on (-inf, breaks[0]), values[k] on [breaks[k-1], breaks[k]),
    values[-1] on [breaks[-1], inf)."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != b.size + 1:
            raise BoundaryError("need len(values) == len(breaks) + 1")
        if np.any(np.diff(b) <= 0) or not np.all(np.isfinite(b)) or not np.all(np.isfinite(v)):
            raise BoundaryError("breaks must be finite and strictly increasing")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @property
    def minus_inf(self) -> float:
        return float(self.values[0])

    @property
    def plus_inf(self) -> float:
        return float(self.values[-1])

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = self.values[np.searchsorted(self.breaks, xa, side="right")]
        return float(out) if xa.ndim == 0 else out

    def left_limit(self, x):
        xa = np.asarray(x, dtype=float)
        out = self.values[np.searchsorted(self.breaks, xa, side="left")]
        return float(out) if xa.ndim == 0 else out

    def simplified(self) -> "PiecewiseConstant":
        """Drop breakpoints across which the value does not change."""
        keep = np.diff(self.values) != 0
        vals = np.concatenate([[self.values[0]], self.values[1:][keep]])
        return PiecewiseConstant(self.breaks[keep], vals)

    def to_dict(self) -> dict:
        return {
            "piecewise": {
                "breaks": self.breaks.tolist(),
                "values": self.values.tolist(),
                "minusInf": self.minus_inf,
                "plusInf": self.plus_inf,
            }
        }


@dataclass(frozen=True)
class General(BoundaryFunction):
    """A regulated boundary function known through callbacks."""

    evaluator: Callable
    minus_inf: float
    plus_inf: float
    left: Callable | None = None
    breaks: tuple[float, ...] = ()

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.asarray(self.evaluator(xa), dtype=float)
        return float(out) if xa.ndim == 0 else out

    def left_limit(self, x):
        if self.left is None:
            return self(x)
        xa = np.asarray(x, dtype=float)
        out = np.asarray(self.left(xa), dtype=float)
        return float(out) if xa.ndim == 0 else out


def measure_to_function(pair: MeasurePair) -> BoundaryFunction:
    """Boundary function generated by a measure pair.  Atomic pairs give a
    PiecewiseConstant; anything with a density gives a General evaluator."""
    L, R = pair.left, pair.right
    if pair.is_atomic:
        pts = {0.0}
        pts.update(x for x, _ in R.atoms)
        pts.update(x for x, _ in L.atoms if x < 0)
        breaks = np.array(sorted(pts))
        # value on [breaks[k-1], breaks[k]) is F evaluated at the left end
        probes = np.concatenate([[breaks[0] - 1.0], breaks])
        vals = _eval_measures(L, R, probes)
        return PiecewiseConstant(breaks, vals).simplified()

    def ev(x):
        return _eval_measures(L, R, x)

    def ev_left(x):
        # rhoR([0, x)) on the right; on the left, (x, 0] -> [x, 0]
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        pos = x > 0
        r = _cdf_right_array(R, x[pos]) - sum(np.where(x[pos] == a, w, 0.0) for a, w in R.atoms)
        out[pos] = LAMBDA * (1 + r)
        neg = ~pos
        xl = np.minimum(x[neg], 0.0)
        l = _cdf_left_array(L, xl) + sum(np.where(xl == a, w, 0.0) for a, w in L.atoms)
        out[neg] = -LAMBDA * (1 + l)
        return out

    breaks = sorted({0.0} | {x for x, _ in R.atoms} | {x for x, _ in L.atoms})
    return General(
        ev,
        minus_inf=-LAMBDA * (1 + L.total_mass),
        plus_inf=LAMBDA * (1 + R.total_mass),
        left=ev_left,
        breaks=tuple(breaks),
    )


def _eval_measures(L: RadonMeasure, R: RadonMeasure, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = LAMBDA * (1 + _cdf_right_array(R, x[pos]))
    out[~pos] = -LAMBDA * (1 + _cdf_left_array(L, x[~pos]))
    return out


def function_to_measure(F: PiecewiseConstant) -> MeasurePair:
    """Inverse of measure_to_function for piecewise constant F."""
    if not isinstance(F, PiecewiseConstant):
        raise BoundaryError("function_to_measure needs a piecewise constant function")
    right: list[tuple[float, float]] = []
    left: list[tuple[float, float]] = []
    m0 = F(0.0) / LAMBDA - 1.0
    if m0 != 0.0:
        right.append((0.0, m0))
    m0l = -F.left_limit(0.0) / LAMBDA - 1.0
    if m0l != 0.0:
        left.append((0.0, m0l))
    for b in F.breaks:
        jump = (F(b) - F.left_limit(b)) / LAMBDA
        if b > 0:
            right.append((float(b), jump))
        elif b < 0:
            left.append((float(b), jump))
    return MeasurePair(RadonMeasure("L", tuple(left)), RadonMeasure("R", tuple(right)))


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    violations: tuple[str, ...] = ()


def _probe_grid(F: BoundaryFunction, extent: float = 50.0, n: int = 20001) -> np.ndarray:
    xs = np.concatenate([np.linspace(-extent, extent, n), -np.geomspace(1e-6, extent * 20, 400), np.geomspace(1e-6, extent * 20, 400)])
    extra = np.asarray(getattr(F, "breaks", ()), dtype=float)
    return np.unique(np.concatenate([xs, extra, [0.0]]))


def check_admissible(F: BoundaryFunction, margin: AdmissibilityMargin) -> AdmissibilityReport:
    """Check F <= LAMBDA - c on x < 0, F >= -LAMBDA + c on x >= 0 and |F| <= C.

    Exact for piecewise constant F; General F is checked on a dense probe
    grid including its declared breakpoints and one-sided limits."""
    c, C = margin.c, margin.C
    tol = 1e-12
    v: list[str] = []
    if isinstance(F, PiecewiseConstant):
        edges = np.concatenate([[-np.inf], F.breaks, [np.inf]])
        for k, val in enumerate(F.values):
            lo, hi = edges[k], edges[k + 1]
            if lo < 0 and val > LAMBDA - c + tol:
                v.append(f"F = {val:.6g} > LAMBDA - c on [{lo}, {min(hi, 0.0)})")
            if hi > 0 and val < -LAMBDA + c - tol:
                v.append(f"F = {val:.6g} < -LAMBDA + c on [{max(lo, 0.0)}, {hi})")
            if abs(val) > C + tol:
                v.append(f"|F| = {abs(val):.6g} > C on [{lo}, {hi})")
        return AdmissibilityReport(not v, tuple(v))
    xs = _probe_grid(F)
    vals = np.concatenate([F(xs), F.left_limit(xs)])
    xx = np.concatenate([xs, xs])
    # left limits at 0 belong to the negative side
    neg = np.concatenate([xs < 0, xs <= 0])
    vals = np.concatenate([vals, [F.minus_inf, F.plus_inf]])
    neg = np.concatenate([neg, [True, False]])
    xx = np.concatenate([xx, [-np.inf, np.inf]])
    bad = neg & (vals > LAMBDA - c + tol)
    if bad.any():
        v.append(f"F > LAMBDA - c on the negative half-line near x = {xx[bad][0]:.6g}")
    bad = ~neg & (vals < -LAMBDA + c - tol)
    if bad.any():
        v.append(f"F < -LAMBDA + c on the positive half-line near x = {xx[bad][0]:.6g}")
    bad = np.abs(vals) > C + tol
    if bad.any():
        v.append(f"|F| > C near x = {xx[bad][0]:.6g}")
    return AdmissibilityReport(not v, tuple(v))


def approximate(
    F: BoundaryFunction,
    eps: float,
    *,
    extent: float = 50.0,
    step: float = 1e-3,
    margin: AdmissibilityMargin | None = None,
) -> PiecewiseConstant:
    """Piecewise constant F_eps with sup |F - F_eps| <= eps.

    The range is quantised greedily along a sampling grid on [-extent, extent]:
    a piece is extended while the oscillation of F on it stays within a band of
    width 2*eps*(1 - slack), and each break is located by bisection.  The
    origin is always a break so no piece straddles the two half-lines, which
    keeps every piece value inside the range of F on its own half-line.  The
    tails must already be within the band of F(+-inf).
    """
    if eps <= 0:
        raise BoundaryError("eps must be positive")
    if margin is not None and margin.c - eps <= 0:
        raise AdmissibilityError("eps would destroy the admissibility margin")
    if isinstance(F, PiecewiseConstant):
        return F
    band = 2 * eps * 0.9
    breaks: list[float] = []
    values: list[float] = []

    def run(xs: np.ndarray, first: float | None, last: float | None):
        """Greedy pieces over the increasing grid xs; `first`/`last` are
        values that must be covered by the first/last piece."""
        fx = F(xs)
        lo = hi = fx[0] if first is None else first
        lo, hi = min(lo, fx[0]), max(hi, fx[0])
        out_b, out_v = [], []
        for k in range(1, len(xs)):
            f = fx[k]
            nlo, nhi = min(lo, f), max(hi, f)
            if nhi - nlo <= band:
                lo, hi = nlo, nhi
                continue
            # bisect for the first point leaving the band
            a, b = xs[k - 1], xs[k]
            for _ in range(50):
                mid = 0.5 * (a + b)
                fm = float(F(mid))
                if max(hi, fm) - min(lo, fm) <= band:
                    a = mid
                    lo, hi = min(lo, fm), max(hi, fm)
                else:
                    b = mid
            out_v.append(0.5 * (lo + hi))
            out_b.append(b)
            fb = float(F(b))
            lo, hi = min(fb, f), max(fb, f)
        if last is not None:
            if max(hi, last) - min(lo, last) > 2 * eps:
                raise BoundaryError("tail of F does not settle within eps of its limit inside the window")
            lo, hi = min(lo, last), max(hi, last)
        out_v.append(0.5 * (lo + hi))
        return out_b, out_v

    n = int(round(extent / step))
    neg = -extent + step * np.arange(n)  # [-extent, 0)
    pos = step * np.arange(n + 1)  # [0, extent]
    neg = np.append(neg, -1e-13)  # stands in for the left limit at 0
    b_neg, v_neg = run(neg, F.minus_inf, None)
    b_pos, v_pos = run(pos, None, F.plus_inf)
    breaks = [-extent] + b_neg + [0.0] + b_pos
    values = [v_neg[0]] + v_neg + v_pos
    # the first piece covers (-inf, -extent) as well; merge it
    return PiecewiseConstant(np.array(breaks), np.array(values)).simplified()


def quantize_measure(m: RadonMeasure, n: int) -> RadonMeasure:
    """Replace the absolutely continuous part of m by at most n atoms.

    The density is cut into n bins of equal total variation, starting at the
    origin.  Each bin becomes one atom carrying the signed mass of the bin,
    placed where the distribution function of the output agrees with that of
    the input: the outer end of the bin on the right, the inner end on the
    left.  Original atoms are kept, total mass is preserved exactly and the
    sup distance between the two distribution functions is at most the
    largest bin variation.
    """
    if n < 1:
        raise BoundaryError("n must be >= 1")
    if m.is_atomic:
        return m
    # pieces ordered from the origin outward
    pieces = sorted(m.pieces, key=lambda p: min(abs(p.a), abs(p.b)))
    tv = np.array([abs(p.mass) for p in pieces])
    total_tv = tv.sum()
    if total_tv == 0:
        return RadonMeasure(m.side, m.atoms)
    cum = np.concatenate([[0.0], np.cumsum(tv)])
    targets = total_tv * np.arange(1, n + 1) / n
    targets[-1] = total_tv
    new_atoms = list(m.atoms)
    prev_signed = 0.0
    inner = min(abs(pieces[0].a), abs(pieces[0].b))  # where the current bin starts
    for t in targets:
        # locate distance r where the cumulative variation reaches t
        k = min(int(np.searchsorted(cum, t, side="left")) - 1, len(pieces) - 1)
        k = max(k, 0)
        p = pieces[k]
        r0, r1 = min(abs(p.a), abs(p.b)), max(abs(p.a), abs(p.b))
        frac = 0.0 if tv[k] == 0 else (t - cum[k]) / tv[k]
        frac = min(max(frac, 0.0), 1.0)
        r = r0 + frac * (r1 - r0)
        signed = sum(q.mass for q in pieces[:k]) + p.mass * frac
        mass = signed - prev_signed
        if m.side == "R":
            pos = r
        else:
            pos = -inner
        if mass != 0.0:
            new_atoms.append((pos, mass))
        prev_signed = signed
        inner = r
    # exact mass bookkeeping: fold rounding residue into the outermost atom
    out = RadonMeasure(m.side, tuple(new_atoms))
    resid = m.total_mass - out.total_mass
    if resid != 0.0 and out.atoms:
        atoms = list(out.atoms)
        x, w = atoms[-1]
        atoms[-1] = (x, w + resid)
        out = RadonMeasure(m.side, tuple(atoms))
    return out


def quantize_pair(pair: MeasurePair, n: int) -> MeasurePair:
    return MeasurePair(quantize_measure(pair.left, n), quantize_measure(pair.right, n))


def cdf_gap(m: RadonMeasure, q: RadonMeasure, xs: np.ndarray | None = None) -> float:
    """Sup distance between the distribution functions of two measures on the
    same half-line, evaluated on a dense grid plus both sets of atoms."""
    sgn = 1.0 if m.side == "R" else -1.0
    if xs is None:
        pts = [x for x, _ in m.atoms] + [x for x, _ in q.atoms]
        pts += [p.a for p in m.pieces + q.pieces] + [p.b for p in m.pieces + q.pieces]
        ext = max([abs(x) for x in pts] + [1.0])
        xs = sgn * np.linspace(0, ext * 1.01, 40001)
        xs = np.concatenate([xs, np.array(pts, float)])
        # probe just outside each atom too
        xs = np.concatenate([xs, np.array(pts, float) - sgn * 1e-12])
    xs = xs[sgn * xs >= 0]
    f = _cdf_right_array if m.side == "R" else _cdf_left_array
    return float(np.max(np.abs(f(m, xs) - f(q, xs))))


def sup_distance(F: BoundaryFunction, G: BoundaryFunction, xs: np.ndarray | None = None) -> float:
    """Sup |F - G| over a dense grid plus both breakpoint sets, using values
    and left limits, and the values at +-inf."""
    if xs is None:
        pts = list(getattr(F, "breaks", ())) + list(getattr(G, "breaks", ()))
        ext = max([abs(x) for x in pts] + [10.0]) * 1.5
        xs = np.concatenate([np.linspace(-ext, ext, 200001), np.array(pts, float)])
    d = max(
        float(np.max(np.abs(F(xs) - G(xs)))),
        float(np.max(np.abs(F.left_limit(xs) - G.left_limit(xs)))),
    )
    return max(d, abs(F.minus_inf - G.minus_inf), abs(F.plus_inf - G.plus_inf))


def reflect_boundary(F: PiecewiseConstant) -> PiecewiseConstant:
    """Boundary data seen by the reversed level line after the map z -> -1/z,
    G(y) = -F(-1/y).  The map is increasing on each half-line, so G is again
    right-continuous with breaks at 0 and at -1/b for the nonzero breaks b."""
    if not isinstance(F, PiecewiseConstant):
        raise BoundaryError("reflect_boundary needs a piecewise constant function")
    nb = np.array(sorted({0.0} | {-1.0 / b for b in F.breaks if b != 0.0}))
    probes = np.concatenate([[nb[0] - 1.0], 0.5 * (nb[:-1] + nb[1:]), [nb[-1] + 1.0]])
    vals = -F(-1.0 / probes)
    return PiecewiseConstant(nb, vals).simplified()


def reversed_pair(pair: MeasurePair) -> MeasurePair:
    """Measure pair of the reversed level line mapped back by z -> -1/z."""
    return function_to_measure(reflect_boundary(measure_to_function(pair)))


def pair_from_dict(obj: dict) -> MeasurePair:
    """Parse the JSON boundary format (measure or piecewise form)."""
    if "piecewise" in obj:
        p = obj["piecewise"]
        F = PiecewiseConstant(np.array(p.get("breaks", []), float), np.array(p["values"], float))
        for key, val in (("minusInf", F.minus_inf), ("plusInf", F.plus_inf)):
            if key in p and not math.isclose(float(p[key]), val, rel_tol=0, abs_tol=1e-12):
                raise BoundaryError(f"{key} disagrees with the end value of 'values'")
        return function_to_measure(F)
    unknown = set(obj) - {"atomsL", "atomsR", "densityL", "densityR"}
    if unknown:
        raise BoundaryError(f"unknown boundary keys {sorted(unknown)}")

    def dens(rows):
        return tuple(DensityPiece(float(a), float(b), float(v)) for a, b, v in rows)

    left = RadonMeasure("L", tuple(map(tuple, obj.get("atomsL", []))), dens(obj.get("densityL", [])))
    right = RadonMeasure("R", tuple(map(tuple, obj.get("atomsR", []))), dens(obj.get("densityR", [])))
    return MeasurePair(left, right)


def load_pair(path: str | Path) -> MeasurePair:
    return pair_from_dict(json.loads(Path(path).read_text()))


def tanh_pair(extent: float = 20.0, step: float = 1.0 / 64) -> MeasurePair:
    """Measure pair of F(x) = (LAMBDA/2) tanh(x): an atom of mass -1 at the
    origin on each side plus density sech(x)^2 / 2, pre-sampled."""
    right = RadonMeasure.from_cdf("R", lambda r: 0.5 * math.tanh(r), extent=extent, step=step, total=0.5, atoms=((0.0, -1.0),))
    left = RadonMeasure.from_cdf("L", lambda r: 0.5 * math.tanh(r), extent=extent, step=step, total=0.5, atoms=((0.0, -1.0),))
    return MeasurePair(left, right)


def tanh_function() -> General:
    return General(lambda x: 0.5 * LAMBDA * np.tanh(x), minus_inf=-0.5 * LAMBDA, plus_inf=0.5 * LAMBDA)
