"""Geometric flow fields and local inverse temperatures on spacetime regions.

Three region families are supported.  A double cone of radius R (the causal
diamond over the radius-R ball at time zero) carries the conformal flow whose
chiral components move each light-ray coordinate by pi (R - y)(R + y) / R;
its local inverse temperature peaks at pi R in the center.  A boundary double
cone spanned by two disjoint intervals 0 <= a1 < b1 < a2 < b2 of the time
axis carries the rational chiral field

    V(y) = 2 pi (y - a1)(y - b1)(y - a2)(y - b2) / (L y^2 - 2 M y + N)

with L = (b1 - a1) + (b2 - a2), M = b1 b2 - a1 a2 and
N = b2 a2 (b1 - a1) + b1 a1 (b2 - a2), acting on u = t + x in [a2, b2] and
v = t - x in [a1, b1].  The exterior of a static black hole of mass M only
contributes its temperature constant 8 pi M; pointwise flow sampling is not
defined for it and the corresponding operations raise UnsupportedRegion.

Points are Minkowski coordinates (t, x, ...), time first.  The local inverse
temperature is the Minkowski norm of the flow velocity.  integrate_flow
transports a point with classical fixed-step Runge-Kutta and certifies the
step against a half-step run; all four chiral interval endpoints are exact
roots of the velocity field, so boundary points are fixed points and
trajectories never leave the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    OutsideRegion,
    SignatureViolation,
    StepTooLarge,
    UnsupportedRegion,
)

REGION_TOL = 1e-9
RICHARDSON_TOL = 1e-8
DEFAULT_STEP = 1e-3


class Region:
    """Marker base class for the region variants below."""


@dataclass(frozen=True)
class DoubleCone(Region):
    """Causal diamond over the ball of the given radius on the time-zero slice."""

    radius: float
    spatial_dim: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.spatial_dim != int(self.spatial_dim) or self.spatial_dim < 1:
            raise ValueError("spatial dimension must be a positive integer")


@dataclass(frozen=True)
class BCFTDoubleCone(Region):
    """Double cone spanned by two time-axis intervals at positive distance.

    The chiral coordinates are u = t + x in [a2, b2] and v = t - x in
    [a1, b1]; the boundary sits at x = 0, so the region lives at x > 0.
    """

    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        if not (0.0 <= self.a1 < self.b1 < self.a2 < self.b2):
            raise ValueError("endpoints must satisfy 0 <= a1 < b1 < a2 < b2")
        l, m, n = self.coefficients()
        disc = m * m - l * n
        if disc >= 0.0:
            # the quadratic denominator of the chiral field must not vanish
            # anywhere between the outermost endpoints
            root = math.sqrt(disc)
            for y in ((m - root) / l, (m + root) / l):
                if self.a1 <= y <= self.b2:
                    raise UnsupportedRegion(
                        "velocity denominator vanishes inside the region span"
                    )

    def coefficients(self):
        """Quadratic denominator coefficients (L, M, N) of the chiral field."""
        l = (self.b1 - self.a1) + (self.b2 - self.a2)
        m = self.b1 * self.b2 - self.a1 * self.a2
        n = self.b2 * self.a2 * (self.b1 - self.a1) + self.b1 * self.a1 * (
            self.b2 - self.a2
        )
        return l, m, n


@dataclass(frozen=True)
class SchwarzschildExterior(Region):
    """Static black-hole exterior; carries only its temperature constant."""

    mass: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")


@dataclass(frozen=True)
class FlowSample:
    """One point of an integrated trajectory.

    beta_local is the Minkowski norm of the velocity, i.e. the local inverse
    temperature of the flow at this sample.
    """

    s: float
    point: np.ndarray
    velocity: np.ndarray
    beta_local: float


def dilate(region: Region, factor: float) -> Region:
    """Scaled copy of the region; velocities scale linearly with the factor."""
    if factor <= 0:
        raise ValueError("dilation factor must be positive")
    if isinstance(region, DoubleCone):
        return DoubleCone(region.radius * factor, region.spatial_dim)
    if isinstance(region, BCFTDoubleCone):
        return BCFTDoubleCone(
            region.a1 * factor,
            region.b1 * factor,
            region.a2 * factor,
            region.b2 * factor,
        )
    if isinstance(region, SchwarzschildExterior):
        return SchwarzschildExterior(region.mass * factor)
    raise UnsupportedRegion("unknown region variant")


def size_normalization(region: Region) -> float:
    """Dilation factor mapping the region to its unit-size representative.

    For a boundary double cone the proper diameter after the boost that
    equalizes the two chiral legs is sqrt((b1 - a1)(b2 - a2)); the returned
    factor rescales that diameter to one.  A double cone is normalized to
    unit radius.
    """
    if isinstance(region, DoubleCone):
        return 1.0 / region.radius
    if isinstance(region, BCFTDoubleCone):
        return 1.0 / math.sqrt((region.b1 - region.a1) * (region.b2 - region.a2))
    raise UnsupportedRegion("no size normalization for this region")


# -- membership -------------------------------------------------------------


def _checked_point(region: Region, point) -> np.ndarray:
    p = np.asarray(point, dtype=np.float64)
    if isinstance(region, DoubleCone):
        want = region.spatial_dim + 1
    elif isinstance(region, BCFTDoubleCone):
        want = 2
    else:
        raise UnsupportedRegion("no pointwise geometry for this region")
    if p.shape != (want,):
        raise DimensionMismatch(
            f"point has shape {p.shape}, region expects {want} coordinates"
        )
    if not contains(region, p):
        raise OutsideRegion(f"point {p.tolist()} lies outside the region")
    return p


def contains(region: Region, point, *, tol: float = REGION_TOL) -> bool:
    """Whether the point lies in the closed region (boundary included)."""
    p = np.asarray(point, dtype=np.float64)
    if isinstance(region, DoubleCone):
        if p.shape != (region.spatial_dim + 1,):
            return False
        r = float(np.linalg.norm(p[1:]))
        return abs(p[0]) + r <= region.radius * (1.0 + tol)
    if isinstance(region, BCFTDoubleCone):
        if p.shape != (2,):
            return False
        slack = tol * region.b2
        u = p[0] + p[1]
        v = p[0] - p[1]
        return (
            region.a2 - slack <= u <= region.b2 + slack
            and region.a1 - slack <= v <= region.b1 + slack
        )
    raise UnsupportedRegion("no pointwise geometry for this region")


# -- velocity fields ---------------------------------------------------------


def chiral_velocity(region: Region, y: float) -> float:
    """One chiral component of the flow field at light-ray coordinate y."""
    if isinstance(region, DoubleCone):
        return math.pi * (region.radius - y) * (region.radius + y) / region.radius
    if isinstance(region, BCFTDoubleCone):
        l, m, n = region.coefficients()
        num = (
            2.0
            * math.pi
            * (y - region.a1)
            * (y - region.b1)
            * (y - region.a2)
            * (y - region.b2)
        )
        return num / (l * y * y - 2.0 * m * y + n)
    raise UnsupportedRegion("no velocity field for this region")


def _field(region: Region, p: np.ndarray) -> np.ndarray:
    # unchecked evaluation: RK4 midpoints may sit a hair outside the closure
    if isinstance(region, DoubleCone):
        t = p[0]
        x = p[1:]
        r = float(np.linalg.norm(x))
        udot = chiral_velocity(region, t + r)
        vdot = chiral_velocity(region, t - r)
        vel = np.zeros_like(p)
        vel[0] = 0.5 * (udot + vdot)
        rdot = 0.5 * (udot - vdot)
        if r > 0.0:
            vel[1:] = (rdot / r) * x
        return vel
    udot = chiral_velocity(region, p[0] + p[1])
    vdot = chiral_velocity(region, p[0] - p[1])
    return np.array([0.5 * (udot + vdot), 0.5 * (udot - vdot)])


def velocity(region: Region, point) -> np.ndarray:
    """Flow velocity at a point of the closed region, time component first."""
    p = _checked_point(region, point)
    return _field(region, p)


def _minkowski_beta(vel: np.ndarray) -> float:
    space2 = float(np.dot(vel[1:], vel[1:]))
    m2 = float(vel[0]) * float(vel[0]) - space2
    scale = float(vel[0]) * float(vel[0]) + space2
    if m2 < -1e-12 * max(scale, 1.0):
        raise SignatureViolation("flow velocity is spacelike")
    return math.sqrt(max(m2, 0.0))


def local_beta(region: Region, point) -> float:
    """Local inverse temperature: Minkowski norm of the flow velocity."""
    return _minkowski_beta(velocity(region, point))


# -- flow integration ---------------------------------------------------------


def _rk4_path(region: Region, p0: np.ndarray, s0: float, span: float, n: int):
    h = span / n
    pts = [p0]
    p = p0
    for _ in range(n):
        k1 = _field(region, p)
        k2 = _field(region, p + 0.5 * h * k1)
        k3 = _field(region, p + 0.5 * h * k2)
        k4 = _field(region, p + h * k3)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        pts.append(p)
    return pts


def integrate_flow(region: Region, x0, s_span, step: float = DEFAULT_STEP):
    """Transport a point along the flow; returns a list of FlowSample.

    Classical fixed-step fourth-order Runge-Kutta over s_span = (s0, s1).
    A half-step rerun bounds the position error Richardson-style; if the
    estimate exceeds RICHARDSON_TOL per unit of flow parameter the step is
    rejected with StepTooLarge.
    """
    p0 = _checked_point(region, x0)
    if step <= 0:
        raise ValueError("step must be positive")
    s0, s1 = float(s_span[0]), float(s_span[1])
    span = s1 - s0
    if span == 0.0:
        vel = _field(region, p0)
        return [FlowSample(s0, p0, vel, _minkowski_beta(vel))]
    n = max(1, math.ceil(abs(span) / step))
    coarse = _rk4_path(region, p0, s0, span, n)
    fine = _rk4_path(region, p0, s0, span, 2 * n)
    drift = 0.0
    for k in range(n + 1):
        # fourth-order scheme: the half-step run is 16x more accurate, so
        # (coarse - fine) / 15 estimates the remaining half-step error
        drift = max(drift, float(np.max(np.abs(coarse[k] - fine[2 * k]))) / 15.0)
    if drift > RICHARDSON_TOL * abs(span):
        raise StepTooLarge(
            f"estimated position error {drift:.3e} over span {span:.3e}"
        )
    h = span / n
    samples = []
    for k, p in enumerate(coarse):
        vel = _field(region, p)
        samples.append(FlowSample(s0 + k * h, p, vel, _minkowski_beta(vel)))
    return samples


# -- temperature extrema -------------------------------------------------------


def _grid_golden_max(fn, lo: float, hi: float, resolution: int):
    # coarse grid bracket, then golden-section refinement inside it
    ys = np.linspace(lo, hi, int(resolution))
    vals = [fn(float(y)) for y in ys]
    k = int(np.argmax(vals))
    a = float(ys[max(k - 1, 0)])
    b = float(ys[min(k + 1, len(ys) - 1)])
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv * (b - a)
    d = a + inv * (b - a)
    fc, fd = fn(c), fn(d)
    width_tol = 1e-14 * max(abs(lo), abs(hi), 1.0)
    for _ in range(120):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fn(d)
        if b - a < width_tol:
            break
    y = 0.5 * (a + b)
    return y, fn(y)


def max_beta(region: Region, grid_resolution: int = 256):
    """Maximal local inverse temperature and its location.

    Scans the time-zero slice (double cone) or each chiral leg (boundary
    double cone) on a grid, then refines with golden-section search.
    """
    if grid_resolution < 64:
        raise ValueError("grid resolution must be at least 64")
    if isinstance(region, DoubleCone):
        rad = region.radius

        def profile(r):
            return math.pi * (rad * rad - r * r) / rad

        r_star, val = _grid_golden_max(profile, 0.0, rad, grid_resolution)
        point = np.zeros(region.spatial_dim + 1)
        point[1] = r_star
        return val, point
    if isinstance(region, BCFTDoubleCone):
        # beta^2 = V(u) V(v) factorizes, so the two legs maximize separately;
        # V is single-signed (negative) strictly inside each interval
        def leg(y):
            return -chiral_velocity(region, y)

        u_star, gu = _grid_golden_max(leg, region.a2, region.b2, grid_resolution)
        v_star, gv = _grid_golden_max(leg, region.a1, region.b1, grid_resolution)
        beta = math.sqrt(gu * gv)
        point = np.array([0.5 * (u_star + v_star), 0.5 * (u_star - v_star)])
        return beta, point
    raise UnsupportedRegion("no temperature profile for this region")


def bekenstein_coefficient(region: Region) -> float:
    """Coefficient lambda of the entropy bound S <= lambda E for the region.

    Double cone of radius R: pi R.  Black-hole exterior of mass M: 8 pi M.
    Boundary double cone: the maximal inverse temperature of its unit-size
    representative (see size_normalization), a pure shape constant.
    """
    if isinstance(region, DoubleCone):
        return math.pi * region.radius
    if isinstance(region, SchwarzschildExterior):
        return 8.0 * math.pi * region.mass
    if isinstance(region, BCFTDoubleCone):
        unit = dilate(region, size_normalization(region))
        val, _ = max_beta(unit)
        return val
    raise UnsupportedRegion("unknown region variant")
