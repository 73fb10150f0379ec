"""Workspace geometry: convex obstacles and confidence-ellipse clearance.

Collision checks ask whether the chi-square confidence ellipsoid of a
belief stays clear of every obstacle.  The squared Mahalanobis distance
from a belief to a convex polytope is minimized exactly (active-set over
faces/edges); segments are checked on an arc-length grid with a
conservative inflation so a segment declared free is truly free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.spatial
import scipy.stats

from .beliefs import Belief, ProcessNoise
from .validation import (
    PSD_TOL,
    ZERO_DIST,
    ValidationError,
    as_vector,
    check_spd,
    min_eigval,
    psd_leq,
    spectral_norm_sym,
    symmetrize,
)

__all__ = [
    "AlignedBox",
    "ConvexObstacle",
    "Environment",
    "CovSampleBounds",
    "SamplingBudgetExhausted",
    "chi2_quantile",
    "min_mahalanobis",
    "point_collision_free",
    "segment_collision_free",
    "ellipsoid_contained",
    "sample_free_belief",
    "sample_covariance",
]

DEFAULT_CLEARANCE_STEP = 0.01


class SamplingBudgetExhausted(RuntimeError):
    """Free-space rejection sampling ran out of attempts."""


def chi2_quantile(confidence: float, dim: int) -> float:
    """Chi-square value whose ellipsoid covers ``confidence`` probability mass."""
    if not 0.0 < confidence < 1.0:
        raise ValidationError(f"confidence must be in (0, 1), got {confidence}")
    return float(scipy.stats.chi2.ppf(confidence, df=dim))


@dataclass(frozen=True, eq=False)
class AlignedBox:
    """Axis-aligned box given by elementwise lower and upper corners."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lo, name="box lower corner").copy()
        hi = as_vector(self.hi, dim=lo.shape[0], name="box upper corner").copy()
        if np.any(hi <= lo):
            raise ValidationError("box upper corner must exceed lower corner")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def contains_box(self, other: "AlignedBox") -> bool:
        return bool(np.all(other.lo >= self.lo) and np.all(other.hi <= self.hi))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)


def _inv_spd_stack(covs: np.ndarray) -> np.ndarray:
    """Inverses of stacked SPD matrices; closed form for d <= 2."""
    d = covs.shape[-1]
    if d == 1:
        return 1.0 / covs
    if d == 2:
        a, b, c = covs[..., 0, 0], covs[..., 0, 1], covs[..., 1, 1]
        det = a * c - b * b
        inv = np.empty_like(covs)
        inv[..., 0, 0] = c / det
        inv[..., 1, 1] = a / det
        inv[..., 0, 1] = -b / det
        inv[..., 1, 0] = -b / det
        return inv
    return np.linalg.inv(covs)


class _HalfSpaceWall:
    """Workspace-boundary obstacle {x : a.x >= b} (the region beyond a wall)."""

    def __init__(self, normal: np.ndarray, offset: float):
        self.normal = np.asarray(normal, dtype=float)
        self.offset = float(offset)

    def contains_point(self, x: np.ndarray) -> bool:
        return float(self.normal @ x) >= self.offset

    def min_mahalanobis_batch(self, centers: np.ndarray, covs: np.ndarray) -> np.ndarray:
        gap = self.offset - centers @ self.normal
        spread = np.einsum("i,nij,j->n", self.normal, covs, self.normal)
        vals = np.where(gap <= 0.0, 0.0, gap * gap / spread)
        return vals

    def min_mahalanobis(self, center: np.ndarray, cov: np.ndarray) -> float:
        return float(self.min_mahalanobis_batch(center[None, :], cov[None, :, :])[0])


class ConvexObstacle:
    """Convex polytope obstacle described by its vertices.

    In 2-D the vertices are reduced to the counterclockwise hull; in 3-D
    a convex hull with triangular faces is built.  Redundant vertices
    (inside the hull of the others) are dropped silently.
    """

    def __init__(self, vertices):
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("obstacle vertices must be a 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("obstacle vertices contain non-finite entries")
        d = pts.shape[1]
        if d not in (1, 2, 3):
            raise ValidationError(f"obstacles support dimensions 1-3, got {d}")
        if pts.shape[0] < d + 1:
            raise ValidationError(
                f"a {d}-D obstacle needs at least {d + 1} vertices, got {pts.shape[0]}"
            )
        self.dim = d
        if d == 1:
            lo, hi = float(pts.min()), float(pts.max())
            if hi - lo <= 0.0:
                raise ValidationError("1-D obstacle has zero extent")
            self.vertices = np.array([[lo], [hi]])
        else:
            try:
                hull = scipy.spatial.ConvexHull(pts)
            except scipy.spatial.QhullError as exc:
                raise ValidationError(f"degenerate obstacle vertices: {exc}") from exc
            if d == 2:
                self.vertices = pts[hull.vertices]  # counterclockwise order
            else:
                self.vertices = pts[np.unique(hull.simplices)]
                remap = {int(v): i for i, v in enumerate(np.unique(hull.simplices))}
                self.faces = np.array(
                    [[remap[int(v)] for v in simplex] for simplex in hull.simplices]
                )
                self._face_points = pts[hull.simplices]
            # Outward half-space form A x <= b for fast inside tests.
            self._eq_normals = hull.equations[:, :-1].copy()
            self._eq_offsets = -hull.equations[:, -1].copy()
        self.vertices.flags.writeable = False
        center = self.vertices.mean(axis=0)
        self._bound_center = center
        self._bound_radius = float(np.max(np.linalg.norm(self.vertices - center, axis=1)))

    def contains_point(self, x: np.ndarray) -> bool:
        if self.dim == 1:
            return bool(self.vertices[0, 0] <= x[0] <= self.vertices[1, 0])
        return bool(np.all(self._eq_normals @ x <= self._eq_offsets + 1e-12))

    def _contains_batch(self, xs: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return (xs[:, 0] >= self.vertices[0, 0]) & (xs[:, 0] <= self.vertices[1, 0])
        return np.all(xs @ self._eq_normals.T <= self._eq_offsets + 1e-12, axis=1)

    def min_mahalanobis_batch(self, centers: np.ndarray, covs: np.ndarray) -> np.ndarray:
        """Exact min of (x - c)' P^{-1} (x - c) over the polytope, batched."""
        if self.dim == 1:
            lo, hi = self.vertices[0, 0], self.vertices[1, 0]
            c = centers[:, 0]
            gap = np.where(c < lo, lo - c, np.where(c > hi, c - hi, 0.0))
            return gap * gap / covs[:, 0, 0]
        if self.dim == 2:
            return self._min_mahal_batch_2d(centers, covs)
        return np.array(
            [self._min_mahal_3d(c, p) for c, p in zip(centers, covs)]
        )

    def _min_mahal_batch_2d(self, centers: np.ndarray, covs: np.ndarray) -> np.ndarray:
        inside = self._contains_batch(centers)
        vals = np.zeros(centers.shape[0])
        if np.all(inside):
            return vals
        out = ~inside
        x = centers[out]
        a = _inv_spd_stack(covs[out])
        v0 = self.vertices
        edges = np.roll(v0, -1, axis=0) - v0
        # w[n, m, :] = vertex m - center n
        w = v0[None, :, :] - x[:, None, :]
        ae = np.einsum("nij,mj->nmi", a, edges)
        eae = np.einsum("mi,nmi->nm", edges, ae)
        wae = np.einsum("nmi,nmi->nm", w, ae)
        t = np.clip(-wae / eae, 0.0, 1.0)
        p = w + t[:, :, None] * edges[None, :, :]
        q = np.einsum("nmi,nij,nmj->nm", p, a, p)
        vals[out] = q.min(axis=1)
        return vals

    def _min_mahal_3d(self, center: np.ndarray, cov: np.ndarray) -> float:
        if self.contains_point(center):
            return 0.0
        a = np.linalg.inv(cov)
        best = math.inf
        for p0, p1, p2 in self._face_points:
            best = min(best, _min_quad_over_triangle(center, a, p0, p1, p2))
        return best

    def min_mahalanobis(self, center: np.ndarray, cov: np.ndarray) -> float:
        return float(self.min_mahalanobis_batch(center[None, :], cov[None, :, :])[0])


def _min_quad_over_triangle(c, a, p0, p1, p2) -> float:
    """Min of (x - c)' A (x - c) over a triangle via KKT case enumeration."""
    u, v = p1 - p0, p2 - p0
    w = p0 - c
    # Unconstrained minimum over the triangle's plane.
    g = np.array([[u @ a @ u, u @ a @ v], [v @ a @ u, v @ a @ v]])
    rhs = -np.array([u @ a @ w, v @ a @ w])
    try:
        s, t = np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError:
        s, t = -1.0, -1.0
    if s >= 0.0 and t >= 0.0 and s + t <= 1.0:
        x = w + s * u + t * v
        return float(x @ a @ x)
    best = math.inf
    for q0, q1 in ((p0, p1), (p1, p2), (p2, p0)):
        e = q1 - q0
        r = q0 - c
        tt = min(1.0, max(0.0, float(-(r @ a @ e) / (e @ a @ e))))
        x = r + tt * e
        best = min(best, float(x @ a @ x))
    return best


@dataclass(frozen=True)
class CovSampleBounds:
    """Eigenvalue floor and trace cap for sampled covariances."""

    rho: float
    trace_max: float

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValidationError(f"rho must be positive, got {self.rho}")
        if self.trace_max <= 0.0:
            raise ValidationError(f"trace_max must be positive, got {self.trace_max}")

    def eig_hi(self, dim: int) -> float:
        hi = self.trace_max / dim
        if hi < self.rho:
            raise ValidationError(
                f"trace_max {self.trace_max} too small for rho {self.rho} in {dim}-D"
            )
        return hi


class Environment:
    """Planning workspace: bounds, convex obstacles, start belief, goal region.

    The workspace boundary is itself treated as an obstacle (one
    half-space wall per face of the bounding box).
    """

    def __init__(
        self,
        bounds: AlignedBox,
        obstacles,
        start: Belief,
        goal_box: AlignedBox,
        goal_cov: np.ndarray,
        chi2: float,
    ):
        if chi2 <= 0.0:
            raise ValidationError(f"chi2 must be positive, got {chi2}")
        d = bounds.dim
        if start.dim != d or goal_box.dim != d:
            raise ValidationError("bounds, start and goal dimensions must agree")
        if not bounds.contains(start.mean):
            raise ValidationError("start mean lies outside the workspace bounds")
        if not bounds.contains_box(goal_box):
            raise ValidationError("goal box must lie inside the workspace bounds")
        for obs in obstacles:
            if obs.dim != d:
                raise ValidationError("obstacle dimension mismatch")
        self.bounds = bounds
        self.obstacles = list(obstacles)
        self.start = start
        self.goal_box = goal_box
        self.goal_cov = check_spd(goal_cov, dim=d, name="goal covariance")
        self.chi2 = float(chi2)
        self.dim = d
        self.walls = []
        eye = np.eye(d)
        for k in range(d):
            self.walls.append(_HalfSpaceWall(-eye[k], -float(bounds.lo[k])))
            self.walls.append(_HalfSpaceWall(eye[k], float(bounds.hi[k])))

    def all_obstacles(self):
        return self.obstacles + self.walls

    def goal_belief(self) -> Belief:
        return Belief(self.goal_box.center, self.goal_cov)

    def in_goal_region(self, mean: np.ndarray, cov: np.ndarray, tol: float = PSD_TOL) -> bool:
        if not self.goal_box.contains(mean):
            return False
        return min_eigval(self.goal_cov - cov) >= -tol

    def point_in_any_obstacle(self, x: np.ndarray) -> bool:
        if not self.bounds.contains(x):
            return True
        return any(o.contains_point(x) for o in self.obstacles)


def min_mahalanobis(center, cov, obstacle) -> float:
    """Smallest squared Mahalanobis distance from ``center`` to the obstacle."""
    c = as_vector(center, name="center")
    p = check_spd(cov, dim=c.shape[0], name="cov")
    return obstacle.min_mahalanobis(c, p)


def _point_free_core(mean: np.ndarray, cov: np.ndarray, env: Environment) -> bool:
    x = mean[None, :]
    p = cov[None, :, :]
    for obs in env.walls:
        if obs.min_mahalanobis_batch(x, p)[0] < env.chi2:
            return False
    for obs in env.obstacles:
        if obs.min_mahalanobis_batch(x, p)[0] < env.chi2:
            return False
    return True


def point_collision_free(belief: Belief, env: Environment) -> bool:
    """True iff the belief's chi-square ellipsoid clears every obstacle."""
    return _point_free_core(belief.mean, belief.cov, env)


def _segment_threshold(chi: float, length: float, lam_min: float, w_bar: float,
                       dlam: float) -> float:
    """Inflated clearance (in Mahalanobis distance) making the grid check sound.

    Between grid points the Mahalanobis distance m(lambda) can decay no
    faster than m' = -(a + b m); requiring every grid sample to exceed
    the value that decays to chi over half a grid step guarantees the
    whole segment clears chi.
    """
    a = length / math.sqrt(lam_min)
    b = length * w_bar / (2.0 * lam_min)
    if b > 0.0:
        return (chi + a / b) * math.exp(b * dlam / 2.0) - a / b
    return chi + a * dlam / 2.0


def segment_collision_free(
    b_from: Belief,
    to_mean,
    noise: ProcessNoise,
    env: Environment,
    clearance_step: float = DEFAULT_CLEARANCE_STEP,
) -> bool:
    """Conservative clearance check for a straight belief-space transition.

    The mean moves linearly while the covariance grows with traveled
    distance.  The chi-square threshold is inflated between grid samples
    so a True answer certifies the continuum condition.
    """
    target = as_vector(to_mean, dim=b_from.dim, name="target mean")
    delta = target - b_from.mean
    length = float(np.linalg.norm(delta))
    if length < ZERO_DIST:
        return point_collision_free(b_from, env)
    nseg = max(1, int(math.ceil(length / clearance_step)))
    lams = np.linspace(0.0, 1.0, nseg + 1)
    centers = b_from.mean[None, :] + lams[:, None] * delta[None, :]
    covs = b_from.cov[None, :, :] + (lams * length)[:, None, None] * noise.matrix[None, :, :]
    lam_min = min_eigval(b_from.cov)
    w_bar = spectral_norm_sym(noise.matrix)
    chi = math.sqrt(env.chi2)
    m_req = _segment_threshold(chi, length, lam_min, w_bar, 1.0 / nseg)
    threshold = m_req * m_req
    for wall in env.walls:
        if np.any(wall.min_mahalanobis_batch(centers, covs) < threshold):
            return False
    if not env.obstacles:
        return True
    lam_max_hi = spectral_norm_sym(b_from.cov) + length * w_bar
    for obs in env.obstacles:
        # Bounding-circle prescreen: far obstacles cannot violate clearance.
        gap = _segment_point_distance(b_from.mean, target, obs._bound_center)
        gap -= obs._bound_radius
        if gap > 0.0 and gap * gap >= threshold * lam_max_hi:
            continue
        if np.any(obs.min_mahalanobis_batch(centers, covs) < threshold):
            return False
    return True


def _segment_point_distance(p0: np.ndarray, p1: np.ndarray, q: np.ndarray) -> float:
    e = p1 - p0
    denom = float(e @ e)
    t = 0.0 if denom == 0.0 else min(1.0, max(0.0, float((q - p0) @ e) / denom))
    return float(np.linalg.norm(p0 + t * e - q))


def ellipsoid_contained(inner: Belief, outer: Belief, chi2: float) -> bool:
    """Exact chi-square-ellipsoid containment via the S-procedure.

    Containment holds iff some tau >= 0 makes ``tau*Q_in - Q_out`` PSD,
    where Q are the homogeneous quadratic forms of the two ellipsoids.
    The best tau is located by bisection-style search on the concave
    smallest-eigenvalue curve, refined to 1e-10.
    """
    if inner.dim != outer.dim:
        raise ValidationError("belief dimensions differ")
    if chi2 <= 0.0:
        raise ValidationError(f"chi2 must be positive, got {chi2}")
    if np.array_equal(inner.mean, outer.mean):
        return min_eigval(outer.cov - inner.cov) >= -PSD_TOL
    offset = inner.mean - outer.mean
    a_out = np.linalg.inv(outer.cov)
    # Inner center outside the outer ellipsoid: containment impossible.
    if float(offset @ a_out @ offset) > chi2:
        return False
    # Ball bound: a sufficient condition that shortcuts easy cases.
    in_hi = spectral_norm_sym(inner.cov)
    out_lo = min_eigval(outer.cov)
    if float(np.linalg.norm(offset)) + math.sqrt(chi2 * in_hi) <= math.sqrt(chi2 * out_lo):
        return True
    a_in = np.linalg.inv(inner.cov)
    q_in = _homogeneous_form(a_in, inner.mean, chi2)
    q_out = _homogeneous_form(a_out, outer.mean, chi2)

    def phi(tau: float) -> float:
        return min_eigval(tau * q_in - q_out)

    # Bracket the maximum of the concave curve phi.
    tau_hi = 1.0
    val_hi = phi(tau_hi)
    if val_hi >= 0.0:
        return True
    for _ in range(80):
        nxt = phi(2.0 * tau_hi)
        if nxt >= 0.0:
            return True
        if nxt <= val_hi:
            break
        tau_hi *= 2.0
        val_hi = nxt
    else:
        return False
    lo, hi = 0.0, 2.0 * tau_hi
    inv_gold = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_gold * (hi - lo)
    x2 = lo + inv_gold * (hi - lo)
    f1, f2 = phi(x1), phi(x2)
    while hi - lo > 1e-10 * max(1.0, hi):
        if max(f1, f2) >= 0.0:
            return True
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_gold * (hi - lo)
            f2 = phi(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_gold * (hi - lo)
            f1 = phi(x1)
    return max(f1, f2) >= -PSD_TOL


def _homogeneous_form(a: np.ndarray, center: np.ndarray, chi2: float) -> np.ndarray:
    d = center.shape[0]
    q = np.empty((d + 1, d + 1))
    q[:d, :d] = a
    q[:d, d] = -a @ center
    q[d, :d] = q[:d, d]
    q[d, d] = float(center @ a @ center) - chi2
    return q


def sample_covariance(
    bounds: CovSampleBounds, dim: int, rng: np.random.Generator
) -> np.ndarray:
    """Random SPD covariance: i.i.d. uniform eigenvalues, uniform rotation."""
    hi = bounds.eig_hi(dim)
    eigs = rng.uniform(bounds.rho, hi, size=dim)
    if dim == 1:
        return np.array([[eigs[0]]])
    if dim == 2:
        theta = rng.uniform(0.0, math.pi)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
    else:
        q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
        rot = q * np.sign(np.diag(r))
    return symmetrize((rot * eigs) @ rot.T)


def sample_free_belief(
    env: Environment,
    bounds: CovSampleBounds,
    rng: np.random.Generator,
    max_attempts: int = 10000,
) -> Belief:
    """Rejection-sample a collision-free belief over the workspace."""
    for _ in range(max_attempts):
        cov = sample_covariance(bounds, env.dim, rng)
        mean = env.bounds.sample(rng)
        candidate = Belief(mean, cov)
        if point_collision_free(candidate, env):
            return candidate
    raise SamplingBudgetExhausted(
        f"no collision-free belief found in {max_attempts} attempts"
    )
